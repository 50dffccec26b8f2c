//! Utility scoring, proposal ranking, bilateral negotiation, input binding and
//! broker fail-over.

mod broker;
mod invocation;
mod negotiation;
mod policy;
mod ranking;
mod terms;
mod utility;

pub use broker::{
    Alternative, Broker, BrokerAction, Directive, InterventionOutcome, InterventionReport, DEFAULT_INVOCATION_CAP,
    DEFAULT_RETRY_BUDGET,
};
pub use invocation::{bind_inputs, execute_stub, Binding, CustomerInput, InvocationError};
pub use negotiation::{negotiate, round_limit, Agreement, Move, NegotiationOutcome, Negotiator, Offer, Party};
pub use policy::{invocation_cap, utility_model_from_rules, NegotiationPolicy, Reservation, ROUND_BUDGET};
pub use ranking::rank_services;
pub use terms::{Attributes, Contract, ContractStatus, Proposal, RankedProposal};
pub use utility::{score_utility, Direction, Preference, UtilityError, UtilityModel};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NegotiationError {
    #[error("proposal `{proposal}` expired at {valid_until} (now {now})")]
    ExpiredProposal {
        proposal: String,
        valid_until: u64,
        now: u64,
    },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("offer outside reservation: {0}")]
    InvalidOffer(String),
    #[error("negotiation `{0}` is closed")]
    Closed(String),
    #[error("unknown negotiation `{0}`")]
    UnknownNegotiation(String),
}
