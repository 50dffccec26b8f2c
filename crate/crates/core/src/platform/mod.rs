//! The platform agents (administrator, assistants, service, selection,
//! broker), their message payloads and the in-process facade.

mod accounts;
mod admin;
mod assistants;
mod broker_agent;
mod central;
mod env;
mod facade;
mod payload;
mod selection_agent;
mod service;

pub use accounts::{Account, AccountRole, AccountStore, AuthFailure, Profile, Session, JOURNAL_HEADER};
pub use admin::{AdministratorAgent, Portal, WRONG_CREDENTIALS};
pub use assistants::{
    service_agent_id, ContractRecord, CustomerAgent, InvocationState, InvocationStatus, NegotiationMode,
    NegotiationState, NegotiationStatus, ProviderAgent, RequestPhase, RequestState,
};
pub use broker_agent::BrokerAgent;
pub use central::CentralRegisterEndpoint;
pub use env::{
    Behavior, Env, IdAllocator, PlatformConfig, Post, ADMINISTRATOR, BROKER, CENTRAL_REGISTER, DISCOVERY,
    PLATFORM_ONTOLOGY, PORTAL, SELECTION,
};
pub use facade::{Platform, PlatformStats, SessionInfo};
pub use payload::{
    AccountEvent, ErrorPayload, FailureKind, InvocationPayload, MatchList, OutputValues, Payload, ProposalPayload,
    QueryPayload, RegistryEvent, Secret, Source,
};
pub use selection_agent::SelectionAgent;
pub use service::ServiceAgent;

use thiserror::Error;

use crate::registry::RegistryError;
use crate::runtime::RuntimeError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlatformError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("the session does not belong to a customer")]
    NotACustomer,
    #[error("the session does not belong to a provider")]
    NotAProvider,
    #[error("{}", WRONG_CREDENTIALS)]
    WrongCredentials,
    #[error("unknown user `{0}`; register an account first")]
    UnknownUser(String),
    #[error("login `{0}` is already taken")]
    DuplicateLogin(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("registry: {0}")]
    Registry(String),
    #[error("unknown request `{0}`")]
    UnknownRequest(String),
    #[error("unknown negotiation `{0}`")]
    UnknownNegotiation(String),
    #[error("unknown invocation `{0}`")]
    UnknownInvocation(String),
    #[error("unknown contract `{0}`")]
    UnknownContract(String),
    #[error("negotiation: {0}")]
    Negotiation(String),
    #[error("ontology: {0}")]
    Ontology(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("journal: {0}")]
    Journal(String),
    #[error("no reply in conversation `{0}`")]
    NoResponse(String),
    #[error("{code}: {message}")]
    Rejected { code: String, message: String },
}

impl From<std::io::Error> for PlatformError {
    fn from(e: std::io::Error) -> Self {
        PlatformError::Io(e.to_string())
    }
}

impl From<RegistryError> for PlatformError {
    fn from(e: RegistryError) -> Self {
        PlatformError::Registry(e.to_string())
    }
}
