use std::fmt;

use serde::{Serialize, Serializer};

use super::accounts::{AccountRole, Profile, Session};
use crate::ontology::MatchDegree;
use crate::registry::{MatchResult, ServiceDescription, ServiceQuery, SyncReport};
use crate::runtime::{Content, Performative};
use crate::selection::{Alternative, Binding, Contract, CustomerInput, Proposal, RankedProposal};

/// A password in transit. Never printed or serialized in clear.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

impl Serialize for Secret {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("***")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Local,
    Central,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Local => "local",
            Source::Central => "central",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPayload {
    pub request_id: String,
    pub query: ServiceQuery,
    /// Filled when the query travels to the selection agent and service agents.
    pub matches: Vec<MatchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchList {
    pub request_id: String,
    pub results: Vec<MatchResult>,
    pub source: Option<Source>,
    pub hops: u32,
    /// Utility-ranked proposals (selection agent replies only).
    pub ranked: Vec<RankedProposal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProposalPayload {
    pub request_id: String,
    pub proposal: Proposal,
    pub degree: MatchDegree,
    pub service_agent: String,
    pub provider_login: String,
    pub provider_account: String,
    pub customer_account: String,
    /// Shared round limit; the smaller max-rounds of the two sides once known.
    pub round_limit: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum AccountEvent {
    Authenticate {
        login: String,
        password: Secret,
        role: AccountRole,
    },
    Register {
        login: String,
        password: Secret,
        role: AccountRole,
        profile: Profile,
    },
    Rotate {
        login: String,
        old: Secret,
        new: Secret,
    },
    Granted {
        session: Session,
        login: String,
        role: AccountRole,
        agent_id: String,
    },
    Created {
        account_id: String,
        agent_id: String,
    },
    Bound {
        account_id: String,
        login: String,
    },
    Rotated {
        account_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum RegistryEvent {
    Publish { draft: ServiceDescription },
    Published { service_id: String, updated: bool },
    Withdraw { provider_id: String, service_id: String },
    Withdrawn { service_id: String },
    Changed { service_id: String },
    Sync,
    Synced { report: SyncReport },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FailureKind {
    OntologyMismatch { expected: String },
    Unbindable,
    Execution,
    Deadline,
    Negotiation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum InvocationPayload {
    Start {
        contract: Contract,
        inputs: Vec<CustomerInput>,
        ontology_id: String,
        service_agent: String,
        alternatives: Vec<Alternative>,
    },
    Execute {
        contract: Contract,
        inputs: Vec<CustomerInput>,
        ontology_id: String,
        customer_agent: String,
    },
    Result {
        service_id: String,
        contract_id: String,
        bindings: Vec<Binding>,
        outputs: OutputValues,
    },
    Failed {
        service_id: String,
        failure: FailureKind,
        detail: String,
    },
    Retry {
        failed: String,
        next: Alternative,
    },
}

/// Output parameter name to produced value.
pub type OutputValues = std::collections::BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
}

impl ErrorPayload {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// Content carried by platform messages.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "body", rename_all = "kebab-case")]
pub enum Payload {
    Query(QueryPayload),
    MatchList(MatchList),
    Proposal(ProposalPayload),
    Contract(Contract),
    AccountEvent(AccountEvent),
    RegistryEvent(RegistryEvent),
    Invocation(InvocationPayload),
    Error(ErrorPayload),
}

impl Payload {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Payload::Error(ErrorPayload::new(code, message))
    }
}

impl Content for Payload {
    fn kind(&self) -> &'static str {
        match self {
            Payload::Query(_) => "query",
            Payload::MatchList(_) => "match-list",
            Payload::Proposal(_) => "proposal",
            Payload::Contract(_) => "contract",
            Payload::AccountEvent(_) => "account-event",
            Payload::RegistryEvent(_) => "registry-event",
            Payload::Invocation(_) => "invocation",
            Payload::Error(_) => "error",
        }
    }

    fn permits(&self, p: Performative) -> bool {
        use Performative::*;
        match self {
            Payload::Query(_) => matches!(p, Request | Cfp),
            Payload::MatchList(_) => matches!(p, Request | Inform),
            Payload::Proposal(_) => matches!(p, Propose | Request | Inform | AcceptProposal | RejectProposal),
            Payload::Contract(_) => matches!(p, Agree | Cancel | Inform),
            Payload::AccountEvent(_) | Payload::RegistryEvent(_) => matches!(p, Request | Inform),
            Payload::Invocation(_) => matches!(p, Request | Inform | Failure | Cancel),
            Payload::Error(_) => matches!(p, Inform | Failure),
        }
    }
}

impl Payload {
    pub fn kind_name(&self) -> &'static str {
        Content::kind(self)
    }
}
