//! Message bus and agent kernel with a seeded deterministic scheduler.

mod kernel;
mod message;
mod trace;

pub use kernel::{Agent, Context, Delivery, Kernel, Scheduler, ScriptedScheduler, SeededScheduler, DEFAULT_BUDGET};
pub use message::{AclMessage, Content, Performative};
pub use trace::{Trace, TraceEntry, TRACE_HEADER};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Administrator,
    Customer,
    Provider,
    Service,
    Discovery,
    Selection,
    Broker,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Administrator => "administrator",
            Role::Customer => "customer",
            Role::Provider => "provider",
            Role::Service => "service",
            Role::Discovery => "discovery",
            Role::Selection => "selection",
            Role::Broker => "broker",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "administrator" => Role::Administrator,
            "customer" => Role::Customer,
            "provider" => Role::Provider,
            "service" => Role::Service,
            "discovery" => Role::Discovery,
            "selection" => Role::Selection,
            "broker" => Role::Broker,
            _ => return None,
        })
    }

    /// Roles that exist at most once per platform.
    pub fn is_unique(self) -> bool {
        matches!(
            self,
            Role::Administrator | Role::Discovery | Role::Selection | Role::Broker
        )
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    pub role: Role,
    /// Account the agent represents; `None` for platform agents.
    pub owner: Option<String>,
}

impl AgentSpec {
    pub fn new(agent_id: &str, role: Role, owner: Option<&str>) -> Self {
        Self {
            agent_id: agent_id.to_string(),
            role,
            owner: owner.map(String::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("agent id `{0}` already in use")]
    DuplicateId(String),
    #[error("a {0} agent already exists")]
    DuplicateCoreRole(Role),
    #[error("invalid message: {0}")]
    InvalidMessage(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{0}` has a different type")]
    WrongAgentType(String),
    #[error("message budget of {budget} exhausted with {} messages pending", pending.len())]
    BudgetExceeded { budget: u64, pending: Vec<String> },
}
