//! Central and local registers of semantically described services.

mod central;
mod description;
mod local;
mod matching;

pub use central::CentralRegister;
pub use description::{Parameter, ServiceDescription, ServiceQuery, FRACTION_ATTRIBUTES};
pub use local::{CacheEntry, HitPolicy, LocalRegister, Lookup, SyncReport};
pub use matching::{match_service, sort_results, MatchResult};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("provider `{provider}` already publishes a service named `{name}`")]
    DuplicateName { provider: String, name: String },
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("service `{service}` is not owned by `{provider}`")]
    NotOwner { service: String, provider: String },
    #[error("unknown ontology `{0}`")]
    UnknownOntology(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl RegistryError {
    pub(crate) fn validation(field: &str, reason: &str) -> Self {
        RegistryError::Validation {
            field: field.to_string(),
            reason: reason.to_string(),
        }
    }
}

impl From<std::io::Error> for RegistryError {
    fn from(e: std::io::Error) -> Self {
        RegistryError::Io(e.to_string())
    }
}
