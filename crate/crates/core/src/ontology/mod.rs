//! Concept graphs, the subsumption reasoner behind service matchmaking, and
//! the warehouse holding domain, negotiation and local-knowledge ontologies.

mod format;
mod graph;
mod mapping;
mod warehouse;

pub use format::{
    load_mapping, load_ontology, parse_document, serialize_mapping, serialize_ontology, strip_comments, Document,
};
pub use graph::{Concept, MatchDegree, OntologyGraph, OntologyKind, Rule, RuleKind};
pub use mapping::ConceptMapping;
pub use warehouse::OntologyWarehouse;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OntologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("subsumption cycle: {}", cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },
    #[error("concept `{concept}` names unknown parent `{parent}`")]
    DanglingParent { concept: String, parent: String },
    #[error("duplicate concept id `{0}`")]
    DuplicateConcept(String),
    #[error("rule `{rule}`: {reason}")]
    InvalidRule { rule: String, reason: String },
    #[error("unknown concept `{concept}` in ontology `{ontology}`")]
    UnknownConcept { ontology: String, concept: String },
    #[error("unknown ontology `{0}`")]
    UnknownOntology(String),
    #[error("no mapping for `{concept}` from `{source_ontology}` to `{target_ontology}`")]
    NoMapping {
        source_ontology: String,
        target_ontology: String,
        concept: String,
    },
    #[error("{0}")]
    Invalid(String),
}
