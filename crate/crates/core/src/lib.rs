//! Core of the coopnet platform.

pub mod discovery;
pub mod ontology;
pub mod platform;
pub mod registry;
pub mod runtime;
pub mod selection;
