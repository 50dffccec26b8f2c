//! Gateway, scenario harness and metrics for the coopnet platform.

pub mod client;
pub mod metrics;
pub mod protocol;
pub mod scenario;
pub mod server;
