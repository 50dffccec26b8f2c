//! The discovery agent: local register first, central register on a miss.

mod agent;
mod history;

pub use agent::DiscoveryAgent;
pub use history::{History, HistoryRecord, HISTORY_HEADER};
