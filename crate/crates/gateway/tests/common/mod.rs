#![allow(dead_code)]

use std::path::PathBuf;

use coopnet_core::platform::PlatformConfig;
use coopnet_gateway::client::Client;
use coopnet_gateway::scenario::{replay, Outcome, Scenario};
use coopnet_gateway::server::{Server, Shared};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn port_scenario() -> Scenario {
    Scenario::load(&fixtures().join("port/port.scenario")).unwrap()
}

pub fn config(seed: u64) -> PlatformConfig {
    PlatformConfig {
        seed,
        ..PlatformConfig::default()
    }
}

/// A gateway on an ephemeral port over a fresh platform for `scenario`.
pub fn serve(scenario: &Scenario, seed: u64) -> (Client, Shared) {
    let platform = scenario.launch(config(seed)).unwrap();
    let server = Server::bind("127.0.0.1:0", platform).unwrap();
    let (addr, shared, _handle) = server.spawn().unwrap();
    (Client::connect(addr).unwrap(), shared)
}

/// Replays the whole scenario through the wire protocol.
pub fn wire_replay(scenario: &Scenario, seed: u64) -> (Outcome, Shared) {
    let (mut client, shared) = serve(scenario, seed);
    let outcome = replay(scenario, &mut client, false).unwrap();
    (outcome, shared)
}
