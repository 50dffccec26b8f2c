#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use coopnet_core::ontology::OntologyWarehouse;
use coopnet_core::platform::{AccountRole, Platform, PlatformConfig, Profile, SessionInfo};
use coopnet_core::registry::{ServiceDescription, ServiceQuery};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/port")
}

pub fn read(rel: &str) -> String {
    fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn warehouse() -> OntologyWarehouse {
    let docs: Vec<String> = [
        "port-logistics.ont",
        "port-fr.ont",
        "port-negotiation.ont",
        "port-local.ont",
        "port-fr-to-logistics.map",
    ]
    .iter()
    .map(|f| read(f))
    .collect();
    OntologyWarehouse::from_documents(docs.iter().map(String::as_str)).unwrap()
}

pub fn service(name: &str) -> ServiceDescription {
    ServiceDescription::from_text(&read(&format!("services/{name}.svc"))).unwrap()
}

pub fn query(name: &str) -> ServiceQuery {
    ServiceQuery::from_text(&read(&format!("queries/{name}.q"))).unwrap()
}

pub fn config(seed: u64) -> PlatformConfig {
    PlatformConfig {
        seed,
        ..PlatformConfig::default()
    }
}

pub fn launch(seed: u64) -> Platform {
    Platform::launch(config(seed), warehouse()).unwrap()
}

pub fn join(p: &mut Platform, login: &str, role: AccountRole) -> SessionInfo {
    p.register_account(login, &format!("{login}-pw"), role, Profile::default())
        .unwrap();
    p.authenticate(login, &format!("{login}-pw"), role).unwrap()
}

/// Providers portco (sea freight, stevedoring), truckco (road freight) and
/// storeco (customs, warehousing); customers acme and globex.
pub struct Port {
    pub platform: Platform,
    pub acme: SessionInfo,
    pub globex: SessionInfo,
}

pub const PUBLICATIONS: &[(&str, &str)] = &[
    ("portco", "sea-freight"),
    ("truckco", "road-freight"),
    ("portco", "stevedoring"),
    ("storeco", "customs"),
    ("storeco", "warehousing"),
];

pub fn port(seed: u64) -> Port {
    port_with(config(seed))
}

pub fn port_with(config: PlatformConfig) -> Port {
    let mut p = Platform::launch(config, warehouse()).unwrap();
    let mut providers = Vec::new();
    for login in ["portco", "truckco", "storeco"] {
        providers.push((login, join(&mut p, login, AccountRole::Provider)));
    }
    for (login, svc) in PUBLICATIONS {
        let session = &providers.iter().find(|(l, _)| l == login).unwrap().1;
        p.publish_service(&session.session.session_id, service(svc)).unwrap();
    }
    let acme = join(&mut p, "acme", AccountRole::Customer);
    let globex = join(&mut p, "globex", AccountRole::Customer);
    Port {
        platform: p,
        acme,
        globex,
    }
}
