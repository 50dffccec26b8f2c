mod common;

use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use coopnet_core::platform::AccountRole;
use coopnet_gateway::client::Client;
use coopnet_gateway::protocol::{results_view, Request};
use coopnet_gateway::scenario::Backend;
use serde_json::Value;

fn coopnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopnet")).args(args).output().unwrap()
}

fn port(rel: &str) -> String {
    common::fixtures().join("port").join(rel).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cyclic_ontology_fails_naming_the_cycle() {
    let o = coopnet(&["ontology", "check", &port("cyclic.ont")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("A -> B -> A"), "{}", stderr(&o));
}

#[test]
fn valid_documents_pass_the_check() {
    let o = coopnet(&["ontology", "check", &port("port-logistics.ont")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("23 concepts"));
    let o = coopnet(&["ontology", "check", &port("port-fr-to-logistics.map")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ok: mapping port-fr -> port-logistics"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(coopnet(&["bogus"]).status.code(), Some(2));
    assert_eq!(coopnet(&["sim"]).status.code(), Some(2));
    assert_eq!(coopnet(&["match", "--query", "x"]).status.code(), Some(2));
}

#[test]
fn missing_file_is_a_domain_error() {
    let o = coopnet(&["ontology", "check", "/nonexistent/x.ont"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sim_reports_metrics_and_checks_the_golden_hash() {
    let golden = port("port.trace-hash");
    let o = coopnet(&[
        "sim",
        "--scenario",
        &port("port.scenario"),
        "--golden",
        &golden,
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cache-hit-rate-exact"], "1/3");
    assert_eq!(v["local-hits"], 2);
    assert_eq!(v["discoveries"], 6);
    assert_eq!(v["contracts-concluded"], 5);
    assert_eq!(
        v["trace-hash"].as_str().unwrap(),
        std::fs::read_to_string(&golden).unwrap().trim()
    );

    let text = coopnet(&["sim", "--scenario", &port("port.scenario")]);
    assert!(
        stdout(&text).contains("cache hit rate            2/6"),
        "{}",
        stdout(&text)
    );

    let other = coopnet(&[
        "sim",
        "--scenario",
        &port("port.scenario"),
        "--seed",
        "7",
        "--golden",
        &golden,
    ]);
    assert_eq!(other.status.code(), Some(1));
    assert!(stderr(&other).contains("differs from golden"));
}

#[test]
fn match_output_equals_list_results() {
    let o = coopnet(&[
        "match",
        "--query",
        &port("queries/transport.q"),
        "--registry",
        &port("services"),
        "--ontology",
        &port("port-logistics.ont"),
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cli: Value = serde_json::from_str(&stdout(&o)).unwrap();

    // same registry, published in file-name order through the protocol
    let scenario =
        coopnet_gateway::scenario::Scenario::parse("document port-logistics.ont\n", &common::fixtures().join("port"))
            .unwrap();
    let (mut client, shared) = common::serve(&scenario, 0);
    client
        .register("registry", "registry-pw", AccountRole::Provider)
        .unwrap();
    let prov = client
        .authenticate("registry", "registry-pw", AccountRole::Provider)
        .unwrap();
    let mut files: Vec<PathBuf> = std::fs::read_dir(port("services"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let d = coopnet_core::registry::ServiceDescription::from_text(&std::fs::read_to_string(f).unwrap()).unwrap();
        client.publish(&prov, d).unwrap();
    }
    client.register("match", "match-pw", AccountRole::Customer).unwrap();
    let sid = client.authenticate("match", "match-pw", AccountRole::Customer).unwrap();
    let q =
        coopnet_core::registry::ServiceQuery::from_text(&std::fs::read_to_string(port("queries/transport.q")).unwrap())
            .unwrap();
    let req = client.submit(&sid, q).unwrap();
    let mut wire = client
        .send(&Request::ListResults {
            session: sid.clone(),
            request: req.clone(),
        })
        .unwrap();
    wire.as_object_mut().unwrap().remove("ok");
    assert_eq!(cli, wire);
    let p = shared.lock().unwrap();
    assert_eq!(results_view(&p, &p.results(&sid, &req).unwrap()), cli);
    let ranked: Vec<&str> = cli["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["service"].as_str().unwrap())
        .collect();
    assert_eq!(ranked, ["svc-000002", "svc-000003"]);
}

#[test]
fn serve_preloads_a_scenario_and_answers() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_coopnet"))
        .args(["serve", "--port", "0", "--scenario", &port("port.scenario")])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on ")
        .unwrap_or_else(|| panic!("{line}"))
        .to_string();
    let mut client = Client::connect(addr.as_str()).unwrap();
    let sid = client.authenticate("acme", "acme-pw", AccountRole::Customer);
    let bad = client.raw("{}").unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(sid.unwrap().starts_with("sess-"));
    assert_eq!(bad["error"], "malformed-request");
}
