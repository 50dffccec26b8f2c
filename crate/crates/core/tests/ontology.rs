mod common;

use std::time::{Duration, Instant};

use coopnet_core::ontology::{
    load_mapping, load_ontology, serialize_mapping, serialize_ontology, Concept, MatchDegree, OntologyError,
    OntologyGraph, OntologyKind,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn logistics() -> OntologyGraph {
    load_ontology(&common::read("port-logistics.ont")).unwrap()
}

#[test]
fn port_fixture_loads() {
    let g = logistics();
    assert_eq!(g.id(), "port-logistics");
    assert_eq!(g.kind(), OntologyKind::Domain);
    assert_eq!(g.len(), 23);
    assert!(g.is_subconcept("ReeferContainer", "Cargo").unwrap());
    assert!(!g.is_subconcept("Cargo", "ReeferContainer").unwrap());
    assert_eq!(g.match_degree("Transport", "SeaFreight").unwrap(), MatchDegree::Plugin);
    assert_eq!(
        g.match_degree("SeaFreight", "Transport").unwrap(),
        MatchDegree::Subsumes
    );
    assert_eq!(g.match_degree("SeaFreight", "SeaFreight").unwrap(), MatchDegree::Exact);
    assert_eq!(g.match_degree("SeaFreight", "Warehousing").unwrap(), MatchDegree::Fail);
}

#[test]
fn unknown_concept_is_reported() {
    let err = logistics().is_subconcept("Teleportation", "Transport").unwrap_err();
    assert!(matches!(err, OntologyError::UnknownConcept { concept, .. } if concept == "Teleportation"));
}

#[test]
fn serialization_round_trips() {
    for file in [
        "port-logistics.ont",
        "port-fr.ont",
        "port-negotiation.ont",
        "port-local.ont",
    ] {
        let g = load_ontology(&common::read(file)).unwrap();
        assert_eq!(load_ontology(&serialize_ontology(&g)).unwrap(), g, "{file}");
    }
    let m = load_mapping(&common::read("port-fr-to-logistics.map")).unwrap();
    assert_eq!(load_mapping(&serialize_mapping(&m)).unwrap(), m);
}

#[test]
fn cycle_is_named() {
    match load_ontology(&common::read("cyclic.ont")).unwrap_err() {
        OntologyError::Cycle { cycle } => {
            assert!(
                cycle.contains(&"A".to_string()) && cycle.contains(&"B".to_string()),
                "{cycle:?}"
            );
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn dangling_parent_is_rejected() {
    let err = load_ontology("ontology t domain\nconcept A \"A\" Missing\n").unwrap_err();
    assert!(matches!(err, OntologyError::DanglingParent { .. }));
}

#[test]
fn french_vocabulary_translates() {
    let m = load_mapping(&common::read("port-fr-to-logistics.map")).unwrap();
    let fr = load_ontology(&common::read("port-fr.ont")).unwrap();
    m.validate(&fr, &logistics()).unwrap();
    assert_eq!(m.translate("Conteneur").unwrap(), "Container");
    assert_eq!(m.translate("Port-Fr").unwrap(), "Port");
    assert_eq!(m.translate("Fret-Maritime").unwrap(), "SeaFreight");
    assert!(m.translate("Container").is_err());
}

#[test]
fn warehouse_holds_every_port_document() {
    let wh = common::warehouse();
    assert!(wh.domain("port-logistics").is_some());
    assert!(wh.domain("port-fr").is_some());
    assert!(wh.mapping("port-fr", "port-logistics").is_some());
    assert!(wh.mapping("port-logistics", "port-fr").is_none());
    assert_eq!(wh.rules_for("acme").count(), 5);
}

/// Random DAG over `n` concepts: parents drawn from earlier positions of a
/// shuffled order, so file order is not topological.
fn random_dag(rng: &mut ChaCha8Rng) -> (Vec<Concept>, Vec<Vec<usize>>) {
    let n = rng.gen_range(1..=50);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parents = vec![Vec::new(); n];
    for (pos, &node) in order.iter().enumerate() {
        for &earlier in &order[..pos] {
            if rng.gen_bool(0.08) {
                parents[node].push(earlier);
            }
        }
    }
    let names: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
    let concepts = (0..n)
        .map(|i| {
            let ps: Vec<&str> = parents[i].iter().map(|&p| names[p].as_str()).collect();
            Concept::new(names[i].clone(), names[i].clone(), &ps)
        })
        .collect();
    (concepts, parents)
}

/// Warshall transitive closure over the parent relation, reflexive.
fn closure(parents: &[Vec<usize>]) -> Vec<Vec<bool>> {
    let n = parents.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for &p in &parents[i] {
            reach[i][p] = true;
        }
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|r| r[k]) {
            for (cell, &v) in row.iter_mut().zip(&via) {
                *cell |= v;
            }
        }
    }
    reach
}

fn oracle_degree(reach: &[Vec<bool>], r: usize, a: usize) -> MatchDegree {
    if r == a {
        MatchDegree::Exact
    } else if reach[a][r] {
        MatchDegree::Plugin
    } else if reach[r][a] {
        MatchDegree::Subsumes
    } else {
        MatchDegree::Fail
    }
}

#[test]
fn reasoner_agrees_with_closure_oracle_on_random_dags() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut pairs = 0u64;
    for _ in 0..1000 {
        let (concepts, parents) = random_dag(&mut rng);
        let names: Vec<String> = concepts.iter().map(|c| c.id.clone()).collect();
        let g = OntologyGraph::new("rand", OntologyKind::Domain, concepts, Vec::new()).unwrap();
        let reach = closure(&parents);
        for (i, x) in names.iter().enumerate() {
            for (j, y) in names.iter().enumerate() {
                assert_eq!(g.is_subconcept(x, y).unwrap(), reach[i][j], "{x} <= {y}");
                let d = g.match_degree(x, y).unwrap();
                assert_eq!(d, oracle_degree(&reach, i, j), "degree({x}, {y})");
                let dual = match d {
                    MatchDegree::Plugin => MatchDegree::Subsumes,
                    MatchDegree::Subsumes => MatchDegree::Plugin,
                    other => other,
                };
                assert_eq!(g.match_degree(y, x).unwrap(), dual);
                pairs += 1;
            }
        }
    }
    assert!(pairs > 0);
    assert!(
        started.elapsed() < Duration::from_secs(10),
        "took {:?}",
        started.elapsed()
    );
}
