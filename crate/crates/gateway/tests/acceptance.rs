//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so every line prints even when an earlier check fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use coopnet_core::ontology::{load_ontology, Concept, MatchDegree, OntologyGraph, OntologyKind, OntologyWarehouse};
use coopnet_core::platform::{
    AccountRole, Behavior, InvocationStatus, NegotiationMode, NegotiationStatus, PlatformError,
};
use coopnet_core::registry::{
    CentralRegister, HitPolicy, LocalRegister, Lookup, MatchResult, ServiceDescription, ServiceQuery,
};
use coopnet_core::runtime::TraceEntry;
use coopnet_core::selection::{
    negotiate, score_utility, utility_model_from_rules, Attributes, BrokerAction, ContractStatus, CustomerInput,
    Direction, NegotiationOutcome, NegotiationPolicy, Preference, Proposal, Reservation, UtilityModel,
};
use coopnet_gateway::scenario::{replay, run_scenario};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn read(rel: &str) -> String {
    fs::read_to_string(common::fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn logistics() -> OntologyGraph {
    load_ontology(&read("port/port-logistics.ont")).unwrap()
}

fn matchmaker_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut pairs = 0u64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=50);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut parents = vec![Vec::new(); n];
        for (pos, &node) in order.iter().enumerate() {
            for &earlier in &order[..pos] {
                if rng.gen_bool(0.08) {
                    parents[node].push(earlier);
                }
            }
        }
        let names: Vec<String> = (0..n).map(|i| format!("K{i}")).collect();
        let concepts = (0..n)
            .map(|i| {
                let ps: Vec<&str> = parents[i].iter().map(|&p| names[p].as_str()).collect();
                Concept::new(names[i].clone(), names[i].clone(), &ps)
            })
            .collect();
        let g = OntologyGraph::new("rand", OntologyKind::Domain, concepts, Vec::new()).map_err(|e| e.to_string())?;
        // reflexive transitive closure by repeated relaxation
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
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (&names[i], &names[j]);
                let sub = g.is_subconcept(x, y).map_err(|e| e.to_string())?;
                ensure(sub == reach[i][j], || format!("is_subconcept({x}, {y}) = {sub}"))?;
                let want = if i == j {
                    MatchDegree::Exact
                } else if reach[j][i] {
                    MatchDegree::Plugin
                } else if reach[i][j] {
                    MatchDegree::Subsumes
                } else {
                    MatchDegree::Fail
                };
                let got = g.match_degree(x, y).map_err(|e| e.to_string())?;
                ensure(got == want, || {
                    format!("match_degree({x}, {y}) = {got:?}, oracle {want:?}")
                })?;
                pairs += 1;
            }
        }
    }
    let took = started.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("1000 ontologies, {pairs} pairs, {took:.2?}"))
}

fn golden_traces() -> Check {
    let scenario = common::port_scenario();
    let launch = || scenario.launch(common::config(0)).unwrap();
    let role = AccountRole::Customer;
    let mut cases = Vec::new();

    let mut p = launch();
    p.register_account("acme", "acme-pw", role, Default::default()).unwrap();
    p.authenticate("acme", "acme-pw", role).map_err(|e| e.to_string())?;
    cases.push(("auth-success", p.trace().canonical()));

    let mut p = launch();
    p.register_account("acme", "acme-pw", role, Default::default()).unwrap();
    let err = p.authenticate("acme", "guess", role).unwrap_err();
    ensure(matches!(err, PlatformError::WrongCredentials), || format!("{err:?}"))?;
    cases.push(("auth-wrong-credentials", p.trace().canonical()));

    let mut p = launch();
    let err = p.authenticate("acme", "acme-pw", role).unwrap_err();
    ensure(matches!(err, PlatformError::UnknownUser(_)), || format!("{err:?}"))?;
    p.register_account("acme", "acme-pw", role, Default::default()).unwrap();
    p.authenticate("acme", "acme-pw", role).map_err(|e| e.to_string())?;
    cases.push(("auth-unknown-user", p.trace().canonical()));

    for (name, actual) in &cases {
        let expected = read(&format!("golden/{name}.trace"));
        ensure(*actual == expected, || format!("{name} differs from its golden trace"))?;
    }
    Ok("3 traces byte-exact under seed 0".into())
}

fn discovery_behavior() -> Check {
    let scenario = common::port_scenario();
    let run = run_scenario(&scenario, scenario.seed).map_err(|e| e.to_string())?;
    let trace = run.platform.trace();
    let central = |conv: &str| {
        trace
            .in_conversation(conv)
            .filter_map(|e| match e {
                TraceEntry::Delivered { message, .. }
                    if message.sender == "central-register" || message.receiver == "central-register" =>
                {
                    Some("central".to_string())
                }
                TraceEntry::Note { text, .. } => text.split_whitespace().next().map(str::to_string),
                _ => None,
            })
            .collect::<Vec<_>>()
    };
    let first = central(&run.outcome.requests["t1"]);
    let feed = first.iter().position(|e| e == "cache-feed");
    let talk = first.iter().position(|e| e == "central");
    ensure(matches!((talk, feed), (Some(t), Some(f)) if t < f), || {
        format!("first query: {first:?}")
    })?;
    let repeat = central(&run.outcome.requests["t2"]);
    ensure(!repeat.iter().any(|e| e == "central"), || {
        format!("repeat query: {repeat:?}")
    })?;
    ensure(repeat.iter().any(|e| e == "local-hit"), || {
        format!("repeat query: {repeat:?}")
    })?;
    Ok(format!("first {first:?}, repeat {repeat:?}"))
}

fn cache_policy() -> Check {
    let g = logistics();
    let mut reg = CentralRegister::new();
    for (provider, name) in [
        ("acc-000001", "sea-freight"),
        ("acc-000002", "road-freight"),
        ("acc-000003", "customs"),
    ] {
        let mut d = ServiceDescription::from_text(&read(&format!("port/services/{name}.svc"))).unwrap();
        d.provider_id = provider.into();
        reg.publish(d, &g).map_err(|e| e.to_string())?;
    }
    let mut q = ServiceQuery::from_text(&read("port/queries/customs.q")).unwrap();
    q.category = "Service".into();
    q.required_outputs = vec!["Document".into()];
    q.provided_inputs.clear();
    let all = reg.discover(&q, &g).map_err(|e| e.to_string())?;
    let pick = |id: &str| all.iter().find(|m| m.service.service_id == id).cloned().unwrap();
    let (a, b, c) = (pick("svc-000001"), pick("svc-000002"), pick("svc-000003"));

    // least requested goes first, ties broken by age
    let mut l = LocalRegister::new(2);
    l.feed(std::slice::from_ref(&a));
    l.feed(std::slice::from_ref(&b));
    let evicted = l.feed(std::slice::from_ref(&c));
    ensure(evicted == ["svc-000001"], || {
        format!("first example evicted {evicted:?}")
    })?;

    // two lookup hits lift the first entry above the second
    let mut l = LocalRegister::new(2);
    l.feed(std::slice::from_ref(&a));
    let mut sea = q.clone();
    sea.category = "SeaFreight".into();
    sea.required_outputs = vec!["BillOfLading".into()];
    for _ in 0..2 {
        let hit = matches!(l.lookup(&sea, &g, HitPolicy::AnyMatch), Lookup::Hit(ref h) if h.len() == 1);
        ensure(hit, || "sea freight lookup missed".into())?;
    }
    l.feed(std::slice::from_ref(&b));
    let evicted = l.feed(std::slice::from_ref(&c));
    ensure(evicted == ["svc-000002"], || {
        format!("second example evicted {evicted:?}")
    })?;

    let pool: Vec<MatchResult> = (0..40)
        .map(|i| {
            let mut m = a.clone();
            m.service.service_id = format!("svc-{:06}", i + 100);
            m
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xcac4e);
    let mut worst = 0;
    for capacity in 1..=8 {
        let mut l = LocalRegister::new(capacity);
        for _ in 0..10_000 {
            let k = rng.gen_range(0..5);
            let batch: Vec<MatchResult> = (0..k).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
            l.feed(&batch);
            ensure(l.len() <= capacity, || {
                format!("{} entries over capacity {capacity}", l.len())
            })?;
            worst = worst.max(l.len());
        }
    }
    Ok(format!("2 eviction examples, 8 x 10000 operations, fullest {worst}"))
}

fn price(p: f64) -> Attributes {
    Attributes::from([("price".to_string(), p)])
}

fn opening(p: f64) -> Proposal {
    Proposal {
        proposal_id: "prop-1".into(),
        service_id: "svc-000001".into(),
        offered_attributes: price(p),
        valid_until: 100,
        round: 0,
    }
}

fn negotiation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e60);
    let model = UtilityModel::single("price", Direction::Cost, 0.0, 400.0);
    let mut policy = |prefer: Direction| {
        let min = f64::from(rng.gen_range(0u32..200));
        NegotiationPolicy {
            reservation: BTreeMap::from([(
                "price".to_string(),
                Reservation {
                    min,
                    max: min + f64::from(rng.gen_range(1u32..150)),
                    prefer,
                },
            )]),
            concession_step: BTreeMap::from([("price".to_string(), f64::from(rng.gen_range(1u32..40)))]),
            acceptance_threshold: f64::from(rng.gen_range(0u32..=10)) / 10.0,
            max_rounds: rng.gen_range(1..30),
        }
    };
    let mut agreed = 0;
    for _ in 0..1000 {
        let buyer = policy(Direction::Cost);
        let seller = policy(Direction::Benefit);
        let limit = buyer.max_rounds.min(seller.max_rounds);
        match negotiate(&buyer, &seller, &model, &opening(seller.reservation["price"].max), 0)
            .map_err(|e| e.to_string())?
        {
            NegotiationOutcome::Agreement(a) => {
                ensure(a.rounds <= limit, || format!("{} rounds over limit {limit}", a.rounds))?;
                agreed += 1;
            }
            NegotiationOutcome::NoAgreement { rounds, .. } => {
                ensure(rounds == limit, || format!("gave up after {rounds}, limit {limit}"))?;
            }
        }
    }

    let fixture = |name: &str| {
        let wh = OntologyWarehouse::from_documents([read(&format!("negotiation/{name}.ont")).as_str()]).unwrap();
        let buyer = NegotiationPolicy::from_rules(wh.rules_for("buyer")).unwrap();
        let seller = NegotiationPolicy::from_rules(wh.rules_for("seller")).unwrap();
        let model = utility_model_from_rules(wh.rules_for("buyer")).unwrap();
        negotiate(&buyer, &seller, &model, &opening(120.0), 0).map(|o| (o, buyer.max_rounds.min(seller.max_rounds)))
    };
    let (overlap, _) = fixture("overlap").map_err(|e| e.to_string())?;
    let NegotiationOutcome::Agreement(a) = overlap else {
        return Err(format!("overlap fixture: {overlap:?}"));
    };
    let p = a.attributes["price"];
    ensure((80.0..=100.0).contains(&p), || format!("overlap price {p}"))?;
    ensure(p == 90.0 && a.rounds == 6, || {
        format!("overlap: price {p} after {} rounds, golden 90 after 6", a.rounds)
    })?;
    let (disjoint, limit) = fixture("disjoint").map_err(|e| e.to_string())?;
    let NegotiationOutcome::NoAgreement { rounds, .. } = disjoint else {
        return Err(format!("disjoint fixture: {disjoint:?}"));
    };
    ensure(rounds == limit, || format!("disjoint: {rounds} rounds, max {limit}"))?;
    Ok(format!(
        "1000 pairs ({agreed} agreed), overlap price {p}, disjoint stops at {rounds}"
    ))
}

const ATTRS: [&str; 3] = ["price", "delivery-time", "reliability"];

fn utility_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0711);
    let offer = |rng: &mut ChaCha8Rng| -> Attributes {
        ATTRS
            .iter()
            .map(|a| (a.to_string(), f64::from(rng.gen_range(-80i32..160))))
            .collect()
    };
    let argmax = |m: &UtilityModel, offers: &[Attributes]| {
        let scores: Vec<f64> = offers.iter().map(|o| score_utility(o, m).unwrap()).collect();
        (0..scores.len()).fold(0, |best, i| if scores[i] > scores[best] { i } else { best })
    };
    for _ in 0..1000 {
        let ws: Vec<u32> = (0..3).map(|_| rng.gen_range(1..10)).collect();
        let total: u32 = ws.iter().sum();
        let mut terms = BTreeMap::new();
        let mut assigned = 0.0;
        for (i, attr) in ATTRS.iter().enumerate() {
            let weight = if i == 2 {
                1.0 - assigned
            } else {
                f64::from(ws[i]) / f64::from(total)
            };
            assigned += weight;
            let lo = f64::from(rng.gen_range(-50i32..50));
            let direction = if rng.gen() { Direction::Benefit } else { Direction::Cost };
            let max = lo + f64::from(rng.gen_range(1i32..100));
            terms.insert(
                attr.to_string(),
                Preference {
                    weight,
                    direction,
                    min: lo,
                    max,
                },
            );
        }
        let model = UtilityModel::new(terms.clone()).map_err(|e| e.to_string())?;

        let base = offer(&mut rng);
        let attr = ATTRS[rng.gen_range(0..3)];
        let delta = f64::from(rng.gen_range(0i32..100));
        let mut better = base.clone();
        *better.get_mut(attr).unwrap() += match terms[attr].direction {
            Direction::Benefit => delta,
            Direction::Cost => -delta,
        };
        let (u0, u1) = (
            score_utility(&base, &model).unwrap(),
            score_utility(&better, &model).unwrap(),
        );
        ensure(u1 >= u0, || format!("improving {attr} lowered utility {u0} -> {u1}"))?;

        let offers: Vec<Attributes> = (0..rng.gen_range(1..8)).map(|_| offer(&mut rng)).collect();
        let affine: Vec<(f64, f64)> = (0..3)
            .map(|_| {
                (
                    f64::from(rng.gen_range(1i32..20)),
                    f64::from(rng.gen_range(-1000i32..1000)),
                )
            })
            .collect();
        let map = |i: usize, v: f64| affine[i].0 * v + affine[i].1;
        let moved_terms = ATTRS
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = terms[*a];
                (
                    a.to_string(),
                    Preference {
                        min: map(i, p.min),
                        max: map(i, p.max),
                        ..p
                    },
                )
            })
            .collect();
        let moved_model = UtilityModel::new(moved_terms).map_err(|e| e.to_string())?;
        let moved: Vec<Attributes> = offers
            .iter()
            .map(|o| {
                ATTRS
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (a.to_string(), map(i, o[*a])))
                    .collect()
            })
            .collect();
        ensure(argmax(&model, &offers) == argmax(&moved_model, &moved), || {
            "argmax moved under rescaling".into()
        })?;
    }
    let example = UtilityModel::new(BTreeMap::from([
        (
            "price".to_string(),
            Preference {
                weight: 0.5,
                direction: Direction::Cost,
                min: 50.0,
                max: 150.0,
            },
        ),
        (
            "delivery-time".to_string(),
            Preference {
                weight: 0.5,
                direction: Direction::Cost,
                min: 10.0,
                max: 50.0,
            },
        ),
    ]))
    .unwrap();
    let u = score_utility(
        &Attributes::from([("price".into(), 100.0), ("delivery-time".into(), 30.0)]),
        &example,
    )
    .unwrap();
    ensure((u - 0.5).abs() <= 1e-12, || format!("worked example gives {u}"))?;
    Ok(format!("1000 models, worked example {u}"))
}

fn determinism() -> Check {
    let scenario = common::port_scenario();
    let started = Instant::now();
    let mut hashes = Vec::new();
    let mut rate = Ratio::from_integer(0);
    for _ in 0..5 {
        let run = run_scenario(&scenario, scenario.seed).map_err(|e| e.to_string())?;
        rate = run.report.cache_hit_rate();
        ensure(
            (run.report.stats.local_hits, run.report.stats.discoveries) == (2, 6),
            || {
                format!(
                    "{} hits over {} discoveries",
                    run.report.stats.local_hits, run.report.stats.discoveries
                )
            },
        )?;
        hashes.push(run.report.trace_hash);
    }
    let took = started.elapsed();
    ensure(hashes.iter().all(|h| *h == hashes[0]), || {
        format!("hashes differ: {hashes:?}")
    })?;
    ensure(rate == Ratio::new(2, 6), || format!("hit rate {rate}"))?;
    ensure(took < Duration::from_secs(5), || format!("5 runs took {took:?}"))?;
    Ok(format!(
        "5 runs, hash {}, hit rate {rate}, {took:.2?}",
        &hashes[0][..12]
    ))
}

fn broker_failover() -> Check {
    let scenario = common::port_scenario();
    let mut p = scenario.launch(common::config(0)).map_err(|e| e.to_string())?;
    replay(&scenario, &mut p, true).map_err(|e| e.to_string())?;
    let sid = p
        .authenticate("acme", "acme-pw", AccountRole::Customer)
        .map_err(|e| e.to_string())?
        .session
        .session_id;
    let query = ServiceQuery::from_text(&read("port/queries/transport.q")).unwrap();
    let req = p.submit_request(&sid, query).map_err(|e| e.to_string())?;
    let ranked = p.results(&sid, &req).map_err(|e| e.to_string())?.ranked;
    ensure(ranked.len() >= 2, || format!("{} ranked services", ranked.len()))?;
    let (first, second) = (
        ranked[0].proposal.service_id.clone(),
        ranked[1].proposal.service_id.clone(),
    );
    p.set_behavior(&first, Behavior::FailExecution);
    let neg = p
        .choose_service(&sid, &req, &first, NegotiationMode::Auto)
        .map_err(|e| e.to_string())?;
    let NegotiationStatus::Agreed { contract_id } = p.negotiation(&sid, &neg).map_err(|e| e.to_string())?.status else {
        return Err("no agreement with the first-ranked service".into());
    };
    let inputs = vec![
        CustomerInput::new("cargo", "Container", "TEU-4711"),
        CustomerInput::new("origin", "Port", "Le Havre"),
    ];
    let inv = p
        .invoke(&sid, &contract_id, inputs, "port-logistics")
        .map_err(|e| e.to_string())?;
    let state = p.invocation(&sid, &inv).map_err(|e| e.to_string())?;
    let InvocationStatus::Succeeded { service_id, .. } = &state.status else {
        return Err(format!("invocation ended {:?}", state.status));
    };
    ensure(*service_id == second, || {
        format!("served by {service_id}, second-ranked is {second}")
    })?;
    let report = p.broker_report(&inv).ok_or("no intervention report")?;
    ensure(report.retries() == 1, || format!("{} retries", report.retries()))?;
    ensure(
        matches!(&report.actions[0], BrokerAction::Retry { failed, next, .. } if *failed == first && *next == second),
        || format!("{:?}", report.actions),
    )?;
    let (c, status) = p.contract(&state.contract_id).map_err(|e| e.to_string())?;
    ensure(c.service_id == second && *status == ContractStatus::Active, || {
        format!("final contract {c:?} {status:?}")
    })?;
    Ok(format!("{first} failed, {} active on {second}, 1 retry", c.contract_id))
}

fn gateway_transparency() -> Check {
    let scenario = common::port_scenario();
    let local = run_scenario(&scenario, scenario.seed).map_err(|e| e.to_string())?;
    let (wire, shared) = common::wire_replay(&scenario, scenario.seed);
    let text = |cs: &[(coopnet_core::selection::Contract, ContractStatus)]| {
        cs.iter().map(|(c, s)| c.to_text(*s)).collect::<Vec<_>>()
    };
    ensure(!local.outcome.contracts.is_empty(), || "no contracts in-process".into())?;
    ensure(text(&wire.contracts) == text(&local.outcome.contracts), || {
        "contract records differ".into()
    })?;
    let wire_hash = shared.lock().unwrap().trace().hash();
    ensure(wire_hash == local.report.trace_hash, || "trace hashes differ".into())?;
    Ok(format!(
        "{} contract records equal, same trace hash",
        wire.contracts.len()
    ))
}

fn main() -> ExitCode {
    let checks: [Criterion; 9] = [
        ("matchmaker-oracle-equivalence", matchmaker_oracle),
        ("authentication-golden-traces", golden_traces),
        ("discovery-local-first", discovery_behavior),
        ("cache-policy", cache_policy),
        ("negotiation", negotiation),
        ("utility-properties", utility_properties),
        ("determinism", determinism),
        ("broker-fail-over", broker_failover),
        ("gateway-transparency", gateway_transparency),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
