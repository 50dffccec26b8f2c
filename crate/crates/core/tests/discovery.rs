mod common;

use coopnet_core::discovery::{History, HistoryRecord, HISTORY_HEADER};
use coopnet_core::platform::{PlatformConfig, Source};
use coopnet_core::registry::ServiceQuery;
use coopnet_core::runtime::TraceEntry;

const CENTRAL: &str = "central-register";

/// Positions of central-register messages and cache-feed notes in one
/// conversation of the last run.
fn conversation_events(p: &coopnet_core::platform::Platform, conv: &str) -> Vec<String> {
    p.last_trace()
        .in_conversation(conv)
        .filter_map(|e| match e {
            TraceEntry::Delivered { message, .. } if message.sender == CENTRAL || message.receiver == CENTRAL => Some(
                format!("{} {}->{}", message.performative, message.sender, message.receiver),
            ),
            TraceEntry::Note { text, .. } => Some(text.split_whitespace().next().unwrap_or("").to_string()),
            _ => None,
        })
        .collect()
}

fn discovery_hops(p: &coopnet_core::platform::Platform, session: &str, req: &str) -> (Option<Source>, u32) {
    let d = p.results(session, req).unwrap().discovery.expect("discovery answered");
    (d.source, d.hops)
}

#[test]
fn first_query_goes_central_then_feeds_cache() {
    let mut port = common::port(0);
    let sid = port.acme.session.session_id.clone();
    let p = &mut port.platform;
    let req = p.submit_request(&sid, common::query("transport")).unwrap();
    let events = conversation_events(p, &req);
    assert_eq!(
        events,
        [
            "local-miss",
            "REQUEST discovery->central-register",
            "INFORM central-register->discovery",
            "cache-feed"
        ],
    );
    assert_eq!(discovery_hops(p, &sid, &req), (Some(Source::Central), 4));
    let cached: Vec<&str> = p
        .discovery()
        .local()
        .entries()
        .map(|e| e.description.service_id.as_str())
        .collect();
    assert_eq!(cached, ["svc-000001", "svc-000002"]);
    for e in p.discovery().local().entries() {
        assert_eq!(e.provider_link, e.description.provider_id);
    }
}

#[test]
fn repeat_query_never_touches_central() {
    let mut port = common::port(0);
    let sid = port.acme.session.session_id.clone();
    let p = &mut port.platform;
    let first = p.submit_request(&sid, common::query("transport")).unwrap();
    let repeat = p.submit_request(&sid, common::query("transport")).unwrap();
    let central = p
        .last_trace()
        .in_conversation(&repeat)
        .filter(|e| matches!(e, TraceEntry::Delivered { message, .. } if message.sender == CENTRAL || message.receiver == CENTRAL))
        .count();
    assert_eq!(central, 0);
    assert_eq!(conversation_events(p, &repeat), ["local-hit"]);
    let (src_a, hops_a) = discovery_hops(p, &sid, &first);
    let (src_b, hops_b) = discovery_hops(p, &sid, &repeat);
    assert_eq!((src_a, src_b), (Some(Source::Central), Some(Source::Local)));
    assert!(hops_b < hops_a);
    let a: Vec<_> = p.results(&sid, &first).unwrap().discovery.unwrap().results;
    let b: Vec<_> = p.results(&sid, &repeat).unwrap().discovery.unwrap().results;
    assert_eq!(a, b);
}

#[test]
fn unmatched_query_is_an_empty_central_answer() {
    let mut port = common::port(0);
    let sid = port.acme.session.session_id.clone();
    let p = &mut port.platform;
    let mut q = common::query("transport");
    q.category = "RailFreight".into();
    let req = p.submit_request(&sid, q).unwrap();
    let d = p.results(&sid, &req).unwrap().discovery.unwrap();
    assert!(d.results.is_empty());
    assert_eq!(d.source, Some(Source::Central));
    assert!(p.discovery().local().is_empty());
}

#[test]
fn unknown_ontology_is_reported_to_the_customer() {
    let mut port = common::port(0);
    let sid = port.acme.session.session_id.clone();
    let mut q = common::query("transport");
    q.ontology_id = "atlantis".into();
    let res = port.platform.submit_request(&sid, q);
    let code = match res {
        Ok(req) => port.platform.results(&sid, &req).unwrap().error.unwrap().code,
        Err(e) => e.to_string(),
    };
    assert!(code.contains("unknown-ontology") || code.contains("atlantis"), "{code}");
}

#[test]
fn local_first_in_every_conversation() {
    let mut port = common::port(0);
    let sid = port.acme.session.session_id.clone();
    for name in [
        "transport",
        "customs",
        "transport",
        "warehousing",
        "handling",
        "customs",
    ] {
        port.platform.submit_request(&sid, common::query(name)).unwrap();
    }
    let trace = port.platform.trace();
    let convs: std::collections::BTreeSet<String> = trace
        .delivered()
        .filter(|m| m.receiver == CENTRAL && m.conversation_id.starts_with("req-"))
        .map(|m| m.conversation_id.clone())
        .collect();
    assert_eq!(convs.len(), 4);
    for conv in convs {
        let events: Vec<String> = trace
            .in_conversation(&conv)
            .filter_map(|e| match e {
                TraceEntry::Note { text, .. } => Some(text.clone()),
                TraceEntry::Delivered { message, .. } if message.receiver == CENTRAL => Some("central".into()),
                _ => None,
            })
            .collect();
        let miss = events.iter().position(|e| e == "local-miss").expect("miss noted");
        let central = events.iter().position(|e| e == "central").unwrap();
        assert!(miss < central, "{conv}: {events:?}");
        assert!(
            events[central..].iter().any(|e| e.starts_with("cache-feed")),
            "{conv}: {events:?}"
        );
    }
}

/// Six distinct queries with disjoint answers plus four repeats.
fn stream() -> Vec<ServiceQuery> {
    let empty = |cat: &str| {
        let mut q = common::query("transport");
        q.category = cat.into();
        q
    };
    vec![
        common::query("transport"),
        common::query("customs"),
        common::query("transport"),
        empty("RailFreight"),
        common::query("warehousing"),
        common::query("customs"),
        common::query("handling"),
        empty("Cargo"),
        common::query("warehousing"),
        common::query("transport"),
    ]
}

#[test]
fn ten_query_stream_with_four_repeats_hits_four_tenths() {
    let mut port = common::port(0);
    let sid = port.acme.session.session_id.clone();
    for q in stream() {
        port.platform.submit_request(&sid, q).unwrap();
    }
    let history = port.platform.discovery().history();
    assert_eq!(history.len(), 10);
    assert_eq!(history.hits(), (4, 10));
    let stats = port.platform.stats();
    assert_eq!((stats.local_hits, stats.discoveries), (4, 10));
}

#[test]
fn history_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = PlatformConfig {
        data_dir: Some(dir.path().to_path_buf()),
        ..common::config(0)
    };
    let mut port = common::port_with(config.clone());
    let sid = port.acme.session.session_id.clone();
    for q in stream().into_iter().take(3) {
        port.platform.submit_request(&sid, q).unwrap();
    }
    let before = port.platform.discovery().history().records().to_vec();
    assert_eq!(before.len(), 3);
    drop(port);

    let text = std::fs::read_to_string(dir.path().join("history.jnl")).unwrap();
    assert!(text.starts_with(HISTORY_HEADER));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let p = coopnet_core::platform::Platform::launch(config, common::warehouse()).unwrap();
    assert_eq!(p.discovery().history().records(), before.as_slice());
    let reopened = History::open(&dir.path().join("history.jnl")).unwrap();
    assert_eq!(reopened.hits(), (1, 3));
}

#[test]
fn history_record_line_round_trip() {
    let r = HistoryRecord {
        tick: 17,
        source: Source::Local,
        query: common::query("transport").canonical(),
        results: vec!["svc-000001".into(), "svc-000002".into()],
    };
    assert_eq!(HistoryRecord::from_line(&r.to_line()).unwrap(), r);
}
