mod common;

use std::collections::BTreeMap;

use coopnet_core::ontology::OntologyWarehouse;
use coopnet_core::selection::{
    negotiate, utility_model_from_rules, Attributes, Direction, NegotiationError, NegotiationOutcome,
    NegotiationPolicy, Party, Proposal, Reservation, UtilityModel,
};
use proptest::prelude::*;

struct Fixture {
    buyer: NegotiationPolicy,
    seller: NegotiationPolicy,
    model: UtilityModel,
}

fn fixture(name: &str) -> Fixture {
    let text = common::read(&format!("../negotiation/{name}.ont"));
    let wh = OntologyWarehouse::from_documents([text.as_str()]).unwrap();
    Fixture {
        buyer: NegotiationPolicy::from_rules(wh.rules_for("buyer")).unwrap(),
        seller: NegotiationPolicy::from_rules(wh.rules_for("seller")).unwrap(),
        model: utility_model_from_rules(wh.rules_for("buyer")).unwrap(),
    }
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

#[test]
fn overlapping_ranges_agree_on_frozen_golden() {
    let f = fixture("overlap");
    let NegotiationOutcome::Agreement(a) = negotiate(&f.buyer, &f.seller, &f.model, &opening(120.0), 0).unwrap() else {
        panic!("expected agreement");
    };
    // brute-force oracle: tests/oracles/negotiation_oracle.py
    assert_eq!(a.attributes, price(90.0));
    assert_eq!(a.rounds, 6);
    assert!((80.0..=100.0).contains(&a.attributes["price"]));
    assert_eq!(a.accepted_by, Party::Customer);
    let prices: Vec<f64> = a.history.iter().map(|o| o.attributes["price"]).collect();
    assert_eq!(prices, [120.0, 50.0, 110.0, 60.0, 100.0, 70.0, 90.0]);
}

#[test]
fn disjoint_ranges_fail_after_max_rounds() {
    let f = fixture("disjoint");
    match negotiate(&f.buyer, &f.seller, &f.model, &opening(120.0), 0).unwrap() {
        NegotiationOutcome::NoAgreement {
            rounds,
            customer_last,
            provider_last,
            history,
        } => {
            assert_eq!(rounds, 10);
            assert_eq!(history.len(), 11);
            assert_eq!(customer_last, Some(price(80.0)));
            assert_eq!(provider_last, price(100.0));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn opening_offer_is_provider_preferred_end() {
    let f = fixture("overlap");
    let mut seller = coopnet_core::selection::Negotiator::provider(f.seller, 10).unwrap();
    let open = seller.opening(["price"], &Attributes::new()).unwrap();
    assert_eq!(open, price(120.0));
}

#[test]
fn expired_proposal_is_refused() {
    let f = fixture("overlap");
    let err = negotiate(&f.buyer, &f.seller, &f.model, &opening(120.0), 101).unwrap_err();
    assert!(matches!(
        err,
        NegotiationError::ExpiredProposal {
            valid_until: 100,
            now: 101,
            ..
        }
    ));
}

#[test]
fn port_parties_reach_oracle_agreements() {
    let wh = common::warehouse();
    let acme = NegotiationPolicy::from_rules(wh.rules_for("acme")).unwrap();
    let model = common::query("transport").preferences;
    let cases = [
        ("portco", [120.0, 48.0], [90.0, 36.0], 6),
        ("truckco", [110.0, 24.0], [100.0, 12.0], 2),
    ];
    for (provider, open, agreed, rounds) in cases {
        let policy = NegotiationPolicy::from_rules(wh.rules_for(provider)).unwrap();
        let mut p = opening(open[0]);
        p.offered_attributes.insert("delivery-time".into(), open[1]);
        let NegotiationOutcome::Agreement(a) = negotiate(&acme, &policy, &model, &p, 0).unwrap() else {
            panic!("{provider}: no agreement");
        };
        let want = Attributes::from([
            ("price".to_string(), agreed[0]),
            ("delivery-time".to_string(), agreed[1]),
        ]);
        assert_eq!(a.attributes, want, "{provider}");
        assert_eq!(a.rounds, rounds, "{provider}");
    }
}

fn policy_strategy(prefer: Direction) -> impl Strategy<Value = NegotiationPolicy> {
    (0u32..200, 1u32..150, 1u32..40, 0u32..=10, 1u32..30).prop_map(move |(min, span, step, thr, rounds)| {
        NegotiationPolicy {
            reservation: BTreeMap::from([(
                "price".to_string(),
                Reservation {
                    min: f64::from(min),
                    max: f64::from(min + span),
                    prefer,
                },
            )]),
            concession_step: BTreeMap::from([("price".to_string(), f64::from(step))]),
            acceptance_threshold: f64::from(thr) / 10.0,
            max_rounds: rounds,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_pairs_terminate_within_max_rounds(
        buyer in policy_strategy(Direction::Cost),
        seller in policy_strategy(Direction::Benefit),
    ) {
        let model = UtilityModel::single("price", Direction::Cost, 0.0, 400.0);
        let open = opening(seller.reservation["price"].max);
        let limit = buyer.max_rounds.min(seller.max_rounds);
        match negotiate(&buyer, &seller, &model, &open, 0).unwrap() {
            NegotiationOutcome::Agreement(a) => {
                prop_assert!(a.rounds <= limit);
                let p = a.attributes["price"];
                prop_assert!(buyer.reservation["price"].contains(p));
                prop_assert!(seller.reservation["price"].contains(p));
            }
            NegotiationOutcome::NoAgreement { rounds, history, .. } => {
                prop_assert_eq!(rounds, limit);
                prop_assert_eq!(history.len() as u32, limit + 1);
            }
        }
    }
}
