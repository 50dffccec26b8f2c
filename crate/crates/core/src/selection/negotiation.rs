//! Alternating-offers bilateral negotiation.
//!
//! The provider's CFP proposal is the round-0 offer and the customer counters
//! first. A party's first counter sits at the preferred end of its
//! reservation interval; every later counter moves each reserved attribute by
//! the party's concession step toward the opponent's last offer, never past
//! that offer and never outside its own interval. Attributes a party has no
//! reservation for are echoed from the opponent. A party accepts the standing
//! offer when it lies within its reservation intervals and scores at least its
//! acceptance threshold. Once an offer carrying the round limit is declined
//! the negotiation ends without agreement.

use serde::{Deserialize, Serialize};

use super::{Attributes, NegotiationError, NegotiationPolicy, Proposal, UtilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    Customer,
    Provider,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Party::Customer => Party::Provider,
            Party::Provider => Party::Customer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    pub by: Party,
    pub round: u32,
    pub attributes: Attributes,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    Accept,
    Counter(Attributes),
    Reject,
}

/// One side of a negotiation: its private policy plus its last own offer.
#[derive(Debug, Clone)]
pub struct Negotiator {
    party: Party,
    policy: NegotiationPolicy,
    model: Option<UtilityModel>,
    round_limit: u32,
    own_last: Option<Attributes>,
}

impl Negotiator {
    /// The customer side scores offers with its utility model.
    pub fn customer(
        policy: NegotiationPolicy,
        model: UtilityModel,
        round_limit: u32,
    ) -> Result<Self, NegotiationError> {
        policy.validate()?;
        model
            .validate()
            .map_err(|e| NegotiationError::InvalidPolicy(e.to_string()))?;
        Ok(Self {
            party: Party::Customer,
            policy,
            model: Some(model),
            round_limit: round_limit.max(1),
            own_last: None,
        })
    }

    /// The provider side scores offers by their position in its own intervals.
    pub fn provider(policy: NegotiationPolicy, round_limit: u32) -> Result<Self, NegotiationError> {
        policy.validate()?;
        Ok(Self {
            party: Party::Provider,
            policy,
            model: None,
            round_limit: round_limit.max(1),
            own_last: None,
        })
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn policy(&self) -> &NegotiationPolicy {
        &self.policy
    }

    pub fn round_limit(&self) -> u32 {
        self.round_limit
    }

    pub fn own_last(&self) -> Option<&Attributes> {
        self.own_last.as_ref()
    }

    pub fn utility(&self, offer: &Attributes) -> f64 {
        match &self.model {
            Some(m) => m.score(offer).unwrap_or(0.0),
            None => self.policy.own_utility(offer),
        }
    }

    pub fn acceptable(&self, offer: &Attributes) -> bool {
        self.policy.within(offer) && self.utility(offer) >= self.policy.acceptance_threshold
    }

    /// Provider opening offer over the CFP attributes: the preferred end of each
    /// reserved attribute, otherwise the advertised value. `None` when an
    /// attribute is neither reserved nor advertised.
    pub fn opening<'a>(
        &mut self,
        attributes: impl IntoIterator<Item = &'a str>,
        advertised: &Attributes,
    ) -> Option<Attributes> {
        let mut offer = Attributes::new();
        for attr in attributes {
            let v = match self.policy.reservation.get(attr) {
                Some(r) => r.best(),
                None => *advertised.get(attr)?,
            };
            offer.insert(attr.to_string(), v);
        }
        self.own_last = Some(offer.clone());
        Some(offer)
    }

    /// Treats `offer` as this side's standing offer (used for the CFP opening
    /// and for counters typed in by a human).
    pub fn record_own(&mut self, offer: Attributes) {
        self.own_last = Some(offer);
    }

    /// Decision on the opponent's standing offer.
    pub fn respond(&mut self, offer: &Offer) -> Move {
        if offer.round <= self.round_limit && self.acceptable(&offer.attributes) {
            return Move::Accept;
        }
        if offer.round >= self.round_limit {
            return Move::Reject;
        }
        Move::Counter(self.counter(&offer.attributes))
    }

    /// Next counter toward `opponent`; records it as this side's standing offer.
    pub fn counter(&mut self, opponent: &Attributes) -> Attributes {
        let mut next = Attributes::new();
        for (attr, &target) in opponent {
            let v = match self.policy.reservation.get(attr) {
                None => target,
                Some(r) => match self.own_last.as_ref().and_then(|o| o.get(attr)) {
                    None => r.best(),
                    Some(&prev) => {
                        let step = self.policy.concession_step[attr];
                        let moved = if target > prev {
                            (prev + step).min(target)
                        } else {
                            (prev - step).max(target)
                        };
                        moved.clamp(r.min, r.max)
                    }
                },
            };
            next.insert(attr.clone(), v);
        }
        self.own_last = Some(next.clone());
        next
    }

    /// Whether a custom counter respects this side's reservation intervals.
    pub fn admissible(&self, offer: &Attributes) -> bool {
        self.policy.within(offer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub attributes: Attributes,
    pub rounds: u32,
    pub accepted_by: Party,
    pub history: Vec<Offer>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NegotiationOutcome {
    Agreement(Agreement),
    NoAgreement {
        rounds: u32,
        customer_last: Option<Attributes>,
        provider_last: Attributes,
        history: Vec<Offer>,
    },
}

impl NegotiationOutcome {
    pub fn history(&self) -> &[Offer] {
        match self {
            NegotiationOutcome::Agreement(a) => &a.history,
            NegotiationOutcome::NoAgreement { history, .. } => history,
        }
    }

    pub fn rounds(&self) -> u32 {
        match self {
            NegotiationOutcome::Agreement(a) => a.rounds,
            NegotiationOutcome::NoAgreement { rounds, .. } => *rounds,
        }
    }
}

/// Shared round limit: the smaller of the two parties' `max-rounds`.
pub fn round_limit(customer: &NegotiationPolicy, provider: &NegotiationPolicy) -> u32 {
    customer.max_rounds.min(provider.max_rounds)
}

/// Runs a complete negotiation over the chosen proposal.
pub fn negotiate(
    customer: &NegotiationPolicy,
    provider: &NegotiationPolicy,
    model: &UtilityModel,
    chosen: &Proposal,
    now: u64,
) -> Result<NegotiationOutcome, NegotiationError> {
    if chosen.valid_until < now {
        return Err(NegotiationError::ExpiredProposal {
            proposal: chosen.proposal_id.clone(),
            valid_until: chosen.valid_until,
            now,
        });
    }
    let limit = round_limit(customer, provider);
    let mut cust = Negotiator::customer(customer.clone(), model.clone(), limit)?;
    let mut prov = Negotiator::provider(provider.clone(), limit)?;
    prov.record_own(chosen.offered_attributes.clone());

    let mut standing = Offer {
        by: Party::Provider,
        round: chosen.round,
        attributes: chosen.offered_attributes.clone(),
    };
    let mut history = vec![standing.clone()];
    loop {
        let responder = match standing.by {
            Party::Provider => &mut cust,
            Party::Customer => &mut prov,
        };
        match responder.respond(&standing) {
            Move::Accept => {
                return Ok(NegotiationOutcome::Agreement(Agreement {
                    attributes: standing.attributes,
                    rounds: standing.round,
                    accepted_by: standing.by.other(),
                    history,
                }))
            }
            Move::Reject => {
                return Ok(NegotiationOutcome::NoAgreement {
                    rounds: standing.round,
                    customer_last: cust.own_last().cloned(),
                    provider_last: prov.own_last().cloned().unwrap_or_default(),
                    history,
                })
            }
            Move::Counter(attrs) => {
                standing = Offer {
                    by: standing.by.other(),
                    round: standing.round + 1,
                    attributes: attrs,
                };
                history.push(standing.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{Direction, Reservation};

    fn policy(min: f64, max: f64, prefer: Direction, step: f64, threshold: f64, rounds: u32) -> NegotiationPolicy {
        NegotiationPolicy {
            reservation: [("price".to_string(), Reservation { min, max, prefer })].into(),
            concession_step: [("price".to_string(), step)].into(),
            acceptance_threshold: threshold,
            max_rounds: rounds,
        }
    }

    fn opening(price: f64) -> Proposal {
        Proposal {
            proposal_id: "p".into(),
            service_id: "svc-000001".into(),
            offered_attributes: [("price".to_string(), price)].into(),
            valid_until: 100,
            round: 0,
        }
    }

    fn model() -> UtilityModel {
        UtilityModel::single("price", Direction::Cost, 50.0, 150.0)
    }

    #[test]
    fn zero_threshold_accepts_opening() {
        let c = policy(50.0, 150.0, Direction::Cost, 10.0, 0.0, 10);
        let p = policy(80.0, 120.0, Direction::Benefit, 10.0, 0.6, 10);
        match negotiate(&c, &p, &model(), &opening(120.0), 0).unwrap() {
            NegotiationOutcome::Agreement(a) => {
                assert_eq!(a.rounds, 0);
                assert_eq!(a.attributes["price"], 120.0);
                assert_eq!(a.accepted_by, Party::Customer);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expired_proposal() {
        let c = policy(50.0, 100.0, Direction::Cost, 10.0, 0.6, 10);
        let p = policy(80.0, 120.0, Direction::Benefit, 10.0, 0.6, 10);
        let err = negotiate(&c, &p, &model(), &opening(120.0), 101).unwrap_err();
        assert!(matches!(err, NegotiationError::ExpiredProposal { .. }));
    }

    #[test]
    fn invalid_policy() {
        let c = policy(50.0, 100.0, Direction::Cost, 0.0, 0.6, 10);
        let p = policy(80.0, 120.0, Direction::Benefit, 10.0, 0.6, 10);
        assert!(matches!(
            negotiate(&c, &p, &model(), &opening(120.0), 0),
            Err(NegotiationError::InvalidPolicy(_))
        ));
    }

    #[test]
    fn first_counter_is_preferred_end() {
        let mut n = Negotiator::customer(policy(50.0, 100.0, Direction::Cost, 10.0, 0.6, 10), model(), 10).unwrap();
        let offer = Offer {
            by: Party::Provider,
            round: 0,
            attributes: [("price".to_string(), 120.0)].into(),
        };
        assert_eq!(n.respond(&offer), Move::Counter([("price".to_string(), 50.0)].into()));
        let offer = Offer {
            round: 2,
            attributes: [("price".to_string(), 110.0)].into(),
            ..offer
        };
        assert_eq!(n.respond(&offer), Move::Counter([("price".to_string(), 60.0)].into()));
    }

    #[test]
    fn counters_never_pass_the_opponent() {
        let mut n = Negotiator::provider(policy(0.0, 100.0, Direction::Benefit, 50.0, 1.0, 10), 10).unwrap();
        n.record_own([("price".to_string(), 100.0)].into());
        let c = n.counter(&[("price".to_string(), 70.0)].into());
        assert_eq!(c["price"], 70.0);
    }

    #[test]
    fn unreserved_attributes_are_echoed() {
        let mut n = Negotiator::provider(policy(0.0, 100.0, Direction::Benefit, 5.0, 1.0, 10), 10).unwrap();
        n.record_own([("price".to_string(), 100.0), ("delivery".to_string(), 30.0)].into());
        let c = n.counter(&[("price".to_string(), 50.0), ("delivery".to_string(), 12.0)].into());
        assert_eq!(c["delivery"], 12.0);
        assert_eq!(c["price"], 95.0);
    }
}
