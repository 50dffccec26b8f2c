use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Direction, NegotiationError, Preference, UtilityModel};
use crate::ontology::{Rule, RuleKind};

/// Upper bound on `max-rounds` accepted from any policy document.
pub const ROUND_BUDGET: u32 = 1000;

/// The range of values a party will agree to, and which end it prefers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    pub min: f64,
    pub max: f64,
    /// `Benefit` means the party prefers larger values.
    pub prefer: Direction,
}

impl Reservation {
    pub fn best(&self) -> f64 {
        match self.prefer {
            Direction::Benefit => self.max,
            Direction::Cost => self.min,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    /// Position of `v` in `[0, 1]` with 1 at the preferred end.
    pub fn normalize(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span <= 0.0 {
            return 1.0;
        }
        let v = v.clamp(self.min, self.max);
        match self.prefer {
            Direction::Benefit => (v - self.min) / span,
            Direction::Cost => (self.max - v) / span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegotiationPolicy {
    pub reservation: BTreeMap<String, Reservation>,
    pub concession_step: BTreeMap<String, f64>,
    pub acceptance_threshold: f64,
    pub max_rounds: u32,
}

impl NegotiationPolicy {
    pub fn validate(&self) -> Result<(), NegotiationError> {
        let invalid = |m: String| Err(NegotiationError::InvalidPolicy(m));
        for (attr, r) in &self.reservation {
            if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
                return invalid(format!("reservation for {attr} needs min <= max"));
            }
            match self.concession_step.get(attr) {
                Some(s) if *s > 0.0 && s.is_finite() => {}
                _ => return invalid(format!("{attr} needs a concession step > 0")),
            }
        }
        if !(0.0..=1.0).contains(&self.acceptance_threshold) {
            return invalid("acceptance threshold outside [0,1]".into());
        }
        if self.max_rounds < 1 || self.max_rounds > ROUND_BUDGET {
            return invalid(format!("max-rounds must lie in 1..={ROUND_BUDGET}"));
        }
        Ok(())
    }

    /// Builds a policy from `reservation`, `concession` and `acceptance utility`
    /// rules. `max-rounds` is the smallest value any concession rule gives.
    pub fn from_rules<'a>(rules: impl IntoIterator<Item = &'a Rule>) -> Result<Self, NegotiationError> {
        let mut policy = NegotiationPolicy {
            reservation: BTreeMap::new(),
            concession_step: BTreeMap::new(),
            acceptance_threshold: f64::NAN,
            max_rounds: 0,
        };
        for rule in rules {
            let need = |name: &str| {
                rule.param(name)
                    .ok_or_else(|| NegotiationError::InvalidPolicy(format!("rule {} lacks {name}", rule.id)))
            };
            match rule.kind {
                RuleKind::Reservation => {
                    let prefer = match rule.param("prefer") {
                        Some(p) if p < 0.0 => Direction::Cost,
                        _ => Direction::Benefit,
                    };
                    policy.reservation.insert(
                        rule.attribute.clone(),
                        Reservation {
                            min: need("min")?,
                            max: need("max")?,
                            prefer,
                        },
                    );
                }
                RuleKind::Concession => {
                    policy.concession_step.insert(rule.attribute.clone(), need("step")?);
                    let rounds = need("max-rounds")? as u32;
                    policy.max_rounds = if policy.max_rounds == 0 {
                        rounds
                    } else {
                        policy.max_rounds.min(rounds)
                    };
                }
                RuleKind::Acceptance if rule.attribute == "utility" => {
                    policy.acceptance_threshold = need("threshold")?;
                }
                RuleKind::Acceptance | RuleKind::TaskCapability => {}
            }
        }
        if policy.acceptance_threshold.is_nan() {
            return Err(NegotiationError::InvalidPolicy(
                "no `acceptance utility threshold=` rule".into(),
            ));
        }
        policy.validate()?;
        Ok(policy)
    }

    pub fn within(&self, offer: &BTreeMap<String, f64>) -> bool {
        self.reservation
            .iter()
            .all(|(attr, r)| offer.get(attr).is_none_or(|v| r.contains(*v)))
    }

    /// Mean normalized position over the reserved attributes present in `offer`.
    pub fn own_utility(&self, offer: &BTreeMap<String, f64>) -> f64 {
        let values: Vec<f64> = self
            .reservation
            .iter()
            .filter_map(|(attr, r)| offer.get(attr).map(|v| r.normalize(*v)))
            .collect();
        if values.is_empty() {
            1.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    }
}

/// Utility model from `acceptance <attr> weight= min= max= direction=` rules;
/// `direction` is 1 for benefit and -1 for cost.
pub fn utility_model_from_rules<'a>(
    rules: impl IntoIterator<Item = &'a Rule>,
) -> Result<UtilityModel, NegotiationError> {
    let mut terms = BTreeMap::new();
    for rule in rules {
        if rule.kind != RuleKind::Acceptance || rule.attribute == "utility" {
            continue;
        }
        let (Some(weight), Some(min), Some(max)) = (rule.param("weight"), rule.param("min"), rule.param("max")) else {
            continue;
        };
        let direction = match rule.param("direction") {
            Some(d) if d > 0.0 => Direction::Benefit,
            _ => Direction::Cost,
        };
        terms.insert(
            rule.attribute.clone(),
            Preference {
                weight,
                direction,
                min,
                max,
            },
        );
    }
    UtilityModel::new(terms).map_err(|e| NegotiationError::InvalidPolicy(e.to_string()))
}

/// Concurrent invocation cap from a `task-capability invocations max-concurrent=N` rule.
pub fn invocation_cap<'a>(rules: impl IntoIterator<Item = &'a Rule>) -> Option<usize> {
    rules
        .into_iter()
        .filter(|r| r.kind == RuleKind::TaskCapability && r.attribute == "invocations")
        .filter_map(|r| r.param("max-concurrent"))
        .filter(|v| *v >= 1.0)
        .map(|v| v as usize)
        .min()
}
