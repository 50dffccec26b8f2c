use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether a larger attribute value is better (benefit) or worse (cost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Benefit,
    Cost,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Benefit => "benefit",
            Direction::Cost => "cost",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "benefit" => Some(Direction::Benefit),
            "cost" => Some(Direction::Cost),
            _ => None,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Benefit => Direction::Cost,
            Direction::Cost => Direction::Benefit,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One weighted, bounded attribute of a customer's preferences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    pub weight: f64,
    pub direction: Direction,
    pub min: f64,
    pub max: f64,
}

impl Preference {
    /// Position of `value` in `[0, 1]`, 1 being the customer-best bound.
    pub fn normalize(&self, value: f64) -> f64 {
        let v = value.clamp(self.min, self.max);
        let span = self.max - self.min;
        match self.direction {
            Direction::Benefit => (v - self.min) / span,
            Direction::Cost => (self.max - v) / span,
        }
    }

    pub fn best(&self) -> f64 {
        match self.direction {
            Direction::Benefit => self.max,
            Direction::Cost => self.min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UtilityError {
    #[error("offer lacks weighted attribute `{0}`")]
    MissingAttribute(String),
    #[error("invalid utility model: {0}")]
    InvalidModel(String),
}

/// Weighted sum of min-max normalized attributes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilityModel {
    terms: BTreeMap<String, Preference>,
}

impl UtilityModel {
    pub fn new(terms: BTreeMap<String, Preference>) -> Result<Self, UtilityError> {
        let model = Self { terms };
        model.validate()?;
        Ok(model)
    }

    /// Single-attribute model with weight 1.
    pub fn single(attribute: &str, direction: Direction, min: f64, max: f64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(
            attribute.to_string(),
            Preference {
                weight: 1.0,
                direction,
                min,
                max,
            },
        );
        Self::new(terms).expect("single-term model is valid when min < max")
    }

    pub fn validate(&self) -> Result<(), UtilityError> {
        if self.terms.is_empty() {
            return Err(UtilityError::InvalidModel("no weighted attributes".into()));
        }
        let mut sum = 0.0;
        for (name, p) in &self.terms {
            if !(0.0..=1.0).contains(&p.weight) {
                return Err(UtilityError::InvalidModel(format!("weight of {name} outside [0,1]")));
            }
            if !(p.min.is_finite() && p.max.is_finite() && p.min < p.max) {
                return Err(UtilityError::InvalidModel(format!("bounds of {name} need min < max")));
            }
            sum += p.weight;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(UtilityError::InvalidModel(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn terms(&self) -> &BTreeMap<String, Preference> {
        &self.terms
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn preference(&self, attribute: &str) -> Option<&Preference> {
        self.terms.get(attribute)
    }

    pub fn score(&self, offer: &BTreeMap<String, f64>) -> Result<f64, UtilityError> {
        score_utility(offer, self)
    }
}

/// `U = Σ w_a · n_a`, with each value clamped into its bounds before normalizing.
pub fn score_utility(offer: &BTreeMap<String, f64>, model: &UtilityModel) -> Result<f64, UtilityError> {
    let mut total = 0.0;
    for (name, pref) in &model.terms {
        let v = offer
            .get(name)
            .ok_or_else(|| UtilityError::MissingAttribute(name.clone()))?;
        total += pref.weight * pref.normalize(*v);
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn two_cost_model() -> UtilityModel {
        let mut t = BTreeMap::new();
        t.insert(
            "price".into(),
            Preference {
                weight: 0.5,
                direction: Direction::Cost,
                min: 50.0,
                max: 150.0,
            },
        );
        t.insert(
            "delivery".into(),
            Preference {
                weight: 0.5,
                direction: Direction::Cost,
                min: 10.0,
                max: 50.0,
            },
        );
        UtilityModel::new(t).unwrap()
    }

    #[test]
    fn worked_example() {
        let u = score_utility(&offer(&[("price", 100.0), ("delivery", 30.0)]), &two_cost_model()).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
    }

    #[test]
    fn customer_best_scores_one() {
        let u = score_utility(&offer(&[("price", 50.0), ("delivery", 10.0)]), &two_cost_model()).unwrap();
        assert_eq!(u, 1.0);
    }

    #[test]
    fn values_outside_bounds_are_clamped() {
        let u = score_utility(&offer(&[("price", 10.0), ("delivery", 500.0)]), &two_cost_model()).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
    }

    #[test]
    fn midpoint_is_half_either_direction() {
        for d in [Direction::Benefit, Direction::Cost] {
            let m = UtilityModel::single("x", d, 0.0, 8.0);
            assert_eq!(m.score(&offer(&[("x", 4.0)])).unwrap(), 0.5);
        }
    }

    #[test]
    fn missing_attribute() {
        let err = score_utility(&offer(&[("price", 100.0)]), &two_cost_model()).unwrap_err();
        assert_eq!(err, UtilityError::MissingAttribute("delivery".into()));
    }

    #[test]
    fn invalid_models() {
        let mut t = BTreeMap::new();
        t.insert(
            "a".into(),
            Preference {
                weight: 0.7,
                direction: Direction::Cost,
                min: 0.0,
                max: 1.0,
            },
        );
        assert!(UtilityModel::new(t.clone()).is_err());
        t.insert(
            "b".into(),
            Preference {
                weight: 0.3,
                direction: Direction::Cost,
                min: 1.0,
                max: 1.0,
            },
        );
        assert!(UtilityModel::new(t).is_err());
    }
}
