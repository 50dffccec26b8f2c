use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ontology::MatchDegree;

pub type Attributes = BTreeMap<String, f64>;

/// A service agent's (or, in counter-offers, a customer's) offered terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub proposal_id: String,
    pub service_id: String,
    pub offered_attributes: Attributes,
    pub valid_until: u64,
    pub round: u32,
}

/// A proposal with its utility for the customer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedProposal {
    pub proposal: Proposal,
    pub degree: MatchDegree,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub contract_id: String,
    pub customer_account: String,
    pub provider_account: String,
    pub service_id: String,
    pub agreed_attributes: Attributes,
    pub concluded_at: u64,
    pub negotiation_rounds: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractStatus {
    Active,
    Cancelled,
}

impl Contract {
    /// `contracts/<contract-id>.ctr` record.
    pub fn to_text(&self, status: ContractStatus) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "contract-id: {}", self.contract_id);
        let _ = writeln!(out, "customer-account: {}", self.customer_account);
        let _ = writeln!(out, "provider-account: {}", self.provider_account);
        let _ = writeln!(out, "service-id: {}", self.service_id);
        let _ = writeln!(out, "concluded-at: {}", self.concluded_at);
        let _ = writeln!(out, "negotiation-rounds: {}", self.negotiation_rounds);
        let _ = writeln!(
            out,
            "status: {}",
            match status {
                ContractStatus::Active => "active",
                ContractStatus::Cancelled => "cancelled",
            }
        );
        for (k, v) in &self.agreed_attributes {
            let _ = writeln!(out, "agreed.{k}: {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<(Self, ContractStatus), String> {
        let mut c = Contract {
            contract_id: String::new(),
            customer_account: String::new(),
            provider_account: String::new(),
            service_id: String::new(),
            agreed_attributes: Attributes::new(),
            concluded_at: 0,
            negotiation_rounds: 0,
        };
        let mut status = ContractStatus::Active;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once(':').ok_or_else(|| format!("bad line `{line}`"))?;
            let v = v.trim();
            let num = |v: &str| v.parse::<u64>().map_err(|_| format!("`{v}` is not an integer"));
            match k.trim() {
                "contract-id" => c.contract_id = v.into(),
                "customer-account" => c.customer_account = v.into(),
                "provider-account" => c.provider_account = v.into(),
                "service-id" => c.service_id = v.into(),
                "concluded-at" => c.concluded_at = num(v)?,
                "negotiation-rounds" => c.negotiation_rounds = num(v)? as u32,
                "status" => {
                    status = match v {
                        "active" => ContractStatus::Active,
                        "cancelled" => ContractStatus::Cancelled,
                        other => return Err(format!("unknown status `{other}`")),
                    }
                }
                other => {
                    let attr = other
                        .strip_prefix("agreed.")
                        .ok_or_else(|| format!("unknown field `{other}`"))?;
                    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
                    c.agreed_attributes.insert(attr.to_string(), x);
                }
            }
        }
        if c.contract_id.is_empty() {
            return Err("missing contract-id".into());
        }
        Ok((c, status))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contract_record_round_trip() {
        let c = Contract {
            contract_id: "ctr-000001".into(),
            customer_account: "acc-000002".into(),
            provider_account: "acc-000001".into(),
            service_id: "svc-000001".into(),
            agreed_attributes: Attributes::from([("price".into(), 90.0), ("delivery-time".into(), 36.0)]),
            concluded_at: 41,
            negotiation_rounds: 6,
        };
        let text = c.to_text(ContractStatus::Cancelled);
        assert_eq!(Contract::from_text(&text).unwrap(), (c, ContractStatus::Cancelled));
    }
}
