//! Broker bookkeeping: invocation monitoring, fail-over across the ranked
//! list, a per-provider concurrent-invocation cap, and concept translation.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{CustomerInput, Proposal};
use crate::ontology::{ConceptMapping, OntologyError};

pub const DEFAULT_INVOCATION_CAP: usize = 4;
pub const DEFAULT_RETRY_BUDGET: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum BrokerAction {
    Retry {
        failed: String,
        next: String,
        reason: String,
    },
    Translate {
        concept: String,
        translated: String,
        source_ontology: String,
        target_ontology: String,
    },
    Rebalance {
        provider: String,
        skipped: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum InterventionOutcome {
    Pending,
    Succeeded { service_id: String },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionReport {
    pub conversation: String,
    pub actions: Vec<BrokerAction>,
    pub outcome: InterventionOutcome,
}

impl InterventionReport {
    pub fn retries(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| matches!(a, BrokerAction::Retry { .. }))
            .count()
    }

    pub fn translations(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| matches!(a, BrokerAction::Translate { .. }))
            .count()
    }
}

/// A ranked fallback the broker may switch to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub proposal: Proposal,
    pub provider: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    /// Go ahead with the service currently contracted.
    Forward {
        service_id: String,
    },
    /// Negotiate with and invoke this alternative instead.
    Switch(Alternative),
    Exhausted {
        reason: String,
    },
}

#[derive(Debug, Clone)]
struct Monitor {
    customer: String,
    current: Option<(String, String)>,
    alternatives: VecDeque<Alternative>,
    tried: Vec<String>,
    report: InterventionReport,
}

#[derive(Debug, Clone)]
pub struct Broker {
    monitors: BTreeMap<String, Monitor>,
    load: BTreeMap<String, usize>,
    caps: BTreeMap<String, usize>,
    default_cap: usize,
    retry_budget: usize,
}

impl Default for Broker {
    fn default() -> Self {
        Self::new(DEFAULT_INVOCATION_CAP, DEFAULT_RETRY_BUDGET)
    }
}

impl Broker {
    pub fn new(default_cap: usize, retry_budget: usize) -> Self {
        Self {
            monitors: BTreeMap::new(),
            load: BTreeMap::new(),
            caps: BTreeMap::new(),
            default_cap: default_cap.max(1),
            retry_budget,
        }
    }

    pub fn set_cap(&mut self, provider: &str, cap: usize) {
        self.caps.insert(provider.to_string(), cap.max(1));
    }

    pub fn load(&self, provider: &str) -> usize {
        self.load.get(provider).copied().unwrap_or(0)
    }

    pub fn is_monitored(&self, conversation: &str) -> bool {
        self.monitors.contains_key(conversation)
    }

    pub fn customer_of(&self, conversation: &str) -> Option<&str> {
        self.monitors.get(conversation).map(|m| m.customer.as_str())
    }

    /// Provider currently executing the monitored invocation.
    pub fn current(&self, conversation: &str) -> Option<(&str, &str)> {
        self.monitors
            .get(conversation)
            .and_then(|m| m.current.as_ref())
            .map(|(s, p)| (s.as_str(), p.as_str()))
    }

    pub fn report(&self, conversation: &str) -> Option<&InterventionReport> {
        self.monitors.get(conversation).map(|m| &m.report)
    }

    pub fn reports(&self) -> impl Iterator<Item = &InterventionReport> {
        self.monitors.values().map(|m| &m.report)
    }

    /// Registers (or re-registers after a switch) an invocation of
    /// `service_id`. `alternatives` are only taken on first registration.
    pub fn register(
        &mut self,
        conversation: &str,
        customer: &str,
        service_id: &str,
        provider: &str,
        alternatives: Vec<Alternative>,
    ) -> Directive {
        let monitor = self
            .monitors
            .entry(conversation.to_string())
            .or_insert_with(|| Monitor {
                customer: customer.to_string(),
                current: None,
                alternatives: alternatives.into(),
                tried: Vec::new(),
                report: InterventionReport {
                    conversation: conversation.to_string(),
                    actions: Vec::new(),
                    outcome: InterventionOutcome::Pending,
                },
            });
        monitor.tried.push(service_id.to_string());
        let cap = self.caps.get(provider).copied().unwrap_or(self.default_cap);
        let load = self.load.entry(provider.to_string()).or_insert(0);
        if *load >= cap {
            monitor.report.actions.push(BrokerAction::Rebalance {
                provider: provider.to_string(),
                skipped: service_id.to_string(),
            });
            monitor.current = None;
            return Self::next_alternative(monitor, None, "provider at capacity");
        }
        *load += 1;
        monitor.current = Some((service_id.to_string(), provider.to_string()));
        Directive::Forward {
            service_id: service_id.to_string(),
        }
    }

    fn release(&mut self, conversation: &str) {
        if let Some(m) = self.monitors.get_mut(conversation) {
            if let Some((_, provider)) = m.current.take() {
                if let Some(l) = self.load.get_mut(&provider) {
                    *l = l.saturating_sub(1);
                }
            }
        }
    }

    fn next_alternative(monitor: &mut Monitor, failed: Option<&str>, reason: &str) -> Directive {
        let retries = monitor.report.retries();
        while let Some(alt) = monitor.alternatives.pop_front() {
            if monitor.tried.contains(&alt.proposal.service_id) {
                continue;
            }
            if let Some(failed) = failed {
                monitor.report.actions.push(BrokerAction::Retry {
                    failed: failed.to_string(),
                    next: alt.proposal.service_id.clone(),
                    reason: reason.to_string(),
                });
            }
            return Directive::Switch(alt);
        }
        let reason = if retries > 0 || failed.is_some() {
            format!("exhausted alternatives after: {reason}")
        } else {
            reason.to_string()
        };
        monitor.report.outcome = InterventionOutcome::Failed { reason: reason.clone() };
        Directive::Exhausted { reason }
    }

    /// Execution failure or deadline expiry: pick the next ranked alternative
    /// within the retry budget.
    pub fn on_failure(&mut self, conversation: &str, reason: &str) -> Directive {
        let failed = self.current(conversation).map(|(s, _)| s.to_string());
        self.release(conversation);
        let budget = self.retry_budget;
        let Some(monitor) = self.monitors.get_mut(conversation) else {
            return Directive::Exhausted {
                reason: format!("unmonitored conversation {conversation}"),
            };
        };
        if monitor.report.retries() >= budget {
            let reason = format!("retry budget spent: {reason}");
            monitor.report.outcome = InterventionOutcome::Failed { reason: reason.clone() };
            return Directive::Exhausted { reason };
        }
        let failed = failed.or_else(|| monitor.tried.last().cloned()).unwrap_or_default();
        Self::next_alternative(monitor, Some(&failed), reason)
    }

    /// A failure no alternative can fix (e.g. unbindable inputs).
    pub fn on_terminal_failure(&mut self, conversation: &str, reason: &str) {
        self.release(conversation);
        if let Some(m) = self.monitors.get_mut(conversation) {
            m.report.outcome = InterventionOutcome::Failed {
                reason: reason.to_string(),
            };
        }
    }

    pub fn on_success(&mut self, conversation: &str, service_id: &str) {
        self.release(conversation);
        if let Some(m) = self.monitors.get_mut(conversation) {
            m.report.outcome = InterventionOutcome::Succeeded {
                service_id: service_id.to_string(),
            };
        }
    }

    /// Rewrites input annotations through `mapping`, recording one action per
    /// translated concept.
    pub fn translate_inputs(
        &mut self,
        conversation: &str,
        mapping: &ConceptMapping,
        inputs: &[CustomerInput],
    ) -> Result<Vec<CustomerInput>, OntologyError> {
        let mut out = Vec::with_capacity(inputs.len());
        let mut actions = Vec::new();
        for input in inputs {
            let translated = mapping.translate(&input.concept)?.to_string();
            actions.push(BrokerAction::Translate {
                concept: input.concept.clone(),
                translated: translated.clone(),
                source_ontology: mapping.source_ontology().to_string(),
                target_ontology: mapping.target_ontology().to_string(),
            });
            out.push(CustomerInput {
                concept: translated,
                ..input.clone()
            });
        }
        if let Some(m) = self.monitors.get_mut(conversation) {
            m.report.actions.extend(actions);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alt(service: &str, provider: &str) -> Alternative {
        Alternative {
            proposal: Proposal {
                proposal_id: format!("p-{service}"),
                service_id: service.into(),
                offered_attributes: Default::default(),
                valid_until: 100,
                round: 0,
            },
            provider: provider.into(),
        }
    }

    #[test]
    fn success_leaves_empty_report() {
        let mut b = Broker::default();
        assert_eq!(
            b.register("inv-1", "c", "s1", "p1", vec![alt("s2", "p2")]),
            Directive::Forward {
                service_id: "s1".into()
            }
        );
        assert_eq!(b.load("p1"), 1);
        b.on_success("inv-1", "s1");
        let r = b.report("inv-1").unwrap();
        assert!(r.actions.is_empty());
        assert_eq!(b.load("p1"), 0);
    }

    #[test]
    fn failure_switches_to_next_ranked() {
        let mut b = Broker::default();
        b.register("inv-1", "c", "s1", "p1", vec![alt("s1", "p1"), alt("s2", "p2")]);
        match b.on_failure("inv-1", "boom") {
            Directive::Switch(a) => assert_eq!(a.proposal.service_id, "s2"),
            other => panic!("{other:?}"),
        }
        b.register("inv-1", "c", "s2", "p2", vec![]);
        b.on_success("inv-1", "s2");
        assert_eq!(b.report("inv-1").unwrap().retries(), 1);
    }

    #[test]
    fn exhausted_after_last_alternative() {
        let mut b = Broker::default();
        b.register("inv-1", "c", "s1", "p1", vec![]);
        assert!(matches!(b.on_failure("inv-1", "boom"), Directive::Exhausted { .. }));
        assert!(matches!(
            b.report("inv-1").unwrap().outcome,
            InterventionOutcome::Failed { .. }
        ));
    }

    #[test]
    fn cap_rebalances_to_other_provider() {
        let mut b = Broker::default();
        b.set_cap("p1", 1);
        b.register("inv-1", "c", "s1", "p1", vec![]);
        match b.register("inv-2", "c", "s1", "p1", vec![alt("s3", "p3")]) {
            Directive::Switch(a) => assert_eq!(a.proposal.service_id, "s3"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            b.report("inv-2").unwrap().actions[0],
            BrokerAction::Rebalance { .. }
        ));
        assert_eq!(b.load("p1"), 1);
    }

    #[test]
    fn retry_budget_is_enforced() {
        let mut b = Broker::new(4, 1);
        b.register("inv-1", "c", "s1", "p1", vec![alt("s2", "p2"), alt("s3", "p3")]);
        assert!(matches!(b.on_failure("inv-1", "x"), Directive::Switch(_)));
        b.register("inv-1", "c", "s2", "p2", vec![]);
        assert!(matches!(b.on_failure("inv-1", "x"), Directive::Exhausted { .. }));
    }

    #[test]
    fn translation_is_reported() {
        let mut b = Broker::default();
        b.register("inv-1", "c", "s1", "p1", vec![]);
        let m = ConceptMapping::new("fr", "en", vec![("Fret-Maritime".into(), "SeaFreight".into())]).unwrap();
        let out = b
            .translate_inputs("inv-1", &m, &[CustomerInput::new("mode", "Fret-Maritime", "v")])
            .unwrap();
        assert_eq!(out[0].concept, "SeaFreight");
        assert_eq!(b.report("inv-1").unwrap().translations(), 1);
    }
}
