use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Payload;
use crate::ontology::{OntologyKind, OntologyWarehouse};
use crate::registry::{CentralRegister, HitPolicy};
use crate::runtime::Performative;
use crate::selection::{
    utility_model_from_rules, NegotiationError, NegotiationPolicy, UtilityModel, DEFAULT_INVOCATION_CAP,
    DEFAULT_RETRY_BUDGET, ROUND_BUDGET,
};

pub const ADMINISTRATOR: &str = "administrator";
pub const DISCOVERY: &str = "discovery";
pub const SELECTION: &str = "selection";
pub const BROKER: &str = "broker";
pub const CENTRAL_REGISTER: &str = "central-register";
pub const PORTAL: &str = "portal";

/// Ontology id stamped on messages that carry no domain content.
pub const PLATFORM_ONTOLOGY: &str = "-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformConfig {
    pub seed: u64,
    pub cache_capacity: usize,
    pub hit_policy: HitPolicy,
    /// Ticks the selection agent waits for CFP replies.
    pub cfp_deadline: u64,
    /// Lifetime of a proposal in ticks.
    pub proposal_lifetime: u64,
    /// Ticks the broker waits for an invocation result.
    pub invocation_deadline: u64,
    pub retry_budget: usize,
    pub default_invocation_cap: usize,
    /// Central mutations trigger an administrator sync of the local register.
    pub sync_on_mutation: bool,
    pub message_budget: u64,
    pub data_dir: Option<PathBuf>,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cache_capacity: 8,
            hit_policy: HitPolicy::AnyMatch,
            cfp_deadline: 50,
            proposal_lifetime: 100,
            invocation_deadline: 50,
            retry_budget: DEFAULT_RETRY_BUDGET,
            default_invocation_cap: DEFAULT_INVOCATION_CAP,
            sync_on_mutation: true,
            message_budget: crate::runtime::DEFAULT_BUDGET,
            data_dir: None,
        }
    }
}

/// Scripted behavior of a service agent, for tests and scenarios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    #[default]
    Normal,
    /// Answers CFPs and negotiates, but every execution fails.
    FailExecution,
    /// Answers CFPs and negotiates, but never answers an execution request.
    SilentExecution,
    /// Never answers anything.
    Unresponsive,
}

/// What an assistant (or the portal) shows its human user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Post {
    pub tick: u64,
    pub agent: String,
    pub conversation: String,
    pub performative: Performative,
    pub payload: Payload,
}

#[derive(Debug, Clone, Default)]
pub struct IdAllocator {
    counters: BTreeMap<String, u64>,
}

impl IdAllocator {
    /// `<prefix>-000001`, `<prefix>-000002`, ...
    pub fn next(&mut self, prefix: &str) -> String {
        let n = self.counters.entry(prefix.to_string()).or_insert(0);
        *n += 1;
        format!("{prefix}-{n:06}")
    }

    pub fn bump_to(&mut self, prefix: &str, at_least: u64) {
        let n = self.counters.entry(prefix.to_string()).or_insert(0);
        *n = (*n).max(at_least);
    }
}

/// Platform infrastructure visible to agents: the ontology warehouse
/// (immutable), the central register (mutated only by its endpoint), id
/// counters and the user-facing post board.
pub struct Env {
    pub warehouse: Arc<OntologyWarehouse>,
    pub central: CentralRegister,
    pub config: PlatformConfig,
    pub ids: IdAllocator,
    pub posts: Vec<Post>,
    pub behaviors: BTreeMap<String, Behavior>,
    /// Account id to login, published by the administrator.
    pub directory: BTreeMap<String, String>,
}

impl Env {
    pub fn new(warehouse: Arc<OntologyWarehouse>, central: CentralRegister, config: PlatformConfig) -> Self {
        Self {
            warehouse,
            central,
            config,
            ids: IdAllocator::default(),
            posts: Vec::new(),
            behaviors: BTreeMap::new(),
            directory: BTreeMap::new(),
        }
    }

    pub fn post(&mut self, tick: u64, agent: &str, conversation: &str, performative: Performative, payload: Payload) {
        self.posts.push(Post {
            tick,
            agent: agent.to_string(),
            conversation: conversation.to_string(),
            performative,
            payload,
        });
    }

    pub fn behavior(&self, service_id: &str) -> Behavior {
        self.behaviors.get(service_id).copied().unwrap_or_default()
    }

    /// Id of the first negotiation ontology, used on negotiation messages.
    pub fn negotiation_ontology(&self) -> String {
        self.warehouse
            .graphs()
            .find(|g| g.kind() == OntologyKind::Negotiation)
            .map(|g| g.id().to_string())
            .unwrap_or_else(|| PLATFORM_ONTOLOGY.to_string())
    }

    /// Negotiation policy for `login`; a party without rules accepts any
    /// offer (threshold 0, no reservations).
    pub fn policy_for(&self, login: &str) -> Result<NegotiationPolicy, NegotiationError> {
        let rules: Vec<_> = self
            .warehouse
            .rules_for(login)
            .filter(|r| r.kind != crate::ontology::RuleKind::TaskCapability)
            .collect();
        if rules.is_empty() {
            return Ok(NegotiationPolicy {
                reservation: BTreeMap::new(),
                concession_step: BTreeMap::new(),
                acceptance_threshold: 0.0,
                max_rounds: ROUND_BUDGET,
            });
        }
        NegotiationPolicy::from_rules(rules)
    }

    /// Utility model from `acceptance <attr> weight=...` rules, if any.
    pub fn utility_model_for(&self, login: &str) -> Option<UtilityModel> {
        let rules: Vec<_> = self.warehouse.rules_for(login).collect();
        utility_model_from_rules(rules).ok().filter(|m| !m.terms().is_empty())
    }

    pub fn invocation_cap_for(&self, login: &str) -> usize {
        crate::selection::invocation_cap(self.warehouse.rules_for(login)).unwrap_or(self.config.default_invocation_cap)
    }
}
