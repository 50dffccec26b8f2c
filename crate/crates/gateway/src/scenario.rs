//! Plain-text scenario files and the harness that replays them.
//!
//! ```text
//! # comment
//! seed 42
//! document port-logistics.ont
//! provider portco portco-pw
//! customer acme acme-pw
//! publish portco services/sea-freight.svc
//! query acme t1 queries/transport.q
//! choose acme t1 1
//! choose acme t1 svc-000002
//! ```
//!
//! Paths are relative to the scenario file. `choose` takes a rank (1 is the
//! best-ranked proposal) or a service id and negotiates automatically.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use coopnet_core::ontology::OntologyWarehouse;
use coopnet_core::platform::{
    AccountRole, NegotiationMode, NegotiationStatus, Platform, PlatformConfig, PlatformError,
};
use coopnet_core::registry::{ServiceDescription, ServiceQuery};
use coopnet_core::selection::{Contract, ContractStatus};
use thiserror::Error;

use crate::metrics::MetricsReport;
use crate::protocol::error_code;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}: {1}")]
    Fixture(PathBuf, String),
    #[error("step {step} ({text}): {code}: {message}")]
    Step {
        step: usize,
        text: String,
        code: String,
        message: String,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Choice {
    Rank(usize),
    Service(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Provider {
        login: String,
        password: String,
    },
    Customer {
        login: String,
        password: String,
    },
    Publish {
        provider: String,
        service: ServiceDescription,
    },
    Query {
        customer: String,
        label: String,
        query: ServiceQuery,
    },
    Choose {
        customer: String,
        label: String,
        choice: Choice,
    },
}

impl Step {
    fn describe(&self) -> String {
        match self {
            Step::Provider { login, .. } => format!("provider {login}"),
            Step::Customer { login, .. } => format!("customer {login}"),
            Step::Publish { provider, service } => format!("publish {provider} {}", service.name),
            Step::Query { customer, label, .. } => format!("query {customer} {label}"),
            Step::Choose {
                customer,
                label,
                choice,
            } => match choice {
                Choice::Rank(r) => format!("choose {customer} {label} {r}"),
                Choice::Service(s) => format!("choose {customer} {label} {s}"),
            },
        }
    }

    /// Account and publication steps, which `serve --scenario` preloads.
    pub fn is_setup(&self) -> bool {
        matches!(
            self,
            Step::Provider { .. } | Step::Customer { .. } | Step::Publish { .. }
        )
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub documents: Vec<(PathBuf, String)>,
    pub steps: Vec<Step>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = read(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ScenarioError> {
        let mut scenario = Scenario {
            seed: 0,
            documents: Vec::new(),
            steps: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ScenarioError::Parse { line: i + 1, message };
            let words: Vec<&str> = line.split_whitespace().collect();
            let need = |n: usize| {
                if words.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{}` takes {} arguments", words[0], n - 1)))
                }
            };
            let owned = |k: usize| words[k].to_string();
            match words[0] {
                "seed" => {
                    need(2)?;
                    scenario.seed = words[1].parse().map_err(|_| err(format!("bad seed `{}`", words[1])))?;
                }
                "document" => {
                    need(2)?;
                    let p = base.join(words[1]);
                    let text = read(&p)?;
                    scenario.documents.push((p, text));
                }
                "provider" | "customer" => {
                    need(3)?;
                    let (login, password) = (owned(1), owned(2));
                    scenario.steps.push(if words[0] == "provider" {
                        Step::Provider { login, password }
                    } else {
                        Step::Customer { login, password }
                    });
                }
                "publish" => {
                    need(3)?;
                    let p = base.join(words[2]);
                    let service = ServiceDescription::from_text(&read(&p)?)
                        .map_err(|e| ScenarioError::Fixture(p.clone(), e.to_string()))?;
                    scenario.steps.push(Step::Publish {
                        provider: owned(1),
                        service,
                    });
                }
                "query" => {
                    need(4)?;
                    let p = base.join(words[3]);
                    let query = ServiceQuery::from_text(&read(&p)?)
                        .map_err(|e| ScenarioError::Fixture(p.clone(), e.to_string()))?;
                    scenario.steps.push(Step::Query {
                        customer: owned(1),
                        label: owned(2),
                        query,
                    });
                }
                "choose" => {
                    need(4)?;
                    let choice = match words[3].parse::<usize>() {
                        Ok(0) => return Err(err("ranks start at 1".into())),
                        Ok(r) => Choice::Rank(r),
                        Err(_) => Choice::Service(owned(3)),
                    };
                    scenario.steps.push(Step::Choose {
                        customer: owned(1),
                        label: owned(2),
                        choice,
                    });
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        scenario.check_references()?;
        Ok(scenario)
    }

    fn check_references(&self) -> Result<(), ScenarioError> {
        let mut providers = Vec::new();
        let mut customers = Vec::new();
        let mut labels = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            let bad = |m: String| ScenarioError::Parse {
                line: 0,
                message: format!("step {}: {m}", i + 1),
            };
            match step {
                Step::Provider { login, .. } => providers.push(login),
                Step::Customer { login, .. } => customers.push(login),
                Step::Publish { provider, .. } if !providers.contains(&provider) => {
                    return Err(bad(format!("unknown provider `{provider}`")));
                }
                Step::Query { customer, label, .. } => {
                    if !customers.contains(&customer) {
                        return Err(bad(format!("unknown customer `{customer}`")));
                    }
                    if labels.contains(&label) {
                        return Err(bad(format!("label `{label}` reused")));
                    }
                    labels.push(label);
                }
                Step::Choose { label, .. } if !labels.contains(&label) => {
                    return Err(bad(format!("unknown query label `{label}`")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn warehouse(&self) -> Result<OntologyWarehouse, ScenarioError> {
        OntologyWarehouse::from_documents(self.documents.iter().map(|(_, t)| t.as_str())).map_err(|e| {
            let path = self.documents.first().map(|(p, _)| p.clone()).unwrap_or_default();
            ScenarioError::Fixture(path, e.to_string())
        })
    }

    pub fn launch(&self, config: PlatformConfig) -> Result<Platform, ScenarioError> {
        Platform::launch(config, self.warehouse()?).map_err(|e| ScenarioError::Step {
            step: 0,
            text: "launch".into(),
            code: error_code(&e),
            message: e.to_string(),
        })
    }

    pub fn queries(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Query { .. })).count()
    }
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendError {
    pub code: String,
    pub message: String,
}

impl From<PlatformError> for BackendError {
    fn from(e: PlatformError) -> Self {
        Self {
            code: error_code(&e),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chosen {
    pub negotiation: String,
    pub agreed: Option<String>,
    pub failed: bool,
}

/// The operations a scenario needs, reachable in-process or over the wire.
pub trait Backend {
    fn register(&mut self, login: &str, password: &str, role: AccountRole) -> Result<String, BackendError>;
    /// Returns the session id.
    fn authenticate(&mut self, login: &str, password: &str, role: AccountRole) -> Result<String, BackendError>;
    fn publish(&mut self, session: &str, draft: ServiceDescription) -> Result<String, BackendError>;
    fn submit(&mut self, session: &str, query: ServiceQuery) -> Result<String, BackendError>;
    /// Ranked service ids.
    fn ranked(&mut self, session: &str, request: &str) -> Result<Vec<String>, BackendError>;
    fn choose(&mut self, session: &str, request: &str, service: &str) -> Result<Chosen, BackendError>;
    fn contract(&mut self, session: &str, contract: &str) -> Result<(Contract, ContractStatus), BackendError>;
}

impl Backend for Platform {
    fn register(&mut self, login: &str, password: &str, role: AccountRole) -> Result<String, BackendError> {
        Ok(self.register_account(login, password, role, Default::default())?)
    }

    fn authenticate(&mut self, login: &str, password: &str, role: AccountRole) -> Result<String, BackendError> {
        Ok(Platform::authenticate(self, login, password, role)?.session.session_id)
    }

    fn publish(&mut self, session: &str, draft: ServiceDescription) -> Result<String, BackendError> {
        Ok(self.publish_service(session, draft)?)
    }

    fn submit(&mut self, session: &str, query: ServiceQuery) -> Result<String, BackendError> {
        Ok(self.submit_request(session, query)?)
    }

    fn ranked(&mut self, session: &str, request: &str) -> Result<Vec<String>, BackendError> {
        let state = self.results(session, request)?;
        Ok(state.ranked.iter().map(|r| r.proposal.service_id.clone()).collect())
    }

    fn choose(&mut self, session: &str, request: &str, service: &str) -> Result<Chosen, BackendError> {
        let neg = self.choose_service(session, request, service, NegotiationMode::Auto)?;
        let state = self.negotiation(session, &neg)?;
        let failed = matches!(
            state.status,
            NegotiationStatus::NoAgreement | NegotiationStatus::Failed { .. }
        );
        Ok(Chosen {
            negotiation: neg,
            agreed: match state.status {
                NegotiationStatus::Agreed { contract_id } => Some(contract_id),
                _ => None,
            },
            failed,
        })
    }

    fn contract(&mut self, _session: &str, contract: &str) -> Result<(Contract, ContractStatus), BackendError> {
        Ok(Platform::contract(self, contract)?.clone())
    }
}

/// What a replay produced, independent of the path it ran on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// Contract records in conclusion order.
    pub contracts: Vec<(Contract, ContractStatus)>,
    pub requests: BTreeMap<String, String>,
    pub negotiations: Vec<Chosen>,
}

/// Replays every step (or only setup steps) against `backend`.
pub fn replay<B: Backend + ?Sized>(
    scenario: &Scenario,
    backend: &mut B,
    setup_only: bool,
) -> Result<Outcome, ScenarioError> {
    let mut sessions: BTreeMap<String, String> = BTreeMap::new();
    let mut outcome = Outcome::default();
    for (i, step) in scenario.steps.iter().enumerate() {
        if setup_only && !step.is_setup() {
            continue;
        }
        let fail = |e: BackendError| ScenarioError::Step {
            step: i + 1,
            text: step.describe(),
            code: e.code,
            message: e.message,
        };
        let session = |login: &str| sessions.get(login).cloned().expect("references checked at parse time");
        match step {
            Step::Provider { login, password } | Step::Customer { login, password } => {
                let role = if matches!(step, Step::Provider { .. }) {
                    AccountRole::Provider
                } else {
                    AccountRole::Customer
                };
                backend.register(login, password, role).map_err(fail)?;
                let s = backend.authenticate(login, password, role).map_err(fail)?;
                sessions.insert(login.clone(), s);
            }
            Step::Publish { provider, service } => {
                backend.publish(&session(provider), service.clone()).map_err(fail)?;
            }
            Step::Query { customer, label, query } => {
                let req = backend.submit(&session(customer), query.clone()).map_err(fail)?;
                outcome.requests.insert(label.clone(), req);
            }
            Step::Choose {
                customer,
                label,
                choice,
            } => {
                let s = session(customer);
                let req = outcome.requests[label].clone();
                let service = match choice {
                    Choice::Service(id) => id.clone(),
                    Choice::Rank(r) => {
                        let ranked = backend.ranked(&s, &req).map_err(fail)?;
                        ranked.get(r - 1).cloned().ok_or_else(|| {
                            fail(BackendError {
                                code: "no-such-rank".into(),
                                message: format!("{} proposals ranked", ranked.len()),
                            })
                        })?
                    }
                };
                let chosen = backend.choose(&s, &req, &service).map_err(fail)?;
                if let Some(id) = &chosen.agreed {
                    outcome.contracts.push(backend.contract(&s, id).map_err(fail)?);
                }
                outcome.negotiations.push(chosen);
            }
        }
    }
    Ok(outcome)
}

/// Every concluded contract respects both parties' reservation intervals
/// and the round limit.
pub fn check_contracts(p: &Platform) -> Result<(), ScenarioError> {
    let env = p.kernel().env();
    for (c, _) in p.contracts() {
        for account in [&c.customer_account, &c.provider_account] {
            let Some(login) = env.directory.get(account) else {
                return Err(ScenarioError::Invariant(format!(
                    "{}: unknown party {account}",
                    c.contract_id
                )));
            };
            let policy = env
                .policy_for(login)
                .map_err(|e| ScenarioError::Invariant(format!("{}: {e}", c.contract_id)))?;
            if !policy.within(&c.agreed_attributes) {
                return Err(ScenarioError::Invariant(format!(
                    "{}: terms outside the reservation of {login}",
                    c.contract_id
                )));
            }
            if c.negotiation_rounds > policy.max_rounds {
                return Err(ScenarioError::Invariant(format!(
                    "{}: {} rounds exceed {login}'s limit",
                    c.contract_id, c.negotiation_rounds
                )));
            }
        }
    }
    Ok(())
}

pub struct ScenarioRun {
    pub platform: Platform,
    pub outcome: Outcome,
    pub report: MetricsReport,
}

/// Launches a fresh in-memory platform and replays the whole scenario.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<ScenarioRun, ScenarioError> {
    let config = PlatformConfig {
        seed,
        ..PlatformConfig::default()
    };
    let mut platform = scenario.launch(config)?;
    let outcome = replay(scenario, &mut platform, false)?;
    check_contracts(&platform)?;
    let report = MetricsReport::from_platform(&platform);
    Ok(ScenarioRun {
        platform,
        outcome,
        report,
    })
}
