use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::accounts::{AccountRole, AccountStore, Profile, Session};
use super::admin::{assistant_role, AdministratorAgent, Portal};
use super::assistants::{
    service_agent_id, CustomerAgent, InvocationState, NegotiationMode, NegotiationState, NegotiationStatus,
    ProviderAgent, RequestState,
};
use super::broker_agent::BrokerAgent;
use super::central::CentralRegisterEndpoint;
use super::selection_agent::SelectionAgent;
use super::service::ServiceAgent;
use super::{
    AccountEvent, Behavior, Env, Payload, PlatformConfig, PlatformError, Post, RegistryEvent, Secret, ADMINISTRATOR,
    BROKER, CENTRAL_REGISTER, DISCOVERY, PORTAL, SELECTION,
};
use crate::discovery::{DiscoveryAgent, History};
use crate::ontology::OntologyWarehouse;
use crate::registry::{CentralRegister, ServiceDescription, ServiceQuery, SyncReport};
use crate::runtime::{AgentSpec, Kernel, Role, ScriptedScheduler, Trace};
use crate::selection::{Attributes, Contract, ContractStatus, CustomerInput, InterventionReport};

/// What the facade knows about an open session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionInfo {
    pub session: Session,
    pub login: String,
    pub role: AccountRole,
    pub agent_id: String,
}

/// Raw counters behind the scenario metrics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PlatformStats {
    pub discoveries: u64,
    pub local_hits: u64,
    pub discovery_hops: u64,
    pub contracts_concluded: u64,
    pub negotiations_finished: u64,
    pub negotiations_failed: u64,
    pub negotiation_rounds: u64,
}

/// The whole platform in one process: the kernel with its agents, plus the
/// user-facing operations. Every operation sends one message on behalf of
/// a user and runs the kernel until idle.
pub struct Platform {
    kernel: Kernel<Payload, Env>,
    seed: u64,
    runs: u64,
    sessions: BTreeMap<String, SessionInfo>,
    contracts: BTreeMap<String, (Contract, ContractStatus)>,
    data_dir: Option<PathBuf>,
    last_trace: Trace<Payload>,
    scripted: Option<ScriptedScheduler>,
}

fn error_of(post: &Post) -> Option<(&str, &str)> {
    match &post.payload {
        Payload::Error(e) => Some((e.code.as_str(), e.message.as_str())),
        _ => None,
    }
}

fn rejected(code: &str, message: &str) -> PlatformError {
    match code {
        "registry" | "unknown-ontology" => PlatformError::Registry(message.to_string()),
        "invalid-query" => PlatformError::InvalidQuery(message.to_string()),
        _ => PlatformError::Rejected {
            code: code.to_string(),
            message: message.to_string(),
        },
    }
}

impl Platform {
    /// Builds the kernel, spawns the four core agents and restores state
    /// from `config.data_dir` when set.
    pub fn launch(config: PlatformConfig, warehouse: OntologyWarehouse) -> Result<Self, PlatformError> {
        let data_dir = config.data_dir.clone();
        let (central, store, history, contracts) = match &data_dir {
            None => (
                CentralRegister::new(),
                AccountStore::new(config.seed),
                History::in_memory(),
                BTreeMap::new(),
            ),
            Some(dir) => {
                fs::create_dir_all(dir)?;
                (
                    CentralRegister::load_dir(dir)?,
                    AccountStore::open(&dir.join("accounts.jnl"), config.seed)?,
                    History::open(&dir.join("history.jnl")).map_err(PlatformError::Journal)?,
                    load_contracts(dir)?,
                )
            }
        };
        let seed = config.seed;
        let budget = config.message_budget;
        let capacity = config.cache_capacity.max(1);
        let hit_policy = config.hit_policy;
        let (cap, retries) = (config.default_invocation_cap, config.retry_budget);
        let mut env = Env::new(Arc::new(warehouse), central, config);
        for acc in store.accounts() {
            env.directory.insert(acc.account_id.clone(), acc.login.clone());
        }
        for id in contracts.keys() {
            if let Some(n) = id.strip_prefix("ctr-").and_then(|n: &str| n.parse::<u64>().ok()) {
                env.ids.bump_to("ctr", n);
            }
        }
        let services: Vec<ServiceDescription> = env.central.services().cloned().collect();
        let mut kernel = Kernel::new(env);
        kernel.set_budget(budget);
        let mut admin = AdministratorAgent::new(store);
        let mut restored = Vec::new();
        for desc in &services {
            let Some(login) = kernel.env().directory.get(&desc.provider_id).cloned() else {
                continue;
            };
            restored.push((desc.service_id.clone(), desc.provider_id.clone(), login));
        }
        // Provider assistants own the restored service agents.
        let mut providers: BTreeMap<String, ProviderAgent> = BTreeMap::new();
        for (svc, account, login) in &restored {
            providers
                .entry(account.clone())
                .or_insert_with(|| ProviderAgent::new(login, account))
                .adopt(svc);
        }
        for agent in providers.values() {
            admin.mark_live(&AccountRole::Provider.agent_id(agent.login()));
        }
        kernel.spawn(
            AgentSpec::new(ADMINISTRATOR, Role::Administrator, None),
            Box::new(admin),
        )?;
        kernel.spawn(
            AgentSpec::new(DISCOVERY, Role::Discovery, None),
            Box::new(DiscoveryAgent::new(capacity, hit_policy, history)),
        )?;
        kernel.spawn(
            AgentSpec::new(SELECTION, Role::Selection, None),
            Box::new(SelectionAgent::new()),
        )?;
        kernel.spawn(
            AgentSpec::new(BROKER, Role::Broker, None),
            Box::new(BrokerAgent::new(cap, retries)),
        )?;
        kernel.attach(CENTRAL_REGISTER, Box::new(CentralRegisterEndpoint))?;
        kernel.attach(PORTAL, Box::new(Portal))?;
        kernel.subscribe(BROKER, "inv-");
        for (account, agent) in providers {
            let role = AccountRole::Provider;
            let agent_id = role.agent_id(agent.login());
            kernel.spawn(
                AgentSpec::new(&agent_id, assistant_role(role), Some(&account)),
                Box::new(agent),
            )?;
        }
        for (svc, account, login) in &restored {
            kernel.spawn(
                AgentSpec::new(&service_agent_id(svc), Role::Service, Some(account)),
                Box::new(ServiceAgent::new(svc, login, account)),
            )?;
        }
        Ok(Self {
            kernel,
            seed,
            runs: 0,
            sessions: BTreeMap::new(),
            contracts,
            data_dir,
            last_trace: Trace::default(),
            scripted: None,
        })
    }

    pub fn kernel(&self) -> &Kernel<Payload, Env> {
        &self.kernel
    }

    /// Full trace since launch.
    pub fn trace(&self) -> &Trace<Payload> {
        self.kernel.trace()
    }

    /// Trace of the most recent operation.
    pub fn last_trace(&self) -> &Trace<Payload> {
        &self.last_trace
    }

    pub fn config(&self) -> &PlatformConfig {
        &self.kernel.env().config
    }

    pub fn central(&self) -> &CentralRegister {
        &self.kernel.env().central
    }

    pub fn posts(&self) -> &[Post] {
        &self.kernel.env().posts
    }

    pub fn discovery(&self) -> &DiscoveryAgent {
        self.kernel.agent::<DiscoveryAgent>(DISCOVERY).expect("discovery agent")
    }

    pub fn broker(&self) -> &BrokerAgent {
        self.kernel.agent::<BrokerAgent>(BROKER).expect("broker agent")
    }

    pub fn selection(&self) -> &SelectionAgent {
        self.kernel.agent::<SelectionAgent>(SELECTION).expect("selection agent")
    }

    pub fn administrator(&self) -> &AdministratorAgent {
        self.kernel
            .agent::<AdministratorAgent>(ADMINISTRATOR)
            .expect("administrator agent")
    }

    pub fn customer(&self, login: &str) -> Option<&CustomerAgent> {
        self.kernel
            .agent::<CustomerAgent>(&AccountRole::Customer.agent_id(login))
    }

    pub fn provider(&self, login: &str) -> Option<&ProviderAgent> {
        self.kernel
            .agent::<ProviderAgent>(&AccountRole::Provider.agent_id(login))
    }

    pub fn service_agent(&self, service_id: &str) -> Option<&ServiceAgent> {
        self.kernel.agent::<ServiceAgent>(&service_agent_id(service_id))
    }

    pub fn session(&self, session_id: &str) -> Result<&SessionInfo, PlatformError> {
        self.sessions
            .get(session_id)
            .ok_or_else(|| PlatformError::UnknownSession(session_id.to_string()))
    }

    /// Scripts a service agent's behavior (tests and scenarios).
    pub fn set_behavior(&mut self, service_id: &str, behavior: Behavior) {
        self.kernel.env_mut().behaviors.insert(service_id.to_string(), behavior);
    }

    fn next_id(&mut self, prefix: &str) -> String {
        self.kernel.env_mut().ids.next(prefix)
    }

    /// Replaces the seeded scheduler with a scripted one for every later
    /// operation; `None` restores seeded scheduling.
    pub fn script(&mut self, choices: Option<Vec<usize>>) {
        self.scripted = choices.map(ScriptedScheduler::new);
    }

    pub fn scripted(&self) -> Option<&ScriptedScheduler> {
        self.scripted.as_ref()
    }

    fn run(&mut self) -> Result<(), PlatformError> {
        let seed = self.seed.wrapping_add(self.runs);
        self.runs += 1;
        self.last_trace = match self.scripted.as_mut() {
            Some(s) => self.kernel.run_with(s)?,
            None => self.kernel.run_until_idle(seed)?,
        };
        self.collect_contracts();
        self.persist()
    }

    fn reply(&self, agent: &str, conversation: &str) -> Option<&Post> {
        self.kernel
            .env()
            .posts
            .iter()
            .rev()
            .find(|p| p.agent == agent && p.conversation == conversation)
    }

    fn collect_contracts(&mut self) {
        let mut seen = Vec::new();
        for spec in self.kernel.agents() {
            if spec.role != Role::Customer {
                continue;
            }
            if let Some(c) = self.kernel.agent::<CustomerAgent>(&spec.agent_id) {
                seen.extend(c.contracts().map(|r| (r.contract.clone(), r.status)));
            }
        }
        for (c, status) in seen {
            self.contracts.insert(c.contract_id.clone(), (c, status));
        }
    }

    fn persist(&self) -> Result<(), PlatformError> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        self.kernel.env().central.save_dir(dir)?;
        let cdir = dir.join("contracts");
        fs::create_dir_all(&cdir)?;
        for (id, (c, status)) in &self.contracts {
            let path = cdir.join(format!("{id}.ctr"));
            let text = c.to_text(*status);
            if fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
                fs::write(path, text)?;
            }
        }
        Ok(())
    }

    /// Creates an account and its assistant agent; returns the account id.
    pub fn register_account(
        &mut self,
        login: &str,
        password: &str,
        role: AccountRole,
        profile: Profile,
    ) -> Result<String, PlatformError> {
        let conv = self.next_id("reg");
        let event = AccountEvent::Register {
            login: login.to_string(),
            password: Secret::new(password),
            role,
            profile,
        };
        let c = conv.clone();
        self.kernel
            .command::<Portal, _>(PORTAL, move |p, ctx| p.request(&c, event, ctx))?;
        self.run()?;
        let post = self
            .reply(PORTAL, &conv)
            .ok_or_else(|| PlatformError::NoResponse(conv.clone()))?;
        match (&post.payload, error_of(post)) {
            (Payload::AccountEvent(AccountEvent::Created { account_id, .. }), _) => Ok(account_id.clone()),
            (_, Some(("duplicate-login", _))) => Err(PlatformError::DuplicateLogin(login.to_string())),
            (_, Some(("invalid-request", m))) => Err(PlatformError::InvalidRequest(m.to_string())),
            (_, Some((code, m))) => Err(rejected(code, m)),
            _ => Err(PlatformError::NoResponse(conv)),
        }
    }

    /// Checks the credential triple through the administrator and opens a
    /// session. The request comes from the account's assistant when it is
    /// live, otherwise from the portal.
    pub fn authenticate(
        &mut self,
        login: &str,
        password: &str,
        role: AccountRole,
    ) -> Result<SessionInfo, PlatformError> {
        let conv = self.next_id("auth");
        let agent_id = role.agent_id(login);
        let secret = Secret::new(password);
        let c = conv.clone();
        let sender = if self.kernel.contains(&agent_id) {
            match role {
                AccountRole::Customer => self
                    .kernel
                    .command::<CustomerAgent, _>(&agent_id, move |a, ctx| a.authenticate(secret, &c, ctx)),
                AccountRole::Provider => self
                    .kernel
                    .command::<ProviderAgent, _>(&agent_id, move |a, ctx| a.authenticate(secret, &c, ctx)),
            }?;
            agent_id.clone()
        } else {
            let event = AccountEvent::Authenticate {
                login: login.to_string(),
                password: secret,
                role,
            };
            self.kernel
                .command::<Portal, _>(PORTAL, move |p, ctx| p.request(&c, event, ctx))?;
            PORTAL.to_string()
        };
        self.run()?;
        let granted = self
            .reply(&agent_id, &conv)
            .filter(|p| matches!(p.payload, Payload::AccountEvent(AccountEvent::Granted { .. })));
        if let Some(post) = granted {
            let Payload::AccountEvent(AccountEvent::Granted {
                session,
                login,
                role,
                agent_id,
            }) = &post.payload
            else {
                unreachable!()
            };
            let info = SessionInfo {
                session: session.clone(),
                login: login.clone(),
                role: *role,
                agent_id: agent_id.clone(),
            };
            self.sessions
                .retain(|_, s| s.session.account_id != info.session.account_id);
            self.sessions.insert(info.session.session_id.clone(), info.clone());
            return Ok(info);
        }
        let post = self
            .reply(&sender, &conv)
            .ok_or_else(|| PlatformError::NoResponse(conv.clone()))?;
        match error_of(post) {
            Some(("unknown-user", _)) => Err(PlatformError::UnknownUser(login.to_string())),
            Some(("wrong-credentials", _)) => Err(PlatformError::WrongCredentials),
            Some((code, m)) => Err(rejected(code, m)),
            None => Err(PlatformError::NoResponse(conv)),
        }
    }

    pub fn rotate_credential(&mut self, session_id: &str, old: &str, new: &str) -> Result<(), PlatformError> {
        let info = self.session(session_id)?.clone();
        let conv = self.next_id("rot");
        let (old, new) = (Secret::new(old), Secret::new(new));
        let c = conv.clone();
        match info.role {
            AccountRole::Customer => self
                .kernel
                .command::<CustomerAgent, _>(&info.agent_id, move |a, ctx| a.rotate(old, new, &c, ctx)),
            AccountRole::Provider => self
                .kernel
                .command::<ProviderAgent, _>(&info.agent_id, move |a, ctx| a.rotate(old, new, &c, ctx)),
        }?;
        self.run()?;
        let post = self
            .reply(&info.agent_id, &conv)
            .ok_or_else(|| PlatformError::NoResponse(conv.clone()))?;
        match (&post.payload, error_of(post)) {
            (Payload::AccountEvent(AccountEvent::Rotated { .. }), _) => Ok(()),
            (_, Some(("wrong-credentials", _))) => Err(PlatformError::WrongCredentials),
            (_, Some((code, m))) => Err(rejected(code, m)),
            _ => Err(PlatformError::NoResponse(conv)),
        }
    }

    fn customer_session(&self, session_id: &str) -> Result<SessionInfo, PlatformError> {
        let info = self.session(session_id)?;
        if info.role != AccountRole::Customer {
            return Err(PlatformError::NotACustomer);
        }
        Ok(info.clone())
    }

    fn provider_session(&self, session_id: &str) -> Result<SessionInfo, PlatformError> {
        let info = self.session(session_id)?;
        if info.role != AccountRole::Provider {
            return Err(PlatformError::NotAProvider);
        }
        Ok(info.clone())
    }

    fn with_customer<R>(
        &mut self,
        info: &SessionInfo,
        f: impl FnOnce(&mut CustomerAgent, &mut crate::runtime::Context<'_, Payload, Env>) -> R,
    ) -> Result<R, PlatformError> {
        Ok(self.kernel.command::<CustomerAgent, _>(&info.agent_id, f)?)
    }

    fn customer_agent(&self, info: &SessionInfo) -> &CustomerAgent {
        self.kernel
            .agent::<CustomerAgent>(&info.agent_id)
            .expect("live customer agent")
    }

    /// Sends the query to discovery and lets discovery, selection and the
    /// CFP round finish. Returns the request id.
    pub fn submit_request(&mut self, session_id: &str, query: ServiceQuery) -> Result<String, PlatformError> {
        let info = self.customer_session(session_id)?;
        query
            .validate_shape()
            .map_err(|e| PlatformError::InvalidQuery(e.to_string()))?;
        let request_id = self.next_id("req");
        let r = request_id.clone();
        self.with_customer(&info, move |a, ctx| a.submit(&r, query, ctx))?;
        self.run()?;
        Ok(request_id)
    }

    /// Discovery results and ranking of a request.
    pub fn results(&self, session_id: &str, request_id: &str) -> Result<RequestState, PlatformError> {
        let info = self.customer_session(session_id)?;
        self.customer_agent(&info)
            .request(request_id)
            .cloned()
            .ok_or_else(|| PlatformError::UnknownRequest(request_id.to_string()))
    }

    pub fn publish_service(&mut self, session_id: &str, draft: ServiceDescription) -> Result<String, PlatformError> {
        let info = self.provider_session(session_id)?;
        let conv = self.next_id("pub");
        let c = conv.clone();
        self.kernel
            .command::<ProviderAgent, _>(&info.agent_id, move |a, ctx| a.publish(draft, &c, ctx))?;
        self.run()?;
        let post = self
            .reply(&info.agent_id, &conv)
            .ok_or_else(|| PlatformError::NoResponse(conv.clone()))?;
        match (&post.payload, error_of(post)) {
            (Payload::RegistryEvent(RegistryEvent::Published { service_id, .. }), _) => Ok(service_id.clone()),
            (_, Some((code, m))) => Err(rejected(code, m)),
            _ => Err(PlatformError::NoResponse(conv)),
        }
    }

    pub fn withdraw_service(&mut self, session_id: &str, service_id: &str) -> Result<(), PlatformError> {
        let info = self.provider_session(session_id)?;
        let conv = self.next_id("pub");
        let (c, s) = (conv.clone(), service_id.to_string());
        self.kernel
            .command::<ProviderAgent, _>(&info.agent_id, move |a, ctx| a.withdraw(&s, &c, ctx))?;
        self.run()?;
        let post = self
            .reply(&info.agent_id, &conv)
            .ok_or_else(|| PlatformError::NoResponse(conv.clone()))?;
        match (&post.payload, error_of(post)) {
            (Payload::RegistryEvent(RegistryEvent::Withdrawn { .. }), _) => Ok(()),
            (_, Some((code, m))) => Err(rejected(code, m)),
            _ => Err(PlatformError::NoResponse(conv)),
        }
    }

    /// Opens a negotiation with the chosen service; in `Auto` mode it runs to
    /// completion. Returns the negotiation id.
    pub fn choose_service(
        &mut self,
        session_id: &str,
        request_id: &str,
        service_id: &str,
        mode: NegotiationMode,
    ) -> Result<String, PlatformError> {
        let info = self.customer_session(session_id)?;
        let negotiation_id = self.next_id("neg");
        let (r, s, n) = (request_id.to_string(), service_id.to_string(), negotiation_id.clone());
        self.with_customer(&info, move |a, ctx| a.choose(&r, &s, &n, mode, ctx))?
            .map_err(PlatformError::InvalidRequest)?;
        self.run()?;
        Ok(negotiation_id)
    }

    pub fn negotiation(&self, session_id: &str, negotiation_id: &str) -> Result<NegotiationState, PlatformError> {
        let info = self.customer_session(session_id)?;
        self.customer_agent(&info)
            .negotiation(negotiation_id)
            .cloned()
            .ok_or_else(|| PlatformError::UnknownNegotiation(negotiation_id.to_string()))
    }

    /// Customer move in a manual negotiation: `Some(offer)` counters with
    /// custom terms, `None` lets the policy decide.
    pub fn negotiate_step(
        &mut self,
        session_id: &str,
        negotiation_id: &str,
        offer: Option<Attributes>,
    ) -> Result<NegotiationState, PlatformError> {
        let info = self.customer_session(session_id)?;
        let n = negotiation_id.to_string();
        self.with_customer(&info, move |a, ctx| a.step(&n, offer, ctx))?
            .map_err(PlatformError::Negotiation)?;
        self.run()?;
        self.negotiation(session_id, negotiation_id)
    }

    pub fn accept(&mut self, session_id: &str, negotiation_id: &str) -> Result<NegotiationState, PlatformError> {
        let info = self.customer_session(session_id)?;
        let n = negotiation_id.to_string();
        self.with_customer(&info, move |a, ctx| a.accept(&n, ctx))?
            .map_err(PlatformError::Negotiation)?;
        self.run()?;
        self.negotiation(session_id, negotiation_id)
    }

    pub fn reject(&mut self, session_id: &str, negotiation_id: &str) -> Result<NegotiationState, PlatformError> {
        let info = self.customer_session(session_id)?;
        let n = negotiation_id.to_string();
        self.with_customer(&info, move |a, ctx| a.reject(&n, ctx))?
            .map_err(PlatformError::Negotiation)?;
        self.run()?;
        self.negotiation(session_id, negotiation_id)
    }

    /// Contract concluded by a finished negotiation, if any.
    pub fn negotiated_contract(
        &self,
        session_id: &str,
        negotiation_id: &str,
    ) -> Result<Option<Contract>, PlatformError> {
        let state = self.negotiation(session_id, negotiation_id)?;
        Ok(match state.status {
            NegotiationStatus::Agreed { contract_id } => self.contracts.get(&contract_id).map(|(c, _)| c.clone()),
            _ => None,
        })
    }

    /// Invokes a contracted service under broker monitoring. Returns the
    /// invocation id.
    pub fn invoke(
        &mut self,
        session_id: &str,
        contract_id: &str,
        inputs: Vec<CustomerInput>,
        ontology_id: &str,
    ) -> Result<String, PlatformError> {
        let info = self.customer_session(session_id)?;
        let invocation_id = self.next_id("inv");
        let (i, c, o) = (invocation_id.clone(), contract_id.to_string(), ontology_id.to_string());
        self.with_customer(&info, move |a, ctx| a.invoke(&i, &c, inputs, &o, ctx))?
            .map_err(|_| PlatformError::UnknownContract(contract_id.to_string()))?;
        self.run()?;
        Ok(invocation_id)
    }

    pub fn invocation(&self, session_id: &str, invocation_id: &str) -> Result<InvocationState, PlatformError> {
        let info = self.customer_session(session_id)?;
        self.customer_agent(&info)
            .invocation(invocation_id)
            .cloned()
            .ok_or_else(|| PlatformError::UnknownInvocation(invocation_id.to_string()))
    }

    pub fn broker_report(&self, invocation_id: &str) -> Option<&InterventionReport> {
        self.broker().report(invocation_id)
    }

    pub fn contract(&self, contract_id: &str) -> Result<&(Contract, ContractStatus), PlatformError> {
        self.contracts
            .get(contract_id)
            .ok_or_else(|| PlatformError::UnknownContract(contract_id.to_string()))
    }

    pub fn contracts(&self) -> impl Iterator<Item = &(Contract, ContractStatus)> {
        self.contracts.values()
    }

    /// Administrator-driven reconciliation of the local register.
    pub fn sync(&mut self) -> Result<SyncReport, PlatformError> {
        let conv = self.next_id("sync");
        let c = conv.clone();
        self.kernel
            .command::<AdministratorAgent, _>(ADMINISTRATOR, move |a, ctx| a.request_sync(&c, ctx))?;
        self.run()?;
        Ok(self.administrator().last_sync().cloned().unwrap_or_default())
    }

    pub fn stats(&self) -> PlatformStats {
        let mut s = PlatformStats::default();
        let (local, total) = self.discovery().history().hits();
        s.discoveries = total;
        s.local_hits = local;
        for spec in self.kernel.agents() {
            if spec.role != Role::Customer {
                continue;
            }
            let Some(c) = self.kernel.agent::<CustomerAgent>(&spec.agent_id) else {
                continue;
            };
            for r in c.requests() {
                if let Some(list) = &r.discovery {
                    s.discovery_hops += u64::from(list.hops);
                }
            }
            for n in c.negotiations() {
                match &n.status {
                    NegotiationStatus::Agreed { .. } => {
                        s.contracts_concluded += 1;
                        s.negotiations_finished += 1;
                        s.negotiation_rounds += u64::from(n.standing().map_or(0, |o| o.round));
                    }
                    NegotiationStatus::NoAgreement | NegotiationStatus::Failed { .. } => {
                        s.negotiations_failed += 1;
                        s.negotiations_finished += 1;
                        s.negotiation_rounds += u64::from(n.standing().map_or(0, |o| o.round));
                    }
                    _ => {}
                }
            }
        }
        s
    }
}

fn load_contracts(dir: &Path) -> Result<BTreeMap<String, (Contract, ContractStatus)>, PlatformError> {
    let mut out = BTreeMap::new();
    let cdir = dir.join("contracts");
    if !cdir.exists() {
        return Ok(out);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(&cdir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "ctr"))
        .collect();
    paths.sort();
    for path in paths {
        let text = fs::read_to_string(&path)?;
        let (c, status) =
            Contract::from_text(&text).map_err(|e| PlatformError::Journal(format!("{}: {e}", path.display())))?;
        out.insert(c.contract_id.clone(), (c, status));
    }
    Ok(out)
}
