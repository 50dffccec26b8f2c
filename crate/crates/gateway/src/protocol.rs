//! Newline-delimited JSON requests and responses. One request line yields
//! exactly one response line; each request is one platform operation.

use std::collections::BTreeMap;

use coopnet_core::platform::{
    AccountRole, NegotiationMode, NegotiationState, NegotiationStatus, Platform, PlatformError, Profile, RequestPhase,
    RequestState,
};
use coopnet_core::registry::{Parameter, ServiceDescription, ServiceQuery};
use coopnet_core::selection::{Attributes, Contract, ContractStatus, Direction, Party, Preference, UtilityModel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const MALFORMED: &str = "malformed-request";

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Request {
    Authenticate {
        login: String,
        password: String,
        role: WireRole,
    },
    Register {
        login: String,
        password: String,
        role: WireRole,
        #[serde(default)]
        profile: Option<Profile>,
    },
    Publish {
        session: String,
        service: WireService,
    },
    SubmitRequest {
        session: String,
        query: WireQuery,
    },
    ListResults {
        session: String,
        request: String,
    },
    ChooseService {
        session: String,
        request: String,
        service: String,
        #[serde(default)]
        mode: WireMode,
    },
    NegotiateStep {
        session: String,
        negotiation: String,
        #[serde(default)]
        counter: Option<Attributes>,
    },
    NegotiationStatus {
        session: String,
        negotiation: String,
    },
    Accept {
        session: String,
        negotiation: String,
    },
    Reject {
        session: String,
        negotiation: String,
    },
    ContractStatus {
        session: String,
        contract: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WireRole {
    Customer,
    Provider,
}

impl From<WireRole> for AccountRole {
    fn from(r: WireRole) -> Self {
        match r {
            WireRole::Customer => AccountRole::Customer,
            WireRole::Provider => AccountRole::Provider,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WireMode {
    #[default]
    Auto,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct WireService {
    pub name: String,
    pub category: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub attributes: Attributes,
    pub ontology_id: String,
}

impl WireService {
    pub fn into_draft(self) -> ServiceDescription {
        let params = |m: BTreeMap<String, String>| m.iter().map(|(n, c)| Parameter::new(n, c)).collect();
        ServiceDescription {
            service_id: String::new(),
            provider_id: String::new(),
            name: self.name,
            category: self.category,
            inputs: params(self.inputs),
            outputs: params(self.outputs),
            attributes: self.attributes,
            ontology_id: self.ontology_id,
        }
    }

    pub fn from_description(d: &ServiceDescription) -> Self {
        let params = |v: &[Parameter]| v.iter().map(|p| (p.name.clone(), p.concept.clone())).collect();
        Self {
            name: d.name.clone(),
            category: d.category.clone(),
            inputs: params(&d.inputs),
            outputs: params(&d.outputs),
            attributes: d.attributes.clone(),
            ontology_id: d.ontology_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct WirePreference {
    pub weight: f64,
    pub direction: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct WireQuery {
    pub category: String,
    pub required_outputs: Vec<String>,
    #[serde(default)]
    pub provided_inputs: Vec<String>,
    pub ontology_id: String,
    pub preferences: BTreeMap<String, WirePreference>,
}

impl WireQuery {
    pub fn into_query(self) -> Result<ServiceQuery, String> {
        let mut terms = BTreeMap::new();
        for (attr, p) in self.preferences {
            let direction = Direction::parse(&p.direction).ok_or_else(|| format!("direction `{}`", p.direction))?;
            terms.insert(
                attr,
                Preference {
                    weight: p.weight,
                    direction,
                    min: p.min,
                    max: p.max,
                },
            );
        }
        let preferences = UtilityModel::new(terms).map_err(|e| e.to_string())?;
        Ok(ServiceQuery {
            query_id: String::new(),
            requester: String::new(),
            category: self.category,
            required_outputs: self.required_outputs,
            provided_inputs: self.provided_inputs,
            ontology_id: self.ontology_id,
            preferences,
        })
    }

    pub fn from_query(q: &ServiceQuery) -> Self {
        Self {
            category: q.category.clone(),
            required_outputs: q.required_outputs.clone(),
            provided_inputs: q.provided_inputs.clone(),
            ontology_id: q.ontology_id.clone(),
            preferences: q
                .preferences
                .terms()
                .iter()
                .map(|(a, p)| {
                    let wp = WirePreference {
                        weight: p.weight,
                        direction: p.direction.as_str().to_string(),
                        min: p.min,
                        max: p.max,
                    };
                    (a.clone(), wp)
                })
                .collect(),
        }
    }
}

/// Stable error code for each platform error.
pub fn error_code(e: &PlatformError) -> String {
    match e {
        PlatformError::Runtime(_) => "runtime",
        PlatformError::UnknownSession(_) => "unknown-session",
        PlatformError::NotACustomer => "not-a-customer",
        PlatformError::NotAProvider => "not-a-provider",
        PlatformError::WrongCredentials => "wrong-credentials",
        PlatformError::UnknownUser(_) => "unknown-user",
        PlatformError::DuplicateLogin(_) => "duplicate-login",
        PlatformError::InvalidQuery(_) => "invalid-query",
        PlatformError::InvalidRequest(_) => "invalid-request",
        PlatformError::Registry(_) => "registry",
        PlatformError::UnknownRequest(_) => "unknown-request",
        PlatformError::UnknownNegotiation(_) => "unknown-negotiation",
        PlatformError::UnknownInvocation(_) => "unknown-invocation",
        PlatformError::UnknownContract(_) => "unknown-contract",
        PlatformError::Negotiation(_) => "negotiation",
        PlatformError::Ontology(_) => "ontology",
        PlatformError::Io(_) => "io",
        PlatformError::Journal(_) => "journal",
        PlatformError::NoResponse(_) => "no-response",
        PlatformError::Rejected { code, .. } => return code.clone(),
    }
    .to_string()
}

pub fn failure(code: &str, message: &str) -> Value {
    json!({ "ok": false, "error": code, "message": message })
}

fn from_error(e: PlatformError) -> Value {
    failure(&error_code(&e), &e.to_string())
}

fn ok(mut body: Value) -> Value {
    body.as_object_mut()
        .expect("object body")
        .insert("ok".into(), Value::Bool(true));
    body
}

fn phase(p: &RequestPhase) -> &'static str {
    match p {
        RequestPhase::Discovering => "discovering",
        RequestPhase::Selecting => "selecting",
        RequestPhase::Ranked => "ranked",
        RequestPhase::Empty => "empty",
        RequestPhase::Failed => "failed",
    }
}

fn party(p: Party) -> &'static str {
    match p {
        Party::Customer => "customer",
        Party::Provider => "provider",
    }
}

pub fn results_view(p: &Platform, state: &RequestState) -> Value {
    let discovery = state.discovery.as_ref();
    let rows: Vec<Value> = state
        .ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let svc = p.central().get(&r.proposal.service_id);
            json!({
                "rank": i + 1,
                "service": r.proposal.service_id,
                "name": svc.map(|s| s.name.as_str()),
                "provider": svc.map(|s| s.provider_id.as_str()),
                "degree": r.degree.as_str(),
                "score": r.score,
                "attributes": r.proposal.offered_attributes,
                "proposal": r.proposal.proposal_id,
                "valid-until": r.proposal.valid_until,
            })
        })
        .collect();
    let mut body = json!({
        "request": state.request_id,
        "phase": phase(&state.phase),
        "source": discovery.and_then(|d| d.source).map(|s| s.as_str()),
        "hops": discovery.map(|d| d.hops),
        "results": rows,
    });
    if let Some(e) = &state.error {
        body["failure"] = json!({ "code": e.code, "message": e.message });
    }
    body
}

pub fn negotiation_view(state: &NegotiationState) -> Value {
    let (status, contract, reason) = match &state.status {
        NegotiationStatus::AwaitingContact => ("awaiting-contact", None, None),
        NegotiationStatus::Open => ("open", None, None),
        NegotiationStatus::Accepting => ("accepting", None, None),
        NegotiationStatus::Agreed { contract_id } => ("agreed", Some(contract_id.as_str()), None),
        NegotiationStatus::NoAgreement => ("no-agreement", None, None),
        NegotiationStatus::Failed { reason } => ("failed", None, Some(reason.as_str())),
    };
    let history: Vec<Value> = state
        .history
        .iter()
        .map(|o| json!({ "by": party(o.by), "round": o.round, "attributes": o.attributes }))
        .collect();
    json!({
        "negotiation": state.negotiation_id,
        "request": state.request_id,
        "service": state.service_id,
        "status": status,
        "contract": contract,
        "reason": reason,
        "round-limit": state.round_limit,
        "history": history,
    })
}

pub fn contract_view(c: &Contract, status: ContractStatus) -> Value {
    json!({
        "contract-id": c.contract_id,
        "customer-account": c.customer_account,
        "provider-account": c.provider_account,
        "service-id": c.service_id,
        "agreed-attributes": c.agreed_attributes,
        "concluded-at": c.concluded_at,
        "negotiation-rounds": c.negotiation_rounds,
        "status": match status {
            ContractStatus::Active => "active",
            ContractStatus::Cancelled => "cancelled",
        },
    })
}

/// Runs one request against the platform.
pub fn dispatch(p: &mut Platform, req: Request) -> Value {
    match execute(p, req) {
        Ok(v) => ok(v),
        Err(e) => from_error(e),
    }
}

fn execute(p: &mut Platform, req: Request) -> Result<Value, PlatformError> {
    Ok(match req {
        Request::Authenticate { login, password, role } => {
            let s = p.authenticate(&login, &password, role.into())?;
            json!({
                "session": s.session.session_id,
                "account": s.session.account_id,
                "agent": s.agent_id,
                "role": s.role.as_str(),
            })
        }
        Request::Register {
            login,
            password,
            role,
            profile,
        } => {
            let account = p.register_account(&login, &password, role.into(), profile.unwrap_or_default())?;
            json!({ "account": account })
        }
        Request::Publish { session, service } => {
            let id = p.publish_service(&session, service.into_draft())?;
            json!({ "service": id })
        }
        Request::SubmitRequest { session, query } => {
            let q = query.into_query().map_err(PlatformError::InvalidQuery)?;
            json!({ "request": p.submit_request(&session, q)? })
        }
        Request::ListResults { session, request } => {
            let state = p.results(&session, &request)?;
            results_view(p, &state)
        }
        Request::ChooseService {
            session,
            request,
            service,
            mode,
        } => {
            let mode = match mode {
                WireMode::Auto => NegotiationMode::Auto,
                WireMode::Manual => NegotiationMode::Manual,
            };
            let neg = p.choose_service(&session, &request, &service, mode)?;
            negotiation_view(&p.negotiation(&session, &neg)?)
        }
        Request::NegotiateStep {
            session,
            negotiation,
            counter,
        } => negotiation_view(&p.negotiate_step(&session, &negotiation, counter)?),
        Request::NegotiationStatus { session, negotiation } => {
            negotiation_view(&p.negotiation(&session, &negotiation)?)
        }
        Request::Accept { session, negotiation } => negotiation_view(&p.accept(&session, &negotiation)?),
        Request::Reject { session, negotiation } => negotiation_view(&p.reject(&session, &negotiation)?),
        Request::ContractStatus { session, contract } => {
            let account = p.session(&session)?.session.account_id.clone();
            let (c, status) = p.contract(&contract)?;
            if c.customer_account != account && c.provider_account != account {
                return Err(PlatformError::UnknownContract(contract));
            }
            json!({ "contract": contract_view(c, *status) })
        }
    })
}

/// Parses and runs one line; the answer is always one JSON object.
pub fn handle_line(p: &mut Platform, line: &str) -> Value {
    match serde_json::from_str::<Request>(line) {
        Ok(req) => dispatch(p, req),
        Err(e) => failure(MALFORMED, &e.to_string()),
    }
}
