//! Customer and provider assistant agents, one per account.

use std::any::Any;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::service::ServiceAgent;
use super::{
    AccountEvent, Env, ErrorPayload, FailureKind, InvocationPayload, MatchList, OutputValues, Payload, ProposalPayload,
    QueryPayload, RegistryEvent, Secret, ADMINISTRATOR, BROKER, CENTRAL_REGISTER, DISCOVERY, PLATFORM_ONTOLOGY,
    SELECTION,
};
use crate::ontology::MatchDegree;
use crate::registry::{ServiceDescription, ServiceQuery};
use crate::runtime::{AclMessage, Agent, AgentSpec, Context, Performative, Role};
use crate::selection::{
    Alternative, Attributes, Contract, ContractStatus, CustomerInput, Move, Negotiator, Offer, Party, Proposal,
    RankedProposal,
};

use super::accounts::AccountRole;

fn authenticate(
    login: &str,
    password: Secret,
    role: AccountRole,
    conversation: &str,
    ctx: &mut Context<'_, Payload, Env>,
) {
    ctx.send(
        Performative::Request,
        ADMINISTRATOR,
        conversation,
        PLATFORM_ONTOLOGY,
        Payload::AccountEvent(AccountEvent::Authenticate {
            login: login.to_string(),
            password,
            role,
        }),
    );
}

fn rotate(login: &str, old: Secret, new: Secret, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
    ctx.send(
        Performative::Request,
        ADMINISTRATOR,
        conversation,
        PLATFORM_ONTOLOGY,
        Payload::AccountEvent(AccountEvent::Rotate {
            login: login.to_string(),
            old,
            new,
        }),
    );
}

fn post(msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
    let (now, me) = (ctx.now(), ctx.me().to_string());
    ctx.env
        .post(now, &me, &msg.conversation_id, msg.performative, msg.content.clone());
}

fn post_own(conversation: &str, performative: Performative, payload: Payload, ctx: &mut Context<'_, Payload, Env>) {
    let (now, me) = (ctx.now(), ctx.me().to_string());
    ctx.env.post(now, &me, conversation, performative, payload);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestPhase {
    Discovering,
    Selecting,
    Ranked,
    /// Discovery found nothing.
    Empty,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestState {
    pub request_id: String,
    pub query: ServiceQuery,
    pub phase: RequestPhase,
    pub discovery: Option<MatchList>,
    pub ranked: Vec<RankedProposal>,
    pub error: Option<ErrorPayload>,
}

impl RequestState {
    fn provider_of(&self, service_id: &str) -> Option<&str> {
        self.discovery
            .as_ref()?
            .results
            .iter()
            .find(|m| m.service.service_id == service_id)
            .map(|m| m.service.provider_id.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegotiationMode {
    /// The assistant answers every offer with its policy.
    #[default]
    Auto,
    /// The assistant waits for the user on every turn.
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum NegotiationStatus {
    /// Waiting for the selection agent to name the service agent.
    AwaitingContact,
    /// Offers are being exchanged.
    Open,
    /// The customer accepted; waiting for the provider's AGREE.
    Accepting,
    Agreed {
        contract_id: String,
    },
    NoAgreement,
    Failed {
        reason: String,
    },
}

impl NegotiationStatus {
    pub fn is_final(&self) -> bool {
        matches!(
            self,
            NegotiationStatus::Agreed { .. } | NegotiationStatus::NoAgreement | NegotiationStatus::Failed { .. }
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NegotiationState {
    pub negotiation_id: String,
    pub request_id: String,
    pub service_id: String,
    pub service_agent: Option<String>,
    pub mode: NegotiationMode,
    pub status: NegotiationStatus,
    pub history: Vec<Offer>,
    pub round_limit: u32,
    pub invocation: Option<String>,
    #[serde(skip)]
    negotiator: Option<Negotiator>,
    #[serde(skip)]
    contact: Option<ProposalPayload>,
}

impl NegotiationState {
    pub fn standing(&self) -> Option<&Offer> {
        self.history.last()
    }

    /// Whether the customer has to move.
    pub fn customer_turn(&self) -> bool {
        self.status == NegotiationStatus::Open && self.standing().is_some_and(|o| o.by == Party::Provider)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum InvocationStatus {
    Running { service_id: String },
    Renegotiating { negotiation_id: String },
    Succeeded { service_id: String, outputs: OutputValues },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvocationState {
    pub invocation_id: String,
    pub contract_id: String,
    pub request_id: String,
    pub inputs: Vec<CustomerInput>,
    pub ontology_id: String,
    pub status: InvocationStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractRecord {
    pub contract: Contract,
    pub status: ContractStatus,
    pub service_agent: String,
    pub request_id: String,
}

/// Represents one customer account: enters requests, shows results, drives
/// negotiations and invocations.
pub struct CustomerAgent {
    login: String,
    account_id: String,
    requests: BTreeMap<String, RequestState>,
    negotiations: BTreeMap<String, NegotiationState>,
    invocations: BTreeMap<String, InvocationState>,
    contracts: BTreeMap<String, ContractRecord>,
}

impl CustomerAgent {
    pub fn new(login: &str, account_id: &str) -> Self {
        Self {
            login: login.to_string(),
            account_id: account_id.to_string(),
            requests: BTreeMap::new(),
            negotiations: BTreeMap::new(),
            invocations: BTreeMap::new(),
            contracts: BTreeMap::new(),
        }
    }

    pub fn login(&self) -> &str {
        &self.login
    }

    pub fn request(&self, id: &str) -> Option<&RequestState> {
        self.requests.get(id)
    }

    pub fn requests(&self) -> impl Iterator<Item = &RequestState> {
        self.requests.values()
    }

    pub fn negotiation(&self, id: &str) -> Option<&NegotiationState> {
        self.negotiations.get(id)
    }

    pub fn negotiations(&self) -> impl Iterator<Item = &NegotiationState> {
        self.negotiations.values()
    }

    pub fn invocation(&self, id: &str) -> Option<&InvocationState> {
        self.invocations.get(id)
    }

    pub fn contract(&self, id: &str) -> Option<&ContractRecord> {
        self.contracts.get(id)
    }

    pub fn contracts(&self) -> impl Iterator<Item = &ContractRecord> {
        self.contracts.values()
    }

    pub fn authenticate(&mut self, password: Secret, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
        authenticate(&self.login, password, AccountRole::Customer, conversation, ctx);
    }

    pub fn rotate(&mut self, old: Secret, new: Secret, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
        rotate(&self.login, old, new, conversation, ctx);
    }

    /// Sends the query to the discovery agent.
    pub fn submit(&mut self, request_id: &str, mut query: ServiceQuery, ctx: &mut Context<'_, Payload, Env>) {
        query.requester = self.account_id.clone();
        if query.query_id.is_empty() {
            query.query_id = request_id.to_string();
        }
        let ontology = query.ontology_id.clone();
        self.requests.insert(
            request_id.to_string(),
            RequestState {
                request_id: request_id.to_string(),
                query: query.clone(),
                phase: RequestPhase::Discovering,
                discovery: None,
                ranked: Vec::new(),
                error: None,
            },
        );
        ctx.send(
            Performative::Request,
            DISCOVERY,
            request_id,
            &ontology,
            Payload::Query(QueryPayload {
                request_id: request_id.to_string(),
                query,
                matches: Vec::new(),
            }),
        );
    }

    /// Asks the selection agent for contact with the chosen service's agent.
    pub fn choose(
        &mut self,
        request_id: &str,
        service_id: &str,
        negotiation_id: &str,
        mode: NegotiationMode,
        ctx: &mut Context<'_, Payload, Env>,
    ) -> Result<(), String> {
        let req = self
            .requests
            .get(request_id)
            .ok_or_else(|| format!("unknown request `{request_id}`"))?;
        let ranked = req
            .ranked
            .iter()
            .find(|r| r.proposal.service_id == service_id)
            .ok_or_else(|| format!("`{service_id}` is not in the ranking of `{request_id}`"))?
            .clone();
        let provider = req.provider_of(service_id).unwrap_or_default().to_string();
        self.open_negotiation(
            request_id,
            &ranked.proposal,
            ranked.degree,
            &provider,
            negotiation_id,
            mode,
            None,
            ctx,
        );
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn open_negotiation(
        &mut self,
        request_id: &str,
        proposal: &Proposal,
        degree: MatchDegree,
        provider_account: &str,
        negotiation_id: &str,
        mode: NegotiationMode,
        invocation: Option<&str>,
        ctx: &mut Context<'_, Payload, Env>,
    ) {
        self.negotiations.insert(
            negotiation_id.to_string(),
            NegotiationState {
                negotiation_id: negotiation_id.to_string(),
                request_id: request_id.to_string(),
                service_id: proposal.service_id.clone(),
                service_agent: None,
                mode,
                status: NegotiationStatus::AwaitingContact,
                history: Vec::new(),
                round_limit: 0,
                invocation: invocation.map(String::from),
                negotiator: None,
                contact: None,
            },
        );
        let ontology = ctx.env.negotiation_ontology();
        ctx.send(
            Performative::Request,
            SELECTION,
            negotiation_id,
            &ontology,
            Payload::Proposal(ProposalPayload {
                request_id: request_id.to_string(),
                proposal: proposal.clone(),
                degree,
                service_agent: String::new(),
                provider_login: String::new(),
                provider_account: provider_account.to_string(),
                customer_account: self.account_id.clone(),
                round_limit: 0,
            }),
        );
    }

    fn offer_payload(neg: &NegotiationState, attributes: Attributes, round: u32) -> Option<ProposalPayload> {
        let mut p = neg.contact.clone()?;
        p.proposal.offered_attributes = attributes;
        p.proposal.round = round;
        p.round_limit = neg.round_limit;
        Some(p)
    }

    /// One customer move in manual mode: a custom counter-offer, or the
    /// policy's own move when `offer` is `None`.
    pub fn step(
        &mut self,
        negotiation_id: &str,
        offer: Option<Attributes>,
        ctx: &mut Context<'_, Payload, Env>,
    ) -> Result<(), String> {
        let neg = self
            .negotiations
            .get_mut(negotiation_id)
            .ok_or_else(|| format!("unknown negotiation `{negotiation_id}`"))?;
        if !neg.customer_turn() {
            return Err(format!(
                "negotiation `{negotiation_id}` is not waiting for the customer"
            ));
        }
        match offer {
            None => {
                self.act(negotiation_id, ctx);
                Ok(())
            }
            Some(attrs) => {
                let standing = neg.standing().cloned().expect("customer turn");
                if standing.round >= neg.round_limit {
                    return Err(format!(
                        "round limit {} reached; accept or reject the standing offer",
                        neg.round_limit
                    ));
                }
                if let Some(missing) = standing.attributes.keys().find(|k| !attrs.contains_key(*k)) {
                    return Err(format!("counter-offer lacks attribute `{missing}`"));
                }
                let negotiator = neg.negotiator.as_mut().expect("open negotiation");
                if !negotiator.admissible(&attrs) {
                    return Err("counter-offer lies outside the customer's reservation intervals".into());
                }
                negotiator.record_own(attrs.clone());
                self.send_counter(negotiation_id, attrs, standing.round + 1, ctx);
                Ok(())
            }
        }
    }

    pub fn accept(&mut self, negotiation_id: &str, ctx: &mut Context<'_, Payload, Env>) -> Result<(), String> {
        let neg = self
            .negotiations
            .get_mut(negotiation_id)
            .ok_or_else(|| format!("unknown negotiation `{negotiation_id}`"))?;
        if !neg.customer_turn() {
            return Err(format!("negotiation `{negotiation_id}` has no offer to accept"));
        }
        let standing = neg.standing().cloned().expect("customer turn");
        let payload = Self::offer_payload(neg, standing.attributes, standing.round).expect("contact known");
        neg.status = NegotiationStatus::Accepting;
        let agent = neg.service_agent.clone().expect("contact known");
        let ontology = ctx.env.negotiation_ontology();
        ctx.send(
            Performative::AcceptProposal,
            &agent,
            negotiation_id,
            &ontology,
            Payload::Proposal(payload),
        );
        Ok(())
    }

    /// Walks away from the negotiation.
    pub fn reject(&mut self, negotiation_id: &str, ctx: &mut Context<'_, Payload, Env>) -> Result<(), String> {
        let neg = self
            .negotiations
            .get(negotiation_id)
            .ok_or_else(|| format!("unknown negotiation `{negotiation_id}`"))?;
        if !neg.customer_turn() {
            return Err(format!(
                "negotiation `{negotiation_id}` is not waiting for the customer"
            ));
        }
        self.walk_away(negotiation_id, ctx);
        Ok(())
    }

    fn walk_away(&mut self, negotiation_id: &str, ctx: &mut Context<'_, Payload, Env>) {
        let neg = self.negotiations.get_mut(negotiation_id).expect("known");
        let standing = neg.standing().cloned().expect("offer present");
        let payload = Self::offer_payload(neg, standing.attributes, standing.round).expect("contact known");
        neg.status = NegotiationStatus::NoAgreement;
        let agent = neg.service_agent.clone().expect("contact known");
        let ontology = ctx.env.negotiation_ontology();
        ctx.send(
            Performative::RejectProposal,
            &agent,
            negotiation_id,
            &ontology,
            Payload::Proposal(payload.clone()),
        );
        post_own(
            negotiation_id,
            Performative::RejectProposal,
            Payload::Proposal(payload),
            ctx,
        );
        self.negotiation_ended(negotiation_id, ctx);
    }

    fn send_counter(
        &mut self,
        negotiation_id: &str,
        attrs: Attributes,
        round: u32,
        ctx: &mut Context<'_, Payload, Env>,
    ) {
        let neg = self.negotiations.get_mut(negotiation_id).expect("known");
        let payload = Self::offer_payload(neg, attrs.clone(), round).expect("contact known");
        neg.history.push(Offer {
            by: Party::Customer,
            round,
            attributes: attrs,
        });
        let agent = neg.service_agent.clone().expect("contact known");
        let ontology = ctx.env.negotiation_ontology();
        ctx.send(
            Performative::Propose,
            &agent,
            negotiation_id,
            &ontology,
            Payload::Proposal(payload),
        );
    }

    /// Lets the policy answer the standing provider offer.
    fn act(&mut self, negotiation_id: &str, ctx: &mut Context<'_, Payload, Env>) {
        let neg = self.negotiations.get_mut(negotiation_id).expect("known");
        let standing = neg.standing().cloned().expect("offer present");
        let decision = neg.negotiator.as_mut().expect("open negotiation").respond(&standing);
        match decision {
            Move::Accept => {
                let _ = self.accept(negotiation_id, ctx);
            }
            Move::Counter(attrs) => self.send_counter(negotiation_id, attrs, standing.round + 1, ctx),
            Move::Reject => self.walk_away(negotiation_id, ctx),
        }
    }

    fn on_negotiation(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let id = msg.conversation_id.clone();
        match (msg.performative, &msg.content) {
            (Performative::Inform, Payload::Proposal(contact)) => {
                let query = self
                    .negotiations
                    .get(&id)
                    .and_then(|n| self.requests.get(&n.request_id))
                    .map(|r| r.query.preferences.clone())
                    .unwrap_or_default();
                let policy = ctx.env.policy_for(&self.login);
                let neg = self.negotiations.get_mut(&id).expect("known");
                let built = policy.and_then(|policy| {
                    let limit = policy.max_rounds.min(contact.round_limit.max(1));
                    Negotiator::customer(policy, query, limit)
                });
                post(msg, ctx);
                match built {
                    Err(e) => {
                        neg.status = NegotiationStatus::Failed { reason: e.to_string() };
                        self.negotiation_ended(&id, ctx);
                    }
                    Ok(negotiator) => {
                        neg.round_limit = negotiator.round_limit();
                        neg.negotiator = Some(negotiator);
                        neg.service_agent = Some(contact.service_agent.clone());
                        neg.contact = Some(contact.clone());
                        neg.status = NegotiationStatus::Open;
                        neg.history.push(Offer {
                            by: Party::Provider,
                            round: contact.proposal.round,
                            attributes: contact.proposal.offered_attributes.clone(),
                        });
                        if neg.mode == NegotiationMode::Auto {
                            self.act(&id, ctx);
                        }
                    }
                }
            }
            (Performative::Propose, Payload::Proposal(p)) => {
                let neg = self.negotiations.get_mut(&id).expect("known");
                if neg.status != NegotiationStatus::Open {
                    return;
                }
                neg.history.push(Offer {
                    by: Party::Provider,
                    round: p.proposal.round,
                    attributes: p.proposal.offered_attributes.clone(),
                });
                post(msg, ctx);
                if neg.mode == NegotiationMode::Auto {
                    self.act(&id, ctx);
                }
            }
            (Performative::AcceptProposal, Payload::Proposal(p)) => {
                let contract = Contract {
                    contract_id: ctx.env.ids.next("ctr"),
                    customer_account: self.account_id.clone(),
                    provider_account: p.provider_account.clone(),
                    service_id: p.proposal.service_id.clone(),
                    agreed_attributes: p.proposal.offered_attributes.clone(),
                    concluded_at: ctx.now(),
                    negotiation_rounds: p.proposal.round,
                };
                ctx.reply(msg, Performative::Agree, Payload::Contract(contract.clone()));
                post_own(&id, Performative::Agree, Payload::Contract(contract.clone()), ctx);
                self.concluded(&id, contract, ctx);
            }
            (Performative::Agree, Payload::Contract(contract)) => {
                post(msg, ctx);
                self.concluded(&id, contract.clone(), ctx);
            }
            (Performative::RejectProposal, Payload::Proposal(_)) => {
                let neg = self.negotiations.get_mut(&id).expect("known");
                neg.status = NegotiationStatus::NoAgreement;
                post(msg, ctx);
                self.negotiation_ended(&id, ctx);
            }
            (_, Payload::Error(e)) => {
                let neg = self.negotiations.get_mut(&id).expect("known");
                neg.status = NegotiationStatus::Failed {
                    reason: format!("{}: {}", e.code, e.message),
                };
                post(msg, ctx);
                self.negotiation_ended(&id, ctx);
            }
            _ => ctx.note(
                &id,
                format!("unexpected {} {}", msg.performative, msg.content.kind_name()),
            ),
        }
    }

    fn concluded(&mut self, negotiation_id: &str, contract: Contract, ctx: &mut Context<'_, Payload, Env>) {
        let neg = self.negotiations.get_mut(negotiation_id).expect("known");
        neg.status = NegotiationStatus::Agreed {
            contract_id: contract.contract_id.clone(),
        };
        let agent = neg.service_agent.clone().unwrap_or_default();
        self.contracts.insert(
            contract.contract_id.clone(),
            ContractRecord {
                contract: contract.clone(),
                status: ContractStatus::Active,
                service_agent: agent.clone(),
                request_id: neg.request_id.clone(),
            },
        );
        if let Some(inv) = neg.invocation.clone() {
            let state = self.invocations.get_mut(&inv).expect("linked invocation");
            state.contract_id = contract.contract_id.clone();
            state.status = InvocationStatus::Running {
                service_id: contract.service_id.clone(),
            };
            let payload = InvocationPayload::Start {
                contract,
                inputs: state.inputs.clone(),
                ontology_id: state.ontology_id.clone(),
                service_agent: agent,
                alternatives: Vec::new(),
            };
            let ontology = state.ontology_id.clone();
            ctx.send(
                Performative::Request,
                BROKER,
                &inv,
                &ontology,
                Payload::Invocation(payload),
            );
        }
    }

    /// A negotiation ended without a contract.
    fn negotiation_ended(&mut self, negotiation_id: &str, ctx: &mut Context<'_, Payload, Env>) {
        let neg = &self.negotiations[negotiation_id];
        let Some(inv) = neg.invocation.clone() else {
            return;
        };
        let detail = match &neg.status {
            NegotiationStatus::Failed { reason } => reason.clone(),
            _ => "no agreement".to_string(),
        };
        let service_id = neg.service_id.clone();
        let ontology = self.invocations[&inv].ontology_id.clone();
        ctx.send(
            Performative::Failure,
            BROKER,
            &inv,
            &ontology,
            Payload::Invocation(InvocationPayload::Failed {
                service_id,
                failure: FailureKind::Negotiation,
                detail,
            }),
        );
    }

    /// Starts a monitored invocation of a concluded contract.
    pub fn invoke(
        &mut self,
        invocation_id: &str,
        contract_id: &str,
        inputs: Vec<CustomerInput>,
        ontology_id: &str,
        ctx: &mut Context<'_, Payload, Env>,
    ) -> Result<(), String> {
        let record = self
            .contracts
            .get(contract_id)
            .ok_or_else(|| format!("unknown contract `{contract_id}`"))?;
        if record.status != ContractStatus::Active {
            return Err(format!("contract `{contract_id}` is cancelled"));
        }
        let request_id = record.request_id.clone();
        let alternatives = self
            .requests
            .get(&request_id)
            .map(|req| {
                req.ranked
                    .iter()
                    .filter(|r| r.proposal.service_id != record.contract.service_id)
                    .map(|r| Alternative {
                        proposal: r.proposal.clone(),
                        provider: req.provider_of(&r.proposal.service_id).unwrap_or_default().to_string(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        self.invocations.insert(
            invocation_id.to_string(),
            InvocationState {
                invocation_id: invocation_id.to_string(),
                contract_id: contract_id.to_string(),
                request_id,
                inputs: inputs.clone(),
                ontology_id: ontology_id.to_string(),
                status: InvocationStatus::Running {
                    service_id: record.contract.service_id.clone(),
                },
            },
        );
        ctx.send(
            Performative::Request,
            BROKER,
            invocation_id,
            ontology_id,
            Payload::Invocation(InvocationPayload::Start {
                contract: record.contract.clone(),
                inputs,
                ontology_id: ontology_id.to_string(),
                service_agent: record.service_agent.clone(),
                alternatives,
            }),
        );
        Ok(())
    }

    fn on_invocation(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let id = msg.conversation_id.clone();
        post(msg, ctx);
        match (&msg.performative, &msg.content) {
            (
                Performative::Inform,
                Payload::Invocation(InvocationPayload::Result {
                    service_id, outputs, ..
                }),
            ) => {
                let state = self.invocations.get_mut(&id).expect("known");
                state.status = InvocationStatus::Succeeded {
                    service_id: service_id.clone(),
                    outputs: outputs.clone(),
                };
            }
            (Performative::Inform, Payload::Invocation(InvocationPayload::Retry { next, .. })) => {
                let state = self.invocations.get(&id).expect("known").clone();
                if let Some(record) = self.contracts.get_mut(&state.contract_id) {
                    if record.status == ContractStatus::Active {
                        record.status = ContractStatus::Cancelled;
                        let (agent, contract) = (record.service_agent.clone(), record.contract.clone());
                        let ontology = ctx.env.negotiation_ontology();
                        ctx.send(
                            Performative::Cancel,
                            &agent,
                            &id,
                            &ontology,
                            Payload::Contract(contract.clone()),
                        );
                        post_own(&id, Performative::Cancel, Payload::Contract(contract), ctx);
                    }
                }
                let negotiation_id = ctx.env.ids.next("neg");
                self.invocations.get_mut(&id).expect("known").status = InvocationStatus::Renegotiating {
                    negotiation_id: negotiation_id.clone(),
                };
                let degree = self
                    .requests
                    .get(&state.request_id)
                    .and_then(|r| {
                        r.ranked
                            .iter()
                            .find(|x| x.proposal.service_id == next.proposal.service_id)
                    })
                    .map(|r| r.degree)
                    .unwrap_or(MatchDegree::Exact);
                self.open_negotiation(
                    &state.request_id,
                    &next.proposal,
                    degree,
                    &next.provider,
                    &negotiation_id,
                    NegotiationMode::Auto,
                    Some(&id),
                    ctx,
                );
            }
            (_, Payload::Error(e)) => {
                let state = self.invocations.get_mut(&id).expect("known");
                state.status = InvocationStatus::Failed {
                    reason: format!("{}: {}", e.code, e.message),
                };
            }
            _ => {}
        }
    }

    fn on_request(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let id = msg.conversation_id.clone();
        post(msg, ctx);
        let req = self.requests.get_mut(&id).expect("known");
        match &msg.content {
            Payload::MatchList(list) if msg.sender == DISCOVERY => {
                req.discovery = Some(list.clone());
                if list.results.is_empty() {
                    req.phase = RequestPhase::Empty;
                    return;
                }
                req.phase = RequestPhase::Selecting;
                let payload = QueryPayload {
                    request_id: id.clone(),
                    query: req.query.clone(),
                    matches: list.results.clone(),
                };
                let ontology = req.query.ontology_id.clone();
                ctx.send(
                    Performative::Request,
                    SELECTION,
                    &id,
                    &ontology,
                    Payload::Query(payload),
                );
            }
            Payload::MatchList(list) => {
                req.ranked = list.ranked.clone();
                req.phase = RequestPhase::Ranked;
            }
            Payload::Error(e) => {
                req.error = Some(e.clone());
                req.phase = RequestPhase::Failed;
            }
            _ => {}
        }
    }
}

impl Agent<Payload, Env> for CustomerAgent {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let conv = msg.conversation_id.as_str();
        if self.requests.contains_key(conv) {
            self.on_request(msg, ctx);
        } else if self.negotiations.contains_key(conv) {
            self.on_negotiation(msg, ctx);
        } else if self.invocations.contains_key(conv) {
            self.on_invocation(msg, ctx);
        } else {
            post(msg, ctx);
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Represents one provider account: publishes and updates its services and
/// instantiates one service agent per published service.
pub struct ProviderAgent {
    login: String,
    account_id: String,
    services: Vec<String>,
}

impl ProviderAgent {
    pub fn new(login: &str, account_id: &str) -> Self {
        Self {
            login: login.to_string(),
            account_id: account_id.to_string(),
            services: Vec::new(),
        }
    }

    pub fn login(&self) -> &str {
        &self.login
    }

    pub fn services(&self) -> &[String] {
        &self.services
    }

    pub(crate) fn adopt(&mut self, service_id: &str) {
        if !self.services.iter().any(|s| s == service_id) {
            self.services.push(service_id.to_string());
        }
    }

    pub fn authenticate(&mut self, password: Secret, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
        authenticate(&self.login, password, AccountRole::Provider, conversation, ctx);
    }

    pub fn rotate(&mut self, old: Secret, new: Secret, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
        rotate(&self.login, old, new, conversation, ctx);
    }

    pub fn publish(&mut self, mut draft: ServiceDescription, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
        draft.provider_id = self.account_id.clone();
        draft.service_id.clear();
        let ontology = draft.ontology_id.clone();
        ctx.send(
            Performative::Request,
            CENTRAL_REGISTER,
            conversation,
            &ontology,
            Payload::RegistryEvent(RegistryEvent::Publish { draft }),
        );
    }

    pub fn withdraw(&mut self, service_id: &str, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
        ctx.send(
            Performative::Request,
            CENTRAL_REGISTER,
            conversation,
            PLATFORM_ONTOLOGY,
            Payload::RegistryEvent(RegistryEvent::Withdraw {
                provider_id: self.account_id.clone(),
                service_id: service_id.to_string(),
            }),
        );
    }
}

pub fn service_agent_id(service_id: &str) -> String {
    format!("service-{service_id}")
}

impl Agent<Payload, Env> for ProviderAgent {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        if let Payload::RegistryEvent(RegistryEvent::Published {
            service_id,
            updated: false,
        }) = &msg.content
        {
            self.adopt(service_id);
            ctx.spawn(
                AgentSpec::new(&service_agent_id(service_id), Role::Service, Some(&self.account_id)),
                Box::new(ServiceAgent::new(service_id, &self.login, &self.account_id)),
            );
        }
        post(msg, ctx);
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
