use std::any::Any;
use std::collections::BTreeMap;

use super::{Behavior, Env, FailureKind, InvocationPayload, Payload, ProposalPayload};
use crate::ontology::MatchDegree;
use crate::runtime::{AclMessage, Agent, Context, Performative};
use crate::selection::{bind_inputs, execute_stub, Contract, ContractStatus, Move, Negotiator, Offer, Party, Proposal};

struct ProviderSide {
    negotiator: Negotiator,
    history: Vec<Offer>,
    closed: bool,
}

/// Represents one published service: answers CFPs with the provider's
/// opening offer, negotiates on the provider's behalf and executes the
/// (stubbed) service body.
pub struct ServiceAgent {
    service_id: String,
    provider_login: String,
    provider_account: String,
    openings: BTreeMap<String, ProposalPayload>,
    sessions: BTreeMap<String, ProviderSide>,
    contracts: BTreeMap<String, (Contract, ContractStatus)>,
    executions: u64,
}

impl ServiceAgent {
    pub fn new(service_id: &str, provider_login: &str, provider_account: &str) -> Self {
        Self {
            service_id: service_id.to_string(),
            provider_login: provider_login.to_string(),
            provider_account: provider_account.to_string(),
            openings: BTreeMap::new(),
            sessions: BTreeMap::new(),
            contracts: BTreeMap::new(),
            executions: 0,
        }
    }

    pub fn service_id(&self) -> &str {
        &self.service_id
    }

    pub fn contracts(&self) -> impl Iterator<Item = &(Contract, ContractStatus)> {
        self.contracts.values()
    }

    pub fn executions(&self) -> u64 {
        self.executions
    }

    pub fn history(&self, negotiation_id: &str) -> Option<&[Offer]> {
        self.sessions.get(negotiation_id).map(|s| s.history.as_slice())
    }

    fn on_cfp(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let Payload::Query(q) = &msg.content else { return };
        let Some(desc) = ctx.env.central.get(&self.service_id).cloned() else {
            ctx.reply(
                msg,
                Performative::Failure,
                Payload::error("withdrawn", format!("{} is withdrawn", self.service_id)),
            );
            return;
        };
        let policy = match ctx.env.policy_for(&self.provider_login) {
            Ok(p) => p,
            Err(e) => {
                ctx.reply(
                    msg,
                    Performative::Failure,
                    Payload::error("invalid-policy", e.to_string()),
                );
                return;
            }
        };
        let limit = policy.max_rounds;
        let opening = Negotiator::provider(policy, limit)
            .ok()
            .and_then(|mut n| n.opening(q.query.preferences.attributes(), &desc.attributes));
        let Some(offered) = opening else {
            ctx.reply(
                msg,
                Performative::Failure,
                Payload::error("cannot-offer", "the CFP names an attribute the service cannot quote"),
            );
            return;
        };
        let degree = q
            .matches
            .iter()
            .find(|m| m.service.service_id == self.service_id)
            .map(|m| m.degree)
            .unwrap_or(MatchDegree::Exact);
        let payload = ProposalPayload {
            request_id: q.request_id.clone(),
            proposal: Proposal {
                proposal_id: format!("{}/{}", q.request_id, self.service_id),
                service_id: self.service_id.clone(),
                offered_attributes: offered,
                valid_until: ctx.now() + ctx.env.config.proposal_lifetime,
                round: 0,
            },
            degree,
            service_agent: ctx.me().to_string(),
            provider_login: self.provider_login.clone(),
            provider_account: self.provider_account.clone(),
            customer_account: q.query.requester.clone(),
            round_limit: limit,
        };
        self.openings
            .insert(payload.proposal.proposal_id.clone(), payload.clone());
        ctx.reply(msg, Performative::Propose, Payload::Proposal(payload));
    }

    fn on_offer(&mut self, msg: &AclMessage<Payload>, p: &ProposalPayload, ctx: &mut Context<'_, Payload, Env>) {
        let conv = msg.conversation_id.clone();
        if !self.sessions.contains_key(&conv) {
            let Some(opening) = self.openings.get(&p.proposal.proposal_id) else {
                ctx.reply(msg, Performative::RejectProposal, Payload::Proposal(p.clone()));
                return;
            };
            let built = ctx
                .env
                .policy_for(&self.provider_login)
                .and_then(|policy| Negotiator::provider(policy, p.round_limit.max(1)));
            let mut negotiator = match built {
                Ok(n) => n,
                Err(_) => {
                    ctx.reply(msg, Performative::RejectProposal, Payload::Proposal(p.clone()));
                    return;
                }
            };
            negotiator.record_own(opening.proposal.offered_attributes.clone());
            let history = vec![Offer {
                by: Party::Provider,
                round: opening.proposal.round,
                attributes: opening.proposal.offered_attributes.clone(),
            }];
            self.sessions.insert(
                conv.clone(),
                ProviderSide {
                    negotiator,
                    history,
                    closed: false,
                },
            );
        }
        let side = self.sessions.get_mut(&conv).expect("inserted above");
        if side.closed {
            return;
        }
        let offer = Offer {
            by: Party::Customer,
            round: p.proposal.round,
            attributes: p.proposal.offered_attributes.clone(),
        };
        side.history.push(offer.clone());
        match side.negotiator.respond(&offer) {
            Move::Accept => {
                ctx.reply(msg, Performative::AcceptProposal, Payload::Proposal(p.clone()));
            }
            Move::Counter(attrs) => {
                let mut next = p.clone();
                next.proposal.offered_attributes = attrs.clone();
                next.proposal.round = p.proposal.round + 1;
                side.history.push(Offer {
                    by: Party::Provider,
                    round: next.proposal.round,
                    attributes: attrs,
                });
                ctx.reply(msg, Performative::Propose, Payload::Proposal(next));
            }
            Move::Reject => {
                side.closed = true;
                ctx.reply(msg, Performative::RejectProposal, Payload::Proposal(p.clone()));
            }
        }
    }

    fn on_execute(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let Payload::Invocation(InvocationPayload::Execute {
            contract,
            inputs,
            ontology_id,
            customer_agent,
        }) = &msg.content
        else {
            return;
        };
        let fail = |failure: FailureKind, detail: String| {
            Payload::Invocation(InvocationPayload::Failed {
                service_id: contract.service_id.clone(),
                failure,
                detail,
            })
        };
        let Some(desc) = ctx.env.central.get(&self.service_id).cloned() else {
            ctx.reply(
                msg,
                Performative::Failure,
                fail(FailureKind::Execution, "service withdrawn".into()),
            );
            return;
        };
        if *ontology_id != desc.ontology_id {
            ctx.reply(
                msg,
                Performative::Failure,
                fail(
                    FailureKind::OntologyMismatch {
                        expected: desc.ontology_id.clone(),
                    },
                    format!("inputs use `{ontology_id}`, service uses `{}`", desc.ontology_id),
                ),
            );
            return;
        }
        let Some(graph) = ctx.env.warehouse.domain(&desc.ontology_id) else {
            ctx.reply(
                msg,
                Performative::Failure,
                fail(FailureKind::Execution, "ontology unavailable".into()),
            );
            return;
        };
        let bindings = match bind_inputs(&graph, &desc.inputs, inputs) {
            Ok(b) => b,
            Err(e) => {
                ctx.reply(msg, Performative::Failure, fail(FailureKind::Unbindable, e.to_string()));
                return;
            }
        };
        match ctx.env.behavior(&self.service_id) {
            Behavior::FailExecution => {
                ctx.reply(
                    msg,
                    Performative::Failure,
                    fail(FailureKind::Execution, "scripted failure".into()),
                );
            }
            Behavior::SilentExecution | Behavior::Unresponsive => {}
            Behavior::Normal => {
                self.executions += 1;
                let outputs = execute_stub(&desc, &bindings, self.executions);
                ctx.send(
                    Performative::Inform,
                    customer_agent,
                    &msg.conversation_id,
                    &desc.ontology_id,
                    Payload::Invocation(InvocationPayload::Result {
                        service_id: self.service_id.clone(),
                        contract_id: contract.contract_id.clone(),
                        bindings,
                        outputs,
                    }),
                );
            }
        }
    }
}

impl Agent<Payload, Env> for ServiceAgent {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        if ctx.env.behavior(&self.service_id) == Behavior::Unresponsive {
            ctx.note(&msg.conversation_id, "unresponsive");
            return;
        }
        match (msg.performative, &msg.content) {
            (Performative::Cfp, _) => self.on_cfp(msg, ctx),
            (Performative::Propose, Payload::Proposal(p)) => {
                let p = p.clone();
                self.on_offer(msg, &p, ctx);
            }
            (Performative::AcceptProposal, Payload::Proposal(p)) => {
                if let Some(side) = self.sessions.get_mut(&msg.conversation_id) {
                    side.closed = true;
                }
                let contract = Contract {
                    contract_id: ctx.env.ids.next("ctr"),
                    customer_account: p.customer_account.clone(),
                    provider_account: self.provider_account.clone(),
                    service_id: self.service_id.clone(),
                    agreed_attributes: p.proposal.offered_attributes.clone(),
                    concluded_at: ctx.now(),
                    negotiation_rounds: p.proposal.round,
                };
                self.contracts
                    .insert(contract.contract_id.clone(), (contract.clone(), ContractStatus::Active));
                ctx.reply(msg, Performative::Agree, Payload::Contract(contract));
            }
            (Performative::Agree, Payload::Contract(c)) => {
                if let Some(side) = self.sessions.get_mut(&msg.conversation_id) {
                    side.closed = true;
                }
                self.contracts
                    .insert(c.contract_id.clone(), (c.clone(), ContractStatus::Active));
            }
            (Performative::RejectProposal, _) => {
                if let Some(side) = self.sessions.get_mut(&msg.conversation_id) {
                    side.closed = true;
                }
            }
            (Performative::Cancel, Payload::Contract(c)) => {
                if let Some(entry) = self.contracts.get_mut(&c.contract_id) {
                    entry.1 = ContractStatus::Cancelled;
                }
                ctx.note(&msg.conversation_id, format!("cancelled {}", c.contract_id));
            }
            (Performative::Request, Payload::Invocation(_)) => self.on_execute(msg, ctx),
            _ => ctx.note(
                &msg.conversation_id,
                format!("unexpected {} {}", msg.performative, msg.content.kind_name()),
            ),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
