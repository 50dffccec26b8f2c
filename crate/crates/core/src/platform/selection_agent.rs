use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};

use super::assistants::service_agent_id;
use super::{Env, MatchList, Payload, ProposalPayload, QueryPayload, BROKER};
use crate::ontology::MatchDegree;
use crate::runtime::{AclMessage, Agent, Context, Performative};
use crate::selection::{rank_services, RankedProposal};

struct CfpRound {
    customer: String,
    query: QueryPayload,
    awaiting: BTreeSet<String>,
    proposals: Vec<ProposalPayload>,
    dropped: Vec<String>,
    closed: bool,
}

/// Runs the call for proposals, ranks the answers by the customer's utility
/// and puts the customer in contact with the chosen service agent.
#[derive(Default)]
pub struct SelectionAgent {
    rounds: BTreeMap<String, CfpRound>,
    rankings: BTreeMap<String, Vec<(RankedProposal, ProposalPayload)>>,
}

impl SelectionAgent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ranking(&self, request_id: &str) -> Option<Vec<&RankedProposal>> {
        self.rankings
            .get(request_id)
            .map(|r| r.iter().map(|(p, _)| p).collect())
    }

    /// Service agents dropped from a CFP round (timeout or refusal).
    pub fn dropped(&self, request_id: &str) -> &[String] {
        self.rounds.get(request_id).map(|r| r.dropped.as_slice()).unwrap_or(&[])
    }

    fn start(&mut self, msg: &AclMessage<Payload>, q: &QueryPayload, ctx: &mut Context<'_, Payload, Env>) {
        let conv = msg.conversation_id.clone();
        if q.matches.is_empty() {
            ctx.reply(
                msg,
                Performative::Inform,
                Payload::error("all-failed", "no services to call"),
            );
            return;
        }
        let mut awaiting = BTreeSet::new();
        for m in &q.matches {
            let agent = service_agent_id(&m.service.service_id);
            let cfp = QueryPayload {
                request_id: q.request_id.clone(),
                query: q.query.clone(),
                matches: vec![m.clone()],
            };
            ctx.send(
                Performative::Cfp,
                &agent,
                &conv,
                &q.query.ontology_id,
                Payload::Query(cfp),
            );
            awaiting.insert(agent);
        }
        ctx.set_timer(&conv, ctx.env.config.cfp_deadline);
        self.rounds.insert(
            conv,
            CfpRound {
                customer: msg.sender.clone(),
                query: q.clone(),
                awaiting,
                proposals: Vec::new(),
                dropped: Vec::new(),
                closed: false,
            },
        );
    }

    fn drop_agent(conv: &str, round: &mut CfpRound, agent: &str, reason: &str, ctx: &mut Context<'_, Payload, Env>) {
        round.awaiting.remove(agent);
        round.dropped.push(agent.to_string());
        ctx.send(
            Performative::Failure,
            BROKER,
            conv,
            &round.query.query.ontology_id,
            Payload::error("no-proposal", format!("{agent}: {reason}")),
        );
    }

    fn finish(&mut self, conv: &str, ctx: &mut Context<'_, Payload, Env>) {
        let round = self.rounds.get_mut(conv).expect("known round");
        if round.closed {
            return;
        }
        round.closed = true;
        ctx.cancel_timer(conv);
        let ontology = round.query.query.ontology_id.clone();
        let customer = round.customer.clone();
        if round.proposals.is_empty() {
            ctx.send(
                Performative::Inform,
                &customer,
                conv,
                &ontology,
                Payload::error("all-failed", "no service agent returned a proposal"),
            );
            return;
        }
        let degrees: BTreeMap<&str, MatchDegree> = round
            .query
            .matches
            .iter()
            .map(|m| (m.service.service_id.as_str(), m.degree))
            .collect();
        let input: Vec<_> = round
            .proposals
            .iter()
            .map(|p| {
                let d = degrees.get(p.proposal.service_id.as_str()).copied().unwrap_or(p.degree);
                (p.proposal.clone(), d)
            })
            .collect();
        match rank_services(&input, &round.query.query.preferences) {
            Ok(ranked) => {
                let with_contacts = ranked
                    .iter()
                    .map(|r| {
                        let p = round
                            .proposals
                            .iter()
                            .find(|p| p.proposal.service_id == r.proposal.service_id)
                            .expect("ranked from these proposals")
                            .clone();
                        (r.clone(), p)
                    })
                    .collect();
                self.rankings.insert(conv.to_string(), with_contacts);
                let results = round.query.matches.clone();
                ctx.send(
                    Performative::Inform,
                    &customer,
                    conv,
                    &ontology,
                    Payload::MatchList(MatchList {
                        request_id: conv.to_string(),
                        results,
                        source: None,
                        hops: 0,
                        ranked,
                    }),
                );
            }
            Err(e) => {
                ctx.send(
                    Performative::Inform,
                    &customer,
                    conv,
                    &ontology,
                    Payload::error("invalid-query", e.to_string()),
                );
            }
        }
    }

    fn contact(&mut self, msg: &AclMessage<Payload>, p: &ProposalPayload, ctx: &mut Context<'_, Payload, Env>) {
        let found = self
            .rankings
            .get(&p.request_id)
            .and_then(|r| r.iter().find(|(rp, _)| rp.proposal.service_id == p.proposal.service_id));
        let Some((_, contact)) = found else {
            ctx.reply(
                msg,
                Performative::Inform,
                Payload::error(
                    "unknown-proposal",
                    format!("no proposal from {} for {}", p.proposal.service_id, p.request_id),
                ),
            );
            return;
        };
        if contact.proposal.valid_until < ctx.now() {
            ctx.reply(
                msg,
                Performative::Inform,
                Payload::error(
                    "expired-proposal",
                    format!(
                        "proposal {} expired at {} (now {})",
                        contact.proposal.proposal_id,
                        contact.proposal.valid_until,
                        ctx.now()
                    ),
                ),
            );
            return;
        }
        let mut contact = contact.clone();
        contact.customer_account = p.customer_account.clone();
        ctx.reply(msg, Performative::Inform, Payload::Proposal(contact));
    }
}

impl Agent<Payload, Env> for SelectionAgent {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let conv = msg.conversation_id.clone();
        match (msg.performative, &msg.content) {
            (Performative::Request, Payload::Query(q)) => self.start(msg, q, ctx),
            (Performative::Request, Payload::Proposal(p)) => self.contact(msg, p, ctx),
            (Performative::Propose, Payload::Proposal(p)) => {
                let Some(round) = self.rounds.get_mut(&conv) else {
                    return;
                };
                if round.closed || !round.awaiting.remove(&msg.sender) {
                    ctx.note(&conv, format!("late proposal from {}", msg.sender));
                    return;
                }
                round.proposals.push(p.clone());
                if round.awaiting.is_empty() {
                    self.finish(&conv, ctx);
                }
            }
            (Performative::Failure, Payload::Error(e)) => {
                let Some(round) = self.rounds.get_mut(&conv) else {
                    return;
                };
                if round.closed || !round.awaiting.contains(&msg.sender) {
                    return;
                }
                Self::drop_agent(&conv, round, &msg.sender, &e.message, ctx);
                if round.awaiting.is_empty() {
                    self.finish(&conv, ctx);
                }
            }
            _ => ctx.note(
                &conv,
                format!("unexpected {} {}", msg.performative, msg.content.kind_name()),
            ),
        }
    }

    fn on_timer(&mut self, token: &str, ctx: &mut Context<'_, Payload, Env>) {
        let Some(round) = self.rounds.get_mut(token) else {
            return;
        };
        if round.closed {
            return;
        }
        let late: Vec<String> = round.awaiting.iter().cloned().collect();
        for agent in late {
            Self::drop_agent(token, round, &agent, "no reply before the deadline", ctx);
        }
        self.finish(token, ctx);
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
