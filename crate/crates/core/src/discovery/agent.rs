use std::any::Any;
use std::collections::BTreeMap;

use super::{History, HistoryRecord};
use crate::platform::{Env, MatchList, Payload, QueryPayload, RegistryEvent, Source, CENTRAL_REGISTER};
use crate::registry::{HitPolicy, LocalRegister, Lookup, MatchResult, ServiceQuery};
use crate::runtime::{AclMessage, Agent, Context, Performative};

/// Messages in a discovery answered from the local register.
const LOCAL_HOPS: u32 = 2;
/// Adds the round trip to the central register.
const CENTRAL_HOPS: u32 = 4;

struct Pending {
    customer: String,
    query: ServiceQuery,
}

pub struct DiscoveryAgent {
    local: LocalRegister,
    policy: HitPolicy,
    history: History,
    pending: BTreeMap<String, Pending>,
}

impl DiscoveryAgent {
    pub fn new(capacity: usize, policy: HitPolicy, history: History) -> Self {
        Self {
            local: LocalRegister::new(capacity),
            policy,
            history,
            pending: BTreeMap::new(),
        }
    }

    pub fn local(&self) -> &LocalRegister {
        &self.local
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    fn answer(
        &mut self,
        conv: &str,
        customer: &str,
        query: &ServiceQuery,
        results: Vec<MatchResult>,
        source: Source,
        ctx: &mut Context<'_, Payload, Env>,
    ) {
        let record = HistoryRecord {
            tick: ctx.now(),
            source,
            query: query.canonical(),
            results: results.iter().map(|m| m.service.service_id.clone()).collect(),
        };
        if let Err(e) = self.history.append(record) {
            ctx.note(conv, format!("history-write-failed {e}"));
        }
        let hops = match source {
            Source::Local => LOCAL_HOPS,
            Source::Central => CENTRAL_HOPS,
        };
        ctx.send(
            Performative::Inform,
            customer,
            conv,
            &query.ontology_id,
            Payload::MatchList(MatchList {
                request_id: conv.to_string(),
                results,
                source: Some(source),
                hops,
                ranked: Vec::new(),
            }),
        );
    }

    fn on_query(&mut self, msg: &AclMessage<Payload>, q: &QueryPayload, ctx: &mut Context<'_, Payload, Env>) {
        let conv = msg.conversation_id.clone();
        let Some(graph) = ctx.env.warehouse.domain(&q.query.ontology_id) else {
            ctx.reply(
                msg,
                Performative::Inform,
                Payload::error(
                    "unknown-ontology",
                    format!("unknown ontology `{}`", q.query.ontology_id),
                ),
            );
            return;
        };
        if let Err(e) = q.query.validate(&graph) {
            ctx.reply(
                msg,
                Performative::Inform,
                Payload::error("invalid-query", e.to_string()),
            );
            return;
        }
        match self.local.lookup(&q.query, &graph, self.policy) {
            Lookup::Hit(results) => {
                ctx.note(&conv, format!("local-hit {}", results.len()));
                self.answer(&conv, &msg.sender, &q.query, results, Source::Local, ctx);
            }
            Lookup::Miss => {
                ctx.note(&conv, "local-miss");
                self.pending.insert(
                    conv.clone(),
                    Pending {
                        customer: msg.sender.clone(),
                        query: q.query.clone(),
                    },
                );
                ctx.send(
                    Performative::Request,
                    CENTRAL_REGISTER,
                    &conv,
                    &q.query.ontology_id,
                    Payload::Query(QueryPayload {
                        request_id: conv.clone(),
                        query: q.query.clone(),
                        matches: Vec::new(),
                    }),
                );
            }
        }
    }

    fn on_central(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let conv = msg.conversation_id.clone();
        let Some(p) = self.pending.remove(&conv) else {
            ctx.note(&conv, "central answer without a pending query");
            return;
        };
        match &msg.content {
            Payload::MatchList(list) => {
                let evicted = self.local.feed(&list.results);
                let ids: Vec<&str> = list.results.iter().map(|m| m.service.service_id.as_str()).collect();
                let mut text = format!("cache-feed [{}]", ids.join(","));
                if !evicted.is_empty() {
                    text.push_str(&format!(" evicted [{}]", evicted.join(",")));
                }
                ctx.note(&conv, text);
                let results = list.results.clone();
                self.answer(&conv, &p.customer, &p.query, results, Source::Central, ctx);
            }
            Payload::Error(e) => {
                ctx.send(
                    Performative::Inform,
                    &p.customer,
                    &conv,
                    &p.query.ontology_id,
                    Payload::Error(e.clone()),
                );
            }
            _ => ctx.note(&conv, "unexpected central answer"),
        }
    }
}

impl Agent<Payload, Env> for DiscoveryAgent {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        match (msg.performative, &msg.content) {
            (Performative::Request, Payload::Query(q)) => {
                let q = q.clone();
                self.on_query(msg, &q, ctx);
            }
            (Performative::Inform, _) if msg.sender == CENTRAL_REGISTER => self.on_central(msg, ctx),
            (Performative::Request, Payload::RegistryEvent(RegistryEvent::Sync)) => {
                let report = self.local.sync(&ctx.env.central);
                ctx.reply(
                    msg,
                    Performative::Inform,
                    Payload::RegistryEvent(RegistryEvent::Synced { report }),
                );
            }
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
