use std::any::Any;

use super::{Env, MatchList, Payload, RegistryEvent, Source, ADMINISTRATOR, PLATFORM_ONTOLOGY};
use crate::runtime::{AclMessage, Agent, Context, Performative};

/// Addressable front of the central register. All mutations go through this
/// endpoint's mailbox, so they are serialized.
#[derive(Default)]
pub struct CentralRegisterEndpoint;

impl CentralRegisterEndpoint {
    fn changed(service_id: &str, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        if ctx.env.config.sync_on_mutation {
            ctx.send(
                Performative::Inform,
                ADMINISTRATOR,
                &msg.conversation_id,
                PLATFORM_ONTOLOGY,
                Payload::RegistryEvent(RegistryEvent::Changed {
                    service_id: service_id.to_string(),
                }),
            );
        }
    }
}

impl Agent<Payload, Env> for CentralRegisterEndpoint {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        if msg.performative != Performative::Request {
            return;
        }
        match &msg.content {
            Payload::Query(q) => {
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
                let reply = match ctx.env.central.discover(&q.query, &graph) {
                    Ok(results) => Payload::MatchList(MatchList {
                        request_id: q.request_id.clone(),
                        results,
                        source: Some(Source::Central),
                        hops: 0,
                        ranked: Vec::new(),
                    }),
                    Err(e) => Payload::error("invalid-query", e.to_string()),
                };
                ctx.reply(msg, Performative::Inform, reply);
            }
            Payload::RegistryEvent(RegistryEvent::Publish { draft }) => {
                let Some(graph) = ctx.env.warehouse.domain(&draft.ontology_id) else {
                    ctx.reply(
                        msg,
                        Performative::Inform,
                        Payload::error("unknown-ontology", format!("unknown ontology `{}`", draft.ontology_id)),
                    );
                    return;
                };
                let existing = ctx
                    .env
                    .central
                    .find_by_name(&draft.provider_id, &draft.name)
                    .map(|s| s.service_id.clone());
                let result = match &existing {
                    Some(id) => ctx
                        .env
                        .central
                        .update(&draft.provider_id, id, draft.clone(), &graph)
                        .map(|_| id.clone()),
                    None => ctx.env.central.publish(draft.clone(), &graph),
                };
                match result {
                    Ok(service_id) => {
                        ctx.reply(
                            msg,
                            Performative::Inform,
                            Payload::RegistryEvent(RegistryEvent::Published {
                                service_id: service_id.clone(),
                                updated: existing.is_some(),
                            }),
                        );
                        Self::changed(&service_id, msg, ctx);
                    }
                    Err(e) => {
                        ctx.reply(msg, Performative::Inform, Payload::error("registry", e.to_string()));
                    }
                }
            }
            Payload::RegistryEvent(RegistryEvent::Withdraw {
                provider_id,
                service_id,
            }) => {
                let result = ctx.env.central.withdraw(provider_id, service_id).map(|_| ());
                match result {
                    Ok(()) => {
                        ctx.reply(
                            msg,
                            Performative::Inform,
                            Payload::RegistryEvent(RegistryEvent::Withdrawn {
                                service_id: service_id.clone(),
                            }),
                        );
                        Self::changed(service_id, msg, ctx);
                    }
                    Err(e) => {
                        ctx.reply(msg, Performative::Inform, Payload::error("registry", e.to_string()));
                    }
                }
            }
            other => ctx.note(&msg.conversation_id, format!("unexpected {}", other.kind_name())),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
