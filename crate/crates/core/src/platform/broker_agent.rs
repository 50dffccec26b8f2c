use std::any::Any;
use std::collections::BTreeMap;

use super::assistants::service_agent_id;
use super::{Env, FailureKind, InvocationPayload, Payload};
use crate::runtime::{AclMessage, Agent, Context, Performative};
use crate::selection::{Alternative, Broker, Contract, CustomerInput, Directive, InterventionReport};

#[derive(Debug, Clone)]
struct Invocation {
    customer: String,
    contract: Contract,
    inputs: Vec<CustomerInput>,
    ontology_id: String,
    service_agent: String,
    translated: bool,
}

/// Watches invocations: forwards them to the contracted service agent,
/// translates inputs across ontologies, and moves the customer to the next
/// ranked service when an execution fails or times out.
pub struct BrokerAgent {
    broker: Broker,
    running: BTreeMap<String, Invocation>,
}

impl BrokerAgent {
    pub fn new(default_cap: usize, retry_budget: usize) -> Self {
        Self {
            broker: Broker::new(default_cap, retry_budget),
            running: BTreeMap::new(),
        }
    }

    pub fn broker(&self) -> &Broker {
        &self.broker
    }

    pub fn report(&self, conversation: &str) -> Option<&InterventionReport> {
        self.broker.report(conversation)
    }

    pub fn reports(&self) -> impl Iterator<Item = &InterventionReport> {
        self.broker.reports()
    }

    fn fail_customer(&mut self, conv: &str, code: &str, reason: &str, ctx: &mut Context<'_, Payload, Env>) {
        let Some(inv) = self.running.remove(conv) else { return };
        ctx.cancel_timer(conv);
        ctx.send(
            Performative::Failure,
            &inv.customer,
            conv,
            &inv.ontology_id,
            Payload::error(code, reason),
        );
    }

    fn execute(&mut self, conv: &str, ctx: &mut Context<'_, Payload, Env>) {
        let inv = &self.running[conv];
        let payload = InvocationPayload::Execute {
            contract: inv.contract.clone(),
            inputs: inv.inputs.clone(),
            ontology_id: inv.ontology_id.clone(),
            customer_agent: inv.customer.clone(),
        };
        let (agent, ontology) = (inv.service_agent.clone(), inv.ontology_id.clone());
        ctx.send(
            Performative::Request,
            &agent,
            conv,
            &ontology,
            Payload::Invocation(payload),
        );
        ctx.set_timer(conv, ctx.env.config.invocation_deadline);
    }

    fn follow(&mut self, conv: &str, directive: Directive, ctx: &mut Context<'_, Payload, Env>) {
        match directive {
            Directive::Forward { .. } => self.execute(conv, ctx),
            Directive::Switch(next) => self.switch(conv, next, ctx),
            Directive::Exhausted { reason } => self.fail_customer(conv, "invocation-failed", &reason, ctx),
        }
    }

    fn switch(&mut self, conv: &str, next: Alternative, ctx: &mut Context<'_, Payload, Env>) {
        let Some(inv) = self.running.get(conv) else { return };
        ctx.cancel_timer(conv);
        let payload = InvocationPayload::Retry {
            failed: inv.contract.service_id.clone(),
            next,
        };
        let (customer, ontology) = (inv.customer.clone(), inv.ontology_id.clone());
        ctx.send(
            Performative::Inform,
            &customer,
            conv,
            &ontology,
            Payload::Invocation(payload),
        );
    }

    fn start(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let Payload::Invocation(InvocationPayload::Start {
            contract,
            inputs,
            ontology_id,
            service_agent,
            alternatives,
        }) = &msg.content
        else {
            return;
        };
        let conv = msg.conversation_id.clone();
        for provider in std::iter::once(&contract.provider_account).chain(alternatives.iter().map(|a| &a.provider)) {
            if let Some(login) = ctx.env.directory.get(provider) {
                let cap = ctx.env.invocation_cap_for(login);
                self.broker.set_cap(provider, cap);
            }
        }
        let agent = if service_agent.is_empty() {
            service_agent_id(&contract.service_id)
        } else {
            service_agent.clone()
        };
        self.running.insert(
            conv.clone(),
            Invocation {
                customer: msg.sender.clone(),
                contract: contract.clone(),
                inputs: inputs.clone(),
                ontology_id: ontology_id.clone(),
                service_agent: agent,
                translated: false,
            },
        );
        let directive = self.broker.register(
            &conv,
            &msg.sender,
            &contract.service_id,
            &contract.provider_account,
            alternatives.clone(),
        );
        self.follow(&conv, directive, ctx);
    }

    fn on_failed(&mut self, conv: &str, failure: &FailureKind, detail: &str, ctx: &mut Context<'_, Payload, Env>) {
        if !self.running.contains_key(conv) {
            return;
        }
        ctx.cancel_timer(conv);
        match failure {
            FailureKind::OntologyMismatch { expected } => {
                let inv = self.running.get(conv).expect("checked above").clone();
                let translated = if inv.translated {
                    None
                } else {
                    ctx.env
                        .warehouse
                        .mapping(&inv.ontology_id, expected)
                        .map(|m| self.broker.translate_inputs(conv, m, &inv.inputs))
                };
                match translated {
                    Some(Ok(inputs)) => {
                        let inv = self.running.get_mut(conv).expect("checked above");
                        inv.inputs = inputs;
                        inv.ontology_id = expected.clone();
                        inv.translated = true;
                        self.execute(conv, ctx);
                    }
                    Some(Err(e)) => {
                        let reason = format!("translation failed: {e}");
                        self.broker.on_terminal_failure(conv, &reason);
                        self.fail_customer(conv, "untranslatable", &reason, ctx);
                    }
                    None => {
                        let reason = format!("no mapping from `{}` to `{expected}`", inv.ontology_id);
                        self.broker.on_terminal_failure(conv, &reason);
                        self.fail_customer(conv, "untranslatable", &reason, ctx);
                    }
                }
            }
            FailureKind::Unbindable => {
                self.broker.on_terminal_failure(conv, detail);
                self.fail_customer(conv, "unbindable-inputs", detail, ctx);
            }
            FailureKind::Execution | FailureKind::Deadline | FailureKind::Negotiation => {
                let directive = self.broker.on_failure(conv, detail);
                self.follow(conv, directive, ctx);
            }
        }
    }
}

impl Agent<Payload, Env> for BrokerAgent {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let conv = msg.conversation_id.clone();
        match (msg.performative, &msg.content) {
            (
                Performative::Request,
                Payload::Invocation(InvocationPayload::Start {
                    contract,
                    service_agent,
                    ..
                }),
            ) => {
                let resumed = self.running.get_mut(&conv).map(|inv| {
                    inv.contract = contract.clone();
                    inv.service_agent = service_agent.clone();
                    inv.translated = false;
                });
                match resumed {
                    Some(()) => {
                        let directive = self.broker.register(
                            &conv,
                            &msg.sender,
                            &contract.service_id,
                            &contract.provider_account,
                            Vec::new(),
                        );
                        self.follow(&conv, directive, ctx);
                    }
                    None => self.start(msg, ctx),
                }
            }
            (Performative::Failure, Payload::Invocation(InvocationPayload::Failed { failure, detail, .. })) => {
                let (failure, detail) = (failure.clone(), detail.clone());
                self.on_failed(&conv, &failure, &detail, ctx);
            }
            (Performative::Failure, Payload::Error(e)) => {
                ctx.note(&conv, format!("dropped {}", e.message));
            }
            _ => ctx.note(
                &conv,
                format!("unexpected {} {}", msg.performative, msg.content.kind_name()),
            ),
        }
    }

    fn on_timer(&mut self, token: &str, ctx: &mut Context<'_, Payload, Env>) {
        if self.running.contains_key(token) && self.broker.current(token).is_some() {
            ctx.note(token, "invocation deadline expired");
            let directive = self.broker.on_failure(token, "no result before the deadline");
            self.follow(token, directive, ctx);
        }
    }

    fn observe(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        if let (Performative::Inform, Payload::Invocation(InvocationPayload::Result { service_id, .. })) =
            (msg.performative, &msg.content)
        {
            let conv = msg.conversation_id.clone();
            if self.running.remove(&conv).is_some() {
                ctx.cancel_timer(&conv);
                self.broker.on_success(&conv, service_id);
            }
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
