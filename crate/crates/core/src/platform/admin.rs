use std::any::Any;
use std::collections::BTreeSet;

use super::accounts::{AccountRole, AccountStore, AuthFailure};
use super::assistants::{CustomerAgent, ProviderAgent};
use super::{AccountEvent, Env, Payload, RegistryEvent, DISCOVERY, PLATFORM_ONTOLOGY};
use crate::registry::SyncReport;
use crate::runtime::{AclMessage, Agent, AgentSpec, Context, Performative, Role};

pub const WRONG_CREDENTIALS: &str = "the entered login, password or role are erroneous";

/// Manages accounts and sessions, instantiates assistant agents and keeps the
/// local register coherent with the central one.
pub struct AdministratorAgent {
    pub(crate) store: AccountStore,
    live: BTreeSet<String>,
    last_sync: Option<SyncReport>,
    syncs: u64,
}

impl AdministratorAgent {
    pub fn new(store: AccountStore) -> Self {
        Self {
            store,
            live: BTreeSet::new(),
            last_sync: None,
            syncs: 0,
        }
    }

    pub fn accounts(&self) -> &AccountStore {
        &self.store
    }

    pub fn last_sync(&self) -> Option<&SyncReport> {
        self.last_sync.as_ref()
    }

    pub fn sync_count(&self) -> u64 {
        self.syncs
    }

    /// Marks assistants spawned outside the administrator (service restore).
    pub(crate) fn mark_live(&mut self, agent_id: &str) {
        self.live.insert(agent_id.to_string());
    }

    /// Spawns the assistant for `account_id` unless it is already live.
    fn ensure_assistant(&mut self, account_id: &str, ctx: &mut Context<'_, Payload, Env>) -> String {
        let acc = self.store.get(account_id).expect("known account");
        let agent_id = acc.agent_id.clone();
        if self.live.insert(agent_id.clone()) {
            let spec = AgentSpec::new(&agent_id, assistant_role(acc.role), Some(account_id));
            let agent: Box<dyn Agent<Payload, Env>> = match acc.role {
                AccountRole::Customer => Box::new(CustomerAgent::new(&acc.login, account_id)),
                AccountRole::Provider => Box::new(ProviderAgent::new(&acc.login, account_id)),
            };
            ctx.spawn(spec, agent);
        }
        agent_id
    }

    /// Asks the discovery agent to reconcile its local register.
    pub fn request_sync(&mut self, conversation: &str, ctx: &mut Context<'_, Payload, Env>) {
        ctx.send(
            Performative::Request,
            DISCOVERY,
            conversation,
            PLATFORM_ONTOLOGY,
            Payload::RegistryEvent(RegistryEvent::Sync),
        );
    }

    fn on_account(&mut self, msg: &AclMessage<Payload>, event: &AccountEvent, ctx: &mut Context<'_, Payload, Env>) {
        match event {
            AccountEvent::Authenticate { login, password, role } => {
                match self.store.verify(login, password.expose(), *role) {
                    Err(AuthFailure::UnknownUser) => {
                        ctx.reply(
                            msg,
                            Performative::Inform,
                            Payload::error("unknown-user", format!("no account `{login}`; registration required")),
                        );
                    }
                    Err(AuthFailure::WrongCredentials) => {
                        ctx.reply(
                            msg,
                            Performative::Inform,
                            Payload::error("wrong-credentials", WRONG_CREDENTIALS),
                        );
                    }
                    Ok(acc) => {
                        let account_id = acc.account_id.clone();
                        let login = acc.login.clone();
                        let role = acc.role;
                        let agent_id = self.ensure_assistant(&account_id, ctx);
                        let session = self.store.open_session(&account_id, ctx.now());
                        ctx.send(
                            Performative::Inform,
                            &agent_id,
                            &msg.conversation_id,
                            PLATFORM_ONTOLOGY,
                            Payload::AccountEvent(AccountEvent::Granted {
                                session,
                                login,
                                role,
                                agent_id: agent_id.clone(),
                            }),
                        );
                    }
                }
            }
            AccountEvent::Register {
                login,
                password,
                role,
                profile,
            } => match self.store.create(login, password.expose(), *role, profile.clone()) {
                Err(e) => {
                    let code = match e {
                        super::PlatformError::DuplicateLogin(_) => "duplicate-login",
                        _ => "invalid-request",
                    };
                    ctx.reply(msg, Performative::Inform, Payload::error(code, e.to_string()));
                }
                Ok(acc) => {
                    let account_id = acc.account_id.clone();
                    let login = acc.login.clone();
                    ctx.env.directory.insert(account_id.clone(), login.clone());
                    let agent_id = self.ensure_assistant(&account_id, ctx);
                    ctx.send(
                        Performative::Inform,
                        &agent_id,
                        &msg.conversation_id,
                        PLATFORM_ONTOLOGY,
                        Payload::AccountEvent(AccountEvent::Bound {
                            account_id: account_id.clone(),
                            login,
                        }),
                    );
                    ctx.reply(
                        msg,
                        Performative::Inform,
                        Payload::AccountEvent(AccountEvent::Created { account_id, agent_id }),
                    );
                }
            },
            AccountEvent::Rotate { login, old, new } => match self.store.rotate(login, old.expose(), new.expose()) {
                Ok(account_id) => {
                    ctx.reply(
                        msg,
                        Performative::Inform,
                        Payload::AccountEvent(AccountEvent::Rotated { account_id }),
                    );
                }
                Err(e) => {
                    ctx.reply(
                        msg,
                        Performative::Inform,
                        Payload::error("wrong-credentials", e.to_string()),
                    );
                }
            },
            other => ctx.note(&msg.conversation_id, format!("ignored account event {other:?}")),
        }
    }
}

pub(crate) fn assistant_role(role: AccountRole) -> Role {
    match role {
        AccountRole::Customer => Role::Customer,
        AccountRole::Provider => Role::Provider,
    }
}

impl Agent<Payload, Env> for AdministratorAgent {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        match (&msg.performative, &msg.content) {
            (Performative::Request, Payload::AccountEvent(ev)) => self.on_account(msg, ev, ctx),
            (Performative::Inform, Payload::RegistryEvent(RegistryEvent::Changed { .. })) => {
                if ctx.env.config.sync_on_mutation {
                    let conv = format!("{}.sync", msg.conversation_id);
                    self.request_sync(&conv, ctx);
                }
            }
            (Performative::Inform, Payload::RegistryEvent(RegistryEvent::Synced { report })) => {
                self.syncs += 1;
                ctx.note(
                    &msg.conversation_id,
                    format!(
                        "sync refreshed={} removed={}",
                        report.refreshed.len(),
                        report.removed.len()
                    ),
                );
                self.last_sync = Some(report.clone());
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

/// Entry point for people without a live assistant (registration, first
/// login after a restart). Relays replies to the post board.
#[derive(Default)]
pub struct Portal;

impl Portal {
    pub fn request(&mut self, conversation: &str, event: AccountEvent, ctx: &mut Context<'_, Payload, Env>) {
        ctx.send(
            Performative::Request,
            super::ADMINISTRATOR,
            conversation,
            PLATFORM_ONTOLOGY,
            Payload::AccountEvent(event),
        );
    }
}

impl Agent<Payload, Env> for Portal {
    fn handle(&mut self, msg: &AclMessage<Payload>, ctx: &mut Context<'_, Payload, Env>) {
        let now = ctx.now();
        let me = ctx.me().to_string();
        ctx.env
            .post(now, &me, &msg.conversation_id, msg.performative, msg.content.clone());
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
