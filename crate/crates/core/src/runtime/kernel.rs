use std::any::Any;
use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AclMessage, AgentSpec, Content, Performative, RuntimeError, Trace, TraceEntry};

pub const DEFAULT_BUDGET: u64 = 100_000;

/// An isolated state machine driven by its mailbox.
pub trait Agent<P, E>: Any + Send {
    fn handle(&mut self, msg: &AclMessage<P>, ctx: &mut Context<'_, P, E>);

    fn on_timer(&mut self, _token: &str, _ctx: &mut Context<'_, P, E>) {}

    /// Called after a message in a subscribed conversation is delivered to
    /// someone else.
    fn observe(&mut self, _msg: &AclMessage<P>, _ctx: &mut Context<'_, P, E>) {}

    fn as_any(&self) -> &dyn Any;

    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Picks which runnable mailbox is served next. `runnable` is sorted by id.
pub trait Scheduler {
    fn pick(&mut self, runnable: &[String]) -> usize;
}

pub struct SeededScheduler(ChaCha8Rng);

impl SeededScheduler {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Scheduler for SeededScheduler {
    fn pick(&mut self, runnable: &[String]) -> usize {
        if runnable.len() == 1 {
            0
        } else {
            self.0.gen_range(0..runnable.len())
        }
    }
}

/// Replays a fixed list of choices (0 once exhausted) and records every
/// branching point, for exhaustive interleaving enumeration.
#[derive(Debug, Default, Clone)]
pub struct ScriptedScheduler {
    choices: Vec<usize>,
    position: usize,
    /// `(choice taken, alternatives available)` at each point with more than
    /// one runnable mailbox.
    pub branches: Vec<(usize, usize)>,
}

impl ScriptedScheduler {
    pub fn new(choices: Vec<usize>) -> Self {
        Self {
            choices,
            position: 0,
            branches: Vec::new(),
        }
    }

    /// The next unexplored choice prefix after this run, depth-first.
    pub fn next_prefix(&self) -> Option<Vec<usize>> {
        let mut b = self.branches.clone();
        while let Some((taken, n)) = b.pop() {
            if taken + 1 < n {
                let mut prefix: Vec<usize> = b.iter().map(|(t, _)| *t).collect();
                prefix.push(taken + 1);
                return Some(prefix);
            }
        }
        None
    }
}

impl Scheduler for ScriptedScheduler {
    fn pick(&mut self, runnable: &[String]) -> usize {
        if runnable.len() < 2 {
            return 0;
        }
        let choice = self
            .choices
            .get(self.position)
            .copied()
            .unwrap_or(0)
            .min(runnable.len() - 1);
        self.position += 1;
        self.branches.push((choice, runnable.len()));
        choice
    }
}

pub(crate) enum TimerOp {
    Set { token: String, delay: u64 },
    Cancel { token: String },
}

/// Handle passed to an agent while it processes one event. Side effects are
/// applied by the kernel once the handler returns.
pub struct Context<'a, P, E> {
    pub env: &'a mut E,
    me: String,
    now: u64,
    sends: Vec<AclMessage<P>>,
    spawns: Vec<(AgentSpec, Box<dyn Agent<P, E>>)>,
    timers: Vec<TimerOp>,
    notes: Vec<(String, String)>,
    subscriptions: Vec<String>,
}

impl<'a, P: Content, E> Context<'a, P, E> {
    fn new(env: &'a mut E, me: &str, now: u64) -> Self {
        Self {
            env,
            me: me.to_string(),
            now,
            sends: Vec::new(),
            spawns: Vec::new(),
            timers: Vec::new(),
            notes: Vec::new(),
            subscriptions: Vec::new(),
        }
    }

    pub fn me(&self) -> &str {
        &self.me
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Queues a message; invalid messages are rejected and noted in the trace.
    pub fn send(
        &mut self,
        performative: Performative,
        receiver: &str,
        conversation: &str,
        ontology: &str,
        content: P,
    ) -> bool {
        let msg = AclMessage::new(performative, self.me.clone(), receiver, conversation, ontology, content);
        match msg.check() {
            Ok(()) => {
                self.sends.push(msg);
                true
            }
            Err(e) => {
                self.notes
                    .push((conversation.to_string(), format!("invalid-message {e}")));
                false
            }
        }
    }

    pub fn reply(&mut self, to: &AclMessage<P>, performative: Performative, content: P) -> bool {
        let (receiver, conv, ont) = (to.sender.clone(), to.conversation_id.clone(), to.ontology_id.clone());
        self.send(performative, &receiver, &conv, &ont, content)
    }

    pub fn spawn(&mut self, spec: AgentSpec, agent: Box<dyn Agent<P, E>>) {
        self.spawns.push((spec, agent));
    }

    pub fn set_timer(&mut self, token: &str, delay: u64) {
        self.timers.push(TimerOp::Set {
            token: token.to_string(),
            delay: delay.max(1),
        });
    }

    pub fn cancel_timer(&mut self, token: &str) {
        self.timers.push(TimerOp::Cancel {
            token: token.to_string(),
        });
    }

    pub fn note(&mut self, conversation: &str, text: impl Into<String>) {
        self.notes.push((conversation.to_string(), text.into()));
    }

    /// Observe every later message whose conversation id starts with `prefix`.
    pub fn subscribe(&mut self, prefix: &str) {
        self.subscriptions.push(prefix.to_string());
    }
}

struct Slot<P, E> {
    spec: Option<AgentSpec>,
    agent: Option<Box<dyn Agent<P, E>>>,
    mailbox: VecDeque<AclMessage<P>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Accepted,
    DeadLetter,
}

/// The message bus: participants, mailboxes, logical clock, timers and trace.
///
/// The clock advances by one per delivered message; when every mailbox is
/// empty it jumps to the next pending timer.
pub struct Kernel<P, E> {
    env: E,
    slots: BTreeMap<String, Slot<P, E>>,
    next_message_id: u64,
    clock: u64,
    timers: BTreeMap<(u64, u64), (String, String)>,
    timer_seq: u64,
    subscriptions: Vec<(String, String)>,
    trace: Trace<P>,
    budget: u64,
}

impl<P: Content + Send + 'static, E: 'static> Kernel<P, E> {
    pub fn new(env: E) -> Self {
        Self {
            env,
            slots: BTreeMap::new(),
            next_message_id: 1,
            clock: 0,
            timers: BTreeMap::new(),
            timer_seq: 0,
            subscriptions: Vec::new(),
            trace: Trace::default(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn set_budget(&mut self, budget: u64) {
        self.budget = budget.max(1);
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn env_mut(&mut self) -> &mut E {
        &mut self.env
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Everything recorded since the kernel was created.
    pub fn trace(&self) -> &Trace<P> {
        &self.trace
    }

    pub fn contains(&self, id: &str) -> bool {
        self.slots.contains_key(id)
    }

    pub fn spec(&self, id: &str) -> Option<&AgentSpec> {
        self.slots.get(id).and_then(|s| s.spec.as_ref())
    }

    /// Registered agents (endpoints excluded), sorted by id.
    pub fn agents(&self) -> impl Iterator<Item = &AgentSpec> {
        self.slots.values().filter_map(|s| s.spec.as_ref())
    }

    pub fn pending(&self) -> usize {
        self.slots.values().map(|s| s.mailbox.len()).sum()
    }

    pub fn agent<A: 'static>(&self, id: &str) -> Option<&A> {
        self.slots.get(id)?.agent.as_ref()?.as_any().downcast_ref::<A>()
    }

    pub fn spawn(&mut self, spec: AgentSpec, agent: Box<dyn Agent<P, E>>) -> Result<String, RuntimeError> {
        if self.slots.contains_key(&spec.agent_id) {
            return Err(RuntimeError::DuplicateId(spec.agent_id));
        }
        if spec.role.is_unique() && self.agents().any(|a| a.role == spec.role) {
            return Err(RuntimeError::DuplicateCoreRole(spec.role));
        }
        let id = spec.agent_id.clone();
        self.slots.insert(
            id.clone(),
            Slot {
                spec: Some(spec),
                agent: Some(agent),
                mailbox: VecDeque::new(),
            },
        );
        Ok(id)
    }

    /// Adds an addressable participant that is not an agent (e.g. a register
    /// endpoint). It is never listed by [`Kernel::agents`].
    pub fn attach(&mut self, id: &str, endpoint: Box<dyn Agent<P, E>>) -> Result<(), RuntimeError> {
        if self.slots.contains_key(id) {
            return Err(RuntimeError::DuplicateId(id.to_string()));
        }
        self.slots.insert(
            id.to_string(),
            Slot {
                spec: None,
                agent: Some(endpoint),
                mailbox: VecDeque::new(),
            },
        );
        Ok(())
    }

    pub fn send(&mut self, msg: AclMessage<P>) -> Result<Delivery, RuntimeError> {
        msg.check().map_err(RuntimeError::InvalidMessage)?;
        Ok(self.enqueue(msg))
    }

    fn enqueue(&mut self, mut msg: AclMessage<P>) -> Delivery {
        match self.slots.get_mut(&msg.receiver) {
            Some(slot) => {
                slot.mailbox.push_back(msg);
                Delivery::Accepted
            }
            None => {
                msg.message_id = self.next_message_id;
                self.next_message_id += 1;
                self.trace.entries.push(TraceEntry::DeadLetter {
                    tick: self.clock,
                    message: msg,
                });
                Delivery::DeadLetter
            }
        }
    }

    /// Runs `f` against agent `id` outside message delivery, e.g. to relay a
    /// user command. Effects are applied as for a handler.
    pub fn command<A: 'static, R>(
        &mut self,
        id: &str,
        f: impl FnOnce(&mut A, &mut Context<'_, P, E>) -> R,
    ) -> Result<R, RuntimeError> {
        let mut agent = self.take(id)?;
        match agent.as_any_mut().downcast_mut::<A>() {
            Some(a) => {
                let mut ctx = Context::new(&mut self.env, id, self.clock);
                let r = f(a, &mut ctx);
                let effects = Effects::from(ctx);
                self.put_back(id, agent);
                self.apply(id, effects);
                Ok(r)
            }
            None => {
                self.put_back(id, agent);
                Err(RuntimeError::WrongAgentType(id.to_string()))
            }
        }
    }

    /// Registers `observer` for every later message whose conversation id
    /// starts with `prefix`.
    pub fn subscribe(&mut self, observer: &str, prefix: &str) {
        self.subscriptions.push((observer.to_string(), prefix.to_string()));
    }

    fn take(&mut self, id: &str) -> Result<Box<dyn Agent<P, E>>, RuntimeError> {
        self.slots
            .get_mut(id)
            .and_then(|s| s.agent.take())
            .ok_or_else(|| RuntimeError::UnknownAgent(id.to_string()))
    }

    fn put_back(&mut self, id: &str, agent: Box<dyn Agent<P, E>>) {
        if let Some(slot) = self.slots.get_mut(id) {
            slot.agent = Some(agent);
        }
    }

    fn apply(&mut self, id: &str, effects: Effects<P, E>) {
        for (conv, text) in effects.notes {
            self.note(id, &conv, text);
        }
        for (spec, agent) in effects.spawns {
            let agent_id = spec.agent_id.clone();
            let role = spec.role;
            match self.spawn(spec, agent) {
                Ok(_) => self.note(id, "-", format!("spawn {agent_id} {role}")),
                Err(e) => self.note(id, "-", format!("spawn-failed {agent_id}: {e}")),
            }
        }
        for op in effects.timers {
            match op {
                TimerOp::Set { token, delay } => {
                    self.timers.retain(|_, (a, t)| !(a == id && *t == token));
                    self.timer_seq += 1;
                    self.timers
                        .insert((self.clock + delay, self.timer_seq), (id.to_string(), token));
                }
                TimerOp::Cancel { token } => self.timers.retain(|_, (a, t)| !(a == id && *t == token)),
            }
        }
        for prefix in effects.subscriptions {
            self.subscriptions.push((id.to_string(), prefix));
        }
        for msg in effects.sends {
            self.enqueue(msg);
        }
    }

    fn note(&mut self, agent: &str, conversation: &str, text: String) {
        self.trace.entries.push(TraceEntry::Note {
            tick: self.clock,
            agent: agent.to_string(),
            conversation: conversation.to_string(),
            text,
        });
    }

    pub fn run_until_idle(&mut self, seed: u64) -> Result<Trace<P>, RuntimeError> {
        self.run_with(&mut SeededScheduler::new(seed))
    }

    /// Delivers one message at a time until every mailbox is empty and no
    /// timer is pending; returns the trace entries of this run.
    pub fn run_with(&mut self, scheduler: &mut dyn Scheduler) -> Result<Trace<P>, RuntimeError> {
        let start = self.trace.entries.len();
        let mut delivered = 0u64;
        loop {
            self.fire_due_timers();
            let runnable: Vec<String> = self
                .slots
                .iter()
                .filter(|(_, s)| !s.mailbox.is_empty())
                .map(|(id, _)| id.clone())
                .collect();
            if runnable.is_empty() {
                match self.timers.keys().next() {
                    Some(&(due, _)) => {
                        self.clock = self.clock.max(due);
                        continue;
                    }
                    None => break,
                }
            }
            if delivered >= self.budget {
                let pending = self
                    .slots
                    .values_mut()
                    .flat_map(|s| s.mailbox.drain(..))
                    .map(|m| m.canonical())
                    .collect();
                self.timers.clear();
                return Err(RuntimeError::BudgetExceeded {
                    budget: self.budget,
                    pending,
                });
            }
            let pick = scheduler.pick(&runnable).min(runnable.len() - 1);
            let id = &runnable[pick];
            if runnable.len() > 1 {
                self.trace.entries.push(TraceEntry::Decision {
                    tick: self.clock,
                    chosen: id.clone(),
                    runnable: runnable.len(),
                });
            }
            self.deliver(id);
            delivered += 1;
        }
        Ok(Trace {
            entries: self.trace.entries[start..].to_vec(),
        })
    }

    fn deliver(&mut self, id: &str) {
        let Some(mut msg) = self.slots.get_mut(id).and_then(|s| s.mailbox.pop_front()) else {
            return;
        };
        self.clock += 1;
        msg.message_id = self.next_message_id;
        self.next_message_id += 1;
        self.trace.entries.push(TraceEntry::Delivered {
            tick: self.clock,
            message: msg.clone(),
        });
        if let Ok(mut agent) = self.take(id) {
            let mut ctx = Context::new(&mut self.env, id, self.clock);
            agent.handle(&msg, &mut ctx);
            let effects = Effects::from(ctx);
            self.put_back(id, agent);
            self.apply(id, effects);
        }
        let observers: Vec<String> = self
            .subscriptions
            .iter()
            .filter(|(o, p)| o != id && o != &msg.sender && msg.conversation_id.starts_with(p.as_str()))
            .map(|(o, _)| o.clone())
            .collect();
        for observer in observers {
            if let Ok(mut agent) = self.take(&observer) {
                let mut ctx = Context::new(&mut self.env, &observer, self.clock);
                agent.observe(&msg, &mut ctx);
                let effects = Effects::from(ctx);
                self.put_back(&observer, agent);
                self.apply(&observer, effects);
            }
        }
    }

    fn fire_due_timers(&mut self) {
        while let Some((&key, _)) = self.timers.iter().next() {
            if key.0 > self.clock {
                break;
            }
            let (agent_id, token) = self.timers.remove(&key).expect("present");
            self.note(&agent_id, &token, format!("timer {token}"));
            if let Ok(mut agent) = self.take(&agent_id) {
                let mut ctx = Context::new(&mut self.env, &agent_id, self.clock);
                agent.on_timer(&token, &mut ctx);
                let effects = Effects::from(ctx);
                self.put_back(&agent_id, agent);
                self.apply(&agent_id, effects);
            }
        }
    }
}

struct Effects<P, E> {
    sends: Vec<AclMessage<P>>,
    spawns: Vec<(AgentSpec, Box<dyn Agent<P, E>>)>,
    timers: Vec<TimerOp>,
    notes: Vec<(String, String)>,
    subscriptions: Vec<String>,
}

impl<P, E> From<Context<'_, P, E>> for Effects<P, E> {
    fn from(ctx: Context<'_, P, E>) -> Self {
        Self {
            sends: ctx.sends,
            spawns: ctx.spawns,
            timers: ctx.timers,
            notes: ctx.notes,
            subscriptions: ctx.subscriptions,
        }
    }
}
