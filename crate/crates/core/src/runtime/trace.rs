use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AclMessage, Content};

pub const TRACE_HEADER: &str = "# trace v1 digest=sha256";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "kebab-case")]
pub enum TraceEntry<P> {
    Delivered {
        tick: u64,
        message: AclMessage<P>,
    },
    DeadLetter {
        tick: u64,
        message: AclMessage<P>,
    },
    /// Which runnable mailbox the scheduler served, out of how many.
    Decision {
        tick: u64,
        chosen: String,
        runnable: usize,
    },
    /// Agent-internal event worth inspecting (cache hit, timer, spawn...).
    Note {
        tick: u64,
        agent: String,
        conversation: String,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace<P> {
    pub entries: Vec<TraceEntry<P>>,
}

impl<P> Default for Trace<P> {
    fn default() -> Self {
        Self { entries: Vec::new() }
    }
}

impl<P: Content> Trace<P> {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: Trace<P>) {
        self.entries.extend(other.entries);
    }

    /// Delivered and dead-lettered messages in trace order.
    pub fn messages(&self) -> impl Iterator<Item = &AclMessage<P>> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Delivered { message, .. } | TraceEntry::DeadLetter { message, .. } => Some(message),
            _ => None,
        })
    }

    pub fn delivered(&self) -> impl Iterator<Item = &AclMessage<P>> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Delivered { message, .. } => Some(message),
            _ => None,
        })
    }

    pub fn dead_letters(&self) -> impl Iterator<Item = &AclMessage<P>> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::DeadLetter { message, .. } => Some(message),
            _ => None,
        })
    }

    pub fn in_conversation<'a>(&'a self, conversation: &'a str) -> impl Iterator<Item = &'a TraceEntry<P>> + 'a {
        self.entries.iter().filter(move |e| match e {
            TraceEntry::Delivered { message, .. } | TraceEntry::DeadLetter { message, .. } => {
                message.conversation_id == conversation
            }
            TraceEntry::Note { conversation: c, .. } => c == conversation,
            TraceEntry::Decision { .. } => false,
        })
    }

    pub fn notes(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.entries.iter().filter_map(|e| match e {
            TraceEntry::Note {
                agent,
                conversation,
                text,
                ..
            } => Some((agent.as_str(), conversation.as_str(), text.as_str())),
            _ => None,
        })
    }

    /// Canonical lines for messages only; dead letters carry a ` !dead-letter`
    /// suffix. Notes and scheduler decisions are not part of the canonical form.
    pub fn canonical_body(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match e {
                TraceEntry::Delivered { message, .. } => {
                    let _ = writeln!(out, "{}", message.canonical());
                }
                TraceEntry::DeadLetter { message, .. } => {
                    let _ = writeln!(out, "{} !dead-letter", message.canonical());
                }
                _ => {}
            }
        }
        out
    }

    pub fn canonical(&self) -> String {
        format!("{TRACE_HEADER}\n{}", self.canonical_body())
    }

    /// Hex SHA-256 of the canonical body.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_body().as_bytes()))
    }

    /// Full rendering including notes, for humans.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match e {
                TraceEntry::Delivered { tick, message } => {
                    let _ = writeln!(out, "[{tick:>5}] {}", message.canonical());
                }
                TraceEntry::DeadLetter { tick, message } => {
                    let _ = writeln!(out, "[{tick:>5}] {} !dead-letter", message.canonical());
                }
                TraceEntry::Decision { tick, chosen, runnable } => {
                    let _ = writeln!(out, "[{tick:>5}]   pick {chosen} of {runnable}");
                }
                TraceEntry::Note {
                    tick,
                    agent,
                    conversation,
                    text,
                } => {
                    let _ = writeln!(out, "[{tick:>5}]   {agent} {conversation}: {text}");
                }
            }
        }
        out
    }
}
