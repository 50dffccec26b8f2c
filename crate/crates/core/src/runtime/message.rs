use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Performative {
    Request,
    Inform,
    Failure,
    Cfp,
    Propose,
    AcceptProposal,
    RejectProposal,
    Agree,
    Cancel,
}

impl Performative {
    pub const ALL: [Performative; 9] = [
        Performative::Request,
        Performative::Inform,
        Performative::Failure,
        Performative::Cfp,
        Performative::Propose,
        Performative::AcceptProposal,
        Performative::RejectProposal,
        Performative::Agree,
        Performative::Cancel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Performative::Request => "REQUEST",
            Performative::Inform => "INFORM",
            Performative::Failure => "FAILURE",
            Performative::Cfp => "CFP",
            Performative::Propose => "PROPOSE",
            Performative::AcceptProposal => "ACCEPT_PROPOSAL",
            Performative::RejectProposal => "REJECT_PROPOSAL",
            Performative::Agree => "AGREE",
            Performative::Cancel => "CANCEL",
        }
    }
}

impl fmt::Display for Performative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Message content understood by the runtime: a kind tag for traces and the
/// performatives it may travel under.
pub trait Content: Clone + fmt::Debug {
    fn kind(&self) -> &'static str;
    fn permits(&self, performative: Performative) -> bool;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AclMessage<P> {
    /// Zero until the message reaches the trace.
    pub message_id: u64,
    pub performative: Performative,
    pub sender: String,
    pub receiver: String,
    pub conversation_id: String,
    pub ontology_id: String,
    pub content: P,
}

impl<P: Content> AclMessage<P> {
    pub fn new(
        performative: Performative,
        sender: impl Into<String>,
        receiver: impl Into<String>,
        conversation_id: impl Into<String>,
        ontology_id: impl Into<String>,
        content: P,
    ) -> Self {
        Self {
            message_id: 0,
            performative,
            sender: sender.into(),
            receiver: receiver.into(),
            conversation_id: conversation_id.into(),
            ontology_id: ontology_id.into(),
            content,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.sender.is_empty() || self.receiver.is_empty() {
            return Err("sender and receiver must be set".into());
        }
        if self.sender == self.receiver {
            return Err(format!("`{}` cannot message itself", self.sender));
        }
        if self.conversation_id.is_empty() {
            return Err("conversation id must be non-empty".into());
        }
        if !self.content.permits(self.performative) {
            return Err(format!(
                "{} cannot carry a {} payload",
                self.performative,
                self.content.kind()
            ));
        }
        Ok(())
    }

    /// `<message-id> <performative> <sender> <receiver> <conversation-id> <payload-kind>`
    pub fn canonical(&self) -> String {
        format!(
            "{} {} {} {} {} {}",
            self.message_id,
            self.performative,
            self.sender,
            self.receiver,
            self.conversation_id,
            self.content.kind()
        )
    }
}
