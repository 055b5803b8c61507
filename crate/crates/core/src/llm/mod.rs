//! Query augmentation, prompt assembly and language-model providers.
//!
//! The model is asked for a single machine-readable line
//! `ROUTE: name1 -> name2 -> ... -> nameN`; everything else it says is kept in
//! [`GenerationResult::raw_text`] but ignored downstream.

mod http;
mod mock;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{reverse_geocode, AddressBook};
use crate::roadnet::{NodeId, RoadNetwork};

pub use http::{HttpChatConfig, HttpChatProvider};
pub use mock::{EchoMock, NoisyMock};

/// Fixed task instruction prepended to every augmented query.
pub const TASK_INSTRUCTION: &str = "You are a navigation assistant. Given historical, fastest, and shortest path \
descriptions, recommend one path satisfying the user's request. Answer with a single line starting with ROUTE: \
listing road names separated by ' -> '.";

/// Output grammar restated in the task section.
pub const ROUTE_GRAMMAR: &str = "Answer with a single line `ROUTE: <road name> -> <road name> -> ...`.";

pub const ROUTE_PREFIX: &str = "ROUTE:";
pub const ROUTE_SEPARATOR: &str = " -> ";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("origin and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("provider {provider} failed: {message}")]
    Transport { provider: String, message: String },
    #[error("provider {provider} returned an unusable response: {message}")]
    BadResponse { provider: String, message: String },
}

/// A routing request: an OD pair and free-text constraints such as
/// "most scenic".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub origin: NodeId,
    pub destination: NodeId,
    pub constraints: String,
}

impl Query {
    pub fn new(origin: NodeId, destination: NodeId, constraints: impl Into<String>) -> Result<Self, LlmError> {
        if origin == destination {
            return Err(LlmError::SameEndpoints(origin));
        }
        Ok(Self {
            origin,
            destination,
            constraints: constraints.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedQuery {
    pub instruction: String,
    pub body: String,
}

impl AugmentedQuery {
    /// Instruction and body joined by a space, the text that gets embedded.
    pub fn text(&self) -> String {
        format!("{} {}", self.instruction, self.body)
    }
}

pub fn augment_query(query: &Query, network: &RoadNetwork, book: &AddressBook) -> AugmentedQuery {
    let constraints = query.constraints.trim();
    let constraints = if constraints.is_empty() { "best" } else { constraints };
    AugmentedQuery {
        instruction: TASK_INSTRUCTION.to_string(),
        body: format!(
            "Recommend the {constraints} path from {} to {}.",
            reverse_geocode(book, query.origin, network),
            reverse_geocode(book, query.destination, network),
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// The three prompt sections, in the order they are sent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub task_description: String,
    /// Retrieved document texts in retrieval order; empty without retrieval.
    pub context: Vec<String>,
    pub task: String,
}

impl Prompt {
    /// Context block, one `Context {i}: ...` line per document, 1-based.
    pub fn context_block(&self) -> String {
        let mut out = String::new();
        for (i, text) in self.context.iter().enumerate() {
            out.push_str(&format!("Context {}: {}\n", i + 1, text));
        }
        out
    }

    /// The prompt as one text: task description, context, task, separated by
    /// blank lines.
    pub fn render(&self) -> String {
        format!("{}\n\n{}\n{}\n", self.task_description, self.context_block(), self.task)
    }

    /// Single-turn chat messages: the task description as the system
    /// message, context and task as the user message.
    pub fn messages(&self) -> Vec<Message> {
        vec![
            Message {
                role: Role::System,
                content: self.task_description.clone(),
            },
            Message {
                role: Role::User,
                content: format!("{}\n{}", self.context_block(), self.task),
            },
        ]
    }
}

pub fn assemble_prompt<S: AsRef<str>>(augmented: &AugmentedQuery, documents: &[S]) -> Prompt {
    Prompt {
        task_description: augmented.instruction.clone(),
        context: documents.iter().map(|d| d.as_ref().to_string()).collect(),
        task: format!("Task: {}\n{}", augmented.body, ROUTE_GRAMMAR),
    }
}

/// A language model behind a chat interface.
pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, messages: &[Message]) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub raw_text: String,
    pub route_line: Option<String>,
    pub provider_latency_ms: f64,
}

/// The unique trimmed line starting with `ROUTE:`, if there is exactly one.
pub fn extract_route_line(raw: &str) -> Option<String> {
    let mut found = raw.lines().map(str::trim).filter(|l| l.starts_with(ROUTE_PREFIX));
    let first = found.next()?;
    if found.next().is_some() {
        return None;
    }
    Some(first.to_string())
}

pub fn generate(provider: &dyn LlmProvider, prompt: &Prompt) -> Result<GenerationResult, LlmError> {
    let messages = prompt.messages();
    let started = Instant::now();
    let raw_text = provider.complete(&messages)?;
    let provider_latency_ms = started.elapsed().as_secs_f64() * 1000.0;
    Ok(GenerationResult {
        route_line: extract_route_line(&raw_text),
        raw_text,
        provider_latency_ms,
    })
}
