//! The append-only memory stream: every exchange plus the approved
//! artifacts, with counters recomputable from the message list alone.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::backends::{ChatResponse, ChatUsage};
use crate::model::UserPrompt;
use crate::roles::{Directive, ImagePromptSet, MusicPrompt, RoleId, SceneSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Request,
    Reply,
}

/// One logged chat message. Usage and latency ride on the reply row; the
/// request row carries zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub seq: u64,
    pub agent: RoleId,
    pub direction: Direction,
    pub content: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
    pub wall_time: DateTime<Utc>,
}

/// Which artifact an approval round concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    SceneSet,
    ImagePrompts,
    MusicPrompt,
}

impl ArtifactKind {
    /// Marker used inside review requests, e.g. "(scene set)".
    pub fn review_marker(self) -> &'static str {
        match self {
            ArtifactKind::SceneSet => "scene set",
            ArtifactKind::ImagePrompts => "image prompts",
            ArtifactKind::MusicPrompt => "music prompt",
        }
    }

    pub fn producer(self) -> RoleId {
        match self {
            ArtifactKind::SceneSet => RoleId::Editor,
            ArtifactKind::ImagePrompts => RoleId::Painter,
            ArtifactKind::MusicPrompt => RoleId::Composer,
        }
    }
}

/// Director feedback captured during an approval round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackNote {
    pub artifact: ArtifactKind,
    pub round: u32,
    pub text: String,
    /// Seq of the director reply that carried it.
    pub seq: u64,
}

/// Append-only run memory. Messages are only ever pushed; approved artifacts
/// index the reply they were parsed from.
#[derive(Debug, Clone)]
pub struct MemoryStream {
    prompt: UserPrompt,
    messages: Vec<Message>,
    directives: Vec<(Directive, u64)>,
    scene_set: Option<(SceneSet, u64)>,
    image_prompts: Option<(ImagePromptSet, u64)>,
    music_prompt: Option<(MusicPrompt, u64)>,
    feedback: Vec<FeedbackNote>,
}

impl MemoryStream {
    pub fn new(prompt: UserPrompt) -> Self {
        MemoryStream {
            prompt,
            messages: Vec::new(),
            directives: Vec::new(),
            scene_set: None,
            image_prompts: None,
            music_prompt: None,
            feedback: Vec::new(),
        }
    }

    pub fn user_prompt(&self) -> &UserPrompt {
        &self.prompt
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Completed request/reply pairs so far.
    pub fn chat_pairs(&self) -> u64 {
        self.messages
            .iter()
            .filter(|m| m.direction == Direction::Reply)
            .count() as u64
    }

    /// Appends one request/reply pair; returns the reply's seq.
    pub fn record_exchange(&mut self, agent: RoleId, request_content: String, reply: &ChatResponse) -> u64 {
        let request_seq = self.messages.len() as u64 + 1;
        self.messages.push(Message {
            seq: request_seq,
            agent,
            direction: Direction::Request,
            content: request_content,
            prompt_tokens: 0,
            completion_tokens: 0,
            latency_ms: 0,
            wall_time: Utc::now(),
        });
        let reply_seq = request_seq + 1;
        self.messages.push(Message {
            seq: reply_seq,
            agent,
            direction: Direction::Reply,
            content: reply.content.clone(),
            prompt_tokens: reply.usage.prompt_tokens,
            completion_tokens: reply.usage.completion_tokens,
            latency_ms: reply.latency_ms,
            wall_time: Utc::now(),
        });
        reply_seq
    }

    pub fn add_directive(&mut self, directive: Directive, seq: u64) {
        self.directives.push((directive, seq));
    }

    pub fn directive_for(&self, role: RoleId) -> Option<&(Directive, u64)> {
        self.directives.iter().find(|(d, _)| d.to == role)
    }

    pub fn add_feedback(&mut self, artifact: ArtifactKind, round: u32, text: String, seq: u64) {
        self.feedback.push(FeedbackNote {
            artifact,
            round,
            text,
            seq,
        });
    }

    pub fn feedback_for(&self, artifact: ArtifactKind) -> impl Iterator<Item = &FeedbackNote> {
        self.feedback.iter().filter(move |f| f.artifact == artifact)
    }

    pub fn approve_scene_set(&mut self, set: SceneSet, seq: u64) {
        self.scene_set = Some((set, seq));
    }

    pub fn approve_image_prompts(&mut self, set: ImagePromptSet, seq: u64) {
        self.image_prompts = Some((set, seq));
    }

    pub fn approve_music_prompt(&mut self, prompt: MusicPrompt, seq: u64) {
        self.music_prompt = Some((prompt, seq));
    }

    pub fn approved_scene_set(&self) -> Option<&SceneSet> {
        self.scene_set.as_ref().map(|(s, _)| s)
    }

    pub fn approved_image_prompts(&self) -> Option<&ImagePromptSet> {
        self.image_prompts.as_ref().map(|(s, _)| s)
    }

    pub fn approved_music_prompt(&self) -> Option<&MusicPrompt> {
        self.music_prompt.as_ref().map(|(s, _)| s)
    }

    pub fn approval_seq(&self, artifact: ArtifactKind) -> Option<u64> {
        match artifact {
            ArtifactKind::SceneSet => self.scene_set.as_ref().map(|(_, s)| *s),
            ArtifactKind::ImagePrompts => self.image_prompts.as_ref().map(|(_, s)| *s),
            ArtifactKind::MusicPrompt => self.music_prompt.as_ref().map(|(_, s)| *s),
        }
    }

    /// Replies from an agent, in seq order.
    pub fn replies_from(&self, agent: RoleId) -> impl Iterator<Item = &Message> {
        self.messages
            .iter()
            .filter(move |m| m.agent == agent && m.direction == Direction::Reply)
    }

    /// (loops, token length, communicate time) recomputed from messages.
    pub fn chat_metrics(&self) -> (u64, u64, u64) {
        recompute_chat_metrics(&self.messages)
    }
}

/// Metrics as a pure function of the message list: loops = reply count,
/// tokens = sum of usage fields, communicate time = sum of reply latencies.
pub fn recompute_chat_metrics(messages: &[Message]) -> (u64, u64, u64) {
    let mut loops = 0;
    let mut tokens = 0;
    let mut comm_ms = 0;
    for m in messages {
        tokens += m.prompt_tokens + m.completion_tokens;
        if m.direction == Direction::Reply {
            loops += 1;
            comm_ms += m.latency_ms;
        }
    }
    (loops, tokens, comm_ms)
}
