//! Uniform clients for chat completion, image generation, speech synthesis,
//! and music composition: live HTTP implementations plus seeded
//! deterministic mocks with failure injection.

mod live;
mod mock;
mod pricing;
mod retry;

pub use live::{EndpointConfig, LiveBackendSet, LiveBackendsConfig};
pub use mock::{MockBackendSet, MockScript, ScriptedVerdict, VerdictScript};
pub use pricing::{
    CallKind, CostLedger, LedgerEntry, MediaRates, ModelRates, PricingError, PricingTable,
};
pub use retry::{with_retry, RealSleeper, RecordingSleeper, RetryFailure, RetryPolicy, Sleeper};

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::roles::MusicPrompt;

#[derive(Debug, Error)]
pub enum BackendError {
    /// Network-class failure: connect/timeout/5xx. Retryable.
    #[error("transport error: {0}")]
    Transport(String),
    /// Bad or missing credentials. Not retryable.
    #[error("auth error: {0}")]
    Auth(String),
    /// The service answered but not in the expected shape. Not retryable.
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    /// The media service refused the content. Surfaces as an inappropriate
    /// flag on the run, never as a run failure.
    #[error("moderation rejected: {0}")]
    ModerationRejected(String),
    /// Caller violated a precondition (empty prompt, zero duration).
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

impl ChatRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ChatRole::System => "system",
            ChatRole::User => "user",
            ChatRole::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// One chat call: a nonempty message list opening with the system prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(
        model_id: impl Into<String>,
        messages: Vec<ChatMessage>,
        temperature: f64,
    ) -> Result<Self, BackendError> {
        if messages.is_empty() {
            return Err(BackendError::InvalidRequest(
                "chat request needs at least one message".to_string(),
            ));
        }
        if messages[0].role != ChatRole::System {
            return Err(BackendError::InvalidRequest(
                "first chat message must be the system prompt".to_string(),
            ));
        }
        Ok(ChatRequest {
            model_id: model_id.into(),
            messages,
            temperature,
        })
    }

    /// Canonical single-string rendering used for transcripts and for the
    /// mock's token estimate.
    pub fn flatten(&self) -> String {
        flatten_messages(&self.messages)
    }
}

pub fn flatten_messages(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| format!("[{}]\n{}", m.role.as_str(), m.content))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChatUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl ChatUsage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub usage: ChatUsage,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Image,
    Narration,
    Music,
}

impl MediaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaKind::Image => "image",
            MediaKind::Narration => "narration",
            MediaKind::Music => "music",
        }
    }
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A generated binary asset plus the metadata the pipeline accounts with.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaAsset {
    pub kind: MediaKind,
    pub bytes: Vec<u8>,
    /// Zero for images, positive for audio.
    pub duration_ms: u64,
    pub moderation_flagged: bool,
    /// Hex SHA-256 of `bytes`.
    pub digest: String,
    pub latency_ms: u64,
}

impl MediaAsset {
    pub fn image(bytes: Vec<u8>, moderation_flagged: bool, latency_ms: u64) -> Self {
        let digest = sha256_hex(&bytes);
        MediaAsset {
            kind: MediaKind::Image,
            bytes,
            duration_ms: 0,
            moderation_flagged,
            digest,
            latency_ms,
        }
    }

    pub fn audio(
        kind: MediaKind,
        bytes: Vec<u8>,
        duration_ms: u64,
        latency_ms: u64,
    ) -> Result<Self, BackendError> {
        if duration_ms == 0 {
            return Err(BackendError::InvalidRequest(format!(
                "{kind} asset must have a positive duration"
            )));
        }
        let digest = sha256_hex(&bytes);
        Ok(MediaAsset {
            kind,
            bytes,
            duration_ms,
            moderation_flagged: false,
            digest,
            latency_ms,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Stand-in image used when a live service rejects a prompt outright; the
/// run keeps its slide and carries a moderation flag instead of failing.
pub fn placeholder_image(prompt: &str, latency_ms: u64) -> MediaAsset {
    let bytes = format!("placeholder-image:{}\n", sha256_hex(prompt.as_bytes())).into_bytes();
    MediaAsset::image(bytes, true, latency_ms)
}

/// A family of backends; `for_run` binds per-run state (mock RNG streams)
/// so that independent runs never share mutable state.
pub trait BackendSet: Send + Sync {
    fn for_run(&self, run_id: &str) -> Box<dyn RunBackends>;
    fn mode(&self) -> &'static str;
}

/// The four calls a single pipeline run makes, in run-sequential order.
pub trait RunBackends: Send {
    fn chat(&mut self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;
    fn generate_image(&mut self, prompt: &str) -> Result<MediaAsset, BackendError>;
    fn synthesize_speech(&mut self, text: &str) -> Result<MediaAsset, BackendError>;
    fn compose_music(
        &mut self,
        prompt: &MusicPrompt,
        target_duration_ms: u64,
    ) -> Result<MediaAsset, BackendError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_request_requires_leading_system_message() {
        assert!(ChatRequest::new("m", vec![], 0.7).is_err());
        assert!(ChatRequest::new("m", vec![ChatMessage::user("hi")], 0.7).is_err());
        assert!(ChatRequest::new(
            "m",
            vec![ChatMessage::system("sys"), ChatMessage::user("hi")],
            0.7
        )
        .is_ok());
    }

    #[test]
    fn media_asset_digest_matches_bytes() {
        let a = MediaAsset::image(b"abc".to_vec(), false, 10);
        assert_eq!(a.digest, sha256_hex(b"abc"));
        assert_eq!(a.duration_ms, 0);
    }

    #[test]
    fn audio_needs_positive_duration() {
        assert!(MediaAsset::audio(MediaKind::Music, vec![1], 0, 5).is_err());
        let a = MediaAsset::audio(MediaKind::Narration, vec![1], 400, 5).unwrap();
        assert_eq!(a.duration_ms, 400);
    }

    #[test]
    fn flatten_is_stable() {
        let msgs = vec![ChatMessage::system("s"), ChatMessage::user("u")];
        assert_eq!(flatten_messages(&msgs), "[system]\ns\n\n[user]\nu");
    }
}
