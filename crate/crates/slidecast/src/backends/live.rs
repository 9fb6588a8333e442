//! Live HTTP backends.
//!
//! Chat speaks the OpenAI-compatible chat-completions wire format. Media
//! endpoints use simple JSON POST shapes (documented in the book's backend
//! chapter) so any vendor can be adapted with a thin proxy. Secrets come
//! from environment variables named in the config, never from the config
//! file itself.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    BackendError, BackendSet, ChatRequest, ChatResponse, ChatUsage, MediaAsset, MediaKind,
    RunBackends,
};
use crate::roles::MusicPrompt;

/// One remote service: where to POST, which model to name, and which
/// environment variable holds the bearer token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub endpoint: String,
    pub model_id: String,
    pub api_key_env: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiveBackendsConfig {
    pub chat: EndpointConfig,
    pub image: EndpointConfig,
    pub speech: EndpointConfig,
    pub music: EndpointConfig,
}

impl LiveBackendsConfig {
    pub fn endpoints(&self) -> [(&'static str, &EndpointConfig); 4] {
        [
            ("chat", &self.chat),
            ("image", &self.image),
            ("speech", &self.speech),
            ("music", &self.music),
        ]
    }
}

pub struct LiveBackendSet {
    config: LiveBackendsConfig,
    client: reqwest::blocking::Client,
}

impl LiveBackendSet {
    pub fn new(config: LiveBackendsConfig, per_attempt_timeout_ms: u64) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(per_attempt_timeout_ms))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(LiveBackendSet { config, client })
    }
}

impl BackendSet for LiveBackendSet {
    fn for_run(&self, _run_id: &str) -> Box<dyn RunBackends> {
        Box::new(LiveRunBackends {
            config: self.config.clone(),
            client: self.client.clone(),
        })
    }

    fn mode(&self) -> &'static str {
        "live"
    }
}

struct LiveRunBackends {
    config: LiveBackendsConfig,
    client: reqwest::blocking::Client,
}

fn bearer_token(endpoint: &EndpointConfig) -> Result<String, BackendError> {
    std::env::var(&endpoint.api_key_env).map_err(|_| {
        BackendError::Auth(format!(
            "environment variable {} is not set",
            endpoint.api_key_env
        ))
    })
}

fn classify_status(status: reqwest::StatusCode, body: &str) -> BackendError {
    if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
        return BackendError::Auth(format!("status {status}"));
    }
    if status == reqwest::StatusCode::UNPROCESSABLE_ENTITY {
        return BackendError::ModerationRejected(snippet(body));
    }
    if status.is_server_error()
        || status == reqwest::StatusCode::REQUEST_TIMEOUT
        || status == reqwest::StatusCode::TOO_MANY_REQUESTS
    {
        return BackendError::Transport(format!("status {status}"));
    }
    BackendError::MalformedResponse(format!("status {status}: {}", snippet(body)))
}

fn snippet(body: &str) -> String {
    body.chars().take(200).collect()
}

fn transport(e: reqwest::Error) -> BackendError {
    BackendError::Transport(e.to_string())
}

impl LiveRunBackends {
    fn post_json(
        &self,
        endpoint: &EndpointConfig,
        body: serde_json::Value,
    ) -> Result<(serde_json::Value, u64), BackendError> {
        let token = bearer_token(endpoint)?;
        let started = Instant::now();
        let response = self
            .client
            .post(&endpoint.endpoint)
            .bearer_auth(token)
            .json(&body)
            .send()
            .map_err(transport)?;
        let status = response.status();
        let text = response.text().map_err(transport)?;
        let latency_ms = started.elapsed().as_millis() as u64;
        if !status.is_success() {
            return Err(classify_status(status, &text));
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        Ok((value, latency_ms))
    }
}

fn field_str<'v>(value: &'v serde_json::Value, pointer: &str) -> Result<&'v str, BackendError> {
    value
        .pointer(pointer)
        .and_then(|v| v.as_str())
        .ok_or_else(|| BackendError::MalformedResponse(format!("missing field {pointer}")))
}

fn field_u64(value: &serde_json::Value, pointer: &str) -> Result<u64, BackendError> {
    value
        .pointer(pointer)
        .and_then(|v| v.as_u64())
        .ok_or_else(|| BackendError::MalformedResponse(format!("missing field {pointer}")))
}

fn decode_b64(data: &str) -> Result<Vec<u8>, BackendError> {
    use base64::Engine;
    base64::engine::general_purpose::STANDARD
        .decode(data.trim())
        .map_err(|e| BackendError::MalformedResponse(format!("invalid base64 payload: {e}")))
}

impl RunBackends for LiveRunBackends {
    fn chat(&mut self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let body = json!({
            "model": self.config.chat.model_id,
            "messages": request
                .messages
                .iter()
                .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
                .collect::<Vec<_>>(),
            "temperature": request.temperature,
        });
        let (value, latency_ms) = self.post_json(&self.config.chat, body)?;
        let content = field_str(&value, "/choices/0/message/content")?.to_string();
        let usage = ChatUsage {
            prompt_tokens: field_u64(&value, "/usage/prompt_tokens")?,
            completion_tokens: field_u64(&value, "/usage/completion_tokens")?,
        };
        Ok(ChatResponse {
            content,
            usage,
            latency_ms,
        })
    }

    fn generate_image(&mut self, prompt: &str) -> Result<MediaAsset, BackendError> {
        if prompt.trim().is_empty() {
            return Err(BackendError::InvalidRequest(
                "image prompt is empty".to_string(),
            ));
        }
        let body = json!({
            "model": self.config.image.model_id,
            "prompt": prompt,
        });
        let (value, latency_ms) = self.post_json(&self.config.image, body)?;
        let bytes = decode_b64(field_str(&value, "/image_b64")?)?;
        let flagged = value
            .pointer("/moderation_flagged")
            .and_then(|v| v.as_bool())
            .unwrap_or(false);
        Ok(MediaAsset::image(bytes, flagged, latency_ms))
    }

    fn synthesize_speech(&mut self, text: &str) -> Result<MediaAsset, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::InvalidRequest(
                "narration text is empty".to_string(),
            ));
        }
        let body = json!({
            "model": self.config.speech.model_id,
            "input": text,
        });
        let (value, latency_ms) = self.post_json(&self.config.speech, body)?;
        let bytes = decode_b64(field_str(&value, "/audio_b64")?)?;
        let duration_s = value
            .pointer("/duration_s")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| BackendError::MalformedResponse("missing field /duration_s".into()))?;
        MediaAsset::audio(
            MediaKind::Narration,
            bytes,
            (duration_s * 1000.0).round() as u64,
            latency_ms,
        )
    }

    fn compose_music(
        &mut self,
        prompt: &MusicPrompt,
        target_duration_ms: u64,
    ) -> Result<MediaAsset, BackendError> {
        if target_duration_ms == 0 {
            return Err(BackendError::InvalidRequest(
                "music target duration must be positive".to_string(),
            ));
        }
        let body = json!({
            "model": self.config.music.model_id,
            "prompt": prompt.description,
            "mood": prompt.mood,
            "duration_s": target_duration_ms as f64 / 1000.0,
        });
        let (value, latency_ms) = self.post_json(&self.config.music, body)?;
        let bytes = decode_b64(field_str(&value, "/audio_b64")?)?;
        let duration_s = value
            .pointer("/duration_s")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| BackendError::MalformedResponse("missing field /duration_s".into()))?;
        MediaAsset::audio(
            MediaKind::Music,
            bytes,
            (duration_s * 1000.0).round() as u64,
            latency_ms,
        )
    }
}
