//! Transcript persistence: JSON Lines, one message per line, with a trailing
//! summary line carrying terminal state, metrics, outcome, and the media
//! call records. Round-trips bit-exactly; a normalizer rewrites wall times
//! so determinism checks and digests ignore the clock.

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::memory::{Direction, Message};
use crate::backends::{sha256_hex, MediaKind};
use crate::model::{Outcome, RunMetrics, TerminalState};
use crate::money::Usd;
use crate::roles::RoleId;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript line {line}: {source}")]
    BadLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("transcript has no summary line")]
    MissingSummary,
    #[error("message after the summary line")]
    TrailingMessage,
}

/// The full chat record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub run_id: String,
    pub messages: Vec<Message>,
    pub terminal: TerminalState,
}

/// One creation-phase call (image, narration, or music).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaCallRecord {
    pub kind: MediaKind,
    /// 1-based scene index; music spans the whole timeline.
    pub scene: Option<usize>,
    pub latency_ms: u64,
    pub duration_ms: u64,
    pub digest: String,
    pub moderation_flagged: bool,
    pub cost: Usd,
}

/// The trailing summary line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub summary: bool,
    pub run_id: String,
    pub terminal: TerminalState,
    pub metrics: RunMetrics,
    pub outcome: Outcome,
    pub media_calls: Vec<MediaCallRecord>,
    pub model_id: String,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MessageLine {
    run_id: String,
    seq: u64,
    agent: RoleId,
    direction: Direction,
    content: String,
    prompt_tokens: u64,
    completion_tokens: u64,
    latency_ms: u64,
    wall_time: String,
}

fn rfc3339(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn transcript_to_jsonl(
    transcript: &Transcript,
    summary: &TranscriptSummary,
) -> Result<String, serde_json::Error> {
    let mut out = String::new();
    for m in &transcript.messages {
        let line = MessageLine {
            run_id: transcript.run_id.clone(),
            seq: m.seq,
            agent: m.agent,
            direction: m.direction,
            content: m.content.clone(),
            prompt_tokens: m.prompt_tokens,
            completion_tokens: m.completion_tokens,
            latency_ms: m.latency_ms,
            wall_time: rfc3339(m.wall_time),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(summary)?);
    out.push('\n');
    Ok(out)
}

pub fn transcript_from_jsonl(
    text: &str,
) -> Result<(Transcript, TranscriptSummary), TranscriptError> {
    let mut messages = Vec::new();
    let mut summary: Option<TranscriptSummary> = None;
    let mut run_id = String::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        if summary.is_some() {
            return Err(TranscriptError::TrailingMessage);
        }
        let value: serde_json::Value =
            serde_json::from_str(raw).map_err(|source| TranscriptError::BadLine {
                line: idx + 1,
                source,
            })?;
        if value.get("summary").and_then(|v| v.as_bool()) == Some(true) {
            let parsed: TranscriptSummary =
                serde_json::from_str(raw).map_err(|source| TranscriptError::BadLine {
                    line: idx + 1,
                    source,
                })?;
            summary = Some(parsed);
        } else {
            let parsed: MessageLine =
                serde_json::from_str(raw).map_err(|source| TranscriptError::BadLine {
                    line: idx + 1,
                    source,
                })?;
            run_id = parsed.run_id.clone();
            let wall_time = DateTime::parse_from_rfc3339(&parsed.wall_time)
                .map(|t| t.with_timezone(&Utc))
                .unwrap_or_else(|_| Utc.timestamp_opt(0, 0).unwrap());
            messages.push(Message {
                seq: parsed.seq,
                agent: parsed.agent,
                direction: parsed.direction,
                content: parsed.content,
                prompt_tokens: parsed.prompt_tokens,
                completion_tokens: parsed.completion_tokens,
                latency_ms: parsed.latency_ms,
                wall_time,
            });
        }
    }
    let summary = summary.ok_or(TranscriptError::MissingSummary)?;
    let transcript = Transcript {
        run_id: if run_id.is_empty() {
            summary.run_id.clone()
        } else {
            run_id
        },
        messages,
        terminal: summary.terminal,
    };
    Ok((transcript, summary))
}

/// Rewrites every wall_time to the epoch so two runs of the same seed
/// compare byte-identically.
pub fn normalize_wall_times(jsonl: &str) -> String {
    const EPOCH: &str = "1970-01-01T00:00:00.000Z";
    let mut out = String::with_capacity(jsonl.len());
    for raw in jsonl.lines() {
        if raw.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<MessageLine>(raw) {
            Ok(mut line) => {
                line.wall_time = EPOCH.to_string();
                out.push_str(&serde_json::to_string(&line).expect("re-serialize"));
            }
            Err(_) => out.push_str(raw),
        }
        out.push('\n');
    }
    out
}

/// Content digest of the wall-time-normalized transcript.
pub fn transcript_digest(jsonl: &str) -> String {
    sha256_hex(normalize_wall_times(jsonl).as_bytes())
}
