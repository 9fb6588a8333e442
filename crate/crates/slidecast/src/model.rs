//! Shared domain vocabulary: prompts, length and topic classes, outcome
//! taxonomy, and per-run metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Usd;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("prompt text is empty")]
    EmptyPrompt,
    #[error("invalid length thresholds: short_max {short_max} must be below long_min {long_min}")]
    InvalidThresholds { short_max: usize, long_min: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

/// The user's one-line request, validated nonempty after trimming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawUserPrompt")]
pub struct UserPrompt {
    text: String,
    pub topic_class: Option<TopicClass>,
}

#[derive(Deserialize)]
struct RawUserPrompt {
    text: String,
    #[serde(default)]
    topic_class: Option<TopicClass>,
}

impl TryFrom<RawUserPrompt> for UserPrompt {
    type Error = ModelError;
    fn try_from(raw: RawUserPrompt) -> Result<Self, ModelError> {
        let p = UserPrompt::new(raw.text)?;
        Ok(match raw.topic_class {
            Some(t) => p.with_topic(t),
            None => p,
        })
    }
}

impl UserPrompt {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyPrompt);
        }
        Ok(UserPrompt {
            text,
            topic_class: None,
        })
    }

    pub fn with_topic(mut self, topic: TopicClass) -> Self {
        self.topic_class = Some(topic);
        self
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthClass {
    Short,
    Medium,
    Long,
}

impl LengthClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LengthClass::Short => "short",
            LengthClass::Medium => "medium",
            LengthClass::Long => "long",
        }
    }
}

impl fmt::Display for LengthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LengthClass {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "short" => Ok(LengthClass::Short),
            "medium" => Ok(LengthClass::Medium),
            "long" => Ok(LengthClass::Long),
            other => Err(ModelError::UnknownLabel(other.to_string())),
        }
    }
}

/// The five bundled prompt topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicClass {
    Vehicle,
    Concert,
    AssociationFootball,
    Animal,
    Food,
}

impl TopicClass {
    pub const ALL: [TopicClass; 5] = [
        TopicClass::Vehicle,
        TopicClass::Concert,
        TopicClass::AssociationFootball,
        TopicClass::Animal,
        TopicClass::Food,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopicClass::Vehicle => "vehicle",
            TopicClass::Concert => "concert",
            TopicClass::AssociationFootball => "association_football",
            TopicClass::Animal => "animal",
            TopicClass::Food => "food",
        }
    }
}

impl fmt::Display for TopicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopicClass {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        TopicClass::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ModelError::UnknownLabel(s.to_string()))
    }
}

/// Why an invalid run failed. Every invalid run carries exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NetworkInstability,
    CharacterConfusion,
    InfiniteLoop,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::NetworkInstability => "network_instability",
            FailureReason::CharacterConfusion => "character_confusion",
            FailureReason::InfiniteLoop => "infinite_loop",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailureReason {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "network_instability" => Ok(FailureReason::NetworkInstability),
            "character_confusion" => Ok(FailureReason::CharacterConfusion),
            "infinite_loop" => Ok(FailureReason::InfiniteLoop),
            other => Err(ModelError::UnknownLabel(other.to_string())),
        }
    }
}

/// A content problem on an otherwise completed run. Scene indices are
/// 1-based into the run's scene set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InappropriateFlag {
    ModerationFlagged { scene: usize },
    RepetitiveVisuals { scenes: (usize, usize) },
}

/// Where a pipeline run ends up before outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalState {
    Completed,
    AbortedNetwork,
    AbortedConfusion,
    AbortedLoopCap,
}

impl TerminalState {
    pub fn failure_reason(self) -> Option<FailureReason> {
        match self {
            TerminalState::Completed => None,
            TerminalState::AbortedNetwork => Some(FailureReason::NetworkInstability),
            TerminalState::AbortedConfusion => Some(FailureReason::CharacterConfusion),
            TerminalState::AbortedLoopCap => Some(FailureReason::InfiniteLoop),
        }
    }
}

/// Exactly one per completed run: appropriate, inappropriate (with at least
/// one flag), or invalid (with exactly one failure reason).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Appropriate,
    Inappropriate { flags: Vec<InappropriateFlag> },
    Invalid { reason: FailureReason },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Appropriate => "appropriate",
            Outcome::Inappropriate { .. } => "inappropriate",
            Outcome::Invalid { .. } => "invalid",
        }
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, Outcome::Invalid { .. })
    }

    /// Compact single-token form used in CSV exports, e.g.
    /// `invalid:infinite_loop`.
    pub fn csv_label(&self) -> String {
        match self {
            Outcome::Invalid { reason } => format!("invalid:{reason}"),
            other => other.label().to_string(),
        }
    }

    pub fn parse_csv_label(s: &str) -> Result<Outcome, ModelError> {
        match s {
            "appropriate" => Ok(Outcome::Appropriate),
            "inappropriate" => Ok(Outcome::Inappropriate { flags: Vec::new() }),
            other => match other.strip_prefix("invalid:") {
                Some(reason) => Ok(Outcome::Invalid {
                    reason: reason.parse()?,
                }),
                None => Err(ModelError::UnknownLabel(s.to_string())),
            },
        }
    }
}

/// Word-count thresholds for prompt length classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthThresholds {
    pub short_max: usize,
    pub long_min: usize,
}

impl Default for LengthThresholds {
    fn default() -> Self {
        LengthThresholds {
            short_max: 5,
            long_min: 11,
        }
    }
}

impl LengthThresholds {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.short_max >= self.long_min {
            return Err(ModelError::InvalidThresholds {
                short_max: self.short_max,
                long_min: self.long_min,
            });
        }
        Ok(())
    }
}

/// Classifies prompt length by word count: words are split on Unicode
/// whitespace, so hyphen- and dash-joined tokens count once.
pub fn classify_prompt_length(
    text: &str,
    thresholds: &LengthThresholds,
) -> Result<LengthClass, ModelError> {
    thresholds.validate()?;
    let words = text.split_whitespace().count();
    if words == 0 {
        return Err(ModelError::EmptyPrompt);
    }
    Ok(if words <= thresholds.short_max {
        LengthClass::Short
    } else if words >= thresholds.long_min {
        LengthClass::Long
    } else {
        LengthClass::Medium
    })
}

/// Total over the four terminal states crossed with any flag list.
pub fn classify_outcome(terminal: TerminalState, flags: Vec<InappropriateFlag>) -> Outcome {
    match terminal.failure_reason() {
        Some(reason) => Outcome::Invalid { reason },
        None => {
            if flags.is_empty() {
                Outcome::Appropriate
            } else {
                Outcome::Inappropriate { flags }
            }
        }
    }
}

/// Normalized token-set overlap (Jaccard): tokens are lowercased
/// alphanumeric runs, and the score is |A∩B| / |A∪B|.
pub fn token_set_overlap(a: &str, b: &str) -> f64 {
    fn tokens(s: &str) -> std::collections::BTreeSet<String> {
        s.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.to_lowercase())
            .collect()
    }
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let intersection = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    intersection as f64 / union as f64
}

/// All 1-based index pairs (i < j) whose prompts overlap at or above the
/// threshold. This is the repetitive-visuals heuristic: token overlap only,
/// no semantic model.
pub fn repetitive_pairs(prompts: &[String], threshold: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..prompts.len() {
        for j in (i + 1)..prompts.len() {
            if token_set_overlap(&prompts[i], &prompts[j]) >= threshold {
                pairs.push((i + 1, j + 1));
            }
        }
    }
    pairs
}

/// Per-run accounting. Times are integer milliseconds so that sums
/// recomputed from a transcript match the live run without drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total_loops: u64,
    pub total_token_length: u64,
    pub communicate_time_ms: u64,
    pub total_time_ms: u64,
    pub cost: Usd,
}

impl RunMetrics {
    pub fn communicate_time_s(&self) -> f64 {
        self.communicate_time_ms as f64 / 1000.0
    }

    pub fn total_time_s(&self) -> f64 {
        self.total_time_ms as f64 / 1000.0
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.communicate_time_ms > self.total_time_ms {
            return Err(format!(
                "communicate_time {} ms exceeds total_time {} ms",
                self.communicate_time_ms, self.total_time_ms
            ));
        }
        if self.cost.is_negative() {
            return Err(format!("negative cost {}", self.cost));
        }
        Ok(())
    }
}

/// Componentwise sum; the empty list is the all-zero identity.
pub fn merge_metrics(parts: &[RunMetrics]) -> RunMetrics {
    let mut out = RunMetrics::default();
    for p in parts {
        out.total_loops += p.total_loops;
        out.total_token_length += p.total_token_length;
        out.communicate_time_ms += p.communicate_time_ms;
        out.total_time_ms += p.total_time_ms;
        out.cost += p.cost;
    }
    out
}

/// One finished run, as stored in `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub prompt: UserPrompt,
    pub length_class: LengthClass,
    pub model_id: String,
    pub metrics: RunMetrics,
    pub outcome: Outcome,
    pub transcript_digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> LengthThresholds {
        LengthThresholds::default()
    }

    #[test]
    fn four_word_title_is_short() {
        assert_eq!(
            classify_prompt_length("Why Do Cats Stare", &defaults()).unwrap(),
            LengthClass::Short
        );
    }

    #[test]
    fn eleven_word_title_is_long() {
        let text = "The incredible migration of monarch butterflies through three countries and generations";
        assert_eq!(
            classify_prompt_length(text, &defaults()).unwrap(),
            LengthClass::Long
        );
    }

    #[test]
    fn eight_words_is_medium() {
        assert_eq!(
            classify_prompt_length("one two three four five six seven eight", &defaults()).unwrap(),
            LengthClass::Medium
        );
    }

    #[test]
    fn hyphen_and_dash_joined_tokens_count_once() {
        // 12 words: the em-dash glues "amazing" and "here's" into one token.
        let text = "This owl's head-turning trick is both creepy and amazing—here's how it works";
        assert_eq!(text.split_whitespace().count(), 12);
        assert_eq!(
            classify_prompt_length(text, &defaults()).unwrap(),
            LengthClass::Long
        );
    }

    #[test]
    fn blank_prompt_is_an_error() {
        assert_eq!(
            classify_prompt_length("   \t\n", &defaults()),
            Err(ModelError::EmptyPrompt)
        );
        assert!(UserPrompt::new("  ").is_err());
    }

    #[test]
    fn thresholds_must_be_ordered() {
        let bad = LengthThresholds {
            short_max: 11,
            long_min: 11,
        };
        assert!(classify_prompt_length("hello there", &bad).is_err());
    }

    #[test]
    fn custom_thresholds_shift_the_buckets() {
        let wide = LengthThresholds {
            short_max: 3,
            long_min: 9,
        };
        assert_eq!(
            classify_prompt_length("a b c d", &wide).unwrap(),
            LengthClass::Medium
        );
        assert_eq!(
            classify_prompt_length("a b c d e f g h i", &wide).unwrap(),
            LengthClass::Long
        );
    }

    #[test]
    fn outcome_classification_is_total() {
        use TerminalState::*;
        let flag = InappropriateFlag::RepetitiveVisuals { scenes: (1, 3) };
        assert_eq!(
            classify_outcome(Completed, vec![]),
            Outcome::Appropriate
        );
        assert_eq!(
            classify_outcome(Completed, vec![flag.clone()]),
            Outcome::Inappropriate {
                flags: vec![flag.clone()]
            }
        );
        assert_eq!(
            classify_outcome(AbortedLoopCap, vec![]),
            Outcome::Invalid {
                reason: FailureReason::InfiniteLoop
            }
        );
        // Flags on an aborted run are discarded: invalid wins.
        assert_eq!(
            classify_outcome(AbortedNetwork, vec![flag.clone()]),
            Outcome::Invalid {
                reason: FailureReason::NetworkInstability
            }
        );
        assert_eq!(
            classify_outcome(AbortedConfusion, vec![flag]),
            Outcome::Invalid {
                reason: FailureReason::CharacterConfusion
            }
        );
    }

    #[test]
    fn merge_of_empty_list_is_zero() {
        assert_eq!(merge_metrics(&[]), RunMetrics::default());
    }

    #[test]
    fn merge_adds_componentwise() {
        let a = RunMetrics {
            total_loops: 2,
            total_token_length: 100,
            communicate_time_ms: 1_000,
            total_time_ms: 2_000,
            cost: "0.001".parse().unwrap(),
        };
        let b = RunMetrics {
            total_loops: 3,
            total_token_length: 50,
            communicate_time_ms: 500,
            total_time_ms: 1_000,
            cost: "0.002".parse().unwrap(),
        };
        let m = merge_metrics(&[a, b]);
        assert_eq!(m.total_loops, 5);
        assert_eq!(m.total_token_length, 150);
        assert_eq!(m.communicate_time_ms, 1_500);
        assert_eq!(m.total_time_ms, 3_000);
        assert_eq!(m.cost, "0.003".parse().unwrap());
    }

    #[test]
    fn outcome_csv_labels_round_trip() {
        let cases = [
            Outcome::Appropriate,
            Outcome::Invalid {
                reason: FailureReason::NetworkInstability,
            },
            Outcome::Invalid {
                reason: FailureReason::InfiniteLoop,
            },
        ];
        for c in cases {
            assert_eq!(Outcome::parse_csv_label(&c.csv_label()).unwrap(), c);
        }
        // Flags are carried by the JSON report, not the CSV label.
        let inapp = Outcome::Inappropriate {
            flags: vec![InappropriateFlag::ModerationFlagged { scene: 2 }],
        };
        assert_eq!(inapp.csv_label(), "inappropriate");
    }

    #[test]
    fn metrics_validation_rejects_comm_exceeding_total() {
        let m = RunMetrics {
            communicate_time_ms: 10,
            total_time_ms: 5,
            ..RunMetrics::default()
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn user_prompt_deserialization_rejects_blank_text() {
        assert!(serde_json::from_str::<UserPrompt>(r#"{"text":"  "}"#).is_err());
        let p: UserPrompt =
            serde_json::from_str(r#"{"text":"owls","topic_class":"animal"}"#).unwrap();
        assert_eq!(p.topic_class, Some(TopicClass::Animal));
    }
}
