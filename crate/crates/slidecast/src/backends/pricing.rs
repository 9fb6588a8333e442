//! Pricing tables and the append-only cost ledger.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChatUsage, MediaKind};
use crate::money::Usd;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PricingError {
    #[error("no pricing entry for model {0:?}")]
    UnknownModel(String),
}

/// USD per one million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRates {
    pub prompt_rate: Usd,
    pub completion_rate: Usd,
}

/// Flat USD per media call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MediaRates {
    pub image: Usd,
    pub narration: Usd,
    pub music: Usd,
}

impl Default for MediaRates {
    fn default() -> Self {
        MediaRates {
            image: Usd::ZERO,
            narration: Usd::ZERO,
            music: Usd::ZERO,
        }
    }
}

impl MediaRates {
    pub fn for_kind(&self, kind: MediaKind) -> Usd {
        match kind {
            MediaKind::Image => self.image,
            MediaKind::Narration => self.narration,
            MediaKind::Music => self.music,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingTable {
    pub models: BTreeMap<String, ModelRates>,
    pub media: MediaRates,
}

impl PricingTable {
    /// Chat cost: `prompt_tokens * prompt_rate/1e6 + completion_tokens *
    /// completion_rate/1e6`, exact.
    pub fn chat_cost(&self, model_id: &str, usage: &ChatUsage) -> Result<Usd, PricingError> {
        let rates = self
            .models
            .get(model_id)
            .ok_or_else(|| PricingError::UnknownModel(model_id.to_string()))?;
        Ok(Usd::per_million(usage.prompt_tokens, rates.prompt_rate)
            + Usd::per_million(usage.completion_tokens, rates.completion_rate))
    }

    pub fn media_cost(&self, kind: MediaKind) -> Usd {
        self.media.for_kind(kind)
    }

    pub fn covers_model(&self, model_id: &str) -> bool {
        self.models.contains_key(model_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "call", rename_all = "snake_case")]
pub enum CallKind {
    Chat {
        model_id: String,
        prompt_tokens: u64,
        completion_tokens: u64,
    },
    Media {
        kind: MediaKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub run_id: String,
    #[serde(flatten)]
    pub call: CallKind,
    pub cost: Usd,
}

/// Append-only record of every paid call. Entries never mutate; the total is
/// the exact sum of entries.
#[derive(Debug, Default)]
pub struct CostLedger {
    entries: Mutex<Vec<LedgerEntry>>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_chat(&self, run_id: &str, model_id: &str, usage: ChatUsage, cost: Usd) {
        self.entries.lock().unwrap().push(LedgerEntry {
            run_id: run_id.to_string(),
            call: CallKind::Chat {
                model_id: model_id.to_string(),
                prompt_tokens: usage.prompt_tokens,
                completion_tokens: usage.completion_tokens,
            },
            cost,
        });
    }

    pub fn record_media(&self, run_id: &str, kind: MediaKind, cost: Usd) {
        self.entries.lock().unwrap().push(LedgerEntry {
            run_id: run_id.to_string(),
            call: CallKind::Media { kind },
            cost,
        });
    }

    pub fn total(&self) -> Usd {
        self.entries.lock().unwrap().iter().map(|e| e.cost).sum()
    }

    pub fn run_total(&self, run_id: &str) -> Usd {
        self.entries
            .lock()
            .unwrap()
            .iter()
            .filter(|e| e.run_id == run_id)
            .map(|e| e.cost)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<LedgerEntry> {
        self.entries.lock().unwrap().clone()
    }

    /// Mean cost per generated video: total divided by the count of runs
    /// that actually produced one.
    pub fn mean_per_video(total: Usd, generated: u64) -> Option<Usd> {
        (generated > 0).then(|| total.div_count(generated))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn usd(s: &str) -> Usd {
        s.parse().unwrap()
    }

    fn table() -> PricingTable {
        let mut models = BTreeMap::new();
        models.insert(
            "test-model".to_string(),
            ModelRates {
                prompt_rate: usd("1.0"),
                completion_rate: usd("2.0"),
            },
        );
        PricingTable {
            models,
            media: MediaRates {
                image: usd("0.01"),
                narration: usd("0.005"),
                music: usd("0.02"),
            },
        }
    }

    #[test]
    fn chat_cost_published_anchor() {
        let cost = table()
            .chat_cost(
                "test-model",
                &ChatUsage {
                    prompt_tokens: 120,
                    completion_tokens: 80,
                },
            )
            .unwrap();
        assert_eq!(cost, usd("0.00028"));
    }

    #[test]
    fn whole_million_tokens_at_half_rate() {
        let mut t = table();
        t.models.get_mut("test-model").unwrap().prompt_rate = usd("0.5");
        let cost = t
            .chat_cost(
                "test-model",
                &ChatUsage {
                    prompt_tokens: 1_000_000,
                    completion_tokens: 0,
                },
            )
            .unwrap();
        assert_eq!(cost, usd("0.50"));
    }

    #[test]
    fn unknown_model_is_an_error() {
        assert_eq!(
            table().chat_cost("nope", &ChatUsage::default()),
            Err(PricingError::UnknownModel("nope".to_string()))
        );
    }

    #[test]
    fn ledger_totals_are_exact_sums() {
        let ledger = CostLedger::new();
        for i in 0..100 {
            ledger.record_media(&format!("r{i}"), MediaKind::Image, usd("0.103"));
        }
        assert_eq!(ledger.total(), usd("10.30"));
        assert_eq!(
            CostLedger::mean_per_video(ledger.total(), 100),
            Some(usd("0.103"))
        );
        assert_eq!(CostLedger::mean_per_video(ledger.total(), 0), None);
    }

    #[test]
    fn run_totals_filter_by_run() {
        let ledger = CostLedger::new();
        ledger.record_chat(
            "a",
            "test-model",
            ChatUsage {
                prompt_tokens: 120,
                completion_tokens: 80,
            },
            usd("0.00028"),
        );
        ledger.record_media("b", MediaKind::Music, usd("0.02"));
        assert_eq!(ledger.run_total("a"), usd("0.00028"));
        assert_eq!(ledger.run_total("b"), usd("0.02"));
        assert_eq!(ledger.total(), usd("0.02028"));
    }
}
