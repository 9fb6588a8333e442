//! Retry with exponential backoff for transport-class failures.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::BackendError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub backoff_factor: f64,
    pub per_attempt_timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 1_000,
            backoff_factor: 2.0,
            per_attempt_timeout_ms: 60_000,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts == 0 {
            return Err("retry max_attempts must be at least 1".to_string());
        }
        if self.backoff_factor <= 0.0 || !self.backoff_factor.is_finite() {
            return Err(format!("invalid backoff_factor {}", self.backoff_factor));
        }
        Ok(())
    }

    /// Delay scheduled after the `attempt`-th failure (1-based).
    pub fn delay_after_ms(&self, attempt: u32) -> u64 {
        (self.base_delay_ms as f64 * self.backoff_factor.powi(attempt as i32 - 1)).round() as u64
    }
}

/// Abstraction over waiting so mocks and tests never sleep for real.
pub trait Sleeper: Send + Sync {
    fn sleep_ms(&self, ms: u64);
}

pub struct RealSleeper;

impl Sleeper for RealSleeper {
    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}

/// Records scheduled delays without waiting. Used by mocks and tests.
#[derive(Default)]
pub struct RecordingSleeper {
    scheduled: Mutex<Vec<u64>>,
}

impl RecordingSleeper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scheduled_ms(&self) -> Vec<u64> {
        self.scheduled.lock().unwrap().clone()
    }
}

impl Sleeper for RecordingSleeper {
    fn sleep_ms(&self, ms: u64) {
        self.scheduled.lock().unwrap().push(ms);
    }
}

#[derive(Debug, Error)]
pub enum RetryFailure {
    #[error("network instability after {attempts} attempts: {last}")]
    NetworkInstability { attempts: u32, last: BackendError },
    #[error(transparent)]
    Fatal(BackendError),
}

/// Runs `call`, retrying transport errors up to `max_attempts` with delays
/// `base * factor^(attempt-1)`. Non-retryable errors pass through at once.
pub fn with_retry<T>(
    policy: &RetryPolicy,
    sleeper: &dyn Sleeper,
    mut call: impl FnMut() -> Result<T, BackendError>,
) -> Result<T, RetryFailure> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        match call() {
            Ok(value) => return Ok(value),
            Err(err) if err.is_retryable() => {
                if attempt >= policy.max_attempts {
                    return Err(RetryFailure::NetworkInstability {
                        attempts: attempt,
                        last: err,
                    });
                }
                sleeper.sleep_ms(policy.delay_after_ms(attempt));
            }
            Err(err) => return Err(RetryFailure::Fatal(err)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flaky(failures: u32) -> impl FnMut() -> Result<u32, BackendError> {
        let mut calls = 0;
        move || {
            calls += 1;
            if calls <= failures {
                Err(BackendError::Transport("boom".to_string()))
            } else {
                Ok(calls)
            }
        }
    }

    #[test]
    fn succeeds_after_two_failures_with_scheduled_backoff() {
        let sleeper = RecordingSleeper::new();
        let policy = RetryPolicy::default();
        let value = with_retry(&policy, &sleeper, flaky(2)).unwrap();
        assert_eq!(value, 3);
        assert_eq!(sleeper.scheduled_ms(), vec![1_000, 2_000]);
    }

    #[test]
    fn exhaustion_maps_to_network_instability() {
        let sleeper = RecordingSleeper::new();
        let policy = RetryPolicy::default();
        let err = with_retry(&policy, &sleeper, flaky(99)).unwrap_err();
        match err {
            RetryFailure::NetworkInstability { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(sleeper.scheduled_ms(), vec![1_000, 2_000]);
    }

    #[test]
    fn auth_error_passes_through_without_delay() {
        let sleeper = RecordingSleeper::new();
        let policy = RetryPolicy::default();
        let err = with_retry::<u32>(&policy, &sleeper, || {
            Err(BackendError::Auth("bad key".to_string()))
        })
        .unwrap_err();
        assert!(matches!(err, RetryFailure::Fatal(BackendError::Auth(_))));
        assert!(sleeper.scheduled_ms().is_empty());
    }

    #[test]
    fn single_attempt_policy_never_sleeps() {
        let sleeper = RecordingSleeper::new();
        let policy = RetryPolicy {
            max_attempts: 1,
            ..RetryPolicy::default()
        };
        let err = with_retry(&policy, &sleeper, flaky(1)).unwrap_err();
        assert!(matches!(err, RetryFailure::NetworkInstability { attempts: 1, .. }));
        assert!(sleeper.scheduled_ms().is_empty());
    }

    #[test]
    fn delay_schedule_follows_the_policy_arithmetic() {
        let policy = RetryPolicy {
            base_delay_ms: 500,
            backoff_factor: 3.0,
            ..RetryPolicy::default()
        };
        assert_eq!(policy.delay_after_ms(1), 500);
        assert_eq!(policy.delay_after_ms(2), 1_500);
        assert_eq!(policy.delay_after_ms(3), 4_500);
    }
}
