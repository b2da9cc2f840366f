//! Per-key sliding-window rate limiting.

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use parking_lot::Mutex;

pub struct RateLimiter {
    max_per_window: u32,
    window: Duration,
    state: Mutex<HashMap<String, VecDeque<Instant>>>,
}

impl RateLimiter {
    /// Allows `max_per_second` requests per key within a sliding one
    /// second window.
    pub fn per_second(max_per_second: u32) -> Self {
        RateLimiter {
            max_per_window: max_per_second,
            window: Duration::from_secs(1),
            state: Mutex::new(HashMap::new()),
        }
    }

    /// Records one request for `key`; `Err` carries a retry-after hint.
    pub fn check(&self, key: &str) -> Result<(), Duration> {
        self.check_at(key, Instant::now())
    }

    fn check_at(&self, key: &str, now: Instant) -> Result<(), Duration> {
        let mut state = self.state.lock();
        let hits = state.entry(key.to_string()).or_default();
        while let Some(&oldest) = hits.front() {
            if now.duration_since(oldest) >= self.window {
                hits.pop_front();
            } else {
                break;
            }
        }
        if hits.len() as u32 >= self.max_per_window {
            let oldest = *hits.front().expect("window is non-empty");
            return Err(self.window.saturating_sub(now.duration_since(oldest)));
        }
        hits.push_back(now);
        Ok(())
    }
}
