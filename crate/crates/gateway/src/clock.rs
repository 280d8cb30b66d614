//! Time source, and a sliding-window request limiter built on it.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Time since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Virtual clock: `sleep` advances time instantly. Records every sleep.
#[derive(Default)]
pub struct ManualClock {
    state: Mutex<(Duration, Vec<Duration>)>,
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        self.state.lock().unwrap().0 += d;
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().unwrap().1.clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.state.lock().unwrap().0
    }

    fn sleep(&self, d: Duration) {
        let mut s = self.state.lock().unwrap();
        s.0 += d;
        s.1.push(d);
    }
}

pub const RATE_WINDOW: Duration = Duration::from_secs(60);

/// At most `cap` grants in any window of [`RATE_WINDOW`].
pub struct RateLimiter {
    cap: usize,
    grants: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn per_minute(cap: u32) -> Self {
        Self {
            cap: cap.max(1) as usize,
            grants: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until a request may be sent. Waiting callers queue on the
    /// lock, so grants are handed out in arrival order.
    pub fn acquire(&self, clock: &dyn Clock) {
        let mut grants = self.grants.lock().expect("limiter lock");
        loop {
            let now = clock.now();
            while grants.front().is_some_and(|&t| now >= t + RATE_WINDOW) {
                grants.pop_front();
            }
            if grants.len() < self.cap {
                grants.push_back(now);
                return;
            }
            let oldest = *grants.front().expect("cap >= 1");
            clock.sleep(oldest + RATE_WINDOW - now);
        }
    }
}
