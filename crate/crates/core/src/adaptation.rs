//! Step-size control with the 1/5 success rule.

use serde::{Deserialize, Serialize};

pub const SIGMA_MIN: f64 = 1e-6;
pub const SIGMA_MAX: f64 = 1.0;
pub const DEFAULT_WINDOW: usize = 10;
pub const GROWTH: f64 = 1.2;
pub const TARGET_RATE: f64 = 0.2;

/// Multiplier applied when the success rate is below target: `1.2^(-1/4)`.
pub fn shrink_factor() -> f64 {
    GROWTH.powf(-0.25)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaController {
    sigma: f64,
    window: usize,
    successes: usize,
    trials: usize,
    sigma_min: f64,
    sigma_max: f64,
}

impl SigmaController {
    /// `sigma` is clamped into `[SIGMA_MIN, SIGMA_MAX]`; a zero window is treated as 1.
    pub fn new(sigma: f64, window: usize) -> Self {
        Self::with_bounds(sigma, window, SIGMA_MIN, SIGMA_MAX)
    }

    pub fn with_bounds(sigma: f64, window: usize, sigma_min: f64, sigma_max: f64) -> Self {
        assert!(
            sigma_min > 0.0 && sigma_min <= sigma_max,
            "invalid sigma bounds [{sigma_min}, {sigma_max}]"
        );
        Self {
            sigma: sigma.clamp(sigma_min, sigma_max),
            window: window.max(1),
            successes: 0,
            trials: 0,
            sigma_min,
            sigma_max,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn successes(&self) -> usize {
        self.successes
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Success rate of the current window, 0 when nothing was recorded.
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn record_offspring(&mut self, improved: bool) {
        self.trials += 1;
        if improved {
            self.successes += 1;
        }
    }

    /// True when generation `t` closes a window.
    pub fn due(&self, t: usize) -> bool {
        t > 0 && t.is_multiple_of(self.window)
    }

    /// Applies the rule to the current window and resets the counters.
    pub fn adapt_sigma(&mut self) {
        if self.trials > 0 {
            let rate = self.rate();
            if rate > TARGET_RATE {
                self.sigma *= GROWTH;
            } else if rate < TARGET_RATE {
                self.sigma *= shrink_factor();
            }
            self.sigma = self.sigma.clamp(self.sigma_min, self.sigma_max);
        }
        self.successes = 0;
        self.trials = 0;
    }
}
