//! Behavioral intrusion detector.
//!
//! The detector is not a trained classifier. It flags a frame when the
//! reported speed would push the filtered estimate over the safety threshold,
//! with per-frame sensitivity `accuracy`, an optional bounded-delay backstop
//! and an optional latch. False positives are not modeled: only spoofed
//! frames can be flagged.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdsConfig {
    pub enabled: bool,
    /// Probability of flagging a violating frame.
    pub accuracy: f64,
    /// Detection-delay bound `N`, steps. Enforced only when `backstop` is on.
    pub max_delay_steps: u32,
    /// Force a flag once a violation has gone undetected for `N` steps.
    pub backstop: bool,
    /// Keep the flag raised once it has been raised.
    pub latch: bool,
}

impl Default for IdsConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            accuracy: 1.0,
            max_delay_steps: 1,
            backstop: true,
            latch: true,
        }
    }
}

impl IdsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(Error::Config(format!(
                "ids.accuracy must lie in [0, 1], got {}",
                self.accuracy
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdsState {
    pub latched: bool,
    /// First step at which the flag was raised.
    pub first_detection_step: Option<usize>,
    /// Consecutive violating frames that went unflagged.
    pub violation_streak: u32,
}

/// Decides the intrusion flag `S` for the frame at `step`.
///
/// `spoofed` is the ground-truth label of the frame. A frame violates when it
/// is spoofed and `z > z_min`. The Bernoulli draw is taken only on violating
/// frames.
pub fn ids_step(
    z: f64,
    z_min: f64,
    spoofed: bool,
    step: usize,
    state: &mut IdsState,
    cfg: &IdsConfig,
    rng: &mut SimRng,
) -> bool {
    if state.latched {
        return true;
    }
    if !(spoofed && z > z_min) {
        state.violation_streak = 0;
        return false;
    }
    let caught = rng.random_bool(cfg.accuracy);
    let overdue = cfg.backstop && state.violation_streak >= cfg.max_delay_steps;
    if caught || overdue {
        state.violation_streak = 0;
        state.first_detection_step.get_or_insert(step);
        if cfg.latch {
            state.latched = true;
        }
        true
    } else {
        state.violation_streak += 1;
        false
    }
}
