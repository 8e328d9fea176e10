//! Speed sensor with Gaussian noise and the speed-injection attack.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasShape {
    /// The same offset on every attacked frame.
    ConstantOffset,
    /// Offset grows by `bias` on every attacked frame.
    CumulativeRamp,
}

/// Measurement-corruption schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackProfile {
    pub enabled: bool,
    /// First attacked step `t*`.
    pub start_step: usize,
    /// Number of attacked steps.
    pub duration: usize,
    /// Bias per application, m/s.
    pub bias: f64,
    pub shape: BiasShape,
}

impl Default for AttackProfile {
    fn default() -> Self {
        Self {
            enabled: false,
            start_step: 300,
            duration: 400,
            bias: 0.8,
            shape: BiasShape::CumulativeRamp,
        }
    }
}

impl AttackProfile {
    pub fn validate(&self) -> Result<()> {
        if self.duration < 1 {
            return Err(Error::Config("attack.duration must be >= 1".into()));
        }
        if !(self.bias.is_finite() && self.bias > 0.0) {
            return Err(Error::Config(format!(
                "attack.bias must be > 0, got {}",
                self.bias
            )));
        }
        Ok(())
    }

    /// Whether the frame at `step` is spoofed.
    pub fn is_active(&self, step: usize) -> bool {
        self.enabled && step >= self.start_step && step - self.start_step < self.duration
    }

    /// Injected offset at `step`; exactly zero outside the attack window.
    pub fn bias_at(&self, step: usize) -> f64 {
        if !self.is_active(step) {
            return 0.0;
        }
        match self.shape {
            BiasShape::ConstantOffset => self.bias,
            BiasShape::CumulativeRamp => self.bias * (step - self.start_step + 1) as f64,
        }
    }
}

/// Noisy speed channel `z = v + m + b`.
#[derive(Debug, Clone)]
pub struct SensorModel {
    noise: Normal<f64>,
    rng: SimRng,
}

impl SensorModel {
    pub fn new(noise_std: f64, rng: SimRng) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::Config(format!(
                "sensor noise std {noise_std} must be finite and >= 0"
            )));
        }
        let noise = Normal::new(0.0, noise_std)
            .map_err(|e| Error::Config(format!("sensor noise std {noise_std}: {e}")))?;
        Ok(Self { noise, rng })
    }

    pub fn noise_std(&self) -> f64 {
        self.noise.std_dev()
    }

    /// Reads the speed at `step`. One noise sample is drawn per call whether
    /// or not the noise is zero, keeping the stream aligned across configs.
    pub fn measure(&mut self, v_true: f64, step: usize, profile: &AttackProfile) -> f64 {
        let m = self.noise.sample(&mut self.rng);
        (v_true + m + profile.bias_at(step)).max(0.0)
    }
}
