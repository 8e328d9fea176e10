//! Scalar constant-velocity Kalman filter for the host speed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KfParams {
    /// Process-noise variance, (m/s)².
    pub q: f64,
    /// Measurement-noise variance, (m/s)².
    pub r: f64,
    /// Initial covariance, (m/s)².
    pub p0: f64,
    /// Initial speed estimate; the initial true host speed when absent.
    pub v0: Option<f64>,
}

impl Default for KfParams {
    fn default() -> Self {
        Self {
            q: 0.5,
            r: 2.0,
            p0: 1.0,
            v0: None,
        }
    }
}

impl KfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q >= 0.0) {
            return Err(Error::Config(format!("kf.q must be >= 0, got {}", self.q)));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::Config(format!("kf.r must be > 0, got {}", self.r)));
        }
        if !(self.p0.is_finite() && self.p0 >= 0.0) {
            return Err(Error::Config(format!(
                "kf.p0 must be >= 0, got {}",
                self.p0
            )));
        }
        if let Some(v0) = self.v0 {
            if !(v0.is_finite() && v0 >= 0.0) {
                return Err(Error::Config(format!(
                    "kf.v0 must be a non-negative speed, got {v0}"
                )));
            }
        }
        Ok(())
    }
}

/// Filter internals after the most recent predict/update cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfState {
    /// Predicted speed `v̂(t+Δt|t)`.
    pub v_prior: f64,
    /// Corrected speed `v̂(t+Δt|t+Δt)`.
    pub v_post: f64,
    pub p_prior: f64,
    pub p_post: f64,
    /// Gain used by the last update; zero when the update was skipped.
    pub gain: f64,
}

impl KfState {
    pub fn new(v0: f64, p0: f64) -> Self {
        Self {
            v_prior: v0,
            v_post: v0,
            p_prior: p0,
            p_post: p0,
            gain: 0.0,
        }
    }

    /// Constant-velocity prediction: the prior equals the last posterior and
    /// the covariance grows by `q`.
    pub fn predict(&self, params: &KfParams) -> Self {
        Self {
            v_prior: self.v_post,
            p_prior: self.p_post + params.q,
            ..*self
        }
    }

    /// Gain the next update would use, `P⁻/(P⁻ + R)`.
    pub fn pending_gain(&self, params: &KfParams) -> f64 {
        self.p_prior / (self.p_prior + params.r)
    }

    /// Measurement update with speed reading `z`.
    pub fn update(&self, z: f64, params: &KfParams) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::NonFiniteMeasurement(z));
        }
        let gain = self.pending_gain(params);
        Ok(Self {
            v_post: self.v_prior + gain * (z - self.v_prior),
            p_post: (1.0 - gain) * self.p_prior,
            gain,
            ..*self
        })
    }

    /// Skips the measurement update, keeping the prediction as the estimate.
    pub fn hold(&self) -> Self {
        Self {
            v_post: self.v_prior,
            p_post: self.p_prior,
            gain: 0.0,
            ..*self
        }
    }
}
