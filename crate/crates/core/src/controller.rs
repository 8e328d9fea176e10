//! Upper-level ACC control: error selection, discrete PID and the IDS
//! braking override.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::PhysicalParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    /// Speed-tracking gains.
    pub const CRUISE: Self = Self {
        kp: 0.2,
        ki: 0.1,
        kd: 0.0,
    };
    /// Spacing-control gains.
    pub const SPACING: Self = Self {
        kp: 0.5,
        ki: 0.05,
        kd: 0.2,
    };

    pub fn validate(&self, name: &str) -> Result<()> {
        if [self.kp, self.ki, self.kd].iter().all(|g| g.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("{name} gains must be finite")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Cruise,
    Spacing,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Cruise => "cruise",
            Mode::Spacing => "spacing",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cruise" => Ok(Mode::Cruise),
            "spacing" => Ok(Mode::Spacing),
            other => Err(Error::Trace(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub mode: Mode,
    pub e_prev: f64,
    pub e_integral: f64,
    pub v_ref: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl ControllerState {
    pub fn new(v_ref: f64, u_min: f64, u_max: f64) -> Self {
        Self {
            mode: Mode::Cruise,
            e_prev: 0.0,
            e_integral: 0.0,
            v_ref,
            u_min,
            u_max,
        }
    }

    /// Switches mode, discarding the integral accumulated in the old error
    /// units. `e_prev` is seeded with the new error so the switch step
    /// carries no derivative kick.
    pub fn enter(&mut self, mode: Mode, error: f64) {
        if mode != self.mode {
            self.mode = mode;
            self.e_integral = 0.0;
            self.e_prev = error;
        }
    }
}

/// Picks the active error: the spacing error when the gap is within
/// `switch_ratio` safe distances of the lead, the speed error otherwise.
pub fn select_error(d: f64, d_safe: f64, v_ref: f64, v_est: f64, switch_ratio: f64) -> (Mode, f64) {
    if d <= switch_ratio * d_safe {
        (Mode::Spacing, d - d_safe)
    } else {
        (Mode::Cruise, v_ref - v_est)
    }
}

/// Rectangle-rule integral, backward-difference derivative, output clamp.
pub fn pid_step(error: f64, state: &mut ControllerState, gains: &PidGains, dt: f64) -> f64 {
    let integral = state.e_integral + error * dt;
    let derivative = (error - state.e_prev) / dt;
    let u = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    state.e_integral = integral;
    state.e_prev = error;
    u.clamp(state.u_min, state.u_max)
}

/// `S·(−a) + (1 − S)·u_nominal`.
pub fn acc_ids_control(s_flag: bool, nominal_u: f64, params: &PhysicalParams) -> f64 {
    if s_flag {
        -params.comfort_decel
    } else {
        nominal_u
    }
}
