//! Longitudinal plant: host speed integration, gap evolution, safe distance
//! and the lead-vehicle driver model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Physical constants shared by the plant, the controller and the safety
/// analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Sampling period, s.
    pub dt: f64,
    /// Headway time, s.
    pub headway: f64,
    /// Comfortable braking deceleration (positive), m/s².
    pub comfort_decel: f64,
    /// Speed cap for both vehicles, m/s.
    pub v_max: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            dt: 1.0,
            headway: 1.8,
            comfort_decel: 3.4,
            v_max: 40.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "physical.dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(1.5..=2.5).contains(&self.headway) {
            return Err(Error::Config(format!(
                "physical.headway must lie in [1.5, 2.5] s, got {}",
                self.headway
            )));
        }
        if !(self.comfort_decel.is_finite() && self.comfort_decel >= 3.4) {
            return Err(Error::Config(format!(
                "physical.comfort_decel must be >= 3.4 m/s^2, got {}",
                self.comfort_decel
            )));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::Config(format!(
                "physical.v_max must be > 0, got {}",
                self.v_max
            )));
        }
        Ok(())
    }

    /// Reaction component of the safe distance, `h·v`.
    pub fn reaction_distance(&self, v: f64) -> f64 {
        self.headway * v
    }

    /// Braking component of the safe distance, `v²/(2a)`.
    pub fn braking_distance(&self, v: f64) -> f64 {
        v * v / (2.0 * self.comfort_decel)
    }
}

/// True kinematic state of both vehicles at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldState {
    pub t: usize,
    pub host_speed: f64,
    pub lead_speed: f64,
    pub gap: f64,
    /// Acceleration applied to the host during the previous step, m/s².
    pub u_applied: f64,
}

impl WorldState {
    pub fn collided(&self) -> bool {
        self.gap <= 0.0
    }
}

/// Advances the host speed by one sampling period: `clamp(v + u·dt, 0, v_max)`.
pub fn step_host_speed(v_h: f64, u: f64, params: &PhysicalParams) -> f64 {
    (v_h + u * params.dt).clamp(0.0, params.v_max)
}

/// Advances the gap using end-of-period speeds.
pub fn step_gap(d: f64, v_l_next: f64, v_h_next: f64, params: &PhysicalParams) -> f64 {
    d + (v_l_next - v_h_next) * params.dt
}

/// Desired following distance `h·v + v²/(2a)`.
pub fn safe_distance(v: f64, params: &PhysicalParams) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return Err(Error::NegativeSpeed(v));
    }
    Ok(params.reaction_distance(v) + params.braking_distance(v))
}

/// Lead driver: cruise toward a target speed with occasional random braking
/// events of fixed length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeadBehavior {
    /// Cruise speed the lead settles at, m/s.
    pub v_cruise: f64,
    /// Per-step probability of starting a braking event.
    pub p_brake: f64,
    /// Deceleration magnitude during a braking event, m/s².
    pub brake_decel: f64,
    /// Length of a braking event, steps.
    pub brake_steps: u32,
    /// Acceleration used to return to cruise speed, m/s².
    pub accel: f64,
}

impl Default for LeadBehavior {
    fn default() -> Self {
        Self {
            v_cruise: 25.0,
            p_brake: 0.01,
            brake_decel: 1.0,
            brake_steps: 3,
            accel: 1.0,
        }
    }
}

impl LeadBehavior {
    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_brake) {
            return Err(Error::Config(format!(
                "lead.p_brake must lie in [0, 1], got {}",
                self.p_brake
            )));
        }
        if !(self.brake_decel.is_finite() && self.brake_decel > 0.0) {
            return Err(Error::Config(format!(
                "lead.brake_decel must be > 0, got {}",
                self.brake_decel
            )));
        }
        if !(self.accel.is_finite() && self.accel > 0.0) {
            return Err(Error::Config(format!(
                "lead.accel must be > 0, got {}",
                self.accel
            )));
        }
        if !(self.v_cruise.is_finite() && self.v_cruise >= 0.0 && self.v_cruise <= params.v_max) {
            return Err(Error::Config(format!(
                "lead.v_cruise must lie in [0, v_max], got {}",
                self.v_cruise
            )));
        }
        Ok(())
    }
}

/// Progress of the current lead braking event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LeadState {
    pub braking_left: u32,
}

/// Advances the lead speed by one step.
///
/// A Bernoulli draw is taken only while no braking event is running, so the
/// stream position depends on the event history alone.
pub fn step_lead(
    v_l: f64,
    behavior: &LeadBehavior,
    state: &mut LeadState,
    rng: &mut SimRng,
    params: &PhysicalParams,
) -> f64 {
    if state.braking_left == 0 && behavior.brake_steps > 0 && rng.random_bool(behavior.p_brake) {
        state.braking_left = behavior.brake_steps;
    }
    let next = if state.braking_left > 0 {
        state.braking_left -= 1;
        v_l - behavior.brake_decel * params.dt
    } else if v_l < behavior.v_cruise {
        (v_l + behavior.accel * params.dt).min(behavior.v_cruise)
    } else {
        (v_l - behavior.accel * params.dt).max(behavior.v_cruise)
    };
    next.clamp(0.0, params.v_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use approx::assert_relative_eq;

    fn unit() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn host_speed_examples() {
        assert_relative_eq!(step_host_speed(20.0, -3.4, &unit()), 16.6, epsilon = 1e-12);
        assert_eq!(step_host_speed(20.0, 0.0, &unit()), 20.0);
        assert_eq!(step_host_speed(1.0, -3.4, &unit()), 0.0);
        assert_eq!(step_host_speed(39.5, 2.5, &unit()), 40.0);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(step_gap(100.0, 25.0, 20.0, &unit()), 105.0);
        assert_eq!(step_gap(100.0, 20.0, 20.0, &unit()), 100.0);
        assert_eq!(step_gap(5.0, 0.0, 10.0, &unit()), -5.0);
    }

    #[test]
    fn safe_distance_examples() {
        let p = unit();
        assert_relative_eq!(
            safe_distance(20.0, &p).unwrap(),
            94.823_529_411_764_7,
            epsilon = 1e-9
        );
        assert_eq!(safe_distance(0.0, &p).unwrap(), 0.0);
        let p2 = PhysicalParams { headway: 2.0, ..p };
        assert_relative_eq!(
            safe_distance(10.0, &p2).unwrap(),
            34.705_882_352_941_18,
            epsilon = 1e-9
        );
        assert!(matches!(
            safe_distance(-1.0, &p),
            Err(Error::NegativeSpeed(_))
        ));
    }

    #[test]
    fn lead_at_cruise_without_events_holds() {
        let b = LeadBehavior {
            v_cruise: 20.0,
            p_brake: 0.0,
            ..LeadBehavior::default()
        };
        let mut st = LeadState::default();
        let mut rng = stream(1, Stream::Lead);
        assert_eq!(step_lead(20.0, &b, &mut st, &mut rng, &unit()), 20.0);
    }

    #[test]
    fn lead_braking_event() {
        let b = LeadBehavior {
            brake_decel: 2.0,
            brake_steps: 3,
            ..LeadBehavior::default()
        };
        let mut rng = stream(1, Stream::Lead);
        let mut st = LeadState { braking_left: 2 };
        assert_eq!(step_lead(20.0, &b, &mut st, &mut rng, &unit()), 18.0);
        assert_eq!(st.braking_left, 1);
        let mut st = LeadState { braking_left: 2 };
        assert_eq!(step_lead(1.0, &b, &mut st, &mut rng, &unit()), 0.0);
    }

    #[test]
    fn lead_always_brakes_with_unit_probability() {
        let b = LeadBehavior {
            p_brake: 1.0,
            brake_decel: 2.0,
            ..LeadBehavior::default()
        };
        let mut rng = stream(3, Stream::Lead);
        let mut st = LeadState::default();
        let mut v = 10.0;
        for _ in 0..10 {
            v = step_lead(v, &b, &mut st, &mut rng, &unit());
        }
        assert_eq!(v, 0.0);
    }

    #[test]
    fn lead_accelerates_toward_cruise() {
        let b = LeadBehavior {
            v_cruise: 25.0,
            p_brake: 0.0,
            accel: 1.0,
            ..LeadBehavior::default()
        };
        let mut rng = stream(1, Stream::Lead);
        let mut st = LeadState::default();
        assert_eq!(step_lead(20.0, &b, &mut st, &mut rng, &unit()), 21.0);
        assert_eq!(step_lead(24.5, &b, &mut st, &mut rng, &unit()), 25.0);
        assert_eq!(step_lead(26.0, &b, &mut st, &mut rng, &unit()), 25.0);
    }

    #[test]
    fn lead_sequences_are_reproducible() {
        let b = LeadBehavior {
            p_brake: 0.2,
            ..LeadBehavior::default()
        };
        let run = || {
            let mut rng = stream(99, Stream::Lead);
            let mut st = LeadState::default();
            let mut v = 20.0;
            (0..500)
                .map(|_| {
                    v = step_lead(v, &b, &mut st, &mut rng, &unit());
                    v.to_bits()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(PhysicalParams {
            headway: 1.0,
            ..unit()
        }
        .validate()
        .is_err());
        assert!(PhysicalParams {
            comfort_decel: 3.0,
            ..unit()
        }
        .validate()
        .is_err());
        assert!(PhysicalParams { dt: 0.0, ..unit() }.validate().is_err());
        assert!(unit().validate().is_ok());
        let b = LeadBehavior {
            p_brake: 1.5,
            ..LeadBehavior::default()
        };
        assert!(b.validate(&unit()).is_err());
    }
}
