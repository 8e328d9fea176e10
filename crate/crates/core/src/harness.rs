//! Scenario orchestration: wires plant, sensor, estimator, controller and IDS
//! into one deterministic step loop, and sweeps IDS accuracy.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{acc_ids_control, pid_step, select_error, ControllerState, PidGains};
use crate::dynamics::{
    safe_distance, step_gap, step_host_speed, step_lead, LeadBehavior, LeadState, PhysicalParams,
    WorldState,
};
use crate::error::{Error, Result};
use crate::estimator::{KfParams, KfState};
use crate::ids::{ids_step, IdsConfig, IdsState};
use crate::rng::{derive_seed, stream, Stream};
use crate::safety::{measurement_threshold, speed_threshold, ThresholdInputs};
use crate::threat::{AttackProfile, SensorModel};
use crate::trace::{detect_collision, StepTrace};

/// How the host realizes the nominal acceleration request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actuation {
    /// The request is applied as a speed setpoint `v̂ + u·dt` built from the
    /// ACC's filtered speed, so a corrupted estimate moves the vehicle.
    Setpoint,
    /// The request is applied to the true speed, `v + u·dt`.
    Direct,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub physical: PhysicalParams,
    pub kf: KfParams,
    pub gains_cruise: PidGains,
    pub gains_spacing: PidGains,
    pub lead: LeadBehavior,
    pub attack: AttackProfile,
    pub ids: IdsConfig,
    pub horizon: usize,
    pub seed: u64,
    /// Initial gap as a multiple of the initial safe distance.
    pub initial_gap_ratio: f64,
    /// Initial host and lead speed as a fraction of the lead cruise speed.
    pub initial_speed_ratio: f64,
    /// Driver-selected reference speed, m/s.
    pub v_ref: f64,
    /// Spacing mode engages when `d <= switch_ratio * d_safe`.
    pub switch_ratio: f64,
    /// Acceleration clamp `[u_min, u_max]`, m/s².
    pub u_limits: [f64; 2],
    /// Emergency braking always acts on the true speed; this selects how
    /// the nominal command does.
    pub actuation: Actuation,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            physical: PhysicalParams::default(),
            kf: KfParams::default(),
            gains_cruise: PidGains::CRUISE,
            gains_spacing: PidGains::SPACING,
            lead: LeadBehavior::default(),
            attack: AttackProfile::default(),
            ids: IdsConfig::default(),
            horizon: 1000,
            seed: 1,
            initial_gap_ratio: 1.1,
            initial_speed_ratio: 0.8,
            v_ref: 30.0,
            switch_ratio: 1.2,
            u_limits: [-6.0, 2.5],
            actuation: Actuation::Setpoint,
        }
    }
}

impl ScenarioConfig {
    /// Nominal driving, no attack, no IDS.
    pub fn no_attack() -> Self {
        Self::default()
    }

    /// Speed-injection attack against the plain Kalman-filter ACC.
    pub fn kf_attack() -> Self {
        let mut cfg = Self::default();
        cfg.attack.enabled = true;
        cfg
    }

    /// Attack with a perfect, latched IDS and the delay backstop.
    pub fn acc_ids() -> Self {
        let mut cfg = Self::kf_attack();
        cfg.ids = IdsConfig {
            enabled: true,
            accuracy: 1.0,
            max_delay_steps: 1,
            backstop: true,
            latch: true,
        };
        cfg
    }

    /// Base configuration for the accuracy sweep: no backstop and no latch,
    /// so every missed frame reaches the filter.
    pub fn accuracy_sweep() -> Self {
        let mut cfg = Self::acc_ids();
        cfg.ids.backstop = false;
        cfg.ids.latch = false;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.kf.validate()?;
        self.gains_cruise.validate("gains_cruise")?;
        self.gains_spacing.validate("gains_spacing")?;
        self.lead.validate(&self.physical)?;
        self.attack.validate()?;
        self.ids.validate()?;
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.initial_gap_ratio.is_finite() && self.initial_gap_ratio >= 1.0) {
            return Err(Error::Config(format!(
                "initial_gap_ratio must be >= 1, got {}",
                self.initial_gap_ratio
            )));
        }
        if !(self.initial_speed_ratio.is_finite() && self.initial_speed_ratio > 0.0) {
            return Err(Error::Config(format!(
                "initial_speed_ratio must be > 0, got {}",
                self.initial_speed_ratio
            )));
        }
        if self.initial_speed() > self.physical.v_max {
            return Err(Error::Config("initial speed exceeds physical.v_max".into()));
        }
        if !(self.v_ref.is_finite() && self.v_ref >= 0.0) {
            return Err(Error::Config(format!(
                "v_ref must be >= 0, got {}",
                self.v_ref
            )));
        }
        if !(self.switch_ratio.is_finite() && self.switch_ratio >= 1.0) {
            return Err(Error::Config(format!(
                "switch_ratio must be >= 1, got {}",
                self.switch_ratio
            )));
        }
        let [lo, hi] = self.u_limits;
        if !(lo.is_finite() && hi.is_finite() && lo < 0.0 && hi > 0.0) {
            return Err(Error::Config(format!(
                "u_limits must straddle zero, got {:?}",
                self.u_limits
            )));
        }
        if -self.physical.comfort_decel < lo {
            return Err(Error::Config(
                "u_limits[0] must allow braking at comfort_decel".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_speed(&self) -> f64 {
        self.lead.v_cruise * self.initial_speed_ratio
    }
}

/// One in-flight scenario run.
pub struct Simulation {
    cfg: ScenarioConfig,
    world: WorldState,
    kf: KfState,
    ctrl: ControllerState,
    lead_state: LeadState,
    ids_state: IdsState,
    sensor: SensorModel,
    lead_rng: crate::rng::SimRng,
    ids_rng: crate::rng::SimRng,
    last_flag: bool,
    last_row: Option<StepTrace>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let v0 = cfg.initial_speed();
        let gap0 = cfg.initial_gap_ratio * safe_distance(v0, &cfg.physical)?;
        let [u_min, u_max] = cfg.u_limits;
        Ok(Self {
            world: WorldState {
                t: 0,
                host_speed: v0,
                lead_speed: v0,
                gap: gap0,
                u_applied: 0.0,
            },
            kf: KfState::new(cfg.kf.v0.unwrap_or(v0), cfg.kf.p0),
            ctrl: ControllerState::new(cfg.v_ref, u_min, u_max),
            lead_state: LeadState::default(),
            ids_state: IdsState::default(),
            sensor: SensorModel::new(cfg.kf.r.sqrt(), stream(cfg.seed, Stream::Sensor))?,
            lead_rng: stream(cfg.seed, Stream::Lead),
            ids_rng: stream(cfg.seed, Stream::Ids),
            last_flag: false,
            last_row: None,
            cfg: cfg.clone(),
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn ids_state(&self) -> &IdsState {
        &self.ids_state
    }

    /// Advances the plant from the previous row's command. Returns the inputs
    /// of the next-step speed threshold: the previous gap and the new speeds.
    fn advance_plant(&mut self) -> ThresholdInputs {
        let p = &self.cfg.physical;
        let prev = self.world;
        let lead = step_lead(
            prev.lead_speed,
            &self.cfg.lead,
            &mut self.lead_state,
            &mut self.lead_rng,
            p,
        );
        let base = match self.cfg.actuation {
            Actuation::Setpoint if !self.last_flag => self.kf.v_post,
            _ => prev.host_speed,
        };
        let host = step_host_speed(base, prev.u_applied, p);
        let gap = step_gap(prev.gap, lead, host, p);
        self.world = WorldState {
            t: prev.t + 1,
            host_speed: host,
            lead_speed: lead,
            gap,
            u_applied: prev.u_applied,
        };
        ThresholdInputs {
            gap: prev.gap,
            lead_speed_next: lead,
            host_speed_next: host,
            params: *p,
        }
    }

    /// Produces the row for the current step and prepares the next one.
    pub fn step(&mut self) -> Result<StepTrace> {
        if let Some(last) = self.last_row.filter(|r| r.collided) {
            // state evolution halts after a collision
            self.world.t += 1;
            return Ok(StepTrace {
                t: self.world.t,
                ..last
            });
        }
        let threshold_inputs = if self.last_row.is_some() {
            self.advance_plant()
        } else {
            ThresholdInputs {
                gap: self.world.gap,
                lead_speed_next: self.world.lead_speed,
                host_speed_next: self.world.host_speed,
                params: self.cfg.physical,
            }
        };
        let t = self.world.t;
        let cfg = &self.cfg;

        let spoofed = cfg.attack.is_active(t);
        let z = self.sensor.measure(self.world.host_speed, t, &cfg.attack);

        let predicted = self.kf.predict(&cfg.kf);
        let gain = predicted.pending_gain(&cfg.kf);
        // A non-positive predicted gap leaves no safe speed at all.
        let v_thr = speed_threshold(&threshold_inputs).unwrap_or(0.0);
        let z_min = measurement_threshold(v_thr, predicted.v_prior, gain)?;

        let s_flag = cfg.ids.enabled
            && ids_step(
                z,
                z_min,
                spoofed,
                t,
                &mut self.ids_state,
                &cfg.ids,
                &mut self.ids_rng,
            );
        self.kf = if s_flag {
            predicted.hold()
        } else {
            predicted.update(z, &cfg.kf)?
        };

        let v_est = self.kf.v_post;
        let d_safe = safe_distance(v_est.max(0.0), &cfg.physical)?;
        let (mode, error) =
            select_error(self.world.gap, d_safe, cfg.v_ref, v_est, cfg.switch_ratio);
        self.ctrl.enter(mode, error);
        let gains = match mode {
            crate::controller::Mode::Cruise => &cfg.gains_cruise,
            crate::controller::Mode::Spacing => &cfg.gains_spacing,
        };
        let nominal = pid_step(error, &mut self.ctrl, gains, cfg.physical.dt);
        let u = acc_ids_control(s_flag, nominal, &cfg.physical);

        self.world.u_applied = u;
        self.last_flag = s_flag;
        let row = StepTrace {
            t,
            v_h_true: self.world.host_speed,
            v_l: self.world.lead_speed,
            z,
            v_hat_post: v_est,
            v_thr,
            z_min,
            d: self.world.gap,
            d_safe,
            u,
            mode,
            s_flag,
            attack_active: spoofed,
            collided: self.world.collided(),
        };
        self.last_row = Some(row);
        Ok(row)
    }
}

/// Runs `cfg.horizon` steps and returns one row per step.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<StepTrace>> {
    let mut sim = Simulation::new(cfg)?;
    (0..cfg.horizon).map(|_| sim.step()).collect()
}

/// Time to crash with censoring at `horizon + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub accuracy: f64,
    pub time_to_crash: usize,
    pub censored: bool,
    pub seed: u64,
}

/// Parses `start:stop:step` into an ascending grid of probabilities.
pub fn parse_grid(grid: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = grid.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Error::Config(format!(
            "grid must be start:stop:step, got {grid:?}"
        )));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("grid value {s:?}: {e}")))
    };
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if step.is_nan()
        || step <= 0.0
        || b < a
        || !(0.0..=1.0).contains(&a)
        || !(0.0..=1.0).contains(&b)
    {
        return Err(Error::Config(format!(
            "grid {grid:?} must be ascending within [0, 1] with step > 0"
        )));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    // Round away accumulated binary error so 0.1 + 18·0.05 lands on 1.0.
    Ok((0..=n)
        .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
        .map(|x| x.clamp(0.0, 1.0))
        .collect())
}

/// Seed for grid point `grid_index`, repeat `repeat`.
pub fn sweep_seed(base: u64, grid_index: usize, repeat: usize) -> u64 {
    derive_seed(derive_seed(base, grid_index as u64), repeat as u64)
}

/// Runs the attack scenario at every accuracy in `grid`, `repeats` times each.
pub fn sweep_accuracy(
    cfg: &ScenarioConfig,
    grid: &[f64],
    repeats: usize,
) -> Result<Vec<SweepResult>> {
    if !cfg.attack.enabled {
        return Err(Error::Config(
            "accuracy sweep needs attack.enabled = true".into(),
        ));
    }
    if cfg.ids.backstop {
        return Err(Error::Config(
            "accuracy sweep needs ids.backstop = false".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config(
            "accuracy grid must be sorted ascending".into(),
        ));
    }
    cfg.validate()?;
    let jobs: Vec<(usize, usize, f64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(g, &acc)| (0..repeats).map(move |r| (g, r, acc)))
        .collect();
    jobs.par_iter()
        .map(|&(g, r, accuracy)| {
            let mut run = cfg.clone();
            run.ids.enabled = true;
            run.ids.accuracy = accuracy;
            run.seed = sweep_seed(cfg.seed, g, r);
            let trace = run_scenario(&run)?;
            let crash = detect_collision(&trace);
            Ok(SweepResult {
                accuracy,
                time_to_crash: crash.unwrap_or(run.horizon + 1),
                censored: crash.is_none(),
                seed: run.seed,
            })
        })
        .collect()
}

/// Writes sweep results as `accuracy,time_to_crash,censored,seed`.
pub fn write_sweep<W: std::io::Write>(results: &[SweepResult], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["accuracy", "time_to_crash", "censored", "seed"])?;
    for r in results {
        w.write_record([
            crate::trace::format_sig9(r.accuracy),
            r.time_to_crash.to_string(),
            if r.censored { "1".into() } else { "0".into() },
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
