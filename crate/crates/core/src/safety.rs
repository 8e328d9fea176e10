//! Analytic safety bounds and the post-detection braking guarantee.
//!
//! * [`speed_threshold`]: the largest estimated speed whose safe distance
//!   still fits in the predicted next-step gap.
//! * [`measurement_threshold`]: the smallest reading that drives the filter's
//!   posterior above that speed.
//! * [`braking_margin`] and [`check_theorem`]: once the IDS latches and the
//!   controller brakes at `-a`, the margin `d - v²/(2a)` can only grow, so a
//!   non-negative margin at detection rules out a later collision.

use serde::Serialize;

use crate::dynamics::{step_gap, PhysicalParams};
use crate::error::{Error, Result};
use crate::ids::IdsConfig;
use crate::trace::{detect_collision, StepTrace};

/// Tolerance for the root and boundary checks.
pub const ROOT_TOL: f64 = 1e-9;

/// Inputs of the next-step speed threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdInputs {
    /// Current gap, m.
    pub gap: f64,
    /// Lead speed at the end of the step, m/s.
    pub lead_speed_next: f64,
    /// True host speed at the end of the step, m/s.
    pub host_speed_next: f64,
    pub params: PhysicalParams,
}

impl ThresholdInputs {
    /// Gap predicted for the end of the step.
    pub fn predicted_gap(&self) -> f64 {
        step_gap(
            self.gap,
            self.lead_speed_next,
            self.host_speed_next,
            &self.params,
        )
    }

    /// Coefficients `(p, b, c)` of `g(v) = p·v² + b·v + c`, whose positive root
    /// is the threshold.
    pub fn quadratic(&self) -> (f64, f64, f64) {
        (
            1.0 / (2.0 * self.params.comfort_decel),
            self.params.headway,
            -self.predicted_gap(),
        )
    }

    /// `g(v)`; positive exactly when `v`'s safe distance exceeds the
    /// predicted gap.
    pub fn excess(&self, v: f64) -> f64 {
        let (p, b, c) = self.quadratic();
        p * v * v + b * v + c
    }
}

/// Unique positive root of `v²/(2a) + h·v − gap_next = 0`.
///
/// Evaluated as `2·gap_next / (h + sqrt(h² + 2·gap_next/a))`, which equals
/// `a·(−h + sqrt(h² + 2·gap_next/a))` without the cancellation for small gaps.
pub fn speed_threshold(inputs: &ThresholdInputs) -> Result<f64> {
    let gap_next = inputs.predicted_gap();
    if gap_next.is_nan() || gap_next <= 0.0 {
        return Err(Error::NonPositiveGap(gap_next));
    }
    let h = inputs.params.headway;
    let a = inputs.params.comfort_decel;
    Ok(2.0 * gap_next / (h + (h * h + 2.0 * gap_next / a).sqrt()))
}

/// Smallest measurement that pushes the posterior above `v_thr`:
/// `(v_thr − (1 − K)·v̂⁻) / K`.
pub fn measurement_threshold(v_thr: f64, v_hat_prior: f64, gain: f64) -> Result<f64> {
    if !(gain > 0.0 && gain < 1.0) {
        return Err(Error::GainOutOfRange(gain));
    }
    Ok((v_thr - (1.0 - gain) * v_hat_prior) / gain)
}

/// `Φ = d − v²/(2a)`.
pub fn braking_margin(d: f64, v_h: f64, params: &PhysicalParams) -> f64 {
    d - params.braking_distance(v_h)
}

/// One hypothesis of the braking guarantee, evaluated on a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Both conclusions hold on the trace.
    Holds,
    /// All hypotheses hold but a conclusion fails.
    Violated,
    /// A conclusion fails while some hypothesis fails too.
    Vacuous,
    /// The IDS never fired, so nothing is claimed.
    NotTriggered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub verdict: Verdict,
    pub attack_start: Option<usize>,
    pub detection_step: Option<usize>,
    pub collision_step: Option<usize>,
    /// Steps between attack start and detection.
    pub detection_delay: Option<usize>,
    /// Largest host speed strictly after the attack start up to detection.
    pub v_bar: Option<f64>,
    pub assumptions: Vec<AssumptionCheck>,
    /// `d(t̄) ≥ v_h(t̄)²/(2a)`.
    pub part_a: Option<bool>,
    /// `Φ(t̄ + k) ≥ 0` for every later step, with no collision.
    pub part_b: Option<bool>,
    pub phi_at_detection: Option<f64>,
    pub phi_min: Option<f64>,
    /// Largest `|Φ(t+Δt) − Φ(t) − v_l(t+Δt)·Δt − a·Δt²/2|` over unclamped
    /// braking steps.
    pub max_identity_residual: f64,
    pub identity_steps: usize,
    /// Braking steps where the host hit zero speed; checked via `d`
    /// non-decreasing instead of the identity.
    pub clamped_steps: usize,
    pub identity_tol: f64,
}

impl TheoremReport {
    /// Both conclusions hold.
    pub fn conclusions_hold(&self) -> bool {
        self.part_a == Some(true) && self.part_b == Some(true)
    }

    /// True when the run is unsafe or the guarantee is contradicted.
    pub fn is_failure(&self) -> bool {
        self.verdict == Verdict::Violated || self.collision_step.is_some()
    }

    pub fn assumption(&self, name: &str) -> Option<&AssumptionCheck> {
        self.assumptions.iter().find(|a| a.name == name)
    }
}

/// Checks the braking guarantee on a completed trace.
///
/// `identity_tol` bounds the per-step residual of the margin identity and the
/// slack allowed in monotonicity checks: `ROOT_TOL` for in-memory traces,
/// looser for traces re-read from 9-digit CSV.
pub fn check_theorem(
    trace: &[StepTrace],
    params: &PhysicalParams,
    ids_cfg: &IdsConfig,
    identity_tol: f64,
) -> TheoremReport {
    let dt = params.dt;
    let a = params.comfort_decel;
    let d_safe_true =
        |r: &StepTrace| params.reaction_distance(r.v_h_true) + params.braking_distance(r.v_h_true);

    let attack_start = trace.iter().position(|r| r.attack_active);
    let detection = trace.iter().position(|r| r.s_flag);
    let collision_step = detect_collision(trace);

    let mut report = TheoremReport {
        verdict: Verdict::NotTriggered,
        attack_start: attack_start.map(|i| trace[i].t),
        detection_step: detection.map(|i| trace[i].t),
        collision_step,
        detection_delay: None,
        v_bar: None,
        assumptions: Vec::new(),
        part_a: None,
        part_b: None,
        phi_at_detection: None,
        phi_min: None,
        max_identity_residual: 0.0,
        identity_steps: 0,
        clamped_steps: 0,
        identity_tol,
    };
    let Some(det) = detection else {
        return report;
    };

    // Hypotheses.
    let n = ids_cfg.max_delay_steps as usize;
    let delay = attack_start.filter(|&s| s <= det).map(|s| det - s);
    report.detection_delay = delay;
    report.assumptions.push(AssumptionCheck {
        name: "bounded_delay",
        holds: ids_cfg.backstop && n as f64 * dt <= params.headway && delay.is_some_and(|m| m <= n),
        detail: format!(
            "backstop={}, N={n}, N*dt={:.3} vs h={:.3}, delay={delay:?}",
            ids_cfg.backstop,
            n as f64 * dt,
            params.headway
        ),
    });
    let latched = trace[det..].iter().all(|r| r.s_flag);
    report.assumptions.push(AssumptionCheck {
        name: "latch",
        holds: latched,
        detail: format!("flag stays raised after detection: {latched}"),
    });
    let first = &trace[0];
    report.assumptions.push(AssumptionCheck {
        name: "initial_safe_gap",
        holds: first.d > 0.0 && first.d >= d_safe_true(first),
        detail: format!("d(0)={:.6}, d_safe(0)={:.6}", first.d, d_safe_true(first)),
    });
    let min_lead = trace.iter().map(|r| r.v_l).fold(f64::INFINITY, f64::min);
    report.assumptions.push(AssumptionCheck {
        name: "lead_speed_nonnegative",
        holds: min_lead >= 0.0,
        detail: format!("min v_l={min_lead:.6}"),
    });
    match (attack_start, delay) {
        (Some(s), Some(_)) => {
            let v_bar = trace[s + 1..=det]
                .iter()
                .map(|r| r.v_h_true)
                .fold(f64::NEG_INFINITY, f64::max);
            let v_star = trace[s].v_h_true;
            report.v_bar = v_bar.is_finite().then_some(v_bar);
            report.assumptions.push(AssumptionCheck {
                name: "detection_window_speed_bound",
                holds: v_bar <= v_star,
                detail: format!("v_bar={v_bar:.6}, v_h(t*)={v_star:.6}"),
            });
            let r = &trace[s];
            report.assumptions.push(AssumptionCheck {
                name: "safe_gap_at_attack_start",
                holds: r.d >= d_safe_true(r),
                detail: format!("d(t*)={:.6}, d_safe(t*)={:.6}", r.d, d_safe_true(r)),
            });
        }
        _ => {
            report.assumptions.push(AssumptionCheck {
                name: "detection_window_speed_bound",
                holds: false,
                detail: "no attack start at or before detection".into(),
            });
            report.assumptions.push(AssumptionCheck {
                name: "safe_gap_at_attack_start",
                holds: false,
                detail: "no attack start at or before detection".into(),
            });
        }
    }

    // Conclusions.
    let at = &trace[det];
    let phi0 = braking_margin(at.d, at.v_h_true, params);
    report.phi_at_detection = Some(phi0);
    report.part_a = Some(phi0 >= 0.0);

    let mut phi_min = phi0;
    let mut ok_b = phi0 >= 0.0;
    for w in trace[det..].windows(2) {
        let (cur, next) = (&w[0], &w[1]);
        if cur.collided || next.collided {
            ok_b = false;
            break;
        }
        let phi_cur = braking_margin(cur.d, cur.v_h_true, params);
        let phi_next = braking_margin(next.d, next.v_h_true, params);
        phi_min = phi_min.min(phi_next);
        ok_b &= phi_next >= 0.0;
        if !cur.s_flag {
            continue;
        }
        if cur.v_h_true - a * dt >= 0.0 {
            let residual = (phi_next - phi_cur - next.v_l * dt - a * dt * dt / 2.0).abs();
            report.max_identity_residual = report.max_identity_residual.max(residual);
            report.identity_steps += 1;
            ok_b &= residual <= identity_tol && phi_next >= phi_cur - identity_tol;
        } else {
            report.clamped_steps += 1;
            ok_b &= next.d >= cur.d - identity_tol;
        }
    }
    if collision_step.is_some_and(|c| c >= at.t) {
        ok_b = false;
    }
    report.phi_min = Some(phi_min);
    report.part_b = Some(ok_b);

    report.verdict = if report.conclusions_hold() {
        Verdict::Holds
    } else if report.assumptions.iter().all(|c| c.holds) {
        Verdict::Violated
    } else {
        Verdict::Vacuous
    };
    report
}
