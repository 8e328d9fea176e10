//! Deterministic discrete-time simulator for adaptive cruise control under
//! speed-spoofing attacks.
//!
//! The host vehicle estimates its own speed with a scalar Kalman filter and
//! follows a lead vehicle with a PID controller that switches between speed
//! tracking and spacing control. An attacker biases the reported speed; an
//! optional intrusion detector switches the controller to emergency braking.
//! [`safety`] holds the analytic thresholds and the post-detection braking
//! check used to verify runs.

pub mod controller;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod ids;
pub mod rng;
pub mod safety;
pub mod threat;
pub mod trace;

pub use error::{Error, Result};
pub use harness::{run_scenario, sweep_accuracy, ScenarioConfig, SweepResult};
pub use safety::{check_theorem, TheoremReport, Verdict};
pub use trace::StepTrace;
