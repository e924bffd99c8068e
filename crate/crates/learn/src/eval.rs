//! Fixed evaluation suite: planned motion against a cubic point-to-point
//! reference of matching peak speed, both tracked by the same controller on
//! the nominal plant.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use flexlink_core::beam::BeamParams;
use flexlink_core::closed_loop::{equilibrium, simulate, Controller, LoopConfig, LoopError};
use flexlink_core::control::{PdeGains, PidGains};
use flexlink_core::trajectory::cpt;
use flexlink_core::{DynamicsError, DynamicsModel, ModelOptions};

use crate::config::SacConfig;
use crate::env::{Env, EpisodeSpec, Outcome};
use crate::planner::{PlanMode, Planner};

pub const SUITE_SIZE: usize = 20;
/// Smallest move in the suite (deg); near-zero moves make the comparison
/// meaningless (both planners sit still).
pub const MIN_MOVE_DEG: f64 = 5.0;
/// Evaluation window (s), equal to a full episode.
pub const WINDOW: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalPair {
    pub theta0: f64,
    pub theta_t: f64,
}

/// `n` seeded pairs uniform on the operating range with `|Δ| ≥ MIN_MOVE_DEG`.
pub fn suite(seed: u64, n: usize) -> Vec<EvalPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let theta0 = rng.random_range(0.0..=FRAC_PI_2);
        let theta_t = rng.random_range(0.0..=FRAC_PI_2);
        if (theta_t - theta0).abs() >= MIN_MOVE_DEG.to_radians() {
            out.push(EvalPair { theta0, theta_t });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    /// RMS of omega_dot(L) over every control tick of the window (m/s).
    pub tip_rate_rmse: f64,
    pub final_error: f64,
    /// Whether the reach condition held at some planner step.
    pub reached: bool,
    pub left_range: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tracker {
    Pde,
    Pid,
}

/// Runs the planner deterministically for the whole window.
pub fn run_planner(planner: &Planner, cfg: &SacConfig, nominal: &BeamParams, pair: EvalPair, window: f64) -> Result<RunMetrics, DynamicsError> {
    let cfg = SacConfig { randomization: 0.0, ..cfg.clone() };
    let steps = (window / cfg.time_step).round() as usize;
    let mut env = Env::new(SacConfig { max_time_steps_per_episode: steps.max(1), ..cfg }, *nominal);
    let mut obs = env.reset_to(EpisodeSpec { theta0: pair.theta0, theta_t: pair.theta_t, params: *nominal })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut sq, mut reached, mut left) = (0.0, false, false);
    for _ in 0..steps {
        let a = planner.action(&obs, PlanMode::Deterministic, &mut rng).unwrap_or(0.0);
        let (o, _, info) = env.step(a);
        obs = o;
        sq += info.tip_rate_sq_mean;
        reached |= info.outcome == Outcome::Reached;
        left |= matches!(info.outcome, Outcome::Failed);
        if info.outcome == Outcome::Diverged {
            return Err(DynamicsError::NonFinite { t: env.steps() as f64 * env.config().time_step });
        }
        env.continue_episode();
    }
    Ok(RunMetrics { tip_rate_rmse: (sq / steps.max(1) as f64).sqrt(), final_error: obs.e_t, reached, left_range: left })
}

/// Duration of a cubic move whose peak speed equals `theta_dot_max`.
pub fn matched_duration(pair: EvalPair, theta_dot_max: f64) -> f64 {
    1.5 * (pair.theta_t - pair.theta0).abs() / theta_dot_max
}

/// Tracks a speed-matched cubic from the same rest state.
pub fn run_cpt(
    nominal: &BeamParams,
    n_modes: usize,
    tracker: Tracker,
    pair: EvalPair,
    theta_dot_max: f64,
    window: f64,
) -> Result<RunMetrics, LoopError> {
    let to_loop = |e: DynamicsError| LoopError { last_good: flexlink_core::SimState::at_rest(pair.theta0, n_modes), source: e };
    let plant = DynamicsModel::new(nominal, &ModelOptions { n_modes, ..Default::default() }).map_err(to_loop)?;
    let mut controller = match tracker {
        Tracker::Pde => Controller::pde(PdeGains::BASELINE, *nominal),
        Tracker::Pid => Controller::pid(PidGains::BASELINE),
    };
    let s0 = equilibrium(&plant, &mut controller, pair.theta0);
    let duration = matched_duration(pair, theta_dot_max).max(1e-3);
    let reference = cpt(pair.theta0, pair.theta_t, duration).map_err(|_| to_loop(DynamicsError::NonFinite { t: 0.0 }))?;
    let cfg = LoopConfig { log_every: 1, ..Default::default() };
    let trace = simulate(&plant, s0, controller, &reference, window, cfg)?;
    let after = &trace.samples[1.min(trace.samples.len())..];
    let sq: f64 = after.iter().map(|s| s.tip_dot * s.tip_dot).sum();
    let last = trace.final_state;
    Ok(RunMetrics {
        tip_rate_rmse: (sq / after.len().max(1) as f64).sqrt(),
        final_error: pair.theta_t - last.theta,
        reached: (pair.theta_t - last.theta).abs().to_degrees() < 0.1,
        left_range: trace.samples.iter().any(|s| !(0.0..=FRAC_PI_2).contains(&s.theta)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairResult {
    pub pair: EvalPair,
    pub planned: RunMetrics,
    pub cubic: RunMetrics,
}

impl PairResult {
    /// `cubic / planned` tip-velocity RMSE.
    pub fn reduction(&self) -> f64 {
        self.cubic.tip_rate_rmse / self.planned.tip_rate_rmse
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub pairs: usize,
    /// Pairs where the planner's tip-velocity RMSE is the lower one.
    pub better: usize,
    pub median_reduction: f64,
    pub reach_rate: f64,
}

pub fn evaluate(planner: &Planner, cfg: &SacConfig, nominal: &BeamParams, pairs: &[EvalPair]) -> Result<Vec<PairResult>, String> {
    let results = flexlink_core::par::map(pairs, |&pair| -> Result<PairResult, String> {
        let planned = run_planner(planner, cfg, nominal, pair, WINDOW).map_err(|e| e.to_string())?;
        let cubic = run_cpt(nominal, cfg.n_modes, Tracker::Pde, pair, cfg.theta_dot_max(), WINDOW).map_err(|e| e.to_string())?;
        Ok(PairResult { pair, planned, cubic })
    });
    results.into_iter().collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn summarize(results: &[PairResult]) -> SuiteSummary {
    let better = results.iter().filter(|r| r.planned.tip_rate_rmse < r.cubic.tip_rate_rmse).count();
    let mut ratios: Vec<f64> = results.iter().map(PairResult::reduction).collect();
    let reached = results.iter().filter(|r| r.planned.reached).count();
    SuiteSummary {
        pairs: results.len(),
        better,
        median_reduction: median(&mut ratios),
        reach_rate: if results.is_empty() { 0.0 } else { reached as f64 / results.len() as f64 },
    }
}

/// Fraction of targets at which the planner, started at rest on the target,
/// commands less than `fraction * theta_dot_max`.
pub fn hold_rate(planner: &Planner, cfg: &SacConfig, nominal: &BeamParams, pairs: &[EvalPair], fraction: f64) -> Result<f64, DynamicsError> {
    let mut env = Env::new(SacConfig { randomization: 0.0, ..cfg.clone() }, *nominal);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ok = 0;
    for p in pairs {
        let obs = env.reset_to(EpisodeSpec { theta0: p.theta_t, theta_t: p.theta_t, params: *nominal })?;
        let cmd = planner.plan(&obs, PlanMode::Deterministic, &mut rng).unwrap_or(f64::INFINITY);
        if cmd.abs() < fraction * planner.theta_dot_max() {
            ok += 1;
        }
    }
    Ok(ok as f64 / pairs.len().max(1) as f64)
}
