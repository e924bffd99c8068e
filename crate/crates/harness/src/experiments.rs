//! The studies behind each command, independent of file output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use flexlink_core::beam::{BeamParams, ModalBasis, ModeCheck, BASIS_QUADRATURE_NODES};
use flexlink_core::closed_loop::{equilibrium, simulate, ClosedLoop, Controller, Sample, Trace};
use flexlink_core::control::{certify_gains, lyapunov_value, CertifiedRate};
use flexlink_core::trajectory::{Hold, Reference};
use flexlink_core::{DynamicsModel, SimState};
use flexlink_learn::checkpoint::Checkpoint;
use flexlink_learn::env::EnvObservation;
use flexlink_learn::eval::{self, EvalPair, RunMetrics, Tracker};
use flexlink_learn::planner::{PlanMode, Planner};

use crate::config::{ControllerKind, ExperimentConfig};
use crate::error::HarnessError;
use crate::metrics::{self, MetricsReport};

pub fn plant(cfg: &ExperimentConfig) -> Result<DynamicsModel, HarnessError> {
    Ok(DynamicsModel::new(&cfg.beam, &cfg.model)?)
}

pub fn controller(cfg: &ExperimentConfig, kind: ControllerKind, model: BeamParams) -> Controller {
    match kind {
        ControllerKind::Pde => Controller::pde(cfg.controller.pde, model),
        ControllerKind::Pid => Controller::pid(cfg.controller.pid),
    }
}

#[derive(Debug, Clone)]
pub struct ModesReport {
    pub basis: ModalBasis,
    pub checks: Vec<ModeCheck>,
    pub weighted_gram: Vec<Vec<f64>>,
    pub l2_gram: Vec<Vec<f64>>,
    pub max_off_diagonal: f64,
}

pub fn modes(cfg: &ExperimentConfig) -> Result<ModesReport, HarnessError> {
    let basis = ModalBasis::solve(&cfg.beam, cfg.model.n_modes).map_err(|e| match e {
        flexlink_core::beam::BeamError::ModeCount { .. } | flexlink_core::beam::BeamError::NonPositive { .. } => HarnessError::Validation(e.to_string()),
        other => HarnessError::Solver(other.to_string()),
    })?;
    let weighted_gram = basis.weighted_gram(BASIS_QUADRATURE_NODES);
    Ok(ModesReport {
        checks: basis.check(),
        l2_gram: basis.l2_gram(BASIS_QUADRATURE_NODES),
        max_off_diagonal: ModalBasis::max_off_diagonal(&weighted_gram),
        weighted_gram,
        basis,
    })
}

/// Tracks the configured schedule with `kind`, whose model of the link is
/// `model`, from the closed-loop rest state at the schedule start.
pub fn run_schedule(cfg: &ExperimentConfig, kind: ControllerKind, model: BeamParams) -> Result<Trace, HarnessError> {
    let plant = plant(cfg)?;
    let sched = cfg.schedule()?;
    let mut c = controller(cfg, kind, model);
    let s0 = equilibrium(&plant, &mut c, sched.start());
    Ok(simulate(&plant, s0, c, &sched, sched.end_time(), cfg.control_loop)?)
}

fn sample(plant: &DynamicsModel, s: &SimState, r: (f64, f64, f64), torque: f64) -> Sample {
    let (tip, tip_dot) = plant.tip_state(s);
    let (energy_t, energy_u) = plant.total_energy(s);
    Sample { t: s.t, theta_d: r.0, theta_dot_d: r.1, theta: s.theta, theta_dot: s.theta_dot, tip, tip_dot, torque, energy_t, energy_u }
}

/// The schedule's waypoints handed one at a time to the planner as targets;
/// each stays active for its leg's duration plus dwell.
pub fn run_planned(cfg: &ExperimentConfig, kind: ControllerKind, planner: &Planner, period: f64) -> Result<Trace, HarnessError> {
    let plant = plant(cfg)?;
    let sched = cfg.schedule()?;
    let mut windows = Vec::new();
    let mut t = 0.0;
    for leg in &cfg.schedule.legs {
        t += leg.duration + leg.dwell;
        windows.push((t, leg.target_deg.to_radians()));
    }
    let end = sched.end_time();
    let mut c = controller(cfg, kind, cfg.beam);
    let s0 = equilibrium(&plant, &mut c, sched.start());
    let lc = cfg.control_loop;
    let mut cl = ClosedLoop::new(s0, c, lc);
    cl.last_torque = cl.controller.clone().torque(&plant, &s0, (sched.start(), 0.0, 0.0), lc.control_dt);
    let ticks_per = (period / lc.control_dt).round().max(1.0) as usize;
    let total = (end / lc.control_dt).round() as usize;
    let log_every = lc.log_every.max(1);
    let mut samples = Vec::new();
    let (mut theta_d, mut theta_dot_d) = (sched.start(), 0.0);
    // deterministic planning draws nothing from the generator
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for k in 0..total {
        let t = k as f64 * lc.control_dt;
        cl.state.t = t;
        if k % ticks_per == 0 {
            let target = windows.iter().find(|(until, _)| t < *until).map_or(sched.start(), |w| w.1);
            let (tip, tip_dot) = plant.tip_state(&cl.state);
            let obs = EnvObservation { e_t: target - cl.state.theta, theta: cl.state.theta, theta_dot: cl.state.theta_dot, tau: cl.last_torque, omega_l: tip, omega_l_dot: tip_dot };
            theta_dot_d = planner.plan(&obs, PlanMode::Deterministic, &mut rng).map_err(|e| HarnessError::Simulation(format!("planner at t = {t}: {e}")))?;
        }
        let r = (theta_d, theta_dot_d, 0.0);
        let before = cl.state;
        let tau = cl.tick(&plant, r)?;
        if k % log_every == 0 {
            samples.push(sample(&plant, &before, r, tau));
        }
        theta_d += theta_dot_d * lc.control_dt;
    }
    if total > 0 {
        cl.state.t = total as f64 * lc.control_dt;
        samples.push(sample(&plant, &cl.state, (theta_d, theta_dot_d, 0.0), cl.last_torque));
    }
    Ok(Trace { samples, saturations: cl.saturations, final_state: cl.state })
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovRun {
    pub target_deg: f64,
    pub rate: CertifiedRate,
    pub v0: f64,
    /// `(t, e, e_dot, V, V0 exp(-lambda t))` per logged sample.
    pub rows: Vec<[f64; 5]>,
    pub worst_ratio: f64,
    pub violations: usize,
    pub terminal_error: f64,
}

/// Floor below which V is treated as zero when checking the envelope,
/// relative to `Kp · 1 rad²`.
pub const V_FLOOR: f64 = 1e-12;

pub fn certified_rate(cfg: &ExperimentConfig) -> Result<CertifiedRate, HarnessError> {
    certify_gains(&cfg.controller.pde, cfg.beam.hub_inertia).map_err(|e| HarnessError::Validation(format!("gains are not certified: {e}")))
}

/// Step from the rest state at `start_deg` to `target_deg` under the
/// boundary-feedback law with the plant's own parameters.
pub fn lyapunov_run(cfg: &ExperimentConfig, target_deg: f64) -> Result<LyapunovRun, HarnessError> {
    let rate = certified_rate(cfg)?;
    let g = cfg.controller.pde;
    let im = cfg.beam.hub_inertia;
    let plant = plant(cfg)?;
    let mut c = controller(cfg, ControllerKind::Pde, cfg.beam);
    let s0 = equilibrium(&plant, &mut c, cfg.lyapunov.start_deg.to_radians());
    let target = Hold(target_deg.to_radians());
    let trace = simulate(&plant, s0, c, &target, cfg.lyapunov.horizon, cfg.control_loop)?;
    let floor = V_FLOOR * g.kp;
    let mut rows = Vec::with_capacity(trace.samples.len());
    let (mut worst, mut violations) = (0.0f64, 0);
    let mut v0 = f64::NAN;
    for s in &trace.samples {
        let (e, e_dot) = (target.sample(s.t).0 - s.theta, -s.theta_dot);
        let v = lyapunov_value(&g, im, e, e_dot);
        if v0.is_nan() {
            v0 = v;
        }
        let bound = v0 * (-rate.lambda * (s.t - s0.t)).exp();
        if v > floor {
            worst = worst.max(v / bound);
        }
        if v > bound * (1.0 + cfg.lyapunov.slack) + floor {
            violations += 1;
        }
        rows.push([s.t, e, e_dot, v, bound]);
    }
    let terminal_error = target.0 - trace.final_state.theta;
    Ok(LyapunovRun { target_deg, rate, v0: if v0.is_nan() { 0.0 } else { v0 }, rows, worst_ratio: worst, violations, terminal_error })
}

#[derive(Debug, Clone, Serialize)]
pub struct UncertaintyCell {
    pub percent: f64,
    pub metrics: Option<MetricsReport>,
    pub saturations: usize,
    pub status: String,
}

/// One canonical-schedule run per grid value, with the controller's model
/// perturbed and the plant nominal.
pub fn uncertainty_sweep(cfg: &ExperimentConfig) -> Result<Vec<UncertaintyCell>, HarnessError> {
    certified_rate(cfg)?;
    let cells = flexlink_core::par::map(&cfg.uncertainty.grid_percent, |&percent| {
        match run_schedule(cfg, ControllerKind::Pde, cfg.perturbed_model(percent)) {
            Ok(trace) => UncertaintyCell { percent, metrics: Some(metrics::from_samples(&trace.samples)), saturations: trace.saturations, status: "ok".into() },
            Err(HarnessError::Simulation(msg)) => UncertaintyCell { percent, metrics: None, saturations: 0, status: format!("diverged: {msg}") },
            Err(e) => UncertaintyCell { percent, metrics: None, saturations: 0, status: format!("failed: {e}") },
        }
    });
    Ok(cells)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareRow {
    pub pair: EvalPair,
    pub pde_drl: RunMetrics,
    pub pde_cpt: RunMetrics,
    pub pid_cpt: RunMetrics,
}

/// Planner against speed-matched cubics on the fixed evaluation suite, all
/// on the nominal plant of `cfg.beam`.
pub fn compare(cfg: &ExperimentConfig, ck: &Checkpoint) -> Result<Vec<CompareRow>, HarnessError> {
    let planner = Planner::from_checkpoint(ck);
    let sac = &ck.config;
    let pairs = eval::suite(cfg.compare.suite_seed, cfg.compare.pairs);
    let rows = flexlink_core::par::map(&pairs, |&pair| -> Result<CompareRow, HarnessError> {
        let pde_drl = eval::run_planner(&planner, sac, &cfg.beam, pair, eval::WINDOW)?;
        let cubic = |tracker| eval::run_cpt(&cfg.beam, sac.n_modes, tracker, pair, sac.theta_dot_max(), eval::WINDOW);
        Ok(CompareRow { pair, pde_drl, pde_cpt: cubic(Tracker::Pde)?, pid_cpt: cubic(Tracker::Pid)? })
    });
    rows.into_iter().collect()
}
