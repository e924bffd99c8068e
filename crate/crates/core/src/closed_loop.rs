//! Sampled-data loop: a torque law evaluated at a fixed control rate, held
//! over several integrator substeps.

use serde::{Deserialize, Serialize};

use crate::beam::BeamParams;
use crate::control::{pde_torque, pid_torque, saturate, BoundaryFeedback, PdeGains, PidGains, PidState, DEFAULT_TORQUE_LIMIT};
use crate::dynamics::{DynamicsError, DynamicsModel, SimState};
use crate::trajectory::Reference;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    /// Control period (s).
    pub control_dt: f64,
    /// Integrator substeps per control period.
    pub substeps: usize,
    /// Actuator limit (N·m).
    pub torque_limit: f64,
    /// Keep one trace sample every this many control periods.
    pub log_every: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self { control_dt: 1e-3, substeps: 10, torque_limit: DEFAULT_TORQUE_LIMIT, log_every: 10 }
    }
}

impl LoopConfig {
    pub fn step_dt(&self) -> f64 {
        self.control_dt / self.substeps as f64
    }
}

/// A torque law together with whatever state it carries between ticks.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Pid { gains: PidGains, state: PidState },
    /// Boundary-feedback law whose compensation uses `model`, which may
    /// differ from the simulated plant.
    Pde { gains: PdeGains, model: BeamParams },
}

impl Controller {
    pub fn pid(gains: PidGains) -> Self {
        Self::Pid { gains, state: PidState::default() }
    }

    pub fn pde(gains: PdeGains, model: BeamParams) -> Self {
        Self::Pde { gains, model }
    }

    /// Torque demand at state `s`; advances internal state by `dt`.
    pub fn torque(&mut self, plant: &DynamicsModel, s: &SimState, r: (f64, f64, f64), dt: f64) -> f64 {
        let (theta_d, theta_dot_d, theta_ddot_d) = r;
        let e = theta_d - s.theta;
        let e_dot = theta_dot_d - s.theta_dot;
        match self {
            Self::Pid { gains, state } => {
                let tau = pid_torque(gains, e, state.integral, e_dot);
                state.accumulate(e, dt);
                tau
            }
            Self::Pde { gains, model } => {
                let fb = BoundaryFeedback { theta: s.theta, tip: plant.tip_state(s).0, base_curvature: plant.base_curvature(s) };
                pde_torque(gains, model, e, e_dot, &fb, theta_ddot_d)
            }
        }
    }
}

/// One logged instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub theta_d: f64,
    pub theta_dot_d: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub tip: f64,
    pub tip_dot: f64,
    /// Torque applied over the period that starts at `t`.
    pub torque: f64,
    pub energy_t: f64,
    pub energy_u: f64,
}

/// Integration failure with the last state that was still finite.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("closed loop failed at t = {:.4} s (theta = {:.6} rad): {source}", last_good.t, last_good.theta)]
pub struct LoopError {
    pub last_good: SimState,
    #[source]
    pub source: DynamicsError,
}

/// Plant state plus controller, advanced one control period at a time.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub state: SimState,
    pub controller: Controller,
    pub cfg: LoopConfig,
    pub saturations: usize,
    pub last_torque: f64,
}

impl ClosedLoop {
    pub fn new(state: SimState, controller: Controller, cfg: LoopConfig) -> Self {
        Self { state, controller, cfg, saturations: 0, last_torque: 0.0 }
    }

    /// Computes the torque for reference `r`, holds it for one control
    /// period and returns it.
    pub fn tick(&mut self, plant: &DynamicsModel, r: (f64, f64, f64)) -> Result<f64, LoopError> {
        let demand = self.controller.torque(plant, &self.state, r, self.cfg.control_dt);
        let (tau, clipped) = saturate(demand, self.cfg.torque_limit);
        if clipped {
            self.saturations += 1;
        }
        let h = self.cfg.step_dt();
        let mut s = self.state;
        for _ in 0..self.cfg.substeps {
            s = plant.step(&s, tau, h).map_err(|source| LoopError { last_good: s, source })?;
        }
        self.state = s;
        self.last_torque = tau;
        Ok(tau)
    }
}

/// Result of [`simulate`].
#[derive(Debug, Clone)]
pub struct Trace {
    pub samples: Vec<Sample>,
    pub saturations: usize,
    pub final_state: SimState,
}

fn sample(plant: &DynamicsModel, s: &SimState, r: (f64, f64, f64), torque: f64) -> Sample {
    let (tip, tip_dot) = plant.tip_state(s);
    let (energy_t, energy_u) = plant.total_energy(s);
    Sample {
        t: s.t,
        theta_d: r.0,
        theta_dot_d: r.1,
        theta: s.theta,
        theta_dot: s.theta_dot,
        tip,
        tip_dot,
        torque,
        energy_t,
        energy_u,
    }
}

/// Runs `controller` on `plant` from `init` tracking `reference` for
/// `duration` seconds. Samples are taken at the start of every
/// `log_every`-th period, plus the final state.
pub fn simulate(
    plant: &DynamicsModel,
    init: SimState,
    controller: Controller,
    reference: &dyn Reference,
    duration: f64,
    cfg: LoopConfig,
) -> Result<Trace, LoopError> {
    let ticks = (duration / cfg.control_dt).round() as usize;
    let log_every = cfg.log_every.max(1);
    let mut cl = ClosedLoop::new(init, controller, cfg);
    let mut samples = Vec::with_capacity(ticks / log_every + 2);
    let t0 = init.t;
    for k in 0..ticks {
        // time from the tick count, so long runs do not accumulate drift
        let t = t0 + k as f64 * cfg.control_dt;
        cl.state.t = t;
        let r = reference.sample(t);
        let before = cl.state;
        let tau = cl.tick(plant, r)?;
        if k % log_every == 0 {
            samples.push(sample(plant, &before, r, tau));
        }
    }
    if ticks > 0 {
        cl.state.t = t0 + ticks as f64 * cfg.control_dt;
        let r = reference.sample(cl.state.t);
        samples.push(sample(plant, &cl.state, r, cl.last_torque));
    }
    Ok(Trace { samples, saturations: cl.saturations, final_state: cl.state })
}

/// Rest state in which `controller` holding `theta_d` exactly balances the
/// plant, so a run that starts there stays there. PID integral state is
/// preloaded with the holding torque. Falls back to the open-loop static
/// equilibrium at `theta_d` if the balance cannot be found.
pub fn equilibrium(plant: &DynamicsModel, controller: &mut Controller, theta_d: f64) -> SimState {
    match controller {
        Controller::Pid { gains, state } => {
            let (s, hold) = plant.settle(theta_d);
            if gains.ki > 0.0 {
                state.integral = (hold / gains.ki).clamp(-PidState::INTEGRAL_LIMIT, PidState::INTEGRAL_LIMIT);
            }
            let residual = hold - gains.ki * state.integral;
            if residual != 0.0 && gains.kp > 0.0 {
                // the remainder is carried by a small proportional offset
                return balance(plant, theta_d, |s: &SimState| gains.kp * (theta_d - s.theta) + gains.ki * state.integral).unwrap_or(s);
            }
            s
        }
        Controller::Pde { gains, model } => {
            let (g, m) = (*gains, *model);
            balance(plant, theta_d, |s: &SimState| {
                let fb = BoundaryFeedback { theta: s.theta, tip: plant.tip_state(s).0, base_curvature: plant.base_curvature(s) };
                pde_torque(&g, &m, theta_d - s.theta, 0.0, &fb, 0.0)
            })
            .unwrap_or_else(|| plant.settle(theta_d).0)
        }
    }
}

/// Secant search for the angle whose static state makes `torque` equal the
/// holding torque.
fn balance(plant: &DynamicsModel, theta_d: f64, torque: impl Fn(&SimState) -> f64) -> Option<SimState> {
    let f = |th: f64| {
        let (s, hold) = plant.settle(th);
        torque(&s) - hold
    };
    let (mut a, mut b) = (theta_d, theta_d + 1e-3);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..60 {
        if fb == 0.0 || fa == fb {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        if !c.is_finite() {
            return None;
        }
        (a, fa) = (b, fb);
        b = c;
        fb = f(b);
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    (fb.abs() < 1e-6 * (1.0 + f(theta_d).abs())).then(|| plant.settle(b).0)
}
