//! Planning environment: a 10 Hz joint-velocity command driving the
//! boundary-feedback controller on the flexible link.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::Serialize;

use flexlink_core::beam::BeamParams;
use flexlink_core::closed_loop::{equilibrium, ClosedLoop, Controller, LoopConfig};
use flexlink_core::control::PdeGains;
use flexlink_core::{DynamicsError, DynamicsModel, ModelOptions};

use crate::config::SacConfig;
use crate::replay::OBS_DIM;

/// Raw observation in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvObservation {
    /// `theta_T - theta` (rad).
    pub e_t: f64,
    pub theta: f64,
    pub theta_dot: f64,
    /// Torque applied over the last control period (N·m).
    pub tau: f64,
    pub omega_l: f64,
    pub omega_l_dot: f64,
}

/// Fixed affine scaling applied before the networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsScale {
    pub angle: f64,
    pub rate: f64,
    pub torque: f64,
    pub tip: f64,
    pub tip_rate: f64,
}

impl ObsScale {
    pub fn new(cfg: &SacConfig, nominal: &BeamParams) -> Self {
        Self {
            angle: FRAC_PI_2,
            rate: cfg.theta_dot_max(),
            torque: 0.5 * nominal.link_mass * nominal.gravity * nominal.length,
            tip: 0.05,
            tip_rate: 0.05,
        }
    }
}

impl EnvObservation {
    pub fn normalized(&self, s: &ObsScale) -> [f64; OBS_DIM] {
        [
            self.e_t / s.angle,
            self.theta / s.angle,
            self.theta_dot / s.rate,
            self.tau / s.torque,
            self.omega_l / s.tip,
            self.omega_l_dot / s.tip_rate,
        ]
    }

    pub fn is_finite(&self) -> bool {
        [self.e_t, self.theta, self.theta_dot, self.tau, self.omega_l, self.omega_l_dot].iter().all(|v| v.is_finite())
    }
}

/// The five reward terms; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RewardTerms {
    pub error: f64,
    pub rate: f64,
    pub tip: f64,
    pub reach: f64,
    pub failure: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.error + self.rate + self.tip + self.reach + self.failure
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Running,
    Reached,
    /// Joint left the operating range.
    Failed,
    /// Integration blew up; treated as a failure.
    Diverged,
    TimedOut,
}

impl Outcome {
    /// Whether the transition ends the episode without a bootstrap.
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Reached | Self::Failed | Self::Diverged)
    }

    pub fn is_done(self) -> bool {
        self != Self::Running
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepInfo {
    pub terms: RewardTerms,
    pub outcome: Outcome,
    /// Executed joint-speed command (rad/s).
    pub theta_dot_d: f64,
    pub theta_d: f64,
    /// Mean of the squared tip velocity over the control ticks of this step.
    pub tip_rate_sq_mean: f64,
    pub diagnostics: Option<String>,
}

/// One episode's physical setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeSpec {
    pub theta0: f64,
    pub theta_t: f64,
    pub params: BeamParams,
}

pub struct Env {
    cfg: SacConfig,
    nominal: BeamParams,
    scale: ObsScale,
    loop_cfg: LoopConfig,
    gains: PdeGains,
    plant: Option<DynamicsModel>,
    cl: Option<ClosedLoop>,
    spec: Option<EpisodeSpec>,
    theta_d: f64,
    theta_dot_d: f64,
    steps: usize,
    done: bool,
}

impl Env {
    pub fn new(cfg: SacConfig, nominal: BeamParams) -> Self {
        let scale = ObsScale::new(&cfg, &nominal);
        Self {
            cfg,
            nominal,
            scale,
            loop_cfg: LoopConfig::default(),
            gains: PdeGains::BASELINE,
            plant: None,
            cl: None,
            spec: None,
            theta_d: 0.0,
            theta_dot_d: 0.0,
            steps: 0,
            done: true,
        }
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    pub fn scale(&self) -> &ObsScale {
        &self.scale
    }

    pub fn spec(&self) -> Option<&EpisodeSpec> {
        self.spec.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn plant(&self) -> Option<&DynamicsModel> {
        self.plant.as_ref()
    }

    /// Random angles in the operating range and, if enabled, every one of
    /// `L, m, M, I_m, rho*A, EI` scaled independently by `U(1-r, 1+r)`.
    pub fn sample_spec<R: Rng + ?Sized>(&self, rng: &mut R) -> EpisodeSpec {
        let theta0 = rng.random_range(0.0..=FRAC_PI_2);
        let theta_t = rng.random_range(0.0..=FRAC_PI_2);
        let r = self.cfg.randomization;
        let mut p = self.nominal;
        if r > 0.0 {
            let mut f = || rng.random_range(1.0 - r..=1.0 + r);
            p.length *= f();
            p.link_mass *= f();
            p.payload_mass *= f();
            p.hub_inertia *= f();
            p.density *= f();
            p.youngs_modulus *= f();
        }
        EpisodeSpec { theta0, theta_t, params: p }
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<EnvObservation, DynamicsError> {
        let spec = self.sample_spec(rng);
        self.reset_to(spec)
    }

    /// Starts an episode at the closed-loop rest state holding `theta0`.
    /// The controller's model is the episode's own parameter set.
    pub fn reset_to(&mut self, spec: EpisodeSpec) -> Result<EnvObservation, DynamicsError> {
        let plant = DynamicsModel::new(&spec.params, &ModelOptions { n_modes: self.cfg.n_modes, ..Default::default() })?;
        let mut controller = Controller::pde(self.gains, spec.params);
        let s0 = equilibrium(&plant, &mut controller, spec.theta0);
        let mut cl = ClosedLoop::new(s0, controller, self.loop_cfg);
        cl.last_torque = cl.controller.torque(&plant, &s0, (spec.theta0, 0.0, 0.0), self.loop_cfg.control_dt);
        self.theta_d = spec.theta0;
        self.theta_dot_d = 0.0;
        self.steps = 0;
        self.done = false;
        self.plant = Some(plant);
        self.cl = Some(cl);
        self.spec = Some(spec);
        Ok(self.observe())
    }

    pub fn observe(&self) -> EnvObservation {
        let (plant, cl, spec) = (self.plant.as_ref().expect("reset first"), self.cl.as_ref().expect("reset first"), self.spec.expect("reset first"));
        let s = &cl.state;
        let (omega_l, omega_l_dot) = plant.tip_state(s);
        EnvObservation { e_t: spec.theta_t - s.theta, theta: s.theta, theta_dot: s.theta_dot, tau: cl.last_torque, omega_l, omega_l_dot }
    }

    /// Normalized observation for the networks.
    pub fn features(&self, obs: &EnvObservation) -> [f64; OBS_DIM] {
        obs.normalized(&self.scale)
    }

    pub fn reward(&self, obs: &EnvObservation) -> (RewardTerms, bool, bool) {
        let c = &self.cfg;
        let e_deg = obs.e_t.abs().to_degrees();
        let rate_deg = obs.theta_dot.abs().to_degrees();
        let tip = obs.omega_l_dot.abs();
        let reached = e_deg < c.reach_error_deg && rate_deg < c.reach_rate_deg && tip < c.reach_tip_rate;
        let failed = !(0.0..=FRAC_PI_2).contains(&obs.theta);
        let terms = RewardTerms {
            error: c.w_e * e_deg,
            rate: c.w_theta_dot * rate_deg,
            tip: c.w_omega_dot * tip,
            reach: if reached { c.reach_reward } else { 0.0 },
            failure: if failed { c.failure_reward } else { 0.0 },
        };
        (terms, reached, failed)
    }

    /// Holds `theta_dot_d = theta_dot_max * action` for one planner period.
    /// Call `reset` again once an episode is done.
    pub fn step(&mut self, action: f64) -> (EnvObservation, f64, StepInfo) {
        assert!(!self.done, "episode finished; reset first");
        let a = if action.is_finite() { action.clamp(-1.0, 1.0) } else { 0.0 };
        let cmd = a * self.cfg.theta_dot_max();
        let dt = self.loop_cfg.control_dt;
        let ticks = (self.cfg.time_step / dt).round() as usize;
        let plant = self.plant.as_ref().expect("reset first");
        let cl = self.cl.as_mut().expect("reset first");
        let mut tip_sq = 0.0;
        let mut diagnostics = None;
        for _ in 0..ticks {
            if self.cfg.command_filter > 0.0 {
                self.theta_dot_d += (cmd - self.theta_dot_d) * (dt / self.cfg.command_filter).min(1.0);
            } else {
                self.theta_dot_d = cmd;
            }
            if let Err(err) = cl.tick(plant, (self.theta_d, self.theta_dot_d, 0.0)) {
                diagnostics = Some(err.to_string());
                break;
            }
            cl.state.t += dt;
            self.theta_d += self.theta_dot_d * dt;
            tip_sq += plant.tip_state(&cl.state).1.powi(2);
        }
        self.steps += 1;
        let obs = self.observe();
        let (mut terms, reached, failed) = self.reward(&obs);
        let outcome = if diagnostics.is_some() || !obs.is_finite() {
            terms = RewardTerms { failure: self.cfg.failure_reward, ..Default::default() };
            diagnostics.get_or_insert_with(|| "non-finite observation".into());
            Outcome::Diverged
        } else if failed {
            Outcome::Failed
        } else if reached {
            Outcome::Reached
        } else if self.steps >= self.cfg.max_time_steps_per_episode {
            Outcome::TimedOut
        } else {
            Outcome::Running
        };
        self.done = outcome.is_done();
        let info = StepInfo {
            terms,
            outcome,
            theta_dot_d: self.theta_dot_d,
            theta_d: self.theta_d,
            tip_rate_sq_mean: tip_sq / ticks.max(1) as f64,
            diagnostics,
        };
        (obs, terms.total(), info)
    }

    /// Keeps running after a reach or timeout (evaluation windows);
    /// only divergence stops it.
    pub fn continue_episode(&mut self) {
        self.done = false;
    }
}
