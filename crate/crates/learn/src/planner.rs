//! Trained policy as a 10 Hz joint-speed planner.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::checkpoint::Checkpoint;
use crate::env::{EnvObservation, ObsScale};
use crate::nn::Mlp;
use crate::policy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("observation contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// `tanh(mean)`, for evaluation.
    Deterministic,
    Stochastic,
}

/// Immutable snapshot of a policy network; cheap to share across runs.
#[derive(Debug, Clone)]
pub struct Planner {
    net: Mlp,
    scale: ObsScale,
    theta_dot_max: f64,
}

impl Planner {
    pub fn new(net: Mlp, scale: ObsScale, theta_dot_max: f64) -> Self {
        Self { net, scale, theta_dot_max }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Self {
        Self::new(ck.agent.policy.clone(), ObsScale::new(&ck.config, &ck.nominal), ck.config.theta_dot_max())
    }

    pub fn theta_dot_max(&self) -> f64 {
        self.theta_dot_max
    }

    /// Normalized action in `[-1, 1]`.
    pub fn action<R: Rng + ?Sized>(&self, obs: &EnvObservation, mode: PlanMode, rng: &mut R) -> Result<f64, PlanError> {
        if !obs.is_finite() {
            return Err(PlanError::NonFinite);
        }
        let out = self.net.forward(&obs.normalized(&self.scale)).expect("policy input width");
        let xi = match mode {
            PlanMode::Deterministic => 0.0,
            PlanMode::Stochastic => rng.sample(StandardNormal),
        };
        Ok(policy::draw(&out, xi).action)
    }

    /// Commanded joint speed (rad/s), within `±theta_dot_max`.
    pub fn plan<R: Rng + ?Sized>(&self, obs: &EnvObservation, mode: PlanMode, rng: &mut R) -> Result<f64, PlanError> {
        let a = self.action(obs, mode, rng)?;
        Ok((a * self.theta_dot_max).clamp(-self.theta_dot_max, self.theta_dot_max))
    }
}
