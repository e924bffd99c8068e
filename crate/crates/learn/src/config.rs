//! Agent and environment settings. Key names follow the agent parameter
//! table (`batch_size`, `experience_buffer_length`, ..., `W_e`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{field} = {value} is out of range ({why})")]
    Range { field: &'static str, value: f64, why: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub batch_size: usize,
    pub experience_buffer_length: usize,
    pub discount_factor: f64,
    pub learning_rate: f64,
    pub target_smoothing_factor: f64,
    pub training_episodes: usize,
    pub max_time_steps_per_episode: usize,
    /// Planner period (s).
    pub time_step: f64,
    pub initial_random_steps: usize,
    #[serde(rename = "W_e")]
    pub w_e: f64,
    #[serde(rename = "W_theta_dot")]
    pub w_theta_dot: f64,
    #[serde(rename = "W_omega_dot")]
    pub w_omega_dot: f64,
    /// Largest commanded joint speed (deg/s).
    pub theta_dot_max_deg: f64,
    pub reach_reward: f64,
    pub failure_reward: f64,
    /// Reach thresholds on |e_T| (deg), |theta_dot| (deg/s), |omega_dot(L)| (m/s).
    pub reach_error_deg: f64,
    pub reach_rate_deg: f64,
    pub reach_tip_rate: f64,
    /// Entropy temperature; the initial value when `learn_temperature` is set.
    pub temperature: f64,
    pub learn_temperature: bool,
    pub target_entropy: f64,
    /// Relative half-width of the uniform parameter perturbation per episode.
    pub randomization: f64,
    pub hidden: Vec<usize>,
    pub n_modes: usize,
    /// Time constant of an optional first-order filter on the velocity
    /// command (s); zero disables it.
    pub command_filter: f64,
    /// Batch gradients are computed in this many fixed chunks.
    pub gradient_chunks: usize,
    pub checkpoint_every: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            experience_buffer_length: 1_000_000,
            discount_factor: 0.99,
            learning_rate: 1e-4,
            target_smoothing_factor: 1e-3,
            training_episodes: 1500,
            max_time_steps_per_episode: 300,
            time_step: 0.1,
            initial_random_steps: 500,
            w_e: -5e-3,
            w_theta_dot: -1e-3,
            w_omega_dot: -0.3,
            theta_dot_max_deg: 5.0,
            reach_reward: 200.0,
            failure_reward: -200.0,
            reach_error_deg: 0.1,
            reach_rate_deg: 0.1,
            reach_tip_rate: 0.1,
            temperature: 0.05,
            learn_temperature: false,
            target_entropy: -1.0,
            randomization: 0.1,
            hidden: vec![64, 64],
            n_modes: 3,
            command_filter: 0.0,
            gradient_chunks: 4,
            checkpoint_every: 100,
        }
    }
}

impl SacConfig {
    /// Episode count of the original study; the default is a desk-scale run.
    pub const FULL_EPISODES: usize = 5000;

    pub fn theta_dot_max(&self) -> f64 {
        self.theta_dot_max_deg.to_radians()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("time_step", self.time_step),
            ("theta_dot_max_deg", self.theta_dot_max_deg),
            ("reach_error_deg", self.reach_error_deg),
            ("reach_rate_deg", self.reach_rate_deg),
            ("reach_tip_rate", self.reach_tip_rate),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Range { field, value, why: "must be positive" });
            }
        }
        let counts = [
            ("batch_size", self.batch_size),
            ("experience_buffer_length", self.experience_buffer_length),
            ("max_time_steps_per_episode", self.max_time_steps_per_episode),
            ("gradient_chunks", self.gradient_chunks),
            ("n_modes", self.n_modes),
        ];
        for (field, value) in counts {
            if value == 0 {
                return Err(ConfigError::Range { field, value: 0.0, why: "must be at least 1" });
            }
        }
        if self.batch_size > self.experience_buffer_length {
            return Err(ConfigError::Range { field: "batch_size", value: self.batch_size as f64, why: "exceeds the buffer length" });
        }
        if self.n_modes > flexlink_core::MAX_MODES {
            return Err(ConfigError::Range { field: "n_modes", value: self.n_modes as f64, why: "too many modes" });
        }
        let unit = [("discount_factor", self.discount_factor), ("target_smoothing_factor", self.target_smoothing_factor)];
        for (field, value) in unit {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ConfigError::Range { field, value, why: "must lie in (0, 1]" });
            }
        }
        if !(self.randomization >= 0.0 && self.randomization < 1.0) {
            return Err(ConfigError::Range { field: "randomization", value: self.randomization, why: "must lie in [0, 1)" });
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ConfigError::Range { field: "temperature", value: self.temperature, why: "must be non-negative" });
        }
        if self.learn_temperature && self.temperature <= 0.0 {
            return Err(ConfigError::Range { field: "temperature", value: self.temperature, why: "a learned temperature needs a positive start" });
        }
        if !(self.command_filter.is_finite() && self.command_filter >= 0.0) {
            return Err(ConfigError::Range { field: "command_filter", value: self.command_filter, why: "must be non-negative" });
        }
        for (field, w) in [("W_e", self.w_e), ("W_theta_dot", self.w_theta_dot), ("W_omega_dot", self.w_omega_dot)] {
            if !w.is_finite() {
                return Err(ConfigError::Range { field, value: w, why: "must be finite" });
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(ConfigError::Range { field: "hidden", value: 0.0, why: "needs at least one non-empty layer" });
        }
        Ok(())
    }
}
