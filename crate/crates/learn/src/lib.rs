//! Soft actor-critic motion planning for the flexible link.

pub mod checkpoint;
pub mod config;
pub mod env;
pub mod eval;
pub mod nn;
pub mod planner;
pub mod policy;
pub mod replay;
pub mod sac;
pub mod train;

pub use config::{ConfigError, SacConfig};
pub use env::{Env, EnvObservation, EpisodeSpec, Outcome, RewardTerms, StepInfo};
pub use replay::{ReplayBuffer, Transition};
