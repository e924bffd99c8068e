//! Episode loop: seeded rollouts, replay, one update per environment step.
//!
//! Every random draw comes from a ChaCha stream keyed by the episode or
//! update index, so a run resumed from a checkpoint replays exactly what an
//! uninterrupted run would have done.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use flexlink_core::beam::BeamParams;
use flexlink_core::DynamicsError;

use crate::checkpoint::Checkpoint;
use crate::config::{ConfigError, SacConfig};
use crate::env::{Env, Outcome};
use crate::replay::{ReplayBuffer, Transition};
use crate::sac::{Agent, Losses, SacError, UpdateParams};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("environment reset failed: {0}")]
    Env(#[from] DynamicsError),
    #[error(transparent)]
    Sac(#[from] SacError),
    #[error("checkpoint was written for a different configuration ({0})")]
    Mismatch(&'static str),
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub reach_flag: bool,
    pub failure_flag: bool,
    /// Mean of |omega_dot(L)| over the episode's planner steps (m/s).
    pub avg_tip_rate: f64,
    pub critic_loss: f64,
    pub policy_loss: f64,
    pub temperature: f64,
}

const INIT_STREAM: u64 = u64::MAX;

fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(2 * episode as u64);
    r
}

fn update_rng(seed: u64, update: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(2 * update + 1);
    r
}

pub struct Trainer {
    cfg: SacConfig,
    nominal: BeamParams,
    seed: u64,
    env: Env,
    pub agent: Agent,
    pub buffer: ReplayBuffer,
    episode: usize,
    total_steps: u64,
}

impl Trainer {
    pub fn new(cfg: SacConfig, nominal: BeamParams, seed: u64) -> Result<Self, TrainError> {
        cfg.validate()?;
        let mut init = ChaCha8Rng::seed_from_u64(seed);
        init.set_stream(INIT_STREAM);
        let agent = Agent::new(&cfg, &mut init);
        Ok(Self {
            env: Env::new(cfg.clone(), nominal),
            buffer: ReplayBuffer::new(cfg.experience_buffer_length),
            cfg,
            nominal,
            seed,
            agent,
            episode: 0,
            total_steps: 0,
        })
    }

    /// Resumes from `ck`. `episodes` may extend the run beyond the count the
    /// checkpoint was written with; nothing else may differ.
    pub fn resume(ck: Checkpoint, episodes: Option<usize>) -> Result<Self, TrainError> {
        let mut cfg = ck.config;
        if let Some(n) = episodes {
            cfg.training_episodes = n;
        }
        cfg.validate()?;
        if ck.buffer.capacity() != cfg.experience_buffer_length {
            return Err(TrainError::Mismatch("experience_buffer_length"));
        }
        if ck.agent.policy.sizes() != crate::sac::policy_sizes(&cfg.hidden) {
            return Err(TrainError::Mismatch("hidden"));
        }
        Ok(Self {
            env: Env::new(cfg.clone(), ck.nominal),
            cfg,
            nominal: ck.nominal,
            seed: ck.seed,
            agent: ck.agent,
            buffer: ck.buffer,
            episode: ck.episode,
            total_steps: ck.total_steps,
        })
    }

    pub fn checkpoint(&self, note: &str) -> Checkpoint {
        Checkpoint {
            config: self.cfg.clone(),
            nominal: self.nominal,
            seed: self.seed,
            episode: self.episode,
            total_steps: self.total_steps,
            agent: self.agent.clone(),
            buffer: self.buffer.clone(),
            note: note.into(),
        }
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn is_finished(&self) -> bool {
        self.episode >= self.cfg.training_episodes
    }

    fn update(&mut self) -> Result<Losses, SacError> {
        let mut rng = update_rng(self.seed, self.agent.updates);
        let idx = self.buffer.sample_indices(self.cfg.batch_size, &mut rng);
        let noise: Vec<(f64, f64)> = (0..idx.len()).map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        self.agent.update(&self.buffer, &idx, &noise, &UpdateParams::from(&self.cfg))
    }

    /// Runs one episode, learning as it goes.
    pub fn run_episode(&mut self) -> Result<EpisodeLog, TrainError> {
        let mut rng = episode_rng(self.seed, self.episode);
        let obs0 = self.env.reset(&mut rng)?;
        let mut feat = self.env.features(&obs0);
        let (mut ret, mut tip_sum, mut steps) = (0.0, 0.0, 0);
        let (mut critic, mut actor, mut n_updates) = (0.0, 0.0, 0usize);
        let outcome = loop {
            let action = if self.total_steps < self.cfg.initial_random_steps as u64 {
                rng.random_range(-1.0..=1.0)
            } else {
                self.agent.act(&feat, rng.sample(StandardNormal)).action
            };
            let (obs, reward, info) = self.env.step(action);
            let next = self.env.features(&obs);
            let next = if next.iter().all(|v| v.is_finite()) { next } else { feat };
            self.buffer.push(Transition { obs: feat, action, reward, next_obs: next, terminal: info.outcome.is_terminal() });
            self.total_steps += 1;
            steps += 1;
            ret += reward;
            tip_sum += obs.omega_l_dot.abs();
            feat = next;
            if self.total_steps >= self.cfg.initial_random_steps as u64 && self.buffer.len() >= self.cfg.batch_size {
                let l = self.update()?;
                critic += 0.5 * (l.critic1 + l.critic2);
                actor += l.policy;
                n_updates += 1;
            }
            if info.outcome.is_done() {
                break info.outcome;
            }
        };
        let per = |x: f64| if n_updates > 0 { x / n_updates as f64 } else { 0.0 };
        let log = EpisodeLog {
            episode: self.episode,
            steps,
            ret,
            reach_flag: outcome == Outcome::Reached,
            failure_flag: matches!(outcome, Outcome::Failed | Outcome::Diverged),
            avg_tip_rate: if tip_sum.is_finite() { tip_sum / steps as f64 } else { f64::INFINITY },
            critic_loss: per(critic),
            policy_loss: per(actor),
            temperature: self.agent.temperature,
        };
        self.episode += 1;
        Ok(log)
    }
}

/// Trains to the configured episode count, calling `on_episode` after each.
pub fn train<E>(
    trainer: &mut Trainer,
    mut on_episode: impl FnMut(&Trainer, &EpisodeLog) -> Result<(), E>,
) -> Result<Vec<EpisodeLog>, TrainOrCallback<E>> {
    let mut logs = Vec::new();
    while !trainer.is_finished() {
        let log = trainer.run_episode().map_err(TrainOrCallback::Train)?;
        on_episode(trainer, &log).map_err(TrainOrCallback::Callback)?;
        logs.push(log);
    }
    Ok(logs)
}

#[derive(Debug, Error)]
pub enum TrainOrCallback<E> {
    #[error(transparent)]
    Train(TrainError),
    #[error("{0}")]
    Callback(E),
}

/// Trailing moving average with the given window (shorter at the start).
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_window() {
        let m = moving_average(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(m, vec![1.0, 1.5, 2.5, 3.5]);
    }
}
