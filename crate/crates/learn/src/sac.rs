//! Soft actor-critic: twin critics with Polyak-averaged targets and a
//! tanh-Gaussian actor.

use std::ops::Range;

use rand::Rng;
use thiserror::Error;

use crate::config::SacConfig;
use crate::nn::{Adam, Cache, Mlp};
use crate::policy::{self, Draw};
use crate::replay::{ReplayBuffer, Transition, OBS_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SacError {
    #[error("non-finite {what} at update {update}")]
    NonFinite { what: &'static str, update: u64 },
    #[error("buffer holds {have} transitions, batch needs {need}")]
    Underfilled { have: usize, need: usize },
}

/// Networks and optimizer state owned by the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub policy: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    pub policy_opt: Adam,
    pub q1_opt: Adam,
    pub q2_opt: Adam,
    pub temperature: f64,
    /// Optimizer over `ln(temperature)`; unused unless learned.
    pub temperature_opt: Adam,
    pub updates: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Losses {
    pub critic1: f64,
    pub critic2: f64,
    pub policy: f64,
    pub mean_log_prob: f64,
    pub temperature: f64,
}

/// Hyperparameters consumed by [`Agent::update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateParams {
    pub discount: f64,
    pub smoothing: f64,
    pub learn_temperature: bool,
    pub target_entropy: f64,
    pub chunks: usize,
}

impl From<&SacConfig> for UpdateParams {
    fn from(c: &SacConfig) -> Self {
        Self {
            discount: c.discount_factor,
            smoothing: c.target_smoothing_factor,
            learn_temperature: c.learn_temperature,
            target_entropy: c.target_entropy,
            chunks: c.gradient_chunks,
        }
    }
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

pub fn policy_sizes(hidden: &[usize]) -> Vec<usize> {
    layer_sizes(OBS_DIM, hidden, 2)
}

pub fn critic_sizes(hidden: &[usize]) -> Vec<usize> {
    layer_sizes(OBS_DIM + 1, hidden, 1)
}

fn critic_input(obs: &[f64; OBS_DIM], a: f64) -> [f64; OBS_DIM + 1] {
    let mut x = [0.0; OBS_DIM + 1];
    x[..OBS_DIM].copy_from_slice(obs);
    x[OBS_DIM] = a;
    x
}

/// Splits `0..n` into `k` contiguous ranges of near-equal length.
fn chunk_ranges(n: usize, k: usize) -> Vec<Range<usize>> {
    let k = k.clamp(1, n.max(1));
    (0..k).map(|i| i * n / k..(i + 1) * n / k).collect()
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

struct CriticChunk {
    g1: Vec<f64>,
    g2: Vec<f64>,
    loss1: f64,
    loss2: f64,
}

struct ActorChunk {
    g: Vec<f64>,
    loss: f64,
    log_prob: f64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(cfg: &SacConfig, rng: &mut R) -> Self {
        let policy = Mlp::new(&policy_sizes(&cfg.hidden), rng);
        let q1 = Mlp::new(&critic_sizes(&cfg.hidden), rng);
        let q2 = Mlp::new(&critic_sizes(&cfg.hidden), rng);
        let lr = cfg.learning_rate;
        Self {
            policy_opt: Adam::new(policy.num_params(), lr),
            q1_opt: Adam::new(q1.num_params(), lr),
            q2_opt: Adam::new(q2.num_params(), lr),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            policy,
            q1,
            q2,
            temperature: cfg.temperature,
            temperature_opt: Adam::new(1, lr),
            updates: 0,
        }
    }

    /// Action draw for normalized observation `obs`; `xi = 0` is the
    /// deterministic mean action.
    pub fn act(&self, obs: &[f64; OBS_DIM], xi: f64) -> Draw {
        let out = self.policy.forward(obs).expect("observation width");
        policy::draw(&out, xi)
    }

    pub fn min_q(&self, obs: &[f64; OBS_DIM], a: f64) -> f64 {
        let x = critic_input(obs, a);
        self.q1.forward(&x).expect("critic width")[0].min(self.q2.forward(&x).expect("critic width")[0])
    }

    /// One gradient step for both critics, the actor and (optionally) the
    /// temperature, then Polyak averaging of the targets. `noise[i]` holds
    /// the standard-normal draws for the next-state and current-state
    /// actions of batch element `i`.
    pub fn update(&mut self, buf: &ReplayBuffer, idx: &[usize], noise: &[(f64, f64)], hp: &UpdateParams) -> Result<Losses, SacError> {
        assert_eq!(idx.len(), noise.len());
        let n = idx.len();
        if n == 0 || buf.len() < n {
            return Err(SacError::Underfilled { have: buf.len(), need: n.max(1) });
        }
        let batch: Vec<(Transition, (f64, f64))> = idx.iter().zip(noise).map(|(&i, &z)| (*buf.get(i), z)).collect();
        let chunks = chunk_ranges(n, hp.chunks);
        let scale = 1.0 / n as f64;
        let beta = self.temperature;
        let update = self.updates;
        let nonfinite = |what| SacError::NonFinite { what, update };

        // critics
        let parts = flexlink_core::par::map(&chunks, |r| self.critic_chunk(&batch[r.clone()], beta, hp.discount, scale));
        let (mut g1, mut g2) = (vec![0.0; self.q1.num_params()], vec![0.0; self.q2.num_params()]);
        let (mut loss1, mut loss2) = (0.0, 0.0);
        for p in &parts {
            add_into(&mut g1, &p.g1);
            add_into(&mut g2, &p.g2);
            loss1 += p.loss1;
            loss2 += p.loss2;
        }
        if !(loss1.is_finite() && loss2.is_finite()) || g1.iter().chain(&g2).any(|g| !g.is_finite()) {
            return Err(nonfinite("critic loss"));
        }
        self.q1_opt.update(self.q1.params_mut(), &g1);
        self.q2_opt.update(self.q2.params_mut(), &g2);

        // actor against the updated critics
        let parts = flexlink_core::par::map(&chunks, |r| self.actor_chunk(&batch[r.clone()], beta, scale));
        let mut g = vec![0.0; self.policy.num_params()];
        let (mut loss, mut log_prob) = (0.0, 0.0);
        for p in &parts {
            add_into(&mut g, &p.g);
            loss += p.loss;
            log_prob += p.log_prob;
        }
        if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(nonfinite("policy loss"));
        }
        self.policy_opt.update(self.policy.params_mut(), &g);

        if hp.learn_temperature {
            // J(ln b) = -ln b (log pi + target entropy), batch mean
            let mut lt = [self.temperature.ln()];
            let grad = -(log_prob + hp.target_entropy);
            self.temperature_opt.update(&mut lt, &[grad]);
            self.temperature = lt[0].exp();
            if !self.temperature.is_finite() {
                return Err(nonfinite("temperature"));
            }
        }

        self.q1_target.soft_update(&self.q1, hp.smoothing);
        self.q2_target.soft_update(&self.q2, hp.smoothing);
        self.updates += 1;
        Ok(Losses { critic1: loss1, critic2: loss2, policy: loss, mean_log_prob: log_prob, temperature: self.temperature })
    }

    fn critic_chunk(&self, batch: &[(Transition, (f64, f64))], beta: f64, discount: f64, scale: f64) -> CriticChunk {
        let mut out = CriticChunk { g1: vec![0.0; self.q1.num_params()], g2: vec![0.0; self.q2.num_params()], loss1: 0.0, loss2: 0.0 };
        let (mut cache, mut pc, mut tc) = (Cache::default(), Cache::default(), Cache::default());
        for (t, (xi_next, _)) in batch {
            let y = if t.terminal {
                t.reward
            } else {
                let d = policy::draw(&policy::forward(&self.policy, &t.next_obs, &mut pc), *xi_next);
                let x = critic_input(&t.next_obs, d.action);
                self.q1_target.forward_cached(&x, &mut tc).expect("critic width");
                let q1 = tc.output()[0];
                self.q2_target.forward_cached(&x, &mut tc).expect("critic width");
                let qn = q1.min(tc.output()[0]);
                t.reward + discount * (qn - beta * d.log_prob)
            };
            let x = critic_input(&t.obs, t.action);
            for (net, g, loss) in [(&self.q1, &mut out.g1, &mut out.loss1), (&self.q2, &mut out.g2, &mut out.loss2)] {
                net.forward_cached(&x, &mut cache).expect("critic width");
                let err = cache.output()[0] - y;
                *loss += 0.5 * err * err * scale;
                net.backward(&cache, &[err * scale], g);
            }
        }
        out
    }

    fn actor_chunk(&self, batch: &[(Transition, (f64, f64))], beta: f64, scale: f64) -> ActorChunk {
        let mut out = ActorChunk { g: vec![0.0; self.policy.num_params()], loss: 0.0, log_prob: 0.0 };
        let (mut pc, mut c1, mut c2) = (Cache::default(), Cache::default(), Cache::default());
        let mut scratch = vec![0.0; self.q1.num_params()];
        for (t, (_, xi)) in batch {
            let o = policy::forward(&self.policy, &t.obs, &mut pc);
            let d = policy::draw(&o, *xi);
            let x = critic_input(&t.obs, d.action);
            self.q1.forward_cached(&x, &mut c1).expect("critic width");
            self.q2.forward_cached(&x, &mut c2).expect("critic width");
            let (q1, q2) = (c1.output()[0], c2.output()[0]);
            let (q, net, cache) = if q1 <= q2 { (q1, &self.q1, &c1) } else { (q2, &self.q2, &c2) };
            // only the action component of the input gradient is used
            let dq_da = net.backward(cache, &[1.0], &mut scratch)[OBS_DIM];
            out.loss += (beta * d.log_prob - q) * scale;
            out.log_prob += d.log_prob * scale;
            let gh = policy::objective_grad(&d, beta, dq_da);
            self.policy.backward(&pc, &[gh[0] * scale, gh[1] * scale], &mut out.g);
        }
        out
    }
}
