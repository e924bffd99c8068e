//! Tanh-squashed Gaussian policy head for a one-dimensional action.
//!
//! The network outputs `(mu, log_std)`; an action is `a = tanh(mu + sigma xi)`
//! with `xi ~ N(0, 1)` and
//! `log pi(a) = -xi^2/2 - log sigma - log(2 pi)/2 - log(1 - a^2 + EPS)`.

use crate::nn::{Cache, Mlp};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Keeps the squashing correction finite at |a| → 1.
pub const SQUASH_EPS: f64 = 1e-6;
const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

/// One reparameterized draw and what its gradients need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub action: f64,
    pub log_prob: f64,
    pub mu: f64,
    pub log_std: f64,
    /// Whether `log_std` was inside the clamp range (gradient passes).
    pub log_std_free: bool,
    pub xi: f64,
}

/// Splits raw network output into `(mu, log_std, free)`.
pub fn head(out: &[f64]) -> (f64, f64, bool) {
    let raw = out[1];
    let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
    (out[0], ls, ls == raw)
}

/// Reparameterized action for noise `xi`; `xi = 0` gives the deterministic
/// (mean) action.
pub fn draw(out: &[f64], xi: f64) -> Draw {
    let (mu, log_std, log_std_free) = head(out);
    let sigma = log_std.exp();
    let action = (mu + sigma * xi).tanh();
    let log_prob = -0.5 * xi * xi - log_std - HALF_LOG_2PI - (1.0 - action * action + SQUASH_EPS).ln();
    Draw { action, log_prob, mu, log_std, log_std_free, xi }
}

/// Gradient with respect to the raw outputs `(mu, log_std)` of
/// `beta * log pi(a) - q(a)`, given `dq_da` at the drawn action.
pub fn objective_grad(d: &Draw, beta: f64, dq_da: f64) -> [f64; 2] {
    let a = d.action;
    let one_m = 1.0 - a * a;
    // d log pi / du through the squashing correction
    let dlogp_du = 2.0 * a * one_m / (one_m + SQUASH_EPS);
    let dl_du = beta * dlogp_du - dq_da * one_m;
    let sigma = d.log_std.exp();
    let d_ls = if d.log_std_free { dl_du * sigma * d.xi - beta } else { 0.0 };
    [dl_du, d_ls]
}

/// Policy network plus its forward cache, for batch use.
pub fn forward(net: &Mlp, obs: &[f64], cache: &mut Cache) -> [f64; 2] {
    net.forward_cached(obs, cache).expect("observation width");
    let o = cache.output();
    [o[0], o[1]]
}
