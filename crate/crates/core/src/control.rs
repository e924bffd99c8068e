//! Joint torque laws: PID baseline and the boundary-feedback tracking law
//! with its Lyapunov certificate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::BeamParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("gain {name} = {value} must be finite and non-negative")]
    BadGain { name: &'static str, value: f64 },
    #[error("all PID gains are zero")]
    ZeroGains,
    #[error("positivity condition violated: alpha*I_m = {alpha_im} must be below Kp = {kp} and alpha = {alpha} below 1")]
    Positivity { alpha: f64, alpha_im: f64, kp: f64 },
    #[error("decay condition violated: alpha*I_m = {alpha_im} must be below Kd = {kd}")]
    Decay { alpha_im: f64, kd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    #[serde(rename = "Kp")]
    pub kp: f64,
    #[serde(rename = "Ki")]
    pub ki: f64,
    #[serde(rename = "Kd")]
    pub kd: f64,
}

impl PidGains {
    /// Baseline gains used in the simulation study.
    pub const BASELINE: Self = Self { kp: 150_000.0, ki: 100_000.0, kd: 20_000.0 };

    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, value) in [("Kp", self.kp), ("Ki", self.ki), ("Kd", self.kd)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ControlError::BadGain { name, value });
            }
        }
        if self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0 {
            return Err(ControlError::ZeroGains);
        }
        Ok(())
    }
}

impl Default for PidGains {
    fn default() -> Self {
        Self::BASELINE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeGains {
    #[serde(rename = "Kp")]
    pub kp: f64,
    #[serde(rename = "Kd")]
    pub kd: f64,
    pub alpha: f64,
}

impl PdeGains {
    pub const BASELINE: Self = Self { kp: 12_000.0, kd: 15_000.0, alpha: 0.5 };
}

impl Default for PdeGains {
    fn default() -> Self {
        Self::BASELINE
    }
}

/// `K_p e + K_i ∫e + K_d ė`.
pub fn pid_torque(g: &PidGains, e: f64, e_int: f64, e_dot: f64) -> f64 {
    g.kp * e + g.ki * e_int + g.kd * e_dot
}

/// Running PID integral with clamping anti-windup.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
}

impl PidState {
    /// Largest magnitude of the error integral (rad·s).
    pub const INTEGRAL_LIMIT: f64 = 1.0;

    pub fn accumulate(&mut self, e: f64, dt: f64) {
        self.integral = (self.integral + e * dt).clamp(-Self::INTEGRAL_LIMIT, Self::INTEGRAL_LIMIT);
    }
}

/// Measured boundary quantities fed to the tracking law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFeedback {
    pub theta: f64,
    /// Tip deflection `omega(L)` (m).
    pub tip: f64,
    /// Root curvature `omega''(0)` (1/m).
    pub base_curvature: f64,
}

/// The compensation term
/// `H = EI omega''(0) - 1/2 m g L cos(theta) + M g omega(L) sin(theta) - I_m thdd_d`.
pub fn compensation(bp: &BeamParams, fb: &BoundaryFeedback, theta_ddot_d: f64) -> f64 {
    bp.ei() * fb.base_curvature - 0.5 * bp.link_mass * bp.gravity * bp.length * fb.theta.cos()
        + bp.payload_mass * bp.gravity * fb.tip * fb.theta.sin()
        - bp.hub_inertia * theta_ddot_d
}

/// `K_p e + K_d ė - H`, with `H` evaluated from the controller's own model `bp`.
pub fn pde_torque(g: &PdeGains, bp: &BeamParams, e: f64, e_dot: f64, fb: &BoundaryFeedback, theta_ddot_d: f64) -> f64 {
    g.kp * e + g.kd * e_dot - compensation(bp, fb, theta_ddot_d)
}

/// Exponential decay rates implied by the gain conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedRate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Certified rate, strictly below all three.
    pub lambda: f64,
}

/// Margin kept below the smallest admissible rate.
pub const RATE_MARGIN: f64 = 0.99;

pub fn certify_gains(g: &PdeGains, hub_inertia: f64) -> Result<CertifiedRate, ControlError> {
    for (name, value) in [("Kp", g.kp), ("Kd", g.kd), ("alpha", g.alpha), ("I_m", hub_inertia)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(ControlError::BadGain { name, value });
        }
    }
    let alpha_im = g.alpha * hub_inertia;
    if !(alpha_im < g.kp && g.alpha < 1.0) {
        return Err(ControlError::Positivity { alpha: g.alpha, alpha_im, kp: g.kp });
    }
    if !(alpha_im < g.kd) {
        return Err(ControlError::Decay { alpha_im, kd: g.kd });
    }
    // alpha*Kp / (Kp/2) simplified
    let lambda1 = 2.0 * g.alpha;
    let lambda2 = 2.0 * (g.kd - alpha_im) / hub_inertia;
    let lambda3 = g.kd / hub_inertia;
    let lambda = RATE_MARGIN * lambda1.min(lambda2).min(lambda3);
    Ok(CertifiedRate { lambda1, lambda2, lambda3, lambda })
}

/// `V = 1/2 K_p e^2 + 1/2 I_m ė^2 + alpha I_m e ė`.
pub fn lyapunov_value(g: &PdeGains, hub_inertia: f64, e: f64, e_dot: f64) -> f64 {
    0.5 * g.kp * e * e + 0.5 * hub_inertia * e_dot * e_dot + g.alpha * hub_inertia * e * e_dot
}

/// Symmetric saturation; returns the clipped torque and whether it clipped.
pub fn saturate(tau: f64, tau_max: f64) -> (f64, bool) {
    if tau.abs() > tau_max {
        (tau.signum() * tau_max, true)
    } else {
        (tau, false)
    }
}

/// Default actuator limit (N·m).
pub const DEFAULT_TORQUE_LIMIT: f64 = 50_000.0;
