//! Run metrics, computed from exactly the columns written to the trajectory
//! CSV so that a report can be regenerated from the file.

use serde::Serialize;

use flexlink_core::closed_loop::Sample;

use crate::error::HarnessError;
use crate::output::ParsedCsv;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    /// RMS of `theta_d - theta` (deg).
    pub angle_rmse_deg: f64,
    /// Largest |omega(L)| (m).
    pub tip_peak: f64,
    /// RMS of omega_dot(L) (m/s).
    pub tip_rate_rmse: f64,
    /// Largest |tau| (N·m).
    pub torque_peak: f64,
    pub samples: usize,
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in v {
        s += x * x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

fn peak(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

/// Metrics over parallel columns.
pub fn from_columns(theta_d: &[f64], theta: &[f64], tip: &[f64], tip_dot: &[f64], torque: &[f64]) -> MetricsReport {
    MetricsReport {
        angle_rmse_deg: rms(theta_d.iter().zip(theta).map(|(d, t)| (d - t).to_degrees())),
        tip_peak: peak(tip.iter().copied()),
        tip_rate_rmse: rms(tip_dot.iter().copied()),
        torque_peak: peak(torque.iter().copied()),
        samples: theta.len(),
    }
}

pub fn from_samples(s: &[Sample]) -> MetricsReport {
    let col = |f: fn(&Sample) -> f64| s.iter().map(f).collect::<Vec<_>>();
    from_columns(&col(|x| x.theta_d), &col(|x| x.theta), &col(|x| x.tip), &col(|x| x.tip_dot), &col(|x| x.torque))
}

pub fn from_csv(csv: &ParsedCsv) -> Result<MetricsReport, HarnessError> {
    Ok(from_columns(&csv.floats("theta_d")?, &csv.floats("theta")?, &csv.floats("tip")?, &csv.floats("tip_dot")?, &csv.floats("torque")?))
}
