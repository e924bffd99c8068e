//! Point-to-point cubic reference profiles and chained schedules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("segment duration must be positive and finite (got {0})")]
    Duration(f64),
    #[error("dwell must be non-negative and finite (got {0})")]
    Dwell(f64),
    #[error("non-finite angle {0}")]
    Angle(f64),
}

/// Reference `(theta_d, theta_dot_d, theta_ddot_d)` at time `t`.
pub trait Reference {
    fn sample(&self, t: f64) -> (f64, f64, f64);
}

/// Constant set point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hold(pub f64);

impl Reference for Hold {
    fn sample(&self, _t: f64) -> (f64, f64, f64) {
        (self.0, 0.0, 0.0)
    }
}

/// Cubic with zero end velocities from `(t0, theta0)` to `(tf, theta_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicSegment {
    pub t0: f64,
    pub tf: f64,
    pub theta0: f64,
    pub theta_t: f64,
    /// Coefficients in the local time `s = t - t0`.
    pub a: [f64; 4],
}

pub fn cpt(theta0: f64, theta_t: f64, duration: f64) -> Result<CubicSegment, TrajectoryError> {
    CubicSegment::new(0.0, theta0, theta_t, duration)
}

impl CubicSegment {
    pub fn new(t0: f64, theta0: f64, theta_t: f64, duration: f64) -> Result<Self, TrajectoryError> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(TrajectoryError::Duration(duration));
        }
        for v in [theta0, theta_t, t0] {
            if !v.is_finite() {
                return Err(TrajectoryError::Angle(v));
            }
        }
        let d = theta_t - theta0;
        let a = [theta0, 0.0, 3.0 * d / duration.powi(2), -2.0 * d / duration.powi(3)];
        Ok(Self { t0, tf: t0 + duration, theta0, theta_t, a })
    }

    pub fn duration(&self) -> f64 {
        self.tf - self.t0
    }

    /// Peak speed, reached at the midpoint.
    pub fn peak_rate(&self) -> f64 {
        1.5 * (self.theta_t - self.theta0).abs() / self.duration()
    }
}

impl Reference for CubicSegment {
    fn sample(&self, t: f64) -> (f64, f64, f64) {
        if t <= self.t0 {
            return (self.theta0, 0.0, 0.0);
        }
        if t >= self.tf {
            return (self.theta_t, 0.0, 0.0);
        }
        let s = t - self.t0;
        let [a0, a1, a2, a3] = self.a;
        (a0 + s * (a1 + s * (a2 + s * a3)), a1 + s * (2.0 * a2 + 3.0 * s * a3), 2.0 * a2 + 6.0 * a3 * s)
    }
}

/// One leg of a schedule as written in configuration files (degrees, seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub target_deg: f64,
    pub duration: f64,
    #[serde(default)]
    pub dwell: f64,
}

/// Chained cubic moves, each followed by a dwell at its target.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    start: f64,
    segments: Vec<CubicSegment>,
    end: f64,
}

impl Schedule {
    pub fn new(start_rad: f64, legs: &[Waypoint]) -> Result<Self, TrajectoryError> {
        if !start_rad.is_finite() {
            return Err(TrajectoryError::Angle(start_rad));
        }
        let mut t = 0.0;
        let mut theta = start_rad;
        let mut segments = Vec::with_capacity(legs.len());
        for w in legs {
            if !(w.dwell.is_finite() && w.dwell >= 0.0) {
                return Err(TrajectoryError::Dwell(w.dwell));
            }
            let target = w.target_deg.to_radians();
            let seg = CubicSegment::new(t, theta, target, w.duration)?;
            t = seg.tf + w.dwell;
            theta = target;
            segments.push(seg);
        }
        Ok(Self { start: start_rad, segments, end: t })
    }

    /// 0° → 60° → 20°, 10 s moves and 5 s dwells.
    pub fn canonical_legs() -> Vec<Waypoint> {
        vec![
            Waypoint { target_deg: 60.0, duration: 10.0, dwell: 5.0 },
            Waypoint { target_deg: 20.0, duration: 10.0, dwell: 5.0 },
        ]
    }

    pub fn canonical() -> Self {
        Self::new(0.0, &Self::canonical_legs()).expect("canonical schedule is valid")
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Total length including the final dwell.
    pub fn end_time(&self) -> f64 {
        self.end
    }

    pub fn segments(&self) -> &[CubicSegment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

impl Reference for Schedule {
    fn sample(&self, t: f64) -> (f64, f64, f64) {
        // last segment that has started
        let idx = self.segments.partition_point(|s| s.t0 <= t);
        match idx {
            0 => (self.start, 0.0, 0.0),
            k => self.segments[k - 1].sample(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_when_endpoints_match() {
        let c = cpt(0.4, 0.4, 3.0).unwrap();
        for k in 0..=30 {
            let (th, thd, thdd) = c.sample(0.1 * k as f64);
            assert_eq!((th, thd, thdd), (0.4, 0.0, 0.0));
        }
    }

    #[test]
    fn midpoint_symmetry_and_peak_rate() {
        let c = cpt(0.0, 60f64.to_radians(), 10.0).unwrap();
        assert!((c.sample(5.0).0 - 30f64.to_radians()).abs() < 1e-15);
        let mut peak: f64 = 0.0;
        for k in 0..=100_000 {
            peak = peak.max(c.sample(k as f64 * 1e-4).1.abs());
        }
        assert!((peak - c.peak_rate()).abs() < 1e-12);
        assert!((c.peak_rate() - 1.5 * 60f64.to_radians() / 10.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_consistent() {
        let c = cpt(0.2, 1.1, 4.0).unwrap();
        let h = 1e-6;
        for k in 1..40 {
            let t = 0.1 * k as f64;
            let fd = (c.sample(t + h).0 - c.sample(t - h).0) / (2.0 * h);
            let fdd = (c.sample(t + h).1 - c.sample(t - h).1) / (2.0 * h);
            assert!((fd - c.sample(t).1).abs() < 1e-8);
            assert!((fdd - c.sample(t).2).abs() < 1e-6);
        }
    }

    #[test]
    fn clamps_outside() {
        let c = CubicSegment::new(1.0, 0.1, 0.9, 2.0).unwrap();
        assert_eq!(c.sample(0.0), (0.1, 0.0, 0.0));
        assert_eq!(c.sample(5.0), (0.9, 0.0, 0.0));
    }

    #[test]
    fn rejects_nonpositive_duration() {
        assert_eq!(cpt(0.0, 1.0, 0.0), Err(TrajectoryError::Duration(0.0)));
        assert!(cpt(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn schedule_chains_continuously() {
        let s = Schedule::canonical();
        assert_eq!(s.end_time(), 30.0);
        let (a, b) = (60f64.to_radians(), 20f64.to_radians());
        assert_eq!(s.sample(-1.0).0, 0.0);
        assert!((s.sample(12.0).0 - a).abs() < 1e-15);
        assert!((s.sample(30.0).0 - b).abs() < 1e-15);
        for t in [10.0, 15.0, 25.0] {
            let l = s.sample(t - 1e-9);
            let r = s.sample(t + 1e-9);
            assert!((l.0 - r.0).abs() < 1e-9 && (l.1 - r.1).abs() < 1e-9);
        }
        assert!(Schedule::new(0.0, &[]).unwrap().is_empty());
    }
}
