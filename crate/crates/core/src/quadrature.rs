//! Gauss–Legendre quadrature on a finite interval.

use std::f64::consts::PI;

/// Node/weight table for an `n`-point Gauss–Legendre rule mapped onto `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule on `[-1, 1]` by Newton iteration on the Legendre
    /// polynomial roots, then maps it onto `[a, b]`.
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th root (descending order).
            let mut x = ((i as f64 + 0.75) / (nf + 0.5) * PI).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = mid - half * x;
            nodes[n - 1 - i] = mid + half * x;
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Returns `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        let q = GaussLegendre::new(64, 0.0, 4.5);
        let s: f64 = q.weights().iter().sum();
        assert!((s - 4.5).abs() < 1e-13);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let q = GaussLegendre::new(10, -1.0, 2.0);
        // degree 19 is the exactness limit for 10 nodes
        let exact = (2f64.powi(20) - 1.0) / 20.0;
        let got = q.integrate(|x| x.powi(19));
        assert!((got - exact).abs() / exact < 1e-13, "{got} vs {exact}");
    }

    #[test]
    fn smooth_transcendental() {
        let q = GaussLegendre::new(64, 0.0, 3.0);
        let got = q.integrate(|x| (2.0 * x).cosh() * x.sin());
        let a = q.integrate(|x| (2.0 * x).cosh() * x.sin());
        let doubled = GaussLegendre::new(128, 0.0, 3.0).integrate(|x| (2.0 * x).cosh() * x.sin());
        assert_eq!(got, a);
        assert!((got - doubled).abs() < 1e-10 * doubled.abs());
    }
}
