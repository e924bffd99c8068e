//! Mode shapes of the homogenized field: a clamped root with a point mass at
//! the tip. Each shape is
//!
//! ```text
//! Phi(x) = C2 (cos bx - cosh bx) + C4 (sin bx - sinh bx)
//! ```
//!
//! which meets `Phi(0) = Phi'(0) = 0` identically. `Phi''(L) = 0` fixes
//! `C4 = -Omega C2` and the tip condition `Phi'''' + p Phi''' = 0` gives the
//! frequency equation. Shapes are scaled to unit L² norm; they are mutually
//! orthogonal under the payload-weighted product
//! `<u, v> = int u v dx + u(L) v(L) / p`.

use super::{derived_params, BeamError, BeamParams};
use crate::quadrature::GaussLegendre;
use crate::MAX_MODES;

/// Nodes per Gauss–Legendre integral over the link.
pub const BASIS_QUADRATURE_NODES: usize = 64;

const SCAN_STEP: f64 = 0.05;
const SCAN_MIN_UPPER: f64 = 12.0;
const BISECTION_TOL: f64 = 1e-12;
const MIN_ROOT_GAP: f64 = 0.1;

/// Frequency equation scaled to be O(1) and free of overflow:
/// `[p b (sech bL + cos bL) - b^2 (sin bL - cos bL tanh bL)] / (b (b + p))`.
fn frequency_function(beta: f64, p: f64, l: f64) -> f64 {
    let bl = beta * l;
    let (s, c) = bl.sin_cos();
    let sech = 1.0 / bl.cosh();
    let th = bl.tanh();
    (p * beta * (sech + c) - beta * beta * (s - c * th)) / (beta * (beta + p))
}

/// Determinant of the 2×2 boundary system in `(C2 b^2, C4 b^2)` after each
/// row is scaled to unit Euclidean norm.
pub fn boundary_determinant(beta: f64, p: f64, l: f64) -> f64 {
    let bl = beta * l;
    let (s, c) = bl.sin_cos();
    let ch = bl.cosh();
    let (sc, cc, th) = (s / ch, c / ch, bl.tanh());
    // rows divided by cosh(bL)
    let r11 = -(cc + 1.0);
    let r12 = -(sc + th);
    let r21 = beta * beta * (cc - 1.0) + p * beta * (sc - th);
    let r22 = beta * beta * (sc - th) - p * beta * (cc + 1.0);
    let n1 = r11.hypot(r12);
    let n2 = r21.hypot(r22);
    // r11 r22 - r12 r21 simplified to avoid cancelling the O(1) parts
    let det = 2.0 / ch * (p * beta * (1.0 / ch + c) - beta * beta * (s - c * th));
    det / (n1 * n2)
}

/// The `n` smallest positive roots of the frequency equation, ascending.
pub fn solve_eigenfrequencies(bp: &BeamParams, n: usize) -> Result<Vec<f64>, BeamError> {
    if n == 0 || n > MAX_MODES {
        return Err(BeamError::ModeCount { got: n, max: MAX_MODES });
    }
    let p = derived_params(bp)?.p;
    let l = bp.length;
    let f = |b: f64| frequency_function(b, p, l);
    let h = SCAN_STEP / l;
    let upper = SCAN_MIN_UPPER.max((n as f64 + 1.0) * std::f64::consts::PI) / l;

    let mut roots = Vec::with_capacity(n);
    let mut lo = h;
    let mut f_lo = f(lo);
    let mut k = 1usize;
    while roots.len() < n {
        k += 1;
        let hi = h * k as f64;
        if hi > upper + 0.5 * h {
            break;
        }
        let f_hi = f(hi);
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            roots.push(bisect(&f, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    if roots.len() < n {
        return Err(BeamError::Bracketing { wanted: n, found: roots.len(), upper });
    }
    debug_assert!(roots.windows(2).all(|w| w[1] - w[0] > MIN_ROOT_GAP / l));
    Ok(roots)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One normalized mode shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Spatial eigenvalue (1/m).
    pub beta: f64,
    /// `C4 = -omega * C2`.
    pub omega: f64,
    /// `omega - 1`, carried separately so `cosh - omega sinh` never cancels.
    delta: f64,
    /// `C2`, including the sign that makes `Phi(L) > 0`.
    pub scale: f64,
}

impl Mode {
    fn unscaled(beta: f64, l: f64) -> Self {
        let bl = beta * l;
        let (s, c) = bl.sin_cos();
        let ch = bl.cosh();
        let denom = s / ch + bl.tanh();
        let omega = (c / ch + 1.0) / denom;
        let delta = (c - s + (-bl).exp()) / ch / denom;
        Self { beta, omega, delta, scale: 1.0 }
    }

    /// `d^k Phi / dx^k` at `x`, any `k >= 0`.
    pub fn eval(&self, order: u32, x: f64) -> f64 {
        let b = self.beta;
        let bx = b * x;
        let phase = order as f64 * std::f64::consts::FRAC_PI_2;
        let bk = b.powi(order as i32);
        let hyper = if order % 2 == 0 { bx.sinh() } else { bx.cosh() };
        let decay = if order % 2 == 0 { (-bx).exp() } else { -(-bx).exp() };
        // cos bx - omega sin bx - e^{-bx} + delta sinh bx
        let v = (bx + phase).cos() - self.omega * (bx + phase).sin() - decay + self.delta * hyper;
        self.scale * bk * v
    }
}

/// Per-mode verification numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCheck {
    pub beta: f64,
    /// Row-normalized boundary determinant at `beta`.
    pub determinant: f64,
    /// `[Phi(0), Phi'(0), Phi''(L), Phi''''(L) + p Phi'''(L)]`, each divided
    /// by the matching power of `beta` times `max |Phi''|`.
    pub boundary: [f64; 4],
    /// `int Phi^2 dx`.
    pub norm: f64,
}

/// A set of normalized modes for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    pub length: f64,
    pub p: f64,
    pub modes: Vec<Mode>,
}

impl ModalBasis {
    /// Solves for the first `n` eigenvalues and builds the basis.
    pub fn solve(bp: &BeamParams, n: usize) -> Result<Self, BeamError> {
        let beta = solve_eigenfrequencies(bp, n)?;
        Self::build(bp, &beta)
    }

    /// Builds normalized shapes for given eigenvalues.
    pub fn build(bp: &BeamParams, beta: &[f64]) -> Result<Self, BeamError> {
        let p = derived_params(bp)?.p;
        let l = bp.length;
        let quad = GaussLegendre::new(BASIS_QUADRATURE_NODES, 0.0, l);
        let mut modes = Vec::with_capacity(beta.len());
        for (index, &b) in beta.iter().enumerate() {
            let mut mode = Mode::unscaled(b, l);
            let norm = quad.integrate(|x| mode.eval(0, x).powi(2));
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(BeamError::Normalization { index, value: norm });
            }
            let sign = if mode.eval(0, l) < 0.0 { -1.0 } else { 1.0 };
            mode.scale = sign / norm.sqrt();
            modes.push(mode);
        }
        Ok(Self { length: l, p, modes })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn beta(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.beta).collect()
    }

    /// `d^k Phi_i / dx^k` at `x`.
    pub fn phi(&self, i: usize, order: u32, x: f64) -> f64 {
        self.modes[i].eval(order, x)
    }

    /// Plain L² Gram matrix `int Phi_i Phi_j dx`.
    pub fn l2_gram(&self, nodes: usize) -> Vec<Vec<f64>> {
        let quad = GaussLegendre::new(nodes, 0.0, self.length);
        let n = self.n_modes();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = quad.integrate(|x| self.phi(i, 0, x) * self.phi(j, 0, x));
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }

    /// Payload-weighted Gram matrix `int Phi_i Phi_j dx + Phi_i(L) Phi_j(L) / p`,
    /// the product under which the modes are orthogonal.
    pub fn weighted_gram(&self, nodes: usize) -> Vec<Vec<f64>> {
        let mut g = self.l2_gram(nodes);
        let l = self.length;
        for (i, row) in g.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += self.phi(i, 0, l) * self.phi(j, 0, l) / self.p;
            }
        }
        g
    }

    /// Largest `|G_ij| / sqrt(G_ii G_jj)` over `i != j` of a Gram matrix.
    pub fn max_off_diagonal(gram: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..gram.len() {
            for j in 0..gram.len() {
                if i != j {
                    worst = worst.max(gram[i][j].abs() / (gram[i][i] * gram[j][j]).sqrt());
                }
            }
        }
        worst
    }

    pub fn check(&self) -> Vec<ModeCheck> {
        let l = self.length;
        let quad = GaussLegendre::new(BASIS_QUADRATURE_NODES, 0.0, l);
        self.modes
            .iter()
            .map(|m| {
                let b = m.beta;
                let curv_scale = (0..=400)
                    .map(|k| m.eval(2, l * k as f64 / 400.0).abs())
                    .fold(0.0, f64::max);
                let tip = m.eval(4, l) + self.p * m.eval(3, l);
                ModeCheck {
                    beta: b,
                    determinant: boundary_determinant(b, self.p, l),
                    boundary: [
                        m.eval(0, 0.0) * b * b / curv_scale,
                        m.eval(1, 0.0) * b / curv_scale,
                        m.eval(2, l) / curv_scale,
                        tip / (b * (b + self.p) * curv_scale),
                    ],
                    norm: quad.integrate(|x| m.eval(0, x).powi(2)),
                }
            })
            .collect()
    }
}
