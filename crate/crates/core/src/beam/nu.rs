//! Offset profile `nu(x; theta)` that moves the gravity load out of the tip
//! boundary condition.
//!
//! With `z = omega + nu`, the homogenized field `z` satisfies
//! `z(0) = z'(0) = z''(L) = 0` and `z'''' + p z''' = 0` at `x = L`, provided
//!
//! ```text
//! nu(0) = nu'(0) = nu''(L) = 0,   nu''''(L) + p nu'''(L) = -f,
//! f = rho*A*g*cos(theta) / EI.
//! ```
//!
//! Those four conditions leave one degree of freedom; it is fixed by
//! `nu(L) = 0`, which produces the closed form
//!
//! ```text
//! nu(x) = -f * psi(x)
//! psi(x) = -G1/p^4 e^{-px} + x^3/(6p) + G2 x^2 - G1/p^3 x + G1/p^4
//! G1 = 2 p^3 L^3 / ((3 p^2 L^2 - 6) e^{-pL} + 6 - 6 pL)
//! G2 = G1/(2p^2) e^{-pL} - L/(2p)
//! ```

use super::{derived_params, BeamError, BeamParams};

/// Below this ratio of |denominator| to the magnitude of its cancelling terms
/// the homogenization is treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// Evaluates `(Gamma_1, Gamma_2)` for coupling coefficient `p` (1/m) and
/// length `l` (m).
pub fn gamma_coefficients(p: f64, l: f64) -> Result<(f64, f64), BeamError> {
    let x = p * l;
    if !(x.is_finite() && x > 0.0) {
        return Err(BeamError::Singular { pl: x, denominator: 0.0 });
    }
    let den = gamma_denominator(x);
    // The constant terms 6 and (3x^2 - 6) e^{-x} cancel to O(x^3).
    let scale = (3.0 * x * x - 6.0).abs() * (-x).exp() + 6.0 + 6.0 * x;
    if den.abs() < SINGULAR_RATIO * scale {
        return Err(BeamError::Singular { pl: x, denominator: den });
    }
    let g1 = 2.0 * x.powi(3) / den;
    let g2 = g1 / (2.0 * p * p) * (-x).exp() - l / (2.0 * p);
    Ok((g1, g2))
}

/// `(3x^2 - 6) e^{-x} + 6 - 6x`, using its Taylor series where the closed
/// form cancels catastrophically.
fn gamma_denominator(x: f64) -> f64 {
    if x >= 1.0 {
        return (3.0 * x * x - 6.0) * (-x).exp() + 6.0 - 6.0 * x;
    }
    // sum_{j>=3} (-1)^j 3 (j-2)(j+1) x^j / j!
    let mut sum = 0.0;
    let mut pow_over_fact = x * x * x / 6.0;
    for j in 3..60 {
        let jf = j as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * 3.0 * (jf - 2.0) * (jf + 1.0) * pow_over_fact;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        pow_over_fact *= x / (jf + 1.0);
    }
    sum
}

/// `1 - y - e^{-y}`, accurate for small `y`.
fn one_minus_y_minus_exp(y: f64) -> f64 {
    if y.abs() > 0.5 {
        return -(-y).exp_m1() - y;
    }
    // -sum_{k>=2} (-y)^k / k!
    let mut sum: f64 = 0.0;
    let mut term = -y * y / 2.0;
    let mut k = 2.0;
    while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        sum += term;
        k += 1.0;
        term *= -y / k;
    }
    sum
}

/// The offset profile at one joint angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuProfile {
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: f64,
    /// Tip-load intensity `rho*A*g*cos(theta)/EI` (1/m³).
    pub f: f64,
}

pub fn nu_profile(bp: &BeamParams, theta: f64) -> Result<NuProfile, BeamError> {
    let d = derived_params(bp)?;
    let (gamma1, gamma2) = gamma_coefficients(d.p, bp.length)?;
    let f = d.rho_a * bp.gravity / d.ei * theta.cos();
    Ok(NuProfile { gamma1, gamma2, p: d.p, f })
}

impl NuProfile {
    /// Same profile scaled to another load intensity.
    pub fn with_load(mut self, f: f64) -> Self {
        self.f = f;
        self
    }

    /// `nu(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `d^k nu / dx^k` at `x`, for `k` in `0..=4`.
    pub fn derivative(&self, order: u8, x: f64) -> f64 {
        -self.f * self.shape(order, x)
    }

    /// Derivatives of `psi`, the profile per unit `f` with the sign of the
    /// printed closed form (`nu = -f psi`).
    pub fn shape(&self, order: u8, x: f64) -> f64 {
        let (g1, g2, p) = (self.gamma1, self.gamma2, self.p);
        let e = (-p * x).exp();
        match order {
            0 => g1 / p.powi(4) * one_minus_y_minus_exp(p * x) + x.powi(3) / (6.0 * p) + g2 * x * x,
            1 => g1 / p.powi(3) * (-p * x).exp_m1() + x * x / (2.0 * p) + 2.0 * g2 * x,
            2 => -g1 / (p * p) * e + x / p + 2.0 * g2,
            3 => g1 / p * e + 1.0 / p,
            4 => -g1 * e,
            _ => panic!("nu derivative order {order} not supported"),
        }
    }

    /// Residuals of the four boundary conditions on `nu` plus the `nu(L) = 0`
    /// closure, in the order
    /// `[nu(0), nu'(0), nu''(L), nu''''(L) + p nu'''(L) + f, nu(L)]`.
    pub fn boundary_residuals(&self, l: f64) -> [f64; 5] {
        [
            self.value(0.0),
            self.derivative(1, 0.0),
            self.derivative(2, l),
            self.derivative(4, l) + self.p * self.derivative(3, l) + self.f,
            self.value(l),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_profile(theta: f64) -> (BeamParams, NuProfile) {
        let bp = BeamParams::table_i();
        (bp, nu_profile(&bp, theta).unwrap())
    }

    #[test]
    fn series_matches_closed_form_near_switch() {
        for x in [0.6, 0.9, 0.999, 1.0, 1.3] {
            let closed = (3.0 * x * x - 6.0) * (-x as f64).exp() + 6.0 - 6.0 * x;
            let series = {
                let mut s = 0.0;
                let mut pf = x * x * x / 6.0;
                for j in 3..60 {
                    let jf = j as f64;
                    s += if j % 2 == 0 { 1.0 } else { -1.0 } * 3.0 * (jf - 2.0) * (jf + 1.0) * pf;
                    pf *= x / (jf + 1.0);
                }
                s
            };
            assert!((closed - series).abs() < 1e-13, "x={x}: {closed} vs {series}");
            assert!((gamma_denominator(x) - closed).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_satisfies_tip_closure_for_table_values() {
        let (bp, nu) = table_profile(0.0);
        let r = nu.boundary_residuals(bp.length);
        let scale = nu.f.abs();
        for (i, v) in r.iter().enumerate() {
            assert!(v.abs() < 1e-9 * scale, "residual {i} = {v:e}");
        }
    }

    #[test]
    fn vanishing_p_l_is_singular() {
        assert!(matches!(gamma_coefficients(1e-6, 4.5), Err(BeamError::Singular { .. })));
        assert!(matches!(gamma_coefficients(0.0, 4.5), Err(BeamError::Singular { .. })));
        assert!(gamma_coefficients(1e-2, 4.5).is_ok());
    }

    #[test]
    fn root_conditions_hold_for_any_angle() {
        for k in 0..20 {
            let theta = -1.5 + 0.17 * k as f64;
            let (_, nu) = table_profile(theta);
            assert_eq!(nu.value(0.0), 0.0);
            assert!(nu.derivative(1, 0.0).abs() < 1e-15);
        }
    }

    #[test]
    fn vertical_link_has_no_offset() {
        let (bp, nu) = table_profile(std::f64::consts::FRAC_PI_2);
        let (_, flat) = table_profile(0.0);
        for i in 0..=10 {
            let x = bp.length * i as f64 / 10.0;
            assert!(nu.value(x).abs() <= 1e-15 * flat.value(bp.length / 2.0).abs().max(1.0));
        }
    }

    #[test]
    fn offset_scales_with_cos_theta() {
        let (bp, flat) = table_profile(0.0);
        for theta in [0.3, 1.0, 2.0, -0.7] {
            let (_, nu) = table_profile(theta);
            for i in 0..=8 {
                let x = bp.length * i as f64 / 8.0;
                let want = theta.cos() * flat.value(x);
                assert!((nu.value(x) - want).abs() <= 4.0 * f64::EPSILON * flat.value(x).abs().max(1e-300));
            }
        }
    }
}
