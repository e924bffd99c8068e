//! Finite-dimensional rigid–flexible dynamics and fixed-step integration.
//!
//! The elastic deviation is reconstructed as
//! `omega(x, t) = sum_i Phi_i(x) eta_i(t) - nu(x; theta)` with
//! `nu(x; theta) = cos(theta) N(x)`, and Lagrange's equations are applied to
//! the kinetic and potential energies
//!
//! ```text
//! T = 1/2 I_m thd^2 + 1/2 rhoA int ydot^2 dx + 1/2 M ydot(L)^2,   y = x theta + omega
//! U = 1/2 m g L sin th + M g (L sin th + omega(L) cos th) + 1/2 EI int omega''^2 dx
//! ```
//!
//! in the coordinates `q = (theta, eta)`. The mass matrix depends on `theta`
//! only through the rate of the offset profile, `d nu/d theta = -sin(theta) N`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{derived_params, nu_profile, BeamError, BeamParams, DerivedParams, ModalBasis, NuProfile};
use crate::linalg::{cholesky, cholesky_solve, spd_inverse, SquareN, VecN};
use crate::quadrature::GaussLegendre;
use crate::MAX_MODES;

const QUAD_NODES: usize = crate::beam::BASIS_QUADRATURE_NODES;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error("mass matrix is not positive definite at theta = {theta}")]
    NotPositiveDefinite { theta: f64 },
    #[error("time step {dt} outside (0, 1e-2] s")]
    BadStep { dt: f64 },
    #[error("integration blew up at t = {t} s")]
    NonFinite { t: f64 },
    #[error("state carries {got} modal coordinates, model has {want}")]
    ModeMismatch { got: usize, want: usize },
}

/// Assembly options for [`DynamicsModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub n_modes: usize,
    /// Drop the `d nu / d theta * theta_dot` contribution to the tip and
    /// field velocities (quasi-static offset).
    pub freeze_nu_rate: bool,
    /// Modal damping ratios; missing entries are zero.
    pub modal_damping: Vec<f64>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { n_modes: 3, freeze_nu_rate: false, modal_damping: Vec::new() }
    }
}

/// Generalized coordinates and their rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub theta: f64,
    pub theta_dot: f64,
    n_modes: usize,
    eta: VecN,
    eta_dot: VecN,
}

impl SimState {
    /// Undeformed homogenized field (`eta = 0`) at rest.
    pub fn at_rest(theta: f64, n_modes: usize) -> Self {
        assert!(n_modes <= MAX_MODES);
        Self { t: 0.0, theta, theta_dot: 0.0, n_modes, eta: [0.0; MAX_MODES], eta_dot: [0.0; MAX_MODES] }
    }

    pub fn with_modes(mut self, eta: &[f64], eta_dot: &[f64]) -> Self {
        assert!(eta.len() == self.n_modes && eta_dot.len() == self.n_modes);
        self.eta[..self.n_modes].copy_from_slice(eta);
        self.eta_dot[..self.n_modes].copy_from_slice(eta_dot);
        self
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta[..self.n_modes]
    }

    pub fn eta_dot(&self) -> &[f64] {
        &self.eta_dot[..self.n_modes]
    }

    pub fn eta_mut(&mut self) -> &mut [f64] {
        &mut self.eta[..self.n_modes]
    }

    pub fn eta_dot_mut(&mut self) -> &mut [f64] {
        &mut self.eta_dot[..self.n_modes]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.theta.is_finite()
            && self.theta_dot.is_finite()
            && self.eta().iter().chain(self.eta_dot()).all(|v| v.is_finite())
    }

    fn advanced(&self, d: &Rates, h: f64) -> Self {
        let mut s = *self;
        s.theta += h * d.theta_dot;
        s.theta_dot += h * d.theta_ddot;
        for i in 0..self.n_modes {
            s.eta[i] += h * d.eta_dot[i];
            s.eta_dot[i] += h * d.eta_ddot[i];
        }
        s
    }
}

/// Time derivative of a [`SimState`].
#[derive(Debug, Clone, Copy)]
struct Rates {
    theta_dot: f64,
    theta_ddot: f64,
    eta_dot: VecN,
    eta_ddot: VecN,
}

/// Generalized accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accelerations {
    pub theta_ddot: f64,
    eta_ddot: VecN,
    n_modes: usize,
}

impl Accelerations {
    pub fn eta_ddot(&self) -> &[f64] {
        &self.eta_ddot[..self.n_modes]
    }
}

/// Field values at the quadrature nodes, used by the energy and residual audits.
#[derive(Debug, Clone)]
struct FieldTables {
    x: Vec<f64>,
    w: Vec<f64>,
    /// `phi[k][i] = Phi_i(x_k)`; likewise for second and fourth derivatives.
    phi: Vec<VecN>,
    phi2: Vec<VecN>,
    phi4: Vec<VecN>,
    nu: Vec<f64>,
    nu2: Vec<f64>,
    nu4: Vec<f64>,
}

/// Modal integrals and evaluators of the discretized equations of motion.
#[derive(Debug, Clone)]
pub struct DynamicsModel {
    params: BeamParams,
    derived: DerivedParams,
    basis: ModalBasis,
    /// Offset profile at `theta = 0`; `nu(x; theta) = cos(theta) * nu0(x)`.
    nu0: NuProfile,
    freeze_nu_rate: bool,
    n: usize,
    // int x^2, int x N, int N^2
    s_xx: f64,
    s_xn: f64,
    s_nn: f64,
    s_xphi: VecN,
    s_nphi: VecN,
    phi_l: VecN,
    n_l: f64,
    phi2_0: VecN,
    n2_0: f64,
    phi3_l: VecN,
    n3_l: f64,
    // int Phi_i'' Phi_j'', int N'' Phi_i'', int N''^2
    k_phi: SquareN,
    k_nphi: VecN,
    k_nn: f64,
    m_eta: SquareN,
    m_eta_inv: SquareN,
    k_eta_chol: SquareN,
    damping: VecN,
    tables: FieldTables,
}

/// Assembles the discretized model for `bp` over `basis`.
pub fn assemble_dynamics(bp: &BeamParams, basis: &ModalBasis, opts: &ModelOptions) -> Result<DynamicsModel, DynamicsError> {
    DynamicsModel::assemble(bp, basis, opts)
}

impl DynamicsModel {
    /// Solves the modal problem and assembles in one go.
    pub fn new(bp: &BeamParams, opts: &ModelOptions) -> Result<Self, DynamicsError> {
        let basis = ModalBasis::solve(bp, opts.n_modes)?;
        Self::assemble(bp, &basis, opts)
    }

    pub fn assemble(bp: &BeamParams, basis: &ModalBasis, opts: &ModelOptions) -> Result<Self, DynamicsError> {
        let derived = derived_params(bp)?;
        let n = basis.n_modes();
        if n == 0 || n > MAX_MODES {
            return Err(BeamError::ModeCount { got: n, max: MAX_MODES }.into());
        }
        let nu0 = nu_profile(bp, 0.0)?;
        let l = bp.length;
        let quad = GaussLegendre::new(QUAD_NODES, 0.0, l);

        let mut tables = FieldTables {
            x: quad.nodes().to_vec(),
            w: quad.weights().to_vec(),
            phi: Vec::with_capacity(QUAD_NODES),
            phi2: Vec::with_capacity(QUAD_NODES),
            phi4: Vec::with_capacity(QUAD_NODES),
            nu: Vec::with_capacity(QUAD_NODES),
            nu2: Vec::with_capacity(QUAD_NODES),
            nu4: Vec::with_capacity(QUAD_NODES),
        };
        for &x in quad.nodes() {
            let mut p0 = [0.0; MAX_MODES];
            let mut p2 = [0.0; MAX_MODES];
            let mut p4 = [0.0; MAX_MODES];
            for i in 0..n {
                p0[i] = basis.phi(i, 0, x);
                p2[i] = basis.phi(i, 2, x);
                p4[i] = basis.phi(i, 4, x);
            }
            tables.phi.push(p0);
            tables.phi2.push(p2);
            tables.phi4.push(p4);
            tables.nu.push(nu0.value(x));
            tables.nu2.push(nu0.derivative(2, x));
            tables.nu4.push(nu0.derivative(4, x));
        }

        let mut s_xx = 0.0;
        let mut s_xn = 0.0;
        let mut s_nn = 0.0;
        let mut k_nn = 0.0;
        let mut s_xphi = [0.0; MAX_MODES];
        let mut s_nphi = [0.0; MAX_MODES];
        let mut k_nphi = [0.0; MAX_MODES];
        let mut g_phi = [[0.0; MAX_MODES]; MAX_MODES];
        let mut k_phi = [[0.0; MAX_MODES]; MAX_MODES];
        for k in 0..QUAD_NODES {
            let (x, w) = (tables.x[k], tables.w[k]);
            let (nu, nu2) = (tables.nu[k], tables.nu2[k]);
            s_xx += w * x * x;
            s_xn += w * x * nu;
            s_nn += w * nu * nu;
            k_nn += w * nu2 * nu2;
            for i in 0..n {
                s_xphi[i] += w * x * tables.phi[k][i];
                s_nphi[i] += w * nu * tables.phi[k][i];
                k_nphi[i] += w * nu2 * tables.phi2[k][i];
                for j in 0..=i {
                    g_phi[i][j] += w * tables.phi[k][i] * tables.phi[k][j];
                    k_phi[i][j] += w * tables.phi2[k][i] * tables.phi2[k][j];
                }
            }
        }

        for i in 0..n {
            for j in 0..i {
                g_phi[j][i] = g_phi[i][j];
                k_phi[j][i] = k_phi[i][j];
            }
        }

        let mut phi_l = [0.0; MAX_MODES];
        let mut phi2_0 = [0.0; MAX_MODES];
        let mut phi3_l = [0.0; MAX_MODES];
        for i in 0..n {
            phi_l[i] = basis.phi(i, 0, l);
            phi2_0[i] = basis.phi(i, 2, 0.0);
            phi3_l[i] = basis.phi(i, 3, l);
        }

        let (rho_a, ei, m_tip) = (derived.rho_a, derived.ei, bp.payload_mass);
        let mut m_eta = [[0.0; MAX_MODES]; MAX_MODES];
        let mut k_eta = [[0.0; MAX_MODES]; MAX_MODES];
        for i in 0..n {
            for j in 0..=i {
                m_eta[i][j] = rho_a * g_phi[i][j] + m_tip * phi_l[i] * phi_l[j];
                k_eta[i][j] = ei * k_phi[i][j];
                m_eta[j][i] = m_eta[i][j];
                k_eta[j][i] = k_eta[i][j];
            }
        }
        let m_eta_inv = spd_inverse(&m_eta, n).ok_or(DynamicsError::NotPositiveDefinite { theta: f64::NAN })?;
        let k_eta_chol = cholesky(&k_eta, n).ok_or(DynamicsError::NotPositiveDefinite { theta: f64::NAN })?;

        let mut damping = [0.0; MAX_MODES];
        for (i, zeta) in opts.modal_damping.iter().take(n).enumerate() {
            damping[i] = 2.0 * zeta * (k_eta[i][i] * m_eta[i][i]).sqrt();
        }

        let model = Self {
            params: *bp,
            derived,
            basis: basis.clone(),
            nu0,
            freeze_nu_rate: opts.freeze_nu_rate,
            n,
            s_xx,
            s_xn,
            s_nn,
            s_xphi,
            s_nphi,
            phi_l,
            n_l: nu0.value(l),
            phi2_0,
            n2_0: nu0.derivative(2, 0.0),
            phi3_l,
            n3_l: nu0.derivative(3, l),
            k_phi,
            k_nphi,
            k_nn,
            m_eta,
            m_eta_inv,
            k_eta_chol,
            damping,
            tables,
        };
        for theta in [0.0, std::f64::consts::FRAC_PI_2] {
            if model.schur(theta) <= 0.0 {
                return Err(DynamicsError::NotPositiveDefinite { theta });
            }
        }
        Ok(model)
    }

    pub fn params(&self) -> &BeamParams {
        &self.params
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    pub fn basis(&self) -> &ModalBasis {
        &self.basis
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn freeze_nu_rate(&self) -> bool {
        self.freeze_nu_rate
    }

    /// `nu(x; theta)`.
    pub fn nu(&self, x: f64, theta: f64) -> f64 {
        theta.cos() * self.nu0.value(x)
    }

    /// Offset profile at `theta = 0`.
    pub fn nu_reference(&self) -> &NuProfile {
        &self.nu0
    }

    /// `(sin, d sin / d theta)` as seen by the kinetic energy.
    fn rate_factors(&self, theta: f64) -> (f64, f64) {
        if self.freeze_nu_rate {
            (0.0, 0.0)
        } else {
            theta.sin_cos()
        }
    }

    /// `(M_tt, M_te, dM_tt/dtheta, dM_te/dtheta)`; the `eta`–`eta` block is constant.
    fn inertia_row(&self, theta: f64) -> (f64, VecN, f64, VecN) {
        let (s, c) = self.rate_factors(theta);
        let rho_a = self.derived.rho_a;
        let m_tip = self.params.payload_mass;
        let l = self.params.length;
        let a_l = l + s * self.n_l;
        let m_tt = self.params.hub_inertia + rho_a * (self.s_xx + 2.0 * s * self.s_xn + s * s * self.s_nn) + m_tip * a_l * a_l;
        let dm_tt = rho_a * (2.0 * c * self.s_xn + 2.0 * s * c * self.s_nn) + 2.0 * m_tip * a_l * c * self.n_l;
        let mut m_te = [0.0; MAX_MODES];
        let mut dm_te = [0.0; MAX_MODES];
        for i in 0..self.n {
            m_te[i] = rho_a * (self.s_xphi[i] + s * self.s_nphi[i]) + m_tip * a_l * self.phi_l[i];
            dm_te[i] = rho_a * c * self.s_nphi[i] + m_tip * c * self.n_l * self.phi_l[i];
        }
        (m_tt, m_te, dm_tt, dm_te)
    }

    fn schur(&self, theta: f64) -> f64 {
        let (m_tt, b, _, _) = self.inertia_row(theta);
        let mut s = m_tt;
        for i in 0..self.n {
            for j in 0..self.n {
                s -= b[i] * self.m_eta_inv[i][j] * b[j];
            }
        }
        s
    }

    /// Full `(n+1) × (n+1)` mass matrix at `theta`, coordinate order `(theta, eta)`.
    pub fn mass_matrix(&self, theta: f64) -> Vec<Vec<f64>> {
        let n = self.n;
        let (m_tt, b, _, _) = self.inertia_row(theta);
        let mut m = vec![vec![0.0; n + 1]; n + 1];
        m[0][0] = m_tt;
        for i in 0..n {
            m[0][i + 1] = b[i];
            m[i + 1][0] = b[i];
            for j in 0..n {
                m[i + 1][j + 1] = self.m_eta[i][j];
            }
        }
        m
    }

    /// `(dU/dtheta, dU/deta)` from the closed-form modal integrals.
    fn potential_gradient(&self, theta: f64, eta: &[f64]) -> (f64, VecN) {
        let bp = &self.params;
        let (s, c) = theta.sin_cos();
        let g = bp.gravity;
        let ei = self.derived.ei;
        let m_tip = bp.payload_mass;
        let tip = self.tip_deflection_raw(theta, eta);
        let eta_knphi: f64 = (0..self.n).map(|i| eta[i] * self.k_nphi[i]).sum();
        let d_theta = (0.5 * bp.link_mass + m_tip) * g * bp.length * c
            + m_tip * g * (s * self.n_l * c - tip * s)
            + ei * (s * eta_knphi - c * s * self.k_nn);
        let mut d_eta = [0.0; MAX_MODES];
        for i in 0..self.n {
            let k_eta: f64 = (0..self.n).map(|j| self.k_phi[i][j] * eta[j]).sum();
            d_eta[i] = m_tip * g * c * self.phi_l[i] + ei * (k_eta - c * self.k_nphi[i]);
        }
        (d_theta, d_eta)
    }

    fn tip_deflection_raw(&self, theta: f64, eta: &[f64]) -> f64 {
        let z: f64 = (0..self.n).map(|i| self.phi_l[i] * eta[i]).sum();
        z - theta.cos() * self.n_l
    }

    /// Right-hand side `h(q, qdot, tau)` of `M(q) qddot = h`.
    pub fn generalized_force(&self, s: &SimState, tau: f64) -> Vec<f64> {
        let (f_t, f_e) = self.forces(s, tau);
        std::iter::once(f_t).chain(f_e[..self.n].iter().copied()).collect()
    }

    fn forces(&self, s: &SimState, tau: f64) -> (f64, VecN) {
        let (_, _, dm_tt, dm_te) = self.inertia_row(s.theta);
        let (g_t, g_e) = self.potential_gradient(s.theta, s.eta());
        let w2 = s.theta_dot * s.theta_dot;
        let f_t = tau - 0.5 * dm_tt * w2 - g_t;
        let mut f_e = [0.0; MAX_MODES];
        for i in 0..self.n {
            f_e[i] = -dm_te[i] * w2 - g_e[i] - self.damping[i] * s.eta_dot[i];
        }
        (f_t, f_e)
    }

    /// Solves `M q̈ = h` by eliminating the constant `eta` block.
    pub fn accelerations(&self, s: &SimState, tau: f64) -> Result<Accelerations, DynamicsError> {
        if s.n_modes != self.n {
            return Err(DynamicsError::ModeMismatch { got: s.n_modes, want: self.n });
        }
        let (m_tt, b, _, _) = self.inertia_row(s.theta);
        let (f_t, f_e) = self.forces(s, tau);
        let n = self.n;
        let mut y = [0.0; MAX_MODES];
        let mut w = [0.0; MAX_MODES];
        for i in 0..n {
            for j in 0..n {
                y[i] += self.m_eta_inv[i][j] * b[j];
                w[i] += self.m_eta_inv[i][j] * f_e[j];
            }
        }
        let mut schur = m_tt;
        let mut rhs = f_t;
        for i in 0..n {
            schur -= b[i] * y[i];
            rhs -= b[i] * w[i];
        }
        if !(schur > 0.0) {
            return Err(DynamicsError::NotPositiveDefinite { theta: s.theta });
        }
        let theta_ddot = rhs / schur;
        let mut eta_ddot = [0.0; MAX_MODES];
        for i in 0..n {
            eta_ddot[i] = w[i] - y[i] * theta_ddot;
        }
        Ok(Accelerations { theta_ddot, eta_ddot, n_modes: n })
    }

    fn rates(&self, s: &SimState, tau: f64) -> Result<Rates, DynamicsError> {
        let a = self.accelerations(s, tau)?;
        Ok(Rates { theta_dot: s.theta_dot, theta_ddot: a.theta_ddot, eta_dot: s.eta_dot, eta_ddot: a.eta_ddot })
    }

    /// One classical RK4 step under constant torque.
    pub fn step(&self, s: &SimState, tau: f64, dt: f64) -> Result<SimState, DynamicsError> {
        self.step_with_work(s, tau, dt).map(|(s, _)| s)
    }

    /// RK4 step that also integrates the joint power `tau * theta_dot` with
    /// the same stage weights.
    pub fn step_with_work(&self, s: &SimState, tau: f64, dt: f64) -> Result<(SimState, f64), DynamicsError> {
        if !(dt > 0.0 && dt <= 1e-2) {
            return Err(DynamicsError::BadStep { dt });
        }
        let blown = |_| DynamicsError::NonFinite { t: s.t };
        let k1 = self.rates(s, tau).map_err(blown)?;
        let k2 = self.rates(&s.advanced(&k1, 0.5 * dt), tau).map_err(blown)?;
        let k3 = self.rates(&s.advanced(&k2, 0.5 * dt), tau).map_err(blown)?;
        let k4 = self.rates(&s.advanced(&k3, dt), tau).map_err(blown)?;
        let mut out = *s;
        let h6 = dt / 6.0;
        out.t = s.t + dt;
        out.theta += h6 * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot);
        out.theta_dot += h6 * (k1.theta_ddot + 2.0 * k2.theta_ddot + 2.0 * k3.theta_ddot + k4.theta_ddot);
        for i in 0..self.n {
            out.eta[i] += h6 * (k1.eta_dot[i] + 2.0 * k2.eta_dot[i] + 2.0 * k3.eta_dot[i] + k4.eta_dot[i]);
            out.eta_dot[i] += h6 * (k1.eta_ddot[i] + 2.0 * k2.eta_ddot[i] + 2.0 * k3.eta_ddot[i] + k4.eta_ddot[i]);
        }
        let work = tau * h6 * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot);
        if !out.is_finite() {
            return Err(DynamicsError::NonFinite { t: out.t });
        }
        Ok((out, work))
    }

    /// `(omega(L), omega_dot(L))`, tip deflection relative to the rigid line and its rate.
    pub fn tip_state(&self, s: &SimState) -> (f64, f64) {
        let omega = self.tip_deflection_raw(s.theta, s.eta());
        let z_dot: f64 = (0..self.n).map(|i| self.phi_l[i] * s.eta_dot[i]).sum();
        let (sn, _) = self.rate_factors(s.theta);
        (omega, z_dot + sn * self.n_l * s.theta_dot)
    }

    /// Root curvature `omega''(0)`.
    pub fn base_curvature(&self, s: &SimState) -> f64 {
        let z: f64 = (0..self.n).map(|i| self.phi2_0[i] * s.eta[i]).sum();
        z - s.theta.cos() * self.n2_0
    }

    /// `(T, U)` by direct quadrature of the reconstructed field.
    pub fn total_energy(&self, s: &SimState) -> (f64, f64) {
        let bp = &self.params;
        let t = &self.tables;
        let (sin_t, cos_t) = s.theta.sin_cos();
        let (sn, _) = self.rate_factors(s.theta);
        let mut kin = 0.0;
        let mut bend = 0.0;
        for k in 0..t.x.len() {
            let mut z_dot = 0.0;
            let mut z2 = 0.0;
            for i in 0..self.n {
                z_dot += t.phi[k][i] * s.eta_dot[i];
                z2 += t.phi2[k][i] * s.eta[i];
            }
            let omega_dot = z_dot + sn * t.nu[k] * s.theta_dot;
            let y_dot = t.x[k] * s.theta_dot + omega_dot;
            let omega2 = z2 - cos_t * t.nu2[k];
            kin += t.w[k] * y_dot * y_dot;
            bend += t.w[k] * omega2 * omega2;
        }
        let (tip, tip_dot) = self.tip_state(s);
        let y_dot_l = bp.length * s.theta_dot + tip_dot;
        let kinetic = 0.5 * bp.hub_inertia * s.theta_dot.powi(2)
            + 0.5 * self.derived.rho_a * kin
            + 0.5 * bp.payload_mass * y_dot_l * y_dot_l;
        let g = bp.gravity;
        let potential = 0.5 * bp.link_mass * g * bp.length * sin_t
            + bp.payload_mass * g * (bp.length * sin_t + tip * cos_t)
            + 0.5 * self.derived.ei * bend;
        (kinetic, potential)
    }

    /// Residuals of the continuum equations evaluated on the modal
    /// reconstruction: `(hub, ||field||_L2, tip)`.
    pub fn pde_residual(&self, s: &SimState, tau: f64) -> Result<(f64, f64, f64), DynamicsError> {
        let acc = self.accelerations(s, tau)?;
        let bp = &self.params;
        let (rho_a, ei) = (self.derived.rho_a, self.derived.ei);
        let (sin_t, cos_t) = s.theta.sin_cos();
        let th_dd = acc.theta_ddot;
        let (tip, _) = self.tip_state(s);
        let g = bp.gravity;

        let hub = bp.hub_inertia * th_dd - ei * self.base_curvature(s) + 0.5 * bp.link_mass * g * bp.length * cos_t
            - bp.payload_mass * g * tip * sin_t
            - tau;

        // nu_ddot = -(cos th thd^2 + sin th thdd) N(x)
        let nu_acc = -(cos_t * s.theta_dot.powi(2) + sin_t * th_dd);
        let t = &self.tables;
        let mut field_sq = 0.0;
        for k in 0..t.x.len() {
            let mut z_dd = 0.0;
            let mut z4 = 0.0;
            for i in 0..self.n {
                z_dd += t.phi[k][i] * acc.eta_ddot[i];
                z4 += t.phi4[k][i] * s.eta[i];
            }
            let omega_dd = z_dd - nu_acc * t.nu[k];
            let omega4 = z4 - cos_t * t.nu4[k];
            let r = rho_a * t.x[k] * th_dd + rho_a * omega_dd + ei * omega4;
            field_sq += t.w[k] * r * r;
        }

        let z_dd_l: f64 = (0..self.n).map(|i| self.phi_l[i] * acc.eta_ddot[i]).sum();
        let omega_dd_l = z_dd_l - nu_acc * self.n_l;
        let z3_l: f64 = (0..self.n).map(|i| self.phi3_l[i] * s.eta[i]).sum();
        let omega3_l = z3_l - cos_t * self.n3_l;
        let tip_res = bp.payload_mass * bp.length * th_dd + bp.payload_mass * omega_dd_l - ei * omega3_l
            + bp.payload_mass * g * cos_t;
        Ok((hub, field_sq.sqrt(), tip_res))
    }

    /// Static equilibrium at `theta`: the modal coordinates that make
    /// `dU/deta = 0`, at rest, and the holding torque `dU/dtheta` there.
    pub fn settle(&self, theta: f64) -> (SimState, f64) {
        let bp = &self.params;
        let c = theta.cos();
        let ei = self.derived.ei;
        let mut rhs = [0.0; MAX_MODES];
        for i in 0..self.n {
            rhs[i] = ei * c * self.k_nphi[i] - bp.payload_mass * bp.gravity * c * self.phi_l[i];
        }
        // k_eta_chol factors EI * K
        let eta = cholesky_solve(&self.k_eta_chol, self.n, &rhs);
        let mut s = SimState::at_rest(theta, self.n);
        s.eta_mut().copy_from_slice(&eta[..self.n]);
        let (hold, _) = self.potential_gradient(theta, s.eta());
        (s, hold)
    }
}
