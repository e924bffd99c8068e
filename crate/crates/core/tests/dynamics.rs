use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

use flexlink_core::beam::{BeamParams, ModalBasis};
use flexlink_core::closed_loop::{equilibrium, simulate, Controller, LoopConfig};
use flexlink_core::control::PdeGains;
use flexlink_core::trajectory::Schedule;
use flexlink_core::{DynamicsModel, ModelOptions, SimState};

fn model(bp: &BeamParams, n: usize) -> DynamicsModel {
    DynamicsModel::new(bp, &ModelOptions { n_modes: n, ..Default::default() }).unwrap()
}

fn energy(m: &DynamicsModel, s: &SimState) -> f64 {
    let (t, u) = m.total_energy(s);
    t + u
}

/// Independent rigid pendulum: I θ̈ + (m/2 + M) g L cos θ = τ(t).
fn rigid_oracle(bp: &BeamParams, theta0: f64, tau: impl Fn(f64) -> f64, dt: f64, steps: usize) -> Vec<f64> {
    let rho_a = bp.density * bp.area;
    let inertia = bp.hub_inertia + rho_a * bp.length.powi(3) / 3.0 + bp.payload_mass * bp.length.powi(2);
    let load = (0.5 * bp.link_mass + bp.payload_mass) * bp.gravity * bp.length;
    let f = |t: f64, th: f64, w: f64| (w, (tau(t) - load * th.cos()) / inertia);
    let (mut th, mut w, mut out) = (theta0, 0.0, vec![theta0]);
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = f(t, th, w);
        let k2 = f(t + dt / 2.0, th + dt / 2.0 * k1.0, w + dt / 2.0 * k1.1);
        let k3 = f(t + dt / 2.0, th + dt / 2.0 * k2.0, w + dt / 2.0 * k2.1);
        let k4 = f(t + dt, th + dt * k3.0, w + dt * k3.1);
        th += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        w += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        out.push(th);
    }
    out
}

#[test]
fn stiff_link_follows_rigid_pendulum() {
    let mut bp = BeamParams::table_i();
    bp.youngs_modulus *= 1e6;
    let m = model(&bp, 2);
    let hold = (0.5 * bp.link_mass + bp.payload_mass) * bp.gravity * bp.length;
    let tau = |t: f64| hold * (1.0 + 0.1 * (2.0 * t).sin());
    // the stiffest retained mode needs dt well below 1/omega
    let dt = 5e-6;
    let steps = 1_000_000;
    let oracle = rigid_oracle(&bp, 0.0, tau, dt, steps);
    let mut s = SimState::at_rest(0.0, 2);
    let mut worst: f64 = 0.0;
    for k in 0..steps {
        s = m.step(&s, tau(k as f64 * dt), dt).unwrap();
        worst = worst.max((s.theta - oracle[k + 1]).abs());
    }
    assert!(worst < 1e-3, "peak angle error {worst:e}");
}

#[test]
fn stiff_link_hub_balance() {
    let mut bp = BeamParams::table_i();
    bp.youngs_modulus *= 1e6;
    let m = model(&bp, 3);
    let hold = (0.5 * bp.link_mass + bp.payload_mass) * bp.gravity * bp.length;
    let (s, tau) = m.settle(0.4);
    let (r_hub, _, _) = m.pde_residual(&s, tau).unwrap();
    // static: only the truncation of the root moment remains
    assert!((tau - hold * 0.4f64.cos()).abs() < 1e-6 * hold);
    assert!(r_hub.abs() < 0.02 * hold, "r_hub {r_hub}");
}

#[test]
fn free_response_conserves_energy() {
    let bp = BeamParams::table_i();
    let m = model(&bp, 3);
    let mut s = SimState::at_rest(FRAC_PI_6, 3);
    let e0 = energy(&m, &s);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        s = m.step(&s, 0.0, 1e-4).unwrap();
        worst = worst.max((energy(&m, &s) - e0).abs());
    }
    assert!(worst / e0.abs() < 1e-5, "relative drift {:e}", worst / e0.abs());
}

#[test]
fn work_energy_balance_under_random_torque() {
    use rand::{Rng, SeedableRng};
    let bp = BeamParams::table_i();
    let m = model(&bp, 3);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let (mut s, hold) = m.settle(rng.random_range(0.0..1.5));
        let amps: Vec<f64> = (0..4).map(|_| rng.random_range(-600.0..600.0)).collect();
        let tau = |t: f64| hold + amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * 1.3 * t).sin()).sum::<f64>();
        let e0 = energy(&m, &s);
        let mut work = 0.0;
        for k in 0..20_000 {
            let (next, w) = m.step_with_work(&s, tau(k as f64 * 1e-4), 1e-4).unwrap();
            s = next;
            work += w;
        }
        let de = energy(&m, &s) - e0;
        assert!((de - work).abs() < 1e-4 * work.abs().max(de.abs()), "dE {de} vs W {work}");
    }
}

#[test]
fn rk4_is_fourth_order() {
    let bp = BeamParams::table_i();
    let m = model(&bp, 3);
    let (s0, hold) = m.settle(0.3);
    let run = |dt: f64| {
        let mut s = s0;
        let n = (1.0 / dt).round() as usize;
        for _ in 0..n {
            s = m.step(&s, hold + 400.0, dt).unwrap();
        }
        s
    };
    let diff = |a: &SimState, b: &SimState| {
        let mut d = (a.theta - b.theta).abs().max((a.theta_dot - b.theta_dot).abs());
        for i in 0..a.n_modes() {
            d = d.max((a.eta()[i] - b.eta()[i]).abs()).max((a.eta_dot()[i] - b.eta_dot()[i]).abs());
        }
        d
    };
    let (a, b, c) = (run(4e-4), run(2e-4), run(1e-4));
    let ratio = diff(&a, &b) / diff(&b, &c);
    assert!((12.0..20.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn gravity_force_integrates_to_energy_difference() {
    // -h_θ at rest is ∂U/∂θ from closed-form modal integrals; U itself comes
    // from quadrature of the reconstructed field.
    let bp = BeamParams::table_i();
    let m = model(&bp, 3);
    let eta = [0.004, -0.001, 0.0002];
    let at = |th: f64| SimState::at_rest(th, 3).with_modes(&eta, &[0.0; 3]);
    let n = 400;
    let h = FRAC_PI_2 / n as f64;
    let mut integral = 0.0;
    for k in 0..=n {
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        integral += w * -m.generalized_force(&at(k as f64 * h), 0.0)[0];
    }
    integral *= h / 3.0;
    let du = m.total_energy(&at(FRAC_PI_2)).1 - m.total_energy(&at(0.0)).1;
    assert!((integral - du).abs() < 1e-8 * du.abs(), "{integral} vs {du}");
    // rigid part dominates: (m/2 + M) g L
    let rigid = (0.5 * bp.link_mass + bp.payload_mass) * bp.gravity * bp.length;
    assert!((du - rigid).abs() < 0.05 * rigid);
}

#[test]
fn static_sag_moment_balance() {
    let bp = BeamParams::table_i();
    let m = model(&bp, 3);
    let ei = bp.youngs_modulus * bp.area_moment;
    for theta in [0.0, 0.5, 1.0] {
        let (s, hold) = m.settle(theta);
        let c = f64::cos(theta);
        // the tip load alone bends the link
        let root = -bp.payload_mass * bp.gravity * bp.length * c;
        assert!((ei * m.base_curvature(&s) - root).abs() < 0.05 * root.abs(), "theta {theta}");
        let load = (0.5 * bp.link_mass + bp.payload_mass) * bp.gravity * bp.length * c;
        assert!((hold - load).abs() < 0.01 * load);
        // cantilever tip deflection M g L³ / 3EI
        let tip = -bp.payload_mass * bp.gravity * bp.length.powi(3) / (3.0 * ei) * c;
        assert!((m.tip_state(&s).0 - tip).abs() < 1e-3 * tip.abs());
    }
}

#[test]
fn equilibrium_residuals_shrink_with_modes() {
    let bp = BeamParams::table_i();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for n in 1..=5 {
        let m = model(&bp, n);
        let (s, hold) = m.settle(0.2);
        let acc = m.accelerations(&s, hold).unwrap();
        assert!(acc.theta_ddot.abs() < 1e-9 && acc.eta_ddot().iter().all(|a| a.abs() < 1e-9));
        let (r_hub, r_field, _) = m.pde_residual(&s, hold).unwrap();
        assert!(r_hub.abs() < prev.0 && r_field < prev.1, "n = {n}");
        prev = (r_hub.abs(), r_field);
    }
}

#[test]
fn field_residual_decreases_with_modes_on_transient() {
    let bp = BeamParams::table_i();
    let mut prev = f64::INFINITY;
    for n in 1..=5 {
        let m = model(&bp, n);
        let (mut s, hold) = m.settle(0.0);
        for _ in 0..5000 {
            s = m.step(&s, hold + 500.0, 1e-4).unwrap();
        }
        let (_, r_field, _) = m.pde_residual(&s, hold + 500.0).unwrap();
        assert!(r_field < prev, "n = {n}: {r_field} >= {prev}");
        prev = r_field;
    }
}

#[test]
fn tip_trajectory_converges_in_modes() {
    let bp = BeamParams::table_i();
    let sched = Schedule::canonical();
    let run = |n: usize| {
        let m = model(&bp, n);
        let mut c = Controller::pde(PdeGains::BASELINE, bp);
        let s0 = equilibrium(&m, &mut c, 0.0);
        simulate(&m, s0, c, &sched, sched.end_time(), LoopConfig::default()).unwrap().samples
    };
    let (a, b) = (run(3), run(5));
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x.tip - y.tip).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y.tip * y.tip).sum();
    let rel = (num / den).sqrt();
    assert!(rel < 0.02, "relative RMS difference {rel}");
}

#[test]
fn assembly_rejects_foreign_state() {
    let bp = BeamParams::table_i();
    let basis = ModalBasis::solve(&bp, 2).unwrap();
    let m = flexlink_core::assemble_dynamics(&bp, &basis, &ModelOptions::default()).unwrap();
    assert_eq!(m.n_modes(), 2);
    assert!(m.accelerations(&SimState::at_rest(0.0, 3), 0.0).is_err());
}

#[test]
fn frozen_offset_rate_still_conserves_energy() {
    let bp = BeamParams::table_i();
    let m = DynamicsModel::new(&bp, &ModelOptions { n_modes: 3, freeze_nu_rate: true, ..Default::default() }).unwrap();
    let mut s = SimState::at_rest(FRAC_PI_6, 3);
    let e0 = energy(&m, &s);
    for _ in 0..20_000 {
        s = m.step(&s, 0.0, 1e-4).unwrap();
    }
    assert!((energy(&m, &s) - e0).abs() < 1e-5 * e0.abs());
}
