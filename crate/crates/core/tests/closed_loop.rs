use flexlink_core::beam::BeamParams;
use flexlink_core::closed_loop::{equilibrium, simulate, Controller, LoopConfig};
use flexlink_core::control::{PdeGains, PidGains};
use flexlink_core::trajectory::{Hold, Schedule};
use flexlink_core::{DynamicsModel, ModelOptions};

fn model(n: usize) -> DynamicsModel {
    DynamicsModel::new(&BeamParams::table_i(), &ModelOptions { n_modes: n, ..Default::default() }).unwrap()
}

/// Exact feedback reduces the hub error to I_m ë + Kd ė + Kp e = 0; compare
/// the simulated error with the closed-form solution of that ODE.
#[test]
fn exact_feedback_gives_linear_error_dynamics() {
    let bp = BeamParams::table_i();
    let m = model(5);
    let g = PdeGains::BASELINE;
    let mut c = Controller::pde(g, bp);
    let s0 = equilibrium(&m, &mut c, 0.0);
    let target = 30f64.to_radians();
    let tr = simulate(&m, s0, c, &Hold(target), 6.0, LoopConfig::default()).unwrap();
    let im = bp.hub_inertia;
    let disc = (g.kd * g.kd - 4.0 * im * g.kp).sqrt();
    let (r1, r2) = ((-g.kd + disc) / (2.0 * im), (-g.kd - disc) / (2.0 * im));
    let e0 = target - s0.theta;
    // e(0) = e0, ė(0) = 0
    let (c1, c2) = (e0 * r2 / (r2 - r1), -e0 * r1 / (r2 - r1));
    let mut worst: f64 = 0.0;
    for x in &tr.samples {
        let e = x.theta_d - x.theta;
        let want = c1 * (r1 * x.t).exp() + c2 * (r2 * x.t).exp();
        worst = worst.max((e - want).abs());
    }
    assert!(worst < 2e-3 * e0, "max deviation {worst:e}");
}

#[test]
fn equilibrium_start_stays_put() {
    let bp = BeamParams::table_i();
    let m = model(3);
    for mut c in [Controller::pde(PdeGains::BASELINE, bp), Controller::pid(PidGains::BASELINE)] {
        let s0 = equilibrium(&m, &mut c, 0.7);
        let tr = simulate(&m, s0, c, &Hold(0.7), 2.0, LoopConfig::default()).unwrap();
        let drift = tr.samples.iter().map(|x| (x.theta - s0.theta).abs() + x.tip_dot.abs()).fold(0.0, f64::max);
        assert!(drift < 1e-9, "drift {drift:e}");
    }
}

#[test]
fn pde_tracks_better_than_pid_on_canonical_schedule() {
    // the root-curvature feedback is a slowly converging modal series, so
    // the comparison needs more than the minimum mode count
    let bp = BeamParams::table_i();
    let m = model(5);
    let sched = Schedule::canonical();
    let rmse = |mut c: Controller| {
        let s0 = equilibrium(&m, &mut c, 0.0);
        let tr = simulate(&m, s0, c, &sched, sched.end_time(), LoopConfig::default()).unwrap();
        assert_eq!(tr.saturations, 0);
        (tr.samples.iter().map(|x| (x.theta_d - x.theta).powi(2)).sum::<f64>() / tr.samples.len() as f64).sqrt()
    };
    let pde = rmse(Controller::pde(PdeGains::BASELINE, bp));
    let pid = rmse(Controller::pid(PidGains::BASELINE));
    assert!(pde < pid, "pde {pde} pid {pid}");
}

#[test]
fn saturation_is_counted() {
    let bp = BeamParams::table_i();
    let m = model(3);
    let mut c = Controller::pde(PdeGains::BASELINE, bp);
    let s0 = equilibrium(&m, &mut c, 0.0);
    let cfg = LoopConfig { torque_limit: 2000.0, ..Default::default() };
    let tr = simulate(&m, s0, c, &Hold(1.0), 0.5, cfg).unwrap();
    assert!(tr.saturations > 0);
    assert!(tr.samples.iter().all(|x| x.torque.abs() <= 2000.0));
}

#[test]
fn empty_schedule_runs_nothing() {
    let bp = BeamParams::table_i();
    let m = model(3);
    let sched = Schedule::new(0.0, &[]).unwrap();
    let tr = simulate(&m, m.settle(0.0).0, Controller::pde(PdeGains::BASELINE, bp), &sched, sched.end_time(), LoopConfig::default()).unwrap();
    assert!(tr.samples.is_empty());
}
