use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flexlink_core::beam::BeamParams;
use flexlink_learn::{Env, EpisodeSpec, Outcome, SacConfig};

fn env(cfg: SacConfig) -> Env {
    Env::new(cfg, BeamParams::table_i())
}

#[test]
fn resets_stay_in_operating_range() {
    let e = env(SacConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let s = e.sample_spec(&mut rng);
        assert!((0.0..=FRAC_PI_2).contains(&s.theta0));
        assert!((0.0..=FRAC_PI_2).contains(&s.theta_t));
    }
}

#[test]
fn stiffness_perturbation_is_uniform_on_ten_percent() {
    let e = env(SacConfig::default());
    let nominal = BeamParams::table_i().ei();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10_000;
    let mut r: Vec<f64> = (0..n).map(|_| e.sample_spec(&mut rng).params.ei() / nominal).collect();
    r.sort_by(f64::total_cmp);
    assert!(r[0] >= 0.9 && r[n - 1] <= 1.1);
    assert!(r[0] < 0.9005 && r[n - 1] > 1.0995, "span {} .. {}", r[0], r[n - 1]);
    // Kolmogorov–Smirnov distance to U(0.9, 1.1); 1% critical value 1.63/sqrt(n)
    let d = r
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = (x - 0.9) / 0.2;
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.63 / (n as f64).sqrt(), "KS distance {d}");
}

#[test]
fn every_perturbed_field_moves_independently() {
    let e = env(SacConfig::default());
    let base = BeamParams::table_i();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = e.sample_spec(&mut rng).params;
    let ratios = [
        s.length / base.length,
        s.link_mass / base.link_mass,
        s.payload_mass / base.payload_mass,
        s.hub_inertia / base.hub_inertia,
        s.rho_a() / base.rho_a(),
        s.ei() / base.ei(),
    ];
    for (i, a) in ratios.iter().enumerate() {
        assert!((0.9..=1.1).contains(a));
        for b in &ratios[i + 1..] {
            assert_ne!(a, b);
        }
    }
    assert_eq!(s.area, base.area);
    assert_eq!(s.area_moment, base.area_moment);
}

#[test]
fn reward_terms_sum_to_reward_and_actions_are_bounded() {
    let mut e = env(SacConfig { max_time_steps_per_episode: 60, ..Default::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        e.reset(&mut rng).unwrap();
        let max = e.config().theta_dot_max();
        let mut steps = 0;
        loop {
            let (_, r, info) = e.step(rng.random_range(-3.0..3.0));
            steps += 1;
            let t = info.terms;
            assert_eq!(r, t.error + t.rate + t.tip + t.reach + t.failure);
            assert!(info.theta_dot_d.abs() <= max * (1.0 + 1e-15));
            if info.outcome.is_done() {
                break;
            }
        }
        assert!(steps <= 60);
    }
}

#[test]
fn leaving_the_range_fails_the_episode() {
    let mut e = env(SacConfig::default());
    e.reset_to(EpisodeSpec { theta0: 0.5f64.to_radians(), theta_t: 0.5, params: BeamParams::table_i() }).unwrap();
    let mut last = None;
    for _ in 0..40 {
        let (_, r, info) = e.step(-1.0);
        if info.outcome.is_done() {
            last = Some((r, info));
            break;
        }
    }
    let (r, info) = last.expect("episode ended");
    assert_eq!(info.outcome, Outcome::Failed);
    assert!(info.outcome.is_terminal());
    assert_eq!(info.terms.failure, -200.0);
    assert!(r < -199.0);
}

#[test]
fn resting_on_target_is_a_reach() {
    let mut e = env(SacConfig::default());
    let th = 40f64.to_radians();
    e.reset_to(EpisodeSpec { theta0: th, theta_t: th, params: BeamParams::table_i() }).unwrap();
    let (_, r, info) = e.step(0.0);
    assert_eq!(info.outcome, Outcome::Reached);
    assert_eq!(info.terms.reach, 200.0);
    assert!(r > 199.0);
}

#[test]
fn timeout_is_not_terminal() {
    let mut e = env(SacConfig { max_time_steps_per_episode: 3, ..Default::default() });
    e.reset_to(EpisodeSpec { theta0: 0.2, theta_t: 1.2, params: BeamParams::table_i() }).unwrap();
    let outcomes: Vec<Outcome> = (0..3).map(|_| e.step(0.0).2.outcome).collect();
    assert_eq!(outcomes, vec![Outcome::Running, Outcome::Running, Outcome::TimedOut]);
    assert!(!Outcome::TimedOut.is_terminal());
}

#[test]
fn command_integrates_into_set_point() {
    let mut e = env(SacConfig::default());
    e.reset_to(EpisodeSpec { theta0: 0.3, theta_t: 1.0, params: BeamParams::table_i() }).unwrap();
    let (_, _, info) = e.step(0.5);
    let want = 0.3 + 0.5 * 5f64.to_radians() * 0.1;
    assert!((info.theta_d - want).abs() < 1e-12);
}

#[test]
fn filtered_command_lags_the_action() {
    let mut e = env(SacConfig { command_filter: 0.05, ..Default::default() });
    e.reset_to(EpisodeSpec { theta0: 0.3, theta_t: 1.0, params: BeamParams::table_i() }).unwrap();
    let (_, _, info) = e.step(1.0);
    let max = 5f64.to_radians();
    assert!(info.theta_dot_d < max && info.theta_dot_d > 0.8 * max);
    assert!(info.theta_d < 0.3 + max * 0.1);
}
