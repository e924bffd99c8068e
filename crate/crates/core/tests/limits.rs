use flexlink_core::beam::{solve_eigenfrequencies, BeamParams};

/// Roots of `1 + cos x cosh x = 0` by bisection, independent of the solver.
fn clamped_free(n: usize) -> Vec<f64> {
    let f = |x: f64| 1.0 + x.cos() * x.cosh();
    (0..n)
        .map(|k| {
            // each root sits within (k pi + pi/2 ± 0.4)
            let c = (k as f64 + 0.5) * std::f64::consts::PI;
            let (mut a, mut b) = (c - 0.4 + if k == 0 { 0.3 } else { 0.0 }, c + 0.4);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if f(a).signum() == f(m).signum() {
                    a = m
                } else {
                    b = m
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

#[test]
fn vanishing_payload_gives_clamped_free_roots() {
    let bp = BeamParams::table_i().with_payload(1e-9);
    let beta = solve_eigenfrequencies(&bp, 3).unwrap();
    let oracle = clamped_free(3);
    for ((b, o), textbook) in beta.iter().zip(&oracle).zip([1.8751, 4.6941, 7.8548]) {
        let bl = b * bp.length;
        assert!((bl - o).abs() < 1e-6, "{bl} vs {o}");
        assert!((bl - textbook).abs() < 5e-5, "{bl} vs {textbook}");
    }
}

#[test]
fn heavy_payload_pins_the_tip() {
    // tan x = tanh x; the near-rigid first mode goes to zero
    let bp = BeamParams::table_i().with_payload(1e9);
    let beta = solve_eigenfrequencies(&bp, 4).unwrap();
    let flexible: Vec<f64> = beta.iter().map(|b| b * bp.length).filter(|&x| x > 1.0).collect();
    for (bl, want) in flexible.iter().zip([3.9266, 7.0686]) {
        assert!((bl - want).abs() < 5e-4, "{bl} vs {want}");
    }
}
