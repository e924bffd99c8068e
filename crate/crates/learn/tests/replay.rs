use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flexlink_learn::{ReplayBuffer, Transition};

fn t(k: usize) -> Transition {
    Transition { obs: [k as f64; 6], action: 0.0, reward: k as f64, next_obs: [0.0; 6], terminal: false }
}

#[test]
fn capacity_is_respected() {
    let mut b = ReplayBuffer::new(100);
    for k in 0..1234 {
        b.push(t(k));
        assert!(b.len() <= 100);
    }
    assert_eq!(b.len(), 100);
    // the newest hundred survive
    let mut r: Vec<usize> = b.items().iter().map(|x| x.reward as usize).collect();
    r.sort();
    assert_eq!(r, (1134..1234).collect::<Vec<_>>());
}

#[test]
fn sampling_is_uniform() {
    let n = 50;
    let mut b = ReplayBuffer::new(n);
    for k in 0..n {
        b.push(t(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = vec![0usize; n];
    let draws = 20_000;
    let batch = 8;
    for _ in 0..draws {
        for i in b.sample_indices(batch, &mut rng) {
            counts[i] += 1;
        }
    }
    let expected = (draws * batch) as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 49 degrees of freedom, upper 0.1% point
    assert!(chi2 < 85.35, "chi-square {chi2}");
}

#[test]
#[should_panic]
fn batch_larger_than_buffer_panics() {
    let mut b = ReplayBuffer::new(10);
    b.push(t(0));
    b.sample_indices(2, &mut ChaCha8Rng::seed_from_u64(0));
}
