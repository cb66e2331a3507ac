use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Split, TaskDataset, TaskMeta};
use crate::error::{RcError, Result};

/// A NARMA10 sequence exceeding this magnitude is discarded and regenerated.
pub const NARMA_DIVERGENCE_LIMIT: f64 = 10.0;

const ORDER: usize = 10;

/// `d(n) = 0.3 d(n-1) + 0.05 d(n-1) Σ_{i=1..10} d(n-i) + 1.5 u(n-10) u(n-1) + 0.1`
/// from zero history (terms before the start of the sequence are zero).
pub fn narma10_target(u: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; u.len()];
    let at = |v: &[f64], n: usize, lag: usize| if n >= lag { v[n - lag] } else { 0.0 };
    for n in 0..u.len() {
        let prev = at(&d, n, 1);
        let window: f64 = (1..=ORDER).map(|i| at(&d, n, i)).sum();
        d[n] = 0.3 * prev + 0.05 * prev * window + 1.5 * at(u, n, ORDER) * at(u, n, 1) + 0.1;
    }
    d
}

pub fn narma10_dataset(n: usize, seed: u64) -> Result<TaskDataset> {
    if n <= ORDER {
        return Err(RcError::invalid("task.length", format!("NARMA10 needs more than {ORDER} samples, got {n}")));
    }
    let mut attempt_seed = seed;
    let mut regenerations = 0u32;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        let input: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=0.5)).collect();
        let target = narma10_target(&input);
        if target.iter().all(|d| d.is_finite() && d.abs() <= NARMA_DIVERGENCE_LIMIT) {
            let split = Split::leading(n, 3000, 1000);
            let meta = TaskMeta::new("narma10", seed)
                .with("length", n)
                .with("regenerations", regenerations)
                .with("effective_seed", attempt_seed);
            return TaskDataset::new(input, target, split, meta);
        }
        attempt_seed = attempt_seed.wrapping_add(1);
        regenerations += 1;
    }
}

/// Inputs uniform on [-1, 1]; the capacity suite supplies the targets.
pub fn memory_input(n: usize, seed: u64) -> TaskDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    TaskDataset {
        input,
        target: Vec::new(),
        split: Split::leading(n, 3000, 1000),
        meta: TaskMeta::new("memory", seed).with("length", n),
    }
}
