#![allow(dead_code)]

use delay_rc::{ReservoirConfig, StateMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(lo..=hi)).collect()
}

/// Wraps a time-major `len x n` buffer as a state matrix.
pub fn states_from(n: usize, rows: Vec<f64>) -> StateMatrix {
    StateMatrix::from_rows(n, rows, ReservoirConfig::new(n.max(2), 1, 0.0, 0.0).with_washout(0)).unwrap()
}

/// Gaussian elimination with partial pivoting on a dense square system.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Ridge readout with an unpenalized bias from the explicit normal
/// equations over the augmented design `[X 1]`. Returns `(weights, bias)`.
pub fn ridge_oracle(rows: &[Vec<f64>], d: &[f64], ridge: f64) -> (Vec<f64>, f64) {
    let n = rows[0].len();
    let m = n + 1;
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (x, &t) in rows.iter().zip(d) {
        let z: Vec<f64> = x.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..m {
            for j in 0..m {
                a[i][j] += z[i] * z[j];
            }
            b[i] += z[i] * t;
        }
    }
    for (i, row) in a.iter_mut().enumerate().take(n) {
        row[i] += ridge;
    }
    let sol = solve_dense(a, b);
    (sol[..n].to_vec(), sol[n])
}
