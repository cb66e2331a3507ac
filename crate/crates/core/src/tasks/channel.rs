//! Nonlinear wireless channel: a 10-tap multipath filter (two symbols ahead,
//! seven behind) followed by a cubic receiver distortion and white Gaussian
//! noise at a prescribed SNR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Split, TaskDataset, TaskMeta};
use crate::error::{RcError, Result};

pub const SYMBOLS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

/// Filter taps applied to `d(n+2), d(n+1), …, d(n-7)`.
pub const CHANNEL_TAPS: [f64; 10] = [0.08, -0.12, 1.0, 0.18, -0.1, 0.091, -0.05, 0.04, 0.03, 0.01];

const AHEAD: usize = 2;
const BEHIND: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Signal-to-noise ratio in dB; infinity means noiseless.
    #[serde(default = "noiseless")]
    pub snr_db: f64,
    pub n_symbols: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_train")]
    pub train: usize,
    #[serde(default = "default_validation")]
    pub validation: usize,
}

fn noiseless() -> f64 {
    f64::INFINITY
}

fn default_train() -> usize {
    3000
}

fn default_validation() -> usize {
    3000
}

impl ChannelParams {
    pub fn new(snr_db: f64, n_symbols: usize, seed: u64) -> Self {
        ChannelParams {
            snr_db,
            n_symbols,
            seed,
            train: default_train(),
            validation: default_validation(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let snr = self.snr_db;
        if !(snr == f64::INFINITY || (12.0..=32.0).contains(&snr)) {
            return Err(RcError::invalid(
                "task.snr_db",
                format!("must lie in [12, 32] dB or be infinite, got {snr}"),
            ));
        }
        if self.n_symbols <= AHEAD + BEHIND {
            return Err(RcError::invalid(
                "task.n_symbols",
                format!("must exceed the filter support of {}, got {}", AHEAD + BEHIND, self.n_symbols),
            ));
        }
        Ok(())
    }
}

/// `q(n)` for every `n` with full filter support.
pub fn channel_filter(symbols: &[f64]) -> Vec<f64> {
    symbols
        .windows(AHEAD + BEHIND + 1)
        .map(|w| {
            // w[0] = d(n-7) … w[9] = d(n+2)
            CHANNEL_TAPS.iter().zip(w.iter().rev()).map(|(t, d)| t * d).sum()
        })
        .collect()
}

pub fn receiver_distortion(q: &[f64]) -> Vec<f64> {
    q.iter().map(|&q| q + 0.036 * q * q + 0.011 * q * q * q).collect()
}

/// Noiseless receiver output aligned with `symbols[7..len-2]`.
pub fn channel_receiver(symbols: &[f64]) -> Vec<f64> {
    receiver_distortion(&channel_filter(symbols))
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Builds the dataset from an explicit symbol stream. Boundary symbols
/// without full filter support are dropped from both input and target.
pub fn channel_dataset_from_symbols(symbols: &[f64], snr_db: f64, noise_seed: u64) -> Result<TaskDataset> {
    if symbols.len() <= AHEAD + BEHIND {
        return Err(RcError::TooShort {
            needed: AHEAD + BEHIND + 1,
            have: symbols.len(),
        });
    }
    let mut input = channel_receiver(symbols);
    if snr_db.is_finite() {
        let len = input.len() as f64;
        let mean = input.iter().sum::<f64>() / len;
        let var = input.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / len;
        let noise_std = (var / 10f64.powf(snr_db / 10.0)).sqrt();
        if noise_std > 0.0 {
            let dist = Normal::new(0.0, noise_std).map_err(|e| RcError::invalid("task.snr_db", e.to_string()))?;
            let mut rng = noise_rng(noise_seed);
            for u in input.iter_mut() {
                *u += dist.sample(&mut rng);
            }
        }
    }
    let target = symbols[BEHIND..symbols.len() - AHEAD].to_vec();
    let split = Split::leading(input.len(), default_train(), default_validation());
    let meta = TaskMeta::new("channel", noise_seed).with("snr_db", snr_db);
    TaskDataset::new(input, target, split, meta)
}

pub fn channel_dataset(params: &ChannelParams) -> Result<TaskDataset> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let symbols: Vec<f64> = (0..params.n_symbols).map(|_| SYMBOLS[rng.random_range(0..4)]).collect();
    let mut ds = channel_dataset_from_symbols(&symbols, params.snr_db, params.seed)?;
    ds.split = Split::leading(ds.len(), params.train, params.validation);
    ds.meta = ds.meta.with("n_symbols", params.n_symbols);
    Ok(ds)
}
