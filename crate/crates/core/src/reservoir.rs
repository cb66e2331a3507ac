//! Delay-line reservoir with a ring topology of offset `k`.
//!
//! The discrete model updates node `i` from node `i - k` of the previous
//! step, wrapping around to node `i - k + N` two steps back for the first
//! `k` nodes. [`run_continuous`] integrates the underlying delay system on a
//! fine time grid and recovers node states by window averaging; with one
//! sample per node slot it coincides with [`run_discrete`].

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{RcError, Result};
use crate::mask::{generate_mask, Mask, MaskSpec};

pub const DEFAULT_WASHOUT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    Sine,
    Tanh,
    SaturatingGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    #[serde(default)]
    pub phase: f64,
    #[serde(default = "default_saturation")]
    pub saturation: f64,
}

fn default_saturation() -> f64 {
    1.0
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::sine(0.0)
    }
}

impl NonlinearitySpec {
    pub fn sine(phase: f64) -> Self {
        NonlinearitySpec {
            kind: NonlinearityKind::Sine,
            phase,
            saturation: default_saturation(),
        }
    }

    pub fn tanh() -> Self {
        NonlinearitySpec {
            kind: NonlinearityKind::Tanh,
            ..Default::default()
        }
    }

    pub fn saturating_gain(saturation: f64) -> Self {
        NonlinearitySpec {
            kind: NonlinearityKind::SaturatingGain,
            phase: 0.0,
            saturation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phase.is_finite() {
            return Err(RcError::invalid("reservoir.nonlinearity.phase", "must be finite"));
        }
        if self.kind == NonlinearityKind::SaturatingGain && !(self.saturation > 0.0) {
            return Err(RcError::invalid(
                "reservoir.nonlinearity.saturation",
                format!("must be > 0, got {}", self.saturation),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Sine => (x + self.phase).sin(),
            NonlinearityKind::Tanh => x.tanh(),
            NonlinearityKind::SaturatingGain => x / (1.0 + x.abs() / self.saturation),
        }
    }

    /// Closed range that contains every output of [`Self::apply`].
    pub fn output_bound(&self) -> f64 {
        match self.kind {
            NonlinearityKind::Sine | NonlinearityKind::Tanh => 1.0,
            NonlinearityKind::SaturatingGain => self.saturation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub n_nodes: usize,
    pub offset_k: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub state_noise_std: f64,
    #[serde(default = "default_washout")]
    pub washout: usize,
}

fn default_washout() -> usize {
    DEFAULT_WASHOUT
}

impl ReservoirConfig {
    pub fn new(n_nodes: usize, offset_k: usize, alpha: f64, beta: f64) -> Self {
        ReservoirConfig {
            n_nodes,
            offset_k,
            alpha,
            beta,
            nonlinearity: NonlinearitySpec::default(),
            state_noise_std: 0.0,
            washout: DEFAULT_WASHOUT,
        }
    }

    pub fn with_washout(mut self, washout: usize) -> Self {
        self.washout = washout;
        self
    }

    pub fn with_nonlinearity(mut self, nonlinearity: NonlinearitySpec) -> Self {
        self.nonlinearity = nonlinearity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes;
        if n < 2 {
            return Err(RcError::invalid("reservoir.n_nodes", format!("must be >= 2, got {n}")));
        }
        if self.offset_k < 1 || self.offset_k > n - 1 {
            return Err(RcError::invalid(
                "reservoir.offset_k",
                format!("must lie in [1, {}], got {}", n - 1, self.offset_k),
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(RcError::invalid("reservoir.alpha", format!("must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(RcError::invalid("reservoir.beta", format!("must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.state_noise_std >= 0.0 && self.state_noise_std.is_finite()) {
            return Err(RcError::invalid(
                "reservoir.state_noise_std",
                format!("must be finite and >= 0, got {}", self.state_noise_std),
            ));
        }
        self.nonlinearity.validate()
    }
}

/// Node states `x_i(n)` after washout, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    states: Vec<f64>,
    n_nodes: usize,
    input_len: usize,
    config: ReservoirConfig,
}

impl StateMatrix {
    pub fn from_rows(n_nodes: usize, states: Vec<f64>, config: ReservoirConfig) -> Result<Self> {
        if n_nodes == 0 || states.len() % n_nodes != 0 {
            return Err(RcError::mismatch("state buffer length", n_nodes, states.len()));
        }
        let input_len = states.len() / n_nodes;
        Ok(StateMatrix {
            states,
            n_nodes,
            input_len,
            config,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    /// State of node `i` (1-based) at step `n` (0-based, post-washout).
    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.states[n * self.n_nodes + i - 1]
    }

    /// All node states at step `n` (0-based).
    pub fn step(&self, n: usize) -> &[f64] {
        &self.states[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    pub fn steps(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.n_nodes)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.states
    }

    /// Steps `range` as a new matrix sharing the same config.
    pub fn slice(&self, range: std::ops::Range<usize>) -> StateMatrix {
        let n = self.n_nodes;
        StateMatrix {
            states: self.states[range.start * n..range.end * n].to_vec(),
            n_nodes: n,
            input_len: range.len(),
            config: self.config.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,i,x\n");
        for (n, row) in self.steps().enumerate() {
            for (i, x) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", n + 1, i + 1, x);
            }
        }
        out
    }
}

/// Reservoir memory at the start of a run: `x(0)` and `x(-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub current: Vec<f64>,
    pub previous: Vec<f64>,
}

impl InitialState {
    pub fn zeros(n_nodes: usize) -> Self {
        InitialState {
            current: vec![0.0; n_nodes],
            previous: vec![0.0; n_nodes],
        }
    }
}

fn check_input(input: &[f64]) -> Result<()> {
    match input.iter().position(|u| !u.is_finite()) {
        Some(index) => Err(RcError::NonFiniteInput { index }),
        None => Ok(()),
    }
}

fn noise_source(std: f64, seed: u64) -> Option<(ChaCha8Rng, Normal<f64>)> {
    (std > 0.0).then(|| {
        (
            ChaCha8Rng::seed_from_u64(seed),
            Normal::new(0.0, std).expect("std validated"),
        )
    })
}

/// Core recursion over the full input, returning every step including the
/// washout. `x(0)` and `x(-1)` come from `init`.
fn evolve(
    config: &ReservoirConfig,
    mask: &[f64],
    input: &[f64],
    seed: u64,
    init: &InitialState,
) -> Vec<f64> {
    let n = config.n_nodes;
    let k = config.offset_k;
    let (alpha, beta) = (config.alpha, config.beta);
    let f = config.nonlinearity;
    let mut noise = noise_source(config.state_noise_std, seed);

    let mut out = Vec::with_capacity(input.len() * n);
    let mut prev2 = init.previous.clone();
    let mut prev1 = init.current.clone();
    let mut cur = vec![0.0; n];
    for &u in input {
        for j in 0..n {
            // node i = j + 1; i > k reads node i-k at n-1, i <= k reads node i-k+N at n-2
            let fb = if j >= k { prev1[j - k] } else { prev2[j + n - k] };
            let mut arg = alpha * fb + beta * mask[j] * u;
            if let Some((rng, dist)) = noise.as_mut() {
                arg += dist.sample(rng);
            }
            cur[j] = f.apply(arg);
        }
        out.extend_from_slice(&cur);
        std::mem::swap(&mut prev2, &mut prev1);
        std::mem::swap(&mut prev1, &mut cur);
    }
    out
}

fn check_run(config: &ReservoirConfig, mask_len: usize, input: &[f64]) -> Result<()> {
    config.validate()?;
    if mask_len != config.n_nodes {
        return Err(RcError::mismatch("mask length vs n_nodes", config.n_nodes, mask_len));
    }
    if input.len() <= config.washout {
        return Err(RcError::TooShort {
            needed: config.washout + 1,
            have: input.len(),
        });
    }
    check_input(input)
}

pub fn run_discrete(config: &ReservoirConfig, mask: &Mask, input: &[f64], seed: u64) -> Result<StateMatrix> {
    run_discrete_from(config, mask, input, seed, &InitialState::zeros(config.n_nodes))
}

pub fn run_discrete_from(
    config: &ReservoirConfig,
    mask: &Mask,
    input: &[f64],
    seed: u64,
    init: &InitialState,
) -> Result<StateMatrix> {
    check_run(config, mask.len(), input)?;
    for v in [&init.current, &init.previous] {
        if v.len() != config.n_nodes {
            return Err(RcError::mismatch("initial state length", config.n_nodes, v.len()));
        }
    }
    let all = evolve(config, mask.coefficients(), input, seed, init);
    let states = all[config.washout * config.n_nodes..].to_vec();
    StateMatrix::from_rows(config.n_nodes, states, config.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmulatorConfig {
    pub oversampling: usize,
    /// Input hold period `T'` in arbitrary time units.
    #[serde(default = "default_t_prime")]
    pub t_prime: f64,
    pub base: ReservoirConfig,
}

fn default_t_prime() -> f64 {
    1.0
}

impl EmulatorConfig {
    pub fn new(base: ReservoirConfig, oversampling: usize) -> Self {
        EmulatorConfig {
            oversampling,
            t_prime: default_t_prime(),
            base,
        }
    }

    /// Node slot duration `θ = T'/N`.
    pub fn theta(&self) -> f64 {
        self.t_prime / self.base.n_nodes as f64
    }

    /// Loop delay `T = T' + kθ`.
    pub fn delay(&self) -> f64 {
        self.t_prime + self.base.offset_k as f64 * self.theta()
    }

    pub fn validate(&self) -> Result<()> {
        if self.oversampling < 1 {
            return Err(RcError::invalid("emulator.oversampling", "must be >= 1"));
        }
        if !(self.t_prime > 0.0 && self.t_prime.is_finite()) {
            return Err(RcError::invalid("emulator.t_prime", "must be finite and > 0"));
        }
        self.base.validate()
    }
}

/// Integrates `x(t) = f(α x(t - T) + β m(t) u(t))` on a grid of step
/// `θ / oversampling` with zero-order-hold input and zero history, then
/// averages the samples of each node window `[nT' + (i-1)θ, nT' + iθ)`.
pub fn run_continuous(emu: &EmulatorConfig, mask_spec: &MaskSpec, input: &[f64], seed: u64) -> Result<StateMatrix> {
    emu.validate()?;
    let mask = generate_mask(mask_spec)?;
    let config = &emu.base;
    check_run(config, mask.len(), input)?;

    let n = config.n_nodes;
    let os = emu.oversampling;
    let per_period = n * os;
    let delay_steps = (n + config.offset_k) * os;
    let mask_samples = mask.sample_period(os, emu.t_prime);
    let f = config.nonlinearity;
    let (alpha, beta) = (config.alpha, config.beta);
    let mut noise = noise_source(config.state_noise_std, seed);

    let total = input.len() * per_period;
    let mut x = Vec::with_capacity(total);
    for s in 0..total {
        let u = input[s / per_period];
        let fb = if s >= delay_steps { x[s - delay_steps] } else { 0.0 };
        let mut arg = alpha * fb + beta * mask_samples[s % per_period] * u;
        if let Some((rng, dist)) = noise.as_mut() {
            arg += dist.sample(rng);
        }
        x.push(f.apply(arg));
    }

    let kept = input.len() - config.washout;
    let mut states = Vec::with_capacity(kept * n);
    let scale = 1.0 / os as f64;
    for window in x[config.washout * per_period..].chunks_exact(os) {
        states.push(window.iter().sum::<f64>() * scale);
    }
    StateMatrix::from_rows(n, states, config.clone())
}

/// Runs the discrete model from two initial memories under the same input
/// (washout ignored, noise disabled) and returns `δ(n) = max_i |x_i - x'_i|`
/// for `n = 1..L`.
pub fn fading_memory_probe(
    config: &ReservoirConfig,
    mask: &Mask,
    input: &[f64],
    first: &InitialState,
    second: &InitialState,
) -> Result<Vec<f64>> {
    let mut probe_config = config.clone();
    probe_config.washout = 0;
    probe_config.state_noise_std = 0.0;
    let a = run_discrete_from(&probe_config, mask, input, 0, first)?;
    let b = run_discrete_from(&probe_config, mask, input, 0, second)?;
    Ok(a
        .steps()
        .zip(b.steps())
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .collect())
}
