//! Input masks for a time-multiplexed reservoir.
//!
//! A mask assigns one coefficient `m_i` to each virtual node `i = 1..N`.
//! Besides the usual random baselines, two harmonic families are provided:
//! a single sine `m_i = sin(2π i F1 / N)` and a sum of two sines
//! `m_i = sin(2π i F1 / N) + sin(2π i F2 / N)`. Harmonic masks also have a
//! smooth continuous-time form of period `T'` used by the emulator.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RcError, Result};

/// Coefficients closer than this are reported as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskFamily {
    RandomUniform,
    RandomBinary,
    SingleSine,
    TwoSine,
}

impl MaskFamily {
    pub fn is_harmonic(self) -> bool {
        matches!(self, MaskFamily::SingleSine | MaskFamily::TwoSine)
    }

    pub fn name(self) -> &'static str {
        match self {
            MaskFamily::RandomUniform => "random_uniform",
            MaskFamily::RandomBinary => "random_binary",
            MaskFamily::SingleSine => "single_sine",
            MaskFamily::TwoSine => "two_sine",
        }
    }
}

impl std::str::FromStr for MaskFamily {
    type Err = RcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_uniform" => Ok(MaskFamily::RandomUniform),
            "random_binary" => Ok(MaskFamily::RandomBinary),
            "single_sine" => Ok(MaskFamily::SingleSine),
            "two_sine" => Ok(MaskFamily::TwoSine),
            other => Err(RcError::invalid(
                "mask.family",
                format!(
                    "unknown family `{other}` (expected random_uniform, random_binary, single_sine or two_sine)"
                ),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSpec {
    pub family: MaskFamily,
    pub n_nodes: usize,
    #[serde(default = "default_f1")]
    pub f1: usize,
    #[serde(default = "default_f2")]
    pub f2: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_f1() -> usize {
    1
}

fn default_f2() -> usize {
    2
}

impl MaskSpec {
    pub fn single_sine(n_nodes: usize, f1: usize) -> Self {
        MaskSpec {
            family: MaskFamily::SingleSine,
            n_nodes,
            f1,
            f2: default_f2(),
            seed: 0,
        }
    }

    pub fn two_sine(n_nodes: usize, f1: usize, f2: usize) -> Self {
        MaskSpec {
            family: MaskFamily::TwoSine,
            n_nodes,
            f1,
            f2,
            seed: 0,
        }
    }

    pub fn random_uniform(n_nodes: usize, seed: u64) -> Self {
        MaskSpec {
            family: MaskFamily::RandomUniform,
            n_nodes,
            f1: default_f1(),
            f2: default_f2(),
            seed,
        }
    }

    pub fn random_binary(n_nodes: usize, seed: u64) -> Self {
        MaskSpec {
            family: MaskFamily::RandomBinary,
            ..MaskSpec::random_uniform(n_nodes, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes;
        if n < 2 {
            return Err(RcError::invalid("mask.n_nodes", format!("must be >= 2, got {n}")));
        }
        if self.family.is_harmonic() && !(1..=n).contains(&self.f1) {
            return Err(RcError::invalid(
                "mask.f1",
                format!("must lie in [1, {n}], got {}", self.f1),
            ));
        }
        if self.family == MaskFamily::TwoSine {
            if !(1..=n).contains(&self.f2) {
                return Err(RcError::invalid(
                    "mask.f2",
                    format!("must lie in [1, {n}], got {}", self.f2),
                ));
            }
            if self.f1 == self.f2 {
                return Err(RcError::invalid(
                    "mask.f2",
                    format!("two_sine requires f1 != f2 (both are {})", self.f1),
                ));
            }
        }
        Ok(())
    }

    /// Harmonic value at a phase expressed as a fraction of the mask period.
    fn harmonic_at(&self, cycles: f64) -> f64 {
        let s1 = (2.0 * PI * cycles * self.f1 as f64).sin();
        match self.family {
            MaskFamily::TwoSine => s1 + (2.0 * PI * cycles * self.f2 as f64).sin(),
            _ => s1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    coefficients: Vec<f64>,
    spec: MaskSpec,
}

impl Mask {
    /// Wraps externally supplied coefficients as a step-function mask.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(RcError::invalid(
                "mask.coefficients",
                format!("need at least 2 coefficients, got {}", coefficients.len()),
            ));
        }
        if let Some(index) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(RcError::NonFiniteInput { index });
        }
        let spec = MaskSpec::random_uniform(coefficients.len(), 0);
        Ok(Mask { coefficients, spec })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn spec(&self) -> &MaskSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `m_i` with the 1-based node index.
    pub fn m(&self, i: usize) -> f64 {
        self.coefficients[i - 1]
    }

    /// Continuous-time value `m(t)` for a hold period `t_prime`.
    ///
    /// Harmonic masks evaluate their sines; step masks hold `m_{j+1}` on
    /// the slot `[jθ, (j+1)θ)` with `θ = T'/N`.
    pub fn value_at(&self, t: f64, t_prime: f64) -> f64 {
        let cycles = (t / t_prime).rem_euclid(1.0);
        if self.spec.family.is_harmonic() {
            return self.spec.harmonic_at(cycles);
        }
        let n = self.coefficients.len();
        let slot = ((cycles * n as f64).floor() as usize).min(n - 1);
        self.coefficients[slot]
    }

    /// One mask period sampled on a grid of `oversampling` points per node
    /// slot. Step masks are indexed with integer arithmetic so that slot
    /// boundaries are exact.
    pub fn sample_period(&self, oversampling: usize, t_prime: f64) -> Vec<f64> {
        let n = self.coefficients.len();
        let per_period = n * oversampling;
        if self.spec.family.is_harmonic() {
            (0..per_period)
                .map(|j| self.spec.harmonic_at(j as f64 / per_period as f64))
                .collect()
        } else {
            let _ = t_prime;
            (0..per_period)
                .map(|j| self.coefficients[j / oversampling])
                .collect()
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,m_i\n");
        for (j, c) in self.coefficients.iter().enumerate() {
            let _ = writeln!(out, "{},{}", j + 1, c);
        }
        out
    }
}

pub fn generate_mask(spec: &MaskSpec) -> Result<Mask> {
    spec.validate()?;
    let n = spec.n_nodes;
    let coefficients = match spec.family {
        MaskFamily::SingleSine | MaskFamily::TwoSine => (1..=n)
            .map(|i| {
                let (num, den) = ((i % n) as f64, n as f64);
                let s1 = (2.0 * PI * num * spec.f1 as f64 / den).sin();
                if spec.family == MaskFamily::TwoSine {
                    s1 + (2.0 * PI * num * spec.f2 as f64 / den).sin()
                } else {
                    s1
                }
            })
            .collect(),
        MaskFamily::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
        }
        MaskFamily::RandomBinary => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect()
        }
    };
    Ok(Mask {
        coefficients,
        spec: spec.clone(),
    })
}

/// `m(t)` for any family. Random families regenerate their coefficients from
/// the seed, so prefer [`Mask::value_at`] in loops.
pub fn continuous_mask_value(spec: &MaskSpec, t: f64, t_prime: f64) -> Result<f64> {
    if !(t_prime > 0.0) {
        return Err(RcError::invalid("t_prime", "must be > 0"));
    }
    if spec.family.is_harmonic() {
        spec.validate()?;
        return Ok(spec.harmonic_at((t / t_prime).rem_euclid(1.0)));
    }
    Ok(generate_mask(spec)?.value_at(t, t_prime))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    /// 1-based index pairs `(i, j)`, `i < j`, with `|m_i - m_j| < 1e-12`.
    pub duplicates: Vec<(usize, usize)>,
    pub gcd_f1: Option<usize>,
    pub gcd_f2: Option<usize>,
    pub gcd_sum: Option<usize>,
    pub gcd_diff: Option<usize>,
}

impl DegeneracyReport {
    pub fn has_duplicates(&self) -> bool {
        !self.duplicates.is_empty()
    }

    /// True when every reported gcd equals 1.
    pub fn coprime(&self) -> bool {
        [self.gcd_f1, self.gcd_f2, self.gcd_sum, self.gcd_diff]
            .iter()
            .flatten()
            .all(|&g| g == 1)
    }
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn mask_degeneracy_report(mask: &Mask) -> DegeneracyReport {
    let c = &mask.coefficients;
    let mut duplicates = Vec::new();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            if (c[i] - c[j]).abs() < DUPLICATE_TOLERANCE {
                duplicates.push((i + 1, j + 1));
            }
        }
    }
    let spec = &mask.spec;
    let n = spec.n_nodes;
    let (mut report_f1, mut report_f2, mut sum, mut diff) = (None, None, None, None);
    if spec.family.is_harmonic() {
        report_f1 = Some(gcd(spec.f1, n));
    }
    if spec.family == MaskFamily::TwoSine {
        report_f2 = Some(gcd(spec.f2, n));
        sum = Some(gcd((spec.f1 + spec.f2) % n, n));
        diff = Some(gcd(spec.f1.abs_diff(spec.f2), n));
    }
    DegeneracyReport {
        duplicates,
        gcd_f1: report_f1,
        gcd_f2: report_f2,
        gcd_sum: sum,
        gcd_diff: diff,
    }
}
