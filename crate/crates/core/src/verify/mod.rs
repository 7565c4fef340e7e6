//! Exact oracles and goodness-of-fit statistics.
//!
//! The brute-force oracle enumerates every innovation pattern, attachment
//! choice and innovation value of a short walk; it shares nothing with the
//! simulator or the closed forms it is compared against. The statistics are
//! plain acceptance bands with fixed thresholds, not formal tests.

pub mod suite;

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::eulerian::ExactPmf;
use crate::rational::{self, in_unit_interval, Rational};
use crate::walk_engine::StepLaw;

/// Largest horizon accepted by [`brute_force_walk_pmf`].
pub const BRUTE_FORCE_MAX_N: usize = 7;
/// Largest support size accepted by [`brute_force_walk_pmf`].
pub const BRUTE_FORCE_MAX_SUPPORT: usize = 2;
/// Kolmogorov–Smirnov band constant: `D ≤ 1.63/√M`.
pub const KS_BAND: f64 = 1.63;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("horizon {n} outside the brute-force range 1..={max}")]
    HorizonOutOfRange { n: usize, max: usize },
    #[error("step law {0} has no finite integer support of size at most 2")]
    UnsupportedLaw(String),
    #[error("p = {0} is not in [0, 1]")]
    BadProbability(String),
    #[error("sample value {0} is not on the integer lattice")]
    LatticeMismatch(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("variance must be positive and finite, got {0}")]
    DegenerateVariance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    TvDistance,
    KsStatistic,
    ZScore,
    RelativeError,
    AbsoluteError,
    /// Number of failed exact (rational or integer) identities.
    ExactMismatches,
    RuntimeSeconds,
}

/// Outcome of one acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub criterion: u8,
    pub name: String,
    pub statistic: Statistic,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub sample_size: usize,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl CheckReport {
    /// `pass` is `value ≤ threshold`; NaN never passes.
    pub fn new(name: impl Into<String>, statistic: Statistic, value: f64, threshold: f64) -> Self {
        CheckReport {
            criterion: 0,
            name: name.into(),
            statistic,
            value,
            threshold,
            pass: value <= threshold,
            sample_size: 0,
            seed: None,
            config: serde_json::Value::Null,
            details: serde_json::Value::Null,
        }
    }

    pub fn with_samples(mut self, m: usize) -> Self {
        self.sample_size = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// Exact law of `Š(n)` by exhaustive enumeration of the recursion.
pub fn brute_force_walk_pmf(n: usize, p: &Rational, law: &StepLaw) -> Result<ExactPmf, VerifyError> {
    if n == 0 || n > BRUTE_FORCE_MAX_N {
        return Err(VerifyError::HorizonOutOfRange { n, max: BRUTE_FORCE_MAX_N });
    }
    if !in_unit_interval(p) {
        return Err(VerifyError::BadProbability(rational::render(p)));
    }
    let unsupported = || VerifyError::UnsupportedLaw(law.to_string());
    let support = law.discrete_support().ok_or_else(unsupported)?;
    if support.len() > BRUTE_FORCE_MAX_SUPPORT {
        return Err(unsupported());
    }
    let values: Vec<i64> = support
        .iter()
        .map(|(v, _)| if v.is_integer() { v.to_integer().to_i64() } else { None })
        .collect::<Option<_>>()
        .ok_or_else(unsupported)?;

    // Path multiplicities keyed by (sum, innovations, draws of value 0,
    // product of attachment range sizes).
    let mut counts: HashMap<(i64, usize, usize, u64), u64> = HashMap::new();
    let mut steps = Vec::with_capacity(n);
    for (idx, &value) in values.iter().enumerate() {
        steps.push(value);
        explore(n, &values, &mut steps, 1, usize::from(idx == 0), 1, &mut counts);
        steps.pop();
    }

    let q = Rational::one() - p;
    let masses: Vec<Rational> = support.iter().map(|(_, m)| m.clone()).collect();
    let mut pmf: BTreeMap<i64, Rational> = BTreeMap::new();
    for ((sum, innovations, zeros, ranges), count) in counts {
        let mut weight = Rational::from_integer(BigInt::from(count))
            * num_traits::pow(p.clone(), innovations - 1)
            * num_traits::pow(q.clone(), n - innovations)
            / Rational::from_integer(BigInt::from(ranges));
        weight *= num_traits::pow(masses[0].clone(), zeros);
        if masses.len() > 1 {
            weight *= num_traits::pow(masses[1].clone(), innovations - zeros);
        }
        *pmf.entry(sum).or_insert_with(|| Rational::from_integer(0.into())) += weight;
    }
    ExactPmf::new(pmf).map_err(|_| unsupported())
}

fn explore(
    n: usize,
    values: &[i64],
    steps: &mut Vec<i64>,
    innovations: usize,
    zeros: usize,
    ranges: u64,
    counts: &mut HashMap<(i64, usize, usize, u64), u64>,
) {
    if steps.len() == n {
        let sum = steps.iter().sum();
        *counts.entry((sum, innovations, zeros, ranges)).or_insert(0) += 1;
        return;
    }
    // innovation
    for (idx, &value) in values.iter().enumerate() {
        steps.push(value);
        explore(n, values, steps, innovations + 1, zeros + usize::from(idx == 0), ranges, counts);
        steps.pop();
    }
    // counterbalance one of the earlier steps
    let earlier = steps.len();
    for parent in 0..earlier {
        steps.push(-steps[parent]);
        explore(n, values, steps, innovations, zeros, ranges * earlier as u64, counts);
        steps.pop();
    }
}

/// Empirical law of integer-valued samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Histogram {
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl Histogram {
    pub fn from_integers(samples: impl IntoIterator<Item = i64>) -> Self {
        let mut h = Histogram::default();
        for s in samples {
            *h.counts.entry(s).or_insert(0) += 1;
            h.total += 1;
        }
        h
    }

    /// Rejects samples that are not exact integers.
    pub fn from_values(samples: &[f64]) -> Result<Self, VerifyError> {
        let ints = samples
            .iter()
            .map(|&x| {
                if x.fract() == 0.0 && x.abs() < 9.0e15 {
                    Ok(x as i64)
                } else {
                    Err(VerifyError::LatticeMismatch(x))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Histogram::from_integers(ints))
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Anything that can be viewed as a probability mass function on the integers.
pub trait FloatPmf {
    fn float_masses(&self) -> BTreeMap<i64, f64>;
}

impl FloatPmf for ExactPmf {
    fn float_masses(&self) -> BTreeMap<i64, f64> {
        self.to_f64()
    }
}

impl FloatPmf for Histogram {
    fn float_masses(&self) -> BTreeMap<i64, f64> {
        let total = self.total.max(1) as f64;
        self.counts.iter().map(|(v, c)| (*v, *c as f64 / total)).collect()
    }
}

impl FloatPmf for BTreeMap<i64, f64> {
    fn float_masses(&self) -> BTreeMap<i64, f64> {
        self.clone()
    }
}

/// Total variation distance `½ Σ |a(x) − b(x)|`.
pub fn tv_distance(a: &impl FloatPmf, b: &impl FloatPmf) -> f64 {
    let a = a.float_masses();
    let mut b = b.float_masses();
    let mut total = 0.0;
    for (v, pa) in &a {
        let pb = b.remove(v).unwrap_or(0.0);
        total += (pa - pb).abs();
    }
    total += b.values().map(|pb| pb.abs()).sum::<f64>();
    0.5 * total
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(samples: &[f64]) -> f64 {
    let m = mean(samples);
    samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() as f64 - 1.0)
}

/// One-sample Kolmogorov–Smirnov distance to a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

/// Spreads lattice-valued samples uniformly over their cells,
/// `x + U(−width/2, width/2)`, so that a KS comparison with a continuous
/// limit does not pick up the jumps of the lattice. The added variance is
/// `width²/12`.
pub fn lattice_jitter<R: Rng + ?Sized>(samples: &mut [f64], width: f64, rng: &mut R) {
    for x in samples {
        *x += width * (rng.random::<f64>() - 0.5);
    }
}

/// KS check against `N(mean, variance)` with the band `1.63/√M`.
pub fn ks_normal(samples: &[f64], mean: f64, variance: f64) -> Result<CheckReport, VerifyError> {
    if samples.len() < 100 {
        return Err(VerifyError::TooFewSamples { needed: 100, got: samples.len() });
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(VerifyError::DegenerateVariance(variance));
    }
    let normal = Normal::new(mean, variance.sqrt()).map_err(|_| VerifyError::DegenerateVariance(variance))?;
    let d = ks_statistic(samples, |x| normal.cdf(x));
    let threshold = KS_BAND / (samples.len() as f64).sqrt();
    Ok(CheckReport::new("ks_normal", Statistic::KsStatistic, d, threshold)
        .with_samples(samples.len())
        .with_config(serde_json::json!({ "mean": mean, "variance": variance })))
}

/// z-score `|mean(samples) − target| / sd` against a band (4 by default).
pub fn moment_check(
    samples: &[f64],
    target: f64,
    sd_of_estimator: f64,
    band: f64,
) -> Result<CheckReport, VerifyError> {
    if samples.len() < 2 {
        return Err(VerifyError::TooFewSamples { needed: 2, got: samples.len() });
    }
    let diff = (mean(samples) - target).abs();
    let z = if diff == 0.0 { 0.0 } else { diff / sd_of_estimator };
    Ok(CheckReport::new("moment_check", Statistic::ZScore, z, band)
        .with_samples(samples.len())
        .with_config(serde_json::json!({ "target": target, "sd": sd_of_estimator })))
}

/// Empirical characteristic function with per-component Monte Carlo errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCf {
    pub value: Complex64,
    pub sd_re: f64,
    pub sd_im: f64,
}

/// `(1/M) Σ exp(iθ·x)`; intended for `M ≥ 1000`.
pub fn empirical_cf(samples: &[f64], theta: f64) -> EmpiricalCf {
    let m = samples.len() as f64;
    let (cos, sin): (Vec<f64>, Vec<f64>) =
        samples.iter().map(|&x| ((theta * x).cos(), (theta * x).sin())).unzip();
    let sd = |v: &[f64]| {
        if v.len() < 2 {
            0.0
        } else {
            (sample_variance(v) / m).sqrt()
        }
    };
    EmpiricalCf { value: Complex64::new(mean(&cos), mean(&sin)), sd_re: sd(&cos), sd_im: sd(&sin) }
}
