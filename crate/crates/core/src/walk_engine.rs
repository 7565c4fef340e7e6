//! Coupled simulation of the counterbalanced walk `Š` and Simon's reinforced
//! walk `Ŝ`.
//!
//! Both walks share the innovation bits `ε`, the uniform picks `v` and the
//! innovation values `X`:
//!
//! ```text
//! Š step j:  −X̌_{v(j)}  if ε_j = 0,   X_{i(j)} if ε_j = 1
//! Ŝ step j:   X̂_{v(j)}  if ε_j = 0,   X_{i(j)} if ε_j = 1
//! ```
//!
//! Cutting the innovation edges of the recursive tree spanned by `v` yields
//! Simon's genealogical forest: one increasing tree per innovation, holding
//! every occurrence of that innovation. A step carries `+X_j` at even depth
//! and `−X_j` at odd depth of its tree, which gives
//! `Š(n) = Σ_j Δ(T_j(n)) X_j`.
//!
//! Randomness is consumed in one fixed order per step: `ε` first (never for
//! step 1), then `v` when `ε = 0`, or `X` when `ε = 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Pareto};
use rayon::prelude::*;
use thiserror::Error;

use crate::rational::{self, parse_rational, Rational};
use crate::recursive_tree::Tree;

/// Default size cap for the per-shape census.
pub const DEFAULT_SHAPE_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("innovation probability {0} is not in [0, 1]")]
    BadProbability(f64),
    #[error("invalid step law: {0}")]
    BadLaw(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    /// `±1` with probability 1/2 each.
    Rademacher,
    Dirac(Rational),
    /// Uniform on `[−1, 1]`.
    UniformSymmetric,
    Gaussian { mean: Rational, variance: Rational },
    /// Random sign times a Pareto variable with `P(|X| > x) = x^(−α)`, `x ≥ 1`.
    ParetoSymmetric { alpha: Rational },
}

#[derive(Debug, Clone)]
enum Sampler {
    Rademacher,
    Constant(f64),
    Uniform,
    Normal(Normal<f64>),
    Pareto(Pareto<f64>),
}

/// The step law `μ` with its exact low moments where they exist.
#[derive(Debug, Clone)]
pub struct StepLaw {
    kind: StepKind,
    m1: Option<Rational>,
    m2: Option<Rational>,
    discrete_support: Option<Vec<(Rational, Rational)>>,
    sampler: Sampler,
}

impl PartialEq for StepLaw {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl StepLaw {
    pub fn rademacher() -> Self {
        StepLaw {
            kind: StepKind::Rademacher,
            m1: Some(Rational::zero()),
            m2: Some(Rational::one()),
            discrete_support: Some(vec![
                (rational::int(-1), rational::ratio(1, 2)),
                (rational::int(1), rational::ratio(1, 2)),
            ]),
            sampler: Sampler::Rademacher,
        }
    }

    pub fn dirac(c: Rational) -> Self {
        StepLaw {
            m1: Some(c.clone()),
            m2: Some(&c * &c),
            discrete_support: Some(vec![(c.clone(), Rational::one())]),
            sampler: Sampler::Constant(rational::to_f64(&c)),
            kind: StepKind::Dirac(c),
        }
    }

    pub fn uniform_symmetric() -> Self {
        StepLaw {
            kind: StepKind::UniformSymmetric,
            m1: Some(Rational::zero()),
            m2: Some(rational::ratio(1, 3)),
            discrete_support: None,
            sampler: Sampler::Uniform,
        }
    }

    pub fn gaussian(mean: Rational, variance: Rational) -> Result<Self, WalkError> {
        if variance.is_negative() {
            return Err(WalkError::BadLaw(format!(
                "Gaussian variance {} is negative",
                rational::render(&variance)
            )));
        }
        let normal = Normal::new(rational::to_f64(&mean), rational::to_f64(&variance).sqrt())
            .map_err(|e| WalkError::BadLaw(e.to_string()))?;
        Ok(StepLaw {
            m1: Some(mean.clone()),
            m2: Some(&variance + &mean * &mean),
            discrete_support: None,
            sampler: Sampler::Normal(normal),
            kind: StepKind::Gaussian { mean, variance },
        })
    }

    pub fn pareto_symmetric(alpha: Rational) -> Result<Self, WalkError> {
        if !alpha.is_positive() {
            return Err(WalkError::BadLaw(format!(
                "Pareto exponent {} must be positive",
                rational::render(&alpha)
            )));
        }
        let one = Rational::one();
        let two = rational::int(2);
        let m1 = (alpha > one).then(Rational::zero);
        let m2 = (alpha > two).then(|| &alpha / (&alpha - &two));
        let pareto = Pareto::new(1.0, rational::to_f64(&alpha))
            .map_err(|e| WalkError::BadLaw(e.to_string()))?;
        Ok(StepLaw {
            kind: StepKind::ParetoSymmetric { alpha },
            m1,
            m2,
            discrete_support: None,
            sampler: Sampler::Pareto(pareto),
        })
    }

    pub fn kind(&self) -> &StepKind {
        &self.kind
    }

    pub fn m1(&self) -> Option<&Rational> {
        self.m1.as_ref()
    }

    pub fn m2(&self) -> Option<&Rational> {
        self.m2.as_ref()
    }

    /// `(value, mass)` pairs for laws with finite support.
    pub fn discrete_support(&self) -> Option<&[(Rational, Rational)]> {
        self.discrete_support.as_deref()
    }

    /// True when every sample is an integer, so sums stay exact in `f64`.
    pub fn is_integer_valued(&self) -> bool {
        self.discrete_support
            .as_ref()
            .is_some_and(|s| s.iter().all(|(v, _)| v.is_integer()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.sampler {
            Sampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Sampler::Constant(c) => *c,
            Sampler::Uniform => rng.random_range(-1.0..=1.0),
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Pareto(d) => {
                let magnitude = d.sample(rng);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

fn render_param(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        rational::render(x)
    }
}

impl fmt::Display for StepLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            StepKind::Rademacher => write!(f, "rademacher"),
            StepKind::Dirac(c) => write!(f, "dirac:{}", render_param(c)),
            StepKind::UniformSymmetric => write!(f, "uniform"),
            StepKind::Gaussian { mean, variance } => {
                write!(f, "gauss:{},{}", render_param(mean), render_param(variance))
            }
            StepKind::ParetoSymmetric { alpha } => write!(f, "pareto:{}", render_param(alpha)),
        }
    }
}

impl FromStr for StepLaw {
    type Err = WalkError;

    /// `rademacher | dirac:C | uniform | gauss:MEAN,VAR | pareto:ALPHA`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| WalkError::BadLaw(format!("`{s}`: {msg}"));
        let num = |t: &str| parse_rational(t).map_err(|e| bad(&e.to_string()));
        let (name, args) = match s.trim().split_once(':') {
            Some((name, args)) => (name, Some(args)),
            None => (s.trim(), None),
        };
        match (name, args) {
            ("rademacher", None) => Ok(StepLaw::rademacher()),
            ("uniform", None) => Ok(StepLaw::uniform_symmetric()),
            ("dirac", Some(c)) => Ok(StepLaw::dirac(num(c)?)),
            ("gauss", Some(args)) => {
                let (mean, var) = args
                    .split_once(',')
                    .ok_or_else(|| bad("expected gauss:MEAN,VAR"))?;
                StepLaw::gaussian(num(mean)?, num(var)?)
            }
            ("pareto", Some(alpha)) => StepLaw::pareto_symmetric(num(alpha)?),
            _ => Err(bad(
                "expected one of rademacher | dirac:C | uniform | gauss:MEAN,VAR | pareto:ALPHA",
            )),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Position of a step in Simon's genealogical forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestVertex {
    /// Innovation index (0-based) owning this step.
    pub tree: u32,
    /// Odd depth inside the tree.
    pub odd: bool,
    /// Occurrence rank inside the tree (0 for the root).
    pub rank: u32,
}

/// One realization of the coupled walks up to the horizon. Step indices are
/// 0-based throughout.
#[derive(Debug, Clone)]
pub struct WalkRun {
    pub n: usize,
    pub p: f64,
    pub eps: Vec<bool>,
    /// Attachment pick for counterbalancing steps, `None` for innovations.
    pub v: Vec<Option<u32>>,
    /// Innovation values in order of appearance.
    pub x: Vec<f64>,
    /// Innovation count after each step.
    pub i_of_n: Vec<u32>,
    pub x_check: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub s_check: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub forest: Vec<ForestVertex>,
    integer_valued: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkSummary {
    pub n: usize,
    pub i_n: usize,
    pub s_check: f64,
    pub s_hat: f64,
    pub nu1: usize,
}

impl WalkRun {
    pub fn innovations(&self) -> usize {
        self.x.len()
    }

    pub fn final_check(&self) -> f64 {
        *self.s_check.last().expect("n >= 1")
    }

    pub fn final_hat(&self) -> f64 {
        *self.s_hat.last().expect("n >= 1")
    }

    pub fn is_integer_valued(&self) -> bool {
        self.integer_valued
    }

    /// `N_j(n)`: size of each genealogical tree.
    pub fn occurrences(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.x.len()];
        for vertex in &self.forest {
            counts[vertex.tree as usize] += 1;
        }
        counts
    }

    /// `Δ(T_j(n))` for each genealogical tree.
    pub fn tree_deltas(&self) -> Vec<i64> {
        let mut deltas = vec![0i64; self.x.len()];
        for vertex in &self.forest {
            deltas[vertex.tree as usize] += if vertex.odd { -1 } else { 1 };
        }
        deltas
    }

    pub fn summary(&self) -> WalkSummary {
        WalkSummary {
            n: self.n,
            i_n: self.innovations(),
            s_check: self.final_check(),
            s_hat: self.final_hat(),
            nu1: self.occurrences().iter().filter(|&&c| c == 1).count(),
        }
    }
}

/// Runs both walks for `n` steps from one random stream.
pub fn simulate<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    law: &StepLaw,
    rng: &mut R,
) -> Result<WalkRun, WalkError> {
    if n == 0 {
        return Err(WalkError::ZeroHorizon);
    }
    let coin = Bernoulli::new(p).map_err(|_| WalkError::BadProbability(p))?;

    let mut eps = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut x = Vec::with_capacity((p * n as f64) as usize + 1);
    let mut i_of_n = Vec::with_capacity(n);
    let mut x_check = Vec::<f64>::with_capacity(n);
    let mut x_hat = Vec::with_capacity(n);
    let mut s_check = Vec::with_capacity(n);
    let mut s_hat = Vec::with_capacity(n);
    let mut forest: Vec<ForestVertex> = Vec::with_capacity(n);
    let mut tree_sizes: Vec<u32> = Vec::with_capacity(x.capacity());
    let mut sum_check = CompensatedSum::default();
    let mut sum_hat = CompensatedSum::default();

    for j in 0..n {
        let innovation = j == 0 || coin.sample(rng);
        let (check, hat, vertex, pick) = if innovation {
            let value = law.sample(rng);
            let tree = x.len() as u32;
            x.push(value);
            tree_sizes.push(1);
            (value, value, ForestVertex { tree, odd: false, rank: 0 }, None)
        } else {
            let parent = rng.random_range(0..j);
            let pv = forest[parent];
            let size = &mut tree_sizes[pv.tree as usize];
            let rank = *size;
            *size += 1;
            (
                -x_check[parent],
                x_hat[parent],
                ForestVertex { tree: pv.tree, odd: !pv.odd, rank },
                Some(parent as u32),
            )
        };
        eps.push(innovation);
        v.push(pick);
        i_of_n.push(x.len() as u32);
        x_check.push(check);
        x_hat.push(hat);
        forest.push(vertex);
        sum_check.add(check);
        sum_hat.add(hat);
        s_check.push(sum_check.value());
        s_hat.push(sum_hat.value());
    }

    Ok(WalkRun {
        n,
        p,
        eps,
        v,
        x,
        i_of_n,
        x_check,
        x_hat,
        s_check,
        s_hat,
        forest,
        integer_valued: law.is_integer_valued(),
    })
}

/// Tree-size and tree-shape counts of the genealogical forest.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestCensus {
    /// `N_j(n)` per innovation.
    pub occurrences: Vec<u32>,
    /// `ν_k(n)`: number of trees of size `k`.
    pub nu: BTreeMap<usize, usize>,
    /// `ν_τ(n)` for every shape of size at most the census cap.
    pub nu_shape: BTreeMap<Tree, usize>,
    pub delta_per_tree: Vec<i64>,
    pub shape_cap: usize,
}

impl ForestCensus {
    pub fn nu_k(&self, k: usize) -> usize {
        self.nu.get(&k).copied().unwrap_or(0)
    }

    pub fn nu_shape(&self, tau: &Tree) -> usize {
        self.nu_shape.get(tau).copied().unwrap_or(0)
    }
}

pub fn forest_census(run: &WalkRun, shape_cap: usize) -> ForestCensus {
    let occurrences = run.occurrences();
    let delta_per_tree = run.tree_deltas();

    let mut nu = BTreeMap::new();
    for &size in &occurrences {
        *nu.entry(size as usize).or_insert(0) += 1;
    }

    // parent sequences (1-based local labels) of the small trees
    let mut shapes: Vec<Option<Vec<u32>>> = occurrences
        .iter()
        .map(|&s| ((s as usize) <= shape_cap).then(|| Vec::with_capacity(s as usize - 1)))
        .collect();
    for (j, vertex) in run.forest.iter().enumerate() {
        if let (Some(seq), Some(parent)) = (&mut shapes[vertex.tree as usize], run.v[j]) {
            seq.push(run.forest[parent as usize].rank + 1);
        }
    }
    let mut nu_shape = BTreeMap::new();
    for seq in shapes.into_iter().flatten() {
        *nu_shape.entry(Tree::from_parents_unchecked(seq)).or_insert(0) += 1;
    }

    ForestCensus { occurrences, nu, nu_shape, delta_per_tree, shape_cap }
}

/// `k ↦ Š_k(n) = Σ_j Δ(T_j(n)) X_j 1{N_j(n) = k}` over the sizes present.
pub fn decompose(run: &WalkRun) -> BTreeMap<usize, f64> {
    let occurrences = run.occurrences();
    let deltas = run.tree_deltas();
    let mut parts: BTreeMap<usize, CompensatedSum> = BTreeMap::new();
    for ((&size, &delta), &value) in occurrences.iter().zip(&deltas).zip(&run.x) {
        parts.entry(size as usize).or_default().add(delta as f64 * value);
    }
    parts.into_iter().map(|(k, s)| (k, s.value())).collect()
}

/// `|Š(n) − Σ_j Δ(T_j(n)) X_j|`.
pub fn representation_residual(run: &WalkRun) -> f64 {
    let deltas = run.tree_deltas();
    let rebuilt: CompensatedSum = deltas
        .iter()
        .zip(&run.x)
        .map(|(&d, &value)| d as f64 * value)
        .collect();
    (run.final_check() - rebuilt.value()).abs()
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replica `index` of a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    mix64(master ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn replica_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

/// Runs `f` once per replica on its own derived stream, in parallel, and
/// returns the results in replica order.
pub fn replicate<T, F>(master: u64, reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(master, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::recursive_tree::parity_profile;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn law_grammar_round_trips() {
        for spec in ["rademacher", "dirac:1", "uniform", "gauss:0,1", "gauss:1/2,3", "pareto:3/2"] {
            let law: StepLaw = spec.parse().unwrap();
            assert_eq!(law.to_string(), spec);
        }
        assert_eq!("pareto:1.5".parse::<StepLaw>().unwrap().to_string(), "pareto:3/2");
        for bad in ["", "dirac", "gauss:1", "pareto:0", "pareto:-1", "gauss:0,-1", "cauchy"] {
            assert!(bad.parse::<StepLaw>().is_err(), "{bad}");
        }
    }

    #[test]
    fn law_moments() {
        assert_eq!(StepLaw::dirac(int(3)).m2(), Some(&int(9)));
        assert_eq!(StepLaw::uniform_symmetric().m2(), Some(&ratio(1, 3)));
        let g = StepLaw::gaussian(int(2), int(5)).unwrap();
        assert_eq!((g.m1(), g.m2()), (Some(&int(2)), Some(&int(9))));
        let heavy = StepLaw::pareto_symmetric(ratio(3, 2)).unwrap();
        assert_eq!((heavy.m1(), heavy.m2()), (Some(&int(0)), None));
        let very_heavy = StepLaw::pareto_symmetric(ratio(1, 2)).unwrap();
        assert_eq!((very_heavy.m1(), very_heavy.m2()), (None, None));
        assert_eq!(StepLaw::pareto_symmetric(int(4)).unwrap().m2(), Some(&int(2)));
        assert!(StepLaw::rademacher().is_integer_valued());
        assert!(!StepLaw::dirac(ratio(1, 2)).is_integer_valued());
        assert!(!StepLaw::uniform_symmetric().is_integer_valued());
    }

    #[test]
    fn pareto_samples_have_the_right_tail() {
        let law = StepLaw::pareto_symmetric(ratio(3, 2)).unwrap();
        let mut r = rng(5);
        let m = 200_000;
        let samples: Vec<f64> = (0..m).map(|_| law.sample(&mut r)).collect();
        assert!(samples.iter().all(|x| x.abs() >= 1.0));
        let beyond = samples.iter().filter(|x| x.abs() > 4.0).count() as f64 / m as f64;
        // P(|X| > 4) = 4^(-3/2) = 1/8
        assert!((beyond - 0.125).abs() < 4.0 * (0.125 * 0.875 / m as f64).sqrt());
        let positive = samples.iter().filter(|&&x| x > 0.0).count() as f64 / m as f64;
        assert!((positive - 0.5).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_input() {
        let law = StepLaw::rademacher();
        assert_eq!(simulate(0, 0.5, &law, &mut rng(0)).unwrap_err(), WalkError::ZeroHorizon);
        assert!(matches!(simulate(5, 1.5, &law, &mut rng(0)), Err(WalkError::BadProbability(_))));
        assert!(matches!(simulate(5, f64::NAN, &law, &mut rng(0)), Err(WalkError::BadProbability(_))));
    }

    #[test]
    fn p_one_is_a_plain_random_walk() {
        let law = StepLaw::gaussian(int(0), int(1)).unwrap();
        let run = simulate(500, 1.0, &law, &mut rng(9)).unwrap();
        assert_eq!(run.x, run.x_check);
        assert_eq!(run.x_check, run.x_hat);
        assert!(run.eps.iter().all(|&e| e));
        let parts = decompose(&run);
        assert_eq!(parts.keys().copied().collect::<Vec<_>>(), vec![1]);
        assert!((parts[&1] - run.final_check()).abs() < 1e-9);
    }

    #[test]
    fn p_zero_dirac_is_parity_difference_of_the_tree() {
        let law = StepLaw::dirac(int(1));
        let run = simulate(400, 0.0, &law, &mut rng(2)).unwrap();
        assert_eq!(run.innovations(), 1);
        let parents: Vec<u32> = run.v[1..].iter().map(|p| p.unwrap() + 1).collect();
        let tree = Tree::from_parents(parents).unwrap();
        let mut prefix = Vec::new();
        for j in 0..run.n {
            if j > 0 {
                prefix.push(tree.parents()[j - 1]);
            }
            let sub = Tree::from_parents(prefix.clone()).unwrap();
            assert_eq!(run.s_check[j], parity_profile(&sub).delta as f64);
        }
    }

    #[test]
    fn first_step_is_an_innovation() {
        let run = simulate(1, 0.0, &StepLaw::dirac(int(1)), &mut rng(1)).unwrap();
        assert_eq!(run.eps, vec![true]);
        assert_eq!(run.s_check, vec![1.0]);
        assert_eq!(run.i_of_n, vec![1]);
    }

    #[test]
    fn coupling_and_sign_rule() {
        let law = StepLaw::uniform_symmetric();
        for (seed, p) in [(1, 0.3), (2, 0.7), (3, 0.05)] {
            let run = simulate(2000, p, &law, &mut rng(seed)).unwrap();
            for j in 0..run.n {
                assert_eq!(run.x_check[j].abs(), run.x_hat[j].abs());
                let vertex = run.forest[j];
                let sign = if vertex.odd { -1.0 } else { 1.0 };
                assert_eq!(run.x_check[j], sign * run.x_hat[j]);
                assert_eq!(run.x_hat[j], run.x[vertex.tree as usize]);
            }
            let i_n = run.eps.iter().filter(|&&e| e).count();
            assert_eq!(i_n, run.innovations());
            assert_eq!(*run.i_of_n.last().unwrap() as usize, i_n);
        }
    }

    #[test]
    fn census_example_counts() {
        let run = simulate(5000, 0.4, &StepLaw::rademacher(), &mut rng(4)).unwrap();
        let census = forest_census(&run, DEFAULT_SHAPE_CAP);
        let weighted: usize = census.nu.iter().map(|(k, c)| k * c).sum();
        assert_eq!(weighted, run.n);
        assert_eq!(census.nu.values().sum::<usize>(), run.innovations());
        assert_eq!(census.occurrences.iter().map(|&c| c as usize).sum::<usize>(), run.n);
        for (tau, count) in &census.nu_shape {
            assert!(tau.size() <= DEFAULT_SHAPE_CAP);
            assert!(*count <= census.nu_k(tau.size()));
        }
        for k in 1..=DEFAULT_SHAPE_CAP {
            let by_shape: usize =
                census.nu_shape.iter().filter(|(t, _)| t.size() == k).map(|(_, c)| c).sum();
            assert_eq!(by_shape, census.nu_k(k));
        }
    }

    #[test]
    fn census_shapes_carry_the_tree_deltas() {
        let run = simulate(3000, 0.5, &StepLaw::dirac(int(1)), &mut rng(8)).unwrap();
        let census = forest_census(&run, 4);
        let small_delta: i64 = census
            .occurrences
            .iter()
            .zip(&census.delta_per_tree)
            .filter(|(&s, _)| s <= 4)
            .map(|(_, d)| d)
            .sum();
        let from_shapes: i64 = census
            .nu_shape
            .iter()
            .map(|(t, &c)| t.parity_profile().delta * c as i64)
            .sum();
        assert_eq!(small_delta, from_shapes);
    }

    #[test]
    fn size_two_trees_contribute_nothing() {
        let run = simulate(10_000, 0.5, &StepLaw::gaussian(int(1), int(1)).unwrap(), &mut rng(6))
            .unwrap();
        let parts = decompose(&run);
        assert_eq!(parts.get(&2).copied().unwrap_or(0.0), 0.0);
        let total: CompensatedSum = parts.values().copied().collect();
        assert!((total.value() - run.final_check()).abs() <= 1e-9 * (1.0 + run.final_check().abs()));
    }

    #[test]
    fn integer_laws_reconstruct_exactly() {
        for law in [StepLaw::dirac(int(1)), StepLaw::rademacher(), StepLaw::dirac(int(-3))] {
            let run = simulate(20_000, 0.35, &law, &mut rng(12)).unwrap();
            assert_eq!(representation_residual(&run), 0.0);
            assert_eq!(decompose(&run).values().sum::<f64>(), run.final_check());
        }
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let law = StepLaw::gaussian(int(0), int(2)).unwrap();
        let a = simulate(1000, 0.6, &law, &mut rng(77)).unwrap();
        let b = simulate(1000, 0.6, &law, &mut rng(77)).unwrap();
        assert_eq!(a.s_check, b.s_check);
        assert_eq!(a.v, b.v);
        let c = simulate(1000, 0.6, &law, &mut rng(78)).unwrap();
        assert_ne!(a.s_check, c.s_check);
    }

    #[test]
    fn replicas_do_not_depend_on_the_pool() {
        let law = StepLaw::rademacher();
        let work = |_: usize, r: &mut ChaCha8Rng| simulate(300, 0.5, &law, r).unwrap().summary();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| replicate(42, 64, work));
        let b = wide.install(|| replicate(42, 64, work));
        assert_eq!(a, b);
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
    }

    #[test]
    fn compensated_sum_beats_naive_sum() {
        let mut acc = CompensatedSum::default();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn counting_invariants_hold(seed in any::<u64>(), n in 1usize..2000, p in 0.0f64..=1.0) {
                let run = simulate(n, p, &StepLaw::rademacher(), &mut rng(seed)).unwrap();
                let census = forest_census(&run, DEFAULT_SHAPE_CAP);
                prop_assert_eq!(census.nu.iter().map(|(k, c)| k * c).sum::<usize>(), n);
                prop_assert_eq!(census.nu.values().sum::<usize>(), run.innovations());
                prop_assert_eq!(representation_residual(&run), 0.0);
                prop_assert_eq!(decompose(&run).values().sum::<f64>(), run.final_check());
            }
        }
    }
}
