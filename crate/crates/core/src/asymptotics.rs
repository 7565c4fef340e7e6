//! Closed-form limit constants.
//!
//! Everything with rational inputs is exact. Throughout, `ρ = 1/(1−p)` and
//! `B(k, 1+ρ) = (k−1)! / ((1+ρ)(2+ρ)⋯(k+ρ))`, evaluated by the product
//! formula so that rational `p` gives rational values.
//!
//! Infinite series are truncated; the `*_series` functions work in `f64`
//! with the term ratio `B(k+1,1+ρ)/B(k,1+ρ) = k/(k+1+ρ)` and report a tail
//! estimate alongside the partial sum.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::eulerian::{self, EulerianTable};
use crate::rational::{self, in_unit_interval, int, ratio, Rational};
use crate::recursive_tree::{enumerate_increasing_trees, Tree};

/// Default truncation for infinite series.
pub const DEFAULT_TRUNCATION: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("p = {0} is not in [0, 1]")]
    ProbabilityOutOfRange(String),
    #[error("{what} requires p in {range}, got p = {p}")]
    ExcludedProbability { what: &'static str, range: &'static str, p: String },
    #[error("second moment {m2} is smaller than the squared first moment of {m1}")]
    MomentsInconsistent { m1: String, m2: String },
    #[error("{what} must be positive, got {value}")]
    NotPositive { what: &'static str, value: String },
    #[error("stable index {0} is not in (0, 2)")]
    BadStableIndex(f64),
    #[error("truncation must be at least 1")]
    ZeroTruncation,
    #[error(transparent)]
    Tree(#[from] crate::recursive_tree::TreeError),
}

fn check_closed(p: &Rational) -> Result<(), AsymptoticsError> {
    if in_unit_interval(p) {
        Ok(())
    } else {
        Err(AsymptoticsError::ProbabilityOutOfRange(rational::render(p)))
    }
}

fn check_open(p: &Rational, what: &'static str) -> Result<(), AsymptoticsError> {
    check_closed(p)?;
    if p.is_zero() || p.is_one() {
        return Err(AsymptoticsError::ExcludedProbability {
            what,
            range: "(0, 1)",
            p: rational::render(p),
        });
    }
    Ok(())
}

fn check_half_open(p: &Rational, what: &'static str) -> Result<(), AsymptoticsError> {
    check_closed(p)?;
    if p.is_zero() {
        return Err(AsymptoticsError::ExcludedProbability {
            what,
            range: "(0, 1]",
            p: rational::render(p),
        });
    }
    Ok(())
}

/// `ρ = 1/(1−p)`; callers guarantee `p < 1`.
fn rho(p: &Rational) -> Rational {
    (Rational::one() - p).recip()
}

/// `p·m₁/(2−p)`: ballistic speed of the counterbalanced walk.
pub fn velocity(p: &Rational, m1: &Rational) -> Result<Rational, AsymptoticsError> {
    check_closed(p)?;
    Ok(p * m1 / (int(2) - p))
}

/// Variance of the Gaussian limit of `(Š(n) − n·velocity)/√n`:
/// `(m₂ − (p m₁/(2−p))²)/(3−2p)`.
pub fn clt_variance(p: &Rational, m1: &Rational, m2: &Rational) -> Result<Rational, AsymptoticsError> {
    check_half_open(p, "the Gaussian limit")?;
    if m2 < &(m1 * m1) {
        return Err(AsymptoticsError::MomentsInconsistent {
            m1: rational::render(m1),
            m2: rational::render(m2),
        });
    }
    let v = velocity(p, m1)?;
    Ok((m2 - &v * &v) / (int(3) - int(2) * p))
}

/// Variance of the Gaussian fluctuations of `ν₁(n)`:
/// `(2p³ − 8p² + 6p)/((3−2p)(2−p)²)`.
pub fn nu1_clt_variance(p: &Rational) -> Result<Rational, AsymptoticsError> {
    check_half_open(p, "the singleton-count fluctuations")?;
    let p2 = p * p;
    let p3 = &p2 * p;
    let num = int(2) * p3 - int(8) * p2 + int(6) * p;
    let two_minus = int(2) - p;
    Ok(num / ((int(3) - int(2) * p) * &two_minus * &two_minus))
}

/// `(x)^(k) = x(x+1)⋯(x+k−1)`.
pub fn rising_factorial(x: &Rational, k: usize) -> Result<Rational, AsymptoticsError> {
    if x <= &Rational::zero() {
        return Err(AsymptoticsError::NotPositive { what: "x", value: rational::render(x) });
    }
    Ok((0..k).fold(Rational::one(), |acc, j| acc * (x + int(j as i64))))
}

/// `B(k, 1 + 1/(1−p))` for `k ≥ 1`, `p ∈ [0, 1)`.
pub fn beta_shifted(k: usize, p: &Rational) -> Result<Rational, AsymptoticsError> {
    check_closed(p)?;
    if p.is_one() {
        return Err(AsymptoticsError::ExcludedProbability {
            what: "B(k, 1+1/(1-p))",
            range: "[0, 1)",
            p: rational::render(p),
        });
    }
    if k == 0 {
        return Err(AsymptoticsError::NotPositive { what: "k", value: "0".into() });
    }
    let one_plus_rho = Rational::one() + rho(p);
    let factorial = Rational::from_integer(BigInt::from(eulerian::factorial(k - 1)));
    Ok(factorial / rising_factorial(&one_plus_rho, k)?)
}

/// Yule–Simon mass `(1/(1−p))·B(k, 1+1/(1−p))`.
pub fn yule_simon_pmf(k: usize, p: &Rational) -> Result<Rational, AsymptoticsError> {
    check_open(p, "the Yule-Simon law")?;
    Ok(rho(p) * beta_shifted(k, p)?)
}

/// Limit variance `σ²_k` of `Š_k(n)/√n` (centred for `k = 1`).
pub fn sigma_sq_k(
    k: usize,
    p: &Rational,
    m1: &Rational,
    m2: &Rational,
) -> Result<Rational, AsymptoticsError> {
    check_open(p, "the per-size variances")?;
    match k {
        0 => Err(AsymptoticsError::NotPositive { what: "k", value: "0".into() }),
        1 => {
            let two_minus = int(2) - p;
            Ok(p * m2 / &two_minus
                - p * p * m1 * m1 / ((int(3) - int(2) * p) * &two_minus * &two_minus))
        }
        2 => Ok(Rational::zero()),
        _ => Ok(int(k as i64) * p * m2 * beta_shifted(k, p)? / (int(3) * (Rational::one() - p))),
    }
}

/// Limit of `ν_τ(n)/n`: `p/((1−p)(1+ρ)^(|τ|))`.
pub fn tree_freq_limit(tau: &Tree, p: &Rational) -> Result<Rational, AsymptoticsError> {
    check_open(p, "the tree-shape frequencies")?;
    let one_plus_rho = Rational::one() + rho(p);
    Ok(p / ((Rational::one() - p) * rising_factorial(&one_plus_rho, tau.size())?))
}

/// `E Š(n)` from `E Š(m+1) = p m₁ + (1 − (1−p)/m) E Š(m)`, `E Š(1) = m₁`.
pub fn exact_mean(n: usize, p: &Rational, m1: &Rational) -> Result<Rational, AsymptoticsError> {
    check_closed(p)?;
    if n == 0 {
        return Err(AsymptoticsError::NotPositive { what: "n", value: "0".into() });
    }
    let q = Rational::one() - p;
    let innovation = p * m1;
    let mut mean = m1.clone();
    for m in 1..n {
        mean = &innovation + (Rational::one() - &q / int(m as i64)) * mean;
    }
    Ok(mean)
}

/// Closed-form constants for one `(p, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitConstants {
    pub p: Rational,
    pub m1: Option<Rational>,
    pub m2: Option<Rational>,
    pub rho: Option<Rational>,
    pub velocity: Option<Rational>,
    pub clt_variance: Option<Rational>,
    pub nu1_variance: Option<Rational>,
    /// `σ²_k` for `k = 1..=table_len`, empty unless `0 < p < 1` and `m₂` exists.
    pub sigma_sq: BTreeMap<usize, Rational>,
}

impl LimitConstants {
    pub fn evaluate(
        p: &Rational,
        m1: Option<&Rational>,
        m2: Option<&Rational>,
        table_len: usize,
    ) -> Result<Self, AsymptoticsError> {
        check_closed(p)?;
        let interior = !p.is_zero() && !p.is_one();
        let velocity = m1.map(|m1| velocity(p, m1)).transpose()?;
        let clt_variance = match (m1, m2) {
            (Some(m1), Some(m2)) if !p.is_zero() => Some(clt_variance(p, m1, m2)?),
            _ => None,
        };
        let nu1_variance = (!p.is_zero()).then(|| nu1_clt_variance(p)).transpose()?;
        let mut sigma_sq = BTreeMap::new();
        if let (true, Some(m1), Some(m2)) = (interior, m1, m2) {
            for k in 1..=table_len {
                sigma_sq.insert(k, sigma_sq_k(k, p, m1, m2)?);
            }
        }
        Ok(LimitConstants {
            p: p.clone(),
            m1: m1.cloned(),
            m2: m2.cloned(),
            rho: (!p.is_one()).then(|| rho(p)),
            velocity,
            clt_variance,
            nu1_variance,
            sigma_sq,
        })
    }
}

/// Truncated series with an estimate of the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
    pub tail_estimate: f64,
}

/// `B(k, 1+ρ)` for `k = 1..=kmax` in `f64`.
fn beta_shifted_f64(rho: f64, kmax: usize) -> impl Iterator<Item = f64> {
    (1..=kmax).scan(0.0, move |b, k| {
        *b = if k == 1 { 1.0 / (1.0 + rho) } else { *b * (k - 1) as f64 / (k as f64 + rho) };
        Some(*b)
    })
}

/// Leading behaviour `Γ(1+ρ) k^(−1−ρ)` of `B(k, 1+ρ)` summed against `k^power`
/// over `k > K` (integral approximation; needs `ρ > power`).
fn beta_tail(rho: f64, power: f64, kmax: usize) -> f64 {
    gamma(1.0 + rho) * (kmax as f64).powf(power - rho) / (rho - power)
}

/// `Σ_{k≤K} yule_simon_pmf(k, p)`, which tends to 1.
pub fn yule_simon_mass_series(p: &Rational, kmax: usize) -> Result<SeriesSum, AsymptoticsError> {
    check_open(p, "the Yule-Simon law")?;
    let r = rational::to_f64(&rho(p));
    let value = r * beta_shifted_f64(r, kmax).sum::<f64>();
    Ok(SeriesSum { value, terms: kmax, tail_estimate: r * beta_tail(r, 0.0, kmax) })
}

/// `Σ_{k≤K} k·yule_simon_pmf(k, p)`, which tends to `1/p`.
pub fn yule_simon_mean_series(p: &Rational, kmax: usize) -> Result<SeriesSum, AsymptoticsError> {
    check_open(p, "the Yule-Simon law")?;
    let r = rational::to_f64(&rho(p));
    let value = r * beta_shifted_f64(r, kmax).enumerate().map(|(i, b)| (i + 1) as f64 * b).sum::<f64>();
    Ok(SeriesSum { value, terms: kmax, tail_estimate: r * beta_tail(r, 1.0, kmax) })
}

fn sigma_tail_series(
    p: &Rational,
    m2: &Rational,
    kmax: usize,
) -> Result<SeriesSum, AsymptoticsError> {
    check_open(p, "the per-size variances")?;
    let r = rational::to_f64(&rho(p));
    let pf = rational::to_f64(p);
    let m2f = rational::to_f64(m2);
    let coeff = pf * m2f * r / 3.0;
    let value = coeff
        * beta_shifted_f64(r, kmax)
            .enumerate()
            .skip(2)
            .map(|(i, b)| (i + 1) as f64 * b)
            .sum::<f64>();
    Ok(SeriesSum { value, terms: kmax, tail_estimate: coeff * beta_tail(r, 1.0, kmax) })
}

/// `σ²₁ + Σ_{k=2..K} σ²_k`, which tends to [`clt_variance`].
pub fn sigma_sq_series(
    p: &Rational,
    m1: &Rational,
    m2: &Rational,
    kmax: usize,
) -> Result<SeriesSum, AsymptoticsError> {
    let head = rational::to_f64(&sigma_sq_k(1, p, m1, m2)?);
    let tail = sigma_tail_series(p, m2, kmax)?;
    Ok(SeriesSum { value: head + tail.value, ..tail })
}

/// `p m₂/(2−p) + Σ_{k=2..K} σ²_k`, which tends to `m₂/(3−2p)`.
pub fn centred_variance_series(
    p: &Rational,
    m2: &Rational,
    kmax: usize,
) -> Result<SeriesSum, AsymptoticsError> {
    let head = rational::to_f64(&(p * m2 / (int(2) - p)));
    let tail = sigma_tail_series(p, m2, kmax)?;
    Ok(SeriesSum { value: head + tail.value, ..tail })
}

/// Characteristic exponent `φ_α` of an `α`-stable variable, fixed by its
/// values at `±1` through homogeneity `φ_α(θ) = |θ|^α φ_α(sgn θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSpec {
    pub alpha: f64,
    pub phi_plus: Complex64,
    pub phi_minus: Complex64,
}

impl StableSpec {
    pub fn new(alpha: f64, phi_plus: Complex64, phi_minus: Complex64) -> Result<Self, AsymptoticsError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(AsymptoticsError::BadStableIndex(alpha));
        }
        Ok(StableSpec { alpha, phi_plus, phi_minus })
    }

    /// Symmetric law: `φ_α(θ) = c|θ|^α`.
    pub fn symmetric(alpha: f64, phi1: f64) -> Result<Self, AsymptoticsError> {
        let c = Complex64::new(phi1, 0.0);
        StableSpec::new(alpha, c, c)
    }

    pub fn phi(&self, theta: f64) -> Complex64 {
        if theta == 0.0 {
            return Complex64::zero();
        }
        let base = if theta > 0.0 { self.phi_plus } else { self.phi_minus };
        base * theta.abs().powf(self.alpha)
    }

    /// Normalizing sequence `a_n = n^(1/α)`.
    pub fn scale(&self, n: usize) -> f64 {
        (n as f64).powf(1.0 / self.alpha)
    }
}

/// `φ̌_α(θ) = (p/(1−p)) Σ_k Σ_ℓ φ_α((k−2ℓ)θ) ⟨k−1, ℓ−1⟩ / (1+ρ)^(k)`,
/// truncated after `kmax` shells.
///
/// Shells up to the Eulerian table cap use exact weights; later shells use
/// the odd-count law propagated in `f64`. The tail estimate bounds the
/// neglected shells with `E|Δ(T_k)|^α ≤ k` and the exact remainder of
/// `(p/(1−p)) Σ_k k B(k,1+ρ) = 1`.
pub fn stable_check_exponent(
    theta: f64,
    p: &Rational,
    spec: &StableSpec,
    kmax: usize,
) -> Result<(Complex64, f64), AsymptoticsError> {
    check_open(p, "the stable limit")?;
    if kmax == 0 {
        return Err(AsymptoticsError::ZeroTruncation);
    }
    let table = EulerianTable::global();
    let exact_shells = kmax.min(table.cap() + 1);
    let prefactor = p / (Rational::one() - p);
    let one_plus_rho = Rational::one() + rho(p);

    let mut value = Complex64::zero();
    let mut rising = Rational::one();
    let mut weight_mass = 0.0;
    for k in 1..=exact_shells {
        rising *= &one_plus_rho + int(k as i64 - 1);
        let shell = &prefactor / &rising;
        let row = table.row(k - 1);
        for ell in 0..k as i64 {
            let count = row.get(ell - 1);
            if count.is_zero() {
                continue;
            }
            let w = rational::to_f64(&(&shell * Rational::from_integer(BigInt::from(count))));
            value += spec.phi((k as i64 - 2 * ell) as f64 * theta) * w;
        }
        weight_mass += k as f64 * rational::to_f64(&(&shell * Rational::from_integer(eulerian::factorial(k - 1).into())));
    }

    if kmax > exact_shells {
        // Continue with f64 odd-count probabilities of T_k and weights
        // (p/(1−p)) B(k,1+ρ).
        let r = rational::to_f64(&rho(p));
        let k0 = exact_shells;
        let mut odd: Vec<f64> = (0..=k0)
            .map(|ell| rational::to_f64(&eulerian::odd_count_pmf(k0).expect("k0 >= 1").prob(ell as i64)))
            .collect();
        let mut weight = rational::to_f64(&(&prefactor * beta_shifted(k0, p)?));
        for k in k0 + 1..=kmax {
            // P(Odd(T_k) = ℓ) = (ℓ/(k−1)) P(Odd(T_{k−1}) = ℓ) + ((k−ℓ)/(k−1)) P(Odd(T_{k−1}) = ℓ−1)
            let m = (k - 1) as f64;
            let mut next = vec![0.0; k + 1];
            for (ell, slot) in next.iter_mut().enumerate() {
                let stay = if ell < odd.len() { ell as f64 / m * odd[ell] } else { 0.0 };
                let step = if ell >= 1 && ell - 1 < odd.len() {
                    (k - ell) as f64 / m * odd[ell - 1]
                } else {
                    0.0
                };
                *slot = stay + step;
            }
            odd = next;
            weight *= (k - 1) as f64 / (k as f64 + r);
            for (ell, &prob) in odd.iter().enumerate() {
                if prob > 0.0 {
                    value += spec.phi((k as f64 - 2.0 * ell as f64) * theta) * (weight * prob);
                }
            }
            weight_mass += k as f64 * weight;
        }
    }

    let phi_max = spec.phi_plus.norm().max(spec.phi_minus.norm());
    let tail = theta.abs().powf(spec.alpha) * phi_max * (1.0 - weight_mass).max(0.0);
    Ok((value, tail))
}

/// `Σ_{|τ| ≤ max_size} (|τ| + Δ(τ)²)/(1+ρ)^(|τ|)` by enumerating every
/// increasing tree.
pub fn shape_weight_sum_enumerated(p: &Rational, max_size: usize) -> Result<Rational, AsymptoticsError> {
    check_open(p, "the shape weights")?;
    let one_plus_rho = Rational::one() + rho(p);
    let mut total = Rational::zero();
    for k in 1..=max_size {
        let rising = rising_factorial(&one_plus_rho, k)?;
        let numer: i64 = enumerate_increasing_trees(k)?
            .iter()
            .map(|t| k as i64 + t.parity_profile().delta.pow(2))
            .sum();
        total += int(numer) / rising;
    }
    Ok(total)
}

/// The same truncated sum grouped by size: `Σ_{k ≤ K} B(k,1+ρ)(k + E Δ(T_k)²)`,
/// with the moments taken from the Eulerian laws.
pub fn shape_weight_sum_by_size(p: &Rational, max_size: usize) -> Result<Rational, AsymptoticsError> {
    check_open(p, "the shape weights")?;
    let mut total = Rational::zero();
    for k in 1..=max_size {
        let second = eulerian::delta_moment(k, 2).expect("k >= 1");
        total += beta_shifted(k, p)? * (int(k as i64) + second);
    }
    Ok(total)
}

/// Value of the full shape-weight sum obtained by grouping by size with the
/// exact small-size moments `E Δ(T₁)² = 1`, `E Δ(T₂)² = 0`:
/// `4(1−p)/(3p) + (2/3)(B(1,1+ρ) − B(2,1+ρ))`.
pub fn shape_weight_closed_form(p: &Rational) -> Result<Rational, AsymptoticsError> {
    check_open(p, "the shape weights")?;
    let b1 = beta_shifted(1, p)?;
    let b2 = beta_shifted(2, p)?;
    Ok(int(4) * (Rational::one() - p) / (int(3) * p) + ratio(2, 3) * (b1 - b2))
}

/// The constant `4p/(3(1−p))` quoted in the literature for the same sum.
pub fn shape_weight_reference_constant(p: &Rational) -> Result<Rational, AsymptoticsError> {
    check_open(p, "the shape weights")?;
    Ok(int(4) * p / (int(3) * (Rational::one() - p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerian::{eulerian_explicit, factorial};
    use crate::recursive_tree::Tree;

    fn half() -> Rational {
        ratio(1, 2)
    }

    #[test]
    fn velocity_examples() {
        assert_eq!(velocity(&int(1), &ratio(7, 3)).unwrap(), ratio(7, 3));
        assert_eq!(velocity(&int(0), &int(5)).unwrap(), int(0));
        assert_eq!(velocity(&ratio(2, 3), &int(1)).unwrap(), ratio(1, 2));
        assert!(velocity(&ratio(3, 2), &int(1)).is_err());
    }

    #[test]
    fn clt_variance_examples() {
        assert_eq!(clt_variance(&int(1), &int(2), &int(7)).unwrap(), int(3));
        for p in [ratio(1, 5), half(), ratio(9, 10)] {
            assert_eq!(
                clt_variance(&p, &int(0), &int(4)).unwrap(),
                int(4) / (int(3) - int(2) * &p)
            );
        }
        assert_eq!(clt_variance(&half(), &int(1), &int(1)).unwrap(), ratio(4, 9));
        assert!(matches!(
            clt_variance(&int(0), &int(1), &int(1)),
            Err(AsymptoticsError::ExcludedProbability { .. })
        ));
        assert!(matches!(
            clt_variance(&half(), &int(2), &int(1)),
            Err(AsymptoticsError::MomentsInconsistent { .. })
        ));
    }

    #[test]
    fn dirac_variance_peaks_at_the_known_point() {
        let grid = 100_000;
        let (best, _) = (1..grid)
            .map(|i| {
                let p = ratio(i, grid);
                let v = rational::to_f64(&clt_variance(&p, &int(1), &int(1)).unwrap());
                (i as f64 / grid as f64, v)
            })
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        let expected = (9.0 - 17f64.sqrt()) / 8.0;
        assert!((best - expected).abs() < 2e-5, "best={best}");
        // Dirac: 4(1−p)m₂/((3−2p)(2−p)²)
        let p = ratio(3, 10);
        let closed = int(4) * (int(1) - &p) / ((int(3) - int(2) * &p) * (int(2) - &p) * (int(2) - &p));
        assert_eq!(clt_variance(&p, &int(1), &int(1)).unwrap(), closed);
    }

    #[test]
    fn nu1_variance_examples() {
        assert_eq!(nu1_clt_variance(&int(1)).unwrap(), int(0));
        assert_eq!(nu1_clt_variance(&half()).unwrap(), ratio(5, 18));
        // 0.84375 / 2.34375
        assert_eq!(nu1_clt_variance(&ratio(3, 4)).unwrap(), ratio(9, 25));
        assert!(nu1_clt_variance(&int(0)).is_err());
        assert!(nu1_clt_variance(&int(2)).is_err());
    }

    #[test]
    fn yule_simon_examples() {
        assert_eq!(yule_simon_pmf(1, &half()).unwrap(), ratio(2, 3));
        // ρ = 2: B(k,3) = 2/(k(k+1)(k+2)), pmf = 4/(k(k+1)(k+2))
        for k in 1..20i64 {
            assert_eq!(yule_simon_pmf(k as usize, &half()).unwrap(), ratio(4, k * (k + 1) * (k + 2)));
        }
        assert!(yule_simon_pmf(1, &int(0)).is_err());
        assert!(yule_simon_pmf(1, &int(1)).is_err());
    }

    #[test]
    fn yule_simon_exact_partial_sums_telescope() {
        // Σ_{k>K} B(k,1+ρ) = B(K+1, ρ) = (K+1+ρ)/ρ · B(K+1,1+ρ)
        for p in [ratio(1, 4), half(), ratio(2, 3)] {
            let r = rho(&p);
            let mut partial = Rational::zero();
            for k in 1..=25usize {
                partial += yule_simon_pmf(k, &p).unwrap();
                let tail = (int(k as i64 + 1) + &r) * beta_shifted(k + 1, &p).unwrap();
                assert_eq!(&partial + tail, int(1));
            }
        }
    }

    #[test]
    fn yule_simon_series_identities() {
        for p in [ratio(1, 4), half(), ratio(3, 4)] {
            let mass = yule_simon_mass_series(&p, DEFAULT_TRUNCATION).unwrap();
            assert!((1.0 - mass.value).abs() <= 2.0 * mass.tail_estimate + 1e-12);
            let mean = yule_simon_mean_series(&p, DEFAULT_TRUNCATION).unwrap();
            let target = 1.0 / rational::to_f64(&p);
            assert!((target - mean.value).abs() <= 2.0 * mean.tail_estimate + 1e-9, "{mean:?}");
            assert!(mean.value < target);
        }
    }

    #[test]
    fn yule_simon_partial_sums_are_monotone_and_bounded() {
        let p = ratio(1, 3);
        let mut prev = Rational::zero();
        for k in 1..=40 {
            let next = &prev + yule_simon_pmf(k, &p).unwrap();
            assert!(next > prev && next < int(1));
            prev = next;
        }
    }

    #[test]
    fn sigma_table_examples() {
        let p = half();
        assert_eq!(sigma_sq_k(2, &p, &int(1), &int(1)).unwrap(), int(0));
        // σ²₁ = (1/2)/(3/2) − (1/4)/(2·9/4) = 1/3 − 1/18
        assert_eq!(sigma_sq_k(1, &p, &int(1), &int(1)).unwrap(), ratio(5, 18));
        // σ²₃ = 3·(1/2)·B(3,3)/(3/2) = B(3,3) = 1/30
        assert_eq!(sigma_sq_k(3, &p, &int(1), &int(1)).unwrap(), ratio(1, 30));
        assert!(sigma_sq_k(3, &int(1), &int(1), &int(1)).is_err());
    }

    #[test]
    fn sigma_series_matches_clt_variance() {
        let p = half();
        for (m1, m2) in [(int(1), int(1)), (int(0), int(1)), (int(1), int(2))] {
            let target = rational::to_f64(&clt_variance(&p, &m1, &m2).unwrap());
            let s = sigma_sq_series(&p, &m1, &m2, DEFAULT_TRUNCATION).unwrap();
            assert!(((s.value - target) / target).abs() < 1e-3);
            let c = centred_variance_series(&p, &m2, DEFAULT_TRUNCATION).unwrap();
            let target = rational::to_f64(&(&m2 / (int(3) - int(2) * &p)));
            assert!(((c.value - target) / target).abs() < 1e-3);
            assert!((c.value - target).abs() <= 2.0 * c.tail_estimate);
        }
    }

    #[test]
    fn rising_factorial_examples() {
        assert_eq!(rising_factorial(&ratio(5, 7), 0).unwrap(), int(1));
        assert_eq!(rising_factorial(&int(2), 3).unwrap(), int(24));
        assert!(rising_factorial(&int(0), 2).is_err());
        // B(k,1+ρ) = (k−1)!/(1+ρ)^(k)
        let p = ratio(2, 5);
        let one_plus_rho = int(1) + rho(&p);
        for k in 1..12 {
            let via_rising = Rational::from_integer(factorial(k - 1).into())
                / rising_factorial(&one_plus_rho, k).unwrap();
            assert_eq!(via_rising, beta_shifted(k, &p).unwrap());
        }
    }

    #[test]
    fn tree_freq_examples() {
        let p = ratio(1, 3);
        assert_eq!(tree_freq_limit(&Tree::singleton(), &p).unwrap(), &p / (int(2) - &p));
        let expected = &p * (int(1) - &p) / ((int(2) - &p) * (int(3) - int(2) * &p));
        assert_eq!(tree_freq_limit(&Tree::path(2), &p).unwrap(), expected);
        for k in 1..=6 {
            let total: Rational = enumerate_increasing_trees(k)
                .unwrap()
                .iter()
                .map(|t| tree_freq_limit(t, &p).unwrap())
                .sum();
            assert_eq!(total, &p * yule_simon_pmf(k, &p).unwrap());
        }
    }

    #[test]
    fn exact_mean_examples() {
        let p = ratio(3, 7);
        let m1 = ratio(5, 2);
        assert_eq!(exact_mean(1, &p, &m1).unwrap(), m1);
        assert_eq!(exact_mean(2, &p, &m1).unwrap(), int(2) * &p * &m1);
        let half = half();
        let n = 10_000;
        let ratio_to_limit = rational::to_f64(&exact_mean(n, &half, &int(1)).unwrap()) / n as f64;
        assert!((ratio_to_limit - 1.0 / 3.0).abs() < 0.01 / 3.0);
        assert!(exact_mean(0, &half, &int(1)).is_err());
    }

    #[test]
    fn limit_constants_bundle() {
        let c = LimitConstants::evaluate(&half(), Some(&int(1)), Some(&int(1)), 5).unwrap();
        assert_eq!(c.velocity, Some(ratio(1, 3)));
        assert_eq!(c.clt_variance, Some(ratio(4, 9)));
        assert_eq!(c.nu1_variance, Some(ratio(5, 18)));
        assert_eq!(c.rho, Some(int(2)));
        assert_eq!(c.sigma_sq[&2], int(0));
        let edge = LimitConstants::evaluate(&int(1), Some(&int(0)), Some(&int(1)), 5).unwrap();
        assert!(edge.sigma_sq.is_empty());
        assert_eq!(edge.clt_variance, Some(int(1)));
        let p0 = LimitConstants::evaluate(&int(0), Some(&int(1)), Some(&int(1)), 5).unwrap();
        assert_eq!((p0.clt_variance, p0.nu1_variance), (None, None));
    }

    fn symmetric(alpha: f64) -> StableSpec {
        StableSpec::symmetric(alpha, 1.0).unwrap()
    }

    #[test]
    fn stable_exponent_basics() {
        let p = half();
        let spec = symmetric(1.5);
        let (at_zero, _) = stable_check_exponent(0.0, &p, &spec, 30).unwrap();
        assert_eq!(at_zero, Complex64::zero());
        // shell 2 adds nothing
        let (one, _) = stable_check_exponent(1.0, &p, &spec, 1).unwrap();
        let (two, _) = stable_check_exponent(1.0, &p, &spec, 2).unwrap();
        assert_eq!(one, two);
        assert!((one.re - rational::to_f64(&(&p / (int(2) - &p)))).abs() < 1e-15);
        for theta in [0.3, 1.0, 2.5] {
            let (a, _) = stable_check_exponent(theta, &p, &spec, 40).unwrap();
            let (b, _) = stable_check_exponent(-theta, &p, &spec, 40).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
        assert!(stable_check_exponent(1.0, &int(1), &spec, 5).is_err());
        assert!(stable_check_exponent(1.0, &p, &spec, 0).is_err());
        assert!(StableSpec::symmetric(2.0, 1.0).is_err());
    }

    #[test]
    fn stable_exponent_matches_brute_shell_sum() {
        // independent route: explicit-formula Eulerian numbers and plain f64
        let p = ratio(2, 5);
        let alpha = 1.3;
        let spec = symmetric(alpha);
        let theta = 0.7;
        let pf = 0.4;
        let r = 1.0 / (1.0 - pf);
        let mut expected = 0.0;
        for k in 1..=20usize {
            let rising: f64 = (0..k).map(|j| 1.0 + r + j as f64).product();
            for ell in 0..k as i64 {
                let count = rational::to_f64(&Rational::from_integer(eulerian_explicit(k - 1, ell - 1).into()));
                expected += ((k as i64 - 2 * ell) as f64 * theta).abs().powf(alpha) * count / rising;
            }
        }
        expected *= pf / (1.0 - pf);
        let (value, tail) = stable_check_exponent(theta, &p, &spec, 20).unwrap();
        assert!((value.re - expected).abs() < 1e-12 * expected, "{} vs {expected}", value.re);
        let (longer, _) = stable_check_exponent(theta, &p, &spec, 400).unwrap();
        assert!(longer.re - value.re <= tail);
    }

    #[test]
    fn stable_exponent_float_continuation_is_seamless() {
        // shells beyond the exact table must agree with an all-exact evaluation
        let p = ratio(1, 2);
        let spec = symmetric(1.5);
        let cap = EulerianTable::global().cap();
        let (exact, _) = stable_check_exponent(1.0, &p, &spec, cap + 1).unwrap();
        let (mixed, tail) = stable_check_exponent(1.0, &p, &spec, cap + 60).unwrap();
        let mut manual = exact;
        let prefactor = 1.0;
        for k in cap + 2..=cap + 60 {
            let pmf = eulerian::delta_pmf(k).unwrap();
            let w = prefactor * rational::to_f64(&beta_shifted(k, &p).unwrap());
            for (d, m) in pmf.iter() {
                manual += spec.phi(d as f64) * (w * rational::to_f64(m));
            }
        }
        assert!((mixed - manual).norm() < 1e-12, "{mixed} vs {manual}");
        assert!(tail > 0.0 && tail < 1e-2);
    }

    #[test]
    fn stable_exponent_tends_to_the_input_as_p_grows() {
        let spec = symmetric(1.2);
        let (value, _) = stable_check_exponent(1.0, &ratio(999, 1000), &spec, 200).unwrap();
        assert!((value.re - 1.0).abs() < 0.01, "{value}");
    }

    #[test]
    fn shape_weight_routes_agree() {
        for p in [ratio(1, 4), half(), ratio(3, 4)] {
            for size in 1..=7 {
                assert_eq!(
                    shape_weight_sum_enumerated(&p, size).unwrap(),
                    shape_weight_sum_by_size(&p, size).unwrap()
                );
            }
        }
        assert_eq!(shape_weight_closed_form(&half()).unwrap(), ratio(3, 2));
        assert_eq!(shape_weight_reference_constant(&half()).unwrap(), ratio(4, 3));
        // the size-grouped sum converges to the closed form
        let far = rational::to_f64(&shape_weight_sum_by_size(&half(), 150).unwrap());
        assert!((far - 1.5).abs() < 0.02, "{far}");
    }
}
