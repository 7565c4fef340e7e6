//! Eulerian numbers and the exact parity laws of random recursive trees.
//!
//! `⟨n,k⟩` counts permutations of `{1..n}` with exactly `k` descents. The
//! number of odd-depth vertices of a random recursive tree on `n` vertices
//! satisfies `P(Odd = ℓ) = ⟨n−1, ℓ−1⟩ / (n−1)!`, with the convention
//! `⟨0,−1⟩ = 1` covering the single-vertex tree.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{self, Rational};

/// Rows memoized by the shared table.
pub const DEFAULT_ROW_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EulerianError {
    #[error("tree size must be at least 1")]
    EmptyTree,
    #[error("probabilities must be positive and sum to 1 (got total {0})")]
    NotAProbability(String),
}

/// Row `n` of the Eulerian triangle: `⟨n,0⟩, …, ⟨n,n−1⟩`.
///
/// Row 0 holds the single conventional entry `⟨0,−1⟩ = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerianRow {
    pub n: usize,
    pub values: Vec<BigUint>,
}

impl EulerianRow {
    /// `⟨n,k⟩`, zero outside the row.
    pub fn get(&self, k: i64) -> BigUint {
        if self.n == 0 {
            return if k == -1 { BigUint::one() } else { BigUint::zero() };
        }
        if k < 0 || k as usize >= self.n {
            return BigUint::zero();
        }
        self.values[k as usize].clone()
    }

    pub fn sum(&self) -> BigUint {
        self.values.iter().sum()
    }

    fn first() -> Self {
        EulerianRow { n: 1, values: vec![BigUint::one()] }
    }

    fn next(&self) -> Self {
        let n = self.n + 1;
        let prev = |k: i64| -> Cow<'_, BigUint> {
            if k < 0 || k as usize >= self.values.len() {
                Cow::Owned(BigUint::zero())
            } else {
                Cow::Borrowed(&self.values[k as usize])
            }
        };
        let values = (0..n as i64)
            .map(|k| {
                // ⟨n,k⟩ = (n−k)⟨n−1,k−1⟩ + (k+1)⟨n−1,k⟩
                prev(k - 1).as_ref() * BigUint::from(n as u64 - k as u64)
                    + prev(k).as_ref() * BigUint::from(k as u64 + 1)
            })
            .collect();
        EulerianRow { n, values }
    }
}

/// Memoized Eulerian triangle up to a row cap.
#[derive(Debug, Clone)]
pub struct EulerianTable {
    rows: Vec<EulerianRow>,
}

impl EulerianTable {
    pub fn with_cap(cap: usize) -> Self {
        let mut rows = Vec::with_capacity(cap + 1);
        rows.push(EulerianRow { n: 0, values: vec![BigUint::one()] });
        if cap >= 1 {
            rows.push(EulerianRow::first());
        }
        while rows.len() <= cap {
            let next = rows.last().expect("non-empty").next();
            rows.push(next);
        }
        EulerianTable { rows }
    }

    /// Process-wide table with [`DEFAULT_ROW_CAP`] rows, built on first use.
    pub fn global() -> &'static EulerianTable {
        static TABLE: OnceLock<EulerianTable> = OnceLock::new();
        TABLE.get_or_init(|| EulerianTable::with_cap(DEFAULT_ROW_CAP))
    }

    pub fn cap(&self) -> usize {
        self.rows.len() - 1
    }

    /// Row `n`; rows past the cap are extended from the last memoized row.
    pub fn row(&self, n: usize) -> Cow<'_, EulerianRow> {
        if n <= self.cap() {
            return Cow::Borrowed(&self.rows[n]);
        }
        let mut row = self.rows[self.cap()].clone();
        if row.n == 0 {
            row = EulerianRow::first();
        }
        while row.n < n {
            row = row.next();
        }
        Cow::Owned(row)
    }

    pub fn number(&self, n: usize, k: i64) -> BigUint {
        if n <= self.cap() {
            self.rows[n].get(k)
        } else {
            self.row(n).get(k)
        }
    }
}

/// `⟨n,k⟩` from the linear recurrence; zero for `k ∉ [0, n−1]` except `⟨0,−1⟩ = 1`.
pub fn eulerian_number(n: usize, k: i64) -> BigUint {
    EulerianTable::global().number(n, k)
}

pub fn eulerian_row(n: usize) -> EulerianRow {
    let row = EulerianTable::global().row(n).into_owned();
    debug_assert!(n == 0 || row.sum() == factorial(n));
    row
}

/// Closed alternating-sum formula `Σ_{j≤k} (−1)^j C(n+1, j) (k+1−j)^n`.
///
/// Shares no code with the recurrence; used to cross-check it.
pub fn eulerian_explicit(n: usize, k: i64) -> BigUint {
    if n == 0 {
        return if k == -1 { BigUint::one() } else { BigUint::zero() };
    }
    if k < 0 || k as usize >= n {
        return BigUint::zero();
    }
    let k = k as usize;
    let mut total = BigInt::zero();
    for j in 0..=k {
        let term = num_integer::binomial(BigInt::from(n + 1), BigInt::from(j))
            * num_traits::pow(BigInt::from(k + 1 - j), n);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total.to_biguint().expect("Eulerian numbers are non-negative")
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).map(BigUint::from).product()
}

/// Finitely supported law on the integers with exact rational masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPmf {
    masses: BTreeMap<i64, Rational>,
}

impl ExactPmf {
    /// Builds a PMF from masses; zero masses are dropped, the rest must be
    /// positive and sum to one exactly.
    pub fn new(masses: impl IntoIterator<Item = (i64, Rational)>) -> Result<Self, EulerianError> {
        let mut map: BTreeMap<i64, Rational> = BTreeMap::new();
        for (v, m) in masses {
            *map.entry(v).or_insert_with(Rational::zero) += m;
        }
        map.retain(|_, m| !m.is_zero());
        let total: Rational = map.values().sum();
        if map.values().any(|m| m.is_negative()) || !total.is_one() {
            return Err(EulerianError::NotAProbability(rational::render(&total)));
        }
        Ok(ExactPmf { masses: map })
    }

    pub fn dirac(value: i64) -> Self {
        ExactPmf { masses: BTreeMap::from([(value, Rational::one())]) }
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.masses.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &Rational)> + '_ {
        self.masses.iter().map(|(v, m)| (*v, m))
    }

    pub fn prob(&self, value: i64) -> Rational {
        self.masses.get(&value).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Law of `f(X)`.
    pub fn map(&self, f: impl Fn(i64) -> i64) -> Self {
        let mut map: BTreeMap<i64, Rational> = BTreeMap::new();
        for (v, m) in &self.masses {
            *map.entry(f(*v)).or_insert_with(Rational::zero) += m;
        }
        ExactPmf { masses: map }
    }

    /// `E[X^r]`.
    pub fn moment(&self, r: u32) -> Rational {
        self.masses
            .iter()
            .map(|(v, m)| Rational::from_integer(num_traits::pow(BigInt::from(*v), r as usize)) * m)
            .sum()
    }

    pub fn mean(&self) -> Rational {
        self.moment(1)
    }

    /// Explicit floating-point projection.
    pub fn to_f64(&self) -> BTreeMap<i64, f64> {
        self.masses.iter().map(|(v, m)| (*v, rational::to_f64(m))).collect()
    }
}

/// Exact law of the number of odd-depth vertices of a random recursive tree
/// on `n` vertices.
pub fn odd_count_pmf(n: usize) -> Result<ExactPmf, EulerianError> {
    if n == 0 {
        return Err(EulerianError::EmptyTree);
    }
    let row = EulerianTable::global().row(n - 1);
    let denom = BigInt::from(factorial(n - 1));
    let masses = (0..n as i64).filter_map(|ell| {
        let count = row.get(ell - 1);
        (!count.is_zero()).then(|| (ell, Rational::new(BigInt::from(count), denom.clone())))
    });
    ExactPmf::new(masses)
}

/// Exact law of `Δ = Even − Odd = n − 2·Odd`.
pub fn delta_pmf(n: usize) -> Result<ExactPmf, EulerianError> {
    let n_i = n as i64;
    Ok(odd_count_pmf(n)?.map(|ell| n_i - 2 * ell))
}

/// `E[Δ(T_n)^r]` as an exact rational.
pub fn delta_moment(n: usize, r: u32) -> Result<Rational, EulerianError> {
    Ok(delta_pmf(n)?.moment(r))
}
