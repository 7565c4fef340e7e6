//! Increasing trees and random recursive trees.
//!
//! A tree on `{1..k}` is stored as its parent sequence `(par(2), …, par(k))`
//! with `1 ≤ par(j) < j`. Vertices are already labelled in discovery order,
//! so the sequence itself is the canonical identity of the tree.

use rand::distr::Open01;
use rand::Rng;
use thiserror::Error;

/// Largest size accepted by [`enumerate_increasing_trees`] by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree size must be at least 1")]
    EmptyTree,
    #[error("parent of vertex {vertex} is {parent}, expected a label in 1..{vertex}")]
    BadParent { vertex: usize, parent: u32 },
    #[error("enumeration of size {size} exceeds the cap {cap} ((size-1)! trees)")]
    AboveCap { size: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    parents: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityProfile {
    pub even: usize,
    pub odd: usize,
    pub delta: i64,
}

impl Tree {
    /// Builds a tree from `(par(2), …, par(k))` using 1-based labels.
    pub fn from_parents(parents: Vec<u32>) -> Result<Self, TreeError> {
        for (i, &par) in parents.iter().enumerate() {
            let vertex = i + 2;
            if par == 0 || par as usize >= vertex {
                return Err(TreeError::BadParent { vertex, parent: par });
            }
        }
        Ok(Tree { parents })
    }

    pub(crate) fn from_parents_unchecked(parents: Vec<u32>) -> Self {
        debug_assert!(Tree::from_parents(parents.clone()).is_ok());
        Tree { parents }
    }

    pub fn singleton() -> Self {
        Tree { parents: Vec::new() }
    }

    /// The path `1 – 2 – … – k`.
    pub fn path(k: usize) -> Self {
        Tree { parents: (1..k as u32).collect() }
    }

    /// Vertex 1 joined to every other vertex.
    pub fn star(k: usize) -> Self {
        Tree { parents: vec![1; k.saturating_sub(1)] }
    }

    pub fn size(&self) -> usize {
        self.parents.len() + 1
    }

    pub fn parents(&self) -> &[u32] {
        &self.parents
    }

    /// Parent label of vertex `j ≥ 2`.
    pub fn parent(&self, j: usize) -> Option<u32> {
        j.checked_sub(2).and_then(|i| self.parents.get(i).copied())
    }

    /// Depth of every vertex, vertex 1 first. Parents precede children, so
    /// one forward pass suffices.
    pub fn depths(&self) -> Vec<u32> {
        let mut depths = Vec::with_capacity(self.size());
        depths.push(0);
        for &par in &self.parents {
            let d = depths[par as usize - 1] + 1;
            depths.push(d);
        }
        depths
    }

    pub fn parity_profile(&self) -> ParityProfile {
        parity_profile(self)
    }
}

/// Depth-parity census of a tree.
pub fn parity_profile(tree: &Tree) -> ParityProfile {
    let mut odd_flags = Vec::with_capacity(tree.size());
    odd_flags.push(false);
    for &par in &tree.parents {
        let flag = !odd_flags[par as usize - 1];
        odd_flags.push(flag);
    }
    let odd = odd_flags.iter().filter(|&&f| f).count();
    let even = tree.size() - odd;
    ParityProfile { even, odd, delta: even as i64 - odd as i64 }
}

/// Random recursive tree: vertex `j` attaches to a uniform vertex of `{1..j−1}`.
pub fn sample_rrt<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Tree, TreeError> {
    if n == 0 {
        return Err(TreeError::EmptyTree);
    }
    let parents = (2..=n as u32).map(|j| rng.random_range(1..j)).collect();
    Ok(Tree { parents })
}

/// Parity census of a random recursive tree without materializing it.
pub fn sample_rrt_parity<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<ParityProfile, TreeError> {
    if n == 0 {
        return Err(TreeError::EmptyTree);
    }
    let mut odd_flags = Vec::with_capacity(n);
    odd_flags.push(false);
    let mut odd = 0usize;
    for j in 2..=n {
        let par = rng.random_range(0..j - 1);
        let flag = !odd_flags[par];
        odd += flag as usize;
        odd_flags.push(flag);
    }
    let even = n - odd;
    Ok(ParityProfile { even, odd, delta: even as i64 - odd as i64 })
}

/// `⌈U₁ + ⋯ + Uₙ⌉` for i.i.d. uniforms; equal in law to the odd-vertex
/// count of a random recursive tree on `n + 1` vertices.
pub fn tanny_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> u64 {
    let sum: f64 = (0..n).map(|_| rng.sample::<f64, _>(Open01)).sum();
    sum.ceil() as u64
}

/// All `(k−1)!` increasing trees of size `k` in lexicographic order of their
/// parent sequences.
pub fn enumerate_increasing_trees(k: usize) -> Result<Vec<Tree>, TreeError> {
    enumerate_increasing_trees_capped(k, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_increasing_trees_capped(k: usize, cap: usize) -> Result<Vec<Tree>, TreeError> {
    if k == 0 {
        return Err(TreeError::EmptyTree);
    }
    if k > cap {
        return Err(TreeError::AboveCap { size: k, cap });
    }
    let mut out = Vec::new();
    let mut current = vec![1u32; k - 1];
    loop {
        out.push(Tree { parents: current.clone() });
        // odometer: position i (vertex i+2) ranges over 1..=i+1
        let mut i = current.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if current[i] < (i + 1) as u32 {
                current[i] += 1;
                for c in &mut current[i + 1..] {
                    *c = 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerian::{delta_moment, factorial};
    use crate::rational::Rational;
    use num_bigint::BigInt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validates_parents() {
        assert!(Tree::from_parents(vec![1, 2, 1]).is_ok());
        assert_eq!(
            Tree::from_parents(vec![1, 3]),
            Err(TreeError::BadParent { vertex: 3, parent: 3 })
        );
        assert!(Tree::from_parents(vec![0]).is_err());
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity_profile(&Tree::path(3)), ParityProfile { even: 2, odd: 1, delta: 1 });
        assert_eq!(parity_profile(&Tree::star(3)), ParityProfile { even: 1, odd: 2, delta: -1 });
        assert_eq!(parity_profile(&Tree::singleton()).delta, 1);
        assert_eq!(Tree::path(4).depths(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn small_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_rrt(1, &mut rng).unwrap(), Tree::singleton());
        for _ in 0..20 {
            assert_eq!(sample_rrt(2, &mut rng).unwrap().parents(), &[1]);
        }
        assert_eq!(sample_rrt(0, &mut rng), Err(TreeError::EmptyTree));
    }

    #[test]
    fn third_vertex_attaches_to_root_half_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 100_000;
        let hits = (0..m)
            .filter(|_| sample_rrt(3, &mut rng).unwrap().parent(3) == Some(1))
            .count();
        let frac = hits as f64 / m as f64;
        let sd = (0.25 / m as f64).sqrt();
        assert!((frac - 0.5).abs() <= 3.0 * sd, "frac={frac}");
    }

    #[test]
    fn tanny_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(tanny_sample(0, &mut rng), 0);
        for _ in 0..1000 {
            assert_eq!(tanny_sample(1, &mut rng), 1);
        }
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_increasing_trees(1).unwrap(), vec![Tree::singleton()]);
        let three = enumerate_increasing_trees(3).unwrap();
        assert_eq!(three, vec![Tree::star(3), Tree::path(3)]);
        for k in 1..=8 {
            let trees = enumerate_increasing_trees(k).unwrap();
            assert_eq!(BigInt::from(trees.len()), BigInt::from(factorial(k - 1)));
            assert!(trees.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(enumerate_increasing_trees(5).unwrap().len(), 24);
        assert_eq!(
            enumerate_increasing_trees(10),
            Err(TreeError::AboveCap { size: 10, cap: 9 })
        );
        assert!(enumerate_increasing_trees(0).is_err());
    }

    #[test]
    fn uniform_increasing_trees_reproduce_delta_second_moment() {
        for k in 1..=8 {
            let trees = enumerate_increasing_trees(k).unwrap();
            let total: i64 = trees.iter().map(|t| t.parity_profile().delta.pow(2)).sum();
            let avg = Rational::new(BigInt::from(total), BigInt::from(trees.len()));
            assert_eq!(avg, delta_moment(k, 2).unwrap(), "k={k}");
        }
    }

    #[test]
    fn parity_only_sampler_matches_full_sampler() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 50] {
            let full = sample_rrt(n, &mut a).unwrap().parity_profile();
            assert_eq!(full, sample_rrt_parity(n, &mut b).unwrap());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn parity_profile_is_consistent(seed in any::<u64>(), n in 1usize..300) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let tree = sample_rrt(n, &mut rng).unwrap();
                let prof = tree.parity_profile();
                prop_assert_eq!(prof.even + prof.odd, n);
                prop_assert!(prof.delta.unsigned_abs() as usize <= n);
                prop_assert_eq!((prof.delta - n as i64).rem_euclid(2), 0);
                prop_assert!(Tree::from_parents(tree.parents().to_vec()).is_ok());
            }
        }
    }
}
