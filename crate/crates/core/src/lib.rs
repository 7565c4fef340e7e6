//! Random walks with counterbalanced steps.
//!
//! A counterbalanced walk draws each step either fresh from a law `μ` (with
//! probability `p`) or as the negative of a uniformly chosen earlier step.
//! This crate simulates that walk jointly with Simon's reinforced walk,
//! computes the exact finite-`n` laws that are available in closed form
//! (Eulerian numbers, parity differences of random recursive trees) and the
//! limit constants of the ballistic, Gaussian and stable regimes, and ships
//! the statistical checks that tie the two together.
//!
//! Module map:
//!
//! * [`eulerian`]: exact Eulerian numbers and parity laws of recursive trees.
//! * [`recursive_tree`]: increasing trees, sampling, enumeration, Tanny sampler.
//! * [`walk_engine`]: the coupled simulation and its genealogical forest.
//! * [`asymptotics`]: closed-form limit constants and series.
//! * [`verify`]: brute-force oracles, goodness-of-fit statistics and the
//!   acceptance suite.

pub mod asymptotics;
pub mod eulerian;
pub mod rational;
pub mod recursive_tree;
pub mod verify;
pub mod walk_engine;

pub use rational::Rational;
