//! The fourteen acceptance criteria.
//!
//! Every criterion draws from its own stream derived from the suite seed, so
//! criteria can run alone or in any order with identical results. Two large
//! simulation batches are shared between criteria and computed on first use.
//!
//! `fast` divides sample sizes and horizons by 10 and widens the fixed
//! tolerances (TV caps, relative bands, CF tolerance) by √10; z and KS bands
//! already scale with the sample size.

use std::sync::OnceLock;
use std::time::Instant;

use num_traits::Zero;
use serde_json::json;

use super::{
    brute_force_walk_pmf, empirical_cf, ks_normal, lattice_jitter, moment_check, sample_variance,
    tv_distance, CheckReport, Histogram, Statistic,
};
use crate::asymptotics::{
    self, centred_variance_series, clt_variance, exact_mean, nu1_clt_variance,
    shape_weight_closed_form, shape_weight_reference_constant, shape_weight_sum_by_size,
    shape_weight_sum_enumerated, sigma_sq_series, stable_check_exponent, tree_freq_limit,
    velocity, yule_simon_pmf, StableSpec,
};
use crate::eulerian::{
    delta_moment, eulerian_explicit, eulerian_number, eulerian_row, factorial, odd_count_pmf,
};
use crate::rational::{self, int, ratio, Rational};
use crate::recursive_tree::{
    enumerate_increasing_trees, sample_rrt_parity, tanny_sample, Tree,
};
use crate::walk_engine::{
    derive_seed, forest_census, replica_rng, replicate, representation_residual, simulate, StepLaw,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub fast: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
}

pub const CRITERIA: [Criterion; 14] = [
    Criterion { id: 1, title: "Eulerian numbers: recurrence, explicit sum, row sums" },
    Criterion { id: 2, title: "odd-vertex count of sampled recursive trees" },
    Criterion { id: 3, title: "ceiling of uniform sums has the odd-count law" },
    Criterion { id: 4, title: "exact moments of the parity difference" },
    Criterion { id: 5, title: "simulator against the brute-force oracle" },
    Criterion { id: 6, title: "forest representation of the walk" },
    Criterion { id: 7, title: "ballistic velocity" },
    Criterion { id: 8, title: "Gaussian fluctuations of the walk" },
    Criterion { id: 9, title: "Gaussian limit of the parity difference" },
    Criterion { id: 10, title: "Yule-Simon tree sizes" },
    Criterion { id: 11, title: "fluctuations of the singleton-tree count" },
    Criterion { id: 12, title: "per-size variance series" },
    Criterion { id: 13, title: "stable limit with heavy-tailed steps" },
    Criterion { id: 14, title: "tree-shape frequencies" },
];

/// Per-run record of the shared `n = 10⁵` batch.
#[derive(Debug, Clone)]
struct LargeRun {
    s_check: f64,
    /// `ν_k(n)` for `k = 1..=5`.
    nu: [usize; 5],
    /// `ν_τ(n)` for the shapes returned by [`small_shapes`].
    shapes: Vec<usize>,
}

/// Per-run record of the shared `n = 10⁴` batch.
#[derive(Debug, Clone, Copy)]
struct ModerateRun {
    s_check: f64,
    nu1: usize,
}

pub struct Suite {
    config: SuiteConfig,
    large: OnceLock<Vec<LargeRun>>,
    moderate: OnceLock<Vec<ModerateRun>>,
}

fn small_shapes() -> Vec<Tree> {
    (1..=3).flat_map(|k| enumerate_increasing_trees(k).expect("k <= cap")).collect()
}

fn half() -> Rational {
    ratio(1, 2)
}

fn f(x: &Rational) -> f64 {
    rational::to_f64(x)
}

fn count_report(name: &str, mismatches: usize, checked: usize) -> CheckReport {
    CheckReport::new(name, Statistic::ExactMismatches, mismatches as f64, 0.0).with_samples(checked)
}

fn runtime_report(name: &str, start: Instant, limit: f64) -> CheckReport {
    CheckReport::new(name, Statistic::RuntimeSeconds, start.elapsed().as_secs_f64(), limit)
}

fn sd_of_mean(samples: &[f64]) -> f64 {
    (sample_variance(samples) / samples.len() as f64).sqrt()
}

fn relative_error(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

impl Suite {
    pub fn new(config: SuiteConfig) -> Self {
        Suite { config, large: OnceLock::new(), moderate: OnceLock::new() }
    }

    pub fn config(&self) -> SuiteConfig {
        self.config
    }

    fn scaled(&self, full: usize) -> usize {
        if self.config.fast {
            full / 10
        } else {
            full
        }
    }

    fn widened(&self, tol: f64) -> f64 {
        if self.config.fast {
            tol * 10f64.sqrt()
        } else {
            tol
        }
    }

    fn seed_for(&self, stream: u64) -> u64 {
        derive_seed(self.config.seed, stream)
    }

    /// Runs one criterion; unknown ids yield no reports.
    pub fn run(&self, id: u8) -> Vec<CheckReport> {
        let reports = match id {
            1 => self.eulerian_exactness(),
            2 => self.rrt_odd_counts(),
            3 => self.tanny_identity(),
            4 => self.parity_moments(),
            5 => self.oracle_equivalence(),
            6 => self.representation(),
            7 => self.velocity_check(),
            8 => self.walk_clt(),
            9 => self.parity_clt(),
            10 => self.yule_simon_sizes(),
            11 => self.nu1_clt(),
            12 => self.variance_series(),
            13 => self.stable_limit(),
            14 => self.shape_frequencies(),
            _ => Vec::new(),
        };
        reports.into_iter().map(|mut r| {
            r.criterion = id;
            r
        }).collect()
    }

    pub fn run_all(&self) -> Vec<CheckReport> {
        CRITERIA.iter().flat_map(|c| self.run(c.id)).collect()
    }

    fn large_batch(&self) -> &[LargeRun] {
        self.large.get_or_init(|| {
            let n = self.scaled(100_000);
            let shapes = small_shapes();
            let law = StepLaw::dirac(int(1));
            replicate(self.seed_for(1000), 100, |_, rng| {
                let run = simulate(n, 0.5, &law, rng).expect("valid parameters");
                let census = forest_census(&run, 3);
                let mut nu = [0; 5];
                for (k, slot) in nu.iter_mut().enumerate() {
                    *slot = census.nu_k(k + 1);
                }
                LargeRun {
                    s_check: run.final_check(),
                    nu,
                    shapes: shapes.iter().map(|t| census.nu_shape(t)).collect(),
                }
            })
        })
    }

    fn moderate_batch(&self) -> &[ModerateRun] {
        self.moderate.get_or_init(|| {
            let n = self.scaled(10_000);
            let law = StepLaw::dirac(int(1));
            replicate(self.seed_for(1001), self.scaled(5000), |_, rng| {
                let summary = simulate(n, 0.5, &law, rng).expect("valid parameters").summary();
                ModerateRun { s_check: summary.s_check, nu1: summary.nu1 }
            })
        })
    }

    fn eulerian_exactness(&self) -> Vec<CheckReport> {
        let start = Instant::now();
        let mut checked = 0;
        let mut mismatches = 0;
        for n in 0..=30usize {
            for k in -1..=n as i64 {
                checked += 1;
                mismatches += usize::from(eulerian_number(n, k) != eulerian_explicit(n, k));
            }
        }
        let first = count_report("recurrence_vs_explicit_n_le_30", mismatches, checked);
        let row_mismatches =
            (0..=50).filter(|&n| eulerian_row(n).sum() != factorial(n)).count();
        let second = count_report("row_sums_equal_factorial_n_le_50", row_mismatches, 51);
        vec![first, second, runtime_report("runtime", start, 1.0)]
    }

    fn odd_count_tv(&self, name: &str, stream: u64, draw: impl Fn(&mut rand_chacha::ChaCha8Rng) -> i64 + Sync + Send) -> CheckReport {
        let m = self.scaled(100_000);
        let seed = self.seed_for(stream);
        let samples = replicate(seed, m, |_, rng| draw(rng));
        let target = odd_count_pmf(10).expect("n >= 1");
        let tv = tv_distance(&Histogram::from_integers(samples), &target);
        CheckReport::new(name, Statistic::TvDistance, tv, self.widened(0.01))
            .with_samples(m)
            .with_seed(seed)
    }

    fn rrt_odd_counts(&self) -> Vec<CheckReport> {
        let start = Instant::now();
        let tv = self.odd_count_tv("rrt_odd_count_tv", 2, |rng| {
            sample_rrt_parity(10, rng).expect("n >= 1").odd as i64
        });
        vec![tv.with_config(json!({ "n": 10 })), runtime_report("runtime", start, 5.0)]
    }

    fn tanny_identity(&self) -> Vec<CheckReport> {
        let tv = self.odd_count_tv("tanny_vs_odd_count_tv", 3, |rng| tanny_sample(9, rng) as i64);
        vec![tv.with_config(json!({ "uniforms": 9, "tree_size": 10 }))]
    }

    fn parity_moments(&self) -> Vec<CheckReport> {
        let moment = |n: usize, r: u32| delta_moment(n, r).expect("n >= 1");
        let mean_bad = (2..=40).filter(|&n| !moment(n, 1).is_zero()).count();
        let second_bad = (3..=40).filter(|&n| moment(n, 2) != ratio(n as i64, 3)).count();
        let fourth_bad =
            (1..=40).filter(|&n| moment(n, 4) > int(6 * (n * n) as i64)).count();
        vec![
            count_report("mean_zero_2_le_n_le_40", mean_bad, 39),
            count_report("second_moment_n_over_3_3_le_n_le_40", second_bad, 38),
            count_report("fourth_moment_le_6n2_n_le_40", fourth_bad, 40),
        ]
    }

    fn oracle_equivalence(&self) -> Vec<CheckReport> {
        let start = Instant::now();
        let m = self.scaled(100_000);
        let probabilities = [int(0), ratio(1, 4), half(), ratio(3, 4), int(1)];
        let laws = [StepLaw::dirac(int(1)), StepLaw::rademacher()];
        let mut mean_bad = 0;
        let mut configs = 0;
        let mut worst = (0.0f64, json!(null));
        let mut per_config = Vec::new();
        for (li, law) in laws.iter().enumerate() {
            for (pi, p) in probabilities.iter().enumerate() {
                for n in 1..=6usize {
                    configs += 1;
                    let exact = brute_force_walk_pmf(n, p, law).expect("within caps");
                    let m1 = law.m1().expect("finite mean");
                    mean_bad += usize::from(exact.mean() != exact_mean(n, p, m1).expect("valid p"));
                    let stream = 5000 + (li * 100 + pi * 10 + n) as u64;
                    let pf = f(p);
                    let finals = replicate(self.seed_for(stream), m, |_, rng| {
                        simulate(n, pf, law, rng).expect("valid parameters").final_check()
                    });
                    let hist = Histogram::from_values(&finals).expect("integer law");
                    let tv = tv_distance(&hist, &exact);
                    let cfg = json!({ "n": n, "p": rational::render(p), "mu": law.to_string() });
                    if tv > worst.0 {
                        worst = (tv, cfg.clone());
                    }
                    per_config.push(json!({ "config": cfg, "tv": tv }));
                }
            }
        }
        vec![
            count_report("oracle_mean_equals_exact_mean", mean_bad, configs),
            CheckReport::new("max_tv_simulation_vs_oracle", Statistic::TvDistance, worst.0, self.widened(0.02))
                .with_samples(m)
                .with_seed(self.config.seed)
                .with_config(worst.1)
                .with_details(json!({ "per_config": per_config })),
            runtime_report("runtime", start, 60.0),
        ]
    }

    fn representation(&self) -> Vec<CheckReport> {
        let n = self.scaled(100_000);
        let reps = self.scaled(100);
        let laws = [
            StepLaw::dirac(int(1)),
            StepLaw::rademacher(),
            StepLaw::gaussian(int(0), int(1)).expect("positive variance"),
        ];
        laws.iter()
            .enumerate()
            .map(|(i, law)| {
                let seed = self.seed_for(600 + i as u64);
                let residuals = replicate(seed, reps, |_, rng| {
                    let run = simulate(n, 0.5, law, rng).expect("valid parameters");
                    let residual = representation_residual(&run);
                    if law.is_integer_valued() {
                        residual
                    } else {
                        residual / (1.0 + run.final_check().abs())
                    }
                });
                let worst = residuals.iter().copied().fold(0.0, f64::max);
                let (statistic, threshold) = if law.is_integer_valued() {
                    (Statistic::AbsoluteError, 0.0)
                } else {
                    (Statistic::RelativeError, 1e-9)
                };
                CheckReport::new(format!("max_residual_{}", law), statistic, worst, threshold)
                    .with_samples(reps)
                    .with_seed(seed)
                    .with_config(json!({ "n": n, "p": "1/2", "mu": law.to_string() }))
            })
            .collect()
    }

    fn velocity_check(&self) -> Vec<CheckReport> {
        let n = self.scaled(100_000) as f64;
        let ratios: Vec<f64> = self.large_batch().iter().map(|r| r.s_check / n).collect();
        let target = f(&velocity(&half(), &int(1)).expect("valid p"));
        let report = moment_check(&ratios, target, sd_of_mean(&ratios), 4.0).expect("100 runs");
        vec![CheckReport { name: "mean_s_over_n_vs_velocity".into(), ..report }
            .with_seed(self.seed_for(1000))
            .with_config(json!({ "n": n, "p": "1/2", "mu": "dirac:1" }))]
    }

    fn walk_clt(&self) -> Vec<CheckReport> {
        let n = self.scaled(10_000) as f64;
        let target = f(&clt_variance(&half(), &int(1), &int(1)).expect("valid"));
        let speed = f(&velocity(&half(), &int(1)).expect("valid p"));
        let centred: Vec<f64> =
            self.moderate_batch().iter().map(|r| (r.s_check - n * speed) / n.sqrt()).collect();
        let seed = self.seed_for(1001);
        // Š(n) ≡ n mod 2 for unit steps
        let mut smoothed = centred.clone();
        lattice_jitter(&mut smoothed, 2.0 / n.sqrt(), &mut replica_rng(seed, u64::MAX));
        let cfg = json!({ "n": n, "p": "1/2", "mu": "dirac:1" });
        let var = sample_variance(&centred);
        vec![
            CheckReport::new("variance_vs_4_9", Statistic::RelativeError, relative_error(var, target), self.widened(0.05))
                .with_samples(centred.len())
                .with_seed(seed)
                .with_config(cfg.clone())
                .with_details(json!({ "sample_variance": var, "target": target })),
            CheckReport { name: "ks_vs_normal_0_4_9".into(), ..ks_normal(&smoothed, 0.0, target).expect("valid") }
                .with_seed(seed)
                .with_config(cfg),
        ]
    }

    fn parity_clt(&self) -> Vec<CheckReport> {
        let n = self.scaled(10_000);
        let m = self.scaled(5000);
        let seed = self.seed_for(9);
        let mut scaled = replicate(seed, m, |_, rng| {
            sample_rrt_parity(n, rng).expect("n >= 1").delta as f64 / (n as f64).sqrt()
        });
        // Δ(T_n) ≡ n mod 2
        lattice_jitter(&mut scaled, 2.0 / (n as f64).sqrt(), &mut replica_rng(seed, u64::MAX));
        let report = ks_normal(&scaled, 0.0, 1.0 / 3.0).expect("valid");
        vec![CheckReport { name: "ks_delta_over_sqrt_n_vs_normal_0_1_3".into(), ..report }
            .with_seed(seed)
            .with_config(json!({ "n": n }))]
    }

    fn yule_simon_sizes(&self) -> Vec<CheckReport> {
        let n = self.scaled(100_000) as f64;
        let batch = self.large_batch();
        let seed = self.seed_for(1000);
        let mut reports: Vec<CheckReport> = (1..=5usize)
            .map(|k| {
                let x: Vec<f64> = batch.iter().map(|r| r.nu[k - 1] as f64 / (0.5 * n)).collect();
                let target = f(&yule_simon_pmf(k, &half()).expect("valid p"));
                let report = moment_check(&x, target, sd_of_mean(&x), 3.0).expect("100 runs");
                CheckReport { name: format!("nu_{k}_over_pn_vs_yule_simon"), ..report }.with_seed(seed)
            })
            .collect();
        let x: Vec<f64> = batch.iter().map(|r| r.nu[0] as f64 / n).collect();
        let report = moment_check(&x, 1.0 / 3.0, sd_of_mean(&x), 4.0).expect("100 runs");
        reports.push(CheckReport { name: "nu_1_over_n_vs_1_3".into(), ..report }.with_seed(seed));
        reports
    }

    fn nu1_clt(&self) -> Vec<CheckReport> {
        let n = self.scaled(10_000) as f64;
        let target = f(&nu1_clt_variance(&half()).expect("valid p"));
        let centred: Vec<f64> =
            self.moderate_batch().iter().map(|r| (r.nu1 as f64 - n / 3.0) / n.sqrt()).collect();
        let var = sample_variance(&centred);
        vec![CheckReport::new("nu1_variance_vs_5_18", Statistic::RelativeError, relative_error(var, target), self.widened(0.05))
            .with_samples(centred.len())
            .with_seed(self.seed_for(1001))
            .with_config(json!({ "n": n, "p": "1/2" }))
            .with_details(json!({ "sample_variance": var, "target": target }))]
    }

    fn variance_series(&self) -> Vec<CheckReport> {
        let p = half();
        let kmax = asymptotics::DEFAULT_TRUNCATION;
        let mut reports = Vec::new();
        for (m1, m2) in [(1, 1), (0, 1), (1, 2)] {
            let (m1, m2) = (int(m1), int(m2));
            let cfg = json!({ "p": "1/2", "m1": rational::render(&m1), "m2": rational::render(&m2), "K": kmax });
            let series = sigma_sq_series(&p, &m1, &m2, kmax).expect("valid");
            let target = f(&clt_variance(&p, &m1, &m2).expect("valid"));
            reports.push(
                CheckReport::new(format!("sigma_series_vs_clt_variance_m1_{m1}_m2_{m2}"), Statistic::RelativeError, relative_error(series.value, target), 1e-3)
                    .with_config(cfg.clone())
                    .with_details(json!({ "series": series.value, "target": target, "tail_estimate": series.tail_estimate })),
            );
            let centred = centred_variance_series(&p, &m2, kmax).expect("valid");
            let target = f(&(&m2 / (int(3) - int(2) * &p)));
            reports.push(
                CheckReport::new(format!("centred_series_vs_m2_over_3_minus_2p_m1_{m1}_m2_{m2}"), Statistic::RelativeError, relative_error(centred.value, target), 1e-3)
                    .with_config(cfg)
                    .with_details(json!({ "series": centred.value, "target": target, "tail_estimate": centred.tail_estimate })),
            );
        }
        reports
    }

    fn stable_limit(&self) -> Vec<CheckReport> {
        let alpha_exact = ratio(3, 2);
        let alpha = f(&alpha_exact);
        let law = StepLaw::pareto_symmetric(alpha_exact).expect("alpha > 0");
        let n = self.scaled(10_000);
        let m = self.scaled(20_000);
        let a_n = (n as f64).powf(1.0 / alpha);
        let tol = self.widened(0.03);

        // oracle: exponent of the i.i.d. sums, at the reference point THETA0
        let iid_seed = self.seed_for(1300);
        let iid = replicate(iid_seed, m, |_, rng| {
            let sum: crate::walk_engine::CompensatedSum = (0..n).map(|_| law.sample(rng)).collect();
            sum.value() / a_n
        });
        const THETA0: f64 = 1.0;
        let cf0 = empirical_cf(&iid, THETA0);
        let phi1 = -cf0.value.re.ln() / THETA0.powf(alpha);
        let spec = StableSpec::symmetric(alpha, phi1);

        let walk_seed = self.seed_for(1301);
        let scaled = replicate(walk_seed, m, |_, rng| {
            simulate(n, 0.5, &law, rng).expect("valid parameters").final_check() / a_n
        });

        let mut reports = Vec::new();
        for theta in [0.5, 1.0, 2.0] {
            let (exponent, tail) = match (&spec, cf0.value.re > 0.0) {
                (Ok(spec), true) => stable_check_exponent(theta, &half(), spec, 50).expect("valid"),
                _ => (num_complex::Complex64::new(f64::NAN, 0.0), f64::NAN),
            };
            let predicted = (-exponent).exp();
            let empirical = empirical_cf(&scaled, theta);
            let gap = (empirical.value.re - predicted.re).abs().max((empirical.value.im - predicted.im).abs());
            reports.push(
                CheckReport::new(format!("cf_at_theta_{theta}"), Statistic::AbsoluteError, gap, tol)
                    .with_samples(m)
                    .with_seed(walk_seed)
                    .with_config(json!({ "n": n, "p": "1/2", "mu": law.to_string(), "theta": theta, "K": 50 }))
                    .with_details(json!({
                        "empirical": [empirical.value.re, empirical.value.im],
                        "empirical_sd": [empirical.sd_re, empirical.sd_im],
                        "predicted": [predicted.re, predicted.im],
                        "phi1_estimate": phi1,
                        "iid_seed": iid_seed,
                        "truncation_tail": tail,
                    })),
            );
        }
        reports
    }

    fn shape_frequencies(&self) -> Vec<CheckReport> {
        let n = self.scaled(100_000) as f64;
        let batch = self.large_batch();
        let seed = self.seed_for(1000);
        let p = half();
        let mut reports: Vec<CheckReport> = small_shapes()
            .iter()
            .enumerate()
            .map(|(i, tau)| {
                let x: Vec<f64> = batch.iter().map(|r| r.shapes[i] as f64 / n).collect();
                let target = f(&tree_freq_limit(tau, &p).expect("valid p"));
                let report = moment_check(&x, target, sd_of_mean(&x), 3.0).expect("100 runs");
                CheckReport { name: format!("nu_shape_{:?}_over_n", tau.parents()), ..report }
                    .with_seed(seed)
                    .with_config(json!({ "n": n, "p": "1/2", "shape_parents": tau.parents() }))
            })
            .collect();

        let enumerated = shape_weight_sum_enumerated(&p, 9).expect("valid");
        let by_size = shape_weight_sum_by_size(&p, 9).expect("valid");
        let long_by_size = shape_weight_sum_by_size(&p, 200).expect("valid");
        let closed = shape_weight_closed_form(&p).expect("valid");
        let reference = shape_weight_reference_constant(&p).expect("valid");
        let describe = |x: &Rational| json!({ "exact": rational::render(x), "decimal": f(x) });
        reports.push(
            count_report("shape_weight_sum_enumeration_vs_size_grouping", usize::from(enumerated != by_size), 1)
                .with_config(json!({ "p": "1/2", "max_size": 9 }))
                .with_details(json!({
                    "enumerated_size_le_9": describe(&enumerated),
                    "grouped_by_size_le_200": f(&long_by_size),
                    "size_grouped_closed_form": describe(&closed),
                    "reference_constant": describe(&reference),
                })),
        );
        reports
    }
}
