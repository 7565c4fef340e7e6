//! `counterwalk`: simulations, exact laws, limit constants and the
//! acceptance suite from the command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage error,
//! 3 malformed step-law spec, 4 request beyond a computational cap,
//! 5 I/O failure.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use counterwalk::asymptotics::{self, stable_check_exponent, LimitConstants, StableSpec};
use counterwalk::eulerian::{self, EulerianTable};
use counterwalk::rational::{self, parse_rational, Rational};
use counterwalk::recursive_tree::sample_rrt_parity;
use counterwalk::verify::suite::{Suite, SuiteConfig, CRITERIA};
use counterwalk::verify::{brute_force_walk_pmf, VerifyError};
use counterwalk::walk_engine::{replicate, simulate, StepLaw};

use config::ExperimentConfig;
use output::Output;

/// Largest `n` for `table eulerian`, `exact odd-pmf` and `exact delta-pmf`.
const MAX_EXACT_N: usize = 1000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    MuSpec(String),
    #[error("{0}")]
    Cap(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::MuSpec(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "counterwalk", version, about = "Counterbalanced random walks, exact laws and limit checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the counterbalanced walk and its reinforced twin.
    Simulate(SimulateArgs),
    /// Exact rational laws.
    #[command(subcommand)]
    Exact(ExactCommand),
    /// Tables of exact integers.
    #[command(subcommand)]
    Table(TableCommand),
    /// Random combinatorial samples.
    #[command(subcommand)]
    Sample(SampleCommand),
    /// Closed-form limit constants for (p, mu).
    Limits(LimitsArgs),
    /// Acceptance checks.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_parser = parse_probability)]
    p: Rational,
    /// rademacher | dirac:C | uniform | gauss:MEAN,VAR | pareto:ALPHA
    #[arg(long)]
    mu: String,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write partial sums every T steps to `<out stem>.traj.csv`.
    #[arg(long, value_name = "T")]
    traj_every: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Subcommand)]
enum ExactCommand {
    /// Law of the odd-depth vertex count of a recursive tree on n vertices.
    OddPmf {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Law of the parity difference Even - Odd.
    DeltaPmf {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Law of the walk at time n by exhaustive enumeration (n <= 7).
    WalkOracle {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_probability)]
        p: Rational,
        #[arg(long)]
        mu: String,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
enum TableCommand {
    /// Row n of the Eulerian triangle.
    Eulerian {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
enum SampleCommand {
    /// Parity census of random recursive trees.
    Rrt {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct LimitsArgs {
    #[command(subcommand)]
    stable: Option<LimitsCommand>,
    #[arg(long, value_parser = parse_probability, required = true)]
    p: Option<Rational>,
    #[arg(long, required = true)]
    mu: Option<String>,
    /// Number of per-size constants to list.
    #[arg(long, default_value_t = 5)]
    table_len: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Subcommand)]
enum LimitsCommand {
    /// Characteristic exponent of the stable limit for heavy-tailed steps.
    Stable {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_parser = parse_probability)]
        p: Rational,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// Exponent of the step law's stable limit at theta = 1 (symmetric).
        #[arg(long, default_value_t = 1.0)]
        phi1: f64,
        /// Number of tree-size shells.
        #[arg(long, default_value_t = 50)]
        kmax: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Run the acceptance criteria and print one JSON report per line.
    All {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Ten times smaller samples with correspondingly wider fixed bands.
        #[arg(long)]
        fast: bool,
        /// Run a single criterion.
        #[arg(long, value_name = "ID")]
        only: Option<u8>,
        #[command(flatten)]
        out: OutArg,
    },
}

fn parse_probability(s: &str) -> Result<Rational, String> {
    let p = parse_rational(s).map_err(|e| e.to_string())?;
    let zero = rational::int(0);
    let one = rational::int(1);
    if p < zero || p > one {
        return Err(format!("p = {} is not in [0, 1]", rational::render(&p)));
    }
    Ok(p)
}

fn parse_law(spec: &str) -> Result<StepLaw, CliError> {
    spec.parse().map_err(|e: counterwalk::walk_engine::WalkError| CliError::MuSpec(e.to_string()))
}

fn require_positive(what: &str, n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage(format!("--{what} must be at least 1")));
    }
    Ok(())
}

fn exact_cap(n: usize) -> Result<(), CliError> {
    if n > MAX_EXACT_N {
        return Err(CliError::Cap(format!("n = {n} exceeds the exact-table cap {MAX_EXACT_N}")));
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("COUNTERWALK_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("COUNTERWALK_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Exact(cmd) => run_exact(cmd),
        Command::Table(TableCommand::Eulerian { n, out }) => {
            exact_cap(n)?;
            let mut config = ExperimentConfig::new("table eulerian");
            config.n = Some(n);
            config.output = out.out;
            let mut o = Output::new(&config, "k,value");
            let row = EulerianTable::global().row(n);
            if n == 0 {
                o.row(format!("-1,{}", row.get(-1)));
            } else {
                for k in 0..n as i64 {
                    o.row(format!("{k},{}", row.get(k)));
                }
            }
            o.finish()
        }
        Command::Sample(SampleCommand::Rrt { n, reps, seed, out }) => {
            require_positive("n", n)?;
            let mut config = ExperimentConfig::new("sample rrt");
            config.n = Some(n);
            config.reps = Some(reps);
            config.seed = Some(seed);
            config.output = out.out;
            let profiles = replicate(seed, reps, |_, rng| sample_rrt_parity(n, rng).expect("n >= 1"));
            let mut o = Output::new(&config, "rep,even,odd,delta");
            for (rep, prof) in profiles.iter().enumerate() {
                o.row(format!("{rep},{},{},{}", prof.even, prof.odd, prof.delta));
            }
            o.finish()
        }
        Command::Limits(args) => run_limits(args),
        Command::Verify(VerifyCommand::All { seed, fast, only, out }) => run_verify(seed, fast, only, out.out),
    }
}

fn run_simulate(args: SimulateArgs) -> Result<(), CliError> {
    require_positive("n", args.n)?;
    let law = parse_law(&args.mu)?;
    if let Some(t) = args.traj_every {
        require_positive("traj-every", t)?;
        if args.out.out.is_none() {
            return Err(CliError::Usage("--traj-every needs --out to name the trajectory file".into()));
        }
    }
    let mut config = ExperimentConfig::new("simulate");
    config.n = Some(args.n);
    config.p = Some(rational::render(&args.p));
    config.mu = Some(law.to_string());
    config.reps = Some(args.reps);
    config.seed = Some(args.seed);
    if let Some(t) = args.traj_every {
        config.extra.push(("traj_every".into(), t.to_string()));
    }
    config.output = args.out.out.clone();

    let p = rational::to_f64(&args.p);
    let n = args.n;
    let every = args.traj_every;
    let results = replicate(args.seed, args.reps, |_, rng| {
        let run = simulate(n, p, &law, rng).expect("validated parameters");
        let traj: Vec<(usize, f64, f64)> = match every {
            Some(t) => (1..=n)
                .filter(|step| step % t == 0 || *step == n)
                .map(|step| (step, run.s_check[step - 1], run.s_hat[step - 1]))
                .collect(),
            None => Vec::new(),
        };
        (run.summary(), traj)
    });

    let mut o = Output::new(&config, "rep,n,i_n,S_check,S_hat,nu1");
    for (rep, (s, _)) in results.iter().enumerate() {
        o.row(format!("{rep},{},{},{},{},{}", s.n, s.i_n, s.s_check, s.s_hat, s.nu1));
    }
    if every.is_some() {
        let path = output::trajectory_path(args.out.out.as_ref().expect("checked above"));
        let mut traj_config = config.clone();
        traj_config.output = Some(path);
        let mut t = Output::new(&traj_config, "rep,step,S_check,S_hat");
        for (rep, (_, traj)) in results.iter().enumerate() {
            for (step, sc, sh) in traj {
                t.row(format!("{rep},{step},{sc},{sh}"));
            }
        }
        t.finish()?;
    }
    o.finish()
}

fn run_exact(cmd: ExactCommand) -> Result<(), CliError> {
    match cmd {
        ExactCommand::OddPmf { n, out } => parity_law("exact odd-pmf", n, out, false),
        ExactCommand::DeltaPmf { n, out } => parity_law("exact delta-pmf", n, out, true),
        ExactCommand::WalkOracle { n, p, mu, out } => {
            let law = parse_law(&mu)?;
            let mut config = ExperimentConfig::new("exact walk-oracle");
            config.n = Some(n);
            config.p = Some(rational::render(&p));
            config.mu = Some(law.to_string());
            config.output = out.out;
            let pmf = brute_force_walk_pmf(n, &p, &law).map_err(|e| match e {
                VerifyError::HorizonOutOfRange { n: 0, .. } => CliError::Usage("--n must be at least 1".into()),
                other => CliError::Cap(other.to_string()),
            })?;
            let mut o = Output::new(&config, "value,numerator,denominator");
            for (value, mass) in pmf.iter() {
                o.row(format!("{value},{},{}", mass.numer(), mass.denom()));
            }
            o.finish()
        }
    }
}

/// Rows share the unreduced denominator `(n−1)!` and Eulerian numerators.
fn parity_law(command: &str, n: usize, out: OutArg, as_delta: bool) -> Result<(), CliError> {
    require_positive("n", n)?;
    exact_cap(n)?;
    let mut config = ExperimentConfig::new(command);
    config.n = Some(n);
    config.output = out.out;
    let row = EulerianTable::global().row(n - 1);
    let denom = eulerian::factorial(n - 1);
    let mut rows: Vec<(i64, String)> = (0..n as i64)
        .filter_map(|ell| {
            let count = row.get(ell - 1);
            let value = if as_delta { n as i64 - 2 * ell } else { ell };
            (count != 0u32.into()).then(|| (value, format!("{value},{count},{denom}")))
        })
        .collect();
    rows.sort_by_key(|(value, _)| *value);
    let mut o = Output::new(&config, "value,numerator,denominator");
    for (_, line) in rows {
        o.row(line);
    }
    o.finish()
}

fn run_limits(args: LimitsArgs) -> Result<(), CliError> {
    if let Some(LimitsCommand::Stable { alpha, p, theta, phi1, kmax, out }) = args.stable {
        return run_limits_stable(alpha, p, theta, phi1, kmax, out);
    }
    let p = args.p.expect("required unless a subcommand is given");
    let mu = args.mu.expect("required unless a subcommand is given");
    if p == rational::int(0) {
        return Err(CliError::Usage(
            "limits needs p > 0: without innovations the walk stays a single tree; use `exact delta-pmf` for p = 0".into(),
        ));
    }
    let law = parse_law(&mu)?;
    let mut config = ExperimentConfig::new("limits");
    config.p = Some(rational::render(&p));
    config.mu = Some(law.to_string());
    config.extra.push(("table_len".into(), args.table_len.to_string()));
    config.output = args.out.out;

    let limits = LimitConstants::evaluate(&p, law.m1(), law.m2(), args.table_len)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut o = Output::new(&config, "name,exact,decimal");
    let mut emit = |name: String, value: &Rational| {
        o.row(format!("{name},{},{}", rational::render(value), rational::to_f64(value)));
    };
    emit("p".into(), &limits.p);
    let optional = [
        ("m1", &limits.m1),
        ("m2", &limits.m2),
        ("rho", &limits.rho),
        ("velocity", &limits.velocity),
        ("clt_variance", &limits.clt_variance),
        ("nu1_variance", &limits.nu1_variance),
    ];
    for (name, value) in optional {
        if let Some(value) = value {
            emit(name.into(), value);
        }
    }
    for (k, value) in &limits.sigma_sq {
        emit(format!("sigma_sq_{k}"), value);
    }
    if limits.rho.is_some() {
        for k in 1..=args.table_len {
            let mass = asymptotics::yule_simon_pmf(k, &p).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(format!("yule_simon_{k}"), &mass);
        }
    }
    o.finish()
}

fn run_limits_stable(alpha: f64, p: Rational, theta: f64, phi1: f64, kmax: usize, out: OutArg) -> Result<(), CliError> {
    let usage = |e: asymptotics::AsymptoticsError| CliError::Usage(e.to_string());
    let spec = StableSpec::symmetric(alpha, phi1).map_err(usage)?;
    let mut config = ExperimentConfig::new("limits stable");
    config.p = Some(rational::render(&p));
    config.truncation = Some(kmax);
    config.extra = vec![
        ("alpha".into(), alpha.to_string()),
        ("theta".into(), theta.to_string()),
        ("phi1".into(), phi1.to_string()),
    ];
    config.output = out.out;
    let (exponent, tail) = stable_check_exponent(theta, &p, &spec, kmax).map_err(usage)?;
    let cf = (-exponent).exp();
    let mut o = Output::new(&config, "name,value");
    for (name, value) in [
        ("exponent_re", exponent.re),
        ("exponent_im", exponent.im),
        ("truncation_tail", tail),
        ("cf_re", cf.re),
        ("cf_im", cf.im),
    ] {
        // + 0.0 turns -0 into 0
        o.row(format!("{name},{}", value + 0.0));
    }
    o.finish()
}

fn run_verify(seed: u64, fast: bool, only: Option<u8>, out: Option<PathBuf>) -> Result<(), CliError> {
    if let Some(id) = only {
        if !CRITERIA.iter().any(|c| c.id == id) {
            return Err(CliError::Usage(format!("no criterion {id}; valid ids are 1..={}", CRITERIA.len())));
        }
    }
    let mut config = ExperimentConfig::new("verify all");
    config.seed = Some(seed);
    config.fast = fast;
    if let Some(id) = only {
        config.extra.push(("only".into(), id.to_string()));
    }
    config.output = out;
    let suite = Suite::new(SuiteConfig { seed, fast });
    let reports = match only {
        Some(id) => suite.run(id),
        None => suite.run_all(),
    };
    let mut o = Output::json_lines(&config);
    for report in &reports {
        o.row(report.to_json_line());
    }
    o.finish()?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total: reports.len() });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("counterwalk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
