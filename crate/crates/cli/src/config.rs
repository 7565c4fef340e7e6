//! Canonical experiment configuration, used for output headers and hashing.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

/// Everything that determines the bytes a command writes.
///
/// Defaults: `reps = 1`, `seed = 0`, `truncation = 10000`, `shape_cap = 6`,
/// `fast = false`; unset fields are omitted from the canonical string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    /// Subcommand path, e.g. `exact odd-pmf`.
    pub command: String,
    pub n: Option<usize>,
    /// Exact rational, rendered `a/b`.
    pub p: Option<String>,
    /// Step law in the `rademacher|dirac:C|uniform|gauss:M,V|pareto:A` grammar.
    pub mu: Option<String>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub truncation: Option<usize>,
    pub shape_cap: Option<usize>,
    /// Extra numeric options (`alpha`, `theta`, `phi1`, `traj_every`, ...)
    /// in a fixed order chosen by the caller.
    pub extra: Vec<(String, String)>,
    pub output: Option<PathBuf>,
    pub fast: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseConfigError(pub String);

impl fmt::Display for ParseConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed canonical config: {}", self.0)
    }
}

impl std::error::Error for ParseConfigError {}

impl ExperimentConfig {
    pub fn new(command: &str) -> Self {
        ExperimentConfig { command: command.to_string(), ..Default::default() }
    }

    /// `key=value` pairs joined by `;`, excluding the output path.
    fn identity(&self) -> Vec<(String, String)> {
        let mut pairs = vec![("command".to_string(), self.command.clone())];
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("n", self.n.map(|v| v.to_string()));
        push("p", self.p.clone());
        push("mu", self.mu.clone());
        push("reps", self.reps.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("truncation", self.truncation.map(|v| v.to_string()));
        push("shape_cap", self.shape_cap.map(|v| v.to_string()));
        for (k, v) in &self.extra {
            push(&format!("x.{k}"), Some(v.clone()));
        }
        if self.fast {
            push("fast", Some("true".into()));
        }
        pairs
    }

    pub fn canonical(&self) -> String {
        let mut pairs = self.identity();
        if let Some(out) = &self.output {
            pairs.push(("output".into(), out.display().to_string()));
        }
        join(&pairs)
    }

    pub fn canonical_without_output(&self) -> String {
        join(&self.identity())
    }

    /// First 16 hex digits of SHA-256 over the canonical string without the
    /// output path, so the same experiment hashes the same wherever it lands.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_without_output().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn join(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for ExperimentConfig {
    type Err = ParseConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut config = ExperimentConfig::default();
        let mut seen_command = false;
        for field in s.split(';') {
            let (key, value) =
                field.split_once('=').ok_or_else(|| ParseConfigError(field.to_string()))?;
            let bad = || ParseConfigError(field.to_string());
            let value = value.to_string();
            match key {
                "command" => {
                    config.command = value;
                    seen_command = true;
                }
                "n" => config.n = Some(value.parse().map_err(|_| bad())?),
                "p" => config.p = Some(value),
                "mu" => config.mu = Some(value),
                "reps" => config.reps = Some(value.parse().map_err(|_| bad())?),
                "seed" => config.seed = Some(value.parse().map_err(|_| bad())?),
                "truncation" => config.truncation = Some(value.parse().map_err(|_| bad())?),
                "shape_cap" => config.shape_cap = Some(value.parse().map_err(|_| bad())?),
                "fast" => config.fast = value.parse().map_err(|_| bad())?,
                "output" => config.output = Some(PathBuf::from(value)),
                other => match other.strip_prefix("x.") {
                    Some(k) => config.extra.push((k.to_string(), value)),
                    None => return Err(bad()),
                },
            }
        }
        if !seen_command {
            return Err(ParseConfigError("missing command".into()));
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            command: "simulate".into(),
            n: Some(100),
            p: Some("1/2".into()),
            mu: Some("gauss:0,1".into()),
            reps: Some(4),
            seed: Some(9),
            extra: vec![("traj_every".into(), "10".into())],
            output: Some(PathBuf::from("/tmp/x.csv")),
            ..Default::default()
        }
    }

    #[test]
    fn canonical_round_trip() {
        let c = sample();
        let text = c.canonical();
        assert_eq!(
            text,
            "command=simulate;n=100;p=1/2;mu=gauss:0,1;reps=4;seed=9;x.traj_every=10;output=/tmp/x.csv"
        );
        assert_eq!(text.parse::<ExperimentConfig>().unwrap(), c);
        let fast = ExperimentConfig { fast: true, ..ExperimentConfig::new("verify all") };
        assert_eq!(fast.canonical().parse::<ExperimentConfig>().unwrap(), fast);
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = sample();
        let b = ExperimentConfig { output: None, ..sample() };
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let c = ExperimentConfig { seed: Some(10), ..sample() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_malformed() {
        assert!("n=3".parse::<ExperimentConfig>().is_err());
        assert!("command=x;n=abc".parse::<ExperimentConfig>().is_err());
        assert!("command=x;bogus=1".parse::<ExperimentConfig>().is_err());
    }
}
