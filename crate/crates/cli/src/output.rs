//! Buffered output with the provenance header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::CliError;

pub struct Output {
    path: Option<PathBuf>,
    buf: String,
}

fn provenance(config: &ExperimentConfig) -> (String, String) {
    let seed = config.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    (seed, config.hash())
}

impl Output {
    /// CSV: a `#` comment line with version, seed and config hash, then the
    /// column header.
    pub fn new(config: &ExperimentConfig, columns: &str) -> Self {
        let (seed, hash) = provenance(config);
        let buf = format!(
            "# counterwalk {} seed={seed} config={hash}\n{columns}\n",
            env!("CARGO_PKG_VERSION")
        );
        Output { path: config.output.clone(), buf }
    }

    /// JSON lines: the first object carries the same provenance fields.
    pub fn json_lines(config: &ExperimentConfig) -> Self {
        let (seed, hash) = provenance(config);
        let header = serde_json::json!({
            "counterwalk": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": hash,
            "canonical": config.canonical_without_output(),
        });
        Output { path: config.output.clone(), buf: format!("{header}\n") }
    }

    pub fn row(&mut self, line: impl AsRef<str>) {
        self.buf.push_str(line.as_ref());
        self.buf.push('\n');
    }

    pub fn finish(self) -> Result<(), CliError> {
        match &self.path {
            Some(path) => fs::write(path, &self.buf).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            }),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(self.buf.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
            }
        }
    }
}

/// `runs.csv` → `runs.traj.csv`.
pub fn trajectory_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.traj.csv"))
}
