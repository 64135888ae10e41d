//! Command-line and config-file parameters.
//!
//! Every parameter can come from a flag or from a flat `key = value` file
//! passed with `--config`. Flags win over file values, file values win over
//! the built-in defaults. A run manifest written by this tool is accepted as
//! a config file as well; its `parameters` table is used.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use spinbath_core::experiments::DEFAULT_BURN_IN;
use spinbath_core::verify::VerifyOptions;
use spinbath_core::{Branch, RunConfig, Scenario, TimeGrid};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "spinbath", version, about = "Spin-bath dephasing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single global run: log10 |Lambda(t)/Lambda(0)| for one random observable.
    Run(Params),
    /// Local decoherence: log10 |r(t)| for one random bath.
    Local(Params),
    /// Global runs over a list of seeds, summarized per run.
    Ensemble(Params),
    /// One global run per bath size.
    Scaling(Params),
    /// Check the product engine against the brute-force oracles.
    Verify(Params),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::Local(_) => "local",
            Command::Ensemble(_) => "ensemble",
            Command::Scaling(_) => "scaling",
            Command::Verify(_) => "verify",
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Command::Run(p)
            | Command::Local(p)
            | Command::Ensemble(p)
            | Command::Scaling(p)
            | Command::Verify(p) => p,
        }
    }
}

/// All parameters; each subcommand reads the ones it needs.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    /// Bath size N [default: 100; 20 for `local`]
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampling scenario: a, b, c or restricted-obs [default: a]
    #[arg(long)]
    pub scenario: Option<String>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// End of the time grid (the grid starts at 0) [default: 100]
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of grid intervals; the grid has steps + 1 points [default: 1000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Product function: 0 = Gamma_0, 1 = Gamma_1 [default: 0]
    #[arg(long)]
    pub branch: Option<u8>,
    /// Leading fraction of the grid excluded from statistics [default: 0.1]
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Number of ensemble seeds, counting up from --seed [default: 20]
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Comma-separated bath sizes for `scaling` [default: 100,1000,10000]
    #[arg(long)]
    pub ns: Option<String>,
    /// Largest bath size checked by `verify` [default: 8]
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Random instances per bath size in `verify` [default: 20]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Error tolerance for `verify` [default: 1e-9]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Output CSV path [default: spinbath-<subcommand>.csv]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Manifest path [default: <out>.manifest.json]
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Flat key = value config file, or a manifest from an earlier run
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($cli:expr, $file:expr, $($field:ident),*) => {
        Params {
            $($field: $cli.$field.clone().or_else(|| $file.$field.clone()),)*
        }
    };
}

impl Params {
    /// Flag values override file values field by field.
    pub fn merged_over(&self, file: &Params) -> Params {
        merge_fields!(
            self, file, n, scenario, seed, t_max, steps, branch, burn_in, seeds, ns, max_n,
            trials, tolerance, out, manifest, threads, config
        )
    }

    /// The reproducibility-relevant parameters (no paths, no thread count).
    pub fn reproducible(&self) -> Params {
        Params {
            out: None,
            manifest: None,
            threads: None,
            config: None,
            ..self.clone()
        }
    }
}

fn usage(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{key}: {msg}"))
}

/// Reads a config file: either flat `key = value` text or a manifest JSON.
pub fn read_config_file(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| usage("config", format!("{}: {e}", path.display())))?;
        let params = value
            .get("parameters")
            .ok_or_else(|| usage("config", "manifest has no `parameters` table"))?;
        return serde_json::from_value(params.clone()).map_err(|e| usage("config", e));
    }
    toml::from_str(&text).map_err(|e| usage("config", e.message()))
}

/// Applies `--config` (if any) beneath the flags.
pub fn parse_config(cli: &Params) -> Result<Params, CliError> {
    match &cli.config {
        Some(path) => Ok(cli.merged_over(&read_config_file(path)?)),
        None => Ok(cli.clone()),
    }
}

impl Params {
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        self.scenario
            .as_deref()
            .unwrap_or("a")
            .parse()
            .map_err(|e| usage("scenario", e))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn n_or(&self, default: usize) -> Result<usize, CliError> {
        match self.n.unwrap_or(default) {
            0 => Err(usage("n", "bath size must be at least 1")),
            n => Ok(n),
        }
    }

    pub fn branch(&self) -> Result<Branch, CliError> {
        let b = self.branch.unwrap_or(0);
        Branch::from_index(b).ok_or_else(|| usage("branch", format!("must be 0 or 1, got {b}")))
    }

    pub fn burn_in(&self) -> Result<f64, CliError> {
        let f = self.burn_in.unwrap_or(DEFAULT_BURN_IN);
        if f > 0.0 && f < 1.0 {
            Ok(f)
        } else {
            Err(usage("burn-in", format!("must lie in (0, 1), got {f}")))
        }
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        let t_max = self.t_max.unwrap_or(100.0);
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(usage("t-max", format!("must be positive, got {t_max}")));
        }
        let steps = self.steps.unwrap_or(1000);
        if steps == 0 {
            return Err(usage("steps", "must be at least 1"));
        }
        TimeGrid::new(0.0, t_max, steps + 1).map_err(|e| usage("steps", e))
    }

    pub fn run_config(&self, default_n: usize) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            n: self.n_or(default_n)?,
            scenario: self.scenario()?,
            seed: self.seed(),
            grid: self.grid()?,
            branch: self.branch()?,
            burn_in_fraction: self.burn_in()?,
        })
    }

    pub fn seed_list(&self) -> Result<Vec<u64>, CliError> {
        let count = self.seeds.unwrap_or(20);
        if count == 0 {
            return Err(usage("seeds", "need at least one seed"));
        }
        let start = self.seed();
        (0..count as u64)
            .map(|k| {
                start
                    .checked_add(k)
                    .ok_or_else(|| usage("seeds", "seed range overflows u64"))
            })
            .collect()
    }

    pub fn bath_sizes(&self) -> Result<Vec<usize>, CliError> {
        let text = self.ns.as_deref().unwrap_or("100,1000,10000");
        let ns = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| usage("ns", format!("{s:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ns.is_empty() || ns.contains(&0) {
            return Err(usage("ns", "bath sizes must be positive"));
        }
        Ok(ns)
    }

    pub fn verify_options(&self) -> Result<VerifyOptions, CliError> {
        let trials = self.trials.unwrap_or(20);
        if trials == 0 {
            return Err(usage("trials", "must be at least 1"));
        }
        let max_n = self.max_n.unwrap_or(8);
        if max_n == 0 || max_n > spinbath_core::oracle::MAX_TERMS_N {
            return Err(usage(
                "max-n",
                format!("must lie in 1..={}", spinbath_core::oracle::MAX_TERMS_N),
            ));
        }
        let tolerance = self.tolerance.unwrap_or(1e-9);
        if tolerance.is_nan() || tolerance < 0.0 {
            return Err(usage("tolerance", "must be non-negative"));
        }
        Ok(VerifyOptions {
            max_n,
            trials,
            tolerance,
            seed: self.seed(),
        })
    }

    pub fn threads(&self) -> Result<usize, CliError> {
        match self.threads {
            Some(0) => Err(usage("threads", "must be at least 1")),
            Some(t) => Ok(t),
            None => Ok(std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)),
        }
    }
}
