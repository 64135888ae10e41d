//! Experiment drivers: single runs, seed ensembles, bath-size sweeps and
//! the summary statistics that separate decay from its absence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{self, Branch, Prepared};
use crate::model::{
    derive_seed, sample_bath, sample_couplings, stream_rng, streams, Instance, Scenario,
};

/// Post-burn-in median below which a run counts as decayed.
pub const DECAY_THRESHOLD: f64 = -1.0;
pub const DEFAULT_BURN_IN: f64 = 0.1;

/// Uniform linear time grid including both end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(Error::InvalidGrid("end points must be finite".into()));
        }
        if start < 0.0 {
            return Err(Error::InvalidGrid(format!("start {start} is negative")));
        }
        if start >= end {
            return Err(Error::InvalidGrid(format!("start {start} >= end {end}")));
        }
        if points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {points}")));
        }
        Ok(Self { start, end, points })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> f64 {
        if k == 0 {
            return self.start;
        }
        let frac = k as f64 / (self.points - 1) as f64;
        self.start + (self.end - self.start) * frac
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.points).map(|k| self.point(k))
    }

    pub fn par_points(&self) -> impl IndexedParallelIterator<Item = f64> + '_ {
        (0..self.points).into_par_iter().map(|k| self.point(k))
    }

    /// First time included in the summary statistics.
    pub fn burn_in_time(&self, fraction: f64) -> f64 {
        self.start + fraction * (self.end - self.start)
    }
}

/// Parameters of one global (Lambda) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub scenario: Scenario,
    pub seed: u64,
    pub grid: TimeGrid,
    pub branch: Branch,
    pub burn_in_fraction: f64,
}

impl RunConfig {
    pub fn new(n: usize, scenario: Scenario, seed: u64, grid: TimeGrid) -> Self {
        Self {
            n,
            scenario,
            seed,
            grid,
            branch: Branch::Diag0,
            burn_in_fraction: DEFAULT_BURN_IN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyBath);
        }
        if !(self.burn_in_fraction > 0.0 && self.burn_in_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "burn-in fraction must lie in (0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        if self.grid.start() != 0.0 {
            return Err(Error::InvalidGrid("runs start at t = 0".into()));
        }
        Ok(())
    }
}

/// Summary statistics of a post-burn-in log series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    /// Median value.
    pub baseline: f64,
    /// 95th minus 5th percentile.
    pub amplitude: f64,
    /// Median of the first half of the post-burn-in points.
    pub baseline_first_half: f64,
    /// Median of the second half.
    pub baseline_second_half: f64,
}

impl SeriesStats {
    pub fn drift(&self) -> f64 {
        (self.baseline_first_half - self.baseline_second_half).abs()
    }
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = q.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            let frac = pos - lo as f64;
            if frac == 0.0 {
                sorted[lo]
            } else {
                sorted[lo] + (sorted[hi] - sorted[lo]) * frac
            }
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, 0.5)
}

/// Statistics over the points with `t >= burn_in_time`.
pub fn series_stats(series: &[(f64, f64)], burn_in_time: f64) -> SeriesStats {
    let tail: Vec<f64> = series
        .iter()
        .filter(|(t, _)| *t >= burn_in_time)
        .map(|&(_, v)| v)
        .collect();
    let mut sorted = tail.clone();
    sorted.sort_by(f64::total_cmp);
    let half = tail.len().div_ceil(2);
    let (first, second) = tail.split_at(half);
    let second = if second.is_empty() { first } else { second };
    SeriesStats {
        baseline: percentile_sorted(&sorted, 0.5),
        amplitude: percentile_sorted(&sorted, 0.95) - percentile_sorted(&sorted, 0.05),
        baseline_first_half: median(first),
        baseline_second_half: median(second),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub n: usize,
    /// `(t, log10 |Lambda(t) / Lambda(0)|)`; empty for degenerate runs.
    pub series: Vec<(f64, f64)>,
    pub stats: Option<SeriesStats>,
    pub decayed: bool,
    pub degenerate: bool,
}

impl RunResult {
    pub fn baseline(&self) -> Option<f64> {
        self.stats.map(|s| s.baseline)
    }

    pub fn amplitude(&self) -> Option<f64> {
        self.stats.map(|s| s.amplitude)
    }

    fn degenerate(seed: u64, n: usize) -> Self {
        Self {
            seed,
            n,
            series: Vec::new(),
            stats: None,
            decayed: false,
            degenerate: true,
        }
    }
}

/// Samples an instance from the config seed and tracks the normalized
/// off-diagonal part `Lambda(t)` over the grid.
pub fn run_single(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let inst = Instance::sample(config.n, config.scenario, config.seed)?;
    let prep = Prepared::new(&inst.bath, &inst.observable, &inst.couplings)?;
    match evolution::prepared_lambda_series(&prep, &config.grid, config.branch) {
        Ok(series) => {
            let stats = series_stats(&series, config.grid.burn_in_time(config.burn_in_fraction));
            Ok(RunResult {
                seed: config.seed,
                n: config.n,
                decayed: stats.baseline < DECAY_THRESHOLD,
                series,
                stats: Some(stats),
                degenerate: false,
            })
        }
        Err(Error::NormalizationDegenerate { .. }) => {
            Ok(RunResult::degenerate(config.seed, config.n))
        }
        Err(e) => Err(e),
    }
}

/// Per-run record kept by ensembles (the series itself is dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub n: usize,
    pub stats: Option<SeriesStats>,
    pub decayed: bool,
    pub degenerate: bool,
}

impl From<&RunResult> for RunSummary {
    fn from(r: &RunResult) -> Self {
        Self {
            seed: r.seed,
            n: r.n,
            stats: r.stats,
            decayed: r.decayed,
            degenerate: r.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub runs: Vec<RunSummary>,
    /// Decayed runs over non-degenerate runs (0 when all are degenerate).
    pub decay_fraction: f64,
    pub degenerate_count: usize,
}

impl EnsembleSummary {
    pub fn from_runs(runs: Vec<RunSummary>) -> Self {
        let degenerate_count = runs.iter().filter(|r| r.degenerate).count();
        let valid = runs.len() - degenerate_count;
        let decayed = runs.iter().filter(|r| r.decayed).count();
        let decay_fraction = if valid == 0 {
            0.0
        } else {
            decayed as f64 / valid as f64
        };
        Self {
            runs,
            decay_fraction,
            degenerate_count,
        }
    }

    /// Baselines of the non-degenerate runs, in seed order.
    pub fn baselines(&self) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.stats.map(|s| s.baseline))
            .collect()
    }

    pub fn median_baseline(&self) -> f64 {
        median(&self.baselines())
    }
}

/// Runs `base` once per seed; results are ordered like `seeds`.
pub fn run_ensemble(base: &RunConfig, seeds: &[u64]) -> Result<EnsembleSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("ensemble needs at least one seed".into()));
    }
    base.validate()?;
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let config = RunConfig {
                seed,
                ..base.clone()
            };
            run_single(&config).map(|r| RunSummary::from(&r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleSummary::from_runs(runs))
}

/// One run per bath size, each with its own seed derived from `seed`.
pub fn scaling_study(
    ns: &[usize],
    scenario: Scenario,
    seed: u64,
    grid: TimeGrid,
    branch: Branch,
    burn_in_fraction: f64,
) -> Result<Vec<(usize, RunResult)>> {
    if ns.contains(&0) {
        return Err(Error::EmptyBath);
    }
    ns.iter()
        .enumerate()
        .map(|(k, &n)| {
            let sub_seed = if ns.len() == 1 {
                seed
            } else {
                derive_seed(seed, k as u64)
            };
            let config = RunConfig {
                n,
                scenario,
                seed: sub_seed,
                grid,
                branch,
                burn_in_fraction,
            };
            run_single(&config).map(|r| (n, r))
        })
        .collect()
}

/// `(t, log10 |r(t)|)` for a bath with `|alpha_i|^2` uniform on `[0, 1]` and
/// couplings uniform on `[-pi, pi]`.
pub fn local_decoherence_run(n: usize, seed: u64, grid: &TimeGrid) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::EmptyBath);
    }
    let couplings = sample_couplings(n, &mut stream_rng(seed, streams::COUPLINGS))?;
    let bath = sample_bath(n, Scenario::A, &mut stream_rng(seed, streams::BATH))?;
    evolution::decoherence_series(&bath, &couplings, grid)
}
