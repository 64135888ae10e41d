//! Cross-checks of the product engine against the brute-force oracles.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{self, Branch};
use crate::model::{derive_seed, stream_rng, CouplingSet, Instance, Scenario};
use crate::oracle::{self, NeumaierSum, MAX_TERMS_N};

const TIME_STREAM: u64 = 4;
const TIMES_PER_INSTANCE: usize = 10;
const STATEVECTOR_TIMES: usize = 5;
const T_MAX: f64 = 100.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub max_n: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            max_n: 8,
            trials: 20,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

/// Worst case of one check over all instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub worst_error: f64,
    pub worst_n: usize,
    pub worst_seed: u64,
    pub evaluations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Tracker {
    name: &'static str,
    worst: f64,
    worst_n: usize,
    worst_seed: u64,
    count: usize,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            worst_n: 0,
            worst_seed: 0,
            count: 0,
        }
    }

    fn record(&mut self, err: f64, n: usize, seed: u64) {
        self.count += 1;
        // NaN counts as worst
        if err.is_nan() || err > self.worst {
            self.worst = err;
            self.worst_n = n;
            self.worst_seed = seed;
        }
    }

    fn finish(self, tol: f64) -> CheckOutcome {
        CheckOutcome {
            name: self.name.to_string(),
            worst_error: self.worst,
            worst_n: self.worst_n,
            worst_seed: self.worst_seed,
            evaluations: self.count,
            passed: self.worst <= tol,
        }
    }
}

/// Seed of trial `trial` at bath size `n` under a master seed.
pub fn trial_seed(master: u64, n: usize, trial: usize) -> u64 {
    derive_seed(master, (n as u64) << 20 | trial as u64)
}

/// Couplings `g_i = 2 pi k_i / period` with `k_i = +-3^j` over a random
/// permutation of `j`. Balanced-ternary uniqueness guarantees that no signed
/// subset sum vanishes, so the only zero-energy terms are the structural ones.
pub fn ternary_commensurate_couplings(n: usize, period: f64, rng: &mut impl Rng) -> Result<CouplingSet> {
    let mut powers: Vec<i64> = (0..n as u32).map(|j| 3i64.pow(j)).collect();
    powers.shuffle(rng);
    let g = powers
        .into_iter()
        .map(|k| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * TAU * k as f64 / period
        })
        .collect();
    CouplingSet::new(g)
}

/// Mean of `expectation(t)` over `samples` equally spaced points of one period.
fn period_average(inst: &Instance, couplings: &CouplingSet, period: f64, samples: usize) -> Result<f64> {
    let mut acc = NeumaierSum::default();
    for k in 0..samples {
        let t = period * k as f64 / samples as f64;
        acc.add(evolution::expectation(
            &inst.system,
            &inst.bath,
            &inst.observable,
            couplings,
            t,
        )?);
    }
    Ok(acc.value() / samples as f64)
}

/// Runs the product-vs-sum, engine-vs-state-vector and time-average checks.
pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if opts.max_n == 0 || opts.max_n > MAX_TERMS_N {
        return Err(Error::InvalidConfig(format!(
            "max N must lie in 1..={MAX_TERMS_N}, got {}",
            opts.max_n
        )));
    }
    if opts.tolerance.is_nan() || opts.tolerance < 0.0 {
        return Err(Error::InvalidConfig("tolerance must be non-negative".into()));
    }

    let mut gamma_check = Tracker::new("gamma vs 4^N-term sum (relative)");
    let mut diag_check = Tracker::new("gamma_diag vs time-independent terms (relative)");
    let mut r_check = Tracker::new("r(t) product vs 2^N-term sum (absolute)");
    let mut sv_check = Tracker::new("expectation vs state vector (relative)");
    let mut avg_check = Tracker::new("diag_expectation vs period average (relative)");

    for n in 1..=opts.max_n {
        for trial in 0..opts.trials {
            let seed = trial_seed(opts.seed, n, trial);
            let inst = Instance::sample(n, Scenario::A, seed)?;
            let mut rng = stream_rng(seed, TIME_STREAM);
            let times: Vec<f64> = (0..TIMES_PER_INSTANCE)
                .map(|_| rng.random_range(0.0..T_MAX))
                .collect();

            for branch in [Branch::Diag0, Branch::OffDiag1] {
                let terms =
                    oracle::enumerate_terms(&inst.bath, &inst.observable, &inst.couplings, branch)?;
                let prep =
                    evolution::Prepared::new(&inst.bath, &inst.observable, &inst.couplings)?;
                for &t in &times {
                    let reference = oracle::gamma_by_sum(&terms, t);
                    let engine = prep.gamma(t, branch).to_complex()?;
                    gamma_check.record((engine - reference).norm() / reference.norm().max(1.0), n, seed);
                }
                let reference = terms.diagonal_sum();
                let engine = prep.gamma_diag(branch).to_complex()?;
                diag_check.record((engine - reference).norm() / reference.norm().max(1.0), n, seed);
            }

            for &t in &times {
                let reference = oracle::r_by_sum(&inst.bath, &inst.couplings, t)?;
                let engine = evolution::decoherence_factor(&inst.bath, &inst.couplings, t)?;
                r_check.record((engine - reference).norm(), n, seed);
            }

            for &t in times.iter().take(STATEVECTOR_TIMES) {
                let reference = oracle::statevector_expectation(
                    &inst.system,
                    &inst.bath,
                    &inst.observable,
                    &inst.couplings,
                    t,
                )?;
                let engine = evolution::expectation(
                    &inst.system,
                    &inst.bath,
                    &inst.observable,
                    &inst.couplings,
                    t,
                )?;
                sv_check.record((engine - reference).abs() / reference.abs().max(1.0), n, seed);
            }

            let period = 2.0 + rng.random::<f64>() * 8.0;
            let couplings = ternary_commensurate_couplings(n, period, &mut rng)?;
            let max_mode = (3usize.pow(n as u32) - 1) / 2;
            let samples = (2 * max_mode + 2).next_power_of_two();
            let average = period_average(&inst, &couplings, period, samples)?;
            let diag = evolution::diag_expectation(&inst.system, &inst.bath, &inst.observable)?;
            avg_check.record((average - diag).abs() / diag.abs().max(1.0), n, seed);
        }
    }

    let tol = opts.tolerance;
    Ok(VerifyReport {
        options: opts.clone(),
        checks: vec![
            gamma_check.finish(tol),
            diag_check.finish(tol),
            r_check.finish(tol),
            sv_check.finish(tol),
            avg_check.finish(tol),
        ],
    })
}
