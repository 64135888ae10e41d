//! Domain types of the spin-bath model and the random sampling scenarios.
//!
//! The central system qubit couples to `N` bath spins through
//! `H = 1/2 (|0><0| - |1><1|) * sum_i g_i (|up_i><up_i| - |down_i><down_i|)`
//! with `hbar = 1` and vanishing self-Hamiltonians. The initial state is a
//! product `(a|0> + b|1>) (x) prod_i (alpha_i |up_i> + beta_i |down_i>)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|x|^2 + |y|^2 = 1` for amplitude pairs.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Coupling constants `g_i` (radians per unit time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    g: Vec<f64>,
}

impl CouplingSet {
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::EmptyBath);
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { g })
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.g
    }
}

fn check_norm(what: &'static str, x: Complex64, y: Complex64) -> Result<()> {
    if !(x.re.is_finite() && x.im.is_finite() && y.re.is_finite() && y.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm = x.norm_sqr() + y.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { what, norm });
    }
    Ok(())
}

/// Amplitudes `(alpha_i, beta_i)` of each bath spin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathState {
    pairs: Vec<(Complex64, Complex64)>,
}

impl BathState {
    pub fn new(pairs: Vec<(Complex64, Complex64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyBath);
        }
        for &(alpha, beta) in &pairs {
            check_norm("bath spin", alpha, beta)?;
        }
        Ok(Self { pairs })
    }

    /// Builds a bath from real non-negative amplitudes given `|alpha_i|^2`.
    pub fn from_populations(up: &[f64]) -> Result<Self> {
        let pairs = up
            .iter()
            .map(|&p| {
                let p = p.clamp(0.0, 1.0);
                (
                    Complex64::new(p.sqrt(), 0.0),
                    Complex64::new((1.0 - p).sqrt(), 0.0),
                )
            })
            .collect();
        Self::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Complex64, Complex64)] {
        &self.pairs
    }
}

/// System amplitudes `a`, `b` of `|0>` and `|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemAmplitudes {
    pub a: Complex64,
    pub b: Complex64,
}

impl SystemAmplitudes {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        check_norm("system", a, b)?;
        Ok(Self { a, b })
    }

    /// The equal superposition `(|0> + |1>) / sqrt(2)`.
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a: Complex64::new(h, 0.0),
            b: Complex64::new(h, 0.0),
        }
    }
}

/// One bath-spin factor `e_uu |up><up| + e_ud |up><down| + conj(e_ud) |down><up| + e_dd |down><down|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinBlock {
    pub uu: f64,
    pub dd: f64,
    pub ud: Complex64,
}

impl SpinBlock {
    pub const IDENTITY: Self = Self {
        uu: 1.0,
        dd: 1.0,
        ud: Complex64::new(0.0, 0.0),
    };
}

/// A single product term of a global observable: a Hermitian system block
/// times one Hermitian block per bath spin. Conjugate entries (`s01`,
/// `e_du`) are implied rather than stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductObservable {
    pub s00: f64,
    pub s11: f64,
    pub s10: Complex64,
    blocks: Vec<SpinBlock>,
}

impl ProductObservable {
    pub fn new(s00: f64, s11: f64, s10: Complex64, blocks: Vec<SpinBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyBath);
        }
        let finite = [s00, s11, s10.re, s10.im].iter().all(|x| x.is_finite())
            && blocks.iter().all(|b| {
                [b.uu, b.dd, b.ud.re, b.ud.im]
                    .iter()
                    .all(|x| x.is_finite())
            });
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            s00,
            s11,
            s10,
            blocks,
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[SpinBlock] {
        &self.blocks
    }

    pub fn s01(&self) -> Complex64 {
        self.s10.conj()
    }
}

/// A system observable extended by the identity on every bath spin.
pub fn local_observable(s00: f64, s11: f64, s10: Complex64, n: usize) -> Result<ProductObservable> {
    ProductObservable::new(s00, s11, s10, vec![SpinBlock::IDENTITY; n])
}

/// Sampling regime for the bath state and the observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Fully random phases and signs.
    A,
    /// Phases restricted to `[0, pi/2]`, non-negative diagonal observable entries.
    B,
    /// Absolute values only.
    C,
    /// Random bath phases, observable with absolute values only.
    RestrictedObservable,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::A,
        Scenario::B,
        Scenario::C,
        Scenario::RestrictedObservable,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::A => "a",
            Scenario::B => "b",
            Scenario::C => "c",
            Scenario::RestrictedObservable => "restricted-obs",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Scenario::A),
            "b" => Ok(Scenario::B),
            "c" => Ok(Scenario::C),
            "restricted-obs" | "restricted" => Ok(Scenario::RestrictedObservable),
            other => Err(Error::InvalidConfig(format!(
                "scenario must be one of a, b, c, restricted-obs (got {other:?})"
            ))),
        }
    }
}

/// Random stream indices within one master seed.
pub mod streams {
    pub const COUPLINGS: u64 = 0;
    pub const BATH: u64 = 1;
    pub const OBSERVABLE: u64 = 2;
    pub const SYSTEM: u64 = 3;
}

/// Counter-based generator keyed by `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent child seed, e.g. one per bath size in a sweep.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // streams below 2^32 are reserved for the fixed sampling streams
    stream_rng(seed, (1 << 32) + index).random()
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn polar(rng: &mut impl Rng, magnitude: f64, max_phase: f64) -> Complex64 {
    let phase = if max_phase > 0.0 {
        uniform(rng, 0.0, max_phase)
    } else {
        0.0
    };
    Complex64::from_polar(magnitude, phase)
}

/// Couplings uniform on `[-pi, pi]`.
pub fn sample_couplings(n: usize, rng: &mut impl Rng) -> Result<CouplingSet> {
    CouplingSet::new((0..n).map(|_| uniform(rng, -PI, PI)).collect())
}

/// Bath state with `|alpha_i|^2` uniform on `[0, 1]` and scenario-dependent phases.
pub fn sample_bath(n: usize, scenario: Scenario, rng: &mut impl Rng) -> Result<BathState> {
    let max_phase = match scenario {
        Scenario::A | Scenario::RestrictedObservable => TAU,
        Scenario::B => FRAC_PI_2,
        Scenario::C => 0.0,
    };
    let pairs = (0..n)
        .map(|_| {
            let p: f64 = rng.random();
            let alpha = polar(rng, p.sqrt(), max_phase);
            let beta = polar(rng, (1.0 - p).sqrt(), max_phase);
            (alpha, beta)
        })
        .collect();
    BathState::new(pairs)
}

/// Random product observable under the given scenario.
pub fn sample_observable(
    n: usize,
    scenario: Scenario,
    rng: &mut impl Rng,
) -> Result<ProductObservable> {
    let (diag_lo, ud_phase, s10_phase) = match scenario {
        Scenario::A => (-1.0, TAU, TAU),
        Scenario::B => (0.0, FRAC_PI_2, TAU),
        Scenario::C | Scenario::RestrictedObservable => (0.0, 0.0, 0.0),
    };
    let s00 = uniform(rng, -1.0, 1.0);
    let s11 = uniform(rng, -1.0, 1.0);
    let s10_mag = rng.random();
    let s10 = polar(rng, s10_mag, s10_phase);
    let blocks = (0..n)
        .map(|_| {
            let uu = uniform(rng, diag_lo, 1.0);
            let dd = uniform(rng, diag_lo, 1.0);
            let ud_mag = rng.random();
            let ud = polar(rng, ud_mag, ud_phase);
            SpinBlock { uu, dd, ud }
        })
        .collect();
    ProductObservable::new(s00, s11, s10, blocks)
}

/// Random system amplitudes with `|a|^2` uniform on `[0, 1]` and random phases.
pub fn sample_system(rng: &mut impl Rng) -> SystemAmplitudes {
    let p: f64 = rng.random();
    let a = polar(rng, p.sqrt(), TAU);
    let b = polar(rng, (1.0 - p).sqrt(), TAU);
    SystemAmplitudes { a, b }
}

/// One fully sampled model instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub couplings: CouplingSet,
    pub bath: BathState,
    pub observable: ProductObservable,
    pub system: SystemAmplitudes,
}

impl Instance {
    /// Samples every component from its own stream of `seed`.
    pub fn sample(n: usize, scenario: Scenario, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyBath);
        }
        Ok(Self {
            couplings: sample_couplings(n, &mut stream_rng(seed, streams::COUPLINGS))?,
            bath: sample_bath(n, scenario, &mut stream_rng(seed, streams::BATH))?,
            observable: sample_observable(n, scenario, &mut stream_rng(seed, streams::OBSERVABLE))?,
            system: sample_system(&mut stream_rng(seed, streams::SYSTEM)),
        })
    }
}
