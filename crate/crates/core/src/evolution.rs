//! Closed-form time evolution.
//!
//! Every quantity here is an `N`-fold product over bath spins, so each time
//! point costs `O(N)`. Products are accumulated in [`ScaledComplex`] and
//! time points are evaluated independently of each other, which makes any
//! parallel partition of a time grid produce bit-identical results.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::TimeGrid;
use crate::model::{BathState, CouplingSet, ProductObservable, SpinBlock, SystemAmplitudes};
use crate::xrange::ScaledComplex;

/// Selects which of the two product functions is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `Gamma_0`, multiplying the diagonal system block.
    Diag0,
    /// `Gamma_1`, multiplying the system coherence `s10`.
    OffDiag1,
}

impl Branch {
    pub fn index(&self) -> u8 {
        match self {
            Branch::Diag0 => 0,
            Branch::OffDiag1 => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(Branch::Diag0),
            1 => Some(Branch::OffDiag1),
            _ => None,
        }
    }
}

/// `(cos, sin)` of `g * t` with the argument reduced modulo `2 pi`.
#[inline]
fn phase(g: f64, t: f64) -> (f64, f64) {
    let theta = (g * t).rem_euclid(TAU);
    let (s, c) = theta.sin_cos();
    (c, s)
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Per-spin coefficients of one (bath, observable, couplings) triple,
/// precomputed once and reused at every time point.
#[derive(Debug, Clone)]
pub struct Prepared {
    g: Vec<f64>,
    /// `|alpha_i|^2 e_uu`
    up: Vec<f64>,
    /// `|beta_i|^2 e_dd`
    down: Vec<f64>,
    /// `conj(alpha_i) beta_i e_ud`
    cross: Vec<Complex64>,
}

impl Prepared {
    pub fn new(
        bath: &BathState,
        obs: &ProductObservable,
        couplings: &CouplingSet,
    ) -> Result<Self> {
        let n = couplings.len();
        check_len("bath", n, bath.len())?;
        check_len("observable", n, obs.len())?;
        Ok(Self::from_parts(bath, obs.blocks(), couplings))
    }

    fn from_parts(bath: &BathState, blocks: &[SpinBlock], couplings: &CouplingSet) -> Self {
        let mut up = Vec::with_capacity(blocks.len());
        let mut down = Vec::with_capacity(blocks.len());
        let mut cross = Vec::with_capacity(blocks.len());
        for (&(alpha, beta), block) in bath.pairs().iter().zip(blocks) {
            up.push(alpha.norm_sqr() * block.uu);
            down.push(beta.norm_sqr() * block.dd);
            cross.push(alpha.conj() * beta * block.ud);
        }
        Self {
            g: couplings.as_slice().to_vec(),
            up,
            down,
            cross,
        }
    }

    /// Bath-only coefficients (identity observable blocks), as used by `r(t)`.
    pub fn for_bath(bath: &BathState, couplings: &CouplingSet) -> Result<Self> {
        check_len("bath", couplings.len(), bath.len())?;
        let blocks = vec![SpinBlock::IDENTITY; bath.len()];
        Ok(Self::from_parts(bath, &blocks, couplings))
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// `Gamma_branch(t)` as a product of per-spin factors.
    pub fn gamma(&self, t: f64, branch: Branch) -> ScaledComplex {
        let mut acc = ScaledComplex::ONE;
        match branch {
            Branch::Diag0 => {
                // u + w e^{-i g t} + conj(w) e^{i g t} + d, which is real
                for i in 0..self.g.len() {
                    let (c, s) = phase(self.g[i], t);
                    let w = self.cross[i];
                    let f = self.up[i] + self.down[i] + 2.0 * (w.re * c + w.im * s);
                    acc = acc.mul_complex(Complex64::new(f, 0.0));
                }
            }
            Branch::OffDiag1 => {
                // u e^{i g t} + w + conj(w) + d e^{-i g t}
                for i in 0..self.g.len() {
                    let (c, s) = phase(self.g[i], t);
                    let (u, d) = (self.up[i], self.down[i]);
                    let f = Complex64::new(u * c + d * c + 2.0 * self.cross[i].re, u * s - d * s);
                    acc = acc.mul_complex(f);
                }
            }
        }
        acc
    }

    /// The time-independent part `Gamma^d` of the chosen branch.
    pub fn gamma_diag(&self, branch: Branch) -> ScaledComplex {
        let mut acc = ScaledComplex::ONE;
        for i in 0..self.g.len() {
            let f = match branch {
                Branch::Diag0 => self.up[i] + self.down[i],
                Branch::OffDiag1 => 2.0 * self.cross[i].re,
            };
            acc = acc.mul_complex(Complex64::new(f, 0.0));
        }
        acc
    }

    /// `Lambda(t) = Gamma(t) - Gamma^d`.
    pub fn lambda(&self, t: f64, branch: Branch, gamma_d: ScaledComplex) -> ScaledComplex {
        self.gamma(t, branch) - gamma_d
    }
}

/// Relative size below which `Lambda(0)` counts as vanishing.
pub const DEGENERACY_THRESHOLD: f64 = 1e-13;

/// Decoherence factor `r(t) = prod_i (|alpha_i|^2 e^{i g_i t} + |beta_i|^2 e^{-i g_i t})`
/// in extended range.
pub fn decoherence_factor_scaled(
    bath: &BathState,
    couplings: &CouplingSet,
    t: f64,
) -> Result<ScaledComplex> {
    Ok(Prepared::for_bath(bath, couplings)?.gamma(t, Branch::OffDiag1))
}

/// Decoherence factor `r(t)`; values below the native range flush to zero.
pub fn decoherence_factor(bath: &BathState, couplings: &CouplingSet, t: f64) -> Result<Complex64> {
    decoherence_factor_scaled(bath, couplings, t)?.to_complex()
}

pub fn gamma(
    bath: &BathState,
    obs: &ProductObservable,
    couplings: &CouplingSet,
    t: f64,
    branch: Branch,
) -> Result<ScaledComplex> {
    Ok(Prepared::new(bath, obs, couplings)?.gamma(t, branch))
}

pub fn gamma_diag(
    bath: &BathState,
    obs: &ProductObservable,
    branch: Branch,
) -> Result<ScaledComplex> {
    check_len("observable", bath.len(), obs.len())?;
    // couplings do not enter the time-independent part
    let zeros = CouplingSet::new(vec![0.0; bath.len()])?;
    Ok(Prepared::new(bath, obs, &zeros)?.gamma_diag(branch))
}

/// `log10(|Lambda(t)| / |Lambda(0)|)` over a grid whose first point is `t = 0`.
pub fn lambda_series(
    bath: &BathState,
    obs: &ProductObservable,
    couplings: &CouplingSet,
    grid: &TimeGrid,
    branch: Branch,
) -> Result<Vec<(f64, f64)>> {
    if grid.start() != 0.0 {
        return Err(Error::InvalidGrid("Lambda series must start at t = 0".into()));
    }
    let prep = Prepared::new(bath, obs, couplings)?;
    prepared_lambda_series(&prep, grid, branch)
}

pub(crate) fn prepared_lambda_series(
    prep: &Prepared,
    grid: &TimeGrid,
    branch: Branch,
) -> Result<Vec<(f64, f64)>> {
    let gamma_d = prep.gamma_diag(branch);
    let gamma0 = prep.gamma(0.0, branch);
    let lambda0 = gamma0 - gamma_d;
    let reference = gamma0.log2_abs().max(gamma_d.log2_abs());
    if lambda0.is_zero() || lambda0.log2_abs() < reference + DEGENERACY_THRESHOLD.log2() {
        return Err(Error::NormalizationDegenerate {
            log10_lambda0: lambda0.log10_abs(),
        });
    }
    let norm = lambda0.log10_abs();
    let series = grid
        .par_points()
        .map(|t| {
            let value = if t == 0.0 {
                0.0
            } else {
                prep.lambda(t, branch, gamma_d).log10_abs() - norm
            };
            (t, value)
        })
        .collect();
    Ok(series)
}

/// `log10 |r(t)|` over a grid, normalized so the `t = 0` value is exactly zero.
pub fn decoherence_series(
    bath: &BathState,
    couplings: &CouplingSet,
    grid: &TimeGrid,
) -> Result<Vec<(f64, f64)>> {
    let prep = Prepared::for_bath(bath, couplings)?;
    // r(0) = 1 up to rounding of |alpha|^2 + |beta|^2; divide it out
    let r0 = prep.gamma(0.0, Branch::OffDiag1).log10_abs();
    Ok(grid
        .par_points()
        .map(|t| (t, prep.gamma(t, Branch::OffDiag1).log10_abs() - r0))
        .collect())
}

fn to_real(x: ScaledComplex) -> Result<f64> {
    Ok(x.to_complex()?.re)
}

/// `<O>(t) = |a|^2 s00 Gamma_0(t) + |b|^2 s11 Gamma_0(-t) + 2 Re[a b* s10 Gamma_1(t)]`.
///
/// The `|1>` branch evolves with the opposite sign of `t`, so its diagonal
/// product is `Gamma_0(-t)`; the two coincide only when every cross term
/// vanishes.
pub fn expectation(
    sys: &SystemAmplitudes,
    bath: &BathState,
    obs: &ProductObservable,
    couplings: &CouplingSet,
    t: f64,
) -> Result<f64> {
    let prep = Prepared::new(bath, obs, couplings)?;
    let w0 = sys.a.norm_sqr() * obs.s00;
    let w1 = sys.b.norm_sqr() * obs.s11;
    let coherence = sys.a * sys.b.conj() * obs.s10;
    let diag_up = prep.gamma(t, Branch::Diag0).mul_complex(Complex64::new(w0, 0.0));
    let diag_down = prep.gamma(-t, Branch::Diag0).mul_complex(Complex64::new(w1, 0.0));
    let off = prep.gamma(t, Branch::OffDiag1).mul_complex(2.0 * coherence).re();
    let total = diag_up + diag_down + off;
    let z = total.to_complex()?;
    debug_assert!(z.im.abs() <= 1e-10 * z.norm().max(f64::MIN_POSITIVE));
    Ok(z.re)
}

/// The energy-diagonal expectation `(|a|^2 s00 + |b|^2 s11) Gamma_0^d + 2 Re(a b* s10 Gamma_1^d)`.
pub fn diag_expectation(
    sys: &SystemAmplitudes,
    bath: &BathState,
    obs: &ProductObservable,
) -> Result<f64> {
    let w = sys.a.norm_sqr() * obs.s00 + sys.b.norm_sqr() * obs.s11;
    let coherence = sys.a * sys.b.conj() * obs.s10;
    let d0 = gamma_diag(bath, obs, Branch::Diag0)?.mul_complex(Complex64::new(w, 0.0));
    let d1 = gamma_diag(bath, obs, Branch::OffDiag1)?
        .mul_complex(2.0 * coherence)
        .re();
    to_real(d0 + d1)
}

/// Off-diagonal element `a b* r(t)` of the reduced system density matrix.
pub fn reduced_coherence(
    sys: &SystemAmplitudes,
    bath: &BathState,
    couplings: &CouplingSet,
    t: f64,
) -> Result<Complex64> {
    let r = decoherence_factor_scaled(bath, couplings, t)?;
    r.mul_complex(sys.a * sys.b.conj()).to_complex()
}
