//! Brute-force reference implementations for small baths.
//!
//! Nothing here shares code with [`crate::evolution`]: the 4^N-term and
//! 2^N-term sums are enumerated explicitly, and the state-vector oracle
//! evolves the full `2^(N+1)`-amplitude wave function.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Branch;
use crate::model::{BathState, CouplingSet, ProductObservable, SystemAmplitudes};

/// Largest bath for the 4^N term enumeration and the state-vector oracle.
pub const MAX_TERMS_N: usize = 12;
/// Largest bath for the 2^N sum form of `r(t)`.
pub const MAX_R_SUM_N: usize = 20;

/// Neumaier-compensated accumulator for real sums.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex sum, one accumulator per component.
#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Which of the four per-spin products a spin contributes to a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinChoice {
    /// `|alpha|^2 e_uu`
    Up,
    /// `|beta|^2 e_dd`
    Down,
    /// `conj(alpha) beta e_ud`
    Cross,
    /// `conj(conj(alpha) beta e_ud)`
    CrossConj,
}

const CHOICES: [SpinChoice; 4] = [
    SpinChoice::Up,
    SpinChoice::Down,
    SpinChoice::Cross,
    SpinChoice::CrossConj,
];

/// One term `c e^{i E t}` of the expanded product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: Complex64,
    pub energy: f64,
    /// Enumeration index (base-4 digits, first spin most significant).
    pub index: u64,
    /// True when no spin carries a time-dependent exponential, so the term
    /// belongs to the energy-diagonal part regardless of the couplings.
    pub time_independent: bool,
}

impl Term {
    pub fn magnitude(&self) -> f64 {
        self.coefficient.norm()
    }

    pub fn phase(&self) -> f64 {
        self.coefficient.arg()
    }
}

/// Full expansion of `Gamma_branch(t)` into `4^N` terms, sorted by energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermList {
    pub n: usize,
    pub branch: Branch,
    pub terms: Vec<Term>,
}

impl TermList {
    /// Sum of the time-independent terms, i.e. `Gamma^d`.
    pub fn diagonal_sum(&self) -> Complex64 {
        let mut acc = ComplexSum::default();
        for term in self.terms.iter().filter(|t| t.time_independent) {
            acc.add(term.coefficient);
        }
        acc.value()
    }

    /// Decodes the per-spin choices of an enumeration index.
    pub fn choices(&self, index: u64) -> Vec<SpinChoice> {
        (0..self.n)
            .map(|i| CHOICES[((index >> (2 * (self.n - 1 - i))) & 3) as usize])
            .collect()
    }
}

/// Enumerates every assignment of spins to the four per-spin products.
///
/// For `Diag0` the exponentials sit on the cross terms, `E = sum_{CrossConj} g - sum_{Cross} g`;
/// for `OffDiag1` they sit on the population terms, `E = sum_{Up} g - sum_{Down} g`.
pub fn enumerate_terms(
    bath: &BathState,
    obs: &ProductObservable,
    couplings: &CouplingSet,
    branch: Branch,
) -> Result<TermList> {
    let n = couplings.len();
    if n > MAX_TERMS_N {
        return Err(Error::BathTooLarge { n, max: MAX_TERMS_N });
    }
    if bath.len() != n || obs.len() != n {
        return Err(Error::LengthMismatch {
            what: "bath/observable",
            expected: n,
            got: if bath.len() != n { bath.len() } else { obs.len() },
        });
    }
    let g = couplings.as_slice();
    // per spin: (coefficient, energy sign) for each choice
    let table: Vec<[(Complex64, f64); 4]> = bath
        .pairs()
        .iter()
        .zip(obs.blocks())
        .map(|(&(alpha, beta), block)| {
            let up = Complex64::new(alpha.norm_sqr() * block.uu, 0.0);
            let down = Complex64::new(beta.norm_sqr() * block.dd, 0.0);
            let cross = alpha.conj() * beta * block.ud;
            let signs = match branch {
                Branch::Diag0 => [0.0, 0.0, -1.0, 1.0],
                Branch::OffDiag1 => [1.0, -1.0, 0.0, 0.0],
            };
            [
                (up, signs[0]),
                (down, signs[1]),
                (cross, signs[2]),
                (cross.conj(), signs[3]),
            ]
        })
        .collect();

    let count = 1u64 << (2 * n);
    let mut terms = Vec::with_capacity(count as usize);
    for index in 0..count {
        let mut coefficient = Complex64::new(1.0, 0.0);
        let mut energy = 0.0;
        let mut time_independent = true;
        for (i, row) in table.iter().enumerate() {
            let digit = ((index >> (2 * (n - 1 - i))) & 3) as usize;
            let (c, sign) = row[digit];
            coefficient *= c;
            if sign != 0.0 {
                energy += sign * g[i];
                time_independent = false;
            }
        }
        terms.push(Term {
            coefficient,
            energy,
            index,
            time_independent,
        });
    }
    // stable sort keeps enumeration order among equal energies
    terms.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(TermList { n, branch, terms })
}

#[inline]
fn cis(theta: f64) -> Complex64 {
    let (s, c) = theta.rem_euclid(TAU).sin_cos();
    Complex64::new(c, s)
}

/// `sum_lambda c_lambda e^{i E_lambda t}` with compensated accumulation.
pub fn gamma_by_sum(terms: &TermList, t: f64) -> Complex64 {
    let mut acc = ComplexSum::default();
    for term in &terms.terms {
        acc.add(term.coefficient * cis(term.energy * t));
    }
    acc.value()
}

/// `r(t)` as the sum over the `2^N` bath configurations.
pub fn r_by_sum(bath: &BathState, couplings: &CouplingSet, t: f64) -> Result<Complex64> {
    let n = couplings.len();
    if n > MAX_R_SUM_N {
        return Err(Error::BathTooLarge { n, max: MAX_R_SUM_N });
    }
    if bath.len() != n {
        return Err(Error::LengthMismatch {
            what: "bath",
            expected: n,
            got: bath.len(),
        });
    }
    let g = couplings.as_slice();
    let mut acc = ComplexSum::default();
    for config in 0u64..(1 << n) {
        let mut weight = 1.0;
        let mut energy = 0.0;
        for (i, (alpha, beta)) in bath.pairs().iter().enumerate() {
            if config >> i & 1 == 0 {
                weight *= alpha.norm_sqr();
                energy += g[i];
            } else {
                weight *= beta.norm_sqr();
                energy -= g[i];
            }
        }
        acc.add(weight * cis(energy * t));
    }
    Ok(acc.value())
}

/// Applies a 2x2 matrix (row-major, basis `{0, 1}`) to one qubit of a state.
fn apply_single(state: &mut [Complex64], qubit: usize, m: [[Complex64; 2]; 2]) {
    let stride = 1usize << qubit;
    for base in 0..state.len() {
        if base & stride != 0 {
            continue;
        }
        let (x0, x1) = (state[base], state[base | stride]);
        state[base] = m[0][0] * x0 + m[0][1] * x1;
        state[base | stride] = m[1][0] * x0 + m[1][1] * x1;
    }
}

/// Builds the evolved state. Bit `i` (for `i < N`) is bath spin `i`
/// (0 = up), bit `N` is the system qubit.
pub fn evolved_state(
    sys: &SystemAmplitudes,
    bath: &BathState,
    couplings: &CouplingSet,
    t: f64,
) -> Result<Vec<Complex64>> {
    let n = couplings.len();
    if n > MAX_TERMS_N {
        return Err(Error::BathTooLarge { n, max: MAX_TERMS_N });
    }
    if bath.len() != n {
        return Err(Error::LengthMismatch {
            what: "bath",
            expected: n,
            got: bath.len(),
        });
    }
    let g = couplings.as_slice();
    let dim = 1usize << (n + 1);
    let mut state = vec![Complex64::new(0.0, 0.0); dim];
    for (idx, amp) in state.iter_mut().enumerate() {
        let system_one = idx >> n & 1 == 1;
        let mut z = if system_one { sys.b } else { sys.a };
        for (i, &(alpha, beta)) in bath.pairs().iter().enumerate() {
            let spin_down = idx >> i & 1 == 1;
            // |E_0(t)> carries alpha e^{+i g t/2}, beta e^{-i g t/2}; |E_1(t)> = |E_0(-t)>
            let sign = match (system_one, spin_down) {
                (false, false) | (true, true) => 1.0,
                (false, true) | (true, false) => -1.0,
            };
            let coeff = if spin_down { beta } else { alpha };
            z *= coeff * cis(sign * g[i] * t / 2.0);
        }
        *amp = z;
    }
    Ok(state)
}

/// `<Psi(t)| O |Psi(t)>` from the full state vector. Returns the real
/// value, the imaginary residue, and the state norm.
pub fn statevector_expectation_detail(
    sys: &SystemAmplitudes,
    bath: &BathState,
    obs: &ProductObservable,
    couplings: &CouplingSet,
    t: f64,
) -> Result<(f64, f64, f64)> {
    let n = couplings.len();
    if obs.len() != n {
        return Err(Error::LengthMismatch {
            what: "observable",
            expected: n,
            got: obs.len(),
        });
    }
    let psi = evolved_state(sys, bath, couplings, t)?;
    let mut o_psi = psi.clone();
    for (i, block) in obs.blocks().iter().enumerate() {
        let m = [
            [Complex64::new(block.uu, 0.0), block.ud],
            [block.ud.conj(), Complex64::new(block.dd, 0.0)],
        ];
        apply_single(&mut o_psi, i, m);
    }
    let s = [
        [Complex64::new(obs.s00, 0.0), obs.s01()],
        [obs.s10, Complex64::new(obs.s11, 0.0)],
    ];
    apply_single(&mut o_psi, n, s);
    let mut inner = ComplexSum::default();
    let mut norm = NeumaierSum::default();
    for (x, y) in psi.iter().zip(&o_psi) {
        inner.add(x.conj() * y);
        norm.add(x.norm_sqr());
    }
    let v = inner.value();
    Ok((v.re, v.im, norm.value()))
}

/// `<Psi(t)| O |Psi(t)>` evaluated on the explicit state vector.
pub fn statevector_expectation(
    sys: &SystemAmplitudes,
    bath: &BathState,
    obs: &ProductObservable,
    couplings: &CouplingSet,
    t: f64,
) -> Result<f64> {
    let (re, im, _) = statevector_expectation_detail(sys, bath, obs, couplings, t)?;
    debug_assert!(
        im.abs() <= 1e-8 * re.abs().max(1.0),
        "imaginary residue {im} signals a non-Hermitian observable"
    );
    Ok(re)
}
