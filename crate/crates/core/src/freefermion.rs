//! Free-fermion dynamics of the XX chain after a quench from the Néel mixture.
//!
//! Spin up is a fermion, `c†_k = (Π_{l<k} -σᶻ_l) σ⁺_k`, and the XX
//! Hamiltonian becomes the hopping matrix `A` with `A_{k,k+1} = J_k`. The
//! propagator is `f(t) = exp(-iAt)`; end-spin observables follow from the
//! second moments `⟨c†_i(t) c_j(t)⟩ = Σ_p f_{i,p} f*_{j,p}` over the sites p
//! occupied in the initial Néel pattern.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::entangle::EndSpinDynamics;
use crate::error::{Error, Result};
use crate::model::{neel_state, CouplingRealization, NeelOrder};

const STATE_TOL: f64 = 1e-9;
const COHERENCE_IMAG_TOL: f64 = 1e-10;

/// Eigenmodes of the single-particle hopping matrix.
#[derive(Debug, Clone)]
pub struct HoppingSpectrum {
    energies: Vec<f64>,
    /// Column m holds mode m, row k - 1 its amplitude on site k.
    modes: DMatrix<f64>,
}

impl HoppingSpectrum {
    /// Closed-form modes of the clean chain: `E_m = 2J cos q_m`,
    /// `φ_m(k) = sqrt(2/(N+1)) sin(q_m k)` with `q_m = π m / (N+1)`.
    pub fn analytic(n: usize, j: f64) -> Self {
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        let q = |m: usize| PI * m as f64 / (n as f64 + 1.0);
        let energies = (1..=n).map(|m| 2.0 * j * q(m).cos()).collect();
        let modes = DMatrix::from_fn(n, n, |k, m| norm * (q(m + 1) * (k + 1) as f64).sin());
        HoppingSpectrum { energies, modes }
    }

    /// Dense symmetric eigendecomposition of the tridiagonal hopping matrix.
    pub fn diagonalize(realization: &CouplingRealization) -> Self {
        let eig = SymmetricEigen::new(hopping_matrix(realization));
        HoppingSpectrum {
            energies: eig.eigenvalues.iter().copied().collect(),
            modes: eig.eigenvectors,
        }
    }

    /// Analytic modes for uniform couplings, numerical ones otherwise.
    pub fn for_realization(realization: &CouplingRealization) -> Self {
        match realization.uniform_coupling() {
            Some(j) => Self::analytic(realization.n_sites(), j),
            None => Self::diagonalize(realization),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.energies
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect()
    }

    pub fn propagator(&self, t: f64) -> Propagator {
        let n = self.n_sites();
        if t == 0.0 {
            return Propagator {
                t,
                matrix: DMatrix::identity(n, n),
            };
        }
        let phases = self.phases(t);
        let mut matrix = DMatrix::<Complex64>::zeros(n, n);
        for (m, ph) in phases.iter().enumerate() {
            let col = self.modes.column(m);
            for l in 0..n {
                let w = ph * col[l];
                for k in 0..n {
                    matrix[(k, l)] += w * col[k];
                }
            }
        }
        Propagator { t, matrix }
    }

    /// Row `f_{site, ·}(t)` of the propagator, O(N²).
    pub fn propagator_row(&self, site: usize, t: f64) -> Vec<Complex64> {
        let n = self.n_sites();
        let mut row = vec![Complex64::new(0.0, 0.0); n];
        if t == 0.0 {
            row[site - 1] = Complex64::new(1.0, 0.0);
            return row;
        }
        for (m, ph) in self.phases(t).into_iter().enumerate() {
            let col = self.modes.column(m);
            let w = ph * col[site - 1];
            for (r, &v) in row.iter_mut().zip(col.iter()) {
                *r += w * v;
            }
        }
        row
    }
}

/// Real symmetric tridiagonal hopping matrix with `A_{k,k+1} = J_k`.
pub fn hopping_matrix(realization: &CouplingRealization) -> DMatrix<f64> {
    let n = realization.n_sites();
    let mut a = DMatrix::zeros(n, n);
    for (k, &jk) in realization.couplings.iter().enumerate() {
        a[(k, k + 1)] = jk;
        a[(k + 1, k)] = jk;
    }
    a
}

/// Single-particle propagator `f_{k,l}(t)`; entry `(k-1, l-1)` of `matrix`.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub t: f64,
    pub matrix: DMatrix<Complex64>,
}

impl Propagator {
    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    /// 1-based entry access.
    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.matrix[(k - 1, l - 1)]
    }

    /// Largest entry of `|f f† - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.matrix * self.matrix.adjoint();
        let n = self.n_sites();
        let mut worst = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((prod[(k, l)] - target).norm());
            }
        }
        worst
    }

    /// Largest entry of `|f - fᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_sites();
        let mut worst = 0.0f64;
        for k in 0..n {
            for l in k + 1..n {
                worst = worst.max((self.matrix[(k, l)] - self.matrix[(l, k)]).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Propagator) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
    }
}

/// `exp(-iAt)`: the closed-form sine sum for uniform chains, the
/// eigendecomposition route otherwise.
pub fn propagator(realization: &CouplingRealization, t: f64) -> Result<Propagator> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time must be non-negative, got {t}"
        )));
    }
    match realization.uniform_coupling() {
        Some(j) => Ok(propagator_sine_sum(realization.n_sites(), j, t)),
        None => Ok(HoppingSpectrum::diagonalize(realization).propagator(t)),
    }
}

/// Direct evaluation of
/// `f_{k,l}(t) = 2/(N+1) Σ_m sin(q_m k) sin(q_m l) exp(-i E_m t)`.
pub fn propagator_sine_sum(n: usize, j: f64, t: f64) -> Propagator {
    let np1 = n as f64 + 1.0;
    let qs: Vec<f64> = (1..=n).map(|m| PI * m as f64 / np1).collect();
    let phases: Vec<Complex64> = qs
        .iter()
        .map(|q| Complex64::from_polar(1.0, -2.0 * j * q.cos() * t))
        .collect();
    // Sine table s_{k,m} = sin(q_m k), so f = 2/(N+1) · S diag(phase) Sᵀ.
    let sines = DMatrix::from_fn(n, n, |k, m| Complex64::from((qs[m] * (k + 1) as f64).sin()));
    let mut weighted = sines.clone();
    for (m, ph) in phases.iter().enumerate() {
        weighted.column_mut(m).scale_mut(2.0 / np1);
        weighted.column_mut(m).iter_mut().for_each(|z| *z *= ph);
    }
    let matrix = weighted * sines.transpose();
    Propagator { t, matrix }
}

/// End-site second moments for one Néel component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoments {
    /// ⟨c†₁c₁⟩
    pub n_first: f64,
    /// ⟨c†_N c_N⟩
    pub n_last: f64,
    /// ⟨c†₁c_N⟩
    pub first_last: Complex64,
    /// ⟨c†_N c₁⟩
    pub last_first: Complex64,
}

impl SecondMoments {
    fn from_rows(first: &[Complex64], last: &[Complex64], occupied: &[usize]) -> Self {
        let mut n_first = 0.0;
        let mut n_last = 0.0;
        let mut first_last = Complex64::new(0.0, 0.0);
        for &p in occupied {
            let (f1, fn_) = (first[p - 1], last[p - 1]);
            n_first += f1.norm_sqr();
            n_last += fn_.norm_sqr();
            first_last += f1 * fn_.conj();
        }
        SecondMoments {
            n_first,
            n_last,
            first_last,
            last_first: first_last.conj(),
        }
    }

    /// Mixture-symmetrized `⟨↑↑|ρ|↑↑⟩` from Wick's theorem.
    fn a(&self) -> f64 {
        self.n_first * self.n_last
            - (self.first_last * self.last_first).re
            - 0.5 * (self.n_first + self.n_last - 1.0)
    }

    /// `(-1)^{M+1} ⟨c†_N c₁⟩`, the complex ⟨σ⁻₁σ⁺_N⟩ of the component.
    fn coherence(&self, up_count: usize) -> Complex64 {
        let sign = if up_count % 2 == 1 { 1.0 } else { -1.0 };
        self.last_first * sign
    }
}

pub fn second_moments(
    realization: &CouplingRealization,
    which: NeelOrder,
    t: f64,
) -> Result<SecondMoments> {
    let n = realization.n_sites();
    let neel = neel_state(which, n)?;
    let spectrum = HoppingSpectrum::for_realization(realization);
    let first = spectrum.propagator_row(1, t);
    let last = spectrum.propagator_row(n, t);
    Ok(SecondMoments::from_rows(&first, &last, &neel.up_sites))
}

/// Initial state of the end-spin dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Neel(NeelOrder),
    Mixture,
}

/// X-state of spins 1 and N in the basis {↑↑, ↑↓, ↓↑, ↓↓}:
/// diagonal (a, b, b, a) and coherence `c = ⟨↑↓|ρ|↓↑⟩ = ⟨↓↑|ρ|↑↓⟩`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EndSpinState {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t: f64,
}

impl EndSpinState {
    /// Builds the state from `a` and `c`, with `b = 1/2 - a`.
    pub fn new(a: f64, c: f64, t: f64) -> Result<Self> {
        let s = EndSpinState {
            a,
            b: 0.5 - a,
            c,
            t,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let trace = 2.0 * self.a + 2.0 * self.b;
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::NumericalFault(format!(
                "non-finite end-spin state {self:?}"
            )));
        }
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(Error::NumericalFault(format!(
                "end-spin trace {trace} != 1"
            )));
        }
        if self.a < -STATE_TOL || self.b < -STATE_TOL {
            return Err(Error::NumericalFault(format!(
                "negative populations in {self:?}"
            )));
        }
        if self.c.abs() > self.b + STATE_TOL {
            return Err(Error::NumericalFault(format!(
                "coherence exceeds population in {self:?}"
            )));
        }
        Ok(())
    }

    /// Entry-wise maximum deviation of (a, b, c).
    pub fn max_deviation(&self, other: &EndSpinState) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
    }
}

/// Cached free-fermion evolution of one chain realization.
#[derive(Debug, Clone)]
pub struct FreeFermionDynamics {
    spectrum: HoppingSpectrum,
    n: usize,
    occupied: [Vec<usize>; 2],
    up_counts: [usize; 2],
}

impl FreeFermionDynamics {
    pub fn new(realization: &CouplingRealization) -> Result<Self> {
        Self::with_spectrum(HoppingSpectrum::for_realization(realization))
    }

    pub fn with_spectrum(spectrum: HoppingSpectrum) -> Result<Self> {
        let n = spectrum.n_sites();
        let n1 = neel_state(NeelOrder::N1, n)?;
        let n2 = neel_state(NeelOrder::N2, n)?;
        Ok(FreeFermionDynamics {
            spectrum,
            n,
            up_counts: [n1.up_count(), n2.up_count()],
            occupied: [n1.up_sites, n2.up_sites],
        })
    }

    fn component_index(which: NeelOrder) -> usize {
        match which {
            NeelOrder::N1 => 0,
            NeelOrder::N2 => 1,
        }
    }

    pub fn second_moments(&self, which: NeelOrder, t: f64) -> SecondMoments {
        let first = self.spectrum.propagator_row(1, t);
        let last = self.spectrum.propagator_row(self.n, t);
        SecondMoments::from_rows(&first, &last, &self.occupied[Self::component_index(which)])
    }

    pub fn state(&self, t: f64, initial: InitialState) -> Result<EndSpinState> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time must be non-negative, got {t}"
            )));
        }
        let first = self.spectrum.propagator_row(1, t);
        let last = self.spectrum.propagator_row(self.n, t);
        let component = |which: NeelOrder| {
            let i = Self::component_index(which);
            let m = SecondMoments::from_rows(&first, &last, &self.occupied[i]);
            (m.a(), m.coherence(self.up_counts[i]))
        };
        let (a, c) = match initial {
            InitialState::Neel(which) => {
                let (a, k) = component(which);
                (a, k.re)
            }
            InitialState::Mixture => {
                let (a1, k1) = component(NeelOrder::N1);
                let (a2, k2) = component(NeelOrder::N2);
                let k = (k1 + k2) * 0.5;
                if k.im.abs() > COHERENCE_IMAG_TOL {
                    return Err(Error::NumericalFault(format!(
                        "mixture coherence has imaginary part {} at t = {t}",
                        k.im
                    )));
                }
                (0.5 * (a1 + a2), k.re)
            }
        };
        EndSpinState::new(a, c, t)
    }
}

impl EndSpinDynamics for FreeFermionDynamics {
    fn n_sites(&self) -> usize {
        self.n
    }

    fn end_spin_state(&self, t: f64) -> Result<EndSpinState> {
        self.state(t, InitialState::Mixture)
    }
}

pub fn end_spin_state(
    realization: &CouplingRealization,
    t: f64,
    initial: InitialState,
) -> Result<EndSpinState> {
    FreeFermionDynamics::new(realization)?.state(t, initial)
}
