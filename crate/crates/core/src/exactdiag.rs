//! Exact diagonalization of the open XXZ chain in fixed-magnetization sectors.
//!
//! Basis states are bit patterns: bit `k - 1` set means site k is up.
//! Each pure component of a mixed state lives in one sector, since the total
//! z-magnetization commutes with the Hamiltonian.

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};

use crate::entangle::EndSpinDynamics;
use crate::error::{Error, Result};
use crate::freefermion::EndSpinState;
use crate::model::{neel_state, Anisotropy, CouplingRealization, NeelOrder};

/// Largest chain the dense engine accepts.
pub const MAX_SITES: usize = 15;

const NORM_TOL: f64 = 1e-12;
const DEGENERACY_REL_TOL: f64 = 1e-10;
const DEGENERACY_ABS_TOL: f64 = 1e-12;
const RDM_TOL: f64 = 1e-9;
const X_STRUCTURE_TOL: f64 = 1e-10;

fn check_size(n: usize) -> Result<()> {
    if n > MAX_SITES {
        return Err(Error::TooLarge { n, max: MAX_SITES });
    }
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 sites, got {n}"
        )));
    }
    Ok(())
}

/// All N-site patterns with exactly `m_up` set bits, ascending.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub n: usize,
    pub m_up: usize,
    pub states: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl SectorBasis {
    pub fn new(n: usize, m_up: usize) -> Result<Self> {
        check_size(n)?;
        if m_up > n {
            return Err(Error::InvalidArgument(format!(
                "{m_up} up spins on {n} sites"
            )));
        }
        let mut states = Vec::new();
        if m_up == 0 {
            states.push(0);
        } else {
            // Gosper's hack enumerates same-popcount integers in increasing order.
            let limit = 1u64 << n;
            let mut x = (1u64 << m_up) - 1;
            while x < limit {
                states.push(x);
                let low = x & x.wrapping_neg();
                let ripple = x + low;
                x = (((ripple ^ x) >> 2) / low) | ripple;
            }
        }
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(SectorBasis {
            n,
            m_up,
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn position(&self, pattern: u64) -> Option<usize> {
        self.index.get(&pattern).copied()
    }
}

/// H restricted to one magnetization sector.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub basis: SectorBasis,
    pub matrix: DMatrix<f64>,
    pub delta: f64,
    pub couplings: CouplingRealization,
}

/// `H = Σ_k (J_k/2)(σˣσˣ + σʸσʸ + Δ σᶻσᶻ)` on the sector with `m_up` up spins.
pub fn build_sector_hamiltonian(
    realization: &CouplingRealization,
    delta: Anisotropy,
    m_up: usize,
) -> Result<SectorHamiltonian> {
    let delta = delta.finite().ok_or(Error::InfiniteAnisotropy)?;
    let basis = SectorBasis::new(realization.n_sites(), m_up)?;
    let dim = basis.dim();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (col, &x) in basis.states.iter().enumerate() {
        let mut diag = 0.0;
        for (k, &jk) in realization.couplings.iter().enumerate() {
            let pair = (x >> k) & 0b11;
            let aligned = pair == 0b00 || pair == 0b11;
            diag += 0.5 * jk * delta * if aligned { 1.0 } else { -1.0 };
            if !aligned {
                let y = x ^ (0b11 << k);
                let row = basis.position(y).expect("exchange preserves magnetization");
                matrix[(row, col)] = jk;
            }
        }
        matrix[(col, col)] = diag;
    }
    Ok(SectorHamiltonian {
        basis,
        matrix,
        delta,
        couplings: realization.clone(),
    })
}

/// How a mixed initial state was obtained.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MixtureOrigin {
    /// Equal mixture of the two ideal Néel product states.
    IdealNeel,
    /// Equal-weight mixture of the full degenerate ground multiplet.
    GroundMultiplet { energy: f64, dimension: usize },
}

#[derive(Debug, Clone)]
pub struct PureComponent {
    pub weight: f64,
    pub m_up: usize,
    pub vector: DVector<Complex64>,
}

#[derive(Debug, Clone)]
pub struct MixedState {
    pub n: usize,
    pub components: Vec<PureComponent>,
    pub origin: MixtureOrigin,
}

impl MixedState {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::NumericalFault(format!(
                "mixture weights sum to {total}"
            )));
        }
        for c in &self.components {
            if c.weight < 0.0 {
                return Err(Error::NumericalFault(format!(
                    "negative mixture weight {}",
                    c.weight
                )));
            }
            let norm = c.vector.norm();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::NumericalFault(format!("component norm {norm}")));
            }
        }
        Ok(())
    }
}

fn neel_component(which: NeelOrder, n: usize) -> Result<PureComponent> {
    let neel = neel_state(which, n)?;
    let basis = SectorBasis::new(n, neel.up_count())?;
    let mut vector = DVector::zeros(basis.dim());
    vector[basis
        .position(neel.bits())
        .expect("Néel pattern in its sector")] = Complex64::new(1.0, 0.0);
    Ok(PureComponent {
        weight: 0.5,
        m_up: neel.up_count(),
        vector,
    })
}

/// Initial state before the quench.
///
/// For `Δ₁ = ∞` this is `(|N₁⟩⟨N₁| + |N₂⟩⟨N₂|)/2`. For finite `Δ₁ > 1` every
/// sector is diagonalized and the eigenstates within `1e-10·|E₀|` (floor
/// `1e-12`) of the global minimum are mixed with equal weights.
pub fn ground_mixture(realization: &CouplingRealization, delta1: Anisotropy) -> Result<MixedState> {
    let n = realization.n_sites();
    check_size(n)?;
    let d1 = match delta1 {
        Anisotropy::Infinite => {
            let components = vec![
                neel_component(NeelOrder::N1, n)?,
                neel_component(NeelOrder::N2, n)?,
            ];
            return Ok(MixedState {
                n,
                components,
                origin: MixtureOrigin::IdealNeel,
            });
        }
        Anisotropy::Finite(d) => d,
    };
    if !(d1 > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "finite pre-quench anisotropy must exceed 1 (Néel phase), got {d1}"
        )));
    }
    let mut candidates: Vec<(f64, usize, DVector<f64>)> = Vec::new();
    for m_up in 0..=n {
        let h = build_sector_hamiltonian(realization, delta1, m_up)?;
        let eig = SymmetricEigen::new(h.matrix);
        for (i, &e) in eig.eigenvalues.iter().enumerate() {
            candidates.push((e, m_up, eig.eigenvectors.column(i).into_owned()));
        }
    }
    let e0 = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let tol = (DEGENERACY_REL_TOL * e0.abs()).max(DEGENERACY_ABS_TOL);
    let ground: Vec<_> = candidates.into_iter().filter(|c| c.0 - e0 <= tol).collect();
    if ground.len() > 2 {
        return Err(Error::UnexpectedDegeneracy(ground.len()));
    }
    let weight = 1.0 / ground.len() as f64;
    let dimension = ground.len();
    let components = ground
        .into_iter()
        .map(|(_, m_up, v)| PureComponent {
            weight,
            m_up,
            vector: v.map(|x| Complex64::new(x, 0.0)),
        })
        .collect();
    let state = MixedState {
        n,
        components,
        origin: MixtureOrigin::GroundMultiplet {
            energy: e0,
            dimension,
        },
    };
    state.validate()?;
    Ok(state)
}

struct SectorEigen {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

/// A mixed state prepared for repeated evolution under `H(Δ₂)`: each
/// occupied sector is diagonalized once and each component is stored in the
/// eigenbasis.
pub struct ExactDynamics {
    n: usize,
    initial: MixedState,
    sectors: BTreeMap<usize, SectorEigen>,
    /// Eigenbasis coefficients of each component.
    coefficients: Vec<DVector<Complex64>>,
    hamiltonians: BTreeMap<usize, DMatrix<f64>>,
}

impl ExactDynamics {
    pub fn new(
        initial: MixedState,
        realization: &CouplingRealization,
        delta2: f64,
    ) -> Result<Self> {
        if realization.n_sites() != initial.n {
            return Err(Error::InvalidArgument(format!(
                "state has {} sites, couplings describe {}",
                initial.n,
                realization.n_sites()
            )));
        }
        initial.validate()?;
        let mut sectors = BTreeMap::new();
        let mut hamiltonians = BTreeMap::new();
        for c in &initial.components {
            if sectors.contains_key(&c.m_up) {
                continue;
            }
            let h = build_sector_hamiltonian(realization, Anisotropy::Finite(delta2), c.m_up)?;
            let eig = SymmetricEigen::new(h.matrix.clone());
            sectors.insert(
                c.m_up,
                SectorEigen {
                    energies: eig.eigenvalues.iter().copied().collect(),
                    vectors: eig.eigenvectors,
                },
            );
            hamiltonians.insert(c.m_up, h.matrix);
        }
        let coefficients = initial
            .components
            .iter()
            .map(|c| {
                let v = &sectors[&c.m_up].vectors;
                v.map(|x| Complex64::new(x, 0.0)).transpose() * &c.vector
            })
            .collect();
        Ok(ExactDynamics {
            n: initial.n,
            initial,
            sectors,
            coefficients,
            hamiltonians,
        })
    }

    /// Prepares the quench described by Δ₁ → Δ₂.
    pub fn quench(
        realization: &CouplingRealization,
        delta1: Anisotropy,
        delta2: f64,
    ) -> Result<Self> {
        Self::new(ground_mixture(realization, delta1)?, realization, delta2)
    }

    pub fn initial(&self) -> &MixedState {
        &self.initial
    }

    pub fn evolve(&self, t: f64) -> Result<MixedState> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time must be non-negative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(self.initial.clone());
        }
        let components = self
            .initial
            .components
            .iter()
            .zip(&self.coefficients)
            .map(|(c, coeff)| {
                let sector = &self.sectors[&c.m_up];
                let rotated = DVector::from_iterator(
                    coeff.len(),
                    coeff
                        .iter()
                        .zip(&sector.energies)
                        .map(|(a, &e)| a * Complex64::from_polar(1.0, -e * t)),
                );
                let dim = rotated.len();
                let mut vector = DVector::zeros(dim);
                for (m, amp) in rotated.iter().enumerate() {
                    let col = sector.vectors.column(m);
                    for (out, &v) in vector.iter_mut().zip(col.iter()) {
                        *out += amp * v;
                    }
                }
                PureComponent {
                    weight: c.weight,
                    m_up: c.m_up,
                    vector,
                }
            })
            .collect();
        Ok(MixedState {
            n: self.n,
            components,
            origin: self.initial.origin.clone(),
        })
    }

    /// `Σ_i w_i ⟨ψ_i|H(Δ₂)|ψ_i⟩`.
    pub fn energy(&self, state: &MixedState) -> f64 {
        state
            .components
            .iter()
            .map(|c| {
                let h = self.hamiltonians[&c.m_up].map(|x| Complex64::new(x, 0.0));
                c.weight * (c.vector.adjoint() * h * &c.vector)[(0, 0)].re
            })
            .sum()
    }
}

impl EndSpinDynamics for ExactDynamics {
    fn n_sites(&self) -> usize {
        self.n
    }

    fn end_spin_state(&self, t: f64) -> Result<EndSpinState> {
        two_spin_rdm(&self.evolve(t)?, 1, self.n)?.to_end_spin_state(t)
    }
}

pub fn evolve(
    state: &MixedState,
    realization: &CouplingRealization,
    delta2: f64,
    t: f64,
) -> Result<MixedState> {
    ExactDynamics::new(state.clone(), realization, delta2)?.evolve(t)
}

/// Two-site density matrix in the basis {↑↑, ↑↓, ↓↑, ↓↓}.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSpinMatrix(pub Matrix4<Complex64>);

impl TwoSpinMatrix {
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let herm = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = SymmetricEigen::new(herm).eigenvalues;
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > RDM_TOL {
            return Err(Error::NumericalFault(format!(
                "reduced state not Hermitian (defect {h})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > RDM_TOL {
            return Err(Error::NumericalFault(format!("reduced state trace {tr}")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -RDM_TOL {
            return Err(Error::NumericalFault(format!(
                "reduced state eigenvalue {min}"
            )));
        }
        Ok(())
    }

    /// Projects onto the end-spin X-state; every entry outside the X pattern
    /// must vanish and the diagonal must read (a, b, b, a).
    pub fn to_end_spin_state(&self, t: f64) -> Result<EndSpinState> {
        let m = &self.0;
        let mut stray = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                let on_x = r == c || (r, c) == (1, 2) || (r, c) == (2, 1);
                if !on_x {
                    stray = stray.max(m[(r, c)].norm());
                }
            }
        }
        stray = stray.max(m[(1, 2)].im.abs()).max(m[(2, 1)].im.abs());
        let mismatch = (m[(0, 0)].re - m[(3, 3)].re)
            .abs()
            .max((m[(1, 1)].re - m[(2, 2)].re).abs());
        if stray > X_STRUCTURE_TOL || mismatch > RDM_TOL {
            return Err(Error::NumericalFault(format!(
                "reduced state lacks the end-spin X structure (stray {stray}, diagonal mismatch {mismatch})"
            )));
        }
        let a = 0.5 * (m[(0, 0)].re + m[(3, 3)].re);
        let b = 0.5 * (m[(1, 1)].re + m[(2, 2)].re);
        let c = 0.5 * (m[(1, 2)].re + m[(2, 1)].re);
        let state = EndSpinState { a, b, c, t };
        state.validate()?;
        Ok(state)
    }
}

fn local_index(pattern: u64, i: usize, j: usize) -> usize {
    let up_i = (pattern >> (i - 1)) & 1;
    let up_j = (pattern >> (j - 1)) & 1;
    (2 * (1 - up_i) + (1 - up_j)) as usize
}

/// Reduced density matrix of sites `i < j` (1-based), traced over the rest.
pub fn two_spin_rdm(state: &MixedState, i: usize, j: usize) -> Result<TwoSpinMatrix> {
    if !(1 <= i && i < j && j <= state.n) {
        return Err(Error::InvalidArgument(format!(
            "site pair ({i}, {j}) on {} sites",
            state.n
        )));
    }
    let mask = (1u64 << (i - 1)) | (1u64 << (j - 1));
    let mut rho = Matrix4::<Complex64>::zeros();
    for comp in &state.components {
        let basis = SectorBasis::new(state.n, comp.m_up)?;
        let w = Complex64::new(comp.weight, 0.0);
        for (xi, &x) in basis.states.iter().enumerate() {
            let amp = comp.vector[xi];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let rest = x & !mask;
            let row = local_index(x, i, j);
            for local in [0u64, 1u64 << (i - 1), 1u64 << (j - 1), mask] {
                let y = rest | local;
                if let Some(yi) = basis.position(y) {
                    rho[(row, local_index(y, i, j))] += w * amp * comp.vector[yi].conj();
                }
            }
        }
    }
    let out = TwoSpinMatrix(rho);
    out.validate()?;
    Ok(out)
}
