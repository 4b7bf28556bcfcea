//! Recurrence entanglement purification on Bell-diagonal pairs.
//!
//! One round takes two pairs, applies a bilateral CNOT (source pair as
//! control), measures the target pair in the computational basis on both
//! sides and keeps the source pair when the outcomes coincide. No twirl is
//! applied, so the full Bell-diagonal structure is tracked.
//!
//! The protocol's natural fixed point is Φ⁺; our target is Ψ⁺. A local σˣ on
//! Bob's qubit exchanges Ψ⁺ ↔ Φ⁺ and Ψ⁻ ↔ Φ⁻, and is applied before and undone
//! after every round.

use nalgebra::{Matrix4, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freefermion::EndSpinState;

const WEIGHT_TOL: f64 = 1e-12;
/// Hard cap on recurrence rounds.
pub const MAX_STEPS: usize = 64;

/// Weights on (Ψ⁺, Ψ⁻, Φ⁺, Φ⁻).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonal {
    pub weights: [f64; 4],
}

/// Local Pauli that brings the dominant Bell state onto Ψ⁺.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Identity,
    /// Swaps Ψ⁺ ↔ Ψ⁻ and Φ⁺ ↔ Φ⁻.
    SigmaZ,
    /// Swaps Ψ⁺ ↔ Φ⁺ and Ψ⁻ ↔ Φ⁻.
    SigmaX,
    /// Swaps Ψ⁺ ↔ Φ⁻ and Ψ⁻ ↔ Φ⁺.
    SigmaY,
}

impl BellDiagonal {
    pub const PSI_PLUS: usize = 0;
    pub const PSI_MINUS: usize = 1;
    pub const PHI_PLUS: usize = 2;
    pub const PHI_MINUS: usize = 3;

    pub fn new(weights: [f64; 4]) -> Result<Self> {
        let s = BellDiagonal { weights };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| !(w >= -WEIGHT_TOL)) || (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidArgument(format!(
                "not a Bell-diagonal state: {:?}",
                self.weights
            )));
        }
        Ok(())
    }

    /// `f|Ψ⁺⟩⟨Ψ⁺| + (1-f)/2 (|↑↑⟩⟨↑↑| + |↓↓⟩⟨↓↓|)`, the form of the end-spin
    /// pair at its entanglement peak.
    pub fn from_fidelity(f: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!(
                "fidelity {f} outside [0, 1]"
            )));
        }
        let rest = 0.5 * (1.0 - f);
        Self::new([f, 0.0, rest, rest])
    }

    /// Exact Bell decomposition of the end-spin X-state: Ψ± get `b ± c`, and
    /// the (a, a) block with no coherence splits evenly over Φ±.
    pub fn from_end_spin_state(state: &EndSpinState) -> Result<Self> {
        Self::new([state.b + state.c, state.b - state.c, state.a, state.a])
    }

    /// Weight on the Ψ⁺ target.
    pub fn fidelity(&self) -> f64 {
        self.weights[Self::PSI_PLUS]
    }

    fn apply(&self, o: Orientation) -> Self {
        let [pp, pm, fp, fm] = self.weights;
        let weights = match o {
            Orientation::Identity => [pp, pm, fp, fm],
            Orientation::SigmaZ => [pm, pp, fm, fp],
            Orientation::SigmaX => [fp, fm, pp, pm],
            Orientation::SigmaY => [fm, fp, pm, pp],
        };
        BellDiagonal { weights }
    }

    /// Rotates the largest weight onto Ψ⁺.
    pub fn oriented(&self) -> (Self, Orientation) {
        let largest = (0..4).fold(0, |best, i| {
            if self.weights[i] > self.weights[best] {
                i
            } else {
                best
            }
        });
        let o = match largest {
            Self::PSI_PLUS => Orientation::Identity,
            Self::PSI_MINUS => Orientation::SigmaZ,
            Self::PHI_PLUS => Orientation::SigmaX,
            _ => Orientation::SigmaY,
        };
        (self.apply(o), o)
    }
}

/// One recurrence round in closed form; returns the kept pair and the
/// coincidence probability.
///
/// With `(s, d, u, v)` the (Ψ⁺, Ψ⁻, Φ⁺, Φ⁻) weights, the round succeeds with
/// `p = (s + d)² + (u + v)²` and yields
/// `((s² + d²), 2sd, (u² + v²), 2uv) / p`.
pub fn recurrence_step(state: &BellDiagonal) -> (BellDiagonal, f64) {
    let [s, d, u, v] = state.weights;
    let p = (s + d).powi(2) + (u + v).powi(2);
    let weights = [
        (s * s + d * d) / p,
        2.0 * s * d / p,
        (u * u + v * v) / p,
        2.0 * u * v / p,
    ];
    (BellDiagonal { weights }, p)
}

fn bell_vectors() -> [Vector4<f64>; 4] {
    // computational order |00⟩, |01⟩, |10⟩, |11⟩ on (Alice, Bob)
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        Vector4::new(0.0, h, h, 0.0),
        Vector4::new(0.0, h, -h, 0.0),
        Vector4::new(h, 0.0, 0.0, h),
        Vector4::new(h, 0.0, 0.0, -h),
    ]
}

/// Reference implementation of [`recurrence_step`] on the 16×16 density
/// matrix of two pairs.
pub fn recurrence_step_dense(state: &BellDiagonal) -> (BellDiagonal, f64) {
    let bell = bell_vectors();
    let mut pair = Matrix4::<f64>::zeros();
    for (w, b) in state.weights.iter().zip(&bell) {
        pair += *w * b * b.transpose();
    }
    // σˣ on Bob: |a b⟩ → |a, 1-b⟩
    let bob_flip = Matrix4::from_fn(|r, c| if r == (c ^ 1) { 1.0 } else { 0.0 });
    let pair = bob_flip * pair * bob_flip;

    // qubit order (A1, B1, A2, B2), index = a1·8 + b1·4 + a2·2 + b2
    let joint: SMatrix<f64, 16, 16> =
        SMatrix::from_fn(|r, c| pair[(r >> 2, c >> 2)] * pair[(r & 3, c & 3)]);
    let bcnot = |x: usize| {
        let (a1, b1) = ((x >> 3) & 1, (x >> 2) & 1);
        x ^ (a1 << 1) ^ b1
    };
    let u: SMatrix<f64, 16, 16> = SMatrix::from_fn(|r, c| if r == bcnot(c) { 1.0 } else { 0.0 });
    let after = u * joint * u.transpose();

    let mut kept = Matrix4::<f64>::zeros();
    for r in 0..4 {
        for c in 0..4 {
            for target in [0b00usize, 0b11] {
                kept[(r, c)] += after[((r << 2) | target, (c << 2) | target)];
            }
        }
    }
    let p = kept.trace();
    let out = bob_flip * (kept / p) * bob_flip;
    let mut weights = [0.0; 4];
    for (w, b) in weights.iter_mut().zip(&bell) {
        *w = (b.transpose() * out * b)[(0, 0)];
    }
    (BellDiagonal { weights }, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationStep {
    pub input: BellDiagonal,
    pub success_probability: f64,
    pub output: BellDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurificationTrace {
    pub initial: BellDiagonal,
    pub orientation: Orientation,
    pub threshold: f64,
    pub steps: Vec<PurificationStep>,
    /// Mean number of raw pairs per output pair, `Π 2 / p_i`.
    pub expected_pairs: f64,
    pub final_fidelity: f64,
    /// How `expected_pairs` is counted.
    pub pair_counting: String,
}

impl PurificationTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }
}

/// Repeats recurrence rounds until the Ψ⁺ weight reaches `threshold`.
pub fn purify_until(state: &BellDiagonal, threshold: f64) -> Result<PurificationTrace> {
    state.validate()?;
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (1/2, 1), got {threshold}"
        )));
    }
    let (mut current, orientation) = state.oriented();
    if current.fidelity() <= 0.5 {
        return Err(Error::NotPurifiable(current.fidelity()));
    }
    let mut steps = Vec::new();
    let mut expected_pairs = 1.0;
    while current.fidelity() < threshold {
        if steps.len() == MAX_STEPS {
            return Err(Error::NotConverged {
                threshold,
                steps: MAX_STEPS,
            });
        }
        let (output, p) = recurrence_step(&current);
        expected_pairs *= 2.0 / p;
        steps.push(PurificationStep {
            input: current,
            success_probability: p,
            output,
        });
        current = output;
    }
    Ok(PurificationTrace {
        initial: *state,
        orientation,
        threshold,
        steps,
        expected_pairs,
        final_fidelity: current.fidelity(),
        pair_counting: "expected value: product over rounds of 2 / success probability".into(),
    })
}
