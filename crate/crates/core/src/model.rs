//! Chain configuration, coupling disorder and Néel initial states.
//!
//! Sites are numbered 1..=N throughout the crate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Anisotropy Δ of the XXZ interaction. `Infinite` is the Ising limit, for
/// which the initial state is the ideal Néel mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anisotropy {
    Finite(f64),
    Infinite,
}

impl Anisotropy {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Anisotropy::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Anisotropy::Finite(d) => Some(d),
            Anisotropy::Infinite => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Anisotropy::Finite(d) => d,
            Anisotropy::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Anisotropy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Anisotropy::Finite(d) => write!(f, "{d}"),
            Anisotropy::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Anisotropy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Anisotropy::Infinite);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse anisotropy {s:?}")))?;
        if v.is_infinite() && v > 0.0 {
            Ok(Anisotropy::Infinite)
        } else if v.is_finite() {
            Ok(Anisotropy::Finite(v))
        } else {
            Err(Error::InvalidArgument(format!(
                "anisotropy must be a number or \"inf\", got {s:?}"
            )))
        }
    }
}

impl Serialize for Anisotropy {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Anisotropy::Finite(d) => serializer.serialize_f64(d),
            Anisotropy::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Anisotropy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) => Ok(Anisotropy::Finite(v)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Full description of one quench experiment.
///
/// Serialized as a flat JSON object with keys `n`, `j`, `delta1` (number or
/// `"inf"`), `delta2`, `disorder_sigma` and `seed`. Deserialization enforces
/// the same invariants as [`ChainSpec::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChainSpec")]
pub struct ChainSpec {
    pub n: usize,
    pub j: f64,
    pub delta1: Anisotropy,
    pub delta2: f64,
    pub disorder_sigma: f64,
    pub seed: u64,
}

#[derive(Deserialize)]
struct RawChainSpec {
    n: usize,
    #[serde(default = "default_j")]
    j: f64,
    delta1: Anisotropy,
    delta2: f64,
    #[serde(default)]
    disorder_sigma: f64,
    #[serde(default)]
    seed: u64,
}

fn default_j() -> f64 {
    1.0
}

impl TryFrom<RawChainSpec> for ChainSpec {
    type Error = Error;

    fn try_from(raw: RawChainSpec) -> Result<Self> {
        let spec = ChainSpec {
            n: raw.n,
            j: raw.j,
            delta1: raw.delta1,
            delta2: raw.delta2,
            disorder_sigma: raw.disorder_sigma,
            seed: raw.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ChainSpec {
    /// The analytic quench: ideal Néel mixture evolved by the clean XX chain, J = 1.
    pub fn ideal(n: usize) -> Self {
        ChainSpec {
            n,
            j: 1.0,
            delta1: Anisotropy::Infinite,
            delta2: 0.0,
            disorder_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least 2 sites, got {}",
                self.n
            )));
        }
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "coupling J must be positive, got {}",
                self.j
            )));
        }
        if !(self.delta2 >= 0.0 && self.delta2.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "post-quench anisotropy must be finite and non-negative, got {}",
                self.delta2
            )));
        }
        if let Anisotropy::Finite(d1) = self.delta1 {
            if !(d1 > self.delta2) {
                return Err(Error::InvalidSpec(format!(
                    "quench must lower the anisotropy, got {d1} -> {}",
                    self.delta2
                )));
            }
        }
        if !(self.disorder_sigma >= 0.0 && self.disorder_sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "disorder strength must be non-negative, got {}",
                self.disorder_sigma
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_clean(&self) -> bool {
        self.disorder_sigma == 0.0
    }
}

/// Sub-seed of one disorder realization. Independent of evaluation order.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    master ^ index
}

/// Bond strengths J_1..J_{N-1} of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRealization {
    pub couplings: Vec<f64>,
    pub seed_used: u64,
}

impl CouplingRealization {
    pub fn homogeneous(n: usize, j: f64) -> Self {
        CouplingRealization {
            couplings: vec![j; n.saturating_sub(1)],
            seed_used: 0,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.couplings.len() + 1
    }

    /// Returns the common coupling if every bond is identical.
    pub fn uniform_coupling(&self) -> Option<f64> {
        let first = *self.couplings.first()?;
        self.couplings.iter().all(|&c| c == first).then_some(first)
    }

    /// Relative offsets δ_k = J_k / J - 1.
    pub fn offsets(&self, j: f64) -> Vec<f64> {
        self.couplings.iter().map(|&c| c / j - 1.0).collect()
    }
}

/// Draws J_k = J (1 + δ_k) with δ_k ~ Normal(0, σ) from a ChaCha8 stream
/// seeded by `spec.seed`. Negative couplings are passed through unchanged.
pub fn realize_couplings(spec: &ChainSpec) -> CouplingRealization {
    let bonds = spec.n.saturating_sub(1);
    if spec.disorder_sigma == 0.0 {
        return CouplingRealization {
            couplings: vec![spec.j; bonds],
            seed_used: spec.seed,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // validated: sigma finite and positive here
    let normal = Normal::new(0.0, spec.disorder_sigma).expect("finite positive sigma");
    let couplings = (0..bonds)
        .map(|_| spec.j * (1.0 + normal.sample(&mut rng)))
        .collect();
    CouplingRealization {
        couplings,
        seed_used: spec.seed,
    }
}

/// The two translates of the Néel pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeelOrder {
    /// ↓↑↓↑…: spin up on even sites.
    N1,
    /// ↑↓↑↓…: spin up on odd sites.
    N2,
}

impl NeelOrder {
    pub const BOTH: [NeelOrder; 2] = [NeelOrder::N1, NeelOrder::N2];

    pub fn flipped(self) -> Self {
        match self {
            NeelOrder::N1 => NeelOrder::N2,
            NeelOrder::N2 => NeelOrder::N1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeelState {
    pub which: NeelOrder,
    pub n: usize,
    /// 1-based, ascending.
    pub up_sites: Vec<usize>,
}

impl NeelState {
    /// Number of up spins M.
    pub fn up_count(&self) -> usize {
        self.up_sites.len()
    }

    pub fn is_up(&self, site: usize) -> bool {
        match self.which {
            NeelOrder::N1 => site.is_multiple_of(2),
            NeelOrder::N2 => site % 2 == 1,
        }
    }

    /// Bit pattern with bit `k - 1` set when site k is up.
    pub fn bits(&self) -> u64 {
        self.up_sites
            .iter()
            .fold(0u64, |acc, &s| acc | (1u64 << (s - 1)))
    }
}

pub fn neel_state(which: NeelOrder, n: usize) -> Result<NeelState> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 sites, got {n}"
        )));
    }
    let first = match which {
        NeelOrder::N1 => 2,
        NeelOrder::N2 => 1,
    };
    Ok(NeelState {
        which,
        n,
        up_sites: (first..=n).step_by(2).collect(),
    })
}
