use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain configuration: {0}")]
    InvalidSpec(String),

    #[error("infinite anisotropy cannot enter a numerical Hamiltonian")]
    InfiniteAnisotropy,

    #[error("chain of {n} sites exceeds the exact-diagonalization limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("ground manifold has dimension {0}, expected at most 2")]
    UnexpectedDegeneracy(usize),

    #[error("no local maximum of the fully entangled fraction above its initial value before t = {horizon}")]
    NoMaximum { horizon: f64 },

    #[error("need at least {need} data points, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("non-positive value {0} cannot enter a logarithmic fit")]
    NonPositive(f64),

    #[error("state with fidelity {0} is not purifiable (criterion f > 1/2)")]
    NotPurifiable(f64),

    #[error("purification did not reach fidelity {threshold} within {steps} steps")]
    NotConverged { threshold: f64, steps: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures that indicate broken numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFault(_) | Error::UnexpectedDegeneracy(_)
        )
    }
}
