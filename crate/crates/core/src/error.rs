use thiserror::Error;

/// Errors produced by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("decomposition failure: {0}")]
    DecompositionFailure(String),

    /// The reference state has a symplectic eigenvalue at (or numerically at) one.
    #[error("divergent log density: symplectic eigenvalue {nu} is within tolerance of 1")]
    DivergentLogDensity { nu: f64 },

    #[error("no thermal match: energy {energy} does not exceed the vacuum energy {vacuum}")]
    NoThermalMatch { energy: f64, vacuum: f64 },

    #[error("thermality estimator undefined: closest thermal state has zero entropy")]
    UndefinedEstimator,

    #[error("propagator accuracy failure: symplectic violation {violation:e}")]
    PropagatorAccuracy { violation: f64 },

    #[error("integration step too large: symplectic drift {drift:e}")]
    StepTooLarge { drift: f64 },

    #[error("spectral failure: {0}")]
    SpectralFailure(String),

    #[error("no unique fixed point: |d_i d_j| = {product} is within tolerance of 1")]
    NoUniqueFixedPoint { product: f64 },

    #[error("growth overflow: covariance norm exceeded cap after {k} cycles")]
    GrowthOverflow { k: u64 },

    #[error("Fock space too large: dimension {dim} exceeds cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("Fock cutoff too small: top-level population {leakage:e}")]
    CutoffTooSmall { leakage: f64 },

    #[error("cycle {cycle}: {source}")]
    AtCycle { cycle: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_cycle(self, cycle: usize) -> Self {
        Error::AtCycle { cycle, source: Box::new(self) }
    }

    /// Strips any cycle annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtCycle { source, .. } => source.root(),
            other => other,
        }
    }
}
