use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A QR factorization produced a (numerically) vanishing diagonal entry.
    /// Along a trajectory this means the frame has more columns than the
    /// unstable subspace has dimensions, or the subspace is tangent to the
    /// stable one.
    #[error(
        "degenerate basis: |r[{index}][{index}]| = {value:e} is below tolerance {tolerance:e}"
    )]
    DegenerateBasis {
        index: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("singular triangular factor: |r[{index}][{index}]| = {value:e}")]
    SingularR { index: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The map derivative is unbounded at the evaluation point.
    #[error("derivative singularity at x = {x:?}")]
    DerivativeSingularity { x: Vec<f64> },

    #[error("zero derivative d1 = {0:e}")]
    ZeroDerivative(f64),

    #[error("ambiguous Lyapunov spectrum: exponent {exponent} lies within {gap_tol} of zero")]
    AmbiguousSpectrum { exponent: f64, gap_tol: f64 },

    #[error("non-finite value in {0}")]
    NonFiniteState(&'static str),

    #[error("histogram row {0} has no visits")]
    EmptyRow(usize),

    #[error("singular Jacobian: |det| = {det:e}")]
    SingularJacobian { det: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Wraps a numerical failure with the trajectory step at which it occurred.
    #[error("step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: u64) -> Error {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with any step annotation removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }

    /// Step index attached to the error, if any.
    pub fn step(&self) -> Option<u64> {
        match self {
            Error::AtStep { step, .. } => Some(*step),
            _ => None,
        }
    }
}
