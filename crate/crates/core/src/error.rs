//! Crate-wide error type.
//!
//! Numeric failure modes are first-class values: a degenerate spectrum or a
//! crossing characteristic is a diagnosis, not a panic. Every variant carries
//! the quantities a caller needs to decide whether to retry (smaller step,
//! finer grid) or abort.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// Two eigenvalues closer than the gap tolerance. Eigenvectors of a
    /// near-defective matrix are unreliable, so downstream overlap work must
    /// not proceed.
    #[error("degenerate spectrum: min eigenvalue gap {min_gap:.3e} below tolerance {gap_tol:.3e}")]
    DegenerateSpectrum { min_gap: f64, gap_tol: f64 },

    /// The shifted QR iteration exhausted its sweep budget.
    #[error("eigensolver failed to converge within {budget} QR sweeps (n = {n})")]
    NoConvergence { budget: usize, n: usize },

    /// A pivot in the LU factorization fell below the singularity threshold.
    #[error("singular matrix: pivot magnitude {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    /// A Cholesky pivot was non-positive: the input is not Hermitian positive
    /// definite (or w = 0 made the regularized Gram matrix singular).
    #[error("not positive definite: Cholesky pivot {pivot:.3e} at index {index}")]
    NotPositiveDefinite { pivot: f64, index: usize },

    /// A gauge factor of exactly zero (the scale transformation requires
    /// invertible c_j).
    #[error("gauge factor at index {index} is zero")]
    ZeroGaugeFactor { index: usize },

    /// A gauge factor with modulus outside the admissible range.
    #[error(
        "gauge factor at index {index} has modulus {modulus:.3e} outside [{lo:.0e}, {hi:.0e}]"
    )]
    GaugeOutOfRange {
        index: usize,
        modulus: f64,
        lo: f64,
        hi: f64,
    },

    /// Best and second-best eigenvalue assignments are within the ambiguity
    /// tolerance: a near-collision. Callers should reduce the step size.
    #[error("ambiguous eigenvalue matching: best and second-best assignments differ by {gap:.3e}")]
    AmbiguousMatching { gap: f64 },

    /// A statistical test was asked to run with too few samples.
    #[error("insufficient samples: {got} below the minimum {min}")]
    InsufficientSamples { got: usize, min: usize },

    /// The pairing quadrature cannot refine far enough to resolve |w| near an
    /// eigenvalue within its depth budget.
    #[error(
        "quadrature grid too coarse: required cell size {required:.3e} near an atom, \
         achievable {achievable:.3e}"
    )]
    GridTooCoarse { required: f64, achievable: f64 },

    /// No positive root of the characteristic fixed point: the point lies
    /// outside the support at r = 0.
    #[error("no root: z outside the support of the density at r = 0")]
    NoRoot,

    /// Characteristics crossing: the characteristic-map derivative dropped
    /// below the shock guard along the continuation path.
    #[error("shock detected: |1 - 2t dv0/dr| = {derivative:.3e} below guard {guard:.3e}")]
    ShockDetected { derivative: f64, guard: f64 },

    /// Failure inside one trajectory of an ensemble, with provenance.
    #[error("trajectory {traj} failed at step {step}: {source}")]
    Trajectory {
        traj: u64,
        step: u64,
        #[source]
        source: Box<Error>,
    },

    /// Malformed matrix text fixture.
    #[error("invalid matrix text: {0}")]
    MatrixFormat(String),

    /// Malformed or inconsistent run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with ensemble provenance.
    pub fn in_trajectory(self, traj: u64, step: u64) -> Error {
        Error::Trajectory {
            traj,
            step,
            source: Box::new(self),
        }
    }
}
