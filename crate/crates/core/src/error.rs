//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numerical layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input matrix failed its Hermitian symmetry check.
    #[error("matrix is not Hermitian (max |A - A^dag| = {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    /// A nominally positive-semidefinite matrix had an eigenvalue below the
    /// clamping threshold.
    #[error("spectrum not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NegativeSpectrum { min_eigenvalue: f64 },

    /// Operands or states live on incompatible spaces.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The Fock truncation cannot hold the requested state.
    #[error("Fock truncation too small (norm deficit {deficit:.3e})")]
    TruncationTooSmall { deficit: f64 },

    /// Subsystem index outside the register.
    #[error("index {index} out of range for {len} subsystem(s)")]
    IndexOutOfRange { index: usize, len: usize },

    /// The protocol supports one, two, or three two-level systems.
    #[error("unsupported atom count {0} (supported: 1, 2, 3)")]
    UnsupportedAtomCount(usize),

    /// Lindblad integration lost too much trace; the caller must refine the
    /// step size.
    #[error("integrator step too large (trace drift {drift:.3e})")]
    StepSizeTooLarge { drift: f64 },

    /// Post-selection on an outcome with vanishing probability.
    #[error("post-selection outcome has zero probability")]
    ZeroProbabilityOutcome,

    /// Every branch optimum fell below the t = 0 baseline, which signals a
    /// truncation or decoherence failure.
    #[error("optimization failed to improve on the t = 0 baseline")]
    NoImprovement,

    /// Unrecognized figure-reproduction tag.
    #[error("unknown figure tag `{0}`")]
    UnknownTag(String),
}

pub type Result<T> = std::result::Result<T, Error>;
