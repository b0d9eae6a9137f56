//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An expectation value of a Hermitian observable came out with a
    /// non-negligible imaginary part, which signals broken Hermiticity
    /// somewhere upstream.
    #[error("expectation value has imaginary residual {imag:.3e} (limit {limit:.1e})")]
    ImaginaryResidual { imag: f64, limit: f64 },

    /// A truncated Fock-space computation lost more probability mass than the
    /// declared budget allows.
    #[error("Fock cutoff too small: deficit {deficit:.3e} exceeds {limit:.1e}")]
    CutoffTooSmall { deficit: f64, limit: f64 },

    /// A state and a witness (or operator list) disagree on mode counts.
    #[error("mode-count mismatch: operator side has {expected} modes, state side has {actual}")]
    ModelMismatch { expected: usize, actual: usize },

    /// The norm of a coherent superposition underflowed.
    #[error("superposition norm underflow (coefficients nearly cancel)")]
    DegenerateNorm,

    /// Doubling the quadrature order still moved the result too much.
    #[error("quadrature not converged: doubling the order changed the result by {delta:.3e}")]
    QuadratureNotConverged { delta: f64 },

    /// Every cross-block weight vanished during a block update.
    #[error("degenerate block-update weights (all cross-block factors are zero)")]
    DegenerateWeights,

    /// The alternating solver hit its sweep budget before the objective
    /// stopped moving.
    #[error("separability-eigenvalue iteration did not converge within {sweeps} sweeps")]
    NotConverged { sweeps: usize },

    #[error("displacements are not collinear along the requested phases")]
    NotCollinear,

    #[error("stationarity polynomial has no real root")]
    NoRealRoot,

    #[error("detection efficiency must be strictly positive")]
    ZeroEfficiency,

    #[error("affine rescaling requires a strictly positive scale")]
    NonpositiveScale,

    #[error("bisection interval does not bracket a sign change")]
    NoSignChange,

    /// The matrix fed to a covariance criterion violates the uncertainty
    /// relation (smallest symplectic eigenvalue {nu_min}).
    #[error("invalid covariance matrix: smallest symplectic eigenvalue {nu_min:.6} < 1/2")]
    InvalidCovariance { nu_min: f64 },

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
