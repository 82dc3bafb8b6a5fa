use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("density cannot be normalized: {0}")]
    NotNormalizable(String),

    #[error("q-Gaussian with q={q}, alpha={alpha} is not integrable in {dims} dimension(s): need q > {bound}")]
    NonIntegrable {
        q: f64,
        alpha: f64,
        dims: usize,
        bound: f64,
    },

    #[error("grid too coarse: {inside} points inside the support along axis {axis}, need at least {required}")]
    GridTooCoarse {
        axis: usize,
        inside: usize,
        required: usize,
    },

    #[error("degenerate escort: integral of g^{q} is {integral}")]
    DegenerateEscort { q: f64, integral: f64 },

    #[error("coarse-graining factor {factor} does not divide {points} points on axis {axis}")]
    IncompatibleFactor {
        axis: usize,
        factor: usize,
        points: usize,
    },

    #[error("support mismatch: {cells} cell(s) carry numerator mass where the reference density vanishes")]
    SupportMismatch { cells: usize },

    #[error("boundary leak: relative boundary value {ratio:e} exceeds {limit:e}")]
    BoundaryLeak { ratio: f64, limit: f64 },

    #[error("limit sequence did not converge: successive extrapolants differ by {spread:e}")]
    NonConvergent { spread: f64 },

    #[error("Jacobian of h is singular or not finite")]
    JacobianSingular,

    #[error("Fisher information matrix is singular")]
    SingularFisherMatrix,

    #[error("unstable step: minimum value {min:e} after update (dt too large)")]
    UnstableStep { min: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
