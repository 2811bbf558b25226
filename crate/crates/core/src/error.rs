use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by the pricing numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter {
        field: &'static str,
        reason: &'static str,
    },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    #[error("index {index} is not an interior node of a vector with {len} entries")]
    BoundaryIndex { index: usize, len: usize },

    #[error("mesh condition violated: {0}")]
    Mesh(MeshViolation),

    #[error("scheme diverged: non-finite value at time step {step}, node {node}")]
    Divergence { step: usize, node: usize },

    #[error(
        "Picard iteration stopped after {iterations} sweeps at time step {step} \
         without meeting the tolerance (last increment {increment:e})"
    )]
    PicardNotConverged {
        step: usize,
        iterations: usize,
        increment: f64,
    },

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("point {x} lies outside the grid [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { field, reason }
    }
}

/// A failed mesh-ratio inequality, carrying both sides of the comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshViolation {
    /// `Σ_high·√Δt ≤ h` does not hold.
    ExplicitLower { lhs: f64, h: f64 },
    /// `h ≤ 2Σ_low² / max(2r − Σ_low², Σ_high² − 2r)` does not hold.
    Upper { h: f64, bound: f64 },
    /// `S_max·Σ_high·√Δt ≤ h_s` does not hold.
    PriceLower { lhs: f64, h: f64 },
    /// `h_s ≤ S_min·Σ_low² / r` does not hold.
    PriceUpper { h: f64, bound: f64 },
}

impl fmt::Display for MeshViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MeshViolation::ExplicitLower { lhs, h } => write!(
                f,
                "Sigma_high*sqrt(dt) <= h fails ({lhs:e} > {h:e}); use more time steps"
            ),
            MeshViolation::Upper { h, bound } => write!(
                f,
                "h <= 2*Sigma_low^2/max(2r-Sigma_low^2, Sigma_high^2-2r) fails ({h:e} > {bound:e}); \
                 use more spatial intervals"
            ),
            MeshViolation::PriceLower { lhs, h } => write!(
                f,
                "S_max*Sigma_high*sqrt(dt) <= h_s fails ({lhs:e} > {h:e}); use more time steps"
            ),
            MeshViolation::PriceUpper { h, bound } => write!(
                f,
                "h_s <= S_min*Sigma_low^2/r fails ({h:e} > {bound:e}); use more spatial intervals"
            ),
        }
    }
}
