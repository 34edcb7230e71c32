use thiserror::Error;

/// Errors raised by geometry, potentials, dynamics and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// A point or tangent vector does not satisfy its representation constraint.
    #[error("representation error: {0}")]
    Representation(String),

    /// Two points are at or beyond the injectivity radius, so the logarithm is undefined.
    #[error(
        "cut locus: distance {distance} reaches the injectivity limit {limit} \
         (initial data too spread out)"
    )]
    CutLocus { distance: f64, limit: f64 },

    #[error("degenerate angle: {0}")]
    DegenerateAngle(String),

    #[error("degenerate triangle: pairwise distance {0} is zero")]
    DegenerateTriangle(f64),

    /// The potential has `g'(s) < 0` somewhere, violating attractiveness.
    #[error("potential is not attractive: g'({s}) = {value} < 0")]
    NotAttractive { s: f64, value: f64 },

    #[error("dead-zone radius {zeta} must be below r_w/2 = {bound}")]
    DeadZoneTooLarge { zeta: f64, bound: f64 },

    #[error(
        "iteration did not converge after {iterations} iterations \
         (gradient norm {gradient_norm:e})"
    )]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    /// A time step produced an invalid state; a smaller `dt` usually helps.
    #[error("step failed at t = {time}: {reason}; try a smaller dt")]
    Step { time: f64, reason: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Whether the error stems from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CutLocus { .. }
                | Error::NonConvergence { .. }
                | Error::Step { .. }
                | Error::DegenerateAngle(_)
                | Error::DegenerateTriangle(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
