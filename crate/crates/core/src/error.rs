use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Wood anomaly at order ({n0}, {n1}): |omega^2 - q^2| = {distance:e}")]
    WoodAnomaly { n0: i64, n1: i64, distance: f64 },
    #[error("pole of the scattering amplitude at omega = {omega_re} + {omega_im}i")]
    Pole { omega_re: f64, omega_im: f64 },
    #[error("lattice resonance: |alpha_SE - i omega - J1| = {0:e}")]
    LatticeResonance(f64),
    #[error("near-singular system, condition estimate {condition:e}")]
    NearSingular { condition: f64 },
    #[error("no convergence: estimated error {estimate:e} exceeds tolerance {tolerance:e} ({context})")]
    NonConvergence {
        estimate: f64,
        tolerance: f64,
        context: String,
    },
    #[error("divergent quantity: {0}")]
    Divergent(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by the numerics rather than by the request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::NearSingular { .. } | Error::LatticeResonance(_)
        )
    }
}
