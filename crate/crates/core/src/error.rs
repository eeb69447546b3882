use thiserror::Error;

/// Errors raised by the numerical kernel, the propagators and the protocol engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (|det| = {det:e}, scale = {scale:e})")]
    SingularMatrix { det: f64, scale: f64 },

    #[error("drift matrix is not Hurwitz (max eigenvalue real part = {max_real_part:e})")]
    NotHurwitz { max_real_part: f64 },

    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    #[error("spectral radius {0} >= 1: the protocol map is unstable")]
    SpectralRadiusGEOne(f64),

    #[error("I + W·(σ0 − X1) is singular at t = {time:e}: finite escape time")]
    SingularDeltaInversion { time: f64 },

    #[error("step too large: dt·rate = {0} exceeds the RK4 accuracy guard")]
    StepTooLarge(f64),

    #[error("trap frequency {omega} is overdamped (needs > |a1 − a2|/2 = {half_gap})")]
    Overdamped { omega: f64, half_gap: f64 },

    #[error("protocol fixed point not reached after {cycles} cycles (last relative change {last_change:e})")]
    NonConverged { cycles: usize, last_change: f64 },

    #[error("measurement efficiency {0} is outside (0, 1]")]
    InvalidEfficiency(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
