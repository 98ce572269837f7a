use thiserror::Error;

/// Errors raised by the library. Numeric payloads are widened to `f64`
/// regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid root system: {0}")]
    InvalidRootSystem(String),

    #[error("multiplicity rule violated ({rule}): {detail}")]
    MultiplicityRule { rule: &'static str, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not inside the Weyl chamber (margin {margin:e})")]
    OutsideChamber { margin: f64 },

    #[error("angle {theta} lies outside the open chamber sector (0, {upper})")]
    OutsideSector { theta: f64, upper: f64 },

    #[error("time {t} is past the end of the flow (collapse at {collapse:?})")]
    OutOfDomain { t: f64, collapse: Option<f64> },

    #[error("angle {beta} is within the pole guard of a cotangent term")]
    NearPole { beta: f64 },

    #[error("step size underflow at t = {t} (last good state {state:?})")]
    StepSizeUnderflow { t: f64, state: Vec<f64> },

    #[error("step budget of {steps} exhausted at t = {t}")]
    TooManySteps { steps: usize, t: f64 },

    #[error("minimal point search did not converge (best residual {residual:e})")]
    NoConvergence { residual: f64 },

    #[error("flow is stationary: initial data is already minimal")]
    Stationary,

    #[error("flow did not collapse before t = {t_end}")]
    NoCollapse { t_end: f64 },

    #[error("trajectories do not overlap in time")]
    NoOverlap,

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }
}
