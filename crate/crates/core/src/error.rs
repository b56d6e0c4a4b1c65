use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Unusable discretization (too few points, degenerate bounds, ...).
    InvalidDomain(&'static str),
    InvalidKernel(&'static str),
    /// Stencil wider than half the torus period with periodization disabled.
    Aliasing { radius: f64, half_period: f64 },
    /// A grid function does not live on the expected grid.
    GridMismatch { expected: usize, found: usize },
    InvalidCoefficient(&'static str),
    StepTooLarge { dt: f64, dt_max: f64 },
    NonFinite { t: f64 },
    /// An operation's documented precondition does not hold.
    Precondition(&'static str),
    Undersampled { frequency: f64, dt: f64, max_dt: f64 },
    HorizonTooShort { horizon: f64, required: f64 },
    NotConverged { iterations: usize },
    NonPositiveBound { mu: f64 },
    PullbackExhausted { depth: f64, gap: f64 },
    MonotonicityViolated { excess: f64 },
    Disagreement { gap: f64, tol: f64 },
    NonExpansionViolated { increase: f64, time: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDomain(msg) => write!(f, "invalid domain: {msg}"),
            Error::InvalidKernel(msg) => write!(f, "invalid kernel: {msg}"),
            Error::Aliasing { radius, half_period } => write!(
                f,
                "kernel truncation radius {radius} exceeds half the torus period {half_period}"
            ),
            Error::GridMismatch { expected, found } => {
                write!(f, "grid mismatch: expected {expected} values, found {found}")
            }
            Error::InvalidCoefficient(msg) => write!(f, "invalid coefficient: {msg}"),
            Error::StepTooLarge { dt, dt_max } => {
                write!(f, "time step {dt} exceeds the positivity bound {dt_max}")
            }
            Error::NonFinite { t } => write!(f, "non-finite state at t = {t}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Undersampled { frequency, dt, max_dt } => write!(
                f,
                "frequency {frequency} is undersampled: dt = {dt}, need dt <= {max_dt}"
            ),
            Error::HorizonTooShort { horizon, required } => {
                write!(f, "horizon {horizon} is shorter than the required {required}")
            }
            Error::NotConverged { iterations } => {
                write!(f, "no convergence after {iterations} iterations")
            }
            Error::NonPositiveBound { mu } => {
                write!(f, "iterated-kernel lower bound is not positive (mu = {mu})")
            }
            Error::PullbackExhausted { depth, gap } => write!(
                f,
                "pullback schedule exhausted at depth {depth} with gap {gap}"
            ),
            Error::MonotonicityViolated { excess } => {
                write!(f, "pullback monotonicity violated by {excess}")
            }
            Error::Disagreement { gap, tol } => {
                write!(f, "constructions disagree by {gap} (tolerance {tol})")
            }
            Error::NonExpansionViolated { increase, time } => write!(
                f,
                "part metric increased by {increase} at t = {time}"
            ),
        }
    }
}

impl core::error::Error for Error {}
