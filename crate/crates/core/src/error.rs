use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate `{name}` must be positive, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },

    #[error("`{name}` = {value} is outside the model's validity regime (bound {bound})")]
    RegimeViolation {
        name: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("closed-form spectra require zero detuning, got Delta = {0}")]
    DetuningNotZeroForClosedForm(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("frequency grid is not symmetric about zero")]
    AsymmetricGrid,

    #[error("grids do not match ({0} vs {1} points)")]
    GridMismatch(usize, usize),

    #[error("unsupported field/detector combination: {0}")]
    UnsupportedCombo(String),

    #[error("spectrum turns negative ({0}); parameters are outside the physical range")]
    NegativeSpectrum(f64),

    #[error("degenerate sideband fit: {0}")]
    DegenerateFit(String),

    #[error("backaction p = {0} must be below 1/2")]
    BackactionTooLarge(f64),

    #[error("effective mechanical damping is not positive ({0})")]
    AntiDamping(f64),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("time step {dt} exceeds the allowed maximum {max}")]
    StepTooLarge { dt: f64, max: f64 },

    #[error("drift matrix is not stable: {0}")]
    UnstableDrift(String),

    #[error("time trace carries no cavity output record")]
    MissingOutputTrace,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sideband window [{low}, {high}] lies outside the estimated band (|omega| <= {nyquist})")]
    WindowOutOfRange { low: f64, high: f64, nyquist: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
