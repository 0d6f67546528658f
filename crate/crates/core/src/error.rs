use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed boundary spec: {0}")]
    BoundaryParse(String),

    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),

    #[error("f' degree {0} exceeds the cap of {max}", max = crate::boundary::MAX_DEGREE)]
    DegreeTooHigh(usize),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("kernel order {0} exceeds the cap of {max}", max = crate::kernels::MAX_ORDER)]
    OrderTooHigh(usize),

    #[error("Gamma polynomial degree {0} exceeds the cap of {max}", max = crate::solutions::MAX_GAMMA_DEGREE)]
    GammaDegreeTooHigh(usize),

    #[error("quadrature needs an odd node count >= 3, got {0}")]
    BadNodeCount(usize),

    #[error("quadrature left an imaginary residue of {0:e}")]
    ImaginaryResidue(f64),

    #[error("time {t} outside [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("x must be non-negative, got {0}")]
    NegativeX(f64),

    #[error("x must be positive, got {0}")]
    NonPositiveX(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid {nt}x{nx} is too small (need at least {min} nodes per axis)")]
    GridTooSmall { nt: usize, nx: usize, min: usize },

    #[error("grids do not match")]
    GridMismatch,

    #[error("Simpson integration needs an odd x-node count, got {0}")]
    EvenNodeCount(usize),

    #[error("|Phi| = {value:e} at (t={t}, x={x}) is numerically zero")]
    ZeroPhi { t: f64, x: f64, value: f64 },

    #[error("phase step {step:.3} rad at (t={t}, x={x}) is too large to unwrap")]
    PhaseJump { t: f64, x: f64, step: f64 },

    #[error("field is complex where a real field is required")]
    ComplexField,

    #[error("invalid Monte Carlo config: {0}")]
    InvalidConfig(String),

    #[error("field csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
