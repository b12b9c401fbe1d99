use thiserror::Error;

/// Errors produced by estimation, smoothing and inference routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty sample")]
    EmptySample,

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("empty knot set in [{start}, {end}]")]
    EmptyKnotSet { start: f64, end: f64 },

    #[error("duplicate vertex time {0}")]
    DuplicateVertex(f64),

    #[error("point {x} outside the estimate's domain [{lower}, {upper}]")]
    OutsideDomain { x: f64, lower: f64, upper: f64 },

    #[error("singular boundary system at s = {0}")]
    SingularBoundarySystem(f64),

    #[error("point {x} is within one bandwidth ({bandwidth}) of a support endpoint")]
    NotInterior { x: f64, bandwidth: f64 },

    #[error("bias bandwidth exceeds interior margin (x0 = {x0}, b1 = {bandwidth})")]
    BiasBandwidthMargin { x0: f64, bandwidth: f64 },

    #[error("derivative undefined at {0}: no jump of the estimate on both sides")]
    DerivativeUndefined(f64),

    #[error("survival estimate zero at {0}")]
    SurvivalZero(f64),

    #[error("second derivative is zero: no finite optimal bandwidth")]
    NoFiniteOptimum,

    #[error("unsupported significance level {0}: only 0.05 has a tabulated Chernoff quantile")]
    UnsupportedAlpha(f64),

    #[error("grid point {index}: {source}")]
    Grid {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
