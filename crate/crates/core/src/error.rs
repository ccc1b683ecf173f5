use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid gauge: {0}")]
    InvalidGauge(String),
    #[error("empty ball at x = {x}, r = {r}")]
    EmptyBall { x: f64, r: f64 },
    #[error("zero ball mass with negative exponent at leaf {leaf}")]
    ZeroMassLeaf { leaf: usize },
    #[error("empty support: every center was excluded")]
    EmptySupport,
    #[error("empty rung set")]
    EmptyRungSet,
    #[error("not a grid scale: {0}")]
    NotGridScale(f64),
    #[error("need at least {needed} finite points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no sign change of the scaling slope on [{lo}, {hi}]: slopes {slope_lo} and {slope_hi}")]
    NoSignChange { lo: f64, hi: f64, slope_lo: f64, slope_hi: f64 },
    #[error("q-grid too sparse: {0}")]
    SparseGrid(String),
    #[error("log of zero integral: {0}")]
    ZeroIntegral(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
