use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised across the crate. Variants follow the failure classes of the
/// pipeline; point-carrying variants hold the offending state.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("non-finite objective data at {point:?}: {msg}")]
    Evaluation { point: Vec<f64>, msg: String },
    #[error("training failed at iteration {iteration}: {msg}")]
    Training { iteration: usize, msg: String },
    #[error("kappa estimation failed at {point:?}: non-finite gradient")]
    Estimation { point: Vec<f64> },
    #[error("dynamics failed at {point:?}: {msg}")]
    Dynamics { point: Vec<f64>, msg: String },
    #[error("solver error: {0}")]
    Solver(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("quadrature oracle out of range: {0}")]
    OracleRange(String),
}

pub type Result<T> = core::result::Result<T, Error>;
