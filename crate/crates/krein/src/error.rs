use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KreinError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("Nyquist violation: R = {r} is not below pi*N/(2*Lambda) = {limit}")]
    NyquistViolation { r: f64, limit: f64 },
    #[error("band [{a}, {b}] exceeds the Nyquist limit {limit}")]
    BandOutOfRange { a: f64, b: f64, limit: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("bad weight spec: {0}")]
    BadSpec(String),
    #[error("not locally integrable: {0}")]
    NonIntegrable(String),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("I + H_r is not positive at r = {r} (pivot {pivot:e})")]
    NotPositive { r: f64, pivot: f64 },
    #[error("continuation diverged from the direct solve at r = {r}: relative discrepancy {discrepancy:e}")]
    DivergedFromDirect { r: f64, discrepancy: f64 },
    #[error("step too large: |A| dr = {value} at r = {r}")]
    StepTooLarge { r: f64, value: f64 },
    #[error("test function support violation: {0}")]
    SupportViolation(String),
    #[error("regularity not certified for k = {k}: {detail}")]
    RegularityNotCertified { k: usize, detail: String },
    #[error("remainder cross-check failed: discrepancy {discrepancy:e}")]
    CrossCheckFailed { discrepancy: f64 },
    #[error("weight vanishes or is infinite at grid node {lambda}")]
    WeightVanishes { lambda: f64 },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("Neumann series not contractive: delta = {delta}")]
    NotContractive { delta: f64 },
    #[error("depth {depth} exceeded")]
    DepthExceeded { depth: u32 },
}

impl KreinError {
    /// Process exit code: 2 for configuration problems, 3 for numerical breakdown.
    pub fn exit_code(&self) -> i32 {
        use KreinError::*;
        match self {
            BadParameter(_) | NyquistViolation { .. } | BandOutOfRange { .. } | BadSpec(_)
            | GridMismatch | SupportViolation(_) | RegularityNotCertified { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, KreinError>;
