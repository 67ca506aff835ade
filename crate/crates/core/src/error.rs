//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("row index {index} out of range for matrix with {n} rows")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid index subset: {0}")]
    InvalidSubset(String),

    #[error("subset count C({n},{q}) = {count} exceeds cap {cap}; raise the cap explicitly to proceed")]
    SubsetCapExceeded { n: usize, q: usize, count: u128, cap: u128 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is rank deficient: rank {rank} < q = {q}")]
    RankDeficient { rank: usize, q: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("design must have q <= n (got n = {n}, q = {q})")]
    WideDesign { n: usize, q: usize },

    #[error("tail bound unavailable: {0}")]
    TailBoundUnavailable(String),

    #[error("truncation radius {radius} is below the stabilization radius {required} for the requested delta")]
    StabilizationRadius { radius: f64, required: f64 },

    #[error("model is overparameterized: n - n0 = {effective} < q = {q}")]
    Overparameterized { effective: usize, q: usize },

    #[error("volume estimate did not converge; cannot be used here")]
    NotConverged,

    #[error("enumeration guard: n = {n} exceeds the limit {max} for 2^n enumeration")]
    EnumerationGuard { n: usize, max: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("every candidate model is separated; no finite score exists")]
    AllSeparated,
}

pub type Result<T> = std::result::Result<T, Error>;
