use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin: {0}")]
    InvalidSpin(String),
    #[error("invalid magnetic quantum number 2m = {twice_m} for 2j = {twice_j}")]
    InvalidM { twice_j: u32, twice_m: i64 },
    #[error("invalid intelligent-state label N = {n} (must satisfy 0 <= N <= {twice_j})")]
    InvalidLabel { n: u32, twice_j: u32 },
    #[error("intelligent-state parameter tau = {re}{im:+}i is neither real nor purely imaginary")]
    InvalidTau { re: f64, im: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not hermitian: imaginary residue {residue:e}")]
    NonHermitian { residue: f64 },
    #[error("adjoint-action fit failed: residual {residual:e}")]
    SolveFailure { residual: f64 },
    #[error("coordinate out of range: {0}")]
    OutOfRange(String),
    #[error("chart is singular at theta_{index} = {value}")]
    Singular { index: usize, value: f64 },
    #[error("moment index out of range: ({m}, {n}) for N = {dim}")]
    IndexOutOfRange { m: usize, n: usize, dim: u32 },
    #[error("method {method} is not available for this functional")]
    MethodUnavailable { method: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
