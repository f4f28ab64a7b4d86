use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero vector: {0}")]
    ZeroVector(&'static str),

    #[error("input is not a unit vector (|v| = {norm})")]
    NotUnit { norm: f64 },

    #[error("singular group element")]
    SingularGroupElement,

    #[error("not a Lie bracket: Jacobi defect {defect:e}")]
    NotLie { defect: f64 },

    #[error("bracket is not nilpotent")]
    NotNilpotent,

    #[error("bracket is not critical: residual {residual:e} >= {tol:e}")]
    NotCritical { residual: f64, tol: f64 },

    #[error("flow did not converge (status {0})")]
    NotConverged(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid bracket index ({i}, {j}, {k}) for n = {n}")]
    BadIndex { i: usize, j: usize, k: usize, n: usize },

    #[error("expected a real bracket")]
    ComplexInput,
}

pub type Result<T> = std::result::Result<T, Error>;
