use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("spectral data is not Hermitian-symmetric (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("wavevector index {index:?} out of range for axis sizes {points:?}")]
    IndexOutOfRange { index: Vec<i64>, points: Vec<usize> },

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("symbol is singular or ill-conditioned at xi = {xi:?} (condition number {condition:.3e})")]
    SingularSymbol { xi: Vec<f64>, condition: f64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("flow map Jacobian determinant {min_det:.3e} is below the margin {margin:.3e}")]
    JacobianMargin { min_det: f64, margin: f64 },

    #[error("inverse-map Newton iteration did not converge at node {node} (residual {residual:.3e})")]
    NewtonDivergence { node: usize, residual: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}
