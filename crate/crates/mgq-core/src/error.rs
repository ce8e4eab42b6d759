use thiserror::Error;

/// Errors surfaced by the geometric and quantization kernels.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("point left the chart domain")]
    ChartExit,
    #[error("{context}: solver stalled, residual {residual:.3e} after {iters} iterations")]
    NewtonStall {
        context: &'static str,
        residual: f64,
        iters: usize,
    },
    #[error("singular jacobian in {0}")]
    SingularJacobian(&'static str),
    #[error("step size underflow at t = {0:.6}")]
    StepUnderflow(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
