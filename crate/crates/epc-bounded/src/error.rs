use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EpcError {
    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),

    #[error(transparent)]
    Scqp(#[from] scqp::ScqpError),

    #[error(transparent)]
    Calculus(#[from] kruskal_calculus::CalculusError),

    #[error(transparent)]
    Solver(#[from] cpd_algorithms::SolverError),

    #[error("infeasible start: residual {residual} exceeds the bound {delta}")]
    InfeasibleStart { residual: f64, delta: f64 },

    #[error("invalid configuration: {0}")]
    BadConfig(String),
}
