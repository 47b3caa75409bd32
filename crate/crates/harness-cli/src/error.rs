use thiserror::Error;

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),

    #[error(transparent)]
    Solver(#[from] cpd_algorithms::SolverError),

    #[error(transparent)]
    Epc(#[from] epc_bounded::EpcError),

    #[error("target correlation structure is not positive definite (min eigenvalue {min_eig})")]
    InfeasibleGram { min_eig: f64 },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("cannot add noise to a zero tensor")]
    ZeroTensorNoise,

    #[error("malformed tensor file: {0}")]
    BadFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
