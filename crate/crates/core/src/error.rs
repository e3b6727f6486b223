use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("iterative solver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("columns are not orthonormal (Gram residual {0:.3e})")]
    NotOrthonormal(f64),
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error("state is not normalized (norm {0:.12})")]
    NotNormalized(f64),
    #[error("density operator has a negative eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("density operator trace is {0:.12}, expected 1")]
    BadTrace(f64),
    #[error("bad bipartition: {0}")]
    BadPartition(String),
    #[error("cannot combine a pure state with a mixed state")]
    KindMismatch,
    #[error("operator is not unitary (residual {0:.3e})")]
    NotUnitary(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("operation requires a pure state")]
    NotPure,
    #[error("party dimensions differ: {0:?}")]
    MixedDims(Vec<usize>),
    #[error("search space of {size} cells exceeds the budget of {budget}")]
    TooLarge { size: usize, budget: usize },
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
