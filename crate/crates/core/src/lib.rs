//! Distributed optimal reduction of lambda terms by directed virtual reduction.

pub mod algebra;
pub mod canon;
pub mod engine;
pub mod metrics;
pub mod net;
pub mod oracle;
pub mod runtime;
pub mod translate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Translate(#[from] translate::TranslateError),
    #[error(transparent)]
    Algebra(#[from] algebra::AlgebraError),
    #[error(transparent)]
    Net(#[from] net::NetError),
    #[error(transparent)]
    Runtime(#[from] runtime::RuntimeError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for algebra failures, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        use runtime::RuntimeError as R;
        match self {
            Error::Translate(_) | Error::Usage(_) => 2,
            Error::Algebra(_) => 3,
            Error::Runtime(R::Engine {
                source: engine::EngineError::Algebra(_),
                ..
            }) => 3,
            Error::Oracle(oracle::OracleError::Algebra(_)) => 3,
            _ => 4,
        }
    }
}
