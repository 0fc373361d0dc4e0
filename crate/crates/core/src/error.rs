use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("pole of {func} at {at}")]
    Pole { func: &'static str, at: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge: {0}")]
    Convergence(String),
    #[error("evaluation too close to a singular line: {0}")]
    Singularity(String),
    #[error("quadrature tolerance not reached: {0}")]
    Tolerance(String),
    #[error("truncation not certified: {0}")]
    Truncation(String),
    #[error("integral diverges: {0}")]
    Divergence(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("tail bound not certified: {0}")]
    Tail(String),
    #[error("step size collapsed: {0}")]
    Stiffness(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
