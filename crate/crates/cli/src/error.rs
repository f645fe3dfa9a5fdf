use thiserror::Error;

use crate::plot::PlotError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(renorm_lab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("plot error: {0}")]
    Plot(#[from] PlotError),
}

impl From<renorm_lab::Error> for CliError {
    fn from(e: renorm_lab::Error) -> Self {
        use renorm_lab::Error as E;
        match e {
            // rejected inputs rather than failed numerics
            E::UnknownPotential(_) | E::InvalidParameter(_) | E::NonAdmissible(_) | E::OddDimension(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    /// 2 for configuration errors, 3 for numerical or i/o failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}
