use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<cohdist::Error> for CliError {
    fn from(e: cohdist::Error) -> Self {
        use cohdist::Error as E;
        let msg = e.to_string();
        match e {
            E::CapExceeded { .. } | E::DimTooLarge(_) => CliError::Capacity(msg),
            E::ConvergenceFailure(_) | E::NumericalFailure(_) | E::IllPosed(_) => {
                CliError::Numerical(msg)
            }
            _ => CliError::Input(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
