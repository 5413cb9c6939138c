use thiserror::Error;

/// Errors of the command-line tools. Format problems exit with 1, I/O
/// problems with 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn format(msg: impl Into<String>) -> Self {
        CliError::Format(msg.into())
    }
}

impl From<tvc::Error> for CliError {
    fn from(e: tvc::Error) -> Self {
        match e {
            tvc::Error::Io(m) => CliError::Io(std::io::Error::other(m)),
            e => CliError::Format(e.to_string()),
        }
    }
}

/// Process exit code for an error chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<std::io::Error>() {
            return 2;
        }
        match cause.downcast_ref::<CliError>() {
            Some(CliError::Io(_)) => return 2,
            Some(CliError::Format(_)) => return 1,
            None => {}
        }
        if let Some(e) = cause.downcast_ref::<tvc::Error>() {
            return if e.is_format() { 1 } else { 2 };
        }
    }
    1
}
