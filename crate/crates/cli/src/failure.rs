use std::fmt::Display;
use std::process::ExitCode;

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed input, config or selector: exit 2.
    Input(String),
    /// Anything else, including refused overwrites: exit 1.
    Other(String),
}

pub type Outcome<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn input(e: impl Display) -> Self {
        Failure::Input(e.to_string())
    }

    pub fn other(e: impl Display) -> Self {
        Failure::Other(e.to_string())
    }

    pub fn report(&self) -> ExitCode {
        match self {
            Failure::Input(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Failure::Other(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
        }
    }
}
