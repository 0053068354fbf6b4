use std::fmt;

use handbmc::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// An error that ends the run, with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Bad files, flags and corpora are input errors; everything the geometry or
/// the depth solver cannot handle is a numerical failure.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. }
        | Error::Schema { .. }
        | Error::InvalidPose(_)
        | Error::InvalidConfig(_)
        | Error::InvalidCamera(_)
        | Error::InvalidInterval { .. }
        | Error::InvalidHull(_)
        | Error::DegenerateReference(_)
        | Error::InsufficientData { .. }
        | Error::InsufficientPoints { .. }
        | Error::DegenerateSample { .. } => EXIT_INPUT,
        _ => EXIT_NUMERICAL,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}
