use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector norm {norm:e} is below the degeneracy threshold")]
    DegenerateVector { norm: f64 },

    #[error("plane basis vectors are (nearly) parallel: |x × y| = {cross:e}")]
    DegenerateBasis { cross: f64 },

    #[error("degenerate palm: {reason}")]
    DegeneratePalm { reason: String },

    #[error("finger bone {bone} is degenerate (length below threshold)")]
    DegenerateBone { bone: usize },

    #[error("bone is parallel to its frame's y axis; flexion is undefined")]
    GimbalDegenerate,

    #[error("invalid interval: lower {lower} > upper {upper}")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("need at least {needed} angle points to build a hull, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("angle points are collinear or coincident (width {width:e})")]
    DegenerateDistribution { width: f64 },

    #[error("invalid hull: {0}")]
    InvalidHull(String),

    #[error("need at least {needed} usable poses, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("sample {index} is degenerate: {source}")]
    DegenerateSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("joint {joint} lies behind the camera (depth {depth:e})")]
    BehindCamera { joint: usize, depth: f64 },

    #[error("invalid camera intrinsics: {0}")]
    InvalidCamera(String),

    #[error("degenerate reference pair: {0}")]
    DegenerateReference(String),

    #[error("root depth quadratic has complex roots (discriminant {discriminant:e})")]
    ComplexRoots { discriminant: f64 },

    #[error("root depth quadratic has no admissible positive root (roots {roots:?})")]
    NoPositiveRoot { roots: [f64; 2] },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn palm(reason: impl Into<String>) -> Self {
        Error::DegeneratePalm {
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed geometry rather than bad input files.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateVector { .. }
                | Error::DegenerateBasis { .. }
                | Error::DegeneratePalm { .. }
                | Error::DegenerateBone { .. }
                | Error::GimbalDegenerate
                | Error::DegenerateSample { .. }
        )
    }
}
