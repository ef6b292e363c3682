//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, compilation, integration, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("register size k = {0} unsupported (must be 1..=4)")]
    UnsupportedRegisterSize(usize),

    #[error("marked bitstring {marked:?} invalid for k = {k}: {reason}")]
    InvalidMarked {
        marked: String,
        k: usize,
        reason: String,
    },

    #[error("level index {level} out of range for {kind}")]
    LevelOutOfRange { level: usize, kind: &'static str },

    #[error("atom index {atom} out of range (k = {k})")]
    AtomOutOfRange { atom: usize, k: usize },

    #[error("operator shape {got:?} does not match site dimension {want}")]
    OperatorShape { got: (usize, usize), want: usize },

    #[error("interaction spec does not match scheme: {0}")]
    SchemeMismatch(String),

    #[error("ancilla laser drive set in direct-blockade scheme")]
    AncillaDriveWithoutAncilla,

    #[error("blockade linewidth undefined: total Rydberg decay rate is zero")]
    LinewidthUndefined,

    #[error("schedule must contain at least one iteration")]
    NoIterations,

    #[error("schedule lint failed: {0}")]
    ScheduleLint(String),

    #[error("integration fault at t = {time:.6e} s: {detail}")]
    IntegrationFault { time: f64, detail: String },

    #[error("cannot aggregate an empty trajectory ensemble")]
    EmptyEnsemble,

    #[error("master-equation mode limited to k <= 3 (got k = {0})")]
    MeTooLarge(usize),

    #[error("master-equation cross-check failed: max |z| = {max_z:.3}")]
    MecheckFailed { max_z: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    TomlParse(String),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 mecheck validation,
    /// 3 integration fault.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MecheckFailed { .. } => 2,
            Error::IntegrationFault { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
