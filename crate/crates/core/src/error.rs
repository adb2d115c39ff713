use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed word {text:?}: {reason}")]
    Parse { text: String, reason: &'static str },

    #[error("malformed number {text:?}: {reason}")]
    Number { text: String, reason: String },

    #[error("invalid input: {0}")]
    Domain(String),

    /// A branch could not be decided at the working precision.
    #[error("precision exhausted at {bits} bits: {context}")]
    PrecisionExhausted { bits: u32, context: String },

    #[error("word is already periodic")]
    AlreadyPeriodic,

    #[error("digit source exhausted after {available} digits ({needed} needed)")]
    CallbackExhausted { needed: usize, available: usize },

    #[error("prefix is not a kneading prefix: {0}")]
    InvalidPrefix(String),

    #[error("automaton construction exceeded {limit} states")]
    EscalationFailed { limit: usize },

    #[error("reduction of the periodized pair failed: {0}")]
    ReductionFailed(String),

    #[error("no finite-type approximation found up to cut {max_cut}")]
    NoProgress { max_cut: usize },

    #[error("i/o failure: {0}")]
    Io(String),

    /// A certified bound or identity failed; indicates a bug, never bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn precision(bits: u32, context: impl Into<String>) -> Self {
        Error::PrecisionExhausted { bits, context: context.into() }
    }

    /// Process exit status for command-line front ends.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PrecisionExhausted { .. } | Error::CallbackExhausted { .. } => 2,
            Error::Invariant(_) => 3,
            Error::ReductionFailed(_) | Error::NoProgress { .. } | Error::EscalationFailed { .. } => 2,
            _ => 1,
        }
    }
}
