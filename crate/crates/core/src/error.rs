use thiserror::Error;

use crate::draft::{HeroId, Team};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A schedule, generator or search configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("draft is complete; no team is to act")]
    NoTurn,

    #[error("illegal action: hero {hero} at step {step}: {reason}")]
    IllegalAction {
        hero: HeroId,
        step: usize,
        reason: String,
    },

    /// Input data violates a record or dataset constraint. `location` names
    /// the offending line when the data came from a file.
    #[error("data error{}: {message}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Data {
        location: Option<String>,
        message: String,
    },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("AUC is undefined for a dataset containing a single class")]
    UndefinedAuc,

    #[error("illegal query: {0}")]
    IllegalQuery(String),

    #[error("instance too large for exhaustive search: {size:.3e} lines exceeds {limit:.0e}")]
    SearchTooLarge { size: f64, limit: f64 },

    #[error("strategy {strategy} ({team}) returned illegal hero {hero} at step {step}")]
    Protocol {
        strategy: String,
        team: Team,
        step: usize,
        hero: HeroId,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn data(message: impl Into<String>) -> Self {
        Error::Data {
            location: None,
            message: message.into(),
        }
    }

    pub(crate) fn data_at(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            location: Some(location.into()),
            message: message.into(),
        }
    }
}
