//! Scenario scripting, deterministic replay and state persistence.

mod run;
mod script;
mod snapshot;

use thiserror::Error;

use crate::error::PoolError;

pub use run::{run_scenario, EventRecord, Failure, Outcome, RunOptions, RunOutput, RunTranscript};
pub use script::{
    parse_scenario, Amounts, ArbitrageMethod, Event, EventKind, Expect, Report, ScenarioScript, StateCheck,
    FORMAT_VERSION,
};
pub use snapshot::{restore, sha256_hex, snapshot, state_digest, Snapshot, SNAPSHOT_VERSION};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("schema error at `{path}` (line {line}): {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("snapshot integrity error: {0}")]
    Integrity(String),
    #[error("block {block}, event {index} ({kind}) failed with pool state {digest}: {source}")]
    Event { block: usize, index: usize, kind: String, digest: String, source: Box<EngineError> },
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl EngineError {
    /// Input problems (bad script or file) as opposed to failures while running.
    pub fn is_input_error(&self) -> bool {
        matches!(self, EngineError::Schema { .. } | EngineError::Invalid(_) | EngineError::Integrity(_) | EngineError::Io { .. })
    }
}
