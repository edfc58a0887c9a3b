//! Historization and archival: refresh demotes changed current values
//! into past states with domain coalescing; configuration rules select
//! past states and archive them through strong or moderate aggregation.
//!
//! Single-writer contract: refresh mutates a working copy of the store
//! and commits it atomically; mapping and typing errors leave the store
//! unchanged.

mod archive;
mod refresh;
mod rules;

pub use archive::{archive_states, coalesce};
pub use refresh::{refresh, RefreshReport};
pub use rules::apply_rules;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LifecycleError {
    #[error("refresh at {at} is not after the last refresh {last}")]
    NonMonotonicTimestamp {
        last: crate::temporal::Instant,
        at: crate::temporal::Instant,
    },
    #[error("mapping failed: {0}")]
    Mapping(#[from] crate::extraction::ExtractionError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Temporal(#[from] crate::temporal::TemporalError),
    #[error("object {0}: past states overlap, store is corrupt")]
    OverlapDetected(String),
    #[error("class {0} has no archive filter")]
    NoArchiveFilter(String),
    #[error("class {0} uses moderate aggregation without a `by unit(n)` grain")]
    MissingArchiveGrain(String),
    #[error("object {oid}: archive block {block} collides with an existing archive state")]
    BlockCollision { oid: String, block: String },
    #[error("object {oid}: a selected state is not one of its past states")]
    SelectionNotPast { oid: String },
    #[error("rule {rule}: {message}")]
    RuleEvaluation { rule: String, message: String },
    #[error("unknown environment {0:?}")]
    UnknownEnvironment(String),
}
