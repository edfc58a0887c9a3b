//! Source snapshot model and the construction (mapping) expressions that
//! build and repopulate class extensions.
//!
//! Snapshots are line-delimited records, one object per line:
//! `{"class":…, "key":…, "attributes":{…}, "relationships":{…}}`.
//! Mapping evaluation is pure with respect to its snapshot.

mod mapping;
mod source;

pub use mapping::{
    evaluate_mapping, validate_mapping, BoundExpr, MappingExpr, MappingRow, SetCombine,
};
pub use source::{SourceCatalog, SourceClassDecl, SourceObject, SourceSnapshot};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error("unknown source class {0:?}")]
    UnknownSourceClass(String),
    #[error("duplicate source key {key:?} in class {class:?}")]
    DuplicateSourceKey { class: String, key: String },
    #[error("relationship {via:?} of {class}:{key} references a key that is not in the snapshot")]
    UnresolvedReference {
        class: String,
        key: String,
        via: String,
    },
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
