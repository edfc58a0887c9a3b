//! Warehouse data model: attribute values, states, warehouse objects,
//! classes with temporal/archive filters, environments and the schema
//! catalog.
//!
//! Schema and store values are immutable snapshots; mutation happens only
//! through the lifecycle engine under a single-writer contract.

mod agg;
mod object;
mod predicate;
mod schema;
mod validate;
mod value;

pub use agg::aggregate_values;
pub use object::{CurrentState, FiringRecord, HistState, Oid, WarehouseObject, WarehouseStore};
pub use predicate::{
    AttrRef, CmpOp, DomRef, Operand, Pred, PredContext, SubRef, WindowRel,
};
pub use schema::{
    AggKind, AggMode, AggregationFn, ArchiveFilter, ArchiveFilterEntry, ArchiveGrain,
    AttributeDecl, ConfigRule, Environment, OperationDecl, PropertySource, RelationshipDecl,
    RuleAction, RuleCondition, RuleEvent, TemporalFilter, TemporalFilterEntry, WarehouseClass,
    WarehouseSchema,
};
pub use validate::{state_structural_projection, validate_schema, ProjectionRole};
pub use value::{AttrValue, DeclaredType, Scalar, Value};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("missing attribute {0:?}")]
    MissingAttribute(String),
    #[error("attribute {attr:?}: expected {expected}, found {found}")]
    TypeMismatch {
        attr: String,
        expected: String,
        found: String,
    },
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("predicate type error: {0}")]
    PredicateType(String),
    #[error(transparent)]
    Temporal(#[from] crate::temporal::TemporalError),
}

/// Diagnostic severity; warnings do not block store initialisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A named finding of schema or mapping validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: impl Into<String>, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn warning(location: impl Into<String>, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.location, self.message)
    }
}

/// Accent folding for identifier comparison. Identifiers keep their
/// accents for storage and display; lookups accept unaccented spellings
/// (`uree` finds `urée`).
pub fn fold_char(c: char) -> char {
    match c {
        'à' | 'â' | 'ä' => 'a',
        'À' | 'Â' | 'Ä' => 'A',
        'é' | 'è' | 'ê' | 'ë' => 'e',
        'É' | 'È' | 'Ê' | 'Ë' => 'E',
        'î' | 'ï' => 'i',
        'Î' | 'Ï' => 'I',
        'ô' | 'ö' => 'o',
        'Ô' | 'Ö' => 'O',
        'ù' | 'û' | 'ü' => 'u',
        'Ù' | 'Û' | 'Ü' => 'U',
        'ç' => 'c',
        'Ç' => 'C',
        _ => c,
    }
}

pub fn fold_ident(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

pub fn ident_eq(a: &str, b: &str) -> bool {
    a == b || fold_ident(a) == fold_ident(b)
}
