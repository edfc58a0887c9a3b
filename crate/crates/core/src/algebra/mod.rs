//! Query algebra over object sets, state sets and series: classical
//! operators, state access, temporal restriction/joins/groupings, and
//! the series transformation and analytic operators.
//!
//! All operators are pure functions over an immutable store snapshot.

mod collection;
mod context;
mod ops;
mod series;

pub use collection::{AState, Collection, Kind, Series, SeriesElem, StateRole, Tuple};
pub use context::{ObjectCtx, PairCtx, StateCtx};
pub use ops::{
    archive, current, dgroup, dup_elim, empty_elim, flatten, ijoin, join, nest, past, project,
    select, set_combine, state_restrict, ugroup, ujoin, unnest, SetOpEq, SetOpKind,
};
pub use series::{acum, agreg, amove, make_serie, scale_down, scale_up, AggSpec};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("expected a {expected}, found a {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("identity-based set operations apply to object sets only")]
    IdentityOnStates,
    #[error("states overlap on at least one grain and cannot form a series")]
    OverlappingStates,
    #[error("analytic operators reject empty series")]
    EmptySeries,
    #[error("unknown object {0:?}")]
    UnknownObject(String),
    #[error(transparent)]
    Temporal(#[from] crate::temporal::TemporalError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
