//! Embeddable temporal object-warehouse engine.
//!
//! A warehouse object keeps one *current* state, a set of *past* states
//! (detailed value history over multi-interval temporal domains) and a set
//! of *archive* states (summarised history produced by aggregation). The
//! crate provides:
//!
//! - **temporal**: calendar units, instants, closed intervals,
//!   multi-interval temporal domains and the Allen relations generalised
//!   to domains;
//! - **model**: values, states, warehouse objects/classes, temporal and
//!   archive filters, environments and the schema catalog;
//! - **extraction**: source snapshots and the mapping expressions that
//!   build class extensions from them;
//! - **lifecycle**: refresh (historization with domain coalescing) and
//!   rule-driven archival with strong/moderate aggregation;
//! - **algebra**: the query operators over object sets, state sets and
//!   chronological series (restriction, temporal joins, groupings,
//!   series restructuring and analytic aggregation);
//! - **dsl**: parsers, a typechecker and an evaluator for the textual
//!   schema/rule/query languages, plus result renderers;
//! - **store**: the file-backed store with atomic save and locking.

pub mod algebra;
pub mod dsl;
pub mod extraction;
pub mod lifecycle;
pub mod model;
pub mod store;
pub mod temporal;

#[cfg(test)]
pub(crate) mod testutil;
