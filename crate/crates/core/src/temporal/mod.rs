//! Temporal kernel: units, instants, intervals, multi-interval domains
//! and the Allen relations generalised to domains.
//!
//! Time is linear and discrete. Each [`TemporalUnit`] partitions the time
//! line into grains; an [`Instant`] is one grain, an [`Interval`] a closed
//! run of grains, and a [`TemporalDomain`] an ordered set of disjoint,
//! non-adjacent same-unit intervals. All values are immutable and every
//! operation is pure.

mod allen;
mod domain;
mod instant;

pub use allen::{allen_relate, contains, AllenRelation};
pub use domain::{Duration, Interval, TemporalDomain};
pub use instant::{Instant, TemporalUnit};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("mixed temporal units: expected {expected}, found {found}")]
    MixedUnits {
        expected: TemporalUnit,
        found: TemporalUnit,
    },
    #[error("operation requires a non-empty temporal domain")]
    EmptyDomain,
    #[error("units {0} and {1} are not comparable")]
    IncomparableUnits(TemporalUnit, TemporalUnit),
    #[error("unit {target} is not strictly coarser than {from}")]
    NotCoarser {
        from: TemporalUnit,
        target: TemporalUnit,
    },
    #[error("unit {target} is not strictly finer than {from}")]
    NotFiner {
        from: TemporalUnit,
        target: TemporalUnit,
    },
    #[error("empty interval: start {start} is after end {end}")]
    EmptyInterval { start: Instant, end: Instant },
    #[error("invalid {unit} coordinate: {text}")]
    BadCoordinate { unit: TemporalUnit, text: String },
    #[error("cannot parse instant from {0:?}")]
    BadInstant(String),
    #[error("cannot parse temporal unit from {0:?}")]
    BadUnit(String),
}
