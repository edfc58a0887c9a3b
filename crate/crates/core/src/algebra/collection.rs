//! Runtime collections flowing between algebra operators.

use crate::model::{Oid, Value};
use crate::temporal::{Interval, TemporalDomain, TemporalUnit};

use super::AlgebraError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateRole {
    Current,
    Past,
    Archive,
}

impl StateRole {
    pub fn name(self) -> &'static str {
        match self {
            StateRole::Current => "current",
            StateRole::Past => "past",
            StateRole::Archive => "archive",
        }
    }
}

/// A state as seen by the algebra: structural value plus temporal
/// domain. States detached from the store (join results, projections)
/// have no owner. Current states carry `open_end`: their domain is
/// closed at the last refresh instant for evaluation and rendered with
/// an open end.
#[derive(Debug, Clone, PartialEq)]
pub struct AState {
    pub owner: Option<Oid>,
    pub role: Option<StateRole>,
    pub value: Value,
    pub domain: TemporalDomain,
    pub open_end: bool,
}

impl AState {
    pub fn detached(value: Value, domain: TemporalDomain) -> AState {
        AState {
            owner: None,
            role: None,
            value,
            domain,
            open_end: false,
        }
    }

    /// Value-equality key: deep structural equality of value and domain.
    pub fn value_key(&self) -> (&Value, &TemporalDomain) {
        (&self.value, &self.domain)
    }
}

/// Output element of the grouping operators and of the non-temporal
/// join.
#[derive(Debug, Clone, PartialEq)]
pub enum Tuple {
    /// `(window, set of structural values)` from UGroup/DGroup.
    Window { window: Interval, values: Vec<Value> },
    /// Concatenated value pair from Join; each side's domain is carried
    /// through untouched when the operands were states.
    Pair {
        value: Value,
        left_domain: Option<TemporalDomain>,
        right_domain: Option<TemporalDomain>,
    },
}

/// One element of a temporal series: a single-interval state.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesElem {
    pub value: Value,
    pub interval: Interval,
}

/// Chronologically ordered states with single-interval domains.
///
/// [`Series::new`] enforces the restructuring invariants (uniform unit,
/// strictly chronological elements). Analytic operators build their
/// outputs through [`Series::from_ordered`]: cumulative elements share
/// their origin grain, so pairwise precedence holds for restructured
/// series, not for every analytic result.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    elems: Vec<SeriesElem>,
}

impl Series {
    pub fn new(elems: Vec<SeriesElem>) -> Result<Series, AlgebraError> {
        if let Some(first) = elems.first() {
            let unit = first.interval.unit();
            for e in &elems {
                if e.interval.unit() != unit {
                    return Err(crate::temporal::TemporalError::MixedUnits {
                        expected: unit,
                        found: e.interval.unit(),
                    }
                    .into());
                }
            }
            for pair in elems.windows(2) {
                if pair[0].interval.end().index() >= pair[1].interval.start().index() {
                    return Err(AlgebraError::OverlappingStates);
                }
            }
        }
        Ok(Series { elems })
    }

    /// Construction path for operator outputs that are ordered by
    /// construction.
    pub(crate) fn from_ordered(elems: Vec<SeriesElem>) -> Series {
        Series { elems }
    }

    pub fn elements(&self) -> &[SeriesElem] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn unit(&self) -> Option<TemporalUnit> {
        self.elems.first().map(|e| e.interval.unit())
    }
}

/// Collection kinds of the algebra's type discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    ObjectSet,
    StateSet,
    StateSetSet,
    TupleSet,
    Series,
    Value,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ObjectSet => "object set",
            Kind::StateSet => "state set",
            Kind::StateSetSet => "set of state sets",
            Kind::TupleSet => "tuple set",
            Kind::Series => "series",
            Kind::Value => "value",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Collection {
    Objects(Vec<Oid>),
    States(Vec<AState>),
    /// One inner set per object; empty inner sets are retained.
    StateSets(Vec<Vec<AState>>),
    Tuples(Vec<Tuple>),
    Series(Series),
    Value(Value),
}

impl Collection {
    pub fn kind(&self) -> Kind {
        match self {
            Collection::Objects(_) => Kind::ObjectSet,
            Collection::States(_) => Kind::StateSet,
            Collection::StateSets(_) => Kind::StateSetSet,
            Collection::Tuples(_) => Kind::TupleSet,
            Collection::Series(_) => Kind::Series,
            Collection::Value(_) => Kind::Value,
        }
    }

    pub fn expect_states(&self) -> Result<&[AState], AlgebraError> {
        match self {
            Collection::States(s) => Ok(s),
            other => Err(AlgebraError::KindMismatch {
                expected: Kind::StateSet.name(),
                found: other.kind().name(),
            }),
        }
    }

    pub fn expect_objects(&self) -> Result<&[Oid], AlgebraError> {
        match self {
            Collection::Objects(o) => Ok(o),
            other => Err(AlgebraError::KindMismatch {
                expected: Kind::ObjectSet.name(),
                found: other.kind().name(),
            }),
        }
    }

    pub fn expect_series(&self) -> Result<&Series, AlgebraError> {
        match self {
            Collection::Series(s) => Ok(s),
            other => Err(AlgebraError::KindMismatch {
                expected: Kind::Series.name(),
                found: other.kind().name(),
            }),
        }
    }
}
