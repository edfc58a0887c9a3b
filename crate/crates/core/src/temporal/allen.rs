//! The thirteen Allen relations generalised to multi-interval domains,
//! plus the inclusive containment test used by temporal restriction.
//!
//! The six base relations compare interval endpoints with strict bounds;
//! reciprocals evaluate the base relation with swapped operands. `Equals`
//! is its own reciprocal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{TemporalDomain, TemporalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AllenRelation {
    Precedes,
    Follows,
    Meets,
    IsMeeted,
    Overlaps,
    IsOverlaped,
    During,
    IsDuring,
    Starts,
    IsStarted,
    Ends,
    IsFinished,
    Equals,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Precedes,
        AllenRelation::Follows,
        AllenRelation::Meets,
        AllenRelation::IsMeeted,
        AllenRelation::Overlaps,
        AllenRelation::IsOverlaped,
        AllenRelation::During,
        AllenRelation::IsDuring,
        AllenRelation::Starts,
        AllenRelation::IsStarted,
        AllenRelation::Ends,
        AllenRelation::IsFinished,
        AllenRelation::Equals,
    ];

    /// `rel(X, Y)` holds iff `rel.reciprocal()(Y, X)` holds.
    pub fn reciprocal(self) -> AllenRelation {
        use AllenRelation::*;
        match self {
            Precedes => Follows,
            Follows => Precedes,
            Meets => IsMeeted,
            IsMeeted => Meets,
            Overlaps => IsOverlaped,
            IsOverlaped => Overlaps,
            During => IsDuring,
            IsDuring => During,
            Starts => IsStarted,
            IsStarted => Starts,
            Ends => IsFinished,
            IsFinished => Ends,
            Equals => Equals,
        }
    }

    pub fn name(self) -> &'static str {
        use AllenRelation::*;
        match self {
            Precedes => "precedes",
            Follows => "follows",
            Meets => "meets",
            IsMeeted => "is_meeted",
            Overlaps => "overlaps",
            IsOverlaped => "is_overlaped",
            During => "strict_during",
            IsDuring => "is_during",
            Starts => "starts",
            IsStarted => "is_started",
            Ends => "ends",
            IsFinished => "is_finished",
            Equals => "equals",
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllenRelation {
    type Err = TemporalError;

    /// Surface names; `strict_during` is the strict relation, the plain
    /// `during` keyword of the query language maps to [`contains`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use AllenRelation::*;
        let folded = s.to_lowercase();
        Ok(match folded.as_str() {
            "precedes" => Precedes,
            "follows" => Follows,
            "meets" => Meets,
            "is_meeted" | "ismeeted" => IsMeeted,
            "overlaps" => Overlaps,
            "is_overlaped" | "isoverlaped" => IsOverlaped,
            "strict_during" => During,
            "is_during" | "isduring" => IsDuring,
            "starts" => Starts,
            "is_started" | "isstarted" => IsStarted,
            "ends" => Ends,
            "is_finished" | "isfinished" => IsFinished,
            "equals" => Equals,
            _ => return Err(TemporalError::BadUnit(s.to_string())),
        })
    }
}

fn check(x: &TemporalDomain, y: &TemporalDomain) -> Result<(), TemporalError> {
    if x.unit() != y.unit() {
        return Err(TemporalError::MixedUnits {
            expected: x.unit(),
            found: y.unit(),
        });
    }
    if x.is_empty() || y.is_empty() {
        return Err(TemporalError::EmptyDomain);
    }
    Ok(())
}

/// Evaluates `X rel Y` on two non-empty same-unit domains.
pub fn allen_relate(
    x: &TemporalDomain,
    y: &TemporalDomain,
    rel: AllenRelation,
) -> Result<bool, TemporalError> {
    check(x, y)?;
    use AllenRelation::*;
    Ok(match rel {
        Precedes => base_precedes(x, y),
        Follows => base_precedes(y, x),
        Meets => base_meets(x, y),
        IsMeeted => base_meets(y, x),
        Overlaps => base_overlaps(x, y),
        IsOverlaped => base_overlaps(y, x),
        During => base_during(x, y),
        IsDuring => base_during(y, x),
        Starts => base_starts(x, y),
        IsStarted => base_starts(y, x),
        Ends => base_ends(x, y),
        IsFinished => base_ends(y, x),
        Equals => base_equals(x, y),
    })
}

// X Precedes Y: the last end of X lies strictly before the first start of Y.
fn base_precedes(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    x.last().unwrap().index() < y.first().unwrap().index()
}

// X Meets Y: the last end of X equals the first start of Y.
fn base_meets(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    x.last().unwrap().index() == y.first().unwrap().index()
}

// X Overlaps Y: some interval of X straddles the start of some interval
// of Y with strict bounds.
fn base_overlaps(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    x.intervals().iter().any(|ix| {
        y.intervals().iter().any(|iy| {
            ix.start().index() < iy.start().index()
                && iy.start().index() < ix.end().index()
                && ix.end().index() < iy.end().index()
        })
    })
}

// X During Y: every interval of X lies strictly inside some interval of Y.
fn base_during(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    x.intervals().iter().all(|ix| {
        y.intervals().iter().any(|iy| {
            ix.start().index() > iy.start().index() && ix.end().index() < iy.end().index()
        })
    })
}

// X Starts Y: equal first starts.
fn base_starts(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    x.first().unwrap().index() == y.first().unwrap().index()
}

// X Ends Y: equal last ends.
fn base_ends(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    x.last().unwrap().index() == y.last().unwrap().index()
}

// X Equals Y: same interval count, pairwise equal endpoints.
fn base_equals(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    x.intervals().len() == y.intervals().len()
        && x.intervals()
            .iter()
            .zip(y.intervals().iter())
            .all(|(a, b)| {
                a.start().index() == b.start().index() && a.end().index() == b.end().index()
            })
}

/// Non-strict containment: every grain of `y` is a grain of `x`. This is
/// the window test of temporal restriction; it accepts boundary-touching
/// domains that the strict `During` relation rejects.
pub fn contains(x: &TemporalDomain, y: &TemporalDomain) -> Result<bool, TemporalError> {
    if x.unit() != y.unit() {
        return Err(TemporalError::MixedUnits {
            expected: x.unit(),
            found: y.unit(),
        });
    }
    Ok(y.intervals().iter().all(|iy| {
        x.intervals().iter().any(|ix| {
            ix.start().index() <= iy.start().index() && iy.end().index() <= ix.end().index()
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::{Instant, Interval, TemporalUnit};

    fn m(y: i64, mo: u8) -> Instant {
        Instant::month(y, mo).unwrap()
    }

    fn dom(pairs: &[((i64, u8), (i64, u8))]) -> TemporalDomain {
        let ivs: Vec<Interval> = pairs
            .iter()
            .map(|(a, b)| Interval::new(m(a.0, a.1), m(b.0, b.1)).unwrap())
            .collect();
        TemporalDomain::normalize(TemporalUnit::Month, &ivs).unwrap()
    }

    #[test]
    fn precedes_needs_strict_order_only() {
        // adjacent grains still count as precedes, not meets
        let x = dom(&[((2000, 7), (2000, 8))]);
        let y = dom(&[((2000, 9), (2000, 12))]);
        assert!(allen_relate(&x, &y, AllenRelation::Precedes).unwrap());
        assert!(!allen_relate(&x, &y, AllenRelation::Meets).unwrap());
        assert!(allen_relate(&y, &x, AllenRelation::Follows).unwrap());
    }

    #[test]
    fn equals_is_reflexive() {
        let x = dom(&[((2000, 7), (2000, 7)), ((2000, 9), (2000, 10))]);
        assert!(allen_relate(&x, &x, AllenRelation::Equals).unwrap());
    }

    #[test]
    fn during_holds_per_interval_with_strict_bounds() {
        let x = dom(&[((2000, 8), (2000, 8)), ((2000, 11), (2000, 11))]);
        let y = dom(&[((2000, 7), (2000, 9)), ((2000, 10), (2000, 12))]);
        assert!(allen_relate(&x, &y, AllenRelation::During).unwrap());
        assert!(allen_relate(&y, &x, AllenRelation::IsDuring).unwrap());
        // strictness: sharing a bound defeats During
        let z = dom(&[((2000, 7), (2000, 7))]);
        let w = dom(&[((2000, 7), (2000, 9))]);
        assert!(!allen_relate(&z, &w, AllenRelation::During).unwrap());
    }

    #[test]
    fn contains_is_inclusive() {
        let window = dom(&[((2000, 7), (2001, 1))]);
        let x = dom(&[((2000, 7), (2000, 7)), ((2000, 9), (2000, 10))]);
        assert!(contains(&window, &x).unwrap());
        assert!(contains(&x, &x).unwrap());
        let narrow = dom(&[((2000, 8), (2000, 9))]);
        let july = dom(&[((2000, 7), (2000, 7))]);
        assert!(!contains(&narrow, &july).unwrap());
    }

    #[test]
    fn empty_domains_are_rejected() {
        let x = dom(&[((2000, 7), (2000, 7))]);
        let e = TemporalDomain::empty(TemporalUnit::Month);
        assert_eq!(
            allen_relate(&x, &e, AllenRelation::Precedes),
            Err(TemporalError::EmptyDomain)
        );
    }

    #[test]
    fn reciprocal_pairs_are_involutive() {
        for rel in AllenRelation::ALL {
            assert_eq!(rel.reciprocal().reciprocal(), rel);
        }
        assert_eq!(AllenRelation::Equals.reciprocal(), AllenRelation::Equals);
    }
}
