//! Intervals, durations and normalized temporal domains with set algebra.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Instant, TemporalError, TemporalUnit};

/// Closed interval of grains of one unit; singletons (`start = end`) are
/// legal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    start: Instant,
    end: Instant,
}

impl Interval {
    pub fn new(start: Instant, end: Instant) -> Result<Interval, TemporalError> {
        if start.unit() != end.unit() {
            return Err(TemporalError::MixedUnits {
                expected: start.unit(),
                found: end.unit(),
            });
        }
        if start.index() > end.index() {
            return Err(TemporalError::EmptyInterval { start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn singleton(at: Instant) -> Interval {
        Interval { start: at, end: at }
    }

    pub fn start(self) -> Instant {
        self.start
    }

    pub fn end(self) -> Instant {
        self.end
    }

    pub fn unit(self) -> TemporalUnit {
        self.start.unit()
    }

    pub fn grain_count(self) -> i64 {
        self.end.index() - self.start.index() + 1
    }

    pub fn contains_instant(self, i: Instant) -> bool {
        i.unit() == self.unit() && self.start.index() <= i.index() && i.index() <= self.end.index()
    }

    pub fn intersects(self, other: Interval) -> bool {
        self.unit() == other.unit()
            && self.start.index() <= other.end.index()
            && other.start.index() <= self.end.index()
    }

    /// Grains of the interval in ascending order.
    pub fn grains(self) -> impl Iterator<Item = Instant> {
        let unit = self.unit();
        (self.start.index()..=self.end.index()).map(move |i| Instant::from_index(unit, i))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// A positive number of grains of one unit, e.g. `2 months`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Duration {
    pub count: u32,
    pub unit: TemporalUnit,
}

impl Duration {
    pub fn new(count: u32, unit: TemporalUnit) -> Option<Duration> {
        (count >= 1).then_some(Duration { count, unit })
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.count, self.unit)
    }
}

/// Ordered set of pairwise-disjoint, non-adjacent, same-unit closed
/// intervals. Domains are normalized at construction; two intervals are
/// always separated by at least one grain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalDomain {
    unit: TemporalUnit,
    intervals: Vec<Interval>,
}

impl TemporalDomain {
    pub fn empty(unit: TemporalUnit) -> TemporalDomain {
        TemporalDomain {
            unit,
            intervals: Vec::new(),
        }
    }

    pub fn singleton(at: Instant) -> TemporalDomain {
        TemporalDomain {
            unit: at.unit(),
            intervals: vec![Interval::singleton(at)],
        }
    }

    pub fn from_interval(iv: Interval) -> TemporalDomain {
        TemporalDomain {
            unit: iv.unit(),
            intervals: vec![iv],
        }
    }

    /// Canonical form for a raw interval list: sorted ascending with
    /// overlapping or adjacent intervals merged. The unit is explicit so
    /// the empty list stays well-formed.
    pub fn normalize(unit: TemporalUnit, raw: &[Interval]) -> Result<TemporalDomain, TemporalError> {
        for iv in raw {
            if iv.unit() != unit {
                return Err(TemporalError::MixedUnits {
                    expected: unit,
                    found: iv.unit(),
                });
            }
        }
        let mut ranges: Vec<(i64, i64)> = raw
            .iter()
            .map(|iv| (iv.start().index(), iv.end().index()))
            .collect();
        ranges.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::with_capacity(ranges.len());
        for (s, e) in ranges {
            match merged.last_mut() {
                // adjacency (gap of zero grains) merges too
                Some((_, le)) if s <= *le + 1 => *le = (*le).max(e),
                _ => merged.push((s, e)),
            }
        }
        Ok(TemporalDomain::from_ranges(unit, merged))
    }

    fn from_ranges(unit: TemporalUnit, ranges: Vec<(i64, i64)>) -> TemporalDomain {
        TemporalDomain {
            unit,
            intervals: ranges
                .into_iter()
                .map(|(s, e)| Interval {
                    start: Instant::from_index(unit, s),
                    end: Instant::from_index(unit, e),
                })
                .collect(),
        }
    }

    fn ranges(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.intervals
            .iter()
            .map(|iv| (iv.start().index(), iv.end().index()))
    }

    fn check_unit(&self, other: &TemporalDomain) -> Result<(), TemporalError> {
        if self.unit != other.unit {
            return Err(TemporalError::MixedUnits {
                expected: self.unit,
                found: other.unit,
            });
        }
        Ok(())
    }

    pub fn unit(&self) -> TemporalUnit {
        self.unit
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// First grain, if any.
    pub fn first(&self) -> Option<Instant> {
        self.intervals.first().map(|iv| iv.start())
    }

    /// Last grain, if any.
    pub fn last(&self) -> Option<Instant> {
        self.intervals.last().map(|iv| iv.end())
    }

    pub fn grain_count(&self) -> i64 {
        self.intervals.iter().map(|iv| iv.grain_count()).sum()
    }

    pub fn grains(&self) -> impl Iterator<Item = Instant> + '_ {
        self.intervals.iter().flat_map(|iv| iv.grains())
    }

    pub fn contains_instant(&self, i: Instant) -> bool {
        self.intervals.iter().any(|iv| iv.contains_instant(i))
    }

    /// Set union over the underlying grain sets.
    pub fn union(&self, other: &TemporalDomain) -> Result<TemporalDomain, TemporalError> {
        self.check_unit(other)?;
        let all: Vec<Interval> = self
            .intervals
            .iter()
            .chain(other.intervals.iter())
            .copied()
            .collect();
        TemporalDomain::normalize(self.unit, &all)
    }

    /// Set intersection over the underlying grain sets.
    pub fn intersect(&self, other: &TemporalDomain) -> Result<TemporalDomain, TemporalError> {
        self.check_unit(other)?;
        let mut out: Vec<(i64, i64)> = Vec::new();
        let a: Vec<(i64, i64)> = self.ranges().collect();
        let b: Vec<(i64, i64)> = other.ranges().collect();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let (s, e) = (a[i].0.max(b[j].0), a[i].1.min(b[j].1));
            if s <= e {
                out.push((s, e));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(TemporalDomain::from_ranges(self.unit, out))
    }

    /// Set difference `self \ other` over the underlying grain sets.
    pub fn difference(&self, other: &TemporalDomain) -> Result<TemporalDomain, TemporalError> {
        self.check_unit(other)?;
        let mut out: Vec<(i64, i64)> = Vec::new();
        let b: Vec<(i64, i64)> = other.ranges().collect();
        for (mut s, e) in self.ranges() {
            for &(bs, be) in &b {
                if be < s || bs > e {
                    continue;
                }
                if bs > s {
                    out.push((s, bs - 1));
                }
                s = be + 1;
                if s > e {
                    break;
                }
            }
            if s <= e {
                out.push((s, e));
            }
        }
        Ok(TemporalDomain::from_ranges(self.unit, out))
    }
}

impl fmt::Display for TemporalDomain {
    /// Canonical form `<[a,b];[c,d]>`; the empty domain prints `<>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, ";")?;
            }
            write!(f, "{iv}")?;
        }
        write!(f, ">")
    }
}

impl std::str::FromStr for TemporalDomain {
    type Err = TemporalError;

    /// Parses the canonical non-empty form `<[a,b];[c,d]>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TemporalError::BadInstant(s.to_string());
        let body = s
            .strip_prefix('<')
            .and_then(|t| t.strip_suffix('>'))
            .ok_or_else(bad)?;
        if body.is_empty() {
            return Err(bad());
        }
        let mut intervals = Vec::new();
        for part in body.split(';') {
            let inner = part
                .trim()
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(bad)?;
            let (a, b) = inner.split_once(',').ok_or_else(bad)?;
            let start: Instant = a.trim().parse()?;
            let end: Instant = b.trim().parse()?;
            intervals.push(Interval::new(start, end)?);
        }
        let unit = intervals[0].unit();
        TemporalDomain::normalize(unit, &intervals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(y: i64, mo: u8) -> Instant {
        Instant::month(y, mo).unwrap()
    }

    fn iv(a: (i64, u8), b: (i64, u8)) -> Interval {
        Interval::new(m(a.0, a.1), m(b.0, b.1)).unwrap()
    }

    fn dom(ivs: &[Interval]) -> TemporalDomain {
        TemporalDomain::normalize(TemporalUnit::Month, ivs).unwrap()
    }

    #[test]
    fn normalize_sorts_unordered_intervals() {
        // the two-interval domain of a single past state, given out of order
        let d = dom(&[iv((2000, 9), (2000, 10)), iv((2000, 7), (2000, 7))]);
        assert_eq!(d.to_string(), "<[2000-07,2000-07];[2000-09,2000-10]>");
        assert_eq!(d.grain_count(), 3);
    }

    #[test]
    fn normalize_of_empty_list_is_the_empty_domain() {
        let d = dom(&[]);
        assert!(d.is_empty());
        assert_eq!(d.to_string(), "<>");
    }

    #[test]
    fn normalize_merges_adjacent_intervals() {
        let d = dom(&[iv((2000, 7), (2000, 8)), iv((2000, 9), (2000, 9))]);
        assert_eq!(d.to_string(), "<[2000-07,2000-09]>");
    }

    #[test]
    fn normalize_rejects_mixed_units() {
        let bad = Interval::new(Instant::year(2000), Instant::year(2001)).unwrap();
        let err = TemporalDomain::normalize(TemporalUnit::Month, &[bad]).unwrap_err();
        assert!(matches!(err, TemporalError::MixedUnits { .. }));
    }

    #[test]
    fn intersect_keeps_shared_grains() {
        let x = dom(&[iv((2000, 7), (2000, 10))]);
        let y = dom(&[iv((2000, 9), (2000, 12))]);
        assert_eq!(x.intersect(&y).unwrap().to_string(), "<[2000-09,2000-10]>");
    }

    #[test]
    fn union_merges_adjacent_singletons() {
        let x = dom(&[iv((2000, 7), (2000, 7))]);
        let y = dom(&[iv((2000, 8), (2000, 8))]);
        assert_eq!(x.union(&y).unwrap().to_string(), "<[2000-07,2000-08]>");
    }

    #[test]
    fn difference_splits_around_the_removed_grains() {
        // brute-force over the six month grains: {7,8,11,12}
        let x = dom(&[iv((2000, 7), (2000, 12))]);
        let y = dom(&[iv((2000, 9), (2000, 10))]);
        assert_eq!(
            x.difference(&y).unwrap().to_string(),
            "<[2000-07,2000-08];[2000-11,2000-12]>"
        );
    }

    #[test]
    fn set_ops_reject_mixed_units() {
        let x = dom(&[iv((2000, 7), (2000, 8))]);
        let y = TemporalDomain::singleton(Instant::year(2000));
        assert!(x.union(&y).is_err());
        assert!(x.intersect(&y).is_err());
        assert!(x.difference(&y).is_err());
    }
}
