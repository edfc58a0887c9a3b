//! Calendar units and instants.
//!
//! An instant is addressed by its grain index on the unit's time line:
//! years by year number, semesters/quarters/months by `k*year + part` and
//! days by their civil day number. Index arithmetic makes successor,
//! distance and grain conversion uniform across units.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Interval, TemporalError};

/// Named calendar granularity. The built-in units form the total chain
/// day < month < quarter < semester < year under *finer-than*; every
/// coarse grain is an exact union of finer grains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalUnit {
    Day,
    Month,
    Quarter,
    Semester,
    Year,
}

impl TemporalUnit {
    pub const ALL: [TemporalUnit; 5] = [
        TemporalUnit::Day,
        TemporalUnit::Month,
        TemporalUnit::Quarter,
        TemporalUnit::Semester,
        TemporalUnit::Year,
    ];

    fn rank(self) -> u8 {
        match self {
            TemporalUnit::Day => 0,
            TemporalUnit::Month => 1,
            TemporalUnit::Quarter => 2,
            TemporalUnit::Semester => 3,
            TemporalUnit::Year => 4,
        }
    }

    /// Strict *finer-than* comparison (`day.is_finer_than(month)` holds).
    pub fn is_finer_than(self, other: TemporalUnit) -> bool {
        self.rank() < other.rank()
    }

    pub fn is_coarser_than(self, other: TemporalUnit) -> bool {
        self.rank() > other.rank()
    }

    pub fn name(self) -> &'static str {
        match self {
            TemporalUnit::Day => "day",
            TemporalUnit::Month => "month",
            TemporalUnit::Quarter => "quarter",
            TemporalUnit::Semester => "semester",
            TemporalUnit::Year => "year",
        }
    }
}

impl fmt::Display for TemporalUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemporalUnit {
    type Err = TemporalError;

    /// Accepts the English names and the French spellings used by the
    /// query surface (`mois`, `trimestre`, ...), accent-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .map(crate::model::fold_char)
            .collect::<String>()
            .to_lowercase();
        match folded.as_str() {
            "day" | "jour" => Ok(TemporalUnit::Day),
            "month" | "mois" => Ok(TemporalUnit::Month),
            "quarter" | "trimestre" => Ok(TemporalUnit::Quarter),
            "semester" | "semestre" => Ok(TemporalUnit::Semester),
            "year" | "annee" | "an" => Ok(TemporalUnit::Year),
            _ => Err(TemporalError::BadUnit(s.to_string())),
        }
    }
}

/// One grain of a temporal unit, e.g. the month 2000-07.
///
/// Instants of different units are never equal and never ordered; convert
/// explicitly with [`Instant::convert_grain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instant {
    unit: TemporalUnit,
    index: i64,
}

// Gregorian civil-day arithmetic (proleptic calendar, day 0 = 1970-01-01).

fn is_leap(y: i64) -> bool {
    y % 4 == 0 && (y % 100 != 0 || y % 400 == 0)
}

fn days_in_month(y: i64, m: u8) -> u8 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if is_leap(y) {
                29
            } else {
                28
            }
        }
        _ => unreachable!("month out of range"),
    }
}

fn days_from_civil(y: i64, m: u8, d: u8) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = if m > 2 { m as i64 - 3 } else { m as i64 + 9 };
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146097 + doe - 719468
}

fn civil_from_days(z: i64) -> (i64, u8, u8) {
    let z = z + 719468;
    let era = if z >= 0 { z } else { z - 146096 } / 146097;
    let doe = z - era * 146097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u8;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u8;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

impl Instant {
    pub fn year(y: i64) -> Instant {
        Instant {
            unit: TemporalUnit::Year,
            index: y,
        }
    }

    pub fn semester(y: i64, s: u8) -> Result<Instant, TemporalError> {
        if !(1..=2).contains(&s) {
            return Err(TemporalError::BadCoordinate {
                unit: TemporalUnit::Semester,
                text: format!("{y}-S{s}"),
            });
        }
        Ok(Instant {
            unit: TemporalUnit::Semester,
            index: 2 * y + (s as i64 - 1),
        })
    }

    pub fn quarter(y: i64, q: u8) -> Result<Instant, TemporalError> {
        if !(1..=4).contains(&q) {
            return Err(TemporalError::BadCoordinate {
                unit: TemporalUnit::Quarter,
                text: format!("{y}-Q{q}"),
            });
        }
        Ok(Instant {
            unit: TemporalUnit::Quarter,
            index: 4 * y + (q as i64 - 1),
        })
    }

    pub fn month(y: i64, m: u8) -> Result<Instant, TemporalError> {
        if !(1..=12).contains(&m) {
            return Err(TemporalError::BadCoordinate {
                unit: TemporalUnit::Month,
                text: format!("{y}-{m:02}"),
            });
        }
        Ok(Instant {
            unit: TemporalUnit::Month,
            index: 12 * y + (m as i64 - 1),
        })
    }

    pub fn day(y: i64, m: u8, d: u8) -> Result<Instant, TemporalError> {
        if !(1..=12).contains(&m) || d < 1 || d > days_in_month(y, m) {
            return Err(TemporalError::BadCoordinate {
                unit: TemporalUnit::Day,
                text: format!("{y}-{m:02}-{d:02}"),
            });
        }
        Ok(Instant {
            unit: TemporalUnit::Day,
            index: days_from_civil(y, m, d),
        })
    }

    /// Rebuild an instant from a raw grain index, as produced by
    /// [`Instant::index`].
    pub fn from_index(unit: TemporalUnit, index: i64) -> Instant {
        Instant { unit, index }
    }

    pub fn unit(self) -> TemporalUnit {
        self.unit
    }

    /// Grain index on this unit's time line.
    pub fn index(self) -> i64 {
        self.index
    }

    pub fn offset(self, grains: i64) -> Instant {
        Instant {
            unit: self.unit,
            index: self.index + grains,
        }
    }

    pub fn succ(self) -> Instant {
        self.offset(1)
    }

    pub fn pred(self) -> Instant {
        self.offset(-1)
    }

    /// Signed grain distance `other - self`; requires equal units.
    pub fn distance(self, other: Instant) -> Result<i64, TemporalError> {
        if self.unit != other.unit {
            return Err(TemporalError::MixedUnits {
                expected: self.unit,
                found: other.unit,
            });
        }
        Ok(other.index - self.index)
    }

    /// Calendar coordinates: (year, part) where part depends on the unit
    /// (semester/quarter/month number, or day-of-month for days).
    fn coords(self) -> (i64, u8, u8) {
        match self.unit {
            TemporalUnit::Year => (self.index, 0, 0),
            TemporalUnit::Semester => (floor_div(self.index, 2), (self.index.rem_euclid(2) + 1) as u8, 0),
            TemporalUnit::Quarter => (floor_div(self.index, 4), (self.index.rem_euclid(4) + 1) as u8, 0),
            TemporalUnit::Month => (floor_div(self.index, 12), (self.index.rem_euclid(12) + 1) as u8, 0),
            TemporalUnit::Day => {
                let (y, m, d) = civil_from_days(self.index);
                (y, m, d)
            }
        }
    }

    /// The single coarser grain containing this instant.
    fn coarsen(self, target: TemporalUnit) -> Instant {
        debug_assert!(self.unit.is_finer_than(target));
        let month_idx = match self.unit {
            TemporalUnit::Day => {
                let (y, m, _) = civil_from_days(self.index);
                12 * y + (m as i64 - 1)
            }
            TemporalUnit::Month => self.index,
            TemporalUnit::Quarter => self.index * 3,
            TemporalUnit::Semester => self.index * 6,
            TemporalUnit::Year => self.index * 12,
        };
        let index = match target {
            TemporalUnit::Day => unreachable!("day is the finest unit"),
            TemporalUnit::Month => month_idx,
            TemporalUnit::Quarter => floor_div(month_idx, 3),
            TemporalUnit::Semester => floor_div(month_idx, 6),
            TemporalUnit::Year => floor_div(month_idx, 12),
        };
        Instant {
            unit: target,
            index,
        }
    }

    /// First and last grain of this instant expanded at a finer unit.
    fn expand(self, target: TemporalUnit) -> (Instant, Instant) {
        debug_assert!(target.is_finer_than(self.unit));
        // expand through months, then to days if needed
        let (first_month, last_month) = match self.unit {
            TemporalUnit::Month => (self.index, self.index),
            TemporalUnit::Quarter => (self.index * 3, self.index * 3 + 2),
            TemporalUnit::Semester => (self.index * 6, self.index * 6 + 5),
            TemporalUnit::Year => (self.index * 12, self.index * 12 + 11),
            TemporalUnit::Day => unreachable!("nothing is finer than day"),
        };
        let mk = |unit, index| Instant { unit, index };
        match target {
            TemporalUnit::Month => (
                mk(TemporalUnit::Month, first_month),
                mk(TemporalUnit::Month, last_month),
            ),
            TemporalUnit::Quarter => (
                mk(TemporalUnit::Quarter, floor_div(first_month, 3)),
                mk(TemporalUnit::Quarter, floor_div(last_month, 3)),
            ),
            TemporalUnit::Semester => (
                mk(TemporalUnit::Semester, floor_div(first_month, 6)),
                mk(TemporalUnit::Semester, floor_div(last_month, 6)),
            ),
            TemporalUnit::Day => {
                let fy = floor_div(first_month, 12);
                let fm = (first_month.rem_euclid(12) + 1) as u8;
                let ly = floor_div(last_month, 12);
                let lm = (last_month.rem_euclid(12) + 1) as u8;
                (
                    mk(TemporalUnit::Day, days_from_civil(fy, fm, 1)),
                    mk(TemporalUnit::Day, days_from_civil(ly, lm, days_in_month(ly, lm))),
                )
            }
            TemporalUnit::Year => unreachable!("year is the coarsest unit"),
        }
    }

    /// Re-express this grain at another unit: coarsening yields the single
    /// containing coarse grain as a singleton interval, refining yields
    /// the full covered span, same unit is the identity.
    pub fn convert_grain(self, target: TemporalUnit) -> Result<Interval, TemporalError> {
        if target == self.unit {
            Interval::new(self, self)
        } else if self.unit.is_finer_than(target) {
            let c = self.coarsen(target);
            Interval::new(c, c)
        } else {
            let (first, last) = self.expand(target);
            Interval::new(first, last)
        }
    }
}

impl PartialOrd for Instant {
    /// Cross-unit instants are not ordered.
    fn partial_cmp(&self, other: &Instant) -> Option<Ordering> {
        if self.unit != other.unit {
            return None;
        }
        Some(self.index.cmp(&other.index))
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, p, d) = self.coords();
        match self.unit {
            TemporalUnit::Year => write!(f, "{y:04}"),
            TemporalUnit::Semester => write!(f, "{y:04}-S{p}"),
            TemporalUnit::Quarter => write!(f, "{y:04}-Q{p}"),
            TemporalUnit::Month => write!(f, "{y:04}-{p:02}"),
            TemporalUnit::Day => write!(f, "{y:04}-{p:02}-{d:02}"),
        }
    }
}

impl FromStr for Instant {
    type Err = TemporalError;

    /// Canonical forms: `2000`, `2000-S1`, `2000-Q3`, `2000-07`,
    /// `2000-07-15`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TemporalError::BadInstant(s.to_string());
        let parts: Vec<&str> = s.split('-').collect();
        match parts.as_slice() {
            [y] => {
                let y: i64 = y.parse().map_err(|_| bad())?;
                Ok(Instant::year(y))
            }
            [y, p] => {
                let y: i64 = y.parse().map_err(|_| bad())?;
                if let Some(n) = p.strip_prefix('S') {
                    Instant::semester(y, n.parse().map_err(|_| bad())?)
                } else if let Some(n) = p.strip_prefix('Q') {
                    Instant::quarter(y, n.parse().map_err(|_| bad())?)
                } else {
                    Instant::month(y, p.parse().map_err(|_| bad())?)
                }
            }
            [y, m, d] => {
                let y: i64 = y.parse().map_err(|_| bad())?;
                Instant::day(y, m.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?)
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(y: i64, mo: u8) -> Instant {
        Instant::month(y, mo).unwrap()
    }

    #[test]
    fn finer_than_is_the_total_chain() {
        use TemporalUnit::*;
        let chain = [Day, Month, Quarter, Semester, Year];
        for (i, a) in chain.iter().enumerate() {
            for (j, b) in chain.iter().enumerate() {
                assert_eq!(a.is_finer_than(*b), i < j);
            }
        }
    }

    #[test]
    fn cross_unit_instants_are_not_ordered() {
        let a = m(2000, 7);
        let b = Instant::year(2000);
        assert_eq!(a.partial_cmp(&b), None);
        assert!(a != b);
        assert!(m(2000, 7) < m(2000, 9));
    }

    #[test]
    fn month_to_quarter_gives_containing_grain() {
        let q = m(2000, 9).convert_grain(TemporalUnit::Quarter).unwrap();
        let q3 = Instant::quarter(2000, 3).unwrap();
        assert_eq!(q.start(), q3);
        assert_eq!(q.end(), q3);
    }

    #[test]
    fn convert_to_same_unit_is_identity() {
        let i = m(2000, 7);
        let iv = i.convert_grain(TemporalUnit::Month).unwrap();
        assert_eq!((iv.start(), iv.end()), (i, i));
    }

    #[test]
    fn quarter_expands_to_its_months() {
        let iv = Instant::quarter(2000, 4)
            .unwrap()
            .convert_grain(TemporalUnit::Month)
            .unwrap();
        assert_eq!(iv.start(), m(2000, 10));
        assert_eq!(iv.end(), m(2000, 12));
    }

    #[test]
    fn coarsening_round_trip_covers_the_grain() {
        // the coarse grain containing i expands back to a span holding i
        for unit in [TemporalUnit::Quarter, TemporalUnit::Semester, TemporalUnit::Year] {
            for mo in 1..=12 {
                let i = m(2001, mo);
                let c = i.convert_grain(unit).unwrap();
                let back = c.start().convert_grain(TemporalUnit::Month).unwrap();
                assert!(back.start() <= i && i <= back.end());
            }
        }
    }

    #[test]
    fn day_arithmetic_follows_the_gregorian_calendar() {
        assert_eq!(Instant::day(2000, 2, 29).unwrap().succ(), Instant::day(2000, 3, 1).unwrap());
        assert!(Instant::day(2001, 2, 29).is_err());
        let feb = m(2000, 2).convert_grain(TemporalUnit::Day).unwrap();
        assert_eq!(feb.grain_count(), 29);
        let year_days = Instant::year(1999).convert_grain(TemporalUnit::Day).unwrap();
        assert_eq!(year_days.grain_count(), 365);
    }

    #[test]
    fn parse_display_round_trip() {
        for s in ["2000", "2000-S2", "2000-Q3", "2000-07", "2000-02-29"] {
            let i: Instant = s.parse().unwrap();
            assert_eq!(i.to_string(), s);
        }
        assert!("2000-13".parse::<Instant>().is_err());
        assert!("2000-Q5".parse::<Instant>().is_err());
    }

    #[test]
    fn unit_names_accept_french_spellings() {
        assert_eq!("trimestre".parse::<TemporalUnit>().unwrap(), TemporalUnit::Quarter);
        assert_eq!("année".parse::<TemporalUnit>().unwrap(), TemporalUnit::Year);
        assert_eq!("month".parse::<TemporalUnit>().unwrap(), TemporalUnit::Month);
        assert!("fortnight".parse::<TemporalUnit>().is_err());
    }
}
