//! Series restructuring and the analytic operators.
//!
//! Aggregation weights by series element: an element spanning several
//! grains contributes once per window or coarse grain it intersects.

use std::collections::BTreeMap;

use crate::model::{aggregate_values, AggKind, AttrValue, ModelError, Value};
use crate::temporal::{Duration, Instant, Interval, TemporalError, TemporalUnit};

use super::{AState, AlgebraError, Series, SeriesElem};

/// One aggregation entry `(target, fn(attr))`; the attribute defaults to
/// the target name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggSpec {
    pub target: String,
    pub kind: AggKind,
    pub arg: Option<String>,
}

impl AggSpec {
    pub fn new(target: impl Into<String>, kind: AggKind) -> AggSpec {
        AggSpec {
            target: target.into(),
            kind,
            arg: None,
        }
    }

    fn attr(&self) -> &str {
        self.arg.as_deref().unwrap_or(&self.target)
    }
}

/// Restructures a state set into a chronological series: every interval
/// of a multi-interval domain becomes one element carrying the state's
/// value. States may not overlap on any grain.
pub fn make_serie(states: &[AState]) -> Result<Series, AlgebraError> {
    let mut elems: Vec<SeriesElem> = Vec::new();
    for s in states {
        for iv in s.domain.intervals() {
            elems.push(SeriesElem {
                value: s.value.clone(),
                interval: *iv,
            });
        }
    }
    elems.sort_by_key(|e| (e.interval.start().index(), e.interval.end().index()));
    Series::new(elems)
}

fn aggregate_elems(
    specs: &[AggSpec],
    elems: &[&SeriesElem],
) -> Result<Value, AlgebraError> {
    let mut out = Value::new();
    for spec in specs {
        let mut slots: Vec<&AttrValue> = Vec::with_capacity(elems.len());
        for e in elems {
            let (_, slot) = e
                .value
                .get(spec.attr())
                .ok_or_else(|| ModelError::UnknownAttribute(spec.attr().to_string()))?;
            slots.push(slot);
        }
        out.set(spec.target.clone(), aggregate_values(spec.kind, &slots)?);
    }
    Ok(out)
}

fn non_empty(sr: &Series) -> Result<(), AlgebraError> {
    if sr.is_empty() {
        return Err(AlgebraError::EmptySeries);
    }
    Ok(())
}

/// One value aggregating the whole series, one contribution per element.
pub fn agreg(sr: &Series, specs: &[AggSpec]) -> Result<Value, AlgebraError> {
    non_empty(sr)?;
    let all: Vec<&SeriesElem> = sr.elements().iter().collect();
    aggregate_elems(specs, &all)
}

/// Cumulative aggregation: one element per grain from the series origin
/// to its last covered grain; each element aggregates every series
/// element started by then over the domain `[origin, g]`.
pub fn acum(sr: &Series, specs: &[AggSpec]) -> Result<Series, AlgebraError> {
    non_empty(sr)?;
    let unit = sr.unit().expect("non-empty series");
    let origin = sr.elements()[0].interval.start();
    let last = sr
        .elements()
        .iter()
        .map(|e| e.interval.end().index())
        .max()
        .expect("non-empty series");
    let mut out = Vec::new();
    for g in origin.index()..=last {
        let contributors: Vec<&SeriesElem> = sr
            .elements()
            .iter()
            .filter(|e| e.interval.start().index() <= g)
            .collect();
        out.push(SeriesElem {
            value: aggregate_elems(specs, &contributors)?,
            interval: Interval::new(origin, Instant::from_index(unit, g)).expect("origin <= g"),
        });
    }
    Ok(Series::from_ordered(out))
}

/// Moving aggregation: tumbling windows of length `d` tiled from the
/// series origin; one element per non-empty window, aggregating the
/// elements intersecting it.
pub fn amove(sr: &Series, specs: &[AggSpec], d: Duration) -> Result<Series, AlgebraError> {
    non_empty(sr)?;
    let unit = sr.unit().expect("non-empty series");
    if d.unit != unit {
        return Err(TemporalError::MixedUnits {
            expected: unit,
            found: d.unit,
        }
        .into());
    }
    let origin = sr.elements()[0].interval.start().index();
    let last = sr
        .elements()
        .iter()
        .map(|e| e.interval.end().index())
        .max()
        .expect("non-empty series");
    let len = d.count as i64;
    let mut out = Vec::new();
    let mut start = origin;
    while start <= last {
        let window = Interval::new(
            Instant::from_index(unit, start),
            Instant::from_index(unit, start + len - 1),
        )
        .expect("positive duration");
        let contributors: Vec<&SeriesElem> = sr
            .elements()
            .iter()
            .filter(|e| e.interval.intersects(window))
            .collect();
        if !contributors.is_empty() {
            out.push(SeriesElem {
                value: aggregate_elems(specs, &contributors)?,
                interval: window,
            });
        }
        start += len;
    }
    Ok(Series::from_ordered(out))
}

/// Re-expresses the series at a strictly coarser unit: one element per
/// coarse grain intersected by at least one series element; an element
/// spanning two coarse grains contributes to both.
pub fn scale_up(
    sr: &Series,
    unit: TemporalUnit,
    specs: &[AggSpec],
) -> Result<Series, AlgebraError> {
    non_empty(sr)?;
    let fine = sr.unit().expect("non-empty series");
    if !fine.is_finer_than(unit) {
        return Err(TemporalError::NotCoarser {
            from: fine,
            target: unit,
        }
        .into());
    }
    let mut grains: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (idx, e) in sr.elements().iter().enumerate() {
        let from = e.interval.start().convert_grain(unit)?.start().index();
        let to = e.interval.end().convert_grain(unit)?.start().index();
        for g in from..=to {
            grains.entry(g).or_default().push(idx);
        }
    }
    let mut out = Vec::new();
    for (g, contributors) in grains {
        let elems: Vec<&SeriesElem> = contributors
            .iter()
            .map(|idx| &sr.elements()[*idx])
            .collect();
        out.push(SeriesElem {
            value: aggregate_elems(specs, &elems)?,
            interval: Interval::singleton(Instant::from_index(unit, g)),
        });
    }
    Ok(Series::from_ordered(out))
}

/// Re-expresses the series at a strictly finer unit by constant
/// replication; adjacent equal-valued spans merge back into single
/// elements. The aggregation entries are accepted for signature symmetry
/// and have no effect under replication.
pub fn scale_down(
    sr: &Series,
    unit: TemporalUnit,
    _specs: &[AggSpec],
) -> Result<Series, AlgebraError> {
    non_empty(sr)?;
    let coarse = sr.unit().expect("non-empty series");
    if !unit.is_finer_than(coarse) {
        return Err(TemporalError::NotFiner {
            from: coarse,
            target: unit,
        }
        .into());
    }
    let mut out: Vec<SeriesElem> = Vec::new();
    for e in sr.elements() {
        let start = e.interval.start().convert_grain(unit)?.start();
        let end = e.interval.end().convert_grain(unit)?.end();
        let span = Interval::new(start, end).expect("expansion is ordered");
        match out.last_mut() {
            Some(prev)
                if prev.value == e.value
                    && prev.interval.end().index() + 1 >= span.start().index() =>
            {
                let merged = Interval::new(
                    prev.interval.start(),
                    Instant::from_index(unit, span.end().index().max(prev.interval.end().index())),
                )
                .expect("ordered merge");
                prev.interval = merged;
            }
            _ => out.push(SeriesElem {
                value: e.value.clone(),
                interval: span,
            }),
        }
    }
    Ok(Series::from_ordered(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scalar;
    use crate::temporal::TemporalDomain;

    fn m(mo: u8) -> Instant {
        Instant::month(2000, mo).unwrap()
    }

    fn poids(v: i64) -> Value {
        Value::new().with("poids", AttrValue::Scalar(Scalar::Int(v)))
    }

    fn state(v: i64, spans: &[(u8, u8)]) -> AState {
        let ivs: Vec<Interval> = spans
            .iter()
            .map(|(a, b)| Interval::new(m(*a), m(*b)).unwrap())
            .collect();
        AState::detached(
            poids(v),
            TemporalDomain::normalize(TemporalUnit::Month, &ivs).unwrap(),
        )
    }

    /// The weight history: 80 on 07 and 09-10, 79 on 08, 77 on 11-12.
    pub(crate) fn weight_states() -> Vec<AState> {
        vec![
            state(80, &[(7, 7), (9, 10)]),
            state(79, &[(8, 8)]),
            state(77, &[(11, 12)]),
        ]
    }

    fn weight_series() -> Series {
        make_serie(&weight_states()).unwrap()
    }

    fn avg_poids() -> Vec<AggSpec> {
        vec![AggSpec::new("poids", AggKind::Avg)]
    }

    fn dec_of(v: &Value, attr: &str) -> f64 {
        match v.get(attr).unwrap().1 {
            AttrValue::Scalar(Scalar::Dec(d)) => d.0,
            AttrValue::Scalar(Scalar::Int(i)) => *i as f64,
            other => panic!("not numeric: {other:?}"),
        }
    }

    #[test]
    fn make_serie_splits_and_orders() {
        let sr = weight_series();
        let got: Vec<(i64, String)> = sr
            .elements()
            .iter()
            .map(|e| {
                (
                    match e.value.get("poids").unwrap().1 {
                        AttrValue::Scalar(Scalar::Int(i)) => *i,
                        _ => unreachable!(),
                    },
                    format!("{}", e.interval),
                )
            })
            .collect();
        assert_eq!(
            got,
            vec![
                (80, "[2000-07,2000-07]".to_string()),
                (79, "[2000-08,2000-08]".to_string()),
                (80, "[2000-09,2000-10]".to_string()),
                (77, "[2000-11,2000-12]".to_string()),
            ]
        );
    }

    #[test]
    fn make_serie_rejects_overlap() {
        let states = vec![state(80, &[(7, 8)]), state(79, &[(8, 9)])];
        assert_eq!(
            make_serie(&states).unwrap_err(),
            AlgebraError::OverlappingStates
        );
    }

    #[test]
    fn agreg_weights_by_element() {
        let v = agreg(&weight_series(), &avg_poids()).unwrap();
        // (80 + 79 + 80 + 77) / 4
        assert_eq!(dec_of(&v, "poids"), 79.0);
        let count = agreg(
            &weight_series(),
            &[AggSpec::new("poids", AggKind::Count)],
        )
        .unwrap();
        assert_eq!(
            count.get("poids").unwrap().1,
            &AttrValue::Scalar(Scalar::Int(4))
        );
    }

    #[test]
    fn acum_emits_one_element_per_grain() {
        let sr = acum(&weight_series(), &avg_poids()).unwrap();
        let values: Vec<f64> = sr.elements().iter().map(|e| dec_of(&e.value, "poids")).collect();
        assert_eq!(values.len(), 6);
        let expected = [80.0, 79.5, 79.0 + 2.0 / 3.0, 79.0 + 2.0 / 3.0, 79.0, 79.0];
        for (got, want) in values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let domains: Vec<String> = sr
            .elements()
            .iter()
            .map(|e| e.interval.to_string())
            .collect();
        assert_eq!(domains[0], "[2000-07,2000-07]");
        assert_eq!(domains[5], "[2000-07,2000-12]");
        // the last cumulative element equals the total aggregation
        let total = agreg(&weight_series(), &avg_poids()).unwrap();
        assert_eq!(sr.elements()[5].value, total);
    }

    #[test]
    fn amove_tiles_tumbling_windows() {
        let sr = amove(
            &weight_series(),
            &avg_poids(),
            Duration::new(2, TemporalUnit::Month).unwrap(),
        )
        .unwrap();
        let got: Vec<(f64, String)> = sr
            .elements()
            .iter()
            .map(|e| (dec_of(&e.value, "poids"), e.interval.to_string()))
            .collect();
        assert_eq!(
            got,
            vec![
                (79.5, "[2000-07,2000-08]".to_string()),
                (80.0, "[2000-09,2000-10]".to_string()),
                (77.0, "[2000-11,2000-12]".to_string()),
            ]
        );
    }

    #[test]
    fn amove_of_whole_span_equals_agreg() {
        let sr = amove(
            &weight_series(),
            &avg_poids(),
            Duration::new(6, TemporalUnit::Month).unwrap(),
        )
        .unwrap();
        assert_eq!(sr.len(), 1);
        assert_eq!(
            sr.elements()[0].value,
            agreg(&weight_series(), &avg_poids()).unwrap()
        );
    }

    #[test]
    fn scale_up_counts_straddling_elements_in_both_grains() {
        let sr = scale_up(&weight_series(), TemporalUnit::Quarter, &avg_poids()).unwrap();
        assert_eq!(sr.len(), 2);
        // Q3 averages 80, 79, 80; Q4 averages the straddling 80 and 77
        assert!((dec_of(&sr.elements()[0].value, "poids") - (239.0 / 3.0)).abs() < 1e-9);
        assert_eq!(dec_of(&sr.elements()[1].value, "poids"), 78.5);
        assert_eq!(sr.elements()[0].interval.to_string(), "[2000-Q3,2000-Q3]");
        assert_eq!(sr.elements()[1].interval.to_string(), "[2000-Q4,2000-Q4]");
    }

    #[test]
    fn scale_down_replicates_and_merges() {
        let q3 = SeriesElem {
            value: poids(80),
            interval: Interval::singleton(Instant::quarter(2000, 3).unwrap()),
        };
        let q4 = SeriesElem {
            value: poids(80),
            interval: Interval::singleton(Instant::quarter(2000, 4).unwrap()),
        };
        let sr = Series::new(vec![q3, q4]).unwrap();
        let down = scale_down(&sr, TemporalUnit::Month, &[]).unwrap();
        assert_eq!(down.len(), 1);
        assert_eq!(down.elements()[0].interval.to_string(), "[2000-07,2000-12]");
    }

    #[test]
    fn scale_round_trip_restores_quarterly_values() {
        let up = scale_up(&weight_series(), TemporalUnit::Quarter, &avg_poids()).unwrap();
        let down = scale_down(&up, TemporalUnit::Month, &avg_poids()).unwrap();
        let up_again = scale_up(&down, TemporalUnit::Quarter, &avg_poids()).unwrap();
        let orig: Vec<f64> = up.elements().iter().map(|e| dec_of(&e.value, "poids")).collect();
        let redo: Vec<f64> = up_again
            .elements()
            .iter()
            .map(|e| dec_of(&e.value, "poids"))
            .collect();
        assert_eq!(orig.len(), redo.len());
        for (a, b) in orig.iter().zip(redo.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn analytic_operators_reject_empty_series() {
        let empty = Series::default();
        assert_eq!(
            agreg(&empty, &avg_poids()).unwrap_err(),
            AlgebraError::EmptySeries
        );
        assert_eq!(
            acum(&empty, &avg_poids()).unwrap_err(),
            AlgebraError::EmptySeries
        );
        assert_eq!(
            scale_up(&empty, TemporalUnit::Quarter, &avg_poids()).unwrap_err(),
            AlgebraError::EmptySeries
        );
    }
}
