//! Brute-force reference implementations used to cross-check the engine
//! in tests, plus deterministic fixture and AST generators.
//!
//! Everything here recomputes results from first principles — grain-set
//! expansion for domain algebra and the temporal operators, literal
//! endpoint quantification for the Allen relations — independently of
//! the engine's interval sweeps.

use std::collections::BTreeSet;

use twq_core::algebra::{AState, Series, SeriesElem, Tuple};
use twq_core::model::{AggKind, AttrValue, Scalar, Value};
use twq_core::temporal::{
    AllenRelation, Duration, Instant, Interval, TemporalDomain, TemporalUnit,
};

pub mod gen;

/// Grain-index set of a domain.
pub fn grains(d: &TemporalDomain) -> BTreeSet<i64> {
    d.grains().map(|g| g.index()).collect()
}

/// Rebuilds a normalized domain from a grain-index set.
pub fn domain_from_grains(unit: TemporalUnit, set: &BTreeSet<i64>) -> TemporalDomain {
    let intervals: Vec<Interval> = set
        .iter()
        .map(|g| Interval::singleton(Instant::from_index(unit, *g)))
        .collect();
    TemporalDomain::normalize(unit, &intervals).expect("single unit")
}

pub fn union_grains(x: &TemporalDomain, y: &TemporalDomain) -> BTreeSet<i64> {
    grains(x).union(&grains(y)).copied().collect()
}

pub fn intersect_grains(x: &TemporalDomain, y: &TemporalDomain) -> BTreeSet<i64> {
    grains(x).intersection(&grains(y)).copied().collect()
}

pub fn difference_grains(x: &TemporalDomain, y: &TemporalDomain) -> BTreeSet<i64> {
    grains(x).difference(&grains(y)).copied().collect()
}

/// Containment by grain sets.
pub fn contains_brute(x: &TemporalDomain, y: &TemporalDomain) -> bool {
    grains(y).is_subset(&grains(x))
}

/// Literal evaluation of the thirteen relations over the interval
/// endpoint lists, quantifiers written out as loops.
pub fn allen_brute(x: &TemporalDomain, y: &TemporalDomain, rel: AllenRelation) -> bool {
    use AllenRelation::*;
    let ends = |d: &TemporalDomain| -> Vec<(i64, i64)> {
        d.intervals()
            .iter()
            .map(|iv| (iv.start().index(), iv.end().index()))
            .collect()
    };
    let xs = ends(x);
    let ys = ends(y);
    let x_last = xs.last().expect("non-empty").1;
    let x_first = xs.first().expect("non-empty").0;
    let y_last = ys.last().expect("non-empty").1;
    let y_first = ys.first().expect("non-empty").0;
    match rel {
        Precedes => x_last < y_first,
        Follows => y_last < x_first,
        Meets => x_last == y_first,
        IsMeeted => y_last == x_first,
        Overlaps => {
            let mut hit = false;
            for (xs_i, xe_i) in &xs {
                for (ys_j, ye_j) in &ys {
                    if xs_i < ys_j && ys_j < xe_i && xe_i < ye_j {
                        hit = true;
                    }
                }
            }
            hit
        }
        IsOverlaped => allen_brute(y, x, Overlaps),
        During => {
            let mut all = true;
            for (xs_i, xe_i) in &xs {
                let mut inside = false;
                for (ys_j, ye_j) in &ys {
                    if xs_i > ys_j && xe_i < ye_j {
                        inside = true;
                    }
                }
                if !inside {
                    all = false;
                }
            }
            all
        }
        IsDuring => allen_brute(y, x, During),
        Starts => x_first == y_first,
        IsStarted => allen_brute(y, x, Starts),
        Ends => x_last == y_last,
        IsFinished => allen_brute(y, x, Ends),
        Equals => xs == ys,
    }
}

fn numeric(v: &AttrValue) -> f64 {
    match v {
        AttrValue::Scalar(Scalar::Int(i)) => *i as f64,
        AttrValue::Scalar(Scalar::Dec(d)) => d.0,
        other => panic!("oracle fixtures are numeric, found {other:?}"),
    }
}

/// Single-attribute aggregation over ordered contributions.
pub fn agg_numeric(kind: AggKind, values: &[f64]) -> AttrValue {
    match kind {
        AggKind::Count => AttrValue::Scalar(Scalar::Int(values.len() as i64)),
        AggKind::Avg => {
            let sum: f64 = values.iter().sum();
            AttrValue::Scalar(Scalar::dec(sum / values.len() as f64))
        }
        AggKind::Sum => {
            let sum: f64 = values.iter().sum();
            if sum.fract() == 0.0 && values.iter().all(|v| v.fract() == 0.0) {
                AttrValue::Scalar(Scalar::Int(sum as i64))
            } else {
                AttrValue::Scalar(Scalar::dec(sum))
            }
        }
        AggKind::Min => {
            let m = values.iter().copied().fold(f64::INFINITY, f64::min);
            AttrValue::Scalar(Scalar::Int(m as i64))
        }
        AggKind::Max => {
            let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            AttrValue::Scalar(Scalar::Int(m as i64))
        }
    }
}

/// Comparable form of a temporal-join result: sorted (value text, grain
/// set) pairs.
pub fn join_key(states: &[AState]) -> Vec<(String, BTreeSet<i64>)> {
    let mut out: Vec<(String, BTreeSet<i64>)> = states
        .iter()
        .map(|s| (s.value.to_json().to_string(), grains(&s.domain)))
        .collect();
    out.sort();
    out
}

/// Per-grain IJoin: qualifying pairs share at least one grain; the
/// result covers exactly the shared grains.
pub fn ijoin_brute<P>(left: &[AState], right: &[AState], pred: P) -> Vec<(String, BTreeSet<i64>)>
where
    P: Fn(&AState, &AState) -> bool,
{
    let mut out = Vec::new();
    for l in left {
        for r in right {
            let shared = intersect_grains(&l.domain, &r.domain);
            if shared.is_empty() || !pred(l, r) {
                continue;
            }
            out.push((concat_text(&l.value, &r.value), shared));
        }
    }
    out.sort();
    out
}

/// Per-grain UJoin: qualification as IJoin, result covers the union of
/// both sides' grains.
pub fn ujoin_brute<P>(left: &[AState], right: &[AState], pred: P) -> Vec<(String, BTreeSet<i64>)>
where
    P: Fn(&AState, &AState) -> bool,
{
    let mut out = Vec::new();
    for l in left {
        for r in right {
            let shared = intersect_grains(&l.domain, &r.domain);
            if shared.is_empty() || !pred(l, r) {
                continue;
            }
            out.push((concat_text(&l.value, &r.value), union_grains(&l.domain, &r.domain)));
        }
    }
    out.sort();
    out
}

/// Independent reimplementation of the collision-prefixed value concat.
fn concat_text(l: &Value, r: &Value) -> String {
    let fold = twq_core::model::fold_ident;
    let mut out = Value::new();
    for (k, v) in &l.0 {
        let clash = r.0.keys().any(|rk| fold(rk) == fold(k));
        let name = if clash { format!("left.{k}") } else { k.clone() };
        out.set(name, v.clone());
    }
    for (k, v) in &r.0 {
        let clash = l.0.keys().any(|lk| fold(lk) == fold(k));
        let name = if clash { format!("right.{k}") } else { k.clone() };
        out.set(name, v.clone());
    }
    out.to_json().to_string()
}

/// Per-grain UGroup: expand states to grains, recompose per coarse
/// grain.
pub fn ugroup_brute(states: &[AState], unit: TemporalUnit) -> Vec<(i64, i64, Vec<String>)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<i64, BTreeSet<String>> = BTreeMap::new();
    for s in states {
        for g in s.domain.grains() {
            let coarse = g.convert_grain(unit).expect("coarser").start().index();
            acc.entry(coarse)
                .or_default()
                .insert(s.value.to_json().to_string());
        }
    }
    acc.into_iter()
        .map(|(g, vs)| (g, g, vs.into_iter().collect()))
        .collect()
}

/// Comparable form of the engine's UGroup/DGroup output. UGroup windows
/// are singleton coarse grains, so both endpoints carry the same index.
pub fn tuples_key(tuples: &[Tuple]) -> Vec<(i64, i64, Vec<String>)> {
    let mut out: Vec<(i64, i64, Vec<String>)> = tuples
        .iter()
        .map(|t| match t {
            Tuple::Window { window, values } => {
                let mut vs: Vec<String> =
                    values.iter().map(|v| v.to_json().to_string()).collect();
                vs.sort();
                (window.start().index(), window.end().index(), vs)
            }
            other => panic!("grouping oracle got {other:?}"),
        })
        .collect();
    out.sort();
    out
}

/// Per-grain DGroup: windows tiled from the earliest grain; membership
/// by grain-set intersection.
pub fn dgroup_brute(states: &[AState], d: Duration) -> Vec<(i64, i64, Vec<String>)> {
    let all: BTreeSet<i64> = states.iter().flat_map(|s| grains(&s.domain)).collect();
    let (Some(&origin), Some(&last)) = (all.iter().next(), all.iter().next_back()) else {
        return Vec::new();
    };
    let len = d.count as i64;
    let mut out = Vec::new();
    let mut start = origin;
    while start <= last {
        let end = start + len - 1;
        let mut vs = BTreeSet::new();
        for s in states {
            if grains(&s.domain).iter().any(|g| *g >= start && *g <= end) {
                vs.insert(s.value.to_json().to_string());
            }
        }
        if !vs.is_empty() {
            out.push((start, end, vs.into_iter().collect()));
        }
        start += len;
    }
    out
}

/// Comparable form of a series over one numeric attribute.
pub fn series_key(sr: &Series, attr: &str) -> Vec<(i64, i64, f64)> {
    sr.elements()
        .iter()
        .map(|e| {
            let (_, v) = e.value.get(attr).expect("oracle attribute");
            (
                e.interval.start().index(),
                e.interval.end().index(),
                numeric(v),
            )
        })
        .collect()
}

fn elem_value(e: &SeriesElem, attr: &str) -> f64 {
    let (_, v) = e.value.get(attr).expect("oracle attribute");
    numeric(v)
}

/// Element-weighted cumulative aggregation: one output per grain of the
/// covered span, aggregating the elements started by then.
pub fn acum_brute(sr: &Series, attr: &str, kind: AggKind) -> Vec<(i64, i64, f64)> {
    let elems = sr.elements();
    let origin = elems[0].interval.start().index();
    let last = elems
        .iter()
        .map(|e| e.interval.end().index())
        .max()
        .expect("non-empty");
    let mut out = Vec::new();
    for g in origin..=last {
        let values: Vec<f64> = elems
            .iter()
            .filter(|e| e.interval.start().index() <= g)
            .map(|e| elem_value(e, attr))
            .collect();
        out.push((origin, g, numeric(&agg_numeric(kind, &values))));
    }
    out
}

/// Element-weighted tumbling windows by grain-set intersection.
pub fn amove_brute(sr: &Series, attr: &str, kind: AggKind, d: Duration) -> Vec<(i64, i64, f64)> {
    let elems = sr.elements();
    let origin = elems[0].interval.start().index();
    let last = elems
        .iter()
        .map(|e| e.interval.end().index())
        .max()
        .expect("non-empty");
    let len = d.count as i64;
    let mut out = Vec::new();
    let mut start = origin;
    while start <= last {
        let end = start + len - 1;
        let values: Vec<f64> = elems
            .iter()
            .filter(|e| e.interval.start().index() <= end && e.interval.end().index() >= start)
            .map(|e| elem_value(e, attr))
            .collect();
        if !values.is_empty() {
            out.push((start, end, numeric(&agg_numeric(kind, &values))));
        }
        start += len;
    }
    out
}

/// Element-weighted scale-up: an element contributes once to every
/// coarse grain its expansion touches.
pub fn scale_up_brute(
    sr: &Series,
    unit: TemporalUnit,
    attr: &str,
    kind: AggKind,
) -> Vec<(i64, i64, f64)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for e in sr.elements() {
        let mut touched = BTreeSet::new();
        for g in e.interval.grains() {
            touched.insert(g.convert_grain(unit).expect("coarser").start().index());
        }
        for c in touched {
            acc.entry(c).or_default().push(elem_value(e, attr));
        }
    }
    acc.into_iter()
        .map(|(g, values)| (g, g, numeric(&agg_numeric(kind, &values))))
        .collect()
}
