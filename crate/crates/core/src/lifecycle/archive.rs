//! Past-state coalescing and the strong/moderate archival aggregation.

use std::collections::BTreeMap;

use crate::model::{
    aggregate_values, AggMode, AttrValue, HistState, ModelError, Value, WarehouseClass,
    WarehouseObject,
};
use crate::temporal::{Interval, TemporalDomain};

use super::LifecycleError;

/// Merges past states with identical structural values into one state
/// over the normalized union of their domains, then re-checks the
/// disjointness invariant. Idempotent and order-insensitive.
pub fn coalesce(oid: &str, states: &[HistState]) -> Result<Vec<HistState>, LifecycleError> {
    let mut merged: Vec<HistState> = Vec::new();
    for s in states {
        match merged.iter_mut().find(|m| m.value == s.value) {
            Some(m) => m.domain = m.domain.union(&s.domain)?,
            None => merged.push(s.clone()),
        }
    }
    for i in 0..merged.len() {
        for j in (i + 1)..merged.len() {
            if !merged[i].domain.intersect(&merged[j].domain)?.is_empty() {
                return Err(LifecycleError::OverlapDetected(oid.to_string()));
            }
        }
    }
    merged.sort_by_key(|s| s.domain.first().map(|i| i.index()));
    Ok(merged)
}

/// Summarises the selected past states of one object into archive
/// states per the class's archive filter, removes them from the past
/// set, and appends the produced states.
///
/// Strong entries yield one archive state over the normalized union of
/// the selected domains, one contribution per state; it must not overlap
/// an existing archive state. Moderate entries partition the selected
/// grains into calendar-aligned blocks of the filter's grain and yield
/// one state per non-empty block, one contribution per grain. A later
/// pass into an already-open block re-aggregates exactly: per-grain
/// weighting makes each side's contribution count recoverable from its
/// domain. Blocks whose existing state cannot re-aggregate (foreign
/// attributes, overlapping grains) raise `BlockCollision`.
pub fn archive_states(
    class: &WarehouseClass,
    obj: &mut WarehouseObject,
    selected: &[HistState],
) -> Result<usize, LifecycleError> {
    if selected.is_empty() {
        return Ok(0);
    }
    if class.archive_filter.is_empty() {
        return Err(LifecycleError::NoArchiveFilter(class.name.clone()));
    }
    let mut indices = Vec::with_capacity(selected.len());
    for s in selected {
        match obj.past.iter().position(|p| p == s) {
            Some(idx) if !indices.contains(&idx) => indices.push(idx),
            _ => {
                return Err(LifecycleError::SelectionNotPast {
                    oid: obj.oid.clone(),
                })
            }
        }
    }

    let strong: Vec<_> = class
        .archive_filter
        .entries
        .iter()
        .filter(|e| e.func.mode == AggMode::Strong)
        .collect();
    let moderate: Vec<_> = class
        .archive_filter
        .entries
        .iter()
        .filter(|e| e.func.mode == AggMode::Moderate)
        .collect();

    let mut produced: Vec<HistState> = Vec::new();
    // (existing archive index, merged replacement)
    let mut merged: Vec<(usize, HistState)> = Vec::new();

    if !strong.is_empty() {
        let mut value = Value::new();
        for entry in &strong {
            let mut slots: Vec<&AttrValue> = Vec::with_capacity(selected.len());
            for s in selected {
                let (_, slot) = s.value.get(&entry.attribute).ok_or_else(|| {
                    ModelError::MissingAttribute(entry.attribute.clone())
                })?;
                slots.push(slot);
            }
            value.set(entry.attribute.clone(), aggregate_values(entry.func.kind, &slots)?);
        }
        let all: Vec<Interval> = selected
            .iter()
            .flat_map(|s| s.domain.intervals().iter().copied())
            .collect();
        let unit = selected[0].domain.unit();
        let domain = TemporalDomain::normalize(unit, &all)?;
        // strong states carry no recoverable contribution count, so any
        // overlap with existing archives is a collision
        for existing in &obj.archive {
            if existing.domain.unit() == domain.unit()
                && !existing.domain.intersect(&domain)?.is_empty()
            {
                return Err(LifecycleError::BlockCollision {
                    oid: obj.oid.clone(),
                    block: domain.to_string(),
                });
            }
        }
        produced.push(HistState { value, domain });
    }

    if !moderate.is_empty() {
        let grain = class
            .archive_filter
            .grain
            .ok_or_else(|| LifecycleError::MissingArchiveGrain(class.name.clone()))?;
        let unit = selected[0].domain.unit();
        // block id of a grain: its index at the grain unit, split into
        // aligned windows of `count` (January-aligned for month blocks)
        let block_of = |g: crate::temporal::Instant| -> Result<i64, LifecycleError> {
            let coarse = if grain.unit == unit {
                g.index()
            } else {
                g.convert_grain(grain.unit)?.start().index()
            };
            Ok(coarse.div_euclid(grain.count as i64))
        };
        let mut blocks: BTreeMap<i64, Vec<(crate::temporal::Instant, usize)>> = BTreeMap::new();
        for (pos, s) in selected.iter().enumerate() {
            if s.domain.unit() != unit {
                return Err(crate::temporal::TemporalError::MixedUnits {
                    expected: unit,
                    found: s.domain.unit(),
                }
                .into());
            }
            for g in s.domain.grains() {
                blocks.entry(block_of(g)?).or_default().push((g, pos));
            }
        }
        for (block, members) in blocks {
            let mut value = Value::new();
            for entry in &moderate {
                let mut slots: Vec<&AttrValue> = Vec::with_capacity(members.len());
                for (_, pos) in &members {
                    let (_, slot) = selected[*pos].value.get(&entry.attribute).ok_or_else(
                        || ModelError::MissingAttribute(entry.attribute.clone()),
                    )?;
                    slots.push(slot);
                }
                value.set(entry.attribute.clone(), aggregate_values(entry.func.kind, &slots)?);
            }
            let grains: Vec<Interval> = members
                .iter()
                .map(|(g, _)| Interval::singleton(*g))
                .collect();
            let domain = TemporalDomain::normalize(unit, &grains)?;
            // the full block window at the state unit
            let n = grain.count as i64;
            let first = crate::temporal::Instant::from_index(grain.unit, block * n);
            let last = crate::temporal::Instant::from_index(grain.unit, block * n + n - 1);
            let span = if grain.unit == unit {
                Interval::new(first, last).expect("ordered block")
            } else {
                Interval::new(
                    first.convert_grain(unit)?.start(),
                    last.convert_grain(unit)?.end(),
                )
                .expect("ordered block")
            };
            let span = TemporalDomain::from_interval(span);

            // an already-open block re-aggregates the existing state
            let mut hits = obj.archive.iter().enumerate().filter(|(_, e)| {
                e.domain.unit() == span.unit()
                    && !e.domain.intersect(&span).map(|d| d.is_empty()).unwrap_or(true)
            });
            match (hits.next(), hits.next()) {
                (None, _) => produced.push(HistState { value, domain }),
                (Some((idx, existing)), None) => {
                    if merged.iter().any(|(i, _)| *i == idx) {
                        return Err(LifecycleError::BlockCollision {
                            oid: obj.oid.clone(),
                            block: span.to_string(),
                        });
                    }
                    let replacement = merge_block_state(
                        &moderate,
                        existing,
                        &value,
                        &domain,
                        members.len() as i64,
                    )
                    .map_err(|_| LifecycleError::BlockCollision {
                        oid: obj.oid.clone(),
                        block: span.to_string(),
                    })?;
                    merged.push((idx, replacement));
                }
                (Some(_), Some(_)) => {
                    return Err(LifecycleError::BlockCollision {
                        oid: obj.oid.clone(),
                        block: span.to_string(),
                    })
                }
            }
        }
    }

    indices.sort_unstable_by(|a, b| b.cmp(a));
    for idx in indices {
        obj.past.remove(idx);
    }
    for (idx, replacement) in merged {
        obj.archive[idx] = replacement;
    }
    obj.archive.extend(produced);
    obj.archive
        .sort_by_key(|s| s.domain.first().map(|i| i.index()));
    Ok(selected.len())
}

/// Exact re-aggregation of one block: per-grain weighting makes each
/// side's contribution count equal to its grain count.
fn merge_block_state(
    entries: &[&crate::model::ArchiveFilterEntry],
    existing: &HistState,
    new_value: &Value,
    new_domain: &TemporalDomain,
    new_grains: i64,
) -> Result<HistState, ModelError> {
    let overlap = existing
        .domain
        .intersect(new_domain)
        .map_err(|e| ModelError::Temporal(e))?;
    if !overlap.is_empty() {
        return Err(ModelError::PredicateType(
            "archived grains overlap the existing block state".into(),
        ));
    }
    let existing_names: Vec<&str> = existing.value.names().collect();
    let new_names: Vec<&str> = new_value.names().collect();
    if existing_names != new_names {
        return Err(ModelError::PredicateType(
            "existing block state has a different attribute structure".into(),
        ));
    }
    let existing_grains = existing.domain.grain_count();
    let mut value = Value::new();
    for entry in entries {
        let (_, a) = existing
            .value
            .get(&entry.attribute)
            .ok_or_else(|| ModelError::MissingAttribute(entry.attribute.clone()))?;
        let (_, b) = new_value
            .get(&entry.attribute)
            .ok_or_else(|| ModelError::MissingAttribute(entry.attribute.clone()))?;
        value.set(
            entry.attribute.clone(),
            merge_slot(entry.func.kind, a, existing_grains, b, new_grains)?,
        );
    }
    let domain = existing
        .domain
        .union(new_domain)
        .map_err(ModelError::Temporal)?;
    Ok(HistState { value, domain })
}

fn merge_slot(
    kind: crate::model::AggKind,
    a: &AttrValue,
    ga: i64,
    b: &AttrValue,
    gb: i64,
) -> Result<AttrValue, ModelError> {
    use crate::model::{AggKind, Scalar};
    match (a, b) {
        (AttrValue::Record(x), AttrValue::Record(y)) => {
            if x.keys().ne(y.keys()) {
                return Err(ModelError::PredicateType(
                    "composite fields differ between block states".into(),
                ));
            }
            let mut out = std::collections::BTreeMap::new();
            for (k, va) in x {
                out.insert(k.clone(), merge_slot(kind, va, ga, &y[k], gb)?);
            }
            Ok(AttrValue::Record(out))
        }
        (AttrValue::Scalar(x), AttrValue::Scalar(y)) => {
            let num = |s: &Scalar| {
                s.numeric().ok_or_else(|| {
                    ModelError::PredicateType(format!("cannot merge {} slots", s.kind()))
                })
            };
            Ok(AttrValue::Scalar(match kind {
                AggKind::Avg => {
                    Scalar::dec((num(x)? * ga as f64 + num(y)? * gb as f64) / (ga + gb) as f64)
                }
                AggKind::Sum | AggKind::Count => match (x, y) {
                    (Scalar::Int(i), Scalar::Int(j)) => Scalar::Int(i + j),
                    _ => Scalar::dec(num(x)? + num(y)?),
                },
                AggKind::Min => {
                    if num(x)? <= num(y)? {
                        x.clone()
                    } else {
                        y.clone()
                    }
                }
                AggKind::Max => {
                    if num(x)? >= num(y)? {
                        x.clone()
                    } else {
                        y.clone()
                    }
                }
            }))
        }
        _ => Err(ModelError::PredicateType(
            "mismatched slot shapes between block states".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        AggKind, AggregationFn, ArchiveFilterEntry, ArchiveGrain, CurrentState, Scalar,
    };
    use crate::temporal::{Instant, TemporalUnit};
    use crate::model::WarehouseClass;

    fn m(mo: u8) -> Instant {
        Instant::month(2000, mo).unwrap()
    }

    fn poids(v: i64) -> Value {
        Value::new().with("poids", AttrValue::Scalar(Scalar::Int(v)))
    }

    fn hist(v: i64, spans: &[(u8, u8)]) -> HistState {
        let ivs: Vec<Interval> = spans
            .iter()
            .map(|(a, b)| Interval::new(m(*a), m(*b)).unwrap())
            .collect();
        HistState {
            value: poids(v),
            domain: TemporalDomain::normalize(TemporalUnit::Month, &ivs).unwrap(),
        }
    }

    fn weight_object() -> WarehouseObject {
        WarehouseObject {
            oid: "PATIENT:p1".into(),
            class: "PATIENT".into(),
            active: true,
            current: CurrentState {
                value: poids(76),
                since: Instant::month(2001, 1).unwrap(),
            },
            past: vec![
                hist(80, &[(7, 7), (9, 10)]),
                hist(79, &[(8, 8)]),
                hist(77, &[(11, 12)]),
            ],
            archive: vec![],
        }
    }

    fn patient_with_filter(entries: Vec<ArchiveFilterEntry>, grain: Option<ArchiveGrain>) -> WarehouseClass {
        let mut class = crate::testutil::patient_class();
        class.archive_filter.entries = entries;
        class.archive_filter.grain = grain;
        class
    }

    fn t_avg_poids() -> (Vec<ArchiveFilterEntry>, Option<ArchiveGrain>) {
        (
            vec![ArchiveFilterEntry {
                attribute: "poids".into(),
                func: AggregationFn {
                    kind: AggKind::Avg,
                    mode: AggMode::Moderate,
                },
                arg: Some("poids".into()),
            }],
            Some(ArchiveGrain {
                unit: TemporalUnit::Month,
                count: 6,
            }),
        )
    }

    #[test]
    fn coalesce_merges_equal_values() {
        let states = vec![hist(80, &[(7, 7)]), hist(80, &[(9, 10)])];
        let merged = coalesce("o", &states).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].domain.to_string(), "<[2000-07,2000-07];[2000-09,2000-10]>");
        // idempotent
        assert_eq!(coalesce("o", &merged).unwrap(), merged);
    }

    #[test]
    fn coalesce_keeps_distinct_values_apart() {
        let states = vec![hist(80, &[(7, 7)]), hist(79, &[(8, 8)])];
        assert_eq!(coalesce("o", &states).unwrap().len(), 2);
    }

    #[test]
    fn coalesce_is_order_insensitive() {
        let a = vec![hist(80, &[(9, 10)]), hist(79, &[(8, 8)]), hist(80, &[(7, 7)])];
        let b = vec![hist(79, &[(8, 8)]), hist(80, &[(7, 7)]), hist(80, &[(9, 10)])];
        assert_eq!(coalesce("o", &a).unwrap(), coalesce("o", &b).unwrap());
    }

    #[test]
    fn coalesce_detects_overlap() {
        let states = vec![hist(80, &[(7, 8)]), hist(79, &[(8, 9)])];
        assert!(matches!(
            coalesce("o", &states),
            Err(LifecycleError::OverlapDetected(_))
        ));
    }

    #[test]
    fn moderate_archival_weights_by_grain() {
        let (entries, grain) = t_avg_poids();
        let class = patient_with_filter(entries, grain);
        let mut obj = weight_object();
        let selected = obj.past.clone();
        let archived = archive_states(&class, &mut obj, &selected).unwrap();
        assert_eq!(archived, 3);
        assert!(obj.past.is_empty());
        assert_eq!(obj.archive.len(), 1);
        // per-grain values over Jul-Dec: 80,79,80,80,77,77
        let got = match obj.archive[0].value.get("poids").unwrap().1 {
            AttrValue::Scalar(Scalar::Dec(d)) => d.0,
            other => panic!("unexpected {other:?}"),
        };
        assert!((got - 473.0 / 6.0).abs() < 1e-9);
        assert_eq!(obj.archive[0].domain.to_string(), "<[2000-07,2000-12]>");
    }

    #[test]
    fn strong_archival_weights_by_state() {
        let class = patient_with_filter(
            vec![ArchiveFilterEntry {
                attribute: "poids".into(),
                func: AggregationFn {
                    kind: AggKind::Avg,
                    mode: AggMode::Strong,
                },
                arg: Some("poids".into()),
            }],
            None,
        );
        let mut obj = weight_object();
        let selected = obj.past.clone();
        archive_states(&class, &mut obj, &selected).unwrap();
        assert_eq!(obj.archive.len(), 1);
        let got = match obj.archive[0].value.get("poids").unwrap().1 {
            AttrValue::Scalar(Scalar::Dec(d)) => d.0,
            other => panic!("unexpected {other:?}"),
        };
        // avg(80, 79, 77), one contribution per state
        assert!((got - 236.0 / 3.0).abs() < 1e-9);
        assert_eq!(obj.archive[0].domain.to_string(), "<[2000-07,2000-12]>");
    }

    #[test]
    fn empty_selection_is_a_no_op() {
        let (entries, grain) = t_avg_poids();
        let class = patient_with_filter(entries, grain);
        let mut obj = weight_object();
        let before = obj.clone();
        assert_eq!(archive_states(&class, &mut obj, &[]).unwrap(), 0);
        assert_eq!(obj, before);
    }

    #[test]
    fn moderate_blocks_are_calendar_aligned() {
        let (entries, grain) = t_avg_poids();
        let class = patient_with_filter(entries, grain);
        let mut obj = weight_object();
        // states straddling the June/July boundary split into two blocks
        obj.past = vec![hist(70, &[(5, 6)]), hist(71, &[(7, 8)])];
        let selected = obj.past.clone();
        archive_states(&class, &mut obj, &selected).unwrap();
        assert_eq!(obj.archive.len(), 2);
        assert_eq!(obj.archive[0].domain.to_string(), "<[2000-05,2000-06]>");
        assert_eq!(obj.archive[1].domain.to_string(), "<[2000-07,2000-08]>");
    }

    #[test]
    fn grain_conservation_holds() {
        let (entries, grain) = t_avg_poids();
        let class = patient_with_filter(entries, grain);
        let mut obj = weight_object();
        let selected = obj.past.clone();
        let removed: Vec<i64> = selected
            .iter()
            .flat_map(|s| s.domain.grains().map(|g| g.index()))
            .collect();
        archive_states(&class, &mut obj, &selected).unwrap();
        let mut archived: Vec<i64> = obj
            .archive
            .iter()
            .flat_map(|s| s.domain.grains().map(|g| g.index()))
            .collect();
        archived.sort_unstable();
        let mut removed = removed;
        removed.sort_unstable();
        assert_eq!(archived, removed);
    }

    #[test]
    fn count_over_moderate_blocks_counts_grains() {
        let class = patient_with_filter(
            vec![ArchiveFilterEntry {
                attribute: "poids".into(),
                func: AggregationFn {
                    kind: AggKind::Count,
                    mode: AggMode::Moderate,
                },
                arg: Some("poids".into()),
            }],
            Some(ArchiveGrain {
                unit: TemporalUnit::Month,
                count: 6,
            }),
        );
        let mut obj = weight_object();
        let selected = obj.past.clone();
        archive_states(&class, &mut obj, &selected).unwrap();
        assert_eq!(
            obj.archive[0].value.get("poids").unwrap().1,
            &AttrValue::Scalar(Scalar::Int(6))
        );
    }

    #[test]
    fn reopened_block_reaggregates_exactly() {
        let (entries, grain) = t_avg_poids();
        let class = patient_with_filter(entries, grain);
        let mut obj = weight_object();
        let first = vec![obj.past[0].clone(), obj.past[1].clone()];
        archive_states(&class, &mut obj, &first).unwrap();
        let second = vec![obj.past[0].clone()]; // 77 on 11-12, same Jul-Dec block
        archive_states(&class, &mut obj, &second).unwrap();
        assert_eq!(obj.archive.len(), 1);
        // incremental merging equals a one-shot archival of all six grains
        let got = match obj.archive[0].value.get("poids").unwrap().1 {
            AttrValue::Scalar(Scalar::Dec(d)) => d.0,
            other => panic!("unexpected {other:?}"),
        };
        assert!((got - 473.0 / 6.0).abs() < 1e-9);
        assert_eq!(obj.archive[0].domain.to_string(), "<[2000-07,2000-12]>");
    }

    #[test]
    fn strong_archival_collides_with_existing_blocks() {
        let class = patient_with_filter(
            vec![ArchiveFilterEntry {
                attribute: "poids".into(),
                func: AggregationFn {
                    kind: AggKind::Avg,
                    mode: AggMode::Strong,
                },
                arg: Some("poids".into()),
            }],
            None,
        );
        let mut obj = weight_object();
        // inject an archive state already covering August
        obj.archive.push(hist(99, &[(8, 8)]));
        let second = vec![obj.past[1].clone()]; // 79 on 08
        assert!(matches!(
            archive_states(&class, &mut obj, &second),
            Err(LifecycleError::BlockCollision { .. })
        ));
    }

    #[test]
    fn selection_must_come_from_the_past_set() {
        let (entries, grain) = t_avg_poids();
        let class = patient_with_filter(entries, grain);
        let mut obj = weight_object();
        let foreign = vec![hist(99, &[(1, 1)])];
        assert!(matches!(
            archive_states(&class, &mut obj, &foreign),
            Err(LifecycleError::SelectionNotPast { .. })
        ));
    }

    #[test]
    fn missing_filter_is_an_error() {
        let class = patient_with_filter(vec![], None);
        let mut obj = weight_object();
        let selected = obj.past.clone();
        assert!(matches!(
            archive_states(&class, &mut obj, &selected),
            Err(LifecycleError::NoArchiveFilter(_))
        ));
    }
}
