//! Classical operators extended to warehouse objects and states, the
//! state-access operators, and the temporal restriction/join/grouping
//! operators.

use std::collections::BTreeMap;

use crate::model::{
    ident_eq, AttrRef, AttrValue, Oid, Pred, Value, WarehouseObject, WarehouseStore, WindowRel,
};
use crate::temporal::{Instant, Interval, TemporalDomain, TemporalError, TemporalUnit};

use super::{AState, AlgebraError, Collection, Kind, ObjectCtx, PairCtx, StateCtx, StateRole, Tuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOpKind {
    Union,
    Intersect,
    Difference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOpEq {
    Value,
    Identity,
}

fn lookup<'a>(store: &'a WarehouseStore, oid: &str) -> Result<&'a WarehouseObject, AlgebraError> {
    store
        .object(oid)
        .ok_or_else(|| AlgebraError::UnknownObject(oid.to_string()))
}

/// Evaluation domain of a current state: closed at the store's last
/// refresh instant (currency is known through the last observation).
pub(crate) fn current_domain(store: &WarehouseStore, obj: &WarehouseObject) -> TemporalDomain {
    let since = obj.current.since;
    let end = match store.last_refresh {
        Some(t) if t.unit() == since.unit() && t.index() >= since.index() => t,
        _ => since,
    };
    TemporalDomain::from_interval(Interval::new(since, end).expect("since <= end"))
}

fn current_state(store: &WarehouseStore, obj: &WarehouseObject) -> AState {
    AState {
        owner: Some(obj.oid.clone()),
        role: Some(StateRole::Current),
        value: obj.current.value.clone(),
        domain: current_domain(store, obj),
        open_end: true,
    }
}

fn hist_states(obj: &WarehouseObject, role: StateRole) -> Vec<AState> {
    let set = match role {
        StateRole::Past => &obj.past,
        StateRole::Archive => &obj.archive,
        StateRole::Current => unreachable!(),
    };
    set.iter()
        .map(|s| AState {
            owner: Some(obj.oid.clone()),
            role: Some(role),
            value: s.value.clone(),
            domain: s.domain.clone(),
            open_end: false,
        })
        .collect()
}

/// One current state per object.
pub fn current(store: &WarehouseStore, objs: &Collection) -> Result<Collection, AlgebraError> {
    let oids = objs.expect_objects()?;
    let mut out = Vec::with_capacity(oids.len());
    for oid in oids {
        out.push(current_state(store, lookup(store, oid)?));
    }
    Ok(Collection::States(out))
}

/// One inner set of past states per object; empty inner sets retained.
pub fn past(store: &WarehouseStore, objs: &Collection) -> Result<Collection, AlgebraError> {
    let oids = objs.expect_objects()?;
    let mut out = Vec::with_capacity(oids.len());
    for oid in oids {
        out.push(hist_states(lookup(store, oid)?, StateRole::Past));
    }
    Ok(Collection::StateSets(out))
}

/// One inner set of archive states per object; empty inner sets retained.
pub fn archive(store: &WarehouseStore, objs: &Collection) -> Result<Collection, AlgebraError> {
    let oids = objs.expect_objects()?;
    let mut out = Vec::with_capacity(oids.len());
    for oid in oids {
        out.push(hist_states(lookup(store, oid)?, StateRole::Archive));
    }
    Ok(Collection::StateSets(out))
}

fn objects_value_equal(
    store: &WarehouseStore,
    a: &str,
    b: &str,
) -> Result<bool, AlgebraError> {
    let oa = lookup(store, a)?;
    let ob = lookup(store, b)?;
    Ok(oa.class == ob.class
        && oa.current == ob.current
        && oa.past == ob.past
        && oa.archive == ob.archive)
}

/// Union/intersection/difference under value equality (deep structural
/// equality of value and domain) or oid identity (object sets only).
pub fn set_combine(
    store: &WarehouseStore,
    kind: SetOpKind,
    eq: SetOpEq,
    a: &Collection,
    b: &Collection,
) -> Result<Collection, AlgebraError> {
    match (a, b) {
        (Collection::Objects(x), Collection::Objects(y)) => {
            let eq_fn = |l: &Oid, r: &Oid| -> Result<bool, AlgebraError> {
                match eq {
                    SetOpEq::Identity => Ok(l == r),
                    SetOpEq::Value => objects_value_equal(store, l, r),
                }
            };
            let in_set = |item: &Oid, set: &[Oid]| -> Result<bool, AlgebraError> {
                for other in set {
                    if eq_fn(item, other)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            };
            let mut out: Vec<Oid> = Vec::new();
            match kind {
                SetOpKind::Union => {
                    for o in x {
                        if !in_set(o, &out)? {
                            out.push(o.clone());
                        }
                    }
                    for o in y {
                        if !in_set(o, &out)? {
                            out.push(o.clone());
                        }
                    }
                }
                SetOpKind::Intersect => {
                    for o in x {
                        if in_set(o, y)? && !in_set(o, &out)? {
                            out.push(o.clone());
                        }
                    }
                }
                SetOpKind::Difference => {
                    for o in x {
                        if !in_set(o, y)? && !in_set(o, &out)? {
                            out.push(o.clone());
                        }
                    }
                }
            }
            Ok(Collection::Objects(out))
        }
        (Collection::States(x), Collection::States(y)) => {
            if eq == SetOpEq::Identity {
                return Err(AlgebraError::IdentityOnStates);
            }
            let in_set = |item: &AState, set: &[AState]| {
                set.iter().any(|other| other.value_key() == item.value_key())
            };
            let mut out: Vec<AState> = Vec::new();
            match kind {
                SetOpKind::Union => {
                    for s in x.iter().chain(y.iter()) {
                        if !in_set(s, &out) {
                            out.push(s.clone());
                        }
                    }
                }
                SetOpKind::Intersect => {
                    for s in x {
                        if in_set(s, y) && !in_set(s, &out) {
                            out.push(s.clone());
                        }
                    }
                }
                SetOpKind::Difference => {
                    for s in x {
                        if !in_set(s, y) && !in_set(s, &out) {
                            out.push(s.clone());
                        }
                    }
                }
            }
            Ok(Collection::States(out))
        }
        _ => Err(AlgebraError::KindMismatch {
            expected: "pair of object sets or pair of state sets",
            found: if a.kind() == b.kind() {
                a.kind().name()
            } else {
                "mixed kinds"
            },
        }),
    }
}

/// Unions the inner sets of a set of state sets into one state set.
pub fn flatten(c: &Collection) -> Result<Collection, AlgebraError> {
    match c {
        Collection::StateSets(sets) => Ok(Collection::States(
            sets.iter().flat_map(|s| s.iter().cloned()).collect(),
        )),
        other => Err(AlgebraError::KindMismatch {
            expected: Kind::StateSetSet.name(),
            found: other.kind().name(),
        }),
    }
}

/// Removes value duplicates, keeping first occurrences.
pub fn dup_elim(store: &WarehouseStore, c: &Collection) -> Result<Collection, AlgebraError> {
    match c {
        Collection::States(states) => {
            let mut out: Vec<AState> = Vec::new();
            for s in states {
                if !out.iter().any(|o| o.value_key() == s.value_key()) {
                    out.push(s.clone());
                }
            }
            Ok(Collection::States(out))
        }
        Collection::Objects(oids) => {
            let mut out: Vec<Oid> = Vec::new();
            for oid in oids {
                let mut dup = false;
                for kept in &out {
                    if objects_value_equal(store, oid, kept)? {
                        dup = true;
                        break;
                    }
                }
                if !dup {
                    out.push(oid.clone());
                }
            }
            Ok(Collection::Objects(out))
        }
        Collection::Tuples(ts) => {
            let mut out: Vec<Tuple> = Vec::new();
            for t in ts {
                if !out.contains(t) {
                    out.push(t.clone());
                }
            }
            Ok(Collection::Tuples(out))
        }
        other => Err(AlgebraError::KindMismatch {
            expected: "object set, state set or tuple set",
            found: other.kind().name(),
        }),
    }
}

/// Drops empty inner sets.
pub fn empty_elim(c: &Collection) -> Result<Collection, AlgebraError> {
    match c {
        Collection::StateSets(sets) => Ok(Collection::StateSets(
            sets.iter().filter(|s| !s.is_empty()).cloned().collect(),
        )),
        other => Err(AlgebraError::KindMismatch {
            expected: Kind::StateSetSet.name(),
            found: other.kind().name(),
        }),
    }
}

/// Keeps the elements satisfying the predicate. Object predicates read
/// the current value.
pub fn select(
    store: &WarehouseStore,
    c: &Collection,
    var: Option<&str>,
    pred: &Pred,
) -> Result<Collection, AlgebraError> {
    match c {
        Collection::Objects(oids) => {
            let mut out = Vec::new();
            for oid in oids {
                let obj = lookup(store, oid)?;
                let ctx = ObjectCtx {
                    object: obj,
                    var,
                    domain: current_domain(store, obj),
                };
                if pred.eval(&ctx)? {
                    out.push(oid.clone());
                }
            }
            Ok(Collection::Objects(out))
        }
        Collection::States(states) => {
            let mut out = Vec::new();
            for s in states {
                let ctx = StateCtx { state: s, var };
                if pred.eval(&ctx)? {
                    out.push(s.clone());
                }
            }
            Ok(Collection::States(out))
        }
        other => Err(AlgebraError::KindMismatch {
            expected: "object set or state set",
            found: other.kind().name(),
        }),
    }
}

/// The special attribute naming the temporal domain in projections.
fn is_domain_attr(name: &str) -> bool {
    name.eq_ignore_ascii_case("domt")
}

/// Restricts values to the listed attributes; temporal domains are
/// always retained. Projecting an object set projects the current
/// states, yielding a state set.
pub fn project(
    store: &WarehouseStore,
    c: &Collection,
    var: Option<&str>,
    items: &[(Option<String>, AttrRef)],
) -> Result<Collection, AlgebraError> {
    let project_state = |s: &AState| -> Result<AState, AlgebraError> {
        let mut value = Value::new();
        for (alias, path) in items {
            if path.sub.is_none() && is_domain_attr(&path.attr) {
                continue;
            }
            let ctx = StateCtx { state: s, var };
            let slot = crate::model::PredContext::attr(&ctx, path)?;
            let name = alias.clone().unwrap_or_else(|| path.attr.clone());
            value.set(name, slot);
        }
        Ok(AState {
            owner: s.owner.clone(),
            role: s.role,
            value,
            domain: s.domain.clone(),
            open_end: s.open_end,
        })
    };
    match c {
        Collection::States(states) => {
            let mut out = Vec::with_capacity(states.len());
            for s in states {
                out.push(project_state(s)?);
            }
            Ok(Collection::States(out))
        }
        Collection::Objects(oids) => {
            let mut out = Vec::with_capacity(oids.len());
            for oid in oids {
                let obj = lookup(store, oid)?;
                out.push(project_state(&current_state(store, obj))?);
            }
            Ok(Collection::States(out))
        }
        other => Err(AlgebraError::KindMismatch {
            expected: "object set or state set",
            found: other.kind().name(),
        }),
    }
}

/// Concatenates two values; colliding attribute names are prefixed
/// `left.` / `right.`.
pub(crate) fn concat_values(l: &Value, r: &Value) -> Value {
    let collides = |name: &str, other: &Value| other.names().any(|n| ident_eq(n, name));
    let mut out = Value::new();
    for (k, v) in &l.0 {
        let name = if collides(k, r) {
            format!("left.{k}")
        } else {
            k.clone()
        };
        out.set(name, v.clone());
    }
    for (k, v) in &r.0 {
        let name = if collides(k, l) {
            format!("right.{k}")
        } else {
            k.clone()
        };
        out.set(name, v.clone());
    }
    out
}

/// Non-temporal join: concatenated value pairs satisfying the predicate,
/// domains carried through untouched.
pub fn join(
    store: &WarehouseStore,
    left: &Collection,
    left_var: Option<&str>,
    right: &Collection,
    right_var: Option<&str>,
    pred: &Pred,
) -> Result<Collection, AlgebraError> {
    let as_states = |c: &Collection| -> Result<Vec<AState>, AlgebraError> {
        match c {
            Collection::States(s) => Ok(s.clone()),
            Collection::Objects(oids) => {
                let mut out = Vec::with_capacity(oids.len());
                for oid in oids {
                    out.push(current_state(store, lookup(store, oid)?));
                }
                Ok(out)
            }
            other => Err(AlgebraError::KindMismatch {
                expected: "object set or state set",
                found: other.kind().name(),
            }),
        }
    };
    let keep_domains = matches!(
        (left, right),
        (Collection::States(_), Collection::States(_))
    );
    let lstates = as_states(left)?;
    let rstates = as_states(right)?;
    let mut out = Vec::new();
    for l in &lstates {
        for r in &rstates {
            let ctx = PairCtx {
                left: l,
                left_var,
                right: r,
                right_var,
            };
            if pred.eval(&ctx)? {
                out.push(Tuple::Pair {
                    value: concat_values(&l.value, &r.value),
                    left_domain: keep_domains.then(|| l.domain.clone()),
                    right_domain: keep_domains.then(|| r.domain.clone()),
                });
            }
        }
    }
    Ok(Collection::Tuples(out))
}

/// Groups states by one scalar attribute: states agreeing on every other
/// attribute and on their domain merge into one state whose grouped
/// attribute holds the collected value set.
pub fn nest(c: &Collection, attr: &str) -> Result<Collection, AlgebraError> {
    let states = c.expect_states()?;
    let mut groups: BTreeMap<(Value, String), (TemporalDomain, Vec<crate::model::Scalar>)> =
        BTreeMap::new();
    let mut order: Vec<(Value, String)> = Vec::new();
    for s in states {
        let (key_name, slot) = s
            .value
            .get(attr)
            .ok_or_else(|| crate::model::ModelError::UnknownAttribute(attr.to_string()))?;
        let scalar = match slot {
            AttrValue::Scalar(sc) => sc.clone(),
            other => {
                return Err(crate::model::ModelError::PredicateType(format!(
                    "nest expects a scalar attribute, {attr} is a {}",
                    other.kind()
                ))
                .into())
            }
        };
        let key_name = key_name.to_string();
        let mut rest = s.value.clone();
        rest.0.remove(&key_name);
        let key = (rest, s.domain.to_string());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        let entry = groups
            .entry(key)
            .or_insert_with(|| (s.domain.clone(), Vec::new()));
        if !entry.1.contains(&scalar) {
            entry.1.push(scalar);
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let (domain, mut scalars) = groups.remove(&key).expect("group recorded");
        scalars.sort();
        let mut value = key.0;
        value.set(attr.to_string(), AttrValue::List(scalars));
        out.push(AState::detached(value, domain));
    }
    Ok(Collection::States(out))
}

/// Inverse of [`nest`]: explodes a list attribute into one state per
/// element.
pub fn unnest(c: &Collection, attr: &str) -> Result<Collection, AlgebraError> {
    let states = c.expect_states()?;
    let mut out = Vec::new();
    for s in states {
        let (key_name, slot) = s
            .value
            .get(attr)
            .ok_or_else(|| crate::model::ModelError::UnknownAttribute(attr.to_string()))?;
        let items = match slot {
            AttrValue::List(items) => items.clone(),
            other => {
                return Err(crate::model::ModelError::PredicateType(format!(
                    "unnest expects a list attribute, {attr} is a {}",
                    other.kind()
                ))
                .into())
            }
        };
        let key_name = key_name.to_string();
        for item in items {
            let mut value = s.value.clone();
            value.0.remove(&key_name);
            value.set(key_name.clone(), AttrValue::Scalar(item));
            out.push(AState {
                owner: s.owner.clone(),
                role: s.role,
                value,
                domain: s.domain.clone(),
                open_end: s.open_end,
            });
        }
    }
    Ok(Collection::States(out))
}

/// Temporal restriction: keeps the states standing in the requested
/// relation with the window `T`. For the thirteen Allen relations the
/// window is the left operand (`T rel DomT`); the `during` keyword keeps
/// states whose domain is inclusively contained in the window. An object
/// set input gathers all states of each object.
pub fn state_restrict(
    store: &WarehouseStore,
    c: &Collection,
    window: &TemporalDomain,
    rel: WindowRel,
) -> Result<Collection, AlgebraError> {
    let candidates: Vec<AState> = match c {
        Collection::States(states) => states.clone(),
        Collection::Objects(oids) => {
            let mut all = Vec::new();
            for oid in oids {
                let obj = lookup(store, oid)?;
                all.push(current_state(store, obj));
                all.extend(hist_states(obj, StateRole::Past));
                all.extend(hist_states(obj, StateRole::Archive));
            }
            all
        }
        other => {
            return Err(AlgebraError::KindMismatch {
                expected: "object set or state set",
                found: other.kind().name(),
            })
        }
    };
    let mut out = Vec::new();
    for s in candidates {
        let keep = match rel {
            WindowRel::Contains => crate::temporal::contains(window, &s.domain)?,
            WindowRel::Allen(r) => crate::temporal::allen_relate(window, &s.domain, r)?,
        };
        if keep {
            out.push(s);
        }
    }
    Ok(Collection::States(out))
}

/// Temporal join on domain intersection: each qualifying pair yields one
/// state on the shared grains.
pub fn ijoin(
    left: &[AState],
    left_var: Option<&str>,
    right: &[AState],
    right_var: Option<&str>,
    pred: &Pred,
) -> Result<Vec<AState>, AlgebraError> {
    temporal_join(left, left_var, right, right_var, pred, false)
}

/// Temporal join on domain union: pairs must still share at least one
/// grain, but the result keeps every grain either side contributes.
pub fn ujoin(
    left: &[AState],
    left_var: Option<&str>,
    right: &[AState],
    right_var: Option<&str>,
    pred: &Pred,
) -> Result<Vec<AState>, AlgebraError> {
    temporal_join(left, left_var, right, right_var, pred, true)
}

fn temporal_join(
    left: &[AState],
    left_var: Option<&str>,
    right: &[AState],
    right_var: Option<&str>,
    pred: &Pred,
    union_domains: bool,
) -> Result<Vec<AState>, AlgebraError> {
    let mut out = Vec::new();
    for l in left {
        for r in right {
            let shared = l.domain.intersect(&r.domain)?;
            if shared.is_empty() {
                continue;
            }
            let ctx = PairCtx {
                left: l,
                left_var,
                right: r,
                right_var,
            };
            if !pred.eval(&ctx)? {
                continue;
            }
            let domain = if union_domains {
                l.domain.union(&r.domain)?
            } else {
                shared
            };
            out.push(AState::detached(concat_values(&l.value, &r.value), domain));
        }
    }
    Ok(out)
}

fn uniform_unit(states: &[AState]) -> Result<Option<TemporalUnit>, AlgebraError> {
    let mut unit = None;
    for s in states {
        match unit {
            None => unit = Some(s.domain.unit()),
            Some(u) if u != s.domain.unit() => {
                return Err(TemporalError::MixedUnits {
                    expected: u,
                    found: s.domain.unit(),
                }
                .into())
            }
            _ => {}
        }
    }
    Ok(unit)
}

/// Groups states at a strictly coarser unit: one `(coarse grain, value
/// set)` tuple per coarse grain intersected by at least one state; a
/// state counts once per coarse grain it touches.
pub fn ugroup(states: &[AState], unit: TemporalUnit) -> Result<Collection, AlgebraError> {
    let Some(fine) = uniform_unit(states)? else {
        return Ok(Collection::Tuples(Vec::new()));
    };
    if !fine.is_finer_than(unit) {
        return Err(TemporalError::NotCoarser {
            from: fine,
            target: unit,
        }
        .into());
    }
    let mut grains: BTreeMap<i64, Vec<Value>> = BTreeMap::new();
    for s in states {
        let mut touched: Vec<i64> = Vec::new();
        for iv in s.domain.intervals() {
            let from = iv.start().convert_grain(unit)?.start().index();
            let to = iv.end().convert_grain(unit)?.start().index();
            for g in from..=to {
                if !touched.contains(&g) {
                    touched.push(g);
                }
            }
        }
        for g in touched {
            let values = grains.entry(g).or_default();
            if !values.contains(&s.value) {
                values.push(s.value.clone());
            }
        }
    }
    let tuples = grains
        .into_iter()
        .map(|(g, mut values)| {
            values.sort();
            Tuple::Window {
                window: Interval::singleton(Instant::from_index(unit, g)),
                values,
            }
        })
        .collect();
    Ok(Collection::Tuples(tuples))
}

/// Groups states into windows of a fixed duration tiled from the
/// earliest grain; one `(window, value set)` tuple per non-empty window.
pub fn dgroup(
    states: &[AState],
    duration: crate::temporal::Duration,
) -> Result<Collection, AlgebraError> {
    let Some(unit) = uniform_unit(states)? else {
        return Ok(Collection::Tuples(Vec::new()));
    };
    if duration.unit != unit {
        return Err(TemporalError::MixedUnits {
            expected: unit,
            found: duration.unit,
        }
        .into());
    }
    let origin = states
        .iter()
        .filter_map(|s| s.domain.first())
        .map(|i| i.index())
        .min()
        .expect("non-empty state set");
    let last = states
        .iter()
        .filter_map(|s| s.domain.last())
        .map(|i| i.index())
        .max()
        .expect("non-empty state set");
    let len = duration.count as i64;
    let mut tuples = Vec::new();
    let mut start = origin;
    while start <= last {
        let window = Interval::new(
            Instant::from_index(unit, start),
            Instant::from_index(unit, start + len - 1),
        )
        .expect("positive duration");
        let wdom = TemporalDomain::from_interval(window);
        let mut values: Vec<Value> = Vec::new();
        for s in states {
            if !s.domain.intersect(&wdom)?.is_empty() && !values.contains(&s.value) {
                values.push(s.value.clone());
            }
        }
        if !values.is_empty() {
            values.sort();
            tuples.push(Tuple::Window { window, values });
        }
        start += len;
    }
    Ok(Collection::Tuples(tuples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CmpOp, Operand, Scalar};
    use crate::temporal::AllenRelation;
    use crate::testutil::past_value;

    fn m(y: i64, mo: u8) -> Instant {
        Instant::month(y, mo).unwrap()
    }

    fn dom(spans: &[(u8, u8)]) -> TemporalDomain {
        let ivs: Vec<Interval> = spans
            .iter()
            .map(|(a, b)| Interval::new(m(2000, *a), m(2000, *b)).unwrap())
            .collect();
        TemporalDomain::normalize(TemporalUnit::Month, &ivs).unwrap()
    }

    use crate::testutil::dupond_store;

    fn objects(oids: &[&str]) -> Collection {
        Collection::Objects(oids.iter().map(|s| s.to_string()).collect())
    }

    fn name_is(var: &str, attr: &str, v: &str) -> Pred {
        Pred::Cmp {
            left: Operand::Attr(AttrRef::qualified(var, attr)),
            op: CmpOp::Eq,
            right: Operand::Lit(Scalar::Str(v.into())),
        }
    }

    #[test]
    fn select_by_name_keeps_one_patient() {
        let store = dupond_store();
        let all = objects(&["PATIENT:p1", "PATIENT:p2"]);
        let pred = name_is("p", "nom", "Dupond").and(name_is("p", "prénom", "Michel"));
        let got = select(&store, &all, Some("p"), &pred).unwrap();
        assert_eq!(got, objects(&["PATIENT:p1"]));
    }

    #[test]
    fn past_yields_one_inner_set_per_object() {
        let store = dupond_store();
        let got = past(&store, &objects(&["PATIENT:p1", "PATIENT:p2"])).unwrap();
        match &got {
            Collection::StateSets(sets) => {
                assert_eq!(sets.len(), 2);
                assert_eq!(sets[0].len(), 3);
                assert_eq!(sets[1].len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn archive_of_bare_object_keeps_empty_inner_set() {
        let store = dupond_store();
        let got = archive(&store, &objects(&["PATIENT:p1"])).unwrap();
        assert_eq!(got, Collection::StateSets(vec![vec![]]));
        let trimmed = empty_elim(&got).unwrap();
        assert_eq!(trimmed, Collection::StateSets(vec![]));
    }

    #[test]
    fn current_of_empty_set_is_empty() {
        let store = dupond_store();
        assert_eq!(
            current(&store, &objects(&[])).unwrap(),
            Collection::States(vec![])
        );
    }

    #[test]
    fn flatten_concatenates_inner_sets() {
        let store = dupond_store();
        let sets = past(&store, &objects(&["PATIENT:p1", "PATIENT:p2"])).unwrap();
        let flat = flatten(&sets).unwrap();
        assert_eq!(flat.expect_states().unwrap().len(), 4);
    }

    #[test]
    fn set_ops_follow_the_chosen_equality() {
        let store = dupond_store();
        let a = objects(&["PATIENT:p1", "PATIENT:p2"]);
        let b = objects(&["PATIENT:p2"]);
        let union = set_combine(&store, SetOpKind::Union, SetOpEq::Identity, &a, &b).unwrap();
        assert_eq!(union, objects(&["PATIENT:p1", "PATIENT:p2"]));
        let diff = set_combine(&store, SetOpKind::Difference, SetOpEq::Identity, &a, &b).unwrap();
        assert_eq!(diff, objects(&["PATIENT:p1"]));
        let states = past(&store, &objects(&["PATIENT:p1"])).unwrap();
        let states = flatten(&states).unwrap();
        let empty = set_combine(&store, SetOpKind::Difference, SetOpEq::Value, &states, &states)
            .unwrap();
        assert_eq!(empty.expect_states().unwrap().len(), 0);
        assert_eq!(
            set_combine(&store, SetOpKind::Union, SetOpEq::Identity, &states, &states),
            Err(AlgebraError::IdentityOnStates)
        );
    }

    #[test]
    fn vintersect_keeps_shared_value_domain_pairs() {
        let s1 = AState::detached(past_value(80, (10, 16)), dom(&[(7, 7)]));
        let s2 = AState::detached(past_value(79, (10, 15)), dom(&[(8, 8)]));
        let s3 = AState::detached(past_value(80, (10, 16)), dom(&[(7, 7)]));
        let store = dupond_store();
        let got = set_combine(
            &store,
            SetOpKind::Intersect,
            SetOpEq::Value,
            &Collection::States(vec![s1, s2]),
            &Collection::States(vec![s3]),
        )
        .unwrap();
        assert_eq!(got.expect_states().unwrap().len(), 1);
    }

    #[test]
    fn dup_elim_drops_value_duplicates() {
        let s1 = AState::detached(past_value(80, (10, 16)), dom(&[(7, 7)]));
        let s2 = AState::detached(past_value(80, (10, 16)), dom(&[(7, 7)]));
        let store = dupond_store();
        let got = dup_elim(&store, &Collection::States(vec![s1, s2])).unwrap();
        assert_eq!(got.expect_states().unwrap().len(), 1);
    }

    #[test]
    fn project_keeps_domains() {
        let store = dupond_store();
        let states = flatten(&past(&store, &objects(&["PATIENT:p1"])).unwrap()).unwrap();
        let got = project(
            &store,
            &states,
            Some("pp"),
            &[
                (None, AttrRef::qualified("pp", "poids")),
                (None, AttrRef::qualified("pp", "domT")),
            ],
        )
        .unwrap();
        let states = got.expect_states().unwrap();
        assert_eq!(states.len(), 3);
        for s in states {
            assert_eq!(s.value.names().collect::<Vec<_>>(), vec!["poids"]);
            assert!(!s.domain.is_empty());
        }
    }

    #[test]
    fn state_restrict_on_the_paper_window() {
        let store = dupond_store();
        let window = dom(&[(7, 12)]);
        let got = state_restrict(
            &store,
            &objects(&["PATIENT:p1"]),
            &window,
            WindowRel::Contains,
        )
        .unwrap();
        let states = got.expect_states().unwrap();
        assert_eq!(states.len(), 3);
        assert_eq!(states[0].domain.to_string(), "<[2000-07,2000-07];[2000-09,2000-10]>");
        assert_eq!(states[1].domain.to_string(), "<[2000-08,2000-08]>");
        assert_eq!(states[2].domain.to_string(), "<[2000-11,2000-12]>");
    }

    #[test]
    fn state_restrict_equals_matches_exactly() {
        let store = dupond_store();
        let states = flatten(&past(&store, &objects(&["PATIENT:p1"])).unwrap()).unwrap();
        let got = state_restrict(
            &store,
            &states,
            &dom(&[(8, 8)]),
            WindowRel::Allen(AllenRelation::Equals),
        )
        .unwrap();
        assert_eq!(got.expect_states().unwrap().len(), 1);
    }

    #[test]
    fn state_restrict_before_all_domains_is_empty() {
        let store = dupond_store();
        let states = flatten(&past(&store, &objects(&["PATIENT:p1"])).unwrap()).unwrap();
        let got = state_restrict(&store, &states, &dom(&[(1, 2)]), WindowRel::Contains).unwrap();
        assert!(got.expect_states().unwrap().is_empty());
    }

    #[test]
    fn ijoin_skips_disjoint_pairs_and_intersects_domains() {
        let a = vec![AState::detached(
            Value::new().with("poids", AttrValue::Scalar(Scalar::Int(80))),
            dom(&[(7, 9)]),
        )];
        let b = vec![
            AState::detached(
                Value::new().with("poids", AttrValue::Scalar(Scalar::Int(70))),
                dom(&[(8, 10)]),
            ),
            AState::detached(
                Value::new().with("poids", AttrValue::Scalar(Scalar::Int(90))),
                dom(&[(11, 12)]),
            ),
        ];
        let got = ijoin(&a, Some("h1"), &b, Some("h2"), &Pred::Bool(true)).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].domain.to_string(), "<[2000-08,2000-09]>");
        // collision prefixes
        let names: Vec<&str> = got[0].value.names().collect();
        assert_eq!(names, vec!["left.poids", "right.poids"]);
    }

    #[test]
    fn ijoin_self_pairs_on_own_domain() {
        let store = dupond_store();
        let states = flatten(&past(&store, &objects(&["PATIENT:p1"])).unwrap()).unwrap();
        let states = states.expect_states().unwrap().to_vec();
        let pred = Pred::Cmp {
            left: Operand::Attr(AttrRef::qualified("h1", "poids")),
            op: CmpOp::Eq,
            right: Operand::Attr(AttrRef::qualified("h2", "poids")),
        };
        let got = ijoin(&states, Some("h1"), &states, Some("h2"), &pred).unwrap();
        // each state pairs with itself only (all weights distinct)
        assert_eq!(got.len(), 3);
        for (s, j) in states.iter().zip(got.iter()) {
            assert_eq!(j.domain, s.domain);
        }
    }

    #[test]
    fn ujoin_unites_domains_of_qualifying_pairs() {
        let a = vec![AState::detached(
            Value::new().with("poids", AttrValue::Scalar(Scalar::Int(79))),
            dom(&[(7, 8)]),
        )];
        let b = vec![AState::detached(
            Value::new().with("poids", AttrValue::Scalar(Scalar::Int(82))),
            dom(&[(8, 9)]),
        )];
        let pred = Pred::Cmp {
            left: Operand::Attr(AttrRef::qualified("h1", "poids")),
            op: CmpOp::Lt,
            right: Operand::Attr(AttrRef::qualified("h2", "poids")),
        };
        let got = ujoin(&a, Some("h1"), &b, Some("h2"), &pred).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].domain.to_string(), "<[2000-07,2000-09]>");
        // disjoint pair is excluded even when the predicate holds
        let c = vec![AState::detached(
            Value::new().with("poids", AttrValue::Scalar(Scalar::Int(90))),
            dom(&[(11, 12)]),
        )];
        assert!(ujoin(&a, Some("h1"), &c, Some("h2"), &pred).unwrap().is_empty());
    }

    #[test]
    fn ugroup_at_quarter_matches_the_expansion() {
        let store = dupond_store();
        let states = flatten(&past(&store, &objects(&["PATIENT:p1"])).unwrap()).unwrap();
        let states = project(
            &store,
            &states,
            Some("pp"),
            &[(None, AttrRef::qualified("pp", "poids"))],
        )
        .unwrap();
        let got = ugroup(states.expect_states().unwrap(), TemporalUnit::Quarter).unwrap();
        match got {
            Collection::Tuples(tuples) => {
                assert_eq!(tuples.len(), 2);
                let fmt = |t: &Tuple| match t {
                    Tuple::Window { window, values } => {
                        let vs: Vec<String> =
                            values.iter().map(|v| v.to_json().to_string()).collect();
                        format!("{window} {}", vs.join("/"))
                    }
                    _ => unreachable!(),
                };
                assert_eq!(fmt(&tuples[0]), "[2000-Q3,2000-Q3] {\"poids\":79}/{\"poids\":80}");
                assert_eq!(fmt(&tuples[1]), "[2000-Q4,2000-Q4] {\"poids\":77}/{\"poids\":80}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ugroup_requires_a_strictly_coarser_unit() {
        let s = AState::detached(past_value(80, (10, 16)), dom(&[(7, 7)]));
        assert!(matches!(
            ugroup(&[s], TemporalUnit::Month),
            Err(AlgebraError::Temporal(TemporalError::NotCoarser { .. }))
        ));
    }

    #[test]
    fn dgroup_tiles_from_the_earliest_grain() {
        let store = dupond_store();
        let states = flatten(&past(&store, &objects(&["PATIENT:p1"])).unwrap()).unwrap();
        let states = project(
            &store,
            &states,
            Some("pp"),
            &[(None, AttrRef::qualified("pp", "poids"))],
        )
        .unwrap();
        let got = dgroup(
            states.expect_states().unwrap(),
            crate::temporal::Duration::new(2, TemporalUnit::Month).unwrap(),
        )
        .unwrap();
        match got {
            Collection::Tuples(tuples) => {
                let windows: Vec<String> = tuples
                    .iter()
                    .map(|t| match t {
                        Tuple::Window { window, values } => {
                            format!("{window}:{}", values.len())
                        }
                        _ => unreachable!(),
                    })
                    .collect();
                assert_eq!(
                    windows,
                    vec![
                        "[2000-07,2000-08]:2".to_string(),
                        "[2000-09,2000-10]:1".to_string(),
                        "[2000-11,2000-12]:1".to_string(),
                    ]
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dgroup_of_empty_set_is_empty() {
        let got = dgroup(
            &[],
            crate::temporal::Duration::new(2, TemporalUnit::Month).unwrap(),
        )
        .unwrap();
        assert_eq!(got, Collection::Tuples(vec![]));
    }

    #[test]
    fn nest_unnest_round_trips() {
        let s1 = AState::detached(
            Value::new()
                .with("nom", AttrValue::Scalar(Scalar::Str("a".into())))
                .with("poids", AttrValue::Scalar(Scalar::Int(1))),
            dom(&[(7, 7)]),
        );
        let s2 = AState::detached(
            Value::new()
                .with("nom", AttrValue::Scalar(Scalar::Str("a".into())))
                .with("poids", AttrValue::Scalar(Scalar::Int(2))),
            dom(&[(7, 7)]),
        );
        let c = Collection::States(vec![s1, s2]);
        let nested = nest(&c, "poids").unwrap();
        assert_eq!(nested.expect_states().unwrap().len(), 1);
        let back = unnest(&nested, "poids").unwrap();
        assert_eq!(back.expect_states().unwrap().len(), 2);
    }

    #[test]
    fn join_emits_pair_tuples_with_domains() {
        let store = dupond_store();
        let a = flatten(&past(&store, &objects(&["PATIENT:p1"])).unwrap()).unwrap();
        let b = flatten(&past(&store, &objects(&["PATIENT:p2"])).unwrap()).unwrap();
        let pred = Pred::Cmp {
            left: Operand::Attr(AttrRef::qualified("x", "poids")),
            op: CmpOp::Gt,
            right: Operand::Attr(AttrRef::qualified("y", "poids")),
        };
        let got = join(&store, &a, Some("x"), &b, Some("y"), &pred).unwrap();
        match got {
            Collection::Tuples(tuples) => {
                assert_eq!(tuples.len(), 3);
                match &tuples[0] {
                    Tuple::Pair {
                        left_domain,
                        right_domain,
                        ..
                    } => {
                        assert!(left_domain.is_some() && right_domain.is_some());
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
