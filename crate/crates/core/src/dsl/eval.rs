//! Evaluates a checked operator tree bottom-up against a store snapshot,
//! delegating one-to-one to the algebra.

use crate::algebra::{self, AggSpec, Collection};
use crate::model::{AggregationFn, WarehouseStore};

use super::ast::{AggEntry, BoundQuery, QueryExpr, SetOpName};
use super::DslError;

pub fn evaluate(q: &QueryExpr, store: &WarehouseStore) -> Result<Collection, DslError> {
    eval(q, store)
}

fn wrap<T>(op: &str, r: Result<T, algebra::AlgebraError>) -> Result<T, DslError> {
    r.map_err(|source| DslError::Eval {
        op: op.to_string(),
        source,
    })
}

fn agg_specs(entries: &[AggEntry]) -> Result<Vec<AggSpec>, DslError> {
    entries
        .iter()
        .map(|e| {
            let func = AggregationFn::parse(&e.func).ok_or_else(|| DslError::Eval {
                op: "aggregation".into(),
                source: algebra::AlgebraError::Model(crate::model::ModelError::PredicateType(
                    format!("unknown aggregation function {:?}", e.func),
                )),
            })?;
            Ok(AggSpec {
                target: e.target.clone(),
                kind: func.kind,
                arg: e.arg.clone(),
            })
        })
        .collect()
}

fn eval_bound<'a>(
    b: &'a BoundQuery,
    store: &WarehouseStore,
) -> Result<(Option<&'a str>, Collection), DslError> {
    Ok((b.var.as_deref(), eval(&b.expr, store)?))
}

fn eval(q: &QueryExpr, store: &WarehouseStore) -> Result<Collection, DslError> {
    match q {
        QueryExpr::ClassRef(name) => {
            if store.schema.class(name).is_none() {
                return Err(DslError::UnknownClass(name.clone()));
            }
            let oids = store
                .extension(name)
                .into_iter()
                .map(|o| o.oid.clone())
                .collect();
            Ok(Collection::Objects(oids))
        }
        QueryExpr::Select { input, pred } => {
            let (var, c) = eval_bound(input, store)?;
            wrap("Select", algebra::select(store, &c, var, pred))
        }
        QueryExpr::Project { input, items } => {
            let (var, c) = eval_bound(input, store)?;
            let items: Vec<(Option<String>, crate::model::AttrRef)> = items
                .iter()
                .map(|i| (i.alias.clone(), i.path.clone()))
                .collect();
            wrap("Project", algebra::project(store, &c, var, &items))
        }
        QueryExpr::Join { left, right, pred } => {
            let (lv, lc) = eval_bound(left, store)?;
            let (rv, rc) = eval_bound(right, store)?;
            wrap("Join", algebra::join(store, &lc, lv, &rc, rv, pred))
        }
        QueryExpr::SetOp { op, left, right } => {
            let lc = eval(left, store)?;
            let rc = eval(right, store)?;
            let (kind, eq) = match op {
                SetOpName::VUnion => (algebra::SetOpKind::Union, algebra::SetOpEq::Value),
                SetOpName::VIntersect => (algebra::SetOpKind::Intersect, algebra::SetOpEq::Value),
                SetOpName::VDifference => {
                    (algebra::SetOpKind::Difference, algebra::SetOpEq::Value)
                }
                SetOpName::IUnion => (algebra::SetOpKind::Union, algebra::SetOpEq::Identity),
                SetOpName::IIntersect => {
                    (algebra::SetOpKind::Intersect, algebra::SetOpEq::Identity)
                }
                SetOpName::IDifference => {
                    (algebra::SetOpKind::Difference, algebra::SetOpEq::Identity)
                }
            };
            wrap(op.name(), algebra::set_combine(store, kind, eq, &lc, &rc))
        }
        QueryExpr::Flatten(e) => wrap("Flatten", algebra::flatten(&eval(e, store)?)),
        QueryExpr::DupElim(e) => wrap("DupElim", algebra::dup_elim(store, &eval(e, store)?)),
        QueryExpr::EmptyElim(e) => wrap("EmptyElim", algebra::empty_elim(&eval(e, store)?)),
        QueryExpr::Current(e) => wrap("Current", algebra::current(store, &eval(e, store)?)),
        QueryExpr::Past(e) => wrap("Past", algebra::past(store, &eval(e, store)?)),
        QueryExpr::Archive(e) => wrap("Archive", algebra::archive(store, &eval(e, store)?)),
        QueryExpr::State { input, window, rel } => {
            let c = eval(input, store)?;
            wrap(
                "State",
                algebra::state_restrict(store, &c, &window.domain, *rel),
            )
        }
        QueryExpr::IJoin { left, right, pred } => {
            let (lv, lc) = eval_bound(left, store)?;
            let (rv, rc) = eval_bound(right, store)?;
            let ls = wrap("IJoin", lc.expect_states().map(|s| s.to_vec()))?;
            let rs = wrap("IJoin", rc.expect_states().map(|s| s.to_vec()))?;
            wrap("IJoin", algebra::ijoin(&ls, lv, &rs, rv, pred)).map(Collection::States)
        }
        QueryExpr::UJoin { left, right, pred } => {
            let (lv, lc) = eval_bound(left, store)?;
            let (rv, rc) = eval_bound(right, store)?;
            let ls = wrap("UJoin", lc.expect_states().map(|s| s.to_vec()))?;
            let rs = wrap("UJoin", rc.expect_states().map(|s| s.to_vec()))?;
            wrap("UJoin", algebra::ujoin(&ls, lv, &rs, rv, pred)).map(Collection::States)
        }
        QueryExpr::UGroup { input, unit, .. } => {
            let c = eval(input, store)?;
            let states = wrap("UGroup", c.expect_states().map(|s| s.to_vec()))?;
            wrap("UGroup", algebra::ugroup(&states, *unit))
        }
        QueryExpr::DGroup { input, duration } => {
            let c = eval(input, store)?;
            let states = wrap("DGroup", c.expect_states().map(|s| s.to_vec()))?;
            wrap("DGroup", algebra::dgroup(&states, *duration))
        }
        QueryExpr::MakeSerie(e) => {
            let c = eval(e, store)?;
            let states = wrap("MakeSerie", c.expect_states().map(|s| s.to_vec()))?;
            wrap("MakeSerie", algebra::make_serie(&states)).map(Collection::Series)
        }
        QueryExpr::Agreg { input, entries } => {
            let c = eval(input, store)?;
            let sr = wrap("Agreg", c.expect_series().cloned())?;
            let specs = agg_specs(entries)?;
            wrap("Agreg", algebra::agreg(&sr, &specs)).map(Collection::Value)
        }
        QueryExpr::ACum { input, entries } => {
            let c = eval(input, store)?;
            let sr = wrap("ACum", c.expect_series().cloned())?;
            let specs = agg_specs(entries)?;
            wrap("ACum", algebra::acum(&sr, &specs)).map(Collection::Series)
        }
        QueryExpr::AMove {
            input,
            entries,
            duration,
        } => {
            let c = eval(input, store)?;
            let sr = wrap("AMove", c.expect_series().cloned())?;
            let specs = agg_specs(entries)?;
            wrap("AMove", algebra::amove(&sr, &specs, *duration)).map(Collection::Series)
        }
        QueryExpr::ScaleUp {
            input,
            unit,
            entries,
            ..
        } => {
            let c = eval(input, store)?;
            let sr = wrap("ScaleUp", c.expect_series().cloned())?;
            let specs = agg_specs(entries)?;
            wrap("ScaleUp", algebra::scale_up(&sr, *unit, &specs)).map(Collection::Series)
        }
        QueryExpr::ScaleDown {
            input,
            unit,
            entries,
            ..
        } => {
            let c = eval(input, store)?;
            let sr = wrap("ScaleDown", c.expect_series().cloned())?;
            let specs = agg_specs(entries)?;
            wrap("ScaleDown", algebra::scale_down(&sr, *unit, &specs)).map(Collection::Series)
        }
        QueryExpr::Nest { input, attr } => {
            let c = eval(input, store)?;
            wrap("Nest", algebra::nest(&c, attr))
        }
        QueryExpr::UnNest { input, attr } => {
            let c = eval(input, store)?;
            wrap("UnNest", algebra::unnest(&c, attr))
        }
    }
}
