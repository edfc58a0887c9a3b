//! Rule evaluation: on refresh, each rule's condition selects past
//! states and the archive action summarises them. An empty selection
//! fires nothing; a failing rule is reported and skipped, the refresh
//! still commits.

use crate::model::{
    AttrRef, AttrValue, FiringRecord, HistState, ModelError, PredContext, RuleCondition,
    WarehouseObject, WarehouseStore,
};
use crate::temporal::{Instant, TemporalDomain};

use super::{archive_states, LifecycleError, RefreshReport};

/// Closed boolean conditions evaluate with no bindings at all.
struct ClosedCtx;

impl PredContext for ClosedCtx {
    fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError> {
        Err(ModelError::UnknownAttribute(format!(
            "{r} is not available in a boolean rule condition"
        )))
    }

    fn domain(&self, _q: Option<&str>) -> Result<TemporalDomain, ModelError> {
        Err(ModelError::PredicateType(
            "no temporal domain in a boolean rule condition".into(),
        ))
    }
}

/// One past state of one object, with the rule's two range variables in
/// scope.
struct RuleCtx<'a> {
    state: &'a HistState,
    state_var: &'a str,
    object: &'a WarehouseObject,
    object_var: &'a str,
}

impl PredContext for RuleCtx<'_> {
    fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError> {
        match r.qualifier.as_deref() {
            Some(q) if q == self.object_var => r.resolve_in(&self.object.current.value),
            Some(q) if q != self.state_var => Err(ModelError::UnknownAttribute(format!(
                "unbound variable {q}"
            ))),
            _ => r.resolve_in(&self.state.value),
        }
    }

    fn domain(&self, qualifier: Option<&str>) -> Result<TemporalDomain, ModelError> {
        match qualifier {
            Some(q) if q == self.object_var => Ok(TemporalDomain::singleton(
                self.object.current.since,
            )),
            Some(q) if q != self.state_var => Err(ModelError::UnknownAttribute(format!(
                "unbound variable {q}"
            ))),
            _ => Ok(self.state.domain.clone()),
        }
    }
}

/// Fires every refresh rule of one environment. Selections are grouped
/// per owning object and archived through its class's archive filter.
pub fn apply_rules(
    store: &mut WarehouseStore,
    env_name: &str,
    t: Instant,
    report: &mut RefreshReport,
) -> Result<(), LifecycleError> {
    let env = store
        .schema
        .environment(env_name)
        .ok_or_else(|| LifecycleError::UnknownEnvironment(env_name.to_string()))?
        .clone();

    for rule in &env.rules {
        let outcome = fire_rule(store, &env.class_names, rule, t);
        match outcome {
            Ok(firings) => {
                report.archived_states += firings.iter().map(|f| f.states).sum::<usize>();
                report.firings.extend(firings.iter().cloned());
                store.journal.extend(firings);
            }
            Err(e) => report.rule_errors.push(
                LifecycleError::RuleEvaluation {
                    rule: rule.name.clone(),
                    message: e.to_string(),
                }
                .to_string(),
            ),
        }
    }
    Ok(())
}

fn fire_rule(
    store: &mut WarehouseStore,
    env_classes: &[String],
    rule: &crate::model::ConfigRule,
    t: Instant,
) -> Result<Vec<FiringRecord>, LifecycleError> {
    // (oid, selected past states) per object, in stable oid order
    let mut selections: Vec<(String, Vec<HistState>)> = Vec::new();

    match &rule.condition {
        RuleCondition::Bool(pred) => {
            if pred.eval(&ClosedCtx)? {
                for class_name in env_classes {
                    for obj in store.extension(class_name) {
                        if !obj.past.is_empty() {
                            selections.push((obj.oid.clone(), obj.past.clone()));
                        }
                    }
                }
            }
        }
        RuleCondition::Selection {
            state_var,
            object_var,
            class_name,
            predicate,
        } => {
            for obj in store.extension(class_name) {
                let mut picked = Vec::new();
                for state in &obj.past {
                    let ctx = RuleCtx {
                        state,
                        state_var,
                        object: obj,
                        object_var,
                    };
                    if predicate.eval(&ctx)? {
                        picked.push(state.clone());
                    }
                }
                if !picked.is_empty() {
                    selections.push((obj.oid.clone(), picked));
                }
            }
        }
    }

    let mut firings = Vec::new();
    for (oid, selected) in selections {
        let class = {
            let obj = store.objects.get(&oid).expect("selection from extension");
            store
                .schema
                .class(&obj.class)
                .ok_or_else(|| ModelError::UnknownClass(obj.class.clone()))?
                .clone()
        };
        let obj = store.objects.get_mut(&oid).expect("selection from extension");
        let archived = archive_states(&class, obj, &selected)?;
        firings.push(FiringRecord {
            at: t,
            rule: rule.name.clone(),
            oid,
            states: archived,
        });
    }
    Ok(firings)
}
