//! Kind discipline over the operator tree: every node is assigned a
//! collection kind per the operator signatures, range variables must be
//! bound, and attribute references are checked where the element shape
//! is statically known.

use std::collections::BTreeSet;

use crate::algebra::Kind;
use crate::model::{
    fold_ident, AttrRef, Diagnostic, DomRef, Operand, Pred, WarehouseSchema,
};

use super::ast::{BoundQuery, ProjItem, QueryExpr, SetOpName};

/// Statically-known attribute set of the elements flowing out of a node.
#[derive(Debug, Clone)]
enum Shape {
    Known(BTreeSet<String>),
    Unknown,
}

impl Shape {
    fn known<I: IntoIterator<Item = String>>(names: I) -> Shape {
        Shape::Known(names.into_iter().map(|n| fold_ident(&n)).collect())
    }

    fn has(&self, attr: &str) -> Option<bool> {
        match self {
            Shape::Unknown => None,
            Shape::Known(names) => Some(names.contains(&fold_ident(attr))),
        }
    }
}

#[derive(Debug)]
pub struct TypedQuery {
    pub kind: Kind,
}

/// Checks the tree against the schema; returns the root kind or the
/// full list of diagnostics.
pub fn typecheck(q: &QueryExpr, schema: &WarehouseSchema) -> Result<TypedQuery, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let (kind, _) = check(q, schema, &mut diags);
    if diags.is_empty() {
        Ok(TypedQuery { kind })
    } else {
        Err(diags)
    }
}

fn expect_kind(got: Kind, want: &[Kind], op: &str, diags: &mut Vec<Diagnostic>) {
    if !want.contains(&got) {
        let wanted: Vec<&str> = want.iter().map(|k| k.name()).collect();
        diags.push(Diagnostic::error(
            format!("operator {op}"),
            format!("expects a {}, found a {}", wanted.join(" or "), got.name()),
        ));
    }
}

fn check(q: &QueryExpr, schema: &WarehouseSchema, diags: &mut Vec<Diagnostic>) -> (Kind, Shape) {
    match q {
        QueryExpr::ClassRef(name) => match schema.class(name) {
            Some(class) => (
                Kind::ObjectSet,
                Shape::known(class.attributes.iter().map(|a| a.name.clone())),
            ),
            None => {
                diags.push(Diagnostic::error(
                    format!("class {name}"),
                    "unknown warehouse class",
                ));
                (Kind::ObjectSet, Shape::Unknown)
            }
        },
        QueryExpr::Select { input, pred } => {
            let (kind, shape) = check_bound(input, schema, diags);
            expect_kind(kind, &[Kind::ObjectSet, Kind::StateSet], "Select", diags);
            check_pred(pred, &[(input.var.as_deref(), &shape)], diags);
            (kind, shape)
        }
        QueryExpr::Project { input, items } => {
            let (kind, shape) = check_bound(input, schema, diags);
            expect_kind(kind, &[Kind::ObjectSet, Kind::StateSet], "Project", diags);
            let mut names = Vec::new();
            for ProjItem { alias, path } in items {
                check_path(path, &[(input.var.as_deref(), &shape)], diags);
                let name = alias.clone().unwrap_or_else(|| path.attr.clone());
                if fold_ident(&name).to_lowercase() != "domt" {
                    names.push(name);
                }
            }
            // projecting objects narrows to their current states
            (Kind::StateSet, Shape::known(names))
        }
        QueryExpr::Join { left, right, pred } => {
            let (lk, ls) = check_bound(left, schema, diags);
            let (rk, rs) = check_bound(right, schema, diags);
            expect_kind(lk, &[Kind::ObjectSet, Kind::StateSet], "Join", diags);
            if rk != lk {
                diags.push(Diagnostic::error(
                    "operator Join",
                    format!("operands mix {} and {}", lk.name(), rk.name()),
                ));
            }
            check_pred(
                pred,
                &[(left.var.as_deref(), &ls), (right.var.as_deref(), &rs)],
                diags,
            );
            (Kind::TupleSet, Shape::Unknown)
        }
        QueryExpr::SetOp { op, left, right } => {
            let (lk, ls) = check(left, schema, diags);
            let (rk, _) = check(right, schema, diags);
            let identity = matches!(
                op,
                SetOpName::IUnion | SetOpName::IIntersect | SetOpName::IDifference
            );
            if identity {
                expect_kind(lk, &[Kind::ObjectSet], op.name(), diags);
                expect_kind(rk, &[Kind::ObjectSet], op.name(), diags);
            } else {
                expect_kind(lk, &[Kind::ObjectSet, Kind::StateSet], op.name(), diags);
                if rk != lk {
                    diags.push(Diagnostic::error(
                        format!("operator {}", op.name()),
                        format!("operands mix {} and {}", lk.name(), rk.name()),
                    ));
                }
            }
            (lk, ls)
        }
        QueryExpr::Flatten(e) => {
            let (k, s) = check(e, schema, diags);
            expect_kind(k, &[Kind::StateSetSet], "Flatten", diags);
            (Kind::StateSet, s)
        }
        QueryExpr::DupElim(e) => {
            let (k, s) = check(e, schema, diags);
            expect_kind(
                k,
                &[Kind::ObjectSet, Kind::StateSet, Kind::TupleSet],
                "DupElim",
                diags,
            );
            (k, s)
        }
        QueryExpr::EmptyElim(e) => {
            let (k, s) = check(e, schema, diags);
            expect_kind(k, &[Kind::StateSetSet], "EmptyElim", diags);
            (k, s)
        }
        QueryExpr::Current(e) => {
            let (k, s) = check(e, schema, diags);
            expect_kind(k, &[Kind::ObjectSet], "Current", diags);
            (Kind::StateSet, s)
        }
        QueryExpr::Past(e) => {
            let (k, s) = check(e, schema, diags);
            expect_kind(k, &[Kind::ObjectSet], "Past", diags);
            (Kind::StateSetSet, past_shape(e, schema, s))
        }
        QueryExpr::Archive(e) => {
            let (k, s) = check(e, schema, diags);
            expect_kind(k, &[Kind::ObjectSet], "Archive", diags);
            (Kind::StateSetSet, archive_shape(e, schema, s))
        }
        QueryExpr::State { input, .. } => {
            let (k, _) = check(input, schema, diags);
            expect_kind(k, &[Kind::ObjectSet, Kind::StateSet], "State", diags);
            (Kind::StateSet, Shape::Unknown)
        }
        QueryExpr::IJoin { left, right, pred } | QueryExpr::UJoin { left, right, pred } => {
            let name = if matches!(q, QueryExpr::IJoin { .. }) {
                "IJoin"
            } else {
                "UJoin"
            };
            let (lk, ls) = check_bound(left, schema, diags);
            let (rk, rs) = check_bound(right, schema, diags);
            expect_kind(lk, &[Kind::StateSet], name, diags);
            expect_kind(rk, &[Kind::StateSet], name, diags);
            check_pred(
                pred,
                &[(left.var.as_deref(), &ls), (right.var.as_deref(), &rs)],
                diags,
            );
            (Kind::StateSet, Shape::Unknown)
        }
        QueryExpr::UGroup { input, .. } => {
            let (k, _) = check(input, schema, diags);
            expect_kind(k, &[Kind::StateSet], "UGroup", diags);
            (Kind::TupleSet, Shape::Unknown)
        }
        QueryExpr::DGroup { input, .. } => {
            let (k, _) = check(input, schema, diags);
            expect_kind(k, &[Kind::StateSet], "DGroup", diags);
            (Kind::TupleSet, Shape::Unknown)
        }
        QueryExpr::MakeSerie(e) => {
            let (k, s) = check(e, schema, diags);
            expect_kind(k, &[Kind::StateSet], "MakeSerie", diags);
            (Kind::Series, s)
        }
        QueryExpr::Agreg { input, entries } => {
            let (k, s) = check(input, schema, diags);
            expect_kind(k, &[Kind::Series], "Agreg", diags);
            check_entries(entries, &s, diags);
            (Kind::Value, Shape::known(entries.iter().map(|e| e.target.clone())))
        }
        QueryExpr::ACum { input, entries } => {
            let (k, s) = check(input, schema, diags);
            expect_kind(k, &[Kind::Series], "ACum", diags);
            check_entries(entries, &s, diags);
            (
                Kind::Series,
                Shape::known(entries.iter().map(|e| e.target.clone())),
            )
        }
        QueryExpr::AMove { input, entries, .. } => {
            let (k, s) = check(input, schema, diags);
            expect_kind(k, &[Kind::Series], "AMove", diags);
            check_entries(entries, &s, diags);
            (
                Kind::Series,
                Shape::known(entries.iter().map(|e| e.target.clone())),
            )
        }
        QueryExpr::ScaleUp { input, entries, .. } => {
            let (k, s) = check(input, schema, diags);
            expect_kind(k, &[Kind::Series], "ScaleUp", diags);
            check_entries(entries, &s, diags);
            (
                Kind::Series,
                Shape::known(entries.iter().map(|e| e.target.clone())),
            )
        }
        QueryExpr::ScaleDown { input, entries, .. } => {
            let (k, s) = check(input, schema, diags);
            expect_kind(k, &[Kind::Series], "ScaleDown", diags);
            check_entries(entries, &s, diags);
            (Kind::Series, s)
        }
        QueryExpr::Nest { input, attr } | QueryExpr::UnNest { input, attr } => {
            let name = if matches!(q, QueryExpr::Nest { .. }) {
                "Nest"
            } else {
                "UnNest"
            };
            let (k, s) = check(input, schema, diags);
            expect_kind(k, &[Kind::StateSet], name, diags);
            if let Some(false) = s.has(attr) {
                diags.push(Diagnostic::error(
                    format!("operator {name}"),
                    format!("unknown attribute {attr:?}"),
                ));
            }
            (Kind::StateSet, s)
        }
    }
}

fn check_bound(
    b: &BoundQuery,
    schema: &WarehouseSchema,
    diags: &mut Vec<Diagnostic>,
) -> (Kind, Shape) {
    check(&b.expr, schema, diags)
}

/// The statically-known class feeding an object-set expression.
fn class_of<'a>(input: &'a QueryExpr) -> Option<&'a str> {
    match input {
        QueryExpr::ClassRef(n) => Some(n),
        QueryExpr::Select { input, .. } => class_of(&input.expr),
        QueryExpr::DupElim(e) => class_of(e),
        QueryExpr::SetOp { left, .. } => class_of(left),
        _ => None,
    }
}

/// Past states carry the temporal-filter properties of the class when it
/// is statically known.
fn past_shape(input: &QueryExpr, schema: &WarehouseSchema, _fallback: Shape) -> Shape {
    if let Some(class) = class_of(input).and_then(|n| schema.class(n)) {
        return Shape::known(class.temporal_filter.property_names().map(str::to_string));
    }
    Shape::Unknown
}

fn archive_shape(input: &QueryExpr, schema: &WarehouseSchema, _fallback: Shape) -> Shape {
    if let Some(class) = class_of(input).and_then(|n| schema.class(n)) {
        return Shape::known(
            class
                .archive_filter
                .entries
                .iter()
                .map(|e| e.attribute.clone()),
        );
    }
    Shape::Unknown
}

type VarShapes<'a> = [(Option<&'a str>, &'a Shape)];

fn check_pred(pred: &Pred, vars: &VarShapes, diags: &mut Vec<Diagnostic>) {
    match pred {
        Pred::Bool(_) => {}
        Pred::And(a, b) | Pred::Or(a, b) => {
            check_pred(a, vars, diags);
            check_pred(b, vars, diags);
        }
        Pred::Not(p) => check_pred(p, vars, diags),
        Pred::Cmp { left, right, .. } => {
            for side in [left, right] {
                if let Operand::Attr(path) = side {
                    check_path(path, vars, diags);
                }
                if let Operand::Var(v) = side {
                    diags.push(Diagnostic::error(
                        format!("variable {v}"),
                        "bare variables are only valid in mapping predicates",
                    ));
                }
            }
        }
        Pred::Allen { left, right, .. } => {
            for side in [left, right] {
                if let DomRef::Attr(Some(var)) = side {
                    if !vars.iter().any(|(v, _)| *v == Some(var.as_str())) {
                        diags.push(Diagnostic::error(
                            format!("variable {var}"),
                            "unbound range variable",
                        ));
                    }
                }
            }
        }
    }
}

fn check_path(path: &AttrRef, vars: &VarShapes, diags: &mut Vec<Diagnostic>) {
    let shape = match &path.qualifier {
        None => vars.first().map(|(_, s)| *s),
        Some(q) => {
            match vars.iter().find(|(v, _)| *v == Some(q.as_str())) {
                Some((_, s)) => Some(*s),
                None => {
                    diags.push(Diagnostic::error(
                        format!("variable {q}"),
                        "unbound range variable",
                    ));
                    return;
                }
            }
        }
    };
    if fold_ident(&path.attr).to_lowercase() == "domt" {
        return;
    }
    if let Some(shape) = shape {
        if let Some(false) = shape.has(&path.attr) {
            diags.push(Diagnostic::error(
                format!("attribute {}", path.attr),
                "unknown attribute for this element shape",
            ));
        }
    }
}

fn check_entries(
    entries: &[super::ast::AggEntry],
    shape: &Shape,
    diags: &mut Vec<Diagnostic>,
) {
    for e in entries {
        let attr = e.arg.as_deref().unwrap_or(&e.target);
        if let Some(false) = shape.has(attr) {
            diags.push(Diagnostic::error(
                format!("aggregation of {attr}"),
                "unknown attribute for this element shape",
            ));
        }
    }
}
