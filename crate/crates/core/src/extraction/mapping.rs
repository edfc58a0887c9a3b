//! Mapping expressions: the structuring (PROJECT), population
//! (SELECT/JOIN) and set (UNION/INTERSECT/DIFFERENCE) functions that turn
//! a source snapshot into class extension rows.

use std::collections::BTreeMap;

use crate::model::{
    AttrRef, AttrValue, Diagnostic, ModelError, Pred, PredContext, Value,
};

use super::{ExtractionError, SourceCatalog, SourceObject, SourceSnapshot};

/// Operand of a mapping operator with its optional range variable
/// (`p Personnes`, `pp JOIN(...)`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundExpr {
    pub var: Option<String>,
    pub expr: Box<MappingExpr>,
}

impl BoundExpr {
    pub fn new(var: Option<String>, expr: MappingExpr) -> BoundExpr {
        BoundExpr {
            var,
            expr: Box::new(expr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetCombine {
    Union,
    Intersect,
    Difference,
}

impl SetCombine {
    pub fn name(self) -> &'static str {
        match self {
            SetCombine::Union => "UNION",
            SetCombine::Intersect => "INTERSECT",
            SetCombine::Difference => "DIFFERENCE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MappingExpr {
    /// Leaf: all objects of one source class.
    Source(String),
    Select {
        input: BoundExpr,
        predicate: Pred,
    },
    Join {
        left: BoundExpr,
        right: BoundExpr,
        predicate: Pred,
    },
    Project {
        input: BoundExpr,
        /// `target : path` pairs; targets are the warehouse attributes.
        targets: Vec<(String, AttrRef)>,
    },
    Combine {
        op: SetCombine,
        left: BoundExpr,
        right: BoundExpr,
    },
}

impl MappingExpr {
    /// Target names of a top-level projection, for schema-side checks.
    pub fn projection_targets(&self) -> Vec<String> {
        match self {
            MappingExpr::Project { targets, .. } => {
                targets.iter().map(|(t, _)| t.clone()).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// One extension row: the source-key tuple that gives the warehouse
/// object its identity across refreshes, and the structural value.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingRow {
    pub keys: Vec<String>,
    pub value: Value,
    scopes: Vec<(String, Scope)>,
}

#[derive(Debug, Clone, PartialEq)]
struct Scope {
    value: Value,
    /// Index into the snapshot when the scope binds a source object
    /// directly (relationships and key identity are then available).
    object: Option<usize>,
}

struct RowCtx<'a> {
    row: &'a MappingRow,
    snapshot: &'a SourceSnapshot,
}

impl RowCtx<'_> {
    fn scope(&self, var: &str) -> Option<&Scope> {
        self.row
            .scopes
            .iter()
            .rev()
            .find(|(name, _)| name == var)
            .map(|(_, s)| s)
    }

    fn source_object(&self, var: &str) -> Option<&SourceObject> {
        self.scope(var)
            .and_then(|s| s.object)
            .map(|i| &self.snapshot.objects[i])
    }
}

impl PredContext for RowCtx<'_> {
    fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError> {
        let value = match &r.qualifier {
            Some(var) => {
                &self
                    .scope(var)
                    .ok_or_else(|| ModelError::UnknownAttribute(format!("unbound variable {var}")))?
                    .value
            }
            None => {
                return Err(ModelError::UnknownAttribute(format!(
                    "unqualified reference {r} in mapping predicate"
                )))
            }
        };
        r.resolve_in(value)
    }

    fn domain(&self, _q: Option<&str>) -> Result<crate::temporal::TemporalDomain, ModelError> {
        Err(ModelError::PredicateType(
            "mapping predicates have no temporal domain".into(),
        ))
    }

    fn var_key(&self, var: &str) -> Result<String, ModelError> {
        self.source_object(var)
            .map(|o| o.key.clone())
            .ok_or_else(|| {
                ModelError::PredicateType(format!("{var} is not bound to a source object"))
            })
    }

    fn relationship(&self, r: &AttrRef) -> Option<Vec<String>> {
        let var = r.qualifier.as_deref()?;
        if r.sub.is_some() {
            return None;
        }
        self.source_object(var)
            .and_then(|o| o.relationship(&r.attr))
            .cloned()
    }
}

/// Evaluates a mapping over a snapshot: one output row per qualifying
/// source tuple, sorted by key tuple. When a catalog is supplied, class
/// references are checked against it.
pub fn evaluate_mapping(
    mapping: &MappingExpr,
    snapshot: &SourceSnapshot,
    catalog: Option<&SourceCatalog>,
) -> Result<Vec<MappingRow>, ExtractionError> {
    let mut rows = eval(mapping, snapshot, catalog)?;
    rows.sort_by(|a, b| a.keys.cmp(&b.keys));
    Ok(rows)
}

fn eval(
    expr: &MappingExpr,
    snapshot: &SourceSnapshot,
    catalog: Option<&SourceCatalog>,
) -> Result<Vec<MappingRow>, ExtractionError> {
    match expr {
        MappingExpr::Source(class) => {
            if let Some(cat) = catalog {
                if cat.class(class).is_none() {
                    return Err(ExtractionError::UnknownSourceClass(class.clone()));
                }
            }
            Ok(snapshot
                .of_class(class)
                .map(|(idx, obj)| MappingRow {
                    keys: vec![obj.key.clone()],
                    value: obj.attributes.clone(),
                    scopes: vec![(
                        String::new(),
                        Scope {
                            value: obj.attributes.clone(),
                            object: Some(idx),
                        },
                    )],
                })
                .collect())
        }
        MappingExpr::Select { input, predicate } => {
            let rows = eval_bound(input, snapshot, catalog)?;
            let mut out = Vec::new();
            for row in rows {
                let ctx = RowCtx {
                    row: &row,
                    snapshot,
                };
                if predicate.eval(&ctx)? {
                    out.push(row);
                }
            }
            Ok(out)
        }
        MappingExpr::Join {
            left,
            right,
            predicate,
        } => {
            let lrows = eval_bound(left, snapshot, catalog)?;
            let rrows = eval_bound(right, snapshot, catalog)?;
            let mut out = Vec::new();
            for l in &lrows {
                for r in &rrows {
                    let mut merged_value = l.value.clone();
                    for (k, v) in &r.value.0 {
                        merged_value.0.entry(k.clone()).or_insert_with(|| v.clone());
                    }
                    let mut keys = l.keys.clone();
                    keys.extend(r.keys.iter().cloned());
                    let mut scopes = l.scopes.clone();
                    scopes.extend(r.scopes.iter().cloned());
                    let candidate = MappingRow {
                        keys,
                        value: merged_value,
                        scopes,
                    };
                    let ctx = RowCtx {
                        row: &candidate,
                        snapshot,
                    };
                    if predicate.eval(&ctx)? {
                        out.push(candidate);
                    }
                }
            }
            Ok(out)
        }
        MappingExpr::Project { input, targets } => {
            let rows = eval_bound(input, snapshot, catalog)?;
            let mut out = Vec::new();
            for row in rows {
                let ctx = RowCtx {
                    row: &row,
                    snapshot,
                };
                let mut value = Value::new();
                for (target, path) in targets {
                    value.set(target.clone(), ctx.attr(path)?);
                }
                out.push(MappingRow {
                    keys: row.keys.clone(),
                    value,
                    scopes: row.scopes,
                });
            }
            Ok(out)
        }
        MappingExpr::Combine { op, left, right } => {
            let lrows = eval_bound(left, snapshot, catalog)?;
            let rrows = eval_bound(right, snapshot, catalog)?;
            let lkeys: BTreeMap<Vec<String>, ()> =
                lrows.iter().map(|r| (r.keys.clone(), ())).collect();
            let rkeys: BTreeMap<Vec<String>, ()> =
                rrows.iter().map(|r| (r.keys.clone(), ())).collect();
            Ok(match op {
                SetCombine::Union => {
                    let mut out = lrows;
                    out.extend(
                        rrows
                            .into_iter()
                            .filter(|r| !lkeys.contains_key(&r.keys)),
                    );
                    out
                }
                SetCombine::Intersect => lrows
                    .into_iter()
                    .filter(|r| rkeys.contains_key(&r.keys))
                    .collect(),
                SetCombine::Difference => lrows
                    .into_iter()
                    .filter(|r| !rkeys.contains_key(&r.keys))
                    .collect(),
            })
        }
    }
}

fn eval_bound(
    bound: &BoundExpr,
    snapshot: &SourceSnapshot,
    catalog: Option<&SourceCatalog>,
) -> Result<Vec<MappingRow>, ExtractionError> {
    let mut rows = eval(&bound.expr, snapshot, catalog)?;
    if let Some(var) = &bound.var {
        for row in &mut rows {
            // a variable over a source leaf keeps object identity; over
            // composite expressions it binds the row value
            let object = match bound.expr.as_ref() {
                MappingExpr::Source(_) => row.scopes.first().and_then(|(_, s)| s.object),
                _ => None,
            };
            row.scopes.push((
                var.clone(),
                Scope {
                    value: row.value.clone(),
                    object,
                },
            ));
        }
    }
    Ok(rows)
}

/// Shape of rows flowing out of a mapping node, for validation.
#[derive(Debug, Clone)]
enum Shape {
    /// Attributes and relationships of one source class.
    Class(String),
    /// Projected targets.
    Record(Vec<String>),
    /// Merged join sides.
    Pair(Box<Shape>, Box<Shape>),
    Unknown,
}

/// Checks a mapping against the source catalog; returns one diagnostic
/// per defect.
pub fn validate_mapping(mapping: &MappingExpr, catalog: &SourceCatalog) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check(mapping, catalog, &mut Vec::new(), &mut out);
    out
}

type ScopeShapes = Vec<(String, Shape)>;

fn check(
    expr: &MappingExpr,
    catalog: &SourceCatalog,
    scope: &mut ScopeShapes,
    out: &mut Vec<Diagnostic>,
) -> Shape {
    match expr {
        MappingExpr::Source(class) => {
            if catalog.class(class).is_none() {
                out.push(Diagnostic::error(
                    format!("mapping SOURCE({class})"),
                    format!("unknown source class {class:?}"),
                ));
                Shape::Unknown
            } else {
                Shape::Class(class.clone())
            }
        }
        MappingExpr::Select { input, predicate } => {
            let shape = check_bound(input, catalog, scope, out);
            check_pred(predicate, catalog, scope, out);
            if input.var.is_some() {
                scope.pop();
            }
            shape
        }
        MappingExpr::Join {
            left,
            right,
            predicate,
        } => {
            let ls = check_bound(left, catalog, scope, out);
            let rs = check_bound(right, catalog, scope, out);
            check_pred(predicate, catalog, scope, out);
            if right.var.is_some() {
                scope.pop();
            }
            if left.var.is_some() {
                scope.pop();
            }
            Shape::Pair(Box::new(ls), Box::new(rs))
        }
        MappingExpr::Project { input, targets } => {
            check_bound(input, catalog, scope, out);
            let mut names = Vec::new();
            for (target, path) in targets {
                names.push(target.clone());
                check_path(path, catalog, scope, out);
            }
            if input.var.is_some() {
                scope.pop();
            }
            Shape::Record(names)
        }
        MappingExpr::Combine { op, left, right } => {
            let ls = check_bound(left, catalog, scope, out);
            check_bound(right, catalog, scope, out);
            if right.var.is_some() {
                scope.pop();
            }
            if left.var.is_some() {
                scope.pop();
            }
            let _ = op;
            ls
        }
    }
}

fn check_bound(
    bound: &BoundExpr,
    catalog: &SourceCatalog,
    scope: &mut ScopeShapes,
    out: &mut Vec<Diagnostic>,
) -> Shape {
    let shape = check(&bound.expr, catalog, scope, out);
    if let Some(var) = &bound.var {
        scope.push((var.clone(), shape.clone()));
    }
    shape
}

fn shape_has_attr(shape: &Shape, catalog: &SourceCatalog, attr: &str) -> Option<bool> {
    match shape {
        Shape::Unknown => None,
        Shape::Class(c) => catalog.class(c).map(|d| d.attribute(attr).is_some()),
        Shape::Record(names) => Some(names.iter().any(|n| crate::model::ident_eq(n, attr))),
        Shape::Pair(l, r) => {
            match (
                shape_has_attr(l, catalog, attr),
                shape_has_attr(r, catalog, attr),
            ) {
                (Some(a), Some(b)) => Some(a || b),
                _ => None,
            }
        }
    }
}

fn shape_has_rel(shape: &Shape, catalog: &SourceCatalog, rel: &str) -> bool {
    match shape {
        Shape::Class(c) => catalog
            .class(c)
            .map(|d| d.relationship(rel).is_some())
            .unwrap_or(false),
        Shape::Pair(l, r) => {
            shape_has_rel(l, catalog, rel) || shape_has_rel(r, catalog, rel)
        }
        _ => false,
    }
}

fn check_path(
    path: &AttrRef,
    catalog: &SourceCatalog,
    scope: &ScopeShapes,
    out: &mut Vec<Diagnostic>,
) {
    let loc = format!("mapping path {path}");
    let Some(var) = &path.qualifier else {
        out.push(Diagnostic::error(loc, "unqualified reference"));
        return;
    };
    let Some((_, shape)) = scope.iter().rev().find(|(name, _)| name == var) else {
        out.push(Diagnostic::error(loc, format!("unbound variable {var:?}")));
        return;
    };
    if let Some(false) = shape_has_attr(shape, catalog, &path.attr) {
        if !shape_has_rel(shape, catalog, &path.attr) {
            out.push(Diagnostic::error(
                loc,
                format!("unknown attribute {:?}", path.attr),
            ));
        }
    }
}

fn check_pred(
    pred: &Pred,
    catalog: &SourceCatalog,
    scope: &ScopeShapes,
    out: &mut Vec<Diagnostic>,
) {
    use crate::model::Operand;
    match pred {
        Pred::Bool(_) => {}
        Pred::And(a, b) | Pred::Or(a, b) => {
            check_pred(a, catalog, scope, out);
            check_pred(b, catalog, scope, out);
        }
        Pred::Not(p) => check_pred(p, catalog, scope, out),
        Pred::Allen { .. } => out.push(Diagnostic::error(
            "mapping predicate",
            "temporal tests are not valid in mapping predicates",
        )),
        Pred::Cmp { left, op: _, right } => {
            for side in [left, right] {
                if let Operand::Attr(path) = side {
                    check_path(path, catalog, scope, out);
                }
            }
            // reference equality must pair a relationship with a variable
            if let (Operand::Attr(path), Operand::Var(var)) = (left, right) {
                let rel_ok = path
                    .qualifier
                    .as_deref()
                    .and_then(|q| scope.iter().rev().find(|(name, _)| name == q))
                    .map(|(_, shape)| shape_has_rel(shape, catalog, &path.attr))
                    .unwrap_or(false);
                if !rel_ok {
                    out.push(Diagnostic::error(
                        format!("mapping predicate {path} = {var}"),
                        "attribute compared with an object variable (expected a relationship)",
                    ));
                }
            }
            if let (Operand::Var(v), _) = (left, right) {
                out.push(Diagnostic::error(
                    format!("mapping predicate {v}"),
                    "object variable must appear on the right of a reference equality",
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CmpOp, Operand, Scalar, SubRef};
    use crate::temporal::Instant;

    fn snapshot() -> SourceSnapshot {
        let text = r#"
{"class":"Personnes","key":"p1","attributes":{"nom":"Dupond","prenoms":["Michel"],"sexe":true},"relationships":{"parametres":"v1"}}
{"class":"Variables","key":"v1","attributes":{"poids":80,"tension":{"min":10,"max":16},"hematocrite":40,"plaquettes":250,"uree":5},"relationships":{"patient":"p1"}}
{"class":"Variables","key":"v9","attributes":{"poids":66,"tension":{"min":9,"max":14},"hematocrite":38,"plaquettes":240,"uree":4},"relationships":{}}
"#;
        SourceSnapshot::parse_jsonl(Instant::month(2000, 7).unwrap(), text).unwrap()
    }

    /// The PATIENT construction: project the join of persons with their
    /// variables through the person's `parametres` reference.
    pub(crate) fn patient_mapping() -> MappingExpr {
        let join = MappingExpr::Join {
            left: BoundExpr::new(Some("p".into()), MappingExpr::Source("Personnes".into())),
            right: BoundExpr::new(Some("v".into()), MappingExpr::Source("Variables".into())),
            predicate: Pred::Cmp {
                left: Operand::Attr(AttrRef::qualified("p", "parametres")),
                op: CmpOp::Eq,
                right: Operand::Var("v".into()),
            },
        };
        let path = |attr: &str| AttrRef::qualified("pp", attr);
        let mut prenom = AttrRef::qualified("pp", "prenoms");
        prenom.sub = Some(SubRef::Index(0));
        MappingExpr::Project {
            input: BoundExpr::new(Some("pp".into()), join),
            targets: vec![
                ("nom".into(), path("nom")),
                ("prénom".into(), prenom),
                ("poids".into(), path("poids")),
                ("tension".into(), path("tension")),
                ("hématocrite".into(), path("hematocrite")),
                ("plaquettes".into(), path("plaquettes")),
                ("urée".into(), path("uree")),
            ],
        }
    }

    fn catalog() -> SourceCatalog {
        use crate::model::DeclaredType as T;
        let mut c = SourceCatalog::new();
        c.insert(SourceClassDecl {
            name: "Personnes".into(),
            attributes: vec![
                ("nom".into(), T::Str),
                ("prenoms".into(), T::List(Box::new(T::Str))),
                ("sexe".into(), T::Bool),
                ("naissance".into(), T::Date),
            ],
            relationships: vec![("parametres".into(), "Variables".into())],
        });
        c.insert(SourceClassDecl {
            name: "Variables".into(),
            attributes: vec![
                ("poids".into(), T::Int),
                (
                    "tension".into(),
                    T::Record {
                        name: Some("T_tension".into()),
                        fields: vec![("min".into(), T::Int), ("max".into(), T::Int)],
                    },
                ),
                ("hematocrite".into(), T::Int),
                ("plaquettes".into(), T::Int),
                ("uree".into(), T::Int),
            ],
            relationships: vec![("patient".into(), "Personnes".into())],
        });
        c
    }

    use super::super::SourceClassDecl;

    #[test]
    fn patient_mapping_builds_the_warehouse_value() {
        let rows = evaluate_mapping(&patient_mapping(), &snapshot(), Some(&catalog())).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.keys, vec!["p1".to_string(), "v1".to_string()]);
        let names: Vec<&str> = row.value.names().collect();
        assert_eq!(
            names,
            vec!["hématocrite", "nom", "plaquettes", "poids", "prénom", "tension", "urée"]
        );
        assert_eq!(
            row.value.get("prénom").unwrap().1,
            &AttrValue::Scalar(Scalar::Str("Michel".into()))
        );
        assert_eq!(
            row.value.get("poids").unwrap().1,
            &AttrValue::Scalar(Scalar::Int(80))
        );
    }

    #[test]
    fn unsatisfiable_join_yields_no_rows() {
        let join = MappingExpr::Join {
            left: BoundExpr::new(Some("p".into()), MappingExpr::Source("Personnes".into())),
            right: BoundExpr::new(Some("v".into()), MappingExpr::Source("Variables".into())),
            predicate: Pred::Bool(false),
        };
        let rows = evaluate_mapping(&join, &snapshot(), None).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn identity_select_keeps_every_object() {
        let sel = MappingExpr::Select {
            input: BoundExpr::new(None, MappingExpr::Source("Variables".into())),
            predicate: Pred::Bool(true),
        };
        let rows = evaluate_mapping(&sel, &snapshot(), None).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn set_combinators_key_on_source_tuples() {
        let all = MappingExpr::Source("Variables".into());
        let heavy = MappingExpr::Select {
            input: BoundExpr::new(Some("v".into()), MappingExpr::Source("Variables".into())),
            predicate: Pred::Cmp {
                left: Operand::Attr(AttrRef::qualified("v", "poids")),
                op: CmpOp::Gt,
                right: Operand::Lit(Scalar::Int(70)),
            },
        };
        let diff = MappingExpr::Combine {
            op: SetCombine::Difference,
            left: BoundExpr::new(None, all.clone()),
            right: BoundExpr::new(None, heavy.clone()),
        };
        let rows = evaluate_mapping(&diff, &snapshot(), None).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].keys, vec!["v9".to_string()]);
        let inter = MappingExpr::Combine {
            op: SetCombine::Intersect,
            left: BoundExpr::new(None, all),
            right: BoundExpr::new(None, heavy),
        };
        let rows = evaluate_mapping(&inter, &snapshot(), None).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].keys, vec!["v1".to_string()]);
    }

    #[test]
    fn the_paper_mapping_validates_cleanly() {
        assert_eq!(validate_mapping(&patient_mapping(), &catalog()), vec![]);
    }

    #[test]
    fn unknown_projection_attribute_is_reported() {
        let bad = MappingExpr::Project {
            input: BoundExpr::new(Some("p".into()), MappingExpr::Source("Personnes".into())),
            targets: vec![("nom".into(), AttrRef::qualified("p", "inexistant"))],
        };
        let diags = validate_mapping(&bad, &catalog());
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unknown attribute"));
    }

    #[test]
    fn attribute_compared_with_variable_is_reported() {
        let bad = MappingExpr::Join {
            left: BoundExpr::new(Some("p".into()), MappingExpr::Source("Personnes".into())),
            right: BoundExpr::new(Some("v".into()), MappingExpr::Source("Variables".into())),
            predicate: Pred::Cmp {
                left: Operand::Attr(AttrRef::qualified("p", "nom")),
                op: CmpOp::Eq,
                right: Operand::Var("v".into()),
            },
        };
        let diags = validate_mapping(&bad, &catalog());
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("expected a relationship"));
    }
}
