//! Boolean predicates over attribute references, comparisons, logical
//! connectives and Allen tests on temporal domains. One predicate type
//! serves selections, joins and rule conditions; evaluation resolves
//! references through a caller-supplied context.

use crate::temporal::{allen_relate, contains, AllenRelation, TemporalDomain};

use super::{AttrValue, ModelError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Attribute path: optional range-variable qualifier, attribute name and
/// at most one composite-field or list-index step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrRef {
    pub qualifier: Option<String>,
    pub attr: String,
    pub sub: Option<SubRef>,
}

impl AttrRef {
    pub fn plain(attr: impl Into<String>) -> AttrRef {
        AttrRef {
            qualifier: None,
            attr: attr.into(),
            sub: None,
        }
    }

    pub fn qualified(var: impl Into<String>, attr: impl Into<String>) -> AttrRef {
        AttrRef {
            qualifier: Some(var.into()),
            attr: attr.into(),
            sub: None,
        }
    }

    /// Resolves attribute and sub-step against a value record.
    pub fn resolve_in(&self, value: &super::Value) -> Result<AttrValue, ModelError> {
        let (_, slot) = value
            .get(&self.attr)
            .ok_or_else(|| ModelError::UnknownAttribute(self.to_string()))?;
        match &self.sub {
            None => Ok(slot.clone()),
            Some(SubRef::Field(name)) => match slot {
                AttrValue::Record(fields) => {
                    let folded = crate::model::fold_ident(name);
                    fields
                        .iter()
                        .find(|(k, _)| *k == name || crate::model::fold_ident(k) == folded)
                        .map(|(_, v)| v.clone())
                        .ok_or_else(|| ModelError::UnknownAttribute(self.to_string()))
                }
                _ => Err(ModelError::PredicateType(format!(
                    "{} is not a composite record",
                    self.attr
                ))),
            },
            Some(SubRef::Index(i)) => match slot {
                AttrValue::List(items) => items
                    .get(*i)
                    .map(|s| AttrValue::Scalar(s.clone()))
                    .ok_or_else(|| ModelError::UnknownAttribute(self.to_string())),
                _ => Err(ModelError::PredicateType(format!(
                    "{} is not a list",
                    self.attr
                ))),
            },
        }
    }
}

impl std::fmt::Display for AttrRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(q) = &self.qualifier {
            write!(f, "{q}.")?;
        }
        write!(f, "{}", self.attr)?;
        match &self.sub {
            Some(SubRef::Field(name)) => write!(f, ".{name}"),
            Some(SubRef::Index(i)) => write!(f, "[{i}]"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubRef {
    Field(String),
    Index(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Attr(AttrRef),
    Lit(Scalar),
    /// Bare range variable; used for reference equality in mapping joins.
    Var(String),
}

/// Domain-valued operand of an Allen test.
#[derive(Debug, Clone, PartialEq)]
pub enum DomRef {
    /// `var.domT` (or plain `domT`).
    Attr(Option<String>),
    Lit(TemporalDomain),
}

/// Window relation of a temporal test: one of the thirteen Allen
/// relations, or the inclusive containment the `during` keyword denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowRel {
    Allen(AllenRelation),
    Contains,
}

impl WindowRel {
    pub fn name(self) -> &'static str {
        match self {
            WindowRel::Allen(rel) => rel.name(),
            WindowRel::Contains => "during",
        }
    }

    pub fn parse(s: &str) -> Option<WindowRel> {
        if s.eq_ignore_ascii_case("during") {
            return Some(WindowRel::Contains);
        }
        s.parse::<AllenRelation>().ok().map(WindowRel::Allen)
    }

    /// Evaluates `left rel right`. The `during` keyword tests inclusive
    /// containment of `left` within `right`.
    pub fn eval(self, left: &TemporalDomain, right: &TemporalDomain) -> Result<bool, ModelError> {
        match self {
            WindowRel::Allen(rel) => Ok(allen_relate(left, right, rel)?),
            WindowRel::Contains => Ok(contains(right, left)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    Bool(bool),
    Cmp {
        left: Operand,
        op: CmpOp,
        right: Operand,
    },
    /// `rel(left, right)`, e.g. `precedes(T.domT, Date('07-2000','mm-aaaa'))`.
    Allen {
        rel: WindowRel,
        left: DomRef,
        right: DomRef,
    },
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

/// Name resolution for predicate evaluation.
pub trait PredContext {
    /// Resolve an attribute reference to a value slot.
    fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError>;

    /// Temporal domain bound to a qualifier (`var.domT`).
    fn domain(&self, qualifier: Option<&str>) -> Result<TemporalDomain, ModelError>;

    /// Source key of a bare variable (reference equality); mapping
    /// contexts only.
    fn var_key(&self, _var: &str) -> Result<String, ModelError> {
        Err(ModelError::PredicateType(
            "bare variables are only valid in mapping predicates".into(),
        ))
    }

    /// Keys referenced by a relationship attribute; mapping contexts only.
    fn relationship(&self, _r: &AttrRef) -> Option<Vec<String>> {
        None
    }
}

impl Pred {
    pub fn and(self, other: Pred) -> Pred {
        Pred::And(Box::new(self), Box::new(other))
    }

    pub fn eval(&self, ctx: &dyn PredContext) -> Result<bool, ModelError> {
        match self {
            Pred::Bool(b) => Ok(*b),
            Pred::And(a, b) => Ok(a.eval(ctx)? && b.eval(ctx)?),
            Pred::Or(a, b) => Ok(a.eval(ctx)? || b.eval(ctx)?),
            Pred::Not(p) => Ok(!p.eval(ctx)?),
            Pred::Cmp { left, op, right } => eval_cmp(ctx, left, *op, right),
            Pred::Allen { rel, left, right } => {
                let l = resolve_dom(ctx, left)?;
                let r = resolve_dom(ctx, right)?;
                rel.eval(&l, &r)
            }
        }
    }
}

fn resolve_dom(ctx: &dyn PredContext, d: &DomRef) -> Result<TemporalDomain, ModelError> {
    match d {
        DomRef::Attr(q) => ctx.domain(q.as_deref()),
        DomRef::Lit(dom) => Ok(dom.clone()),
    }
}

fn eval_cmp(
    ctx: &dyn PredContext,
    left: &Operand,
    op: CmpOp,
    right: &Operand,
) -> Result<bool, ModelError> {
    // reference equality: `p.rel = v` compares relationship targets to a
    // bound object's key
    if let (Operand::Attr(path), Operand::Var(var)) = (left, right) {
        if let Some(keys) = ctx.relationship(path) {
            let key = ctx.var_key(var)?;
            let hit = keys.iter().any(|k| *k == key);
            return match op {
                CmpOp::Eq => Ok(hit),
                CmpOp::Ne => Ok(!hit),
                _ => Err(ModelError::PredicateType(
                    "relationships only support = and !=".into(),
                )),
            };
        }
    }
    let l = resolve_scalar(ctx, left)?;
    let r = resolve_scalar(ctx, right)?;
    compare_scalars(&l, op, &r)
}

fn resolve_scalar(ctx: &dyn PredContext, o: &Operand) -> Result<Scalar, ModelError> {
    match o {
        Operand::Lit(s) => Ok(s.clone()),
        Operand::Var(v) => Err(ModelError::PredicateType(format!(
            "variable {v} does not name a relationship target"
        ))),
        Operand::Attr(r) => match ctx.attr(r)? {
            AttrValue::Scalar(s) => Ok(s),
            other => Err(ModelError::PredicateType(format!(
                "{r} is a {}, not a scalar",
                other.kind()
            ))),
        },
    }
}

fn compare_scalars(l: &Scalar, op: CmpOp, r: &Scalar) -> Result<bool, ModelError> {
    use std::cmp::Ordering;
    let ord = match (l, r) {
        (Scalar::Str(a), Scalar::Str(b)) => a.cmp(b),
        (Scalar::Bool(a), Scalar::Bool(b)) => a.cmp(b),
        _ => match (l.numeric(), r.numeric()) {
            (Some(a), Some(b)) => a.partial_cmp(&b).unwrap_or(Ordering::Equal),
            _ => {
                return Err(ModelError::PredicateType(format!(
                    "cannot compare {} with {}",
                    l.kind(),
                    r.kind()
                )))
            }
        },
    };
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::{Instant, TemporalUnit};

    struct OneState {
        value: crate::model::Value,
        domain: TemporalDomain,
    }

    impl PredContext for OneState {
        fn attr(&self, r: &AttrRef) -> Result<AttrValue, ModelError> {
            self.value
                .get(&r.attr)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| ModelError::UnknownAttribute(r.attr.clone()))
        }

        fn domain(&self, _q: Option<&str>) -> Result<TemporalDomain, ModelError> {
            Ok(self.domain.clone())
        }
    }

    fn ctx() -> OneState {
        OneState {
            value: crate::model::Value::new()
                .with("poids", AttrValue::Scalar(Scalar::Int(80)))
                .with("nom", AttrValue::Scalar(Scalar::Str("Dupond".into()))),
            domain: TemporalDomain::singleton(Instant::month(2000, 7).unwrap()),
        }
    }

    #[test]
    fn comparisons_promote_int_to_decimal() {
        let p = Pred::Cmp {
            left: Operand::Attr(AttrRef::plain("poids")),
            op: CmpOp::Lt,
            right: Operand::Lit(Scalar::dec(80.5)),
        };
        assert!(p.eval(&ctx()).unwrap());
    }

    #[test]
    fn string_and_number_do_not_compare() {
        let p = Pred::Cmp {
            left: Operand::Attr(AttrRef::plain("nom")),
            op: CmpOp::Eq,
            right: Operand::Lit(Scalar::Int(1)),
        };
        assert!(matches!(p.eval(&ctx()), Err(ModelError::PredicateType(_))));
    }

    #[test]
    fn allen_atom_with_instant_literal() {
        // precedes(domT, 2000-09)
        let p = Pred::Allen {
            rel: WindowRel::Allen(AllenRelation::Precedes),
            left: DomRef::Attr(None),
            right: DomRef::Lit(TemporalDomain::singleton(Instant::month(2000, 9).unwrap())),
        };
        assert!(p.eval(&ctx()).unwrap());
    }

    #[test]
    fn during_keyword_is_inclusive_containment() {
        let window = TemporalDomain::normalize(
            TemporalUnit::Month,
            &[crate::temporal::Interval::new(
                Instant::month(2000, 7).unwrap(),
                Instant::month(2000, 12).unwrap(),
            )
            .unwrap()],
        )
        .unwrap();
        // domT during window: the July singleton touches the window start,
        // so strict During fails but the keyword form holds
        let p = Pred::Allen {
            rel: WindowRel::Contains,
            left: DomRef::Attr(None),
            right: DomRef::Lit(window.clone()),
        };
        assert!(p.eval(&ctx()).unwrap());
        let strict = Pred::Allen {
            rel: WindowRel::Allen(AllenRelation::During),
            left: DomRef::Attr(None),
            right: DomRef::Lit(window),
        };
        assert!(!strict.eval(&ctx()).unwrap());
    }
}
