//! Parsed documents and the query operator tree.

use crate::model::{ConfigRule, Environment, Pred, Scalar, WarehouseClass, WarehouseSchema};
use crate::temporal::{Duration, TemporalDomain, TemporalUnit};

use super::DslError;

/// A parsed schema file: interface, environment and rule declarations
/// plus optional warehouse name and global configuration entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DdlDocument {
    pub warehouse_name: Option<String>,
    pub classes: Vec<WarehouseClass>,
    pub environments: Vec<Environment>,
    pub rules: Vec<ConfigRule>,
    pub configs: Vec<(String, Scalar)>,
}

impl DdlDocument {
    /// Builds the schema catalog: rules attach to their environment.
    pub fn to_schema(&self) -> Result<WarehouseSchema, DslError> {
        let mut environments = self.environments.clone();
        for rule in &self.rules {
            let env = environments
                .iter_mut()
                .find(|e| crate::model::ident_eq(&e.name, &rule.environment))
                .ok_or_else(|| DslError::UnknownEnvironment(rule.environment.clone()))?;
            env.rules.push(rule.clone());
        }
        Ok(WarehouseSchema {
            name: self
                .warehouse_name
                .clone()
                .unwrap_or_else(|| "warehouse".into()),
            classes: self.classes.clone(),
            environments,
            global_config: self.configs.clone(),
        })
    }
}

/// Which surface literal produced a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomLitForm {
    /// `DomT(from, to, fmt?)`: the closed window `[from, to - 1 grain]`.
    DomT,
    /// `Date(at, fmt?)`: the singleton domain `[at, at]`.
    Date,
}

/// A temporal window literal; original texts are kept for printing.
#[derive(Debug, Clone, PartialEq)]
pub struct DomLit {
    pub form: DomLitForm,
    pub texts: Vec<String>,
    pub fmt: Option<String>,
    pub domain: TemporalDomain,
}

/// A window relation name as written (`during`, `precedes`, ...).
pub type RelName = crate::model::WindowRel;

/// One projection item `alias: var.path` (alias optional).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjItem {
    pub alias: Option<String>,
    pub path: crate::model::AttrRef,
}

/// One aggregation entry `(target, fn(attr))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggEntry {
    pub target: String,
    pub func: String,
    pub arg: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOpName {
    VUnion,
    VIntersect,
    VDifference,
    IUnion,
    IIntersect,
    IDifference,
}

impl SetOpName {
    pub fn name(self) -> &'static str {
        match self {
            SetOpName::VUnion => "VUnion",
            SetOpName::VIntersect => "VIntersect",
            SetOpName::VDifference => "VDifference",
            SetOpName::IUnion => "IUnion",
            SetOpName::IIntersect => "IIntersect",
            SetOpName::IDifference => "IDifference",
        }
    }
}

/// A bound operand `var Expr` (the variable is optional).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery {
    pub var: Option<String>,
    pub expr: Box<QueryExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryExpr {
    /// Bare class name: the class extension.
    ClassRef(String),
    Select {
        input: BoundQuery,
        pred: Pred,
    },
    Project {
        input: BoundQuery,
        items: Vec<ProjItem>,
    },
    Join {
        left: BoundQuery,
        right: BoundQuery,
        pred: Pred,
    },
    SetOp {
        op: SetOpName,
        left: Box<QueryExpr>,
        right: Box<QueryExpr>,
    },
    Flatten(Box<QueryExpr>),
    DupElim(Box<QueryExpr>),
    EmptyElim(Box<QueryExpr>),
    Current(Box<QueryExpr>),
    Past(Box<QueryExpr>),
    Archive(Box<QueryExpr>),
    State {
        input: Box<QueryExpr>,
        window: DomLit,
        rel: RelName,
    },
    IJoin {
        left: BoundQuery,
        right: BoundQuery,
        pred: Pred,
    },
    UJoin {
        left: BoundQuery,
        right: BoundQuery,
        pred: Pred,
    },
    UGroup {
        input: Box<QueryExpr>,
        unit: TemporalUnit,
        unit_text: String,
    },
    DGroup {
        input: Box<QueryExpr>,
        duration: Duration,
    },
    MakeSerie(Box<QueryExpr>),
    Agreg {
        input: Box<QueryExpr>,
        entries: Vec<AggEntry>,
    },
    ACum {
        input: Box<QueryExpr>,
        entries: Vec<AggEntry>,
    },
    AMove {
        input: Box<QueryExpr>,
        entries: Vec<AggEntry>,
        duration: Duration,
    },
    ScaleUp {
        input: Box<QueryExpr>,
        unit: TemporalUnit,
        unit_text: String,
        entries: Vec<AggEntry>,
    },
    ScaleDown {
        input: Box<QueryExpr>,
        unit: TemporalUnit,
        unit_text: String,
        entries: Vec<AggEntry>,
    },
    Nest {
        input: Box<QueryExpr>,
        attr: String,
    },
    UnNest {
        input: Box<QueryExpr>,
        attr: String,
    },
}
