//! Warehouse classes, temporal/archive filters, environments,
//! configuration rules and the schema catalog.

use crate::extraction::MappingExpr;
use crate::temporal::TemporalUnit;

use super::{fold_ident, DeclaredType, Pred, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggKind {
    Avg,
    Sum,
    Count,
    Max,
    Min,
}

impl AggKind {
    pub fn name(self) -> &'static str {
        match self {
            AggKind::Avg => "avg",
            AggKind::Sum => "sum",
            AggKind::Count => "count",
            AggKind::Max => "max",
            AggKind::Min => "min",
        }
    }

    pub fn parse(s: &str) -> Option<AggKind> {
        match s {
            "avg" => Some(AggKind::Avg),
            "sum" => Some(AggKind::Sum),
            "count" => Some(AggKind::Count),
            "max" => Some(AggKind::Max),
            "min" => Some(AggKind::Min),
            _ => None,
        }
    }
}

/// Strong aggregation summarises all selected past states into one
/// archive state; moderate aggregation (the `*_t` / `t_*` spellings)
/// produces one archive state per coarser time block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggMode {
    Strong,
    Moderate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregationFn {
    pub kind: AggKind,
    pub mode: AggMode,
}

impl AggregationFn {
    /// Parses `avg`, `avg_t` and the listing spelling `t_avg`.
    pub fn parse(s: &str) -> Option<AggregationFn> {
        if let Some(base) = s.strip_suffix("_t") {
            return AggKind::parse(base).map(|kind| AggregationFn {
                kind,
                mode: AggMode::Moderate,
            });
        }
        if let Some(base) = s.strip_prefix("t_") {
            return AggKind::parse(base).map(|kind| AggregationFn {
                kind,
                mode: AggMode::Moderate,
            });
        }
        AggKind::parse(s).map(|kind| AggregationFn {
            kind,
            mode: AggMode::Strong,
        })
    }

    pub fn name(self) -> String {
        match self.mode {
            AggMode::Strong => self.kind.name().to_string(),
            AggMode::Moderate => format!("t_{}", self.kind.name()),
        }
    }
}

/// What backs a temporal property: an attribute of the class, or a
/// declared operation (parsed but rejected by validation — behaviour
/// extraction is not supported).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertySource {
    Attribute(String),
    Operation(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalFilterEntry {
    pub property: String,
    pub source: PropertySource,
}

/// The set of properties whose detailed evolutions become past states;
/// it fixes the structure of the class's past states.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemporalFilter {
    pub entries: Vec<TemporalFilterEntry>,
}

impl TemporalFilter {
    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.property.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveFilterEntry {
    pub attribute: String,
    pub func: AggregationFn,
    /// The aggregated attribute inside the call, e.g. `t_avg(poids)`.
    pub arg: Option<String>,
}

/// The `by month(6)` clause: archive blocks are calendar-aligned windows
/// of `count` grains of `unit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchiveGrain {
    pub unit: TemporalUnit,
    pub count: u32,
}

/// The set of attributes whose past evolutions are summarised into
/// archive states; a subset of the temporal attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArchiveFilter {
    pub entries: Vec<ArchiveFilterEntry>,
    pub grain: Option<ArchiveGrain>,
}

impl ArchiveFilter {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_moderate(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.func.mode == AggMode::Moderate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub ty: DeclaredType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipDecl {
    pub name: String,
    pub target: String,
    pub inverse: Option<(String, String)>,
}

/// Declared operation signature; stored, never invoked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationDecl {
    pub name: String,
    pub return_type: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarehouseClass {
    pub name: String,
    pub attributes: Vec<AttributeDecl>,
    pub relationships: Vec<RelationshipDecl>,
    pub operations: Vec<OperationDecl>,
    /// Super-class names: declaration only, no subtyping semantics.
    pub super_names: Vec<String>,
    pub mapping: Option<MappingExpr>,
    pub temporal_filter: TemporalFilter,
    pub archive_filter: ArchiveFilter,
    /// `source interface` declarations describe the extraction side and
    /// are excluded from the warehouse catalog proper.
    pub is_source: bool,
}

impl WarehouseClass {
    pub fn attribute(&self, name: &str) -> Option<&AttributeDecl> {
        let folded = fold_ident(name);
        self.attributes
            .iter()
            .find(|a| a.name == name || fold_ident(&a.name) == folded)
    }

    pub fn relationship(&self, name: &str) -> Option<&RelationshipDecl> {
        let folded = fold_ident(name);
        self.relationships
            .iter()
            .find(|r| r.name == name || fold_ident(&r.name) == folded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleEvent {
    Refresh,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleCondition {
    /// A closed boolean expression gating the action on all past states
    /// of the environment's classes.
    Bool(Pred),
    /// `select T from P in Class, T in P.PastStates() where ...`
    Selection {
        state_var: String,
        object_var: String,
        class_name: String,
        predicate: Pred,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleAction {
    /// `T.archive()`
    Archive { state_var: String },
}

/// Event-condition-action rule fired on refresh; an empty condition
/// result means the action is not triggered.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRule {
    pub name: String,
    pub environment: String,
    pub event: RuleEvent,
    pub condition: RuleCondition,
    pub action: RuleAction,
}

/// A named group of warehouse classes with homogeneous temporal
/// behaviour and its configuration rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub name: String,
    pub class_names: Vec<String>,
    pub rules: Vec<ConfigRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarehouseSchema {
    pub name: String,
    pub classes: Vec<WarehouseClass>,
    pub environments: Vec<Environment>,
    pub global_config: Vec<(String, Scalar)>,
}

impl WarehouseSchema {
    /// Accent-insensitive class lookup among warehouse (non-source)
    /// classes.
    pub fn class(&self, name: &str) -> Option<&WarehouseClass> {
        let folded = fold_ident(name);
        self.classes
            .iter()
            .filter(|c| !c.is_source)
            .find(|c| c.name == name || fold_ident(&c.name) == folded)
    }

    pub fn warehouse_classes(&self) -> impl Iterator<Item = &WarehouseClass> {
        self.classes.iter().filter(|c| !c.is_source)
    }

    pub fn environment(&self, name: &str) -> Option<&Environment> {
        let folded = fold_ident(name);
        self.environments
            .iter()
            .find(|e| e.name == name || fold_ident(&e.name) == folded)
    }
}
