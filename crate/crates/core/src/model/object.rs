//! Warehouse objects and the in-memory store.
//!
//! An object is the quadruplet (oid, current state, past states, archive
//! states). Past states carry exactly the temporal-filter attributes,
//! archive states exactly the archive-filter attributes; archiving
//! removes the summarised past states.

use std::collections::BTreeMap;

use crate::temporal::{Instant, TemporalDomain};

use super::{Value, WarehouseSchema};

pub type Oid = String;

/// The current state: full structural value, valid since `since` with an
/// open end (rendered `<[since,*]>`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentState {
    pub value: Value,
    pub since: Instant,
}

/// A past or archive state: structural value over a finite, non-empty
/// temporal domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistState {
    pub value: Value,
    pub domain: TemporalDomain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarehouseObject {
    pub oid: Oid,
    pub class: String,
    /// Cleared when the object vanishes from a snapshot; history is kept.
    pub active: bool,
    pub current: CurrentState,
    pub past: Vec<HistState>,
    pub archive: Vec<HistState>,
}

impl WarehouseObject {
    /// Engine-assigned oid, stable across refreshes: derived from the
    /// class name and the source-key tuple.
    pub fn derive_oid(class: &str, keys: &[String]) -> Oid {
        format!("{class}:{}", keys.join("+"))
    }
}

/// One rule firing: rule name, owning object and how many past states
/// were archived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiringRecord {
    pub at: Instant,
    pub rule: String,
    pub oid: Oid,
    pub states: usize,
}

/// In-memory warehouse: schema catalog plus all objects. Queries read a
/// consistent immutable snapshot; refresh mutates a clone and commits it
/// atomically.
#[derive(Debug, Clone, PartialEq)]
pub struct WarehouseStore {
    pub schema: WarehouseSchema,
    /// Original schema text; persisted verbatim so a reloaded store
    /// rebuilds an identical catalog.
    pub ddl_source: String,
    pub objects: BTreeMap<Oid, WarehouseObject>,
    pub last_refresh: Option<Instant>,
    pub journal: Vec<FiringRecord>,
}

impl WarehouseStore {
    pub fn new(schema: WarehouseSchema, ddl_source: String) -> WarehouseStore {
        WarehouseStore {
            schema,
            ddl_source,
            objects: BTreeMap::new(),
            last_refresh: None,
            journal: Vec::new(),
        }
    }

    pub fn object(&self, oid: &str) -> Option<&WarehouseObject> {
        self.objects.get(oid)
    }

    /// Extension of a class, in stable oid order.
    pub fn extension(&self, class: &str) -> Vec<&WarehouseObject> {
        self.objects
            .values()
            .filter(|o| super::ident_eq(&o.class, class))
            .collect()
    }
}
