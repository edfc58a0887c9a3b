//! Structural values: attribute records of scalars, composites, scalar
//! lists and object references, plus the declared-type checks applied at
//! ingestion.

use std::collections::BTreeMap;
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::{fold_ident, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Dec(OrderedFloat<f64>),
    Str(String),
}

impl Scalar {
    pub fn dec(v: f64) -> Scalar {
        Scalar::Dec(OrderedFloat(v))
    }

    /// Numeric view for comparisons and aggregation.
    pub fn numeric(&self) -> Option<f64> {
        match self {
            Scalar::Int(i) => Some(*i as f64),
            Scalar::Dec(d) => Some(d.0),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scalar::Bool(_) => "boolean",
            Scalar::Int(_) => "integer",
            Scalar::Dec(_) => "decimal",
            Scalar::Str(_) => "string",
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Dec(d) => write!(f, "{}", d.0),
            Scalar::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// One attribute slot of a value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrValue {
    Scalar(Scalar),
    Record(BTreeMap<String, AttrValue>),
    List(Vec<Scalar>),
    Ref(String),
}

impl AttrValue {
    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            AttrValue::Scalar(s) => Some(s),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AttrValue::Scalar(s) => s.kind(),
            AttrValue::Record(_) => "record",
            AttrValue::List(_) => "list",
            AttrValue::Ref(_) => "reference",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AttrValue::Scalar(Scalar::Bool(b)) => serde_json::Value::Bool(*b),
            AttrValue::Scalar(Scalar::Int(i)) => serde_json::Value::from(*i),
            AttrValue::Scalar(Scalar::Dec(d)) => serde_json::Value::from(d.0),
            AttrValue::Scalar(Scalar::Str(s)) => serde_json::Value::from(s.clone()),
            AttrValue::Record(fields) => serde_json::Value::Object(
                fields
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json()))
                    .collect(),
            ),
            AttrValue::List(items) => serde_json::Value::Array(
                items
                    .iter()
                    .map(|s| AttrValue::Scalar(s.clone()).to_json())
                    .collect(),
            ),
            AttrValue::Ref(oid) => {
                let mut m = serde_json::Map::new();
                m.insert("$oid".into(), serde_json::Value::from(oid.clone()));
                serde_json::Value::Object(m)
            }
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<AttrValue, ModelError> {
        match v {
            serde_json::Value::Bool(b) => Ok(AttrValue::Scalar(Scalar::Bool(*b))),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(AttrValue::Scalar(Scalar::Int(i)))
                } else if let Some(f) = n.as_f64() {
                    Ok(AttrValue::Scalar(Scalar::dec(f)))
                } else {
                    Err(ModelError::TypeMismatch {
                        attr: String::new(),
                        expected: "number".into(),
                        found: n.to_string(),
                    })
                }
            }
            serde_json::Value::String(s) => Ok(AttrValue::Scalar(Scalar::Str(s.clone()))),
            serde_json::Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match AttrValue::from_json(item)? {
                        AttrValue::Scalar(s) => out.push(s),
                        other => {
                            return Err(ModelError::TypeMismatch {
                                attr: String::new(),
                                expected: "scalar list element".into(),
                                found: other.kind().into(),
                            })
                        }
                    }
                }
                Ok(AttrValue::List(out))
            }
            serde_json::Value::Object(map) => {
                if map.len() == 1 {
                    if let Some(serde_json::Value::String(oid)) = map.get("$oid") {
                        return Ok(AttrValue::Ref(oid.clone()));
                    }
                }
                let mut fields = BTreeMap::new();
                for (k, v) in map {
                    fields.insert(k.clone(), AttrValue::from_json(v)?);
                }
                Ok(AttrValue::Record(fields))
            }
            serde_json::Value::Null => Err(ModelError::TypeMismatch {
                attr: String::new(),
                expected: "attribute value".into(),
                found: "null".into(),
            }),
        }
    }
}

/// An attribute record: the structural part of a state. Attribute names
/// are unique; lookups are accent-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(pub BTreeMap<String, AttrValue>);

impl Value {
    pub fn new() -> Value {
        Value(BTreeMap::new())
    }

    pub fn set(&mut self, name: impl Into<String>, v: AttrValue) {
        self.0.insert(name.into(), v);
    }

    pub fn with(mut self, name: impl Into<String>, v: AttrValue) -> Value {
        self.set(name, v);
        self
    }

    /// Accent-insensitive attribute lookup; the stored key is returned so
    /// callers can preserve canonical spelling.
    pub fn get(&self, name: &str) -> Option<(&str, &AttrValue)> {
        if let Some((k, v)) = self.0.get_key_value(name) {
            return Some((k.as_str(), v));
        }
        let folded = fold_ident(name);
        self.0
            .iter()
            .find(|(k, _)| fold_ident(k) == folded)
            .map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(|k| k.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(self.0.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Value, ModelError> {
        let map = v.as_object().ok_or_else(|| ModelError::TypeMismatch {
            attr: String::new(),
            expected: "attribute record".into(),
            found: "non-object".into(),
        })?;
        let mut out = Value::new();
        for (k, v) in map {
            out.set(k.clone(), AttrValue::from_json(v)?);
        }
        Ok(out)
    }
}

/// Declared attribute types; scalar kind mismatches are refresh-time
/// errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclaredType {
    Int,
    Dec,
    Str,
    Bool,
    /// Calendar dates carried as strings.
    Date,
    List(Box<DeclaredType>),
    Record {
        name: Option<String>,
        fields: Vec<(String, DeclaredType)>,
    },
    Ref(String),
}

impl DeclaredType {
    pub fn name(&self) -> String {
        match self {
            DeclaredType::Int => "Integer".into(),
            DeclaredType::Dec => "Real".into(),
            DeclaredType::Str => "String".into(),
            DeclaredType::Bool => "Boolean".into(),
            DeclaredType::Date => "Date".into(),
            DeclaredType::List(inner) => format!("List<{}>", inner.name()),
            DeclaredType::Record { name, .. } => {
                format!("Struct {}", name.as_deref().unwrap_or(""))
            }
            DeclaredType::Ref(c) => c.clone(),
        }
    }

    /// Ingestion-time check of a value against this declaration.
    pub fn check(&self, attr: &str, v: &AttrValue) -> Result<(), ModelError> {
        let mismatch = |found: &str| ModelError::TypeMismatch {
            attr: attr.to_string(),
            expected: self.name(),
            found: found.to_string(),
        };
        match (self, v) {
            (DeclaredType::Int, AttrValue::Scalar(Scalar::Int(_))) => Ok(()),
            // integers are accepted where decimals are declared
            (DeclaredType::Dec, AttrValue::Scalar(Scalar::Dec(_)))
            | (DeclaredType::Dec, AttrValue::Scalar(Scalar::Int(_))) => Ok(()),
            (DeclaredType::Str, AttrValue::Scalar(Scalar::Str(_)))
            | (DeclaredType::Date, AttrValue::Scalar(Scalar::Str(_))) => Ok(()),
            (DeclaredType::Bool, AttrValue::Scalar(Scalar::Bool(_))) => Ok(()),
            (DeclaredType::List(inner), AttrValue::List(items)) => {
                for s in items {
                    inner.check(attr, &AttrValue::Scalar(s.clone()))?;
                }
                Ok(())
            }
            (DeclaredType::Record { fields, .. }, AttrValue::Record(entries)) => {
                for (fname, fty) in fields {
                    match entries.get(fname) {
                        Some(fv) => fty.check(fname, fv)?,
                        None => return Err(ModelError::MissingAttribute(format!("{attr}.{fname}"))),
                    }
                }
                Ok(())
            }
            (DeclaredType::Ref(_), AttrValue::Ref(_)) => Ok(()),
            (_, other) => Err(mismatch(other.kind())),
        }
    }
}
