//! Source snapshots: the extracted image of the operational source at
//! one instant, plus the catalog of declared source classes.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{fold_ident, DeclaredType, Value, WarehouseClass};
use crate::temporal::Instant;

use super::ExtractionError;

/// One source object: class, key, attribute record and named references
/// to other source keys.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceObject {
    pub class: String,
    pub key: String,
    pub attributes: Value,
    pub relationships: BTreeMap<String, Vec<String>>,
}

impl SourceObject {
    /// Accent-insensitive relationship lookup.
    pub fn relationship(&self, name: &str) -> Option<&Vec<String>> {
        if let Some(v) = self.relationships.get(name) {
            return Some(v);
        }
        let folded = fold_ident(name);
        self.relationships
            .iter()
            .find(|(k, _)| fold_ident(k) == folded)
            .map(|(_, v)| v)
    }
}

/// All source objects extracted at one instant. `(class, key)` pairs are
/// unique and every referenced key resolves within the snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSnapshot {
    pub timestamp: Instant,
    pub objects: Vec<SourceObject>,
}

impl SourceSnapshot {
    pub fn new(
        timestamp: Instant,
        objects: Vec<SourceObject>,
    ) -> Result<SourceSnapshot, ExtractionError> {
        let mut seen = BTreeSet::new();
        let mut all_keys = BTreeSet::new();
        for obj in &objects {
            if !seen.insert((obj.class.clone(), obj.key.clone())) {
                return Err(ExtractionError::DuplicateSourceKey {
                    class: obj.class.clone(),
                    key: obj.key.clone(),
                });
            }
            all_keys.insert(obj.key.clone());
        }
        for obj in &objects {
            for (name, targets) in &obj.relationships {
                for t in targets {
                    if !all_keys.contains(t) {
                        return Err(ExtractionError::UnresolvedReference {
                            class: obj.class.clone(),
                            key: obj.key.clone(),
                            via: name.clone(),
                        });
                    }
                }
            }
        }
        Ok(SourceSnapshot { timestamp, objects })
    }

    /// Parses the line-delimited snapshot notation. Field names are
    /// normative: `class`, `key`, `attributes`, `relationships` (the
    /// last one optional; values are a key string or an array of them).
    pub fn parse_jsonl(timestamp: Instant, text: &str) -> Result<SourceSnapshot, ExtractionError> {
        let mut objects = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            let err = |message: String| ExtractionError::Snapshot { line, message };
            let json: serde_json::Value =
                serde_json::from_str(trimmed).map_err(|e| err(e.to_string()))?;
            let obj = json
                .as_object()
                .ok_or_else(|| err("expected an object".into()))?;
            let class = obj
                .get("class")
                .and_then(|v| v.as_str())
                .ok_or_else(|| err("missing \"class\"".into()))?
                .to_string();
            let key = obj
                .get("key")
                .and_then(|v| v.as_str())
                .ok_or_else(|| err("missing \"key\"".into()))?
                .to_string();
            let attributes = Value::from_json(
                obj.get("attributes")
                    .ok_or_else(|| err("missing \"attributes\"".into()))?,
            )
            .map_err(|e| err(e.to_string()))?;
            let mut relationships = BTreeMap::new();
            if let Some(rels) = obj.get("relationships") {
                let rels = rels
                    .as_object()
                    .ok_or_else(|| err("\"relationships\" must be an object".into()))?;
                for (name, v) in rels {
                    let targets = match v {
                        serde_json::Value::String(s) => vec![s.clone()],
                        serde_json::Value::Array(items) => items
                            .iter()
                            .map(|it| {
                                it.as_str().map(str::to_string).ok_or_else(|| {
                                    err(format!("relationship {name:?} must reference keys"))
                                })
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                        _ => {
                            return Err(err(format!(
                                "relationship {name:?} must be a key or an array of keys"
                            )))
                        }
                    };
                    relationships.insert(name.clone(), targets);
                }
            }
            objects.push(SourceObject {
                class,
                key,
                attributes,
                relationships,
            });
        }
        SourceSnapshot::new(timestamp, objects)
    }

    pub fn of_class<'a>(&'a self, class: &'a str) -> impl Iterator<Item = (usize, &'a SourceObject)> {
        let folded = fold_ident(class);
        self.objects
            .iter()
            .enumerate()
            .filter(move |(_, o)| o.class == class || fold_ident(&o.class) == folded)
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.of_class(class).next().is_some()
    }
}

/// Declared structure of one source class.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceClassDecl {
    pub name: String,
    pub attributes: Vec<(String, DeclaredType)>,
    pub relationships: Vec<(String, String)>,
}

impl SourceClassDecl {
    pub fn attribute(&self, name: &str) -> Option<&DeclaredType> {
        let folded = fold_ident(name);
        self.attributes
            .iter()
            .find(|(n, _)| *n == name || fold_ident(n) == folded)
            .map(|(_, t)| t)
    }

    pub fn relationship(&self, name: &str) -> Option<&str> {
        let folded = fold_ident(name);
        self.relationships
            .iter()
            .find(|(n, _)| *n == name || fold_ident(n) == folded)
            .map(|(_, t)| t.as_str())
    }
}

/// Catalog of source classes a mapping is validated against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceCatalog {
    classes: BTreeMap<String, SourceClassDecl>,
}

impl SourceCatalog {
    pub fn new() -> SourceCatalog {
        SourceCatalog::default()
    }

    pub fn insert(&mut self, decl: SourceClassDecl) {
        self.classes.insert(decl.name.clone(), decl);
    }

    /// Collects declared interfaces (source-marked and plain ones alike)
    /// so mappings can draw from anything the schema text declares.
    pub fn from_classes<'a>(classes: impl Iterator<Item = &'a WarehouseClass>) -> SourceCatalog {
        let mut catalog = SourceCatalog::new();
        for c in classes {
            catalog.insert(SourceClassDecl {
                name: c.name.clone(),
                attributes: c
                    .attributes
                    .iter()
                    .map(|a| (a.name.clone(), a.ty.clone()))
                    .collect(),
                relationships: c
                    .relationships
                    .iter()
                    .map(|r| (r.name.clone(), r.target.clone()))
                    .collect(),
            });
        }
        catalog
    }

    pub fn class(&self, name: &str) -> Option<&SourceClassDecl> {
        if let Some(c) = self.classes.get(name) {
            return Some(c);
        }
        let folded = fold_ident(name);
        self.classes
            .values()
            .find(|c| fold_ident(&c.name) == folded)
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttrValue, Scalar};

    fn month(m: u8) -> Instant {
        Instant::month(2000, m).unwrap()
    }

    #[test]
    fn parse_jsonl_reads_objects_and_references() {
        let text = r#"
{"class":"Personnes","key":"p1","attributes":{"nom":"Dupond","prenoms":["Michel"]},"relationships":{"parametres":"v1"}}
{"class":"Variables","key":"v1","attributes":{"poids":80},"relationships":{"patient":["p1"]}}
"#;
        let snap = SourceSnapshot::parse_jsonl(month(7), text).unwrap();
        assert_eq!(snap.objects.len(), 2);
        let p = &snap.objects[0];
        assert_eq!(p.relationship("parametres"), Some(&vec!["v1".to_string()]));
        assert_eq!(
            p.attributes.get("nom").unwrap().1,
            &AttrValue::Scalar(Scalar::Str("Dupond".into()))
        );
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = r#"
{"class":"C","key":"k","attributes":{}}
{"class":"C","key":"k","attributes":{}}
"#;
        assert!(matches!(
            SourceSnapshot::parse_jsonl(month(7), text),
            Err(ExtractionError::DuplicateSourceKey { .. })
        ));
    }

    #[test]
    fn dangling_references_are_rejected() {
        let text = r#"{"class":"C","key":"k","attributes":{},"relationships":{"r":"missing"}}"#;
        assert!(matches!(
            SourceSnapshot::parse_jsonl(month(7), text),
            Err(ExtractionError::UnresolvedReference { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_the_line_number() {
        let text = "{\"class\":\"C\",\"key\":\"k\",\"attributes\":{}}\nnot json";
        match SourceSnapshot::parse_jsonl(month(7), text) {
            Err(ExtractionError::Snapshot { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected snapshot error, got {other:?}"),
        }
    }
}
