//! Schema validation and the structural projections that shape past and
//! archive states.

use std::collections::BTreeSet;

use super::{
    fold_ident, Diagnostic, ModelError, PropertySource, Value, WarehouseClass,
    WarehouseSchema,
};

/// Checks every schema invariant and reports one diagnostic per
/// violation; an empty report means the schema is well-formed.
pub fn validate_schema(schema: &WarehouseSchema) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    for class in &schema.classes {
        if !seen.insert(fold_ident(&class.name)) {
            out.push(Diagnostic::error(
                format!("class {}", class.name),
                "duplicate class name",
            ));
        }
    }

    for class in schema.warehouse_classes() {
        validate_class(class, &mut out);
    }

    // environments partition their classes
    let mut assigned: BTreeSet<String> = BTreeSet::new();
    for env in &schema.environments {
        if env.class_names.is_empty() {
            out.push(Diagnostic::error(
                format!("environment {}", env.name),
                "environment has no classes",
            ));
        }
        for cname in &env.class_names {
            if schema.class(cname).is_none() {
                out.push(Diagnostic::error(
                    format!("environment {}", env.name),
                    format!("unknown class {cname:?}"),
                ));
            }
            if !assigned.insert(fold_ident(cname)) {
                out.push(Diagnostic::error(
                    format!("environment {}", env.name),
                    format!("class {cname:?} belongs to more than one environment"),
                ));
            }
        }
        for rule in &env.rules {
            if let super::RuleCondition::Selection { class_name, .. } = &rule.condition {
                let in_env = env
                    .class_names
                    .iter()
                    .any(|c| super::ident_eq(c, class_name));
                if !in_env {
                    out.push(Diagnostic::error(
                        format!("rule {}", rule.name),
                        format!("selection class {class_name:?} is outside environment {}", env.name),
                    ));
                } else if let Some(class) = schema.class(class_name) {
                    if class.archive_filter.is_empty() {
                        out.push(Diagnostic::error(
                            format!("rule {}", rule.name),
                            format!("class {class_name:?} has no archive filter to apply"),
                        ));
                    }
                }
            }
        }
    }

    out
}

fn validate_class(class: &WarehouseClass, out: &mut Vec<Diagnostic>) {
    let loc = |what: &str| format!("class {}: {what}", class.name);

    let mut attr_names = BTreeSet::new();
    for attr in &class.attributes {
        if !attr_names.insert(fold_ident(&attr.name)) {
            out.push(Diagnostic::error(
                loc(&format!("attribute {}", attr.name)),
                "duplicate attribute name",
            ));
        }
    }

    if !class.super_names.is_empty() {
        out.push(Diagnostic::warning(
            loc("super classes"),
            "super-class declarations are stored without subtyping semantics",
        ));
    }

    let mut props = BTreeSet::new();
    for entry in &class.temporal_filter.entries {
        if !props.insert(fold_ident(&entry.property)) {
            out.push(Diagnostic::error(
                loc(&format!("temporal property {}", entry.property)),
                "duplicate temporal property",
            ));
        }
        match &entry.source {
            PropertySource::Attribute(name) => {
                if class.attribute(name).is_none() {
                    out.push(Diagnostic::error(
                        loc(&format!("temporal property {}", entry.property)),
                        format!("source attribute {name:?} is not declared"),
                    ));
                }
            }
            PropertySource::Operation(name) => {
                out.push(Diagnostic::error(
                    loc(&format!("temporal property {}", entry.property)),
                    format!("operation-backed temporal property {name:?} is not supported"),
                ));
            }
        }
    }

    for entry in &class.archive_filter.entries {
        let is_temporal = class
            .temporal_filter
            .property_names()
            .any(|p| super::ident_eq(p, &entry.attribute));
        if !is_temporal {
            out.push(Diagnostic::error(
                loc(&format!("archive attribute {}", entry.attribute)),
                "archived attribute not temporal",
            ));
        }
        if let Some(arg) = &entry.arg {
            if !super::ident_eq(arg, &entry.attribute) {
                out.push(Diagnostic::error(
                    loc(&format!("archive attribute {}", entry.attribute)),
                    format!("aggregation argument {arg:?} does not match the archived attribute"),
                ));
            }
        }
    }

    let moderate = class.archive_filter.has_moderate();
    match (&class.archive_filter.grain, moderate) {
        (None, true) => out.push(Diagnostic::error(
            loc("archive filter"),
            "moderate aggregation requires a `by unit(n)` grain",
        )),
        (Some(_), false) if !class.archive_filter.is_empty() => out.push(Diagnostic::error(
            loc("archive filter"),
            "grain declared but no moderate aggregation uses it",
        )),
        _ => {}
    }

    // a top-level projection should target declared attributes
    if let Some(mapping) = &class.mapping {
        for target in mapping.projection_targets() {
            if class.attribute(&target).is_none() {
                out.push(Diagnostic::warning(
                    loc(&format!("mapping target {target}")),
                    "projection target is not a declared attribute",
                ));
            }
        }
    }
}

/// Which filter shapes the projected state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionRole {
    Past,
    Archive,
}

/// Restricts a full structural value to the attributes the filter keeps
/// for the given role. Idempotent: projected values project to
/// themselves.
pub fn state_structural_projection(
    class: &WarehouseClass,
    value: &Value,
    role: ProjectionRole,
) -> Result<Value, ModelError> {
    let mut out = Value::new();
    match role {
        ProjectionRole::Past => {
            for entry in &class.temporal_filter.entries {
                let source = match &entry.source {
                    PropertySource::Attribute(name) => name.as_str(),
                    PropertySource::Operation(name) => name.as_str(),
                };
                // already-projected values carry the property name
                let slot = value.get(source).or_else(|| value.get(&entry.property));
                match slot {
                    Some((_, v)) => out.set(entry.property.clone(), v.clone()),
                    None => return Err(ModelError::MissingAttribute(source.to_string())),
                }
            }
        }
        ProjectionRole::Archive => {
            for entry in &class.archive_filter.entries {
                match value.get(&entry.attribute) {
                    Some((_, v)) => out.set(entry.attribute.clone(), v.clone()),
                    None => return Err(ModelError::MissingAttribute(entry.attribute.clone())),
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{AttrValue, Environment, Scalar, Severity, TemporalFilterEntry};
    use super::*;
    use std::collections::BTreeMap;

    use crate::testutil::patient_class;

    fn patient_schema() -> WarehouseSchema {
        WarehouseSchema {
            name: "entrepot".into(),
            classes: vec![patient_class()],
            environments: vec![Environment {
                name: "Evolution".into(),
                class_names: vec!["PATIENT".into()],
                rules: vec![],
            }],
            global_config: vec![],
        }
    }

    fn full_value() -> Value {
        let mut tension = BTreeMap::new();
        tension.insert("min".to_string(), AttrValue::Scalar(Scalar::Int(10)));
        tension.insert("max".to_string(), AttrValue::Scalar(Scalar::Int(16)));
        Value::new()
            .with("nom", AttrValue::Scalar(Scalar::Str("Dupond".into())))
            .with("prénom", AttrValue::Scalar(Scalar::Str("Michel".into())))
            .with("poids", AttrValue::Scalar(Scalar::Int(80)))
            .with("tension", AttrValue::Record(tension))
            .with("hématocrite", AttrValue::Scalar(Scalar::Int(40)))
            .with("plaquettes", AttrValue::Scalar(Scalar::Int(250)))
            .with("urée", AttrValue::Scalar(Scalar::Int(5)))
    }

    #[test]
    fn patient_schema_is_clean() {
        assert_eq!(validate_schema(&patient_schema()), vec![]);
    }

    #[test]
    fn archive_of_non_temporal_attribute_is_reported() {
        let mut schema = patient_schema();
        schema.classes[0].archive_filter.entries[0].attribute = "hématocrite".into();
        schema.classes[0].archive_filter.entries[0].arg = Some("hématocrite".into());
        let diags = validate_schema(&schema);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].message, "archived attribute not temporal");
    }

    #[test]
    fn unknown_environment_class_is_reported() {
        let mut schema = patient_schema();
        schema.environments[0].class_names = vec!["SEJOUR".into()];
        let diags = validate_schema(&schema);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unknown class"));
    }

    #[test]
    fn operation_backed_temporal_property_is_rejected() {
        let mut schema = patient_schema();
        schema.classes[0].temporal_filter.entries.push(TemporalFilterEntry {
            property: "age".into(),
            source: PropertySource::Operation("age()".into()),
        });
        let diags = validate_schema(&schema);
        assert!(diags.iter().any(|d| d.message.contains("not supported")));
    }

    #[test]
    fn super_classes_only_warn() {
        let mut schema = patient_schema();
        schema.classes[0].super_names = vec!["PERSONNE".into()];
        let diags = validate_schema(&schema);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
    }

    #[test]
    fn past_projection_keeps_temporal_attributes() {
        let class = patient_class();
        let projected =
            state_structural_projection(&class, &full_value(), ProjectionRole::Past).unwrap();
        let names: Vec<&str> = projected.names().collect();
        assert_eq!(names, vec!["poids", "tension"]);
        // idempotent
        let again =
            state_structural_projection(&class, &projected, ProjectionRole::Past).unwrap();
        assert_eq!(again, projected);
    }

    #[test]
    fn archive_projection_keeps_archived_attributes() {
        let class = patient_class();
        let projected =
            state_structural_projection(&class, &full_value(), ProjectionRole::Archive).unwrap();
        let names: Vec<&str> = projected.names().collect();
        assert_eq!(names, vec!["poids"]);
    }

    #[test]
    fn empty_temporal_filter_projects_to_empty_record() {
        let mut class = patient_class();
        class.temporal_filter.entries.clear();
        let projected =
            state_structural_projection(&class, &full_value(), ProjectionRole::Past).unwrap();
        assert!(projected.is_empty());
    }

    #[test]
    fn missing_attribute_is_an_error() {
        let class = patient_class();
        let v = Value::new().with("poids", AttrValue::Scalar(Scalar::Int(80)));
        assert!(matches!(
            state_structural_projection(&class, &v, ProjectionRole::Past),
            Err(ModelError::MissingAttribute(_))
        ));
    }
}
