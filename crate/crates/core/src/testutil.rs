//! Shared fixtures for unit tests.

use std::collections::BTreeMap;

use crate::model::{
    AggKind, AggMode, AggregationFn, ArchiveFilter, ArchiveFilterEntry, ArchiveGrain,
    AttrValue, AttributeDecl, DeclaredType, PropertySource, Scalar, TemporalFilter,
    TemporalFilterEntry, Value, WarehouseClass,
};
use crate::temporal::TemporalUnit;

/// The PATIENT warehouse class with temporal filter (poids, tension) and
/// archive filter t_avg(poids) by month(6).
pub(crate) fn patient_class() -> WarehouseClass {
    let attrs = [
        ("nom", DeclaredType::Str),
        ("prénom", DeclaredType::Str),
        ("poids", DeclaredType::Int),
        (
            "tension",
            DeclaredType::Record {
                name: Some("T_tension".into()),
                fields: vec![
                    ("min".into(), DeclaredType::Int),
                    ("max".into(), DeclaredType::Int),
                ],
            },
        ),
        ("hématocrite", DeclaredType::Int),
        ("plaquettes", DeclaredType::Int),
        ("urée", DeclaredType::Int),
    ];
    WarehouseClass {
        name: "PATIENT".into(),
        attributes: attrs
            .into_iter()
            .map(|(name, ty)| AttributeDecl {
                name: name.into(),
                ty,
            })
            .collect(),
        relationships: vec![],
        operations: vec![],
        super_names: vec![],
        mapping: None,
        temporal_filter: TemporalFilter {
            entries: vec![
                TemporalFilterEntry {
                    property: "poids".into(),
                    source: PropertySource::Attribute("poids".into()),
                },
                TemporalFilterEntry {
                    property: "tension".into(),
                    source: PropertySource::Attribute("tension".into()),
                },
            ],
        },
        archive_filter: ArchiveFilter {
            entries: vec![ArchiveFilterEntry {
                attribute: "poids".into(),
                func: AggregationFn {
                    kind: AggKind::Avg,
                    mode: AggMode::Moderate,
                },
                arg: Some("poids".into()),
            }],
            grain: Some(ArchiveGrain {
                unit: TemporalUnit::Month,
                count: 6,
            }),
        },
        is_source: false,
    }
}

pub(crate) fn tension(min: i64, max: i64) -> AttrValue {
    let mut m = BTreeMap::new();
    m.insert("min".to_string(), AttrValue::Scalar(Scalar::Int(min)));
    m.insert("max".to_string(), AttrValue::Scalar(Scalar::Int(max)));
    AttrValue::Record(m)
}

pub(crate) fn patient_value(nom: &str, poids: i64, t: (i64, i64)) -> Value {
    Value::new()
        .with("nom", AttrValue::Scalar(Scalar::Str(nom.into())))
        .with("prénom", AttrValue::Scalar(Scalar::Str("Michel".into())))
        .with("poids", AttrValue::Scalar(Scalar::Int(poids)))
        .with("tension", tension(t.0, t.1))
        .with("hématocrite", AttrValue::Scalar(Scalar::Int(40)))
        .with("plaquettes", AttrValue::Scalar(Scalar::Int(250)))
        .with("urée", AttrValue::Scalar(Scalar::Int(5)))
}

pub(crate) fn past_value(poids: i64, t: (i64, i64)) -> Value {
    Value::new()
        .with("poids", AttrValue::Scalar(Scalar::Int(poids)))
        .with("tension", tension(t.0, t.1))
}

fn month(y: i64, m: u8) -> crate::temporal::Instant {
    crate::temporal::Instant::month(y, m).unwrap()
}

fn dom(spans: &[(u8, u8)]) -> crate::temporal::TemporalDomain {
    let ivs: Vec<crate::temporal::Interval> = spans
        .iter()
        .map(|(a, b)| {
            crate::temporal::Interval::new(month(2000, *a), month(2000, *b)).unwrap()
        })
        .collect();
    crate::temporal::TemporalDomain::normalize(TemporalUnit::Month, &ivs).unwrap()
}

/// Store with the Dupond object (current 76 since 2001-01, past states
/// 80, 79, 77 over the second half of 2000) and a second patient.
pub(crate) fn dupond_store() -> crate::model::WarehouseStore {
    use crate::model::{CurrentState, HistState, WarehouseObject, WarehouseSchema, WarehouseStore};
    let schema = WarehouseSchema {
        name: "entrepot".into(),
        classes: vec![patient_class()],
        environments: vec![],
        global_config: vec![],
    };
    let mut store = WarehouseStore::new(schema, String::new());
    store.last_refresh = Some(month(2001, 1));
    store.objects.insert(
        "PATIENT:p1".into(),
        WarehouseObject {
            oid: "PATIENT:p1".into(),
            class: "PATIENT".into(),
            active: true,
            current: CurrentState {
                value: patient_value("Dupond", 76, (9, 14)),
                since: month(2001, 1),
            },
            past: vec![
                HistState {
                    value: past_value(80, (10, 16)),
                    domain: dom(&[(7, 7), (9, 10)]),
                },
                HistState {
                    value: past_value(79, (10, 15)),
                    domain: dom(&[(8, 8)]),
                },
                HistState {
                    value: past_value(77, (8, 15)),
                    domain: dom(&[(11, 12)]),
                },
            ],
            archive: vec![],
        },
    );
    store.objects.insert(
        "PATIENT:p2".into(),
        WarehouseObject {
            oid: "PATIENT:p2".into(),
            class: "PATIENT".into(),
            active: true,
            current: CurrentState {
                value: patient_value("Dulong", 66, (9, 13)),
                since: month(2000, 9),
            },
            past: vec![HistState {
                value: past_value(68, (10, 14)),
                domain: dom(&[(7, 8)]),
            }],
            archive: vec![],
        },
    );
    store
}
