//! Deterministic random fixtures and surface-language ASTs for the
//! randomized suites.

use rand::prelude::*;

use twq_core::algebra::{AState, Series, SeriesElem};
use twq_core::dsl::ast::{
    AggEntry, BoundQuery, DdlDocument, DomLit, DomLitForm, ProjItem, QueryExpr, SetOpName,
};
use twq_core::extraction::{BoundExpr, MappingExpr, SetCombine};
use twq_core::model::{
    AggregationFn, ArchiveFilter, ArchiveFilterEntry, ArchiveGrain, AttrRef, AttrValue,
    AttributeDecl, CmpOp, ConfigRule, DeclaredType, DomRef, Environment, Operand, OperationDecl,
    Pred, PropertySource, RelationshipDecl, RuleAction, RuleCondition, RuleEvent, Scalar, SubRef,
    TemporalFilter, TemporalFilterEntry, Value, WarehouseClass,
};
use twq_core::temporal::{
    Duration, Instant, Interval, TemporalDomain, TemporalUnit,
};

pub type TestRng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Non-empty random month domain over `universe` grains starting at
/// 2000-01.
pub fn random_domain(rng: &mut TestRng, universe: i64) -> TemporalDomain {
    let base = Instant::month(2000, 1).unwrap().index();
    loop {
        let mut grains = std::collections::BTreeSet::new();
        for g in 0..universe {
            if rng.gen_bool(0.4) {
                grains.insert(base + g);
            }
        }
        if !grains.is_empty() {
            return crate::domain_from_grains(TemporalUnit::Month, &grains);
        }
    }
}

/// A set of objects' past-state fixtures: per object, disjoint domains
/// with one numeric `poids` value each.
pub fn random_states(rng: &mut TestRng, max_objects: usize, months: i64) -> Vec<AState> {
    let base = Instant::month(2000, 1).unwrap().index();
    let objects = rng.gen_range(1..=max_objects);
    let mut out = Vec::new();
    for obj in 0..objects {
        let mut occupied: Vec<i64> = (0..months)
            .filter(|_| rng.gen_bool(0.5))
            .map(|g| base + g)
            .collect();
        occupied.shuffle(rng);
        let groups = rng.gen_range(1..=3.min(occupied.len().max(1)));
        let mut buckets: Vec<Vec<i64>> = vec![Vec::new(); groups];
        for (i, g) in occupied.into_iter().enumerate() {
            buckets[i % groups].push(g);
        }
        for bucket in buckets.into_iter().filter(|b| !b.is_empty()) {
            let set: std::collections::BTreeSet<i64> = bucket.into_iter().collect();
            let value = Value::new().with(
                "poids",
                AttrValue::Scalar(Scalar::Int(rng.gen_range(60..=100))),
            );
            let mut state =
                AState::detached(value, crate::domain_from_grains(TemporalUnit::Month, &set));
            state.owner = Some(format!("OBJ:{obj}"));
            out.push(state);
        }
    }
    out
}

/// A valid series fixture: ordered single-interval elements with gaps.
pub fn random_series(rng: &mut TestRng, months: i64) -> Series {
    let base = Instant::month(2000, 1).unwrap().index();
    let mut elems = Vec::new();
    let mut cursor = 0i64;
    while cursor < months {
        let len = rng.gen_range(1..=3).min(months - cursor);
        if rng.gen_bool(0.8) {
            let interval = Interval::new(
                Instant::from_index(TemporalUnit::Month, base + cursor),
                Instant::from_index(TemporalUnit::Month, base + cursor + len - 1),
            )
            .unwrap();
            elems.push(SeriesElem {
                value: Value::new().with(
                    "poids",
                    AttrValue::Scalar(Scalar::Int(rng.gen_range(60..=100))),
                ),
                interval,
            });
            cursor += len + rng.gen_range(0..=1);
        } else {
            cursor += len;
        }
    }
    if elems.is_empty() {
        elems.push(SeriesElem {
            value: Value::new().with("poids", AttrValue::Scalar(Scalar::Int(70))),
            interval: Interval::singleton(Instant::from_index(TemporalUnit::Month, base)),
        });
    }
    Series::new(elems).expect("generator keeps elements ordered")
}

// ---------------------------------------------------------------------
// surface-language generators (print-parse round trips)
// ---------------------------------------------------------------------

const VARS: &[&str] = &["p", "q", "pp", "h1", "h2", "t"];
const ATTRS: &[&str] = &["poids", "tension", "nom", "prénom", "urée", "taille"];
const CLASSES: &[&str] = &["PATIENT", "SEJOUR", "Personnes", "Variables"];

fn pick<'a, T: ?Sized>(rng: &mut TestRng, items: &'a [&'a T]) -> &'a T {
    items[rng.gen_range(0..items.len())]
}

fn gen_scalar(rng: &mut TestRng) -> Scalar {
    match rng.gen_range(0..4) {
        0 => Scalar::Int(rng.gen_range(0..500)),
        1 => Scalar::dec(rng.gen_range(0..5000) as f64 / 10.0),
        2 => Scalar::Str(pick(rng, &["Dupond", "Michel", "Dulong", "Jeanne"]).to_string()),
        _ => Scalar::Bool(rng.gen()),
    }
}

fn gen_attr_ref(rng: &mut TestRng, qualified: bool) -> AttrRef {
    let mut r = if qualified {
        AttrRef::qualified(pick(rng, VARS).to_string(), pick(rng, ATTRS).to_string())
    } else {
        AttrRef::plain(pick(rng, ATTRS).to_string())
    };
    if qualified {
        match rng.gen_range(0..5) {
            0 => r.sub = Some(SubRef::Field(pick(rng, &["min", "max"]).to_string())),
            1 => r.sub = Some(SubRef::Index(rng.gen_range(0..3))),
            _ => {}
        }
    }
    r
}

fn gen_dom_ref(rng: &mut TestRng) -> DomRef {
    match rng.gen_range(0..3) {
        0 => DomRef::Attr(Some(pick(rng, VARS).to_string())),
        1 => DomRef::Attr(None),
        _ => {
            let start = Instant::month(rng.gen_range(1999..=2001), rng.gen_range(1..=12) as u8)
                .unwrap();
            let len = rng.gen_range(0..=5);
            let domain = TemporalDomain::from_interval(
                Interval::new(start, start.offset(len)).unwrap(),
            );
            DomRef::Lit(domain)
        }
    }
}

/// Random predicate; `mapping` restricts atoms to the mapping subset
/// (no temporal tests, reference equality allowed).
pub fn gen_pred(rng: &mut TestRng, depth: usize, mapping: bool) -> Pred {
    if depth > 0 && rng.gen_bool(0.4) {
        let a = gen_pred(rng, depth - 1, mapping);
        let b = gen_pred(rng, depth - 1, mapping);
        return match rng.gen_range(0..3) {
            0 => Pred::And(Box::new(a), Box::new(b)),
            1 => Pred::Or(Box::new(a), Box::new(b)),
            _ => Pred::Not(Box::new(a)),
        };
    }
    match rng.gen_range(0..if mapping { 3 } else { 4 }) {
        0 => Pred::Bool(rng.gen()),
        1 => Pred::Cmp {
            left: Operand::Attr(gen_attr_ref(rng, true)),
            op: *pick(
                rng,
                &[&CmpOp::Eq, &CmpOp::Ne, &CmpOp::Lt, &CmpOp::Le, &CmpOp::Gt, &CmpOp::Ge],
            ),
            right: Operand::Lit(gen_scalar(rng)),
        },
        2 => {
            if mapping {
                Pred::Cmp {
                    left: Operand::Attr(AttrRef::qualified(
                        pick(rng, VARS).to_string(),
                        pick(rng, &["parametres", "patient"]).to_string(),
                    )),
                    op: CmpOp::Eq,
                    right: Operand::Var(pick(rng, VARS).to_string()),
                }
            } else {
                Pred::Cmp {
                    left: Operand::Attr(gen_attr_ref(rng, true)),
                    op: CmpOp::Lt,
                    right: Operand::Attr(gen_attr_ref(rng, true)),
                }
            }
        }
        _ => Pred::Allen {
            rel: *pick(
                rng,
                &[
                    &twq_core::model::WindowRel::Contains,
                    &twq_core::model::WindowRel::Allen(twq_core::temporal::AllenRelation::Precedes),
                    &twq_core::model::WindowRel::Allen(twq_core::temporal::AllenRelation::Overlaps),
                    &twq_core::model::WindowRel::Allen(twq_core::temporal::AllenRelation::Equals),
                ],
            ),
            left: gen_dom_ref(rng),
            right: gen_dom_ref(rng),
        },
    }
}

fn gen_dom_lit(rng: &mut TestRng) -> DomLit {
    let y = rng.gen_range(1999..=2001);
    let m = rng.gen_range(1..=12) as u8;
    let from = Instant::month(y, m).unwrap();
    let use_paper_fmt = rng.gen_bool(0.5);
    let fmt_text = |i: Instant| -> String {
        let canonical = i.to_string();
        if use_paper_fmt {
            let (y, m) = canonical.split_once('-').unwrap();
            format!("{m}-{y}")
        } else {
            canonical
        }
    };
    let fmt = use_paper_fmt.then(|| "mm-aaaa".to_string());
    if rng.gen_bool(0.5) {
        DomLit {
            form: DomLitForm::Date,
            texts: vec![fmt_text(from)],
            fmt,
            domain: TemporalDomain::singleton(from),
        }
    } else {
        let span = rng.gen_range(1..=8);
        let to = from.offset(span);
        DomLit {
            form: DomLitForm::DomT,
            texts: vec![fmt_text(from), fmt_text(to)],
            fmt,
            domain: TemporalDomain::from_interval(Interval::new(from, to.pred()).unwrap()),
        }
    }
}

fn gen_agg_entries(rng: &mut TestRng) -> Vec<AggEntry> {
    let n = rng.gen_range(1..=2);
    (0..n)
        .map(|_| {
            let target = pick(rng, ATTRS).to_string();
            let func = pick(rng, &["avg", "sum", "count", "max", "min", "t_avg"]).to_string();
            let arg = rng.gen_bool(0.7).then(|| target.clone());
            AggEntry { target, func, arg }
        })
        .collect()
}

fn gen_unit(rng: &mut TestRng) -> (TemporalUnit, String) {
    let table: &[(TemporalUnit, &str)] = &[
        (TemporalUnit::Month, "month"),
        (TemporalUnit::Quarter, "quarter"),
        (TemporalUnit::Quarter, "'trimestre'"),
        (TemporalUnit::Semester, "semester"),
        (TemporalUnit::Year, "year"),
        (TemporalUnit::Year, "'année'"),
    ];
    let (u, t) = table[rng.gen_range(0..table.len())];
    (u, t.to_string())
}

fn gen_bound(rng: &mut TestRng, depth: usize) -> BoundQuery {
    BoundQuery {
        var: rng
            .gen_bool(0.7)
            .then(|| pick(rng, VARS).to_string()),
        expr: Box::new(gen_query(rng, depth)),
    }
}

/// Random query tree of bounded depth.
pub fn gen_query(rng: &mut TestRng, depth: usize) -> QueryExpr {
    if depth == 0 {
        return QueryExpr::ClassRef(pick(rng, CLASSES).to_string());
    }
    let d = depth - 1;
    match rng.gen_range(0..18) {
        0 => QueryExpr::Select {
            input: gen_bound(rng, d),
            pred: gen_pred(rng, 2, false),
        },
        1 => {
            let n = rng.gen_range(1..=3);
            QueryExpr::Project {
                input: gen_bound(rng, d),
                items: (0..n)
                    .map(|_| ProjItem {
                        alias: rng.gen_bool(0.3).then(|| pick(rng, ATTRS).to_string()),
                        path: gen_attr_ref(rng, true),
                    })
                    .collect(),
            }
        }
        2 => QueryExpr::Join {
            left: gen_bound(rng, d),
            right: gen_bound(rng, d),
            pred: gen_pred(rng, 1, false),
        },
        3 => QueryExpr::SetOp {
            op: *pick(
                rng,
                &[
                    &SetOpName::VUnion,
                    &SetOpName::VIntersect,
                    &SetOpName::VDifference,
                    &SetOpName::IUnion,
                    &SetOpName::IIntersect,
                    &SetOpName::IDifference,
                ],
            ),
            left: Box::new(gen_query(rng, d)),
            right: Box::new(gen_query(rng, d)),
        },
        4 => QueryExpr::Flatten(Box::new(gen_query(rng, d))),
        5 => QueryExpr::DupElim(Box::new(gen_query(rng, d))),
        6 => QueryExpr::EmptyElim(Box::new(gen_query(rng, d))),
        7 => QueryExpr::Current(Box::new(gen_query(rng, d))),
        8 => QueryExpr::Past(Box::new(gen_query(rng, d))),
        9 => QueryExpr::Archive(Box::new(gen_query(rng, d))),
        10 => QueryExpr::State {
            input: Box::new(gen_query(rng, d)),
            window: gen_dom_lit(rng),
            rel: *pick(
                rng,
                &[
                    &twq_core::model::WindowRel::Contains,
                    &twq_core::model::WindowRel::Allen(twq_core::temporal::AllenRelation::Equals),
                    &twq_core::model::WindowRel::Allen(twq_core::temporal::AllenRelation::Precedes),
                    &twq_core::model::WindowRel::Allen(twq_core::temporal::AllenRelation::During),
                ],
            ),
        },
        11 => QueryExpr::IJoin {
            left: gen_bound(rng, d),
            right: gen_bound(rng, d),
            pred: gen_pred(rng, 1, false),
        },
        12 => QueryExpr::UJoin {
            left: gen_bound(rng, d),
            right: gen_bound(rng, d),
            pred: gen_pred(rng, 1, false),
        },
        13 => {
            let (unit, unit_text) = gen_unit(rng);
            QueryExpr::UGroup {
                input: Box::new(gen_query(rng, d)),
                unit,
                unit_text,
            }
        }
        14 => QueryExpr::DGroup {
            input: Box::new(gen_query(rng, d)),
            duration: Duration::new(rng.gen_range(1..=6), TemporalUnit::Month).unwrap(),
        },
        15 => QueryExpr::MakeSerie(Box::new(gen_query(rng, d))),
        16 => match rng.gen_range(0..4) {
            0 => QueryExpr::Agreg {
                input: Box::new(gen_query(rng, d)),
                entries: gen_agg_entries(rng),
            },
            1 => QueryExpr::ACum {
                input: Box::new(gen_query(rng, d)),
                entries: gen_agg_entries(rng),
            },
            2 => QueryExpr::AMove {
                input: Box::new(gen_query(rng, d)),
                entries: gen_agg_entries(rng),
                duration: Duration::new(rng.gen_range(1..=6), TemporalUnit::Month).unwrap(),
            },
            _ => {
                let (unit, unit_text) = gen_unit(rng);
                if rng.gen_bool(0.5) {
                    QueryExpr::ScaleUp {
                        input: Box::new(gen_query(rng, d)),
                        unit,
                        unit_text,
                        entries: gen_agg_entries(rng),
                    }
                } else {
                    QueryExpr::ScaleDown {
                        input: Box::new(gen_query(rng, d)),
                        unit,
                        unit_text,
                        entries: gen_agg_entries(rng),
                    }
                }
            }
        },
        _ => {
            if rng.gen_bool(0.5) {
                QueryExpr::Nest {
                    input: Box::new(gen_query(rng, d)),
                    attr: pick(rng, ATTRS).to_string(),
                }
            } else {
                QueryExpr::UnNest {
                    input: Box::new(gen_query(rng, d)),
                    attr: pick(rng, ATTRS).to_string(),
                }
            }
        }
    }
}

fn gen_type(rng: &mut TestRng, depth: usize) -> DeclaredType {
    match rng.gen_range(0..if depth > 0 { 7 } else { 5 }) {
        0 => DeclaredType::Str,
        1 => DeclaredType::Int,
        2 => DeclaredType::Dec,
        3 => DeclaredType::Bool,
        4 => DeclaredType::Date,
        5 => DeclaredType::List(Box::new(gen_type(rng, 0))),
        _ => DeclaredType::Record {
            name: rng.gen_bool(0.7).then(|| "T_tension".to_string()),
            fields: vec![
                ("min".to_string(), DeclaredType::Int),
                ("max".to_string(), DeclaredType::Int),
            ],
        },
    }
}

fn gen_mapping(rng: &mut TestRng, depth: usize) -> MappingExpr {
    if depth == 0 {
        return MappingExpr::Source(pick(rng, CLASSES).to_string());
    }
    let d = depth - 1;
    let operand = |rng: &mut TestRng, d: usize| {
        BoundExpr::new(
            rng.gen_bool(0.6).then(|| pick(rng, VARS).to_string()),
            gen_mapping(rng, d),
        )
    };
    match rng.gen_range(0..4) {
        0 => MappingExpr::Select {
            input: operand(rng, d),
            predicate: gen_pred(rng, 1, true),
        },
        1 => MappingExpr::Join {
            left: operand(rng, d),
            right: operand(rng, d),
            predicate: gen_pred(rng, 1, true),
        },
        2 => {
            let n = rng.gen_range(1..=3);
            MappingExpr::Project {
                input: operand(rng, d),
                targets: (0..n)
                    .map(|_| (pick(rng, ATTRS).to_string(), gen_attr_ref(rng, true)))
                    .collect(),
            }
        }
        _ => MappingExpr::Combine {
            op: *pick(
                rng,
                &[
                    &SetCombine::Union,
                    &SetCombine::Intersect,
                    &SetCombine::Difference,
                ],
            ),
            left: operand(rng, d),
            right: operand(rng, d),
        },
    }
}

fn gen_rule(rng: &mut TestRng, env: &str) -> ConfigRule {
    let state_var = "T".to_string();
    let condition = if rng.gen_bool(0.7) {
        RuleCondition::Selection {
            state_var: state_var.clone(),
            object_var: "P".to_string(),
            class_name: pick(rng, CLASSES).to_string(),
            predicate: gen_pred(rng, 1, false),
        }
    } else {
        RuleCondition::Bool(gen_pred(rng, 1, false))
    };
    ConfigRule {
        name: format!("rule_{}", rng.gen_range(0..100)),
        environment: env.to_string(),
        event: RuleEvent::Refresh,
        condition,
        action: RuleAction::Archive { state_var },
    }
}

/// Random schema document.
pub fn gen_ddl(rng: &mut TestRng) -> DdlDocument {
    let n_classes = rng.gen_range(1..=3);
    let mut classes = Vec::new();
    for i in 0..n_classes {
        let n_attrs = rng.gen_range(1..=5);
        let attributes: Vec<AttributeDecl> = (0..n_attrs)
            .map(|j| AttributeDecl {
                name: format!("{}{}", pick(rng, ATTRS), j),
                ty: gen_type(rng, 1),
            })
            .collect();
        let relationships = if rng.gen_bool(0.3) {
            vec![RelationshipDecl {
                name: "parametres".to_string(),
                target: pick(rng, CLASSES).to_string(),
                inverse: rng.gen_bool(0.5).then(|| {
                    (pick(rng, CLASSES).to_string(), "patient".to_string())
                }),
            }]
        } else {
            vec![]
        };
        let operations = if rng.gen_bool(0.3) {
            vec![OperationDecl {
                name: "age".to_string(),
                return_type: "Integer".to_string(),
            }]
        } else {
            vec![]
        };
        let temporal_filter = TemporalFilter {
            entries: attributes
                .iter()
                .take(rng.gen_range(0..=n_attrs))
                .map(|a| TemporalFilterEntry {
                    property: a.name.clone(),
                    source: if rng.gen_bool(0.9) {
                        PropertySource::Attribute(a.name.clone())
                    } else {
                        PropertySource::Operation("age".to_string())
                    },
                })
                .collect(),
        };
        let archive_filter = if !temporal_filter.entries.is_empty() && rng.gen_bool(0.6) {
            let moderate = rng.gen_bool(0.5);
            ArchiveFilter {
                entries: vec![ArchiveFilterEntry {
                    attribute: temporal_filter.entries[0].property.clone(),
                    func: AggregationFn::parse(if moderate { "t_avg" } else { "avg" }).unwrap(),
                    arg: rng
                        .gen_bool(0.7)
                        .then(|| temporal_filter.entries[0].property.clone()),
                }],
                grain: moderate.then(|| ArchiveGrain {
                    unit: TemporalUnit::Month,
                    count: rng.gen_range(1..=6) * 2,
                }),
            }
        } else {
            ArchiveFilter::default()
        };
        classes.push(WarehouseClass {
            name: format!("C{i}"),
            attributes,
            relationships,
            operations,
            super_names: if rng.gen_bool(0.2) {
                vec![pick(rng, CLASSES).to_string()]
            } else {
                vec![]
            },
            mapping: rng.gen_bool(0.5).then(|| gen_mapping(rng, 2)),
            temporal_filter,
            archive_filter,
            is_source: rng.gen_bool(0.2),
        });
    }
    let environments = vec![Environment {
        name: "Evolution".to_string(),
        class_names: classes.iter().map(|c| c.name.clone()).collect(),
        rules: vec![],
    }];
    let rules = (0..rng.gen_range(0..=2))
        .map(|_| gen_rule(rng, "Evolution"))
        .collect();
    DdlDocument {
        warehouse_name: rng.gen_bool(0.5).then(|| "entrepot".to_string()),
        classes,
        environments,
        rules,
        configs: if rng.gen_bool(0.3) {
            vec![("retention".to_string(), Scalar::Int(rng.gen_range(1..60)))]
        } else {
            vec![]
        },
    }
}
