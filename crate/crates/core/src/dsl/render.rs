//! Result rendering: the bracketed paper-style text and a structured
//! JSON form, selected by CLI flag.
//!
//! Paper style renders instants at month granularity (`mm-aaaa`),
//! expanding coarser units to their month span, prints decimals with a
//! comma and truncates them to one decimal place.

use crate::algebra::{AState, Collection, Series, Tuple};
use crate::model::{AttrValue, Scalar, Value, WarehouseObject, WarehouseStore};
use crate::temporal::{Instant, Interval, TemporalDomain, TemporalUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Paper,
    Json,
}

/// Truncation (not rounding) to one decimal, comma separator; whole
/// values print bare: 79.0 -> `79`, 79.67 -> `79,6`.
pub fn paper_decimal(v: f64) -> String {
    let scaled = (v * 10.0).trunc() as i64;
    let int = scaled / 10;
    let frac = (scaled % 10).abs();
    if frac == 0 {
        format!("{int}")
    } else {
        format!("{int},{frac}")
    }
}

fn paper_instant(i: Instant) -> String {
    match i.unit() {
        TemporalUnit::Month => {
            let s = i.to_string();
            let (y, m) = s.split_once('-').expect("canonical month form");
            format!("{m}-{y}")
        }
        TemporalUnit::Day => {
            let s = i.to_string();
            let mut parts = s.splitn(3, '-');
            let y = parts.next().unwrap();
            let m = parts.next().unwrap();
            let d = parts.next().unwrap();
            format!("{d}-{m}-{y}")
        }
        _ => paper_instant(
            i.convert_grain(TemporalUnit::Month)
                .expect("coarse units expand to months")
                .start(),
        ),
    }
}

fn paper_interval(iv: Interval) -> String {
    let (start, end) = match iv.unit() {
        TemporalUnit::Month | TemporalUnit::Day => (iv.start(), iv.end()),
        _ => {
            let s = iv
                .start()
                .convert_grain(TemporalUnit::Month)
                .expect("expansion");
            let e = iv
                .end()
                .convert_grain(TemporalUnit::Month)
                .expect("expansion");
            (s.start(), e.end())
        }
    };
    format!("[{};{}]", paper_instant(start), paper_instant(end))
}

pub fn paper_domain(d: &TemporalDomain) -> String {
    let body: Vec<String> = d.intervals().iter().map(|iv| paper_interval(*iv)).collect();
    format!("<{}>", body.join(";"))
}

fn paper_open_domain(d: &TemporalDomain) -> String {
    let start = d.first().expect("current domains are non-empty");
    let iv = Interval::singleton(start);
    let rendered = paper_interval(iv);
    let from = rendered[1..].split(';').next().unwrap().to_string();
    format!("<[{from};*]>")
}

fn paper_scalar(s: &Scalar) -> String {
    match s {
        Scalar::Int(i) => i.to_string(),
        Scalar::Dec(d) => paper_decimal(d.0),
        Scalar::Str(t) => t.clone(),
        Scalar::Bool(b) => b.to_string(),
    }
}

fn paper_attr(v: &AttrValue) -> String {
    match v {
        AttrValue::Scalar(s) => paper_scalar(s),
        AttrValue::Record(fields) => {
            let body: Vec<String> = fields
                .iter()
                .map(|(k, v)| format!("{k}={}", paper_attr(v)))
                .collect();
            format!("[{}]", body.join(" ; "))
        }
        AttrValue::List(items) => {
            let body: Vec<String> = items.iter().map(paper_scalar).collect();
            format!("({})", body.join(", "))
        }
        AttrValue::Ref(oid) => format!("@{oid}"),
    }
}

fn paper_value_body(v: &Value) -> String {
    v.0.iter()
        .map(|(k, v)| format!("{k}={}", paper_attr(v)))
        .collect::<Vec<String>>()
        .join(" ; ")
}

pub fn paper_value(v: &Value) -> String {
    format!("[{}]", paper_value_body(v))
}

fn paper_state(s: &AState) -> String {
    let domain = if s.open_end {
        paper_open_domain(&s.domain)
    } else {
        paper_domain(&s.domain)
    };
    if s.value.is_empty() {
        format!("[domT={domain}]")
    } else {
        format!("[{} ; domT={domain}]", paper_value_body(&s.value))
    }
}

fn paper_tuple(t: &Tuple) -> String {
    match t {
        Tuple::Window { window, values } => {
            let vs: Vec<String> = values.iter().map(paper_value).collect();
            format!(
                "[window={} ; values={{{}}}]",
                paper_interval(*window),
                vs.join(" ; ")
            )
        }
        Tuple::Pair {
            value,
            left_domain,
            right_domain,
        } => {
            let mut body = paper_value_body(value);
            if let Some(d) = left_domain {
                body.push_str(&format!(" ; left.domT={}", paper_domain(d)));
            }
            if let Some(d) = right_domain {
                body.push_str(&format!(" ; right.domT={}", paper_domain(d)));
            }
            format!("[{body}]")
        }
    }
}

fn paper_series(sr: &Series) -> String {
    let body: Vec<String> = sr
        .elements()
        .iter()
        .map(|e| {
            format!(
                "[{} ; domT=<{}>]",
                paper_value_body(&e.value),
                paper_interval(e.interval)
            )
        })
        .collect();
    format!("<{}>", body.join(" ;\n"))
}

pub fn render_collection(c: &Collection, mode: OutputMode) -> String {
    match mode {
        OutputMode::Paper => render_paper(c),
        OutputMode::Json => collection_json(c).to_string(),
    }
}

fn render_paper(c: &Collection) -> String {
    match c {
        Collection::Objects(oids) => oids.join("\n"),
        Collection::States(states) => {
            let body: Vec<String> = states.iter().map(paper_state).collect();
            format!("{{{}}}", body.join(" ;\n"))
        }
        Collection::StateSets(sets) => {
            let body: Vec<String> = sets
                .iter()
                .map(|inner| {
                    let items: Vec<String> = inner.iter().map(paper_state).collect();
                    format!("{{{}}}", items.join(" ;\n"))
                })
                .collect();
            format!("{{{}}}", body.join(" ;\n"))
        }
        Collection::Tuples(tuples) => {
            let body: Vec<String> = tuples.iter().map(paper_tuple).collect();
            format!("{{{}}}", body.join(" ;\n"))
        }
        Collection::Series(sr) => paper_series(sr),
        Collection::Value(v) => paper_value(v),
    }
}

fn state_json(s: &AState) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    m.insert("value".into(), s.value.to_json());
    let domain = if s.open_end {
        format!("<[{},*]>", s.domain.first().expect("non-empty"))
    } else {
        s.domain.to_string()
    };
    m.insert("domain".into(), domain.into());
    if let Some(owner) = &s.owner {
        m.insert("owner".into(), owner.clone().into());
    }
    if let Some(role) = s.role {
        m.insert("role".into(), role.name().into());
    }
    serde_json::Value::Object(m)
}

fn collection_json(c: &Collection) -> serde_json::Value {
    use serde_json::json;
    match c {
        Collection::Objects(oids) => json!({"kind": "objects", "items": oids}),
        Collection::States(states) => json!({
            "kind": "states",
            "items": states.iter().map(state_json).collect::<Vec<_>>(),
        }),
        Collection::StateSets(sets) => json!({
            "kind": "state_sets",
            "items": sets
                .iter()
                .map(|inner| inner.iter().map(state_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        Collection::Tuples(tuples) => json!({
            "kind": "tuples",
            "items": tuples
                .iter()
                .map(|t| match t {
                    Tuple::Window { window, values } => json!({
                        "window": window.to_string(),
                        "values": values.iter().map(|v| v.to_json()).collect::<Vec<_>>(),
                    }),
                    Tuple::Pair { value, left_domain, right_domain } => json!({
                        "value": value.to_json(),
                        "left_domain": left_domain.as_ref().map(|d| d.to_string()),
                        "right_domain": right_domain.as_ref().map(|d| d.to_string()),
                    }),
                })
                .collect::<Vec<_>>(),
        }),
        Collection::Series(sr) => json!({
            "kind": "series",
            "items": sr
                .elements()
                .iter()
                .map(|e| json!({
                    "value": e.value.to_json(),
                    "interval": e.interval.to_string(),
                }))
                .collect::<Vec<_>>(),
        }),
        Collection::Value(v) => json!({"kind": "value", "value": v.to_json()}),
    }
}

/// Renders one object's full history for the `show` command.
pub fn render_object(store: &WarehouseStore, obj: &WarehouseObject, mode: OutputMode) -> String {
    match mode {
        OutputMode::Paper => {
            let mut out = format!(
                "object {} (class {}{})\n",
                obj.oid,
                obj.class,
                if obj.active { "" } else { ", inactive" }
            );
            out.push_str(&format!(
                "current since {}: {}\n",
                obj.current.since,
                paper_value(&obj.current.value)
            ));
            let _ = store;
            out.push_str("past:\n");
            if obj.past.is_empty() {
                out.push_str("(none)\n");
            }
            for s in &obj.past {
                out.push_str(&format!(
                    "[{} ; domT={}]\n",
                    paper_value_body(&s.value),
                    paper_domain(&s.domain)
                ));
            }
            out.push_str("archive:\n");
            if obj.archive.is_empty() {
                out.push_str("(none)\n");
            }
            for s in &obj.archive {
                out.push_str(&format!(
                    "[{} ; domT={}]\n",
                    paper_value_body(&s.value),
                    paper_domain(&s.domain)
                ));
            }
            out
        }
        OutputMode::Json => {
            use serde_json::json;
            json!({
                "oid": obj.oid,
                "class": obj.class,
                "active": obj.active,
                "current": {"value": obj.current.value.to_json(), "since": obj.current.since.to_string()},
                "past": obj.past.iter().map(|s| json!({
                    "value": s.value.to_json(),
                    "domain": s.domain.to_string(),
                })).collect::<Vec<_>>(),
                "archive": obj.archive.iter().map(|s| json!({
                    "value": s.value.to_json(),
                    "domain": s.domain.to_string(),
                })).collect::<Vec<_>>(),
            })
            .to_string()
        }
    }
}
