//! Aggregation arithmetic shared by archival and the series operators.
//!
//! `count` counts contributions; `sum`/`avg` need numeric slots; `min`
//! and `max` return one of the inputs. Composite records aggregate
//! componentwise.

use std::collections::BTreeMap;

use super::{AggKind, AttrValue, ModelError, Scalar};

pub fn aggregate_values(kind: AggKind, slots: &[&AttrValue]) -> Result<AttrValue, ModelError> {
    if kind == AggKind::Count {
        return Ok(AttrValue::Scalar(Scalar::Int(slots.len() as i64)));
    }
    if slots.is_empty() {
        return Err(ModelError::PredicateType(
            "cannot aggregate an empty contribution set".into(),
        ));
    }
    if slots.iter().all(|s| matches!(s, AttrValue::Record(_))) {
        return aggregate_records(kind, slots);
    }
    let scalars: Vec<&Scalar> = slots
        .iter()
        .map(|s| {
            s.as_scalar().ok_or_else(|| {
                ModelError::PredicateType(format!("cannot aggregate a {} slot", s.kind()))
            })
        })
        .collect::<Result<_, _>>()?;
    aggregate_scalars(kind, &scalars).map(AttrValue::Scalar)
}

fn aggregate_records(kind: AggKind, slots: &[&AttrValue]) -> Result<AttrValue, ModelError> {
    let first = match slots[0] {
        AttrValue::Record(fields) => fields,
        _ => unreachable!(),
    };
    let mut out = BTreeMap::new();
    for field in first.keys() {
        let mut column = Vec::with_capacity(slots.len());
        for slot in slots {
            let AttrValue::Record(fields) = slot else {
                unreachable!()
            };
            let v = fields.get(field).ok_or_else(|| {
                ModelError::MissingAttribute(format!("composite field {field}"))
            })?;
            column.push(v);
        }
        out.insert(field.clone(), aggregate_values(kind, &column)?);
    }
    Ok(AttrValue::Record(out))
}

fn aggregate_scalars(kind: AggKind, scalars: &[&Scalar]) -> Result<Scalar, ModelError> {
    match kind {
        AggKind::Count => Ok(Scalar::Int(scalars.len() as i64)),
        AggKind::Sum | AggKind::Avg => {
            let mut sum = 0.0f64;
            let mut all_int = true;
            for s in scalars {
                match s {
                    Scalar::Int(i) => sum += *i as f64,
                    Scalar::Dec(d) => {
                        sum += d.0;
                        all_int = false;
                    }
                    other => {
                        return Err(ModelError::PredicateType(format!(
                            "cannot {} over {} values",
                            kind.name(),
                            other.kind()
                        )))
                    }
                }
            }
            if kind == AggKind::Avg {
                // averages stay decimal, never rounded in storage
                Ok(Scalar::dec(sum / scalars.len() as f64))
            } else if all_int {
                Ok(Scalar::Int(sum as i64))
            } else {
                Ok(Scalar::dec(sum))
            }
        }
        AggKind::Min | AggKind::Max => {
            let mut best = scalars[0];
            for s in &scalars[1..] {
                let ord = match (best.numeric(), s.numeric()) {
                    (Some(a), Some(b)) => a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal),
                    _ => {
                        if best.kind() != s.kind() {
                            return Err(ModelError::PredicateType(format!(
                                "cannot order {} against {}",
                                best.kind(),
                                s.kind()
                            )));
                        }
                        best.cmp(s)
                    }
                };
                let replace = match kind {
                    AggKind::Min => ord == std::cmp::Ordering::Greater,
                    AggKind::Max => ord == std::cmp::Ordering::Less,
                    _ => unreachable!(),
                };
                if replace {
                    best = s;
                }
            }
            Ok((*best).clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(values: &[i64]) -> Vec<AttrValue> {
        values.iter().map(|i| AttrValue::Scalar(Scalar::Int(*i))).collect()
    }

    #[test]
    fn avg_of_integers_is_decimal() {
        let slots = ints(&[80, 79, 80, 77]);
        let refs: Vec<&AttrValue> = slots.iter().collect();
        assert_eq!(
            aggregate_values(AggKind::Avg, &refs).unwrap(),
            AttrValue::Scalar(Scalar::dec(79.0))
        );
    }

    #[test]
    fn sum_of_integers_stays_integer() {
        let slots = ints(&[1, 2, 3]);
        let refs: Vec<&AttrValue> = slots.iter().collect();
        assert_eq!(
            aggregate_values(AggKind::Sum, &refs).unwrap(),
            AttrValue::Scalar(Scalar::Int(6))
        );
    }

    #[test]
    fn records_aggregate_componentwise() {
        let mk = |min: i64, max: i64| {
            let mut m = BTreeMap::new();
            m.insert("min".to_string(), AttrValue::Scalar(Scalar::Int(min)));
            m.insert("max".to_string(), AttrValue::Scalar(Scalar::Int(max)));
            AttrValue::Record(m)
        };
        let slots = [mk(10, 16), mk(8, 15)];
        let refs: Vec<&AttrValue> = slots.iter().collect();
        let out = aggregate_values(AggKind::Max, &refs).unwrap();
        assert_eq!(out, mk(10, 16));
    }

    #[test]
    fn strings_do_not_sum() {
        let slot = AttrValue::Scalar(Scalar::Str("a".into()));
        assert!(aggregate_values(AggKind::Sum, &[&slot]).is_err());
        assert_eq!(
            aggregate_values(AggKind::Min, &[&slot]).unwrap(),
            slot
        );
    }
}
