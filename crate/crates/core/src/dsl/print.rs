//! Canonical printers; printed text reparses to an equal document or
//! query.

use crate::extraction::{BoundExpr, MappingExpr};
use crate::model::{
    AttrRef, ConfigRule, DeclaredType, DomRef, Operand, Pred, PropertySource, RuleAction,
    RuleCondition, Scalar, SubRef, WarehouseClass,
};

use super::ast::{BoundQuery, DdlDocument, DomLit, DomLitForm, ProjItem, QueryExpr};

pub fn print_ddl(doc: &DdlDocument) -> String {
    let mut out = String::new();
    if let Some(name) = &doc.warehouse_name {
        out.push_str(&format!("warehouse {name} ;\n\n"));
    }
    for (key, value) in &doc.configs {
        out.push_str(&format!("config {key} = {} ;\n", print_scalar(value)));
    }
    for class in &doc.classes {
        out.push_str(&print_class(class));
        out.push('\n');
    }
    for env in &doc.environments {
        out.push_str(&format!(
            "environment {} {{ {} }}\n\n",
            env.name,
            env.class_names.join(", ")
        ));
    }
    for rule in &doc.rules {
        out.push_str(&print_rule(rule));
        out.push('\n');
    }
    out
}

fn print_type(ty: &DeclaredType) -> String {
    match ty {
        DeclaredType::Str => "String".into(),
        DeclaredType::Int => "Integer".into(),
        DeclaredType::Dec => "Real".into(),
        DeclaredType::Bool => "Boolean".into(),
        DeclaredType::Date => "Date".into(),
        DeclaredType::List(inner) => format!("List<{}>", print_type(inner)),
        DeclaredType::Record { name, fields } => {
            let fields: Vec<String> = fields
                .iter()
                .map(|(n, t)| format!("{} {n}", print_type(t)))
                .collect();
            match name {
                Some(n) => format!("Struct {n} {{{}}}", fields.join(", ")),
                None => format!("Struct {{{}}}", fields.join(", ")),
            }
        }
        DeclaredType::Ref(c) => c.clone(),
    }
}

fn print_class(class: &WarehouseClass) -> String {
    let mut out = String::new();
    if class.is_source {
        out.push_str("source ");
    }
    out.push_str(&format!("interface {}", class.name));
    if !class.super_names.is_empty() {
        out.push_str(&format!(" : {}", class.super_names.join(", ")));
    }
    out.push_str(" {\n");
    for attr in &class.attributes {
        out.push_str(&format!("    attribute {} {} ;\n", print_type(&attr.ty), attr.name));
    }
    for rel in &class.relationships {
        out.push_str(&format!("    relationship {} {}", rel.target, rel.name));
        if let Some((cls, inv)) = &rel.inverse {
            out.push_str(&format!(" inverse {cls}::{inv}"));
        }
        out.push_str(" ;\n");
    }
    for op in &class.operations {
        out.push_str(&format!("    {} {} () ;\n", op.return_type, op.name));
    }
    out.push('}');

    let mut clauses: Vec<String> = Vec::new();
    if !class.temporal_filter.entries.is_empty() {
        let entries: Vec<String> = class
            .temporal_filter
            .entries
            .iter()
            .map(|e| match &e.source {
                PropertySource::Attribute(a) => format!("({}, {a})", e.property),
                PropertySource::Operation(o) => format!("({}, {o}())", e.property),
            })
            .collect();
        clauses.push(format!("temporal filter {{{}}}", entries.join(", ")));
    }
    if !class.archive_filter.entries.is_empty() {
        let entries: Vec<String> = class
            .archive_filter
            .entries
            .iter()
            .map(|e| match &e.arg {
                Some(arg) => format!("({}, {}({arg}))", e.attribute, e.func.name()),
                None => format!("({}, {})", e.attribute, e.func.name()),
            })
            .collect();
        let mut clause = format!("archive filter {{{}}}", entries.join(", "));
        if let Some(grain) = &class.archive_filter.grain {
            clause.push_str(&format!(" by {}({})", grain.unit, grain.count));
        }
        clauses.push(clause);
    }
    if let Some(mapping) = &class.mapping {
        clauses.push(format!("mapping {}", print_mapping(mapping)));
    }
    if !clauses.is_empty() {
        out.push_str("\nwith ");
        out.push_str(&clauses.join(",\n     "));
    }
    out.push_str(" ;\n");
    out
}

pub fn print_rule(rule: &ConfigRule) -> String {
    let condition = match &rule.condition {
        RuleCondition::Bool(p) => print_pred(p),
        RuleCondition::Selection {
            state_var,
            object_var,
            class_name,
            predicate,
        } => format!(
            "select {state_var} from {object_var} in {class_name}, {state_var} in {object_var}.PastStates() where {}",
            print_pred(predicate)
        ),
    };
    let RuleAction::Archive { state_var } = &rule.action;
    format!(
        "rule {} on {}\nwhen self.refresh()\nif {}\nthen {}.archive() ;\n",
        rule.name, rule.environment, condition, state_var
    )
}

fn print_scalar(s: &Scalar) -> String {
    match s {
        Scalar::Int(i) => i.to_string(),
        Scalar::Dec(d) => {
            let v = d.0;
            if v.fract() == 0.0 {
                format!("{v:.1}")
            } else {
                format!("{v}")
            }
        }
        Scalar::Str(s) => format!("\"{s}\""),
        Scalar::Bool(b) => b.to_string(),
    }
}

fn print_path(r: &AttrRef) -> String {
    let mut out = String::new();
    if let Some(q) = &r.qualifier {
        out.push_str(q);
        out.push('.');
    }
    out.push_str(&r.attr);
    match &r.sub {
        Some(SubRef::Field(f)) => out.push_str(&format!(".{f}")),
        Some(SubRef::Index(i)) => out.push_str(&format!("[{i}]")),
        None => {}
    }
    out
}

fn print_operand(o: &Operand) -> String {
    match o {
        Operand::Attr(r) => print_path(r),
        Operand::Lit(s) => print_scalar(s),
        Operand::Var(v) => v.clone(),
    }
}

fn print_dom_ref(d: &DomRef) -> String {
    match d {
        DomRef::Attr(None) => "domT".into(),
        DomRef::Attr(Some(var)) => format!("{var}.domT"),
        // bare domain literals print as a Date/DomT call over canonical
        // instants
        DomRef::Lit(dom) => {
            if dom.grain_count() == 1 {
                format!("Date('{}')", dom.first().unwrap())
            } else {
                let iv = dom.intervals()[0];
                format!("DomT('{}', '{}')", iv.start(), iv.end().succ())
            }
        }
    }
}

/// Precedence: or < and < not < atom.
pub fn print_pred(p: &Pred) -> String {
    print_pred_prec(p, 0)
}

fn print_pred_prec(p: &Pred, min: u8) -> String {
    let (text, prec) = match p {
        Pred::Bool(b) => (b.to_string(), 3),
        Pred::Cmp { left, op, right } => (
            format!("{} {} {}", print_operand(left), op.symbol(), print_operand(right)),
            3,
        ),
        Pred::Allen { rel, left, right } => (
            format!("{}({}, {})", rel.name(), print_dom_ref(left), print_dom_ref(right)),
            3,
        ),
        Pred::Not(inner) => (format!("not {}", print_pred_prec(inner, 2)), 2),
        Pred::And(a, b) => (
            format!("{} ^ {}", print_pred_prec(a, 1), print_pred_prec(b, 2)),
            1,
        ),
        Pred::Or(a, b) => (
            format!("{} or {}", print_pred_prec(a, 0), print_pred_prec(b, 1)),
            0,
        ),
    };
    if prec < min {
        format!("({text})")
    } else {
        text
    }
}

pub fn print_mapping(m: &MappingExpr) -> String {
    match m {
        MappingExpr::Source(class) => format!("SOURCE({class})"),
        MappingExpr::Select { input, predicate } => format!(
            "SELECT({}, {})",
            print_mapping_operand(input),
            print_pred(predicate)
        ),
        MappingExpr::Join {
            left,
            right,
            predicate,
        } => format!(
            "JOIN({}, {}, {})",
            print_mapping_operand(left),
            print_mapping_operand(right),
            print_pred(predicate)
        ),
        MappingExpr::Project { input, targets } => {
            let ts: Vec<String> = targets
                .iter()
                .map(|(t, p)| format!("{t} : {}", print_path(p)))
                .collect();
            format!(
                "PROJECT({}, {{{}}})",
                print_mapping_operand(input),
                ts.join(", ")
            )
        }
        MappingExpr::Combine { op, left, right } => format!(
            "{}({}, {})",
            op.name(),
            print_mapping_operand(left),
            print_mapping_operand(right)
        ),
    }
}

fn print_mapping_operand(b: &BoundExpr) -> String {
    let expr = match b.expr.as_ref() {
        // a bound bare source prints as `var Class`
        MappingExpr::Source(class) if b.var.is_some() => class.clone(),
        other => print_mapping(other),
    };
    match &b.var {
        Some(var) => format!("{var} {expr}"),
        None => expr,
    }
}

fn print_dom_lit(lit: &DomLit) -> String {
    let name = match lit.form {
        DomLitForm::DomT => "DomT",
        DomLitForm::Date => "Date",
    };
    let mut args: Vec<String> = lit.texts.iter().map(|t| format!("'{t}'")).collect();
    if let Some(fmt) = &lit.fmt {
        args.push(format!("'{fmt}'"));
    }
    format!("{name}({})", args.join(", "))
}

fn print_agg_entries(entries: &[super::ast::AggEntry]) -> String {
    let es: Vec<String> = entries
        .iter()
        .map(|e| match &e.arg {
            Some(a) => format!("({}, {}({a}))", e.target, e.func),
            None => format!("({}, {})", e.target, e.func),
        })
        .collect();
    format!("{{{}}}", es.join(", "))
}

fn print_bound_query(b: &BoundQuery) -> String {
    let expr = match b.expr.as_ref() {
        QueryExpr::ClassRef(class) if b.var.is_some() => class.clone(),
        other => print_query(other),
    };
    match &b.var {
        Some(var) => format!("{var} {expr}"),
        None => expr,
    }
}

pub fn print_query(q: &QueryExpr) -> String {
    match q {
        QueryExpr::ClassRef(c) => c.clone(),
        QueryExpr::Select { input, pred } => format!(
            "Select({}, {})",
            print_bound_query(input),
            print_pred(pred)
        ),
        QueryExpr::Project { input, items } => {
            let is: Vec<String> = items
                .iter()
                .map(|ProjItem { alias, path }| match alias {
                    Some(a) => format!("{a} : {}", print_path(path)),
                    None => print_path(path),
                })
                .collect();
            format!(
                "Project({}, {{{}}})",
                print_bound_query(input),
                is.join(", ")
            )
        }
        QueryExpr::Join { left, right, pred } => format!(
            "Join({}, {}, {})",
            print_bound_query(left),
            print_bound_query(right),
            print_pred(pred)
        ),
        QueryExpr::SetOp { op, left, right } => format!(
            "{}({}, {})",
            op.name(),
            print_query(left),
            print_query(right)
        ),
        QueryExpr::Flatten(e) => format!("Flatten({})", print_query(e)),
        QueryExpr::DupElim(e) => format!("DupElim({})", print_query(e)),
        QueryExpr::EmptyElim(e) => format!("EmptyElim({})", print_query(e)),
        QueryExpr::Current(e) => format!("Current({})", print_query(e)),
        QueryExpr::Past(e) => format!("Past({})", print_query(e)),
        QueryExpr::Archive(e) => format!("Archive({})", print_query(e)),
        QueryExpr::State { input, window, rel } => format!(
            "State({}, {}, {})",
            print_query(input),
            print_dom_lit(window),
            rel.name()
        ),
        QueryExpr::IJoin { left, right, pred } => format!(
            "IJoin({}, {}, {})",
            print_bound_query(left),
            print_bound_query(right),
            print_pred(pred)
        ),
        QueryExpr::UJoin { left, right, pred } => format!(
            "UJoin({}, {}, {})",
            print_bound_query(left),
            print_bound_query(right),
            print_pred(pred)
        ),
        QueryExpr::UGroup {
            input, unit_text, ..
        } => format!("UGroup({}, {unit_text})", print_query(input)),
        QueryExpr::DGroup { input, duration } => format!(
            "DGroup({}, Duration({}, {}))",
            print_query(input),
            duration.count,
            duration.unit
        ),
        QueryExpr::MakeSerie(e) => format!("MakeSerie({})", print_query(e)),
        QueryExpr::Agreg { input, entries } => format!(
            "Agreg({}, {})",
            print_query(input),
            print_agg_entries(entries)
        ),
        QueryExpr::ACum { input, entries } => format!(
            "ACum({}, {})",
            print_query(input),
            print_agg_entries(entries)
        ),
        QueryExpr::AMove {
            input,
            entries,
            duration,
        } => format!(
            "AMove({}, {}, Duration({}, {}))",
            print_query(input),
            print_agg_entries(entries),
            duration.count,
            duration.unit
        ),
        QueryExpr::ScaleUp {
            input,
            unit_text,
            entries,
            ..
        } => format!(
            "ScaleUp({}, {unit_text}, {})",
            print_query(input),
            print_agg_entries(entries)
        ),
        QueryExpr::ScaleDown {
            input,
            unit_text,
            entries,
            ..
        } => format!(
            "ScaleDown({}, {unit_text}, {})",
            print_query(input),
            print_agg_entries(entries)
        ),
        QueryExpr::Nest { input, attr } => {
            format!("Nest({}, {attr})", print_query(input))
        }
        QueryExpr::UnNest { input, attr } => {
            format!("UnNest({}, {attr})", print_query(input))
        }
    }
}
