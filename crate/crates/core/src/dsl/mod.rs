//! The textual surface: schema declarations, configuration rules and
//! algebra queries, with a typechecker, an evaluator and result
//! renderers. Parsers and the typechecker are pure and reentrant.

pub mod ast;
mod eval;
mod lex;
mod parse;
mod print;
mod render;
mod typecheck;

pub use ast::{DdlDocument, DomLit, QueryExpr};
pub use eval::evaluate;
pub use parse::{parse_ddl, parse_instant, parse_query, parse_rule};
pub use print::{print_ddl, print_pred, print_query, print_rule};
pub use render::{
    paper_decimal, paper_domain, paper_value, render_collection, render_object, OutputMode,
};
pub use typecheck::{typecheck, TypedQuery};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported rule event {0:?} (only refresh)")]
    UnsupportedEvent(String),
    #[error("unsupported rule action {0:?} (only archive)")]
    UnsupportedAction(String),
    #[error("rule names unknown environment {0:?}")]
    UnknownEnvironment(String),
    #[error("unknown warehouse class {0:?}")]
    UnknownClass(String),
    #[error("{op}: {source}")]
    Eval {
        op: String,
        #[source]
        source: crate::algebra::AlgebraError,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Kind;
    use crate::model::{
        validate_schema, AggMode, Pred, PropertySource, RuleCondition, Severity,
    };
    use crate::temporal::TemporalUnit;
    use crate::testutil::dupond_store;

    /// The PATIENT declaration as the schema language renders it.
    pub(crate) const PATIENT_DDL: &str = r#"
interface PATIENT {
    attribute String nom ;
    attribute String prénom ;
    attribute Integer poids ;
    attribute Struct T_tension {Integer min, Integer max} tension ;
    attribute Integer hématocrite ;
    attribute Integer plaquettes ;
    attribute Integer urée ;
}
with temporal filter {(poids, poids),
                      (tension, tension)},
     archive filter {(poids, t_avg(poids))}
     by month(6) ;

environment Evolution { PATIENT }

rule critere_archive on Evolution
when self.refresh()
if select T from P in PATIENT, T in P.PastStates()
   where precedes(T.domT, Date('07-2000', 'mm-aaaa'))
then T.archive() ;
"#;

    #[test]
    fn patient_ddl_parses_to_one_class() {
        let doc = parse_ddl(PATIENT_DDL).unwrap();
        assert_eq!(doc.classes.len(), 1);
        let class = &doc.classes[0];
        assert_eq!(class.name, "PATIENT");
        assert_eq!(class.attributes.len(), 7);
        assert_eq!(class.temporal_filter.entries.len(), 2);
        assert_eq!(class.archive_filter.entries.len(), 1);
        let entry = &class.archive_filter.entries[0];
        assert_eq!(entry.func.mode, AggMode::Moderate);
        let grain = class.archive_filter.grain.unwrap();
        assert_eq!((grain.unit, grain.count), (TemporalUnit::Month, 6));
        assert_eq!(doc.environments.len(), 1);
        assert_eq!(doc.rules.len(), 1);
        // and the schema it builds is clean
        let schema = doc.to_schema().unwrap();
        assert_eq!(validate_schema(&schema), vec![]);
    }

    #[test]
    fn rule_parses_to_selection_and_archive() {
        let rule = parse_rule(
            "rule critere_archive on Evolution\nwhen self.refresh()\nif select T from P in PATIENT, T in P.PastStates() where precedes(T.domT, Date('07-2000', 'mm-aaaa'))\nthen T.archive() ;",
        )
        .unwrap();
        assert_eq!(rule.name, "critere_archive");
        match &rule.condition {
            RuleCondition::Selection {
                state_var,
                class_name,
                ..
            } => {
                assert_eq!(state_var, "T");
                assert_eq!(class_name, "PATIENT");
            }
            other => panic!("unexpected condition {other:?}"),
        }
    }

    #[test]
    fn unsupported_event_and_action_are_rejected() {
        let e = parse_rule(
            "rule r on E when self.load() if true then T.archive() ;",
        )
        .unwrap_err();
        assert_eq!(e, DslError::UnsupportedEvent("load".into()));
        let e = parse_rule(
            "rule r on E when self.refresh() if true then T.delete() ;",
        )
        .unwrap_err();
        assert_eq!(e, DslError::UnsupportedAction("delete".into()));
    }

    #[test]
    fn select_query_parses_with_two_conjuncts() {
        let q = parse_query("Select(p Patient, p.nom=«Dupond» ^ p.prénom=«Michel»)").unwrap();
        match &q {
            QueryExpr::Select { input, pred } => {
                assert_eq!(input.var.as_deref(), Some("p"));
                assert!(matches!(pred, Pred::And(_, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn operation_backed_temporal_entries_parse_then_fail_validation() {
        let text = "interface C { attribute Integer poids ; Integer age () ; } with temporal filter {(age, age())} ;";
        let doc = parse_ddl(text).unwrap();
        assert!(matches!(
            doc.classes[0].temporal_filter.entries[0].source,
            PropertySource::Operation(_)
        ));
        let schema = doc.to_schema().unwrap();
        let diags = validate_schema(&schema);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("not supported")));
    }

    const MAKESERIE_PIPELINE: &str = "MakeSerie(Project(pp Flatten(Past(Select(p PATIENT, p.nom=«Dupond» ^ p.prénom=«Michel»))), {pp.poids, pp.domT}))";

    #[test]
    fn makeserie_pipeline_typechecks_to_series() {
        let store = dupond_store();
        let q = parse_query(MAKESERIE_PIPELINE).unwrap();
        let typed = typecheck(&q, &store.schema).unwrap();
        assert_eq!(typed.kind, Kind::Series);
    }

    #[test]
    fn agreg_on_object_set_is_a_kind_error() {
        let store = dupond_store();
        let q = parse_query("Agreg(PATIENT, {(poids, avg(poids))})").unwrap();
        let diags = typecheck(&q, &store.schema).unwrap_err();
        assert!(diags.iter().any(|d| d.message.contains("expects a series")));
    }

    #[test]
    fn unbound_variable_is_a_diagnostic() {
        let store = dupond_store();
        let q = parse_query("Select(p PATIENT, q.nom=«Dupond»)").unwrap();
        let diags = typecheck(&q, &store.schema).unwrap_err();
        assert!(diags.iter().any(|d| d.location.contains("variable q")));
    }

    #[test]
    fn state_restriction_query_reproduces_the_window_result() {
        let store = dupond_store();
        let q = parse_query(
            "State(Select(p PATIENT, p.nom=«Dupond» ^ p.prénom=«Michel»), DomT('07-2000', '01-2001', 'mm-aaaa'), during)",
        )
        .unwrap();
        typecheck(&q, &store.schema).unwrap();
        let result = evaluate(&q, &store).unwrap();
        let rendered = render_collection(&result, OutputMode::Paper);
        let expected = "\
{[poids=80 ; tension=[max=16 ; min=10] ; domT=<[07-2000;07-2000];[09-2000;10-2000]>] ;
[poids=79 ; tension=[max=15 ; min=10] ; domT=<[08-2000;08-2000]>] ;
[poids=77 ; tension=[max=15 ; min=8] ; domT=<[11-2000;12-2000]>]}";
        assert_eq!(rendered, expected);
    }

    #[test]
    fn makeserie_pipeline_builds_the_series() {
        let store = dupond_store();
        let q = parse_query(MAKESERIE_PIPELINE).unwrap();
        let result = evaluate(&q, &store).unwrap();
        let rendered = render_collection(&result, OutputMode::Paper);
        let expected = "\
<[poids=80 ; domT=<[07-2000;07-2000]>] ;
[poids=79 ; domT=<[08-2000;08-2000]>] ;
[poids=80 ; domT=<[09-2000;10-2000]>] ;
[poids=77 ; domT=<[11-2000;12-2000]>]>";
        assert_eq!(rendered, expected);
    }

    #[test]
    fn agreg_query_averages_the_series() {
        let store = dupond_store();
        let q = parse_query(&format!(
            "Agreg({MAKESERIE_PIPELINE}, {{(poids, avg(poids))}})"
        ))
        .unwrap();
        let result = evaluate(&q, &store).unwrap();
        assert_eq!(render_collection(&result, OutputMode::Paper), "[poids=79]");
    }

    #[test]
    fn select_over_empty_extension_is_empty() {
        let mut store = dupond_store();
        store.objects.clear();
        let q = parse_query("Select(p PATIENT, p.nom=«Dupond»)").unwrap();
        let result = evaluate(&q, &store).unwrap();
        assert_eq!(result, crate::algebra::Collection::Objects(vec![]));
    }

    #[test]
    fn ddl_print_parse_round_trips() {
        let doc = parse_ddl(PATIENT_DDL).unwrap();
        let printed = print_ddl(&doc);
        let doc2 = parse_ddl(&printed).unwrap();
        assert_eq!(doc, doc2);
    }

    #[test]
    fn query_print_parse_round_trips() {
        for text in [
            MAKESERIE_PIPELINE,
            "State(Select(p PATIENT, p.nom=«Dupond»), DomT('07-2000', '01-2001', 'mm-aaaa'), during)",
            "AMove(MakeSerie(Flatten(Past(PATIENT))), {(poids, avg(poids))}, Duration(2, month))",
            "ScaleUp(MakeSerie(Flatten(Past(PATIENT))), 'trimestre', {(poids, avg(poids))})",
            "VUnion(PATIENT, PATIENT)",
            "UGroup(Flatten(Past(PATIENT)), quarter)",
            "Select(p PATIENT, not (p.poids < 70 or p.poids > 90))",
        ] {
            let ast = parse_query(text).unwrap();
            let printed = print_query(&ast);
            let reparsed = parse_query(&printed)
                .unwrap_or_else(|e| panic!("reparse of {printed:?} failed: {e}"));
            assert_eq!(reparsed, ast, "round trip of {text}");
        }
    }

    #[test]
    fn paper_decimals_truncate() {
        assert_eq!(paper_decimal(79.0), "79");
        assert_eq!(paper_decimal(79.5), "79,5");
        assert_eq!(paper_decimal(79.0 + 2.0 / 3.0), "79,6");
        assert_eq!(paper_decimal(78.5), "78,5");
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = parse_query("Select(p PATIENT,, true)").unwrap_err();
        match err {
            DslError::Syntax { line, col, .. } => {
                assert_eq!(line, 1);
                assert!(col > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
