//! Recursive-descent parsers for the three surface languages: schema
//! declarations, configuration rules and algebra queries.

use crate::extraction::{BoundExpr, MappingExpr, SetCombine};
use crate::model::{
    fold_ident, AggregationFn, ArchiveFilter, ArchiveFilterEntry, ArchiveGrain, AttrRef,
    AttributeDecl, CmpOp, ConfigRule, DeclaredType, DomRef, Environment, Operand, OperationDecl,
    Pred, PropertySource, RelationshipDecl, RuleAction, RuleCondition, RuleEvent, Scalar, SubRef,
    TemporalFilter, TemporalFilterEntry, WarehouseClass, WindowRel,
};
use crate::temporal::{Duration, Instant, Interval, TemporalDomain, TemporalUnit};

use super::ast::{
    AggEntry, BoundQuery, DdlDocument, DomLit, DomLitForm, ProjItem, QueryExpr, SetOpName,
};
use super::lex::{tokenize, Tok, Token};
use super::DslError;

pub fn parse_ddl(text: &str) -> Result<DdlDocument, DslError> {
    let mut p = Parser::new(text)?;
    let doc = p.document()?;
    p.expect_eof()?;
    Ok(doc)
}

pub fn parse_rule(text: &str) -> Result<ConfigRule, DslError> {
    let mut p = Parser::new(text)?;
    let rule = p.rule_decl()?;
    p.expect_eof()?;
    Ok(rule)
}

pub fn parse_query(text: &str) -> Result<QueryExpr, DslError> {
    let mut p = Parser::new(text)?;
    let q = p.query_expr()?;
    p.expect_eof()?;
    Ok(q)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, DslError> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos.min(self.toks.len() - 1)].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        let t = self.peek();
        Err(DslError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("{}, found {}", message.into(), t.tok.describe()),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), DslError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {}", tok.describe()))
        }
    }

    fn expect_eof(&self) -> Result<(), DslError> {
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            self.err("expected end of input")
        }
    }

    fn ident(&mut self) -> Result<String, DslError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    /// Case- and accent-insensitive keyword probe.
    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if fold_ident(s).to_lowercase() == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), DslError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected keyword {kw:?}"))
        }
    }

    // ----- schema declarations ------------------------------------------

    fn document(&mut self) -> Result<DdlDocument, DslError> {
        let mut doc = DdlDocument {
            warehouse_name: None,
            classes: Vec::new(),
            environments: Vec::new(),
            rules: Vec::new(),
            configs: Vec::new(),
        };
        loop {
            if self.peek().tok == Tok::Eof {
                break;
            }
            if self.eat_kw("warehouse") {
                doc.warehouse_name = Some(self.ident()?);
                self.expect(Tok::Semi)?;
            } else if self.eat_kw("config") {
                let key = self.ident()?;
                self.expect(Tok::Eq)?;
                let value = self.scalar_literal()?;
                self.expect(Tok::Semi)?;
                doc.configs.push((key, value));
            } else if self.at_kw("source") || self.at_kw("interface") {
                doc.classes.push(self.interface_decl()?);
            } else if self.eat_kw("environment") {
                let name = self.ident()?;
                self.expect(Tok::LBrace)?;
                let mut class_names = vec![self.ident()?];
                while self.peek().tok == Tok::Comma {
                    self.next();
                    class_names.push(self.ident()?);
                }
                self.expect(Tok::RBrace)?;
                if self.peek().tok == Tok::Semi {
                    self.next();
                }
                doc.environments.push(Environment {
                    name,
                    class_names,
                    rules: Vec::new(),
                });
            } else if self.at_kw("rule") {
                doc.rules.push(self.rule_decl()?);
            } else {
                return self.err("expected a declaration");
            }
        }
        Ok(doc)
    }

    fn scalar_literal(&mut self) -> Result<Scalar, DslError> {
        match self.peek().tok.clone() {
            Tok::Int(i) => {
                self.next();
                Ok(Scalar::Int(i))
            }
            Tok::Dec(d) => {
                self.next();
                Ok(Scalar::dec(d))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Scalar::Str(s))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.next();
                Ok(Scalar::Bool(s == "true"))
            }
            _ => self.err("expected a literal"),
        }
    }

    fn interface_decl(&mut self) -> Result<WarehouseClass, DslError> {
        let is_source = self.eat_kw("source");
        self.expect_kw("interface")?;
        let name = self.ident()?;
        let mut super_names = Vec::new();
        if self.peek().tok == Tok::Colon {
            self.next();
            super_names.push(self.ident()?);
            while self.peek().tok == Tok::Comma {
                self.next();
                super_names.push(self.ident()?);
            }
        }
        self.expect(Tok::LBrace)?;
        let mut attributes = Vec::new();
        let mut relationships = Vec::new();
        let mut operations = Vec::new();
        while self.peek().tok != Tok::RBrace {
            if self.eat_kw("attribute") {
                let ty = self.declared_type()?;
                let name = self.ident()?;
                self.expect(Tok::Semi)?;
                attributes.push(AttributeDecl { name, ty });
            } else if self.eat_kw("relationship") {
                let target = self.ident()?;
                let name = self.ident()?;
                let inverse = if self.eat_kw("inverse") {
                    let cls = self.ident()?;
                    self.expect(Tok::DoubleColon)?;
                    let rel = self.ident()?;
                    Some((cls, rel))
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                relationships.push(RelationshipDecl {
                    name,
                    target,
                    inverse,
                });
            } else {
                // declared operation: `Integer age () ;`
                let return_type = self.ident()?;
                let name = self.ident()?;
                self.expect(Tok::LParen)?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                operations.push(OperationDecl { name, return_type });
            }
        }
        self.expect(Tok::RBrace)?;

        let mut temporal_filter = TemporalFilter::default();
        let mut archive_filter = ArchiveFilter::default();
        let mut mapping = None;
        if self.eat_kw("with") {
            loop {
                if self.eat_kw("temporal") {
                    self.expect_kw("filter")?;
                    temporal_filter = self.temporal_filter()?;
                } else if self.eat_kw("archive") {
                    self.expect_kw("filter")?;
                    archive_filter = self.archive_filter()?;
                } else if self.eat_kw("mapping") {
                    mapping = Some(self.mapping_expr()?);
                } else {
                    return self.err("expected `temporal filter`, `archive filter` or `mapping`");
                }
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(WarehouseClass {
            name,
            attributes,
            relationships,
            operations,
            super_names,
            mapping,
            temporal_filter,
            archive_filter,
            is_source,
        })
    }

    fn declared_type(&mut self) -> Result<DeclaredType, DslError> {
        let name = self.ident()?;
        let folded = fold_ident(&name).to_lowercase();
        Ok(match folded.as_str() {
            "string" => DeclaredType::Str,
            "integer" | "int" => DeclaredType::Int,
            "real" | "float" | "decimal" => DeclaredType::Dec,
            "boolean" => DeclaredType::Bool,
            "date" => DeclaredType::Date,
            "list" => {
                self.expect(Tok::Lt)?;
                let inner = self.declared_type()?;
                self.expect(Tok::Gt)?;
                DeclaredType::List(Box::new(inner))
            }
            "struct" => {
                let struct_name = match &self.peek().tok {
                    Tok::Ident(_) => Some(self.ident()?),
                    _ => None,
                };
                self.expect(Tok::LBrace)?;
                let mut fields = Vec::new();
                loop {
                    let fty = self.declared_type()?;
                    let fname = self.ident()?;
                    fields.push((fname, fty));
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                DeclaredType::Record {
                    name: struct_name,
                    fields,
                }
            }
            _ => DeclaredType::Ref(name),
        })
    }

    fn temporal_filter(&mut self) -> Result<TemporalFilter, DslError> {
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let property = self.ident()?;
            self.expect(Tok::Comma)?;
            let source_name = self.ident()?;
            let source = if self.peek().tok == Tok::LParen {
                self.next();
                self.expect(Tok::RParen)?;
                PropertySource::Operation(source_name)
            } else {
                PropertySource::Attribute(source_name)
            };
            self.expect(Tok::RParen)?;
            entries.push(TemporalFilterEntry { property, source });
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(TemporalFilter { entries })
    }

    fn archive_filter(&mut self) -> Result<ArchiveFilter, DslError> {
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let attribute = self.ident()?;
            self.expect(Tok::Comma)?;
            let fn_name = self.ident()?;
            let func = AggregationFn::parse(&fn_name).ok_or_else(|| DslError::Syntax {
                line: self.peek().line,
                col: self.peek().col,
                message: format!("unknown aggregation function {fn_name:?}"),
            })?;
            let arg = if self.peek().tok == Tok::LParen {
                self.next();
                let a = self.ident()?;
                self.expect(Tok::RParen)?;
                Some(a)
            } else {
                None
            };
            self.expect(Tok::RParen)?;
            entries.push(ArchiveFilterEntry {
                attribute,
                func,
                arg,
            });
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        let grain = if self.eat_kw("by") {
            let unit_name = self.ident()?;
            let unit: TemporalUnit = unit_name.parse().map_err(|_| DslError::Syntax {
                line: self.peek().line,
                col: self.peek().col,
                message: format!("unknown temporal unit {unit_name:?}"),
            })?;
            self.expect(Tok::LParen)?;
            let count = match self.peek().tok {
                Tok::Int(i) if i >= 1 => {
                    self.next();
                    i as u32
                }
                _ => return self.err("expected a positive grain count"),
            };
            self.expect(Tok::RParen)?;
            Some(ArchiveGrain { unit, count })
        } else {
            None
        };
        Ok(ArchiveFilter { entries, grain })
    }

    // ----- mapping expressions ------------------------------------------

    fn mapping_expr(&mut self) -> Result<MappingExpr, DslError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let folded = fold_ident(s).to_lowercase();
                match folded.as_str() {
                    "project" | "select" | "join" | "union" | "intersect" | "difference"
                    | "source" => self.mapping_call(&folded),
                    _ => {
                        let class = self.ident()?;
                        Ok(MappingExpr::Source(class))
                    }
                }
            }
            _ => self.err("expected a mapping expression"),
        }
    }

    fn mapping_call(&mut self, op: &str) -> Result<MappingExpr, DslError> {
        self.next(); // op name
        self.expect(Tok::LParen)?;
        let expr = match op {
            "source" => {
                let class = self.ident()?;
                MappingExpr::Source(class)
            }
            "select" => {
                let input = self.mapping_operand()?;
                self.expect(Tok::Comma)?;
                let predicate = self.predicate()?;
                MappingExpr::Select { input, predicate }
            }
            "join" => {
                let left = self.mapping_operand()?;
                self.expect(Tok::Comma)?;
                let right = self.mapping_operand()?;
                self.expect(Tok::Comma)?;
                let predicate = self.predicate()?;
                MappingExpr::Join {
                    left,
                    right,
                    predicate,
                }
            }
            "project" => {
                let input = self.mapping_operand()?;
                self.expect(Tok::Comma)?;
                self.expect(Tok::LBrace)?;
                let mut targets = Vec::new();
                loop {
                    let target = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let path = self.attr_path()?;
                    targets.push((target, path));
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                MappingExpr::Project { input, targets }
            }
            "union" | "intersect" | "difference" => {
                let left = self.mapping_operand()?;
                self.expect(Tok::Comma)?;
                let right = self.mapping_operand()?;
                let op = match op {
                    "union" => SetCombine::Union,
                    "intersect" => SetCombine::Intersect,
                    _ => SetCombine::Difference,
                };
                MappingExpr::Combine { op, left, right }
            }
            _ => unreachable!(),
        };
        self.expect(Tok::RParen)?;
        Ok(expr)
    }

    fn mapping_operand(&mut self) -> Result<BoundExpr, DslError> {
        if let Tok::Ident(first) = &self.peek().tok {
            let folded = fold_ident(first).to_lowercase();
            let is_call = matches!(
                folded.as_str(),
                "project" | "select" | "join" | "union" | "intersect" | "difference" | "source"
            ) && *self.peek2() == Tok::LParen;
            if !is_call {
                // `var Expr` or a bare class name
                let name = self.ident()?;
                if matches!(self.peek().tok, Tok::Ident(_)) {
                    let expr = self.mapping_expr()?;
                    return Ok(BoundExpr::new(Some(name), expr));
                }
                return Ok(BoundExpr::new(None, MappingExpr::Source(name)));
            }
        }
        let expr = self.mapping_expr()?;
        Ok(BoundExpr::new(None, expr))
    }

    // ----- predicates -----------------------------------------------------

    pub(super) fn predicate(&mut self) -> Result<Pred, DslError> {
        let mut left = self.pred_and()?;
        while self.eat_kw("or") {
            let right = self.pred_and()?;
            left = Pred::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn pred_and(&mut self) -> Result<Pred, DslError> {
        let mut left = self.pred_unary()?;
        loop {
            if self.peek().tok == Tok::Caret || self.at_kw("and") {
                self.next();
                let right = self.pred_unary()?;
                left = Pred::And(Box::new(left), Box::new(right));
            } else {
                break;
            }
        }
        Ok(left)
    }

    fn pred_unary(&mut self) -> Result<Pred, DslError> {
        if self.eat_kw("not") {
            let inner = self.pred_unary()?;
            return Ok(Pred::Not(Box::new(inner)));
        }
        self.pred_atom()
    }

    fn pred_atom(&mut self) -> Result<Pred, DslError> {
        if self.peek().tok == Tok::LParen {
            self.next();
            let inner = self.predicate()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        if let Tok::Ident(s) = &self.peek().tok {
            if s == "true" || s == "false" {
                let b = s == "true";
                self.next();
                return Ok(Pred::Bool(b));
            }
            // Allen test: relation name followed by '('
            if *self.peek2() == Tok::LParen {
                if let Some(rel) = WindowRel::parse(s) {
                    self.next();
                    self.expect(Tok::LParen)?;
                    let left = self.dom_operand()?;
                    self.expect(Tok::Comma)?;
                    let right = self.dom_operand()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Pred::Allen { rel, left, right });
                }
            }
        }
        let left = self.operand()?;
        let op = match self.peek().tok {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return self.err("expected a comparison operator"),
        };
        self.next();
        let right = self.operand()?;
        Ok(Pred::Cmp { left, op, right })
    }

    fn operand(&mut self) -> Result<Operand, DslError> {
        match self.peek().tok.clone() {
            Tok::Int(i) => {
                self.next();
                Ok(Operand::Lit(Scalar::Int(i)))
            }
            Tok::Dec(d) => {
                self.next();
                Ok(Operand::Lit(Scalar::dec(d)))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Operand::Lit(Scalar::Str(s)))
            }
            Tok::Ident(_) => {
                let first = self.ident()?;
                if self.peek().tok == Tok::Dot || self.peek().tok == Tok::LBracket {
                    let path = self.attr_path_from(Some(first))?;
                    Ok(Operand::Attr(path))
                } else {
                    Ok(Operand::Var(first))
                }
            }
            _ => self.err("expected an operand"),
        }
    }

    /// `var.attr`, `var.attr.field`, `var.attr[i]` — or a bare attribute.
    fn attr_path(&mut self) -> Result<AttrRef, DslError> {
        let first = self.ident()?;
        self.attr_path_from(Some(first))
    }

    fn attr_path_from(&mut self, first: Option<String>) -> Result<AttrRef, DslError> {
        let first = match first {
            Some(f) => f,
            None => self.ident()?,
        };
        if self.peek().tok != Tok::Dot && self.peek().tok != Tok::LBracket {
            return Ok(AttrRef::plain(first));
        }
        let (qualifier, attr) = if self.peek().tok == Tok::Dot {
            self.next();
            let attr = self.ident()?;
            (Some(first), attr)
        } else {
            (None, first)
        };
        let mut r = AttrRef {
            qualifier,
            attr,
            sub: None,
        };
        match self.peek().tok {
            Tok::Dot => {
                self.next();
                let field = self.ident()?;
                r.sub = Some(SubRef::Field(field));
            }
            Tok::LBracket => {
                self.next();
                let idx = match self.peek().tok {
                    Tok::Int(i) if i >= 0 => {
                        self.next();
                        i as usize
                    }
                    _ => return self.err("expected a list index"),
                };
                self.expect(Tok::RBracket)?;
                r.sub = Some(SubRef::Index(idx));
            }
            _ => {}
        }
        Ok(r)
    }

    fn dom_operand(&mut self) -> Result<DomRef, DslError> {
        if self.at_kw("domt") && *self.peek2() != Tok::LParen {
            self.next();
            return Ok(DomRef::Attr(None));
        }
        if let Tok::Ident(s) = &self.peek().tok {
            let folded = fold_ident(s).to_lowercase();
            if (folded == "domt" || folded == "date") && *self.peek2() == Tok::LParen {
                let lit = self.dom_literal()?;
                return Ok(DomRef::Lit(lit.domain));
            }
            // var.domT
            let var = self.ident()?;
            self.expect(Tok::Dot)?;
            let attr = self.ident()?;
            if fold_ident(&attr).to_lowercase() != "domt" {
                return self.err("expected a `domT` reference or a DomT/Date literal");
            }
            return Ok(DomRef::Attr(Some(var)));
        }
        self.err("expected a temporal-domain operand")
    }

    /// `DomT('07-2000','01-2001','mm-aaaa')` or `Date('07-2000','mm-aaaa')`.
    pub(super) fn dom_literal(&mut self) -> Result<DomLit, DslError> {
        let name = self.ident()?;
        let folded = fold_ident(&name).to_lowercase();
        let form = match folded.as_str() {
            "domt" => DomLitForm::DomT,
            "date" => DomLitForm::Date,
            _ => return self.err("expected DomT or Date"),
        };
        self.expect(Tok::LParen)?;
        let mut texts = Vec::new();
        loop {
            match self.peek().tok.clone() {
                Tok::Str(s) => {
                    self.next();
                    texts.push(s);
                }
                _ => return self.err("expected a quoted instant or format"),
            }
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        let (needed, max) = match form {
            DomLitForm::DomT => (2, 3),
            DomLitForm::Date => (1, 2),
        };
        if texts.len() < needed || texts.len() > max {
            return self.err(format!("{name} takes {needed} instants and an optional format"));
        }
        let fmt = if texts.len() > needed {
            Some(texts.pop().unwrap())
        } else {
            None
        };
        let line = self.peek().line;
        let col = self.peek().col;
        let parse = |text: &str| -> Result<Instant, DslError> {
            parse_instant(text, fmt.as_deref()).map_err(|message| DslError::Syntax {
                line,
                col,
                message,
            })
        };
        let domain = match form {
            DomLitForm::Date => TemporalDomain::singleton(parse(&texts[0])?),
            DomLitForm::DomT => {
                let from = parse(&texts[0])?;
                let to = parse(&texts[1])?;
                if from.unit() != to.unit() {
                    return Err(DslError::Syntax {
                        line,
                        col,
                        message: "window bounds use different units".into(),
                    });
                }
                // the second bound names the first excluded grain
                let end = to.pred();
                if from > end {
                    return Err(DslError::Syntax {
                        line,
                        col,
                        message: "empty window".into(),
                    });
                }
                TemporalDomain::from_interval(Interval::new(from, end).expect("checked order"))
            }
        };
        Ok(DomLit {
            form,
            texts,
            fmt,
            domain,
        })
    }

    // ----- configuration rules --------------------------------------------

    fn rule_decl(&mut self) -> Result<ConfigRule, DslError> {
        self.expect_kw("rule")?;
        let name = self.ident()?;
        self.expect_kw("on")?;
        let environment = self.ident()?;
        self.expect_kw("when")?;
        self.expect_kw("self")?;
        self.expect(Tok::Dot)?;
        let event_name = self.ident()?;
        self.expect(Tok::LParen)?;
        self.expect(Tok::RParen)?;
        if fold_ident(&event_name).to_lowercase() != "refresh" {
            return Err(DslError::UnsupportedEvent(event_name));
        }
        self.expect_kw("if")?;
        let condition = if self.at_kw("select") {
            self.next();
            let state_var = self.ident()?;
            self.expect_kw("from")?;
            let object_var = self.ident()?;
            self.expect_kw("in")?;
            let class_name = self.ident()?;
            self.expect(Tok::Comma)?;
            let state_var2 = self.ident()?;
            self.expect_kw("in")?;
            let object_var2 = self.ident()?;
            self.expect(Tok::Dot)?;
            let method = self.ident()?;
            self.expect(Tok::LParen)?;
            self.expect(Tok::RParen)?;
            if state_var2 != state_var || object_var2 != object_var {
                return self.err("selection variables do not line up");
            }
            if fold_ident(&method).to_lowercase() != "paststates" {
                return self.err("only PastStates() selections are supported");
            }
            self.expect_kw("where")?;
            let predicate = self.predicate()?;
            RuleCondition::Selection {
                state_var,
                object_var,
                class_name,
                predicate,
            }
        } else {
            RuleCondition::Bool(self.predicate()?)
        };
        self.expect_kw("then")?;
        let action_var = self.ident()?;
        self.expect(Tok::Dot)?;
        let action_name = self.ident()?;
        self.expect(Tok::LParen)?;
        self.expect(Tok::RParen)?;
        if fold_ident(&action_name).to_lowercase() != "archive" {
            return Err(DslError::UnsupportedAction(action_name));
        }
        if let RuleCondition::Selection { state_var, .. } = &condition {
            if *state_var != action_var {
                return self.err("the action must archive the selected state variable");
            }
        }
        self.expect(Tok::Semi)?;
        Ok(ConfigRule {
            name,
            environment,
            event: RuleEvent::Refresh,
            condition,
            action: RuleAction::Archive {
                state_var: action_var,
            },
        })
    }

    // ----- queries ----------------------------------------------------------

    fn query_expr(&mut self) -> Result<QueryExpr, DslError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let folded = fold_ident(s).to_lowercase();
                if *self.peek2() == Tok::LParen && query_op(&folded) {
                    self.query_call(&folded)
                } else {
                    let class = self.ident()?;
                    Ok(QueryExpr::ClassRef(class))
                }
            }
            _ => self.err("expected a query expression"),
        }
    }

    fn query_operand(&mut self) -> Result<BoundQuery, DslError> {
        if let Tok::Ident(first) = &self.peek().tok {
            let folded = fold_ident(first).to_lowercase();
            let is_call = query_op(&folded) && *self.peek2() == Tok::LParen;
            if !is_call {
                let name = self.ident()?;
                if matches!(self.peek().tok, Tok::Ident(_)) {
                    let expr = self.query_expr()?;
                    return Ok(BoundQuery {
                        var: Some(name),
                        expr: Box::new(expr),
                    });
                }
                return Ok(BoundQuery {
                    var: None,
                    expr: Box::new(QueryExpr::ClassRef(name)),
                });
            }
        }
        let expr = self.query_expr()?;
        Ok(BoundQuery {
            var: None,
            expr: Box::new(expr),
        })
    }

    fn agg_entries(&mut self) -> Result<Vec<AggEntry>, DslError> {
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let target = self.ident()?;
            self.expect(Tok::Comma)?;
            let func = self.ident()?;
            if AggregationFn::parse(&func).is_none() {
                return self.err(format!("unknown aggregation function {func:?}"));
            }
            let arg = if self.peek().tok == Tok::LParen {
                self.next();
                let a = self.ident()?;
                self.expect(Tok::RParen)?;
                Some(a)
            } else {
                None
            };
            self.expect(Tok::RParen)?;
            entries.push(AggEntry { target, func, arg });
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(entries)
    }

    /// Unit argument: a bare name or a quoted one (`'trimestre'`); the
    /// written form is kept for printing.
    fn unit_arg(&mut self) -> Result<(TemporalUnit, String), DslError> {
        let (raw, text) = match self.peek().tok.clone() {
            Tok::Ident(s) => {
                self.next();
                (s.clone(), s)
            }
            Tok::Str(s) => {
                self.next();
                (s.clone(), format!("'{s}'"))
            }
            _ => return self.err("expected a temporal unit"),
        };
        let unit: TemporalUnit = raw.parse().map_err(|_| DslError::Syntax {
            line: self.peek().line,
            col: self.peek().col,
            message: format!("unknown temporal unit {raw:?}"),
        })?;
        Ok((unit, text))
    }

    fn duration_arg(&mut self) -> Result<Duration, DslError> {
        self.expect_kw("duration")?;
        self.expect(Tok::LParen)?;
        let count = match self.peek().tok {
            Tok::Int(i) if i >= 1 => {
                self.next();
                i as u32
            }
            _ => return self.err("expected a positive duration count"),
        };
        self.expect(Tok::Comma)?;
        let (unit, _) = self.unit_arg()?;
        self.expect(Tok::RParen)?;
        Ok(Duration { count, unit })
    }

    fn query_call(&mut self, op: &str) -> Result<QueryExpr, DslError> {
        self.next(); // operator name
        self.expect(Tok::LParen)?;
        let expr = match op {
            "select" => {
                let input = self.query_operand()?;
                self.expect(Tok::Comma)?;
                let pred = self.predicate()?;
                QueryExpr::Select { input, pred }
            }
            "project" => {
                let input = self.query_operand()?;
                self.expect(Tok::Comma)?;
                self.expect(Tok::LBrace)?;
                let mut items = Vec::new();
                loop {
                    // `alias: path` or bare `path`
                    let first = self.ident()?;
                    if self.peek().tok == Tok::Colon {
                        self.next();
                        let path = self.attr_path()?;
                        items.push(ProjItem {
                            alias: Some(first),
                            path,
                        });
                    } else {
                        let path = self.attr_path_from(Some(first))?;
                        items.push(ProjItem { alias: None, path });
                    }
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                QueryExpr::Project { input, items }
            }
            "join" | "ijoin" | "ujoin" => {
                let left = self.query_operand()?;
                self.expect(Tok::Comma)?;
                let right = self.query_operand()?;
                self.expect(Tok::Comma)?;
                let pred = self.predicate()?;
                match op {
                    "join" => QueryExpr::Join { left, right, pred },
                    "ijoin" => QueryExpr::IJoin { left, right, pred },
                    _ => QueryExpr::UJoin { left, right, pred },
                }
            }
            "vunion" | "vintersect" | "vdifference" | "iunion" | "iintersect"
            | "idifference" => {
                let left = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let right = self.query_expr()?;
                let op = match op {
                    "vunion" => SetOpName::VUnion,
                    "vintersect" => SetOpName::VIntersect,
                    "vdifference" => SetOpName::VDifference,
                    "iunion" => SetOpName::IUnion,
                    "iintersect" => SetOpName::IIntersect,
                    _ => SetOpName::IDifference,
                };
                QueryExpr::SetOp {
                    op,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            "flatten" => QueryExpr::Flatten(Box::new(self.query_expr()?)),
            "dupelim" => QueryExpr::DupElim(Box::new(self.query_expr()?)),
            "emptyelim" => QueryExpr::EmptyElim(Box::new(self.query_expr()?)),
            "current" => QueryExpr::Current(Box::new(self.query_expr()?)),
            "past" => QueryExpr::Past(Box::new(self.query_expr()?)),
            "archive" => QueryExpr::Archive(Box::new(self.query_expr()?)),
            "state" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let window = self.dom_literal()?;
                self.expect(Tok::Comma)?;
                let rel_name = self.ident()?;
                let rel = WindowRel::parse(&rel_name).ok_or_else(|| DslError::Syntax {
                    line: self.peek().line,
                    col: self.peek().col,
                    message: format!("unknown window relation {rel_name:?}"),
                })?;
                QueryExpr::State {
                    input: Box::new(input),
                    window,
                    rel,
                }
            }
            "ugroup" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let (unit, unit_text) = self.unit_arg()?;
                QueryExpr::UGroup {
                    input: Box::new(input),
                    unit,
                    unit_text,
                }
            }
            "dgroup" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let duration = self.duration_arg()?;
                QueryExpr::DGroup {
                    input: Box::new(input),
                    duration,
                }
            }
            "makeserie" => QueryExpr::MakeSerie(Box::new(self.query_expr()?)),
            "agreg" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let entries = self.agg_entries()?;
                QueryExpr::Agreg {
                    input: Box::new(input),
                    entries,
                }
            }
            "acum" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let entries = self.agg_entries()?;
                QueryExpr::ACum {
                    input: Box::new(input),
                    entries,
                }
            }
            "amove" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let entries = self.agg_entries()?;
                self.expect(Tok::Comma)?;
                let duration = self.duration_arg()?;
                QueryExpr::AMove {
                    input: Box::new(input),
                    entries,
                    duration,
                }
            }
            "scaleup" | "scaledown" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let (unit, unit_text) = self.unit_arg()?;
                self.expect(Tok::Comma)?;
                let entries = self.agg_entries()?;
                if op == "scaleup" {
                    QueryExpr::ScaleUp {
                        input: Box::new(input),
                        unit,
                        unit_text,
                        entries,
                    }
                } else {
                    QueryExpr::ScaleDown {
                        input: Box::new(input),
                        unit,
                        unit_text,
                        entries,
                    }
                }
            }
            "nest" | "unnest" => {
                let input = self.query_expr()?;
                self.expect(Tok::Comma)?;
                let attr = self.ident()?;
                if op == "nest" {
                    QueryExpr::Nest {
                        input: Box::new(input),
                        attr,
                    }
                } else {
                    QueryExpr::UnNest {
                        input: Box::new(input),
                        attr,
                    }
                }
            }
            _ => unreachable!("query_op gate"),
        };
        self.expect(Tok::RParen)?;
        Ok(expr)
    }
}

fn query_op(folded: &str) -> bool {
    matches!(
        folded,
        "select"
            | "project"
            | "join"
            | "vunion"
            | "vintersect"
            | "vdifference"
            | "iunion"
            | "iintersect"
            | "idifference"
            | "flatten"
            | "dupelim"
            | "emptyelim"
            | "current"
            | "past"
            | "archive"
            | "state"
            | "ijoin"
            | "ujoin"
            | "ugroup"
            | "dgroup"
            | "makeserie"
            | "agreg"
            | "acum"
            | "amove"
            | "scaleup"
            | "scaledown"
            | "nest"
            | "unnest"
    )
}

/// Parses an instant in a named surface format, or the canonical form
/// when no format is given. Formats: `mm-aaaa`, `aaaa-mm`, `dd-mm-aaaa`,
/// `aaaa`.
pub fn parse_instant(text: &str, fmt: Option<&str>) -> Result<Instant, String> {
    let bad = || format!("cannot read instant {text:?}");
    match fmt {
        None => text.parse::<Instant>().map_err(|e| e.to_string()),
        Some("mm-aaaa") => {
            let (m, y) = text.split_once('-').ok_or_else(bad)?;
            Instant::month(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
                .map_err(|e| e.to_string())
        }
        Some("aaaa-mm") => {
            let (y, m) = text.split_once('-').ok_or_else(bad)?;
            Instant::month(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
                .map_err(|e| e.to_string())
        }
        Some("dd-mm-aaaa") => {
            let mut parts = text.splitn(3, '-');
            let d = parts.next().ok_or_else(bad)?;
            let m = parts.next().ok_or_else(bad)?;
            let y = parts.next().ok_or_else(bad)?;
            Instant::day(
                y.parse().map_err(|_| bad())?,
                m.parse().map_err(|_| bad())?,
                d.parse().map_err(|_| bad())?,
            )
            .map_err(|e| e.to_string())
        }
        Some("aaaa") => Ok(Instant::year(text.parse().map_err(|_| bad())?)),
        Some(other) => Err(format!("unknown instant format {other:?}")),
    }
}
