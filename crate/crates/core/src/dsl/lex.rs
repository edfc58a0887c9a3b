//! Tokenizer shared by the schema, rule and query parsers.
//!
//! Identifiers are Unicode (accents allowed); strings accept double
//! quotes and French guillemets interchangeably; `//` starts a line
//! comment.

use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Dec(f64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    DoubleColon,
    Dot,
    Caret,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Dec(d) => format!("decimal {d}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::DoubleColon => "'::'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Eq => "'='".into(),
            Tok::Ne => "'!='".into(),
            Tok::Lt => "'<'".into(),
            Tok::Le => "'<='".into(),
            Tok::Gt => "'>'".into(),
            Tok::Ge => "'>='".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            out.push(Token {
                tok: $tok,
                line: $l,
                col: $c,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '/' {
            let mut ahead = chars.clone();
            ahead.next();
            if ahead.peek() == Some(&'/') {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
        }
        if is_ident_start(c) {
            let mut s = String::new();
            while let Some(&n) = chars.peek() {
                if is_ident_char(n) {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            push!(Tok::Ident(s), tl, tc);
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_digit() {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            // decimal point only when digits follow
            let mut ahead = chars.clone();
            if ahead.next() == Some('.') && ahead.peek().is_some_and(|n| n.is_ascii_digit()) {
                s.push(bump(&mut chars));
                while let Some(&n) = chars.peek() {
                    if n.is_ascii_digit() {
                        s.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                let d: f64 = s.parse().map_err(|_| DslError::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("bad decimal literal {s}"),
                })?;
                push!(Tok::Dec(d), tl, tc);
            } else {
                let i: i64 = s.parse().map_err(|_| DslError::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("bad integer literal {s}"),
                })?;
                push!(Tok::Int(i), tl, tc);
            }
            continue;
        }
        match c {
            '"' | '«' | '\'' => {
                let open = bump(&mut chars);
                let close = match open {
                    '«' => '»',
                    other => other,
                };
                let mut s = String::new();
                let mut closed = false;
                while let Some(&n) = chars.peek() {
                    if n == close {
                        bump(&mut chars);
                        closed = true;
                        break;
                    }
                    s.push(bump(&mut chars));
                }
                if !closed {
                    return Err(DslError::Syntax {
                        line: tl,
                        col: tc,
                        message: "unterminated string".into(),
                    });
                }
                push!(Tok::Str(s), tl, tc);
            }
            '(' => {
                bump(&mut chars);
                push!(Tok::LParen, tl, tc);
            }
            ')' => {
                bump(&mut chars);
                push!(Tok::RParen, tl, tc);
            }
            '{' => {
                bump(&mut chars);
                push!(Tok::LBrace, tl, tc);
            }
            '}' => {
                bump(&mut chars);
                push!(Tok::RBrace, tl, tc);
            }
            '[' => {
                bump(&mut chars);
                push!(Tok::LBracket, tl, tc);
            }
            ']' => {
                bump(&mut chars);
                push!(Tok::RBracket, tl, tc);
            }
            ',' => {
                bump(&mut chars);
                push!(Tok::Comma, tl, tc);
            }
            ';' => {
                bump(&mut chars);
                push!(Tok::Semi, tl, tc);
            }
            ':' => {
                bump(&mut chars);
                if chars.peek() == Some(&':') {
                    bump(&mut chars);
                    push!(Tok::DoubleColon, tl, tc);
                } else {
                    push!(Tok::Colon, tl, tc);
                }
            }
            '.' => {
                bump(&mut chars);
                push!(Tok::Dot, tl, tc);
            }
            '^' | '∧' => {
                bump(&mut chars);
                push!(Tok::Caret, tl, tc);
            }
            '=' => {
                bump(&mut chars);
                push!(Tok::Eq, tl, tc);
            }
            '!' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    push!(Tok::Ne, tl, tc);
                } else {
                    return Err(DslError::Syntax {
                        line: tl,
                        col: tc,
                        message: "expected '=' after '!'".into(),
                    });
                }
            }
            '<' => {
                bump(&mut chars);
                match chars.peek() {
                    Some(&'=') => {
                        bump(&mut chars);
                        push!(Tok::Le, tl, tc);
                    }
                    Some(&'>') => {
                        bump(&mut chars);
                        push!(Tok::Ne, tl, tc);
                    }
                    _ => push!(Tok::Lt, tl, tc),
                }
            }
            '>' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    push!(Tok::Ge, tl, tc);
                } else {
                    push!(Tok::Gt, tl, tc);
                }
            }
            other => {
                return Err(DslError::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guillemets_and_quotes_are_interchangeable() {
        let toks = tokenize("p.nom=«Dupond» ^ q = \"Dulong\"").unwrap();
        let strs: Vec<&Tok> = toks
            .iter()
            .map(|t| &t.tok)
            .filter(|t| matches!(t, Tok::Str(_)))
            .collect();
        assert_eq!(
            strs,
            vec![&Tok::Str("Dupond".into()), &Tok::Str("Dulong".into())]
        );
    }

    #[test]
    fn positions_are_tracked() {
        let err = tokenize("abc\n  ?").unwrap_err();
        match err {
            DslError::Syntax { line, col, .. } => {
                assert_eq!((line, col), (2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numbers_and_member_access_disambiguate() {
        let toks = tokenize("prenoms[0] 79.5 p.poids").unwrap();
        assert!(toks.iter().any(|t| t.tok == Tok::Dec(79.5)));
        assert!(toks.iter().any(|t| t.tok == Tok::Int(0)));
        assert!(toks.iter().any(|t| t.tok == Tok::Dot));
    }
}
