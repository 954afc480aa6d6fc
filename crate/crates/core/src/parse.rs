//! Concrete syntax for programs and terms.
//!
//! ```text
//! constructors: s0/1 s1/1 nil/0
//! functions: f/1 append/2
//! f(s0 s1 x) -> append(f(s1 x), f(s1 x))
//! main: f
//! ```
//!
//! `#` starts a comment. Unary symbols may be applied by juxtaposition
//! (`s0 s1 nil`). `order:` and `qi` lines are kept as annotations.

use crate::error::{Error, Result};
use crate::term::{Annotations, Equation, Program, Signature, SymbolKind, Term};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Arrow,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Tokens paired with 1-based columns.
fn lex(src: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i + 1;
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, col));
                i += 2;
            }
            _ if is_ident_char(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            _ => {
                return Err(Error::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct TermParser<'a> {
    sig: &'a Signature,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> TermParser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let column = self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end_col);
        Err(Error::Syntax {
            line: self.line,
            column,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn term(&mut self) -> Result<Term> {
        let name = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return self.err("expected a term"),
        };
        self.pos += 1;
        let Some(f) = self.sig.lookup(&name) else {
            if self.peek() == Some(&Tok::LParen) {
                return Err(Error::UndeclaredSymbol(name));
            }
            return Ok(Term::Var(name));
        };
        let arity = self.sig.arity(f);
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            if self.peek() != Some(&Tok::RParen) {
                args.push(self.term()?);
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    args.push(self.term()?);
                }
            }
            self.expect(Tok::RParen, "`)`")?;
        } else if arity == 1 && matches!(self.peek(), Some(Tok::Ident(_))) {
            args.push(self.term()?);
        }
        if args.len() != arity {
            return Err(Error::ArityMismatch {
                symbol: name,
                expected: arity,
                found: args.len(),
            });
        }
        Ok(Term::App(f, args))
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }
}

/// Parses a term over a signature. Undeclared identifiers are variables.
pub fn parse_term(sig: &Signature, text: &str) -> Result<Term> {
    parse_term_at(sig, text, 1, 0)
}

fn parse_term_at(sig: &Signature, text: &str, line: usize, col0: usize) -> Result<Term> {
    let toks = lex(text, line, col0)?;
    let mut p = TermParser {
        sig,
        toks,
        pos: 0,
        line,
        end_col: col0 + text.chars().count() + 1,
    };
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_decls(sig: &mut Signature, body: &str, kind: SymbolKind, line: usize) -> Result<()> {
    for item in body.split_whitespace() {
        let (name, arity) = item.split_once('/').ok_or_else(|| Error::Syntax {
            line,
            column: 1,
            message: format!("declaration `{item}` must be name/arity"),
        })?;
        let arity: usize = arity.parse().map_err(|_| Error::Syntax {
            line,
            column: 1,
            message: format!("bad arity in `{item}`"),
        })?;
        if name.is_empty() || !name.chars().all(is_ident_char) {
            return Err(Error::Syntax {
                line,
                column: 1,
                message: format!("bad symbol name `{name}`"),
            });
        }
        sig.add(name, kind, arity)?;
    }
    Ok(())
}

pub fn parse_program(text: &str) -> Result<Program> {
    let mut sig = Signature::new();
    let mut main_name: Option<(String, usize)> = None;
    let mut annotations = Annotations::default();
    let mut eq_lines = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("constructors:") {
            parse_decls(&mut sig, rest, SymbolKind::Constructor, line_no)?;
        } else if let Some(rest) = trimmed.strip_prefix("functions:") {
            parse_decls(&mut sig, rest, SymbolKind::Function, line_no)?;
        } else if let Some(rest) = trimmed.strip_prefix("main:") {
            main_name = Some((rest.trim().to_string(), line_no));
        } else if let Some(rest) = trimmed.strip_prefix("order:") {
            annotations.order = Some(rest.trim().to_string());
        } else if let Some(rest) = trimmed.strip_prefix("qi ") {
            annotations.qi.push(format!("qi {}", rest.trim()));
        } else if line.contains("->") {
            eq_lines.push((line_no, line.to_string()));
        } else {
            return Err(Error::Syntax {
                line: line_no,
                column: line.len() - line.trim_start().len() + 1,
                message: "expected a declaration or an equation `lhs -> rhs`".into(),
            });
        }
    }

    let mut equations = Vec::new();
    for (line_no, line) in eq_lines {
        let arrow = line.find("->").unwrap();
        let col_rhs = line[..arrow + 2].chars().count();
        let lhs = parse_term_at(&sig, &line[..arrow], line_no, 0)?;
        let rhs = parse_term_at(&sig, &line[arrow + 2..], line_no, col_rhs)?;
        let Term::App(f, patterns) = lhs else {
            return Err(Error::Syntax {
                line: line_no,
                column: 1,
                message: "lhs must be a function application".into(),
            });
        };
        if !sig.is_function(f) {
            return Err(Error::Syntax {
                line: line_no,
                column: 1,
                message: format!("lhs head `{}` is not a function symbol", sig.name(f)),
            });
        }
        equations.push(Equation {
            function: f,
            patterns,
            rhs,
            index: 0,
        });
    }

    let main = match main_name {
        Some((name, line)) => sig.lookup(&name).ok_or(Error::Syntax {
            line,
            column: 1,
            message: format!("main `{name}` is not declared"),
        })?,
        None => *sig
            .functions()
            .first()
            .ok_or_else(|| Error::Malformed("no function symbols declared".into()))?,
    };
    Ok(Program::new(sig, equations, main)?.with_annotations(annotations))
}
