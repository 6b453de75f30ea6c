//! Expression grammar: a hand-rolled lexer and recursive-descent parser for
//! the infix notation used in session files parse-expr, plus the inverse of
//! the `Display` pretty-printer.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := integer | '(' '-'? integer ')'
//! atom     := integer | symbol | '(' expr ')' | 'D' '(' opaque ')'
//! symbol   := 'x'<k> | 'u'<k> | 'u' '[' A ',' i ']' | ident | ident ';' digits
//! ```
//!
//! Jets are written `u[A,i]`, opaque derivatives `f;12` (indices sorted on
//! parse), parameters are bare identifiers.  Bare identifiers resolve through
//! a [`SymbolTable`]: named expressions are spliced, declared parameters and
//! opaque functions become symbols, and `x<k>` / `u<k>` fall back to the
//! coordinate classes of the session signature.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::BigInt;
use thiserror::Error;

use crate::expr::{Expr, SymbolId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: undeclared symbol `{name}`")]
    Undeclared {
        line: usize,
        col: usize,
        name: String,
    },
}

/// Declared names an expression may reference, together with the signature
/// bounding the coordinate classes.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    pub n: u32,
    pub m: u32,
    /// Opaque function name -> dependent-variable indices it may depend on.
    pub opaques: BTreeMap<String, Vec<u32>>,
    pub params: BTreeSet<String>,
    /// Named expressions, spliced where referenced.
    pub exprs: BTreeMap<String, Expr>,
}

impl SymbolTable {
    pub fn new(n: u32, m: u32) -> Self {
        SymbolTable {
            n,
            m,
            ..Default::default()
        }
    }

    /// Names of the form `x<k>`, `u<k>`, or `D` are part of the grammar and
    /// may not be declared.
    pub fn is_reserved(name: &str) -> bool {
        if name == "D" {
            return true;
        }
        let mut chars = name.chars();
        matches!(chars.next(), Some('x') | Some('u'))
            && name.len() > 1
            && chars.all(|c| c.is_ascii_digit())
    }
}

/// Parse `text` against the declared symbols.
pub fn parse_expr(text: &str, table: &SymbolTable) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        table,
    };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parse a comma-separated list of expressions.
pub fn parse_expr_list(text: &str, table: &SymbolTable) -> Result<Vec<Expr>, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        table,
    };
    let mut out = vec![p.expr()?];
    while p.eat(&Tok::Comma) {
        out.push(p.expr()?);
    }
    p.expect_eof()?;
    Ok(out)
}

/// Pretty-print an expression in the grammar above; `parse_expr` of the
/// result is the identity up to normalization.
pub fn render_expr(e: &Expr) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    /// `name;digits` opaque-derivative reference.
    OpaqueRef(String, Vec<u32>),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::OpaqueRef(s, ix) => {
                write!(f, "{s};")?;
                for k in ix {
                    write!(f, "{k}")?;
                }
                Ok(())
            }
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Comma => write!(f, ","),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
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
        let tok = match c {
            '(' => {
                bump(&mut chars);
                Tok::LParen
            }
            ')' => {
                bump(&mut chars);
                Tok::RParen
            }
            '[' => {
                bump(&mut chars);
                Tok::LBracket
            }
            ']' => {
                bump(&mut chars);
                Tok::RBracket
            }
            ',' => {
                bump(&mut chars);
                Tok::Comma
            }
            '+' => {
                bump(&mut chars);
                Tok::Plus
            }
            '-' => {
                bump(&mut chars);
                Tok::Minus
            }
            '*' => {
                bump(&mut chars);
                Tok::Star
            }
            '/' => {
                bump(&mut chars);
                Tok::Slash
            }
            '^' => {
                bump(&mut chars);
                Tok::Caret
            }
            '0'..='9' => {
                let mut s = String::new();
                while matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                    s.push(bump(&mut chars));
                }
                Tok::Int(s.parse().expect("digit run"))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while matches!(chars.peek(), Some(d) if d.is_ascii_alphanumeric() || *d == '_') {
                    s.push(bump(&mut chars));
                }
                if chars.peek() == Some(&';') {
                    bump(&mut chars);
                    let mut ix = Vec::new();
                    while matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                        ix.push(bump(&mut chars).to_digit(10).unwrap());
                    }
                    if ix.is_empty() {
                        return Err(ParseError::Syntax {
                            line: tline,
                            col: tcol,
                            message: format!("`{s};` must be followed by index digits"),
                        });
                    }
                    Tok::OpaqueRef(s, ix)
                } else {
                    Tok::Ident(s)
                }
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push(Spanned {
            tok,
            line: tline,
            col: tcol,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    tokens: Vec<Spanned>,
    pos: usize,
    table: &'a SymbolTable,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.syntax(match self.peek() {
                Some(got) => format!("expected `{t}`, found `{got}`"),
                None => format!("expected `{t}`, found end of input"),
            }))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.syntax(format!("unexpected trailing `{t}`"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = e + self.term()?;
            } else if self.eat(&Tok::Minus) {
                e = e - self.term()?;
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                e = e * self.unary()?;
            } else if self.eat(&Tok::Slash) {
                e = e * Expr::pow(self.unary()?, -1);
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            Ok(Expr::int(-1) * self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let e = self.exponent()?;
            Ok(Expr::pow(base, e))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<i64, ParseError> {
        let parens = self.eat(&Tok::LParen);
        let neg = parens && self.eat(&Tok::Minus);
        let n = match self.next() {
            Some(Tok::Int(n)) => num::ToPrimitive::to_i64(&n)
                .ok_or_else(|| self.syntax(format!("exponent `{n}` out of range")))?,
            other => {
                return Err(self.syntax(match other {
                    Some(t) => format!("expected integer exponent, found `{t}`"),
                    None => "expected integer exponent, found end of input".into(),
                }))
            }
        };
        if parens {
            self.expect(Tok::RParen)?;
        }
        Ok(if neg { -n } else { n })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (line, col) = self.here();
        match self.next() {
            Some(Tok::Int(n)) => Ok(Expr::Rat(num::BigRational::from(n))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::OpaqueRef(name, index)) => {
                self.opaque_symbol(&name, &index, line, col).map(Expr::sym)
            }
            Some(Tok::Ident(name)) if name == "D" && self.peek() == Some(&Tok::LParen) => {
                // alternative derivative notation: D(f;1) == f;1
                self.expect(Tok::LParen)?;
                let (iline, icol) = self.here();
                let sym = match self.next() {
                    Some(Tok::OpaqueRef(name, index)) => {
                        self.opaque_symbol(&name, &index, iline, icol)?
                    }
                    Some(Tok::Ident(name)) => self.opaque_symbol(&name, &[], iline, icol)?,
                    _ => return Err(self.syntax("expected opaque derivative inside D(...)")),
                };
                self.expect(Tok::RParen)?;
                Ok(Expr::sym(sym))
            }
            Some(Tok::Ident(name)) if name == "u" && self.peek() == Some(&Tok::LBracket) => {
                self.expect(Tok::LBracket)?;
                let a = self.index_in(1..=self.table.m, "dependent")?;
                self.expect(Tok::Comma)?;
                let i = self.index_in(1..=self.table.n, "independent")?;
                self.expect(Tok::RBracket)?;
                Ok(Expr::sym(SymbolId::jet(a, i)))
            }
            Some(Tok::Ident(name)) => self.named(&name, line, col),
            Some(other) => Err(ParseError::Syntax {
                line,
                col,
                message: format!("expected expression, found `{other}`"),
            }),
            None => Err(self.syntax("expected expression, found end of input")),
        }
    }

    fn index_in(
        &mut self,
        range: std::ops::RangeInclusive<u32>,
        kind: &str,
    ) -> Result<u32, ParseError> {
        match self.next() {
            Some(Tok::Int(n)) => {
                let k = num::ToPrimitive::to_u32(&n).filter(|k| range.contains(k));
                k.ok_or_else(|| {
                    self.syntax(format!(
                        "{kind} index `{n}` out of range 1..={}",
                        range.end()
                    ))
                })
            }
            _ => Err(self.syntax(format!("expected {kind} index"))),
        }
    }

    fn opaque_symbol(
        &self,
        name: &str,
        index: &[u32],
        line: usize,
        col: usize,
    ) -> Result<SymbolId, ParseError> {
        let deps = self
            .table
            .opaques
            .get(name)
            .ok_or_else(|| ParseError::Undeclared {
                line,
                col,
                name: name.to_string(),
            })?;
        for k in index {
            if !deps.contains(k) {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    message: format!("`{name}` does not depend on u{k}"),
                });
            }
        }
        Ok(SymbolId::opaque_deriv(name, deps, index))
    }

    fn named(&mut self, name: &str, line: usize, col: usize) -> Result<Expr, ParseError> {
        if let Some(e) = self.table.exprs.get(name) {
            return Ok(e.clone());
        }
        if self.table.params.contains(name) {
            return Ok(Expr::sym(SymbolId::param(name)));
        }
        if self.table.opaques.contains_key(name) {
            return Ok(Expr::sym(self.opaque_symbol(name, &[], line, col)?));
        }
        if let Some(k) = coordinate_index(name, 'x', self.table.n) {
            return Ok(Expr::sym(SymbolId::indep(k)));
        }
        if let Some(k) = coordinate_index(name, 'u', self.table.m) {
            return Ok(Expr::sym(SymbolId::dep(k)));
        }
        Err(ParseError::Undeclared {
            line,
            col,
            name: name.to_string(),
        })
    }
}

fn coordinate_index(name: &str, class: char, bound: u32) -> Option<u32> {
    let rest = name.strip_prefix(class)?;
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let k: u32 = rest.parse().ok()?;
    (1..=bound).contains(&k).then_some(k)
}
