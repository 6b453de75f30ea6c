//! Plain-text session files: a signature, symbol declarations, and named
//! expressions, vector fields, systems, transformations, and Monge-Ampère
//! specs that CLI commands refer to by name.
//!
//! ```text
//! # comment
//! signature 2 2
//! param a1 a2 a3
//! opaque f : u1 u2
//! expr g = 1 + a3*f;22 + 2*a2*f;12 + a1*f;11
//! field X1 {
//!   xi = 1, 0
//!   eta = 0
//! }
//! system S {
//!   u[2,1] - u[1,2]
//! }
//! transform T {
//!   z = x1 - f;1, x2 - f;2
//!   w = u1
//!   xinv = x1 + f;1, x2 + f;2
//!   uinv = u1
//! }
//! spec M {
//!   kappa = k1, k2, k3, k4, k5
//!   alpha = a1, a2, a3
//! }
//! ```
//!
//! Every referenced symbol must be declared before use, arities are checked,
//! and duplicate names (across all namespaces) are rejected.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::canonical::{Inverse, PointTransformation};
use crate::expr::Expr;
use crate::liegeom::VectorField;
use crate::monge_ampere::{MADim, MASpec};
use crate::transform::PDESystem;

use super::grammar::{parse_expr, parse_expr_list, ParseError, SymbolTable};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: duplicate name `{name}`")]
    Duplicate { line: usize, name: String },
}

#[derive(Debug, Clone)]
pub struct SessionFile {
    pub n: u32,
    pub m: u32,
    pub table: SymbolTable,
    pub fields: BTreeMap<String, VectorField>,
    pub systems: BTreeMap<String, PDESystem>,
    pub transforms: BTreeMap<String, PointTransformation>,
    pub specs: BTreeMap<String, MASpec>,
}

impl SessionFile {
    pub fn parse(text: &str) -> Result<SessionFile, SessionError> {
        Loader::default().load(text)
    }
}

#[derive(Default)]
struct Loader {
    session: Option<SessionFile>,
    names: BTreeMap<String, usize>,
}

/// `(line number, text with comments stripped)` for non-blank lines.
fn logical_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((k + 1, body))
    })
}

fn invalid(line: usize, message: impl Into<String>) -> SessionError {
    SessionError::Invalid {
        line,
        message: message.into(),
    }
}

/// Re-home a parse error from a single-line fragment to its file line.
fn at_line(err: ParseError, file_line: usize) -> ParseError {
    match err {
        ParseError::Syntax { col, message, .. } => ParseError::Syntax {
            line: file_line,
            col,
            message,
        },
        ParseError::Undeclared { col, name, .. } => ParseError::Undeclared {
            line: file_line,
            col,
            name,
        },
    }
}

impl Loader {
    fn load(mut self, text: &str) -> Result<SessionFile, SessionError> {
        let mut lines = logical_lines(text).peekable();
        let Some((first, body)) = lines.next() else {
            return Err(invalid(1, "empty session: expected `signature n m`"));
        };
        let parts: Vec<&str> = body.split_whitespace().collect();
        let (n, m) = match parts.as_slice() {
            ["signature", n, m] => (
                n.parse().map_err(|_| invalid(first, "bad signature"))?,
                m.parse().map_err(|_| invalid(first, "bad signature"))?,
            ),
            _ => return Err(invalid(first, "expected `signature n m` first")),
        };
        if n == 0 || m == 0 {
            return Err(invalid(first, "signature components must be positive"));
        }
        self.session = Some(SessionFile {
            n,
            m,
            table: SymbolTable::new(n, m),
            fields: BTreeMap::new(),
            systems: BTreeMap::new(),
            transforms: BTreeMap::new(),
            specs: BTreeMap::new(),
        });
        while let Some((line, body)) = lines.next() {
            let words: Vec<&str> = body.split_whitespace().collect();
            match words.as_slice() {
                ["param", rest @ ..] if !rest.is_empty() => {
                    for name in rest {
                        self.declare(line, name)?;
                        self.s().table.params.insert((*name).to_string());
                    }
                }
                ["opaque", name, ":", deps @ ..] if !deps.is_empty() => {
                    self.declare(line, name)?;
                    let mut ix = Vec::new();
                    for d in deps {
                        let k: u32 = d
                            .strip_prefix('u')
                            .and_then(|s| s.parse().ok())
                            .filter(|k| (1..=m).contains(k))
                            .ok_or_else(|| {
                                invalid(line, format!("`{d}` is not a dependent variable"))
                            })?;
                        if ix.contains(&k) {
                            return Err(invalid(line, format!("repeated dependency `{d}`")));
                        }
                        ix.push(k);
                    }
                    ix.sort_unstable();
                    self.s().table.opaques.insert((*name).to_string(), ix);
                }
                ["expr", name, "=", ..] => {
                    self.declare(line, name)?;
                    let rhs = body.splitn(2, '=').nth(1).unwrap();
                    let e = self.expr(line, rhs)?;
                    self.s().table.exprs.insert((*name).to_string(), e);
                }
                [kind @ ("field" | "system" | "transform" | "spec"), name, "{"] => {
                    self.declare(line, name)?;
                    let mut block: Vec<(usize, &str)> = Vec::new();
                    let close = loop {
                        match lines.next() {
                            Some((l, "}")) => break l,
                            Some(entry) => block.push(entry),
                            None => return Err(invalid(line, "unterminated block")),
                        }
                    };
                    match *kind {
                        "field" => self.field(line, name, &block)?,
                        "system" => self.system(line, name, &block)?,
                        "transform" => self.transform(line, close, name, &block)?,
                        _ => self.spec(line, name, &block)?,
                    }
                }
                _ => return Err(invalid(line, format!("unrecognized declaration `{body}`"))),
            }
        }
        Ok(self.session.unwrap())
    }

    fn s(&mut self) -> &mut SessionFile {
        self.session.as_mut().unwrap()
    }

    fn declare(&mut self, line: usize, name: &str) -> Result<(), SessionError> {
        if SymbolTable::is_reserved(name) {
            return Err(invalid(line, format!("`{name}` is a reserved name")));
        }
        if !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
            || !name.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_')
        {
            return Err(invalid(line, format!("`{name}` is not a valid identifier")));
        }
        if self.names.insert(name.to_string(), line).is_some() {
            return Err(SessionError::Duplicate {
                line,
                name: name.to_string(),
            });
        }
        Ok(())
    }

    fn expr(&mut self, line: usize, text: &str) -> Result<Expr, SessionError> {
        parse_expr(text, &self.s().table)
            .map_err(|e| at_line(e, line))
            .map_err(SessionError::Parse)
    }

    fn list(&mut self, line: usize, text: &str, want: usize) -> Result<Vec<Expr>, SessionError> {
        let es = parse_expr_list(text, &self.s().table)
            .map_err(|e| at_line(e, line))
            .map_err(SessionError::Parse)?;
        if es.len() != want {
            return Err(invalid(
                line,
                format!("expected {want} expressions, found {}", es.len()),
            ));
        }
        Ok(es)
    }

    /// Split a `key = value` block entry.
    fn entry<'b>(&self, line: usize, body: &'b str) -> Result<(&'b str, &'b str), SessionError> {
        let mut halves = body.splitn(2, '=');
        let key = halves.next().unwrap().trim();
        let value = halves
            .next()
            .ok_or_else(|| invalid(line, "expected `key = expressions`"))?;
        Ok((key, value))
    }

    fn field(
        &mut self,
        at: usize,
        name: &str,
        block: &[(usize, &str)],
    ) -> Result<(), SessionError> {
        let (n, m) = (self.s().n, self.s().m);
        let mut xi = None;
        let mut eta = None;
        for (line, body) in block {
            let (key, value) = self.entry(*line, body)?;
            let want = match key {
                "xi" => n,
                "eta" => m,
                other => return Err(invalid(*line, format!("unknown field entry `{other}`"))),
            };
            let parsed = self.list(*line, value, want as usize)?;
            match key {
                "xi" => xi = Some(parsed),
                _ => eta = Some(parsed),
            }
        }
        let (Some(xi), Some(eta)) = (xi, eta) else {
            return Err(invalid(at, "field block needs both `xi` and `eta`"));
        };
        let f = VectorField::new(n, m, xi, eta)
            .map_err(|e| invalid(at, format!("invalid field `{name}`: {e}")))?;
        self.s().fields.insert(name.to_string(), f);
        Ok(())
    }

    fn system(
        &mut self,
        at: usize,
        name: &str,
        block: &[(usize, &str)],
    ) -> Result<(), SessionError> {
        if block.is_empty() {
            return Err(invalid(at, "system block needs at least one equation"));
        }
        let mut equations = Vec::new();
        for (line, body) in block {
            equations.push(self.expr(*line, body)?);
        }
        let (n, m) = (self.s().n, self.s().m);
        self.s()
            .systems
            .insert(name.to_string(), PDESystem::new(n, m, equations));
        Ok(())
    }

    fn transform(
        &mut self,
        at: usize,
        close: usize,
        name: &str,
        block: &[(usize, &str)],
    ) -> Result<(), SessionError> {
        let (n, m) = (self.s().n, self.s().m);
        let mut parts: BTreeMap<&str, Vec<Expr>> = BTreeMap::new();
        for (line, body) in block {
            let (key, value) = self.entry(*line, body)?;
            let want = match key {
                "z" | "xinv" => n,
                "w" | "uinv" => m,
                other => {
                    return Err(invalid(*line, format!("unknown transform entry `{other}`")))
                }
            };
            let parsed = self.list(*line, value, want as usize)?;
            if parts.insert(key, parsed).is_some() {
                return Err(invalid(*line, format!("repeated transform entry `{key}`")));
            }
        }
        let (Some(z), Some(w)) = (parts.remove("z"), parts.remove("w")) else {
            return Err(invalid(at, "transform block needs both `z` and `w`"));
        };
        let inverse = match (parts.remove("xinv"), parts.remove("uinv")) {
            (Some(x_of), Some(u_of)) => Some(Inverse { x_of, u_of }),
            (None, None) => None,
            _ => return Err(invalid(close, "`xinv` and `uinv` must appear together")),
        };
        self.s().transforms.insert(
            name.to_string(),
            PointTransformation { n, m, z, w, inverse },
        );
        Ok(())
    }

    fn spec(&mut self, at: usize, name: &str, block: &[(usize, &str)]) -> Result<(), SessionError> {
        let n = self.s().n;
        let dim = match n {
            2 => MADim::OnePlusOne,
            3 => MADim::TwoPlusOne,
            4 => MADim::ThreePlusOne,
            other => {
                return Err(invalid(
                    at,
                    format!("no Monge-Ampère class with {other} independent variables"),
                ))
            }
        };
        let mut kappa = None;
        let mut alpha = None;
        for (line, body) in block {
            let (key, value) = self.entry(*line, body)?;
            let want = match key {
                "kappa" => dim.kappa_count(),
                "alpha" => dim.alpha_count(),
                other => return Err(invalid(*line, format!("unknown spec entry `{other}`"))),
            };
            let parsed = self.list(*line, value, want)?;
            match key {
                "kappa" => kappa = Some(parsed),
                _ => alpha = Some(parsed),
            }
        }
        let (Some(kappa), Some(alpha)) = (kappa, alpha) else {
            return Err(invalid(at, "spec block needs both `kappa` and `alpha`"));
        };
        let spec = MASpec::new(dim, kappa, alpha)
            .map_err(|e| invalid(at, format!("invalid spec `{name}`: {e}")))?;
        self.s().specs.insert(name.to_string(), spec);
        Ok(())
    }
}
