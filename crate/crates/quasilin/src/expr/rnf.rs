//! Canonical rational normal form over the polynomial ring.
//!
//! Every expression is flattened to a reduced fraction `num/den` of sparse
//! polynomials with
//!
//! * `gcd(num, den) = 1`,
//! * `den` with integer coefficients, content 1, positive leading
//!   coefficient (in the graded-lex term order),
//! * `den = 1` exactly when the expression is polynomial.
//!
//! Two expressions denote the same rational function iff their normal forms
//! are structurally equal, so `normalize(a - b).is_zero()` is a decision
//! procedure for equality.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One, Zero};

use super::poly::{poly_gcd, Poly};
use super::symbol::SymbolId;
use super::tree::Expr;
use super::ExprError;

/// A reduced, canonically scaled fraction of polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rnf {
    pub num: Poly,
    pub den: Poly,
}

impl Rnf {
    pub fn zero() -> Rnf {
        Rnf {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Rnf {
        Rnf {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Rnf {
        Rnf {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: BigRational) -> Rnf {
        Rnf::from_poly(Poly::constant(c))
    }

    pub fn var(s: SymbolId) -> Rnf {
        Rnf::from_poly(Poly::var(s))
    }

    /// Build from a raw fraction, reducing and rescaling to canonical form.
    pub fn new(num: Poly, den: Poly) -> Result<Rnf, ExprError> {
        if den.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Rnf::zero());
        }
        let g = poly_gcd(&num, &den);
        let mut num = num.exact_div(&g).expect("gcd divides numerator");
        let mut den = den.exact_div(&g).expect("gcd divides denominator");
        // canonical denominator scaling
        let den_prim = den.primitive_normalized();
        let ratio = scalar_ratio(&den, &den_prim);
        den = den_prim;
        num = num.scale(&ratio.recip());
        Ok(Rnf { num, den })
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn add(&self, other: &Rnf) -> Rnf {
        // combine over the lcm of the denominators to keep the gcd in
        // Rnf::new small
        let g = poly_gcd(&self.den, &other.den);
        let l = other.den.exact_div(&g).expect("gcd divides denominator");
        let r = self.den.exact_div(&g).expect("gcd divides denominator");
        Rnf::new(
            self.num.mul(&l).add(&other.num.mul(&r)),
            self.den.mul(&l),
        )
        .expect("denominators nonzero")
    }

    pub fn sub(&self, other: &Rnf) -> Rnf {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Rnf {
        Rnf {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Rnf) -> Rnf {
        Rnf::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("denominators nonzero")
    }

    pub fn div(&self, other: &Rnf) -> Result<Rnf, ExprError> {
        if other.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Rnf::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Result<Rnf, ExprError> {
        Rnf::one().div(self)
    }

    pub fn pow(&self, e: i64) -> Result<Rnf, ExprError> {
        if e >= 0 {
            Ok(Rnf {
                num: self.num.pow(e as u32),
                den: self.den.pow(e as u32),
            })
        } else {
            if self.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            Rnf::new(self.den.pow((-e) as u32), self.num.pow((-e) as u32))
        }
    }

    pub fn scale(&self, c: &BigRational) -> Rnf {
        Rnf {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn eval(&self, point: &BTreeMap<SymbolId, BigRational>) -> Result<BigRational, ExprError> {
        let d = self.den.eval(point)?;
        if d.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        Ok(self.num.eval(point)? / d)
    }

    pub fn to_expr(&self) -> Expr {
        let n = poly_to_expr(&self.num);
        if self.is_polynomial() {
            n
        } else {
            Expr::prod(vec![n, Expr::pow(poly_to_expr(&self.den), -1)])
        }
    }

    /// Substitute symbols by rational normal forms (simultaneously).
    pub fn substitute(&self, map: &BTreeMap<SymbolId, Rnf>) -> Result<Rnf, ExprError> {
        let n = poly_substitute(&self.num, map);
        let d = poly_substitute(&self.den, map);
        n.div(&d)
    }
}

/// The constant `a / b` for nonzero polynomials satisfying `a = (a/b) * b`.
fn scalar_ratio(a: &Poly, b: &Poly) -> BigRational {
    let (m, ca) = a.leading().expect("nonzero");
    let cb = b
        .terms
        .get(m)
        .expect("primitive part has the same support");
    ca / cb
}

fn poly_substitute(p: &Poly, map: &BTreeMap<SymbolId, Rnf>) -> Rnf {
    let mut out = Rnf::zero();
    for (m, c) in &p.terms {
        let mut acc = Rnf::constant(c.clone());
        for (s, e) in &m.0 {
            let base = match map.get(s) {
                Some(r) => r.clone(),
                None => Rnf::var(s.clone()),
            };
            acc = acc.mul(&base.pow(*e as i64).expect("nonnegative power"));
        }
        out = out.add(&acc);
    }
    out
}

/// Render a polynomial back into an expression tree.
pub fn poly_to_expr(p: &Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let mut terms = Vec::with_capacity(p.terms.len());
    for (m, c) in p.terms.iter().rev() {
        let mut factors = vec![Expr::Rat(c.clone())];
        for (s, e) in &m.0 {
            if *e == 1 {
                factors.push(Expr::sym(s.clone()));
            } else {
                factors.push(Expr::pow(Expr::sym(s.clone()), *e as i64));
            }
        }
        terms.push(Expr::prod(factors));
    }
    Expr::sum(terms)
}

/// Normalize an expression tree to canonical rational form.
pub fn normalize(e: &Expr) -> Result<Rnf, ExprError> {
    match e {
        Expr::Rat(c) => Ok(Rnf::constant(c.clone())),
        Expr::Sym(s) => Ok(Rnf::var(s.clone())),
        Expr::Sum(ts) => {
            let mut acc = Rnf::zero();
            for t in ts {
                acc = acc.add(&normalize(t)?);
            }
            Ok(acc)
        }
        Expr::Prod(ts) => {
            let mut acc = Rnf::one();
            for t in ts {
                acc = acc.mul(&normalize(t)?);
                if acc.is_zero() {
                    // still must surface division by zero further right
                    for rest in ts {
                        normalize(rest)?;
                    }
                    return Ok(Rnf::zero());
                }
            }
            Ok(acc)
        }
        Expr::Pow(b, e) => normalize(b)?.pow(*e),
    }
}

/// Decide whether two expressions denote the same rational function.
pub fn expr_eq(a: &Expr, b: &Expr) -> Result<bool, ExprError> {
    Ok(normalize(a)?.sub(&normalize(b)?).is_zero())
}

impl fmt::Display for Rnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}
