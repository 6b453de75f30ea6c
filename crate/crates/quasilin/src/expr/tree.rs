//! Expression trees: the user-facing carrier for formulas.
//!
//! Expressions are immutable values built from exact rational constants,
//! symbols, sums, products and integer powers.  Structural simplification is
//! limited to construction-time flattening and constant folding; the
//! decidable equality test lives in [`crate::expr::rnf`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, Zero};

use super::symbol::SymbolId;
use super::ExprError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Rat(BigRational),
    Sym(SymbolId),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    /// Integer power; negative exponents are allowed and denote division.
    Pow(Box<Expr>, i64),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Rat(BigRational::zero())
    }

    pub fn one() -> Expr {
        Expr::Rat(BigRational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Rat(BigRational::from(BigInt::from(n)))
    }

    pub fn rat(num: i64, den: i64) -> Expr {
        Expr::Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn sym(s: SymbolId) -> Expr {
        Expr::Sym(s)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_one())
    }

    /// n-ary sum with flattening and constant folding.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut konst = BigRational::zero();
        for t in terms {
            match t {
                Expr::Sum(inner) => {
                    for s in inner {
                        match s {
                            Expr::Rat(r) => konst += r,
                            other => flat.push(other),
                        }
                    }
                }
                Expr::Rat(r) => konst += r,
                other => flat.push(other),
            }
        }
        if !konst.is_zero() {
            flat.push(Expr::Rat(konst));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::Sum(flat),
        }
    }

    /// n-ary product with flattening and constant folding.
    pub fn prod(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::new();
        let mut konst = BigRational::one();
        for t in factors {
            match t {
                Expr::Prod(inner) => {
                    for s in inner {
                        match s {
                            Expr::Rat(r) => konst *= r,
                            other => flat.push(other),
                        }
                    }
                }
                Expr::Rat(r) => konst *= r,
                other => flat.push(other),
            }
        }
        if konst.is_zero() {
            return Expr::zero();
        }
        if !konst.is_one() {
            flat.insert(0, Expr::Rat(konst));
        }
        match flat.len() {
            0 => Expr::one(),
            1 => flat.pop().unwrap(),
            _ => Expr::Prod(flat),
        }
    }

    pub fn pow(base: Expr, exp: i64) -> Expr {
        match exp {
            0 => Expr::one(),
            1 => base,
            _ => match base {
                Expr::Rat(r) if exp > 0 => {
                    let mut acc = BigRational::one();
                    for _ in 0..exp {
                        acc *= r.clone();
                    }
                    Expr::Rat(acc)
                }
                b => Expr::Pow(Box::new(b), exp),
            },
        }
    }

    pub fn neg(self) -> Expr {
        Expr::prod(vec![Expr::int(-1), self])
    }

    /// Formal partial derivative with respect to a symbol.  All symbols other
    /// than `s` are independent indeterminates, except opaque derivatives,
    /// which chain along dependent variables.
    pub fn diff(&self, s: &SymbolId) -> Expr {
        match self {
            Expr::Rat(_) => Expr::zero(),
            Expr::Sym(t) => {
                if t == s {
                    Expr::one()
                } else {
                    match t.formal_derivative(s) {
                        Some(d) => Expr::Sym(d),
                        None => Expr::zero(),
                    }
                }
            }
            Expr::Sum(terms) => Expr::sum(terms.iter().map(|t| t.diff(s)).collect()),
            Expr::Prod(factors) => {
                let mut out = Vec::new();
                for (k, fk) in factors.iter().enumerate() {
                    let d = fk.diff(s);
                    if d.is_zero() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = Vec::with_capacity(factors.len());
                    for (j, fj) in factors.iter().enumerate() {
                        prod.push(if j == k { d.clone() } else { fj.clone() });
                    }
                    out.push(Expr::prod(prod));
                }
                Expr::sum(out)
            }
            Expr::Pow(base, e) => {
                let d = base.diff(s);
                if d.is_zero() {
                    return Expr::zero();
                }
                Expr::prod(vec![
                    Expr::int(*e),
                    Expr::pow((**base).clone(), e - 1),
                    d,
                ])
            }
        }
    }

    /// Simultaneous substitution of symbols by expressions.
    pub fn substitute(&self, bindings: &BTreeMap<SymbolId, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        match self {
            Expr::Rat(_) => self.clone(),
            Expr::Sym(s) => bindings.get(s).cloned().unwrap_or_else(|| self.clone()),
            Expr::Sum(terms) => Expr::sum(terms.iter().map(|t| t.substitute(bindings)).collect()),
            Expr::Prod(fs) => Expr::prod(fs.iter().map(|t| t.substitute(bindings)).collect()),
            Expr::Pow(base, e) => Expr::pow(base.substitute(bindings), *e),
        }
    }

    /// Total derivative `D_i = d/dx_i + sum_A u_{A,i} d/du_A` on first-order
    /// jet space.  The input must not mention jet symbols (that would require
    /// second-order jets).
    pub fn total_derivative(&self, i: u32, m: u32) -> Result<Expr, ExprError> {
        if self.contains(|s| s.is_jet()) {
            return Err(ExprError::InputContainsJets);
        }
        let mut terms = vec![self.diff(&SymbolId::indep(i))];
        for a in 1..=m {
            let du = self.diff(&SymbolId::dep(a));
            if !du.is_zero() {
                terms.push(Expr::prod(vec![Expr::sym(SymbolId::jet(a, i)), du]));
            }
        }
        Ok(Expr::sum(terms))
    }

    pub fn contains(&self, pred: impl Fn(&SymbolId) -> bool + Copy) -> bool {
        match self {
            Expr::Rat(_) => false,
            Expr::Sym(s) => pred(s),
            Expr::Sum(ts) | Expr::Prod(ts) => ts.iter().any(|t| t.contains(pred)),
            Expr::Pow(b, _) => b.contains(pred),
        }
    }

    pub fn symbols(&self) -> Vec<SymbolId> {
        let mut acc = std::collections::BTreeSet::new();
        self.collect_symbols(&mut acc);
        acc.into_iter().collect()
    }

    fn collect_symbols(&self, acc: &mut std::collections::BTreeSet<SymbolId>) {
        match self {
            Expr::Rat(_) => {}
            Expr::Sym(s) => {
                acc.insert(s.clone());
            }
            Expr::Sum(ts) | Expr::Prod(ts) => {
                for t in ts {
                    t.collect_symbols(acc);
                }
            }
            Expr::Pow(b, _) => b.collect_symbols(acc),
        }
    }

    /// Exact evaluation at a rational point.  Every symbol occurring in the
    /// expression must be bound.  Fails on division by zero.
    pub fn eval(&self, point: &BTreeMap<SymbolId, BigRational>) -> Result<BigRational, ExprError> {
        match self {
            Expr::Rat(r) => Ok(r.clone()),
            Expr::Sym(s) => point
                .get(s)
                .cloned()
                .ok_or_else(|| ExprError::UnboundSymbol(s.to_string())),
            Expr::Sum(ts) => {
                let mut acc = BigRational::zero();
                for t in ts {
                    acc += t.eval(point)?;
                }
                Ok(acc)
            }
            Expr::Prod(ts) => {
                let mut acc = BigRational::one();
                for t in ts {
                    acc *= t.eval(point)?;
                }
                Ok(acc)
            }
            Expr::Pow(b, e) => {
                let v = b.eval(point)?;
                if *e < 0 && v.is_zero() {
                    return Err(ExprError::DivisionByZero);
                }
                let mut acc = BigRational::one();
                for _ in 0..e.unsigned_abs() {
                    acc *= v.clone();
                }
                if *e < 0 {
                    acc = acc.recip();
                }
                Ok(acc)
            }
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs.neg()])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::prod(vec![self, rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

fn needs_parens_in_prod(e: &Expr) -> bool {
    matches!(e, Expr::Sum(_)) || matches!(e, Expr::Rat(r) if r.is_negative() || !r.is_integer())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Expr::Sym(s) => write!(f, "{s}"),
            Expr::Sum(ts) => {
                for (k, t) in ts.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            Expr::Prod(ts) => {
                for (k, t) in ts.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    if needs_parens_in_prod(t) {
                        write!(f, "({t})")?;
                    } else {
                        write!(f, "{t}")?;
                    }
                }
                Ok(())
            }
            Expr::Pow(b, e) => {
                match **b {
                    Expr::Sym(_) => write!(f, "{b}")?,
                    _ => write!(f, "({b})")?,
                }
                if *e < 0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(a: u32, i: u32) -> Expr {
        Expr::sym(SymbolId::jet(a, i))
    }

    #[test]
    fn diff_of_monge_ampere_bracket() {
        // d/du_{1,2} (u_{1,1} u_{2,2} - u_{1,2}^2) = -2 u_{1,2}
        let e = jet(1, 1) * jet(2, 2) - Expr::pow(jet(1, 2), 2);
        let d = e.diff(&SymbolId::jet(1, 2));
        let expected = Expr::int(-2) * jet(1, 2);
        assert!(crate::expr::rnf::normalize(&(d - expected)).unwrap().is_zero());
    }

    #[test]
    fn diff_opaque_chain() {
        let f1 = Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], &[1]));
        let d = f1.diff(&SymbolId::dep(2));
        assert_eq!(d, Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], &[1, 2])));
    }

    #[test]
    fn diff_constant_is_zero() {
        assert!(Expr::rat(7, 3).diff(&SymbolId::dep(1)).is_zero());
    }

    #[test]
    fn total_derivative_examples() {
        // D_2 (x_1 - f_{;1}(u_1,u_2)) = -(f_{;11} u_{1,2} + f_{;12} u_{2,2})
        let e = Expr::sym(SymbolId::indep(1)) - Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], &[1]));
        let d = e.total_derivative(2, 2).unwrap();
        let f11 = Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], &[1, 1]));
        let f12 = Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], &[1, 2]));
        let expected = (f11 * jet(1, 2) + f12 * jet(2, 2)).neg();
        assert!(crate::expr::rnf::normalize(&(d - expected)).unwrap().is_zero());

        let one = Expr::sym(SymbolId::indep(1)).total_derivative(1, 2).unwrap();
        assert!(one.is_one());

        let u12 = Expr::sym(SymbolId::dep(1)).total_derivative(2, 2).unwrap();
        assert_eq!(u12, jet(1, 2));
    }

    #[test]
    fn total_derivative_rejects_jets() {
        let e = jet(1, 1);
        assert!(matches!(
            e.total_derivative(1, 2),
            Err(ExprError::InputContainsJets)
        ));
    }

    #[test]
    fn substitute_empty_and_shift() {
        let u11 = jet(1, 1);
        assert_eq!(u11.substitute(&BTreeMap::new()), u11);

        // u_1 -> u_1 + a1 x1 + a2 x2
        let mut b = BTreeMap::new();
        let shift = Expr::sym(SymbolId::dep(1))
            + Expr::sym(SymbolId::param("a1")) * Expr::sym(SymbolId::indep(1))
            + Expr::sym(SymbolId::param("a2")) * Expr::sym(SymbolId::indep(2));
        b.insert(SymbolId::dep(1), shift.clone());
        assert_eq!(Expr::sym(SymbolId::dep(1)).substitute(&b), shift);
        // jets are untouched unless explicitly bound
        assert_eq!(jet(1, 1).substitute(&b), jet(1, 1));
    }
}
