//! Vector fields on the base space, Lie brackets, first prolongation, and
//! the structural checks behind the reduction theorem: a solvable algebra of
//! point symmetries spanned by `n` commuting fields together with one field
//! that reproduces each of them under bracket, acting with rank `n`.

use std::collections::{BTreeMap, BTreeSet};

use num::BigRational;
use thiserror::Error;

use crate::expr::poly::{Monomial, Poly};
use crate::expr::solve::{matrix_rank, solve_with_residuals};
use crate::expr::{expr_eq, normalize, Expr, ExprError, Rnf, SymbolId};

#[derive(Debug, Clone, Error)]
pub enum LieError {
    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector field components must be point functions, found jet variable in component {0}")]
    JetInComponent(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A point vector field  X = sum_i xi_i d/dx_i + sum_A eta_A d/du_A
/// on a space with `n` independent and `m` dependent variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub n: u32,
    pub m: u32,
    pub xi: Vec<Expr>,
    pub eta: Vec<Expr>,
}

impl VectorField {
    pub fn new(n: u32, m: u32, xi: Vec<Expr>, eta: Vec<Expr>) -> Result<Self, LieError> {
        if xi.len() != n as usize {
            return Err(LieError::DimensionMismatch {
                expected: n as usize,
                got: xi.len(),
            });
        }
        if eta.len() != m as usize {
            return Err(LieError::DimensionMismatch {
                expected: m as usize,
                got: eta.len(),
            });
        }
        for c in xi.iter().chain(eta.iter()) {
            if c.symbols().iter().any(SymbolId::is_jet) {
                return Err(LieError::JetInComponent(format!("{c}")));
            }
        }
        Ok(VectorField { n, m, xi, eta })
    }

    /// The translation field d/dx_i (1-based index).
    pub fn translation(n: u32, m: u32, i: u32) -> Self {
        let xi = (1..=n)
            .map(|j| if j == i { Expr::one() } else { Expr::zero() })
            .collect();
        VectorField {
            n,
            m,
            xi,
            eta: vec![Expr::zero(); m as usize],
        }
    }

    /// Apply the field to a point function (differentiation along the field).
    pub fn apply(&self, e: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (j, xi) in self.xi.iter().enumerate() {
            if !xi.is_zero() {
                terms.push(Expr::prod(vec![
                    xi.clone(),
                    e.diff(&SymbolId::indep(j as u32 + 1)),
                ]));
            }
        }
        for (a, eta) in self.eta.iter().enumerate() {
            if !eta.is_zero() {
                terms.push(Expr::prod(vec![
                    eta.clone(),
                    e.diff(&SymbolId::dep(a as u32 + 1)),
                ]));
            }
        }
        Expr::sum(terms)
    }

    pub fn is_zero(&self) -> Result<bool, ExprError> {
        for c in self.xi.iter().chain(self.eta.iter()) {
            if !normalize(c)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equals(&self, other: &VectorField) -> Result<bool, ExprError> {
        if self.n != other.n || self.m != other.m {
            return Ok(false);
        }
        for (a, b) in self
            .xi
            .iter()
            .zip(&other.xi)
            .chain(self.eta.iter().zip(&other.eta))
        {
            if !expr_eq(a, b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Lie bracket [X, Y]: componentwise X(Y^c) - Y(X^c).
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, LieError> {
    if x.n != y.n || x.m != y.m {
        return Err(LieError::DimensionMismatch {
            expected: (x.n + x.m) as usize,
            got: (y.n + y.m) as usize,
        });
    }
    let xi = x
        .xi
        .iter()
        .zip(&y.xi)
        .map(|(xc, yc)| x.apply(yc) - y.apply(xc))
        .collect();
    let eta = x
        .eta
        .iter()
        .zip(&y.eta)
        .map(|(xc, yc)| x.apply(yc) - y.apply(xc))
        .collect();
    VectorField::new(x.n, x.m, xi, eta)
}

/// First prolongation of a point field to the jet space of first
/// derivatives u[A,i].
#[derive(Debug, Clone)]
pub struct ProlongedField {
    pub base: VectorField,
    /// zeta[A-1][i-1] is the coefficient of d/du[A,i].
    pub zeta: Vec<Vec<Expr>>,
}

/// zeta_{A,i} = D_i eta_A - sum_k u[A,k] D_i xi_k,
/// with D_i the first-order total derivative.
pub fn prolong1(x: &VectorField) -> Result<ProlongedField, LieError> {
    let n = x.n;
    let m = x.m;
    let mut zeta = Vec::with_capacity(m as usize);
    for a in 1..=m {
        let mut row = Vec::with_capacity(n as usize);
        for i in 1..=n {
            let mut e = x.eta[(a - 1) as usize].total_derivative(i, m)?;
            for k in 1..=n {
                let dxi = x.xi[(k - 1) as usize].total_derivative(i, m)?;
                e = e - Expr::prod(vec![Expr::sym(SymbolId::jet(a, k)), dxi]);
            }
            row.push(e);
        }
        zeta.push(row);
    }
    Ok(ProlongedField {
        base: x.clone(),
        zeta,
    })
}

impl ProlongedField {
    /// Apply the prolonged field to a function of (x, u, u[A,i]).
    pub fn apply(&self, e: &Expr) -> Expr {
        let mut terms = vec![self.base.apply(e)];
        for a in 1..=self.base.m {
            for i in 1..=self.base.n {
                let z = &self.zeta[(a - 1) as usize][(i - 1) as usize];
                if !z.is_zero() {
                    terms.push(Expr::prod(vec![
                        z.clone(),
                        e.diff(&SymbolId::jet(a, i)),
                    ]));
                }
            }
        }
        Expr::sum(terms)
    }

    /// Apply to a polynomial, staying at the polynomial level.  Components
    /// are normalized once; the result is a rational normal form.
    pub fn apply_poly(&self, p: &Poly) -> Result<Rnf, ExprError> {
        let mut acc = Rnf::zero();
        for (j, xi) in self.base.xi.iter().enumerate() {
            let d = p.derivative(&SymbolId::indep(j as u32 + 1));
            if !d.is_zero() {
                acc = acc.add(&normalize(xi)?.mul(&Rnf::from_poly(d)));
            }
        }
        for (a, eta) in self.base.eta.iter().enumerate() {
            let d = p.derivative(&SymbolId::dep(a as u32 + 1));
            if !d.is_zero() {
                acc = acc.add(&normalize(eta)?.mul(&Rnf::from_poly(d)));
            }
        }
        for a in 1..=self.base.m {
            for i in 1..=self.base.n {
                let d = p.derivative(&SymbolId::jet(a, i));
                if !d.is_zero() {
                    let z = &self.zeta[(a - 1) as usize][(i - 1) as usize];
                    acc = acc.add(&normalize(z)?.mul(&Rnf::from_poly(d)));
                }
            }
        }
        Ok(acc)
    }
}

/// Rank of the distribution spanned by the fields, over the field of
/// rational functions of the base variables.
pub fn distribution_rank(fields: &[VectorField]) -> Result<usize, LieError> {
    let mut rows = Vec::with_capacity(fields.len());
    for f in fields {
        let mut row = Vec::with_capacity((f.n + f.m) as usize);
        for c in f.xi.iter().chain(f.eta.iter()) {
            row.push(normalize(c)?);
        }
        rows.push(row);
    }
    Ok(matrix_rank(&rows))
}

/// Structure report for the candidate algebra {X_1, ..., X_n, X_{n+1}}.
#[derive(Debug, Clone)]
pub struct AlgebraReport {
    /// [X_i, X_j] = 0 for 1 <= i < j <= n.
    pub commuting: Vec<(usize, usize, bool)>,
    /// [X_i, X_{n+1}] = X_i for 1 <= i <= n.
    pub reproduced: Vec<(usize, bool)>,
    /// Rank of the full distribution.
    pub rank: usize,
    pub rank_ok: bool,
    pub holds: bool,
}

/// Check the solvable-algebra structure required by the reduction theorem:
/// the first `n` fields commute pairwise, each is reproduced by its bracket
/// with the last field, and the distribution they span has rank `n`.
pub fn check_theorem1_structure(fields: &[VectorField]) -> Result<AlgebraReport, LieError> {
    assert!(fields.len() >= 2, "need at least two fields");
    let n = fields.len() - 1;
    let mut commuting = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let b = lie_bracket(&fields[i], &fields[j])?;
            commuting.push((i + 1, j + 1, b.is_zero()?));
        }
    }
    let mut reproduced = Vec::new();
    for i in 0..n {
        let b = lie_bracket(&fields[i], &fields[n])?;
        reproduced.push((i + 1, b.equals(&fields[i])?));
    }
    let rank = distribution_rank(fields)?;
    let rank_ok = rank == n;
    let holds = rank_ok
        && commuting.iter().all(|(_, _, ok)| *ok)
        && reproduced.iter().all(|(_, ok)| *ok);
    Ok(AlgebraReport {
        commuting,
        reproduced,
        rank,
        rank_ok,
        holds,
    })
}

// ---------------------------------------------------------------------------
// Symmetry certificates
// ---------------------------------------------------------------------------

/// A verified multiplier certificate: pr1(X)(Delta_k) = sum_l lambda_{kl} Delta_l,
/// established identically on the jet space (for the polynomial numerators of
/// the given equations).
#[derive(Debug, Clone)]
pub struct SymmetryCertificate {
    pub is_symmetry: bool,
    /// multipliers[k][l], present when `is_symmetry`.
    pub multipliers: Vec<Vec<Rnf>>,
    /// Residual obstructions (nonzero only when `is_symmetry` is false).
    pub residuals: Vec<Rnf>,
}

/// An exchange-type equation c*(u[hi] - u[lo]) with hi > lo.
struct Binomial {
    hi: SymbolId,
    lo: SymbolId,
    coeff: BigRational,
    index: usize,
}

fn as_binomial(p: &Poly, index: usize) -> Option<Binomial> {
    if p.terms.len() != 2 {
        return None;
    }
    let mut it = p.terms.iter();
    let (m1, c1) = it.next().unwrap();
    let (m2, c2) = it.next().unwrap();
    if *c1 != -c2.clone() {
        return None;
    }
    let single_jet = |m: &Monomial| -> Option<SymbolId> {
        if m.0.len() == 1 && m.0[0].1 == 1 && m.0[0].0.is_jet() {
            Some(m.0[0].0.clone())
        } else {
            None
        }
    };
    let s1 = single_jet(m1)?;
    let s2 = single_jet(m2)?;
    // terms iterate in increasing monomial order: s2 > s1
    Some(Binomial {
        hi: s2,
        lo: s1,
        coeff: c2.clone(),
        index,
    })
}

/// Reduce `p` modulo the binomials, rewriting each `hi` to its `lo`
/// representative and recording the exact quotient against each binomial:
/// p = reduced + sum_b q_b * coeff_b * (hi_b - lo_b).
fn reduce_mod_binomials(p: &Poly, bins: &[Binomial]) -> (Poly, Vec<Poly>) {
    let mut cur = p.clone();
    let mut quotients = vec![Poly::zero(); bins.len()];
    for (bi, b) in bins.iter().enumerate() {
        if cur.degree_of(&b.hi) == 0 {
            continue;
        }
        let mut map = BTreeMap::new();
        map.insert(b.hi.clone(), Poly::var(b.lo.clone()));
        let subbed = cur.substitute(&map);
        let diff = cur.sub(&subbed);
        // diff is divisible by (hi - lo)
        let divisor = Poly::var(b.hi.clone()).sub(&Poly::var(b.lo.clone()));
        let q = diff
            .exact_div(&divisor)
            .expect("substitution difference divisible by the binomial");
        quotients[bi] = q.scale(&b.coeff.recip());
        cur = subbed;
    }
    (cur, quotients)
}

/// Decide whether `field` is a Lie point symmetry of the system given by the
/// zero sets of `eqs`, by constructing a multiplier certificate.
///
/// Equations are normalized; the certificate is produced for their polynomial
/// numerators (the discarded denominators are nowhere-zero rational factors).
/// Exchange-type binomial equations are handled by constructive division,
/// which keeps the remaining matching problem small; the leftover part is
/// matched against the other equations with multipliers polynomial in the
/// jets of degree at most `mult_degree` (default: the degree needed to match
/// the jet degree of the prolonged equation).
pub fn check_symmetry(
    eqs: &[Expr],
    field: &VectorField,
    mult_degree: Option<u32>,
) -> Result<SymmetryCertificate, LieError> {
    let pr = prolong1(field)?;
    let polys: Vec<Poly> = eqs
        .iter()
        .map(|e| Ok(normalize(e)?.num))
        .collect::<Result<_, ExprError>>()?;

    let mut bins: Vec<Binomial> = Vec::new();
    let mut others: Vec<(usize, Poly)> = Vec::new();
    for (k, p) in polys.iter().enumerate() {
        match as_binomial(p, k) {
            Some(b) => bins.push(b),
            None => others.push((k, p.clone())),
        }
    }
    // symmetrized form of the non-binomial equations
    let others_sym: Vec<(usize, Poly)> = others
        .iter()
        .map(|(k, p)| (*k, reduce_mod_binomials(p, &bins).0))
        .collect();

    let neqs = polys.len();
    let mut multipliers = vec![vec![Rnf::zero(); neqs]; neqs];
    let mut residuals = Vec::new();

    let is_jet = |s: &SymbolId| s.is_jet();

    for (k, p) in polys.iter().enumerate() {
        let e = pr.apply_poly(p)?;
        // e = e.num / e.den with jet-free denominator
        if e.den.contains_symbol_where(is_jet) {
            // cannot certify with jet-free-denominator multipliers
            residuals.push(e.clone());
            continue;
        }
        let (e_sym, quots) = reduce_mod_binomials(&e.num, &bins);
        for (bi, b) in bins.iter().enumerate() {
            if !quots[bi].is_zero() {
                multipliers[k][b.index] =
                    Rnf::from_poly(quots[bi].clone()).div(&Rnf::from_poly(e.den.clone()))?;
            }
        }
        if e_sym.is_zero() {
            continue;
        }
        if others_sym.is_empty() {
            residuals.push(Rnf::from_poly(e_sym));
            continue;
        }
        // multiplier ansatz: for each non-binomial equation, a jet-polynomial
        // of degree at most deg_jets(e_sym) - deg_jets(delta)
        let e_jet_deg = e_sym
            .terms
            .keys()
            .map(|m| m.degree_where(is_jet))
            .max()
            .unwrap_or(0);
        let mut unknowns: Vec<(usize, Monomial)> = Vec::new();
        for (oi, (_, d)) in others_sym.iter().enumerate() {
            let d_deg = d
                .terms
                .keys()
                .map(|m| m.degree_where(is_jet))
                .max()
                .unwrap_or(0);
            let lam_deg = mult_degree.unwrap_or_else(|| e_jet_deg.saturating_sub(d_deg));
            for mono in jet_monomials_upto(&e_sym, &others_sym, lam_deg) {
                unknowns.push((oi, mono));
            }
        }
        // rows: coefficients grouped by jet monomial
        let rhs_groups = e_sym.group_by(is_jet);
        let mut col_groups: Vec<BTreeMap<Monomial, Poly>> = Vec::new();
        for (oi, mono) in &unknowns {
            let prod = others_sym[*oi]
                .1
                .mul_monomial(mono, &BigRational::from(num::BigInt::from(1)));
            col_groups.push(prod.group_by(is_jet));
        }
        let mut keys: BTreeSet<Monomial> = rhs_groups.keys().cloned().collect();
        for g in &col_groups {
            keys.extend(g.keys().cloned());
        }
        let mut aug: Vec<Vec<Rnf>> = Vec::new();
        for key in &keys {
            let mut row: Vec<Rnf> = col_groups
                .iter()
                .map(|g| Rnf::from_poly(g.get(key).cloned().unwrap_or_else(Poly::zero)))
                .collect();
            row.push(Rnf::from_poly(
                rhs_groups.get(key).cloned().unwrap_or_else(Poly::zero),
            ));
            aug.push(row);
        }
        let (values, _free, res) = solve_with_residuals(&aug, unknowns.len())?;
        if res.iter().any(|r| !r.is_zero()) {
            residuals.extend(res);
            continue;
        }
        let den = Rnf::from_poly(e.den.clone());
        for (ui, (oi, mono)) in unknowns.iter().enumerate() {
            if values[ui].is_zero() {
                continue;
            }
            let term = values[ui]
                .mul(&Rnf::from_poly(Poly::one().mul_monomial(
                    mono,
                    &BigRational::from(num::BigInt::from(1)),
                )))
                .div(&den)?;
            let l = others_sym[*oi].0;
            multipliers[k][l] = multipliers[k][l].add(&term);
        }
    }
    let is_symmetry = residuals.iter().all(|r| r.is_zero());
    Ok(SymmetryCertificate {
        is_symmetry,
        multipliers,
        residuals,
    })
}

/// All monomials of degree <= `deg` in the jet variables that occur in the
/// given polynomials (degree 0 gives just the unit monomial).
fn jet_monomials_upto(e: &Poly, others: &[(usize, Poly)], deg: u32) -> Vec<Monomial> {
    let mut vars: BTreeSet<SymbolId> = BTreeSet::new();
    for s in e.symbols() {
        if s.is_jet() {
            vars.insert(s);
        }
    }
    for (_, d) in others {
        for s in d.symbols() {
            if s.is_jet() {
                vars.insert(s);
            }
        }
    }
    let vars: Vec<SymbolId> = vars.into_iter().collect();
    let mut out = vec![Monomial::unit()];
    let mut frontier = vec![Monomial::unit()];
    for _ in 0..deg {
        let mut next = Vec::new();
        for m in &frontier {
            for v in &vars {
                let cand = m.mul(&Monomial::var(v.clone()));
                if !out.contains(&cand) {
                    out.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u32) -> Expr {
        Expr::sym(SymbolId::indep(i))
    }
    fn u(a: u32) -> Expr {
        Expr::sym(SymbolId::dep(a))
    }
    fn v(a: u32, i: u32) -> Expr {
        Expr::sym(SymbolId::jet(a, i))
    }
    fn f_deriv(idx: &[u32]) -> Expr {
        Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], idx))
    }

    /// The scaling-type field X_{n+1} = sum_i (x_i - f_{;i}) d/dx_i for n=m=2.
    fn scaling_field() -> VectorField {
        VectorField::new(
            2,
            2,
            vec![x(1) - f_deriv(&[1]), x(2) - f_deriv(&[2])],
            vec![Expr::zero(), Expr::zero()],
        )
        .unwrap()
    }

    #[test]
    fn translations_commute_and_scale() {
        let t1 = VectorField::translation(2, 2, 1);
        let t2 = VectorField::translation(2, 2, 2);
        let s = scaling_field();
        assert!(lie_bracket(&t1, &t2).unwrap().is_zero().unwrap());
        // [T_i, X_3] = T_i
        assert!(lie_bracket(&t1, &s).unwrap().equals(&t1).unwrap());
        assert!(lie_bracket(&t2, &s).unwrap().equals(&t2).unwrap());
        let rep = check_theorem1_structure(&[t1, t2, s]).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.rank, 2);
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let a = VectorField::new(
            1,
            1,
            vec![Expr::prod(vec![x(1), u(1)])],
            vec![Expr::pow(u(1), 2)],
        )
        .unwrap();
        let b = VectorField::new(1, 1, vec![x(1)], vec![u(1)]).unwrap();
        let ab = lie_bracket(&a, &b).unwrap();
        let ba = lie_bracket(&b, &a).unwrap();
        let sum = VectorField::new(
            1,
            1,
            vec![ab.xi[0].clone() + ba.xi[0].clone()],
            vec![ab.eta[0].clone() + ba.eta[0].clone()],
        )
        .unwrap();
        assert!(sum.is_zero().unwrap());
    }

    #[test]
    fn prolongation_of_scaling_field() {
        // For X = sum (x_i - f_{;i}) d/dx_i:
        // zeta_{A,i} = -u[A,i] + sum_{k,B} u[A,k] u[B,i] f_{;kB}
        let pr = prolong1(&scaling_field()).unwrap();
        let expected = Expr::sum(vec![
            Expr::neg(v(1, 1)),
            Expr::prod(vec![v(1, 1), v(1, 1), f_deriv(&[1, 1])]),
            Expr::prod(vec![v(1, 1), v(2, 1), f_deriv(&[1, 2])]),
            Expr::prod(vec![v(1, 2), v(1, 1), f_deriv(&[1, 2])]),
            Expr::prod(vec![v(1, 2), v(2, 1), f_deriv(&[2, 2])]),
        ]);
        assert!(expr_eq(&pr.zeta[0][0], &expected).unwrap());
    }

    #[test]
    fn rank_drops_for_dependent_fields() {
        let t1 = VectorField::translation(2, 2, 1);
        let mut t1b = t1.clone();
        t1b.xi[0] = Expr::prod(vec![Expr::int(3), u(1)]);
        // t1 and u1*t1 span rank 1
        assert_eq!(distribution_rank(&[t1.clone(), t1b]).unwrap(), 1);
        let t2 = VectorField::translation(2, 2, 2);
        assert_eq!(distribution_rank(&[t1, t2]).unwrap(), 2);
    }

    #[test]
    fn translation_is_symmetry_of_autonomous_equation() {
        // u[1,1]*u[2,2] - u[1,2]*u[2,1] + 1 = 0 with exchange u[1,2] = u[2,1]
        let det = Expr::sum(vec![
            Expr::prod(vec![v(1, 1), v(2, 2)]),
            Expr::neg(Expr::prod(vec![v(1, 2), v(2, 1)])),
            Expr::one(),
        ]);
        let exch = v(2, 1) - v(1, 2);
        let t1 = VectorField::translation(2, 2, 1);
        let cert = check_symmetry(&[det.clone(), exch.clone()], &t1, None).unwrap();
        assert!(cert.is_symmetry);
        // a generic rotation-breaking field is not a symmetry
        let bad = VectorField::new(
            2,
            2,
            vec![Expr::pow(x(1), 2), Expr::zero()],
            vec![Expr::zero(), Expr::zero()],
        )
        .unwrap();
        let cert2 = check_symmetry(&[det, exch], &bad, None).unwrap();
        assert!(!cert2.is_symmetry);
    }
}
