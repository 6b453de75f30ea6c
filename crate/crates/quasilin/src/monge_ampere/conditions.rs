//! Derivation of the coefficient conditions under which the scaling-type
//! field sum_i (x_i - f_{;i}) d/dx_i is a symmetry of the homogenized
//! Monge-Ampère system.
//!
//! The derivation runs on the "hatted" form of the equation: the same slot
//! basis with fresh abstract coefficients kh_1, kh_2, ... and no jet-free
//! part.  The multiplier-matching residuals of the symmetry check are then
//! linear in the hatted coefficients; reduced row echelon form over the
//! field of rational functions in the f-derivatives turns them into a
//! canonical, integer-primitive list of conditions.

use std::collections::BTreeMap;

use num::BigRational;

use crate::expr::poly::{Monomial, Poly};
use crate::expr::rnf::poly_to_expr;
use crate::expr::solve::rref;
use crate::expr::{solve_linear, Expr, ExprError, Rnf, SymbolId};
use crate::liegeom::check_symmetry;

use super::{build_system, hat_coefficients, ma_fields, MADim, MAError, MASpec};

/// The abstract hatted coefficient kh_r (a function of the dependent
/// variables).
pub fn hat_symbol(dim: MADim, r: usize) -> SymbolId {
    let deps: Vec<u32> = (1..=dim.k()).collect();
    SymbolId::opaque(&format!("kh{r}"), &deps)
}

fn is_hat(s: &SymbolId) -> bool {
    matches!(s, SymbolId::OpaqueDeriv { name, index, .. }
        if index.is_empty() && name.starts_with("kh"))
}

/// The hatted specification: abstract coefficients, zero shift, zero
/// jet-free slot.
pub fn hat_spec(dim: MADim) -> MASpec {
    let count = dim.kappa_count();
    let kappas = (1..=count)
        .map(|r| {
            if r == count || (dim == MADim::ThreePlusOne && r == 24) {
                Expr::zero()
            } else {
                Expr::sym(hat_symbol(dim, r))
            }
        })
        .collect();
    let alphas = vec![Expr::zero(); dim.alpha_count()];
    MASpec {
        dim,
        kappas,
        alphas,
    }
}

/// Indices of the hatted coefficients actually present (1-based).
fn hat_indices(dim: MADim) -> Vec<usize> {
    let count = dim.kappa_count();
    (1..count)
        .filter(|&r| !(dim == MADim::ThreePlusOne && r == 24))
        .collect()
}

/// Divide out the largest monomial in the hatted symbols dividing every
/// term.
fn strip_hat_content(p: &Poly) -> Poly {
    let mut content: Option<Monomial> = None;
    for m in p.terms.keys() {
        let hat_part = m.split(|s| is_hat(s)).0;
        content = Some(match content {
            None => hat_part,
            Some(c) => c.gcd(&hat_part),
        });
    }
    match content {
        Some(c) if c != Monomial::unit() => p
            .exact_div(&Poly::one().mul_monomial(&c, &BigRational::from(num::BigInt::from(1))))
            .expect("monomial content divides"),
        _ => p.clone(),
    }
}

/// Interpret `p` as a linear homogeneous form in the hatted symbols; None
/// if it is not linear.
fn linear_row(
    p: &Poly,
    col_of: &BTreeMap<SymbolId, usize>,
    ncols: usize,
) -> Result<Option<Vec<Rnf>>, MAError> {
    let grouped = p.group_by(is_hat);
    let mut row = vec![Rnf::zero(); ncols];
    for (mono, coeff) in grouped {
        if mono.total_degree() != 1 {
            return Ok(None);
        }
        let sym = mono.0[0].0.clone();
        let c = *col_of
            .get(&sym)
            .ok_or_else(|| MAError::InvalidSpec(format!("unexpected coefficient symbol {sym}")))?;
        row[c] = Rnf::from_poly(coeff);
    }
    Ok(Some(row))
}

/// The conditions on the hatted coefficients, as a canonical list of
/// expressions that must vanish.  Each condition is linear in the kh_r with
/// coefficients polynomial in the derivatives of f, integer-primitive, and
/// normalized so that the coefficient of its lowest-index kh is positive.
pub fn hat_conditions(dim: MADim) -> Result<Vec<Expr>, MAError> {
    let spec = hat_spec(dim);
    let sys = build_system(&spec);
    let fields = ma_fields(dim.k());
    let scaling = fields.last().unwrap();
    let cert = check_symmetry(&sys.equations, scaling, None)?;
    if cert.is_symmetry {
        return Ok(Vec::new());
    }

    let cols = hat_indices(dim);
    let col_of: BTreeMap<SymbolId, usize> = cols
        .iter()
        .enumerate()
        .map(|(c, &r)| (hat_symbol(dim, r), c))
        .collect();

    // The raw obstructions are elements of the ideal generated by the
    // conditions, scaled by monomials in the kh picked up from elimination
    // pivots.  Strip the monomial content, keep what is already linear, and
    // reduce the remainder modulo the linear conditions found so far until
    // nothing nonlinear is left.
    let mut pending: Vec<Poly> = Vec::new();
    for res in &cert.residuals {
        if res.is_zero() {
            continue;
        }
        pending.push(strip_hat_content(&res.num));
    }
    let mut rows: Vec<Vec<Rnf>> = Vec::new();
    loop {
        let mut nonlinear: Vec<Poly> = Vec::new();
        let before = rows.len();
        for p in pending.drain(..) {
            if p.is_zero() {
                continue;
            }
            match linear_row(&p, &col_of, cols.len())? {
                Some(row) => rows.push(row),
                None => nonlinear.push(p),
            }
        }
        if nonlinear.is_empty() {
            break;
        }
        if rows.len() == before {
            return Err(MAError::InvalidSpec(
                "obstruction not linear in the hatted coefficients".into(),
            ));
        }
        // substitution map from the current linear conditions
        let mut reduced = rows.clone();
        let piv = rref(&mut reduced)?;
        let mut map: BTreeMap<SymbolId, Rnf> = BTreeMap::new();
        for (row, &p) in reduced.iter().zip(piv.iter()) {
            let mut val = Rnf::zero();
            for (c, entry) in row.iter().enumerate() {
                if c != p && !entry.is_zero() {
                    val = val.sub(&entry.mul(&Rnf::from_poly(Poly::var(hat_symbol(
                        dim,
                        cols[c],
                    )))));
                }
            }
            map.insert(hat_symbol(dim, cols[p]), val);
        }
        for p in nonlinear {
            let r = Rnf::from_poly(p).substitute(&map)?;
            if r.is_zero() {
                continue;
            }
            pending.push(strip_hat_content(&r.num));
        }
        if pending.is_empty() {
            break;
        }
    }
    let pivots = rref(&mut rows)?;

    let mut out = Vec::new();
    for (row, &piv) in rows.iter().zip(pivots.iter()) {
        let mut acc = Rnf::zero();
        for (c, entry) in row.iter().enumerate() {
            if entry.is_zero() {
                continue;
            }
            acc = acc.add(&entry.mul(&Rnf::from_poly(Poly::var(hat_symbol(dim, cols[c])))));
        }
        let mut p = acc.num.primitive_normalized();
        // sign convention: positive coefficient on the pivot kh
        let piv_sym = hat_symbol(dim, cols[piv]);
        let piv_mono = Monomial::var(piv_sym);
        let piv_part = p
            .group_by(is_hat)
            .get(&piv_mono)
            .cloned()
            .unwrap_or_else(Poly::zero);
        if let Some((_, c)) = piv_part.leading() {
            if *c < BigRational::from(num::BigInt::from(0)) {
                p = p.neg();
            }
        }
        out.push(poly_to_expr(&p));
    }
    Ok(out)
}

/// The conditions for the given specification: the hatted conditions with
/// the hatted coefficients replaced by the shifted-equation coefficients of
/// the spec.  In the two-independent-variable case, when the leading
/// coefficient is a bare symbol, the single condition is solved for it and
/// returned in the form kappa_1 - (expression).
pub fn symmetry_conditions(spec: &MASpec) -> Result<Vec<Expr>, MAError> {
    let conds = hat_conditions(spec.dim)?;
    let hats = hat_coefficients(spec)?;
    let mut map: BTreeMap<SymbolId, Expr> = BTreeMap::new();
    for &r in &hat_indices(spec.dim) {
        map.insert(hat_symbol(spec.dim, r), hats[r - 1].clone());
    }
    let substituted: Vec<Expr> = conds.iter().map(|c| c.substitute(&map)).collect();

    if spec.dim == MADim::OnePlusOne && substituted.len() == 1 {
        if let Expr::Sym(s) = &spec.kappas[0] {
            match solve_linear(&substituted, std::slice::from_ref(s)) {
                Ok(sol) => {
                    if let Some(v) = sol.get(s) {
                        return Ok(vec![Expr::sym(s.clone()) - v.clone()]);
                    }
                }
                Err(ExprError::Inconsistent) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(substituted)
}
