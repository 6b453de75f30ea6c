//! Canonical variables for the solvable algebra: coordinates in which the
//! first `n` generators become translations and the last one a scaling.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::solve::matrix_rank;
use crate::expr::{expr_eq, normalize, Expr, ExprError, SymbolId};
use crate::liegeom::{check_theorem1_structure, LieError, VectorField};

#[derive(Debug, Clone, Error)]
pub enum CanonicalError {
    #[error("algebra structure check failed; canonical construction requires it")]
    StructureFailed,
    #[error("fields are outside the supported shape: {0}")]
    UnsupportedShape(String),
    #[error("internal verification of the constructed transformation failed: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// An invertible point transformation z = Z(x,u), w = W(x,u).
#[derive(Debug, Clone)]
pub struct PointTransformation {
    pub n: u32,
    pub m: u32,
    pub z: Vec<Expr>,
    pub w: Vec<Expr>,
    /// x = X(z,w), u = U(z,w), written in (z,w) reusing the independent and
    /// dependent symbol classes for the new coordinates.
    pub inverse: Option<Inverse>,
}

#[derive(Debug, Clone)]
pub struct Inverse {
    pub x_of: Vec<Expr>,
    pub u_of: Vec<Expr>,
}

impl PointTransformation {
    pub fn identity(n: u32, m: u32) -> Self {
        let z: Vec<Expr> = (1..=n).map(|i| Expr::sym(SymbolId::indep(i))).collect();
        let w: Vec<Expr> = (1..=m).map(|a| Expr::sym(SymbolId::dep(a))).collect();
        PointTransformation {
            n,
            m,
            z: z.clone(),
            w: w.clone(),
            inverse: Some(Inverse { x_of: z, u_of: w }),
        }
    }

    /// Generic rank of the Jacobian d(Z,W)/d(x,u); the transformation is
    /// invertible on the open set where the rank is attained.
    pub fn jacobian_rank(&self) -> Result<usize, ExprError> {
        let mut rows = Vec::new();
        for e in self.z.iter().chain(self.w.iter()) {
            let mut row = Vec::new();
            for i in 1..=self.n {
                row.push(normalize(&e.diff(&SymbolId::indep(i)))?);
            }
            for a in 1..=self.m {
                row.push(normalize(&e.diff(&SymbolId::dep(a)))?);
            }
            rows.push(row);
        }
        Ok(matrix_rank(&rows))
    }
}

/// Verification result, one family per theorem identity.
#[derive(Debug, Clone)]
pub struct CanonicalReport {
    /// X_i(z_j) = delta_ij.
    pub translations_straightened: Vec<(usize, usize, bool)>,
    /// X_i(w_A) = 0.
    pub invariants_translation: Vec<(usize, usize, bool)>,
    /// X_{n+1}(w_A) = 0.
    pub invariants_scaling: Vec<(usize, bool)>,
    /// X_{n+1}(z_j) = z_j — the scaling role in target coordinates.  Not part
    /// of the theorem statement proper; reported separately.
    pub scaling_straightened: Vec<(usize, bool)>,
    pub jacobian_rank: usize,
    pub jacobian_ok: bool,
    pub ok: bool,
}

impl CanonicalReport {
    /// Verdict on the theorem's three identity families alone.
    pub fn theorem_families_ok(&self) -> bool {
        self.translations_straightened.iter().all(|t| t.2)
            && self.invariants_translation.iter().all(|t| t.2)
            && self.invariants_scaling.iter().all(|t| t.1)
    }
}

/// Check all canonical-variable identities for the transformation against
/// the n+1 fields (last field in the scaling role).
pub fn verify_canonical(
    t: &PointTransformation,
    fields: &[VectorField],
) -> Result<CanonicalReport, CanonicalError> {
    let n = fields.len() - 1;
    let mut translations_straightened = Vec::new();
    let mut invariants_translation = Vec::new();
    for (i, f) in fields[..n].iter().enumerate() {
        for (j, zj) in t.z.iter().enumerate() {
            let want = if i == j { Expr::one() } else { Expr::zero() };
            translations_straightened.push((i + 1, j + 1, expr_eq(&f.apply(zj), &want)?));
        }
        for (a, wa) in t.w.iter().enumerate() {
            invariants_translation.push((i + 1, a + 1, expr_eq(&f.apply(wa), &Expr::zero())?));
        }
    }
    let scaling = &fields[n];
    let mut invariants_scaling = Vec::new();
    for (a, wa) in t.w.iter().enumerate() {
        invariants_scaling.push((a + 1, expr_eq(&scaling.apply(wa), &Expr::zero())?));
    }
    let mut scaling_straightened = Vec::new();
    for (j, zj) in t.z.iter().enumerate() {
        scaling_straightened.push((j + 1, expr_eq(&scaling.apply(zj), zj)?));
    }
    let jacobian_rank = t.jacobian_rank()?;
    let jacobian_ok = jacobian_rank == (t.n + t.m) as usize;
    let families_ok = translations_straightened.iter().all(|x| x.2)
        && invariants_translation.iter().all(|x| x.2)
        && invariants_scaling.iter().all(|x| x.1)
        && scaling_straightened.iter().all(|x| x.1);
    Ok(CanonicalReport {
        translations_straightened,
        invariants_translation,
        invariants_scaling,
        scaling_straightened,
        jacobian_rank,
        jacobian_ok,
        ok: families_ok && jacobian_ok,
    })
}

/// Construct canonical variables for the supported shape:
/// X_i = d/dx_i (i = 1..n) and X_{n+1} = sum_i (x_i - g_i(u)) d/dx_i with
/// each g_i depending on u only.  Yields z_i = x_i - g_i(u), w_A = u_A with
/// the explicit inverse x_i = z_i + g_i(w), u_A = w_A.
pub fn canonical_for_translation_scaling(
    fields: &[VectorField],
) -> Result<PointTransformation, CanonicalError> {
    let structure = check_theorem1_structure(fields)?;
    if !structure.holds {
        return Err(CanonicalError::StructureFailed);
    }
    let n = fields.len() - 1;
    let (nn, m) = (fields[0].n, fields[0].m);
    if nn as usize != n {
        return Err(CanonicalError::UnsupportedShape(format!(
            "{} fields given for signature n = {nn}",
            fields.len()
        )));
    }
    for (i, f) in fields[..n].iter().enumerate() {
        let want = VectorField::translation(nn, m, i as u32 + 1);
        if !f.equals(&want)? {
            return Err(CanonicalError::UnsupportedShape(format!(
                "field {} is not the translation d/dx{}",
                i + 1,
                i + 1
            )));
        }
    }
    let scaling = &fields[n];
    for eta in &scaling.eta {
        if !normalize(eta)?.is_zero() {
            return Err(CanonicalError::UnsupportedShape(
                "scaling-role field must have zero eta components".into(),
            ));
        }
    }
    let mut z = Vec::with_capacity(n);
    for (i, xi) in scaling.xi.iter().enumerate() {
        // xi_i = x_i - g_i(u): g_i must be free of all x_j
        let g = Expr::sum(vec![
            Expr::sym(SymbolId::indep(i as u32 + 1)),
            Expr::neg(xi.clone()),
        ]);
        for j in 1..=nn {
            if !normalize(&g.diff(&SymbolId::indep(j)))?.is_zero() {
                return Err(CanonicalError::UnsupportedShape(format!(
                    "scaling-role component {} is not of the form x{} - g(u)",
                    i + 1,
                    i + 1
                )));
            }
        }
        let g = normalize(&g)?.to_expr();
        z.push(Expr::sum(vec![
            Expr::sym(SymbolId::indep(i as u32 + 1)),
            Expr::neg(g),
        ]));
    }
    let w: Vec<Expr> = (1..=m).map(|a| Expr::sym(SymbolId::dep(a))).collect();
    // inverse: x_i = z_i + g_i(w); in (z,w) coordinates the symbols reuse the
    // independent/dependent classes, and g_i(u) reads as g_i(w) unchanged
    let mut x_of = Vec::with_capacity(n);
    for (i, zi) in z.iter().enumerate() {
        let g = normalize(&Expr::sum(vec![
            Expr::sym(SymbolId::indep(i as u32 + 1)),
            Expr::neg(zi.clone()),
        ]))?
        .to_expr();
        x_of.push(Expr::sum(vec![Expr::sym(SymbolId::indep(i as u32 + 1)), g]));
    }
    let t = PointTransformation {
        n: nn,
        m,
        z,
        w: w.clone(),
        inverse: Some(Inverse { x_of, u_of: w }),
    };
    let report = verify_canonical(&t, fields)?;
    if !report.ok {
        return Err(CanonicalError::VerificationFailed(format!("{report:?}")));
    }
    // round-trip: Z(X(z,w), U(z,w)) = z
    let inv = t.inverse.as_ref().unwrap();
    let mut bind = BTreeMap::new();
    for (i, xe) in inv.x_of.iter().enumerate() {
        bind.insert(SymbolId::indep(i as u32 + 1), xe.clone());
    }
    for (a, ue) in inv.u_of.iter().enumerate() {
        bind.insert(SymbolId::dep(a as u32 + 1), ue.clone());
    }
    for (i, zi) in t.z.iter().enumerate() {
        let round = zi.substitute(&bind);
        if !expr_eq(&round, &Expr::sym(SymbolId::indep(i as u32 + 1)))? {
            return Err(CanonicalError::VerificationFailed(format!(
                "inverse round-trip failed on z{}",
                i + 1
            )));
        }
    }
    Ok(t)
}
