//! Push-forward of the Monge-Ampère systems through the canonical
//! transformation z_i = x_i - f_{;i}(u), w_A = u_A, done in closed form.
//!
//! Under the jet exchange the old jet matrix U (rows indexed by the
//! dependent variable, columns by the direction) satisfies M U = W with
//! M = I + W F, where W is the new jet matrix and F the Hessian of f.  When
//! W is taken symmetric (which is legitimate: the transformed exchange
//! equations span the symmetrization ideal, as certified by the
//! straightening pass), U = M^{-1} W is symmetric identically, and every
//! slot of the equation transforms with the single denominator det M:
//!
//!   det U              = det W / det M,
//!   cofactor(U)        = M^T adj(W) / det M,
//!   quadratic slots    = (degree-2 substitutions) / det M   (exact),
//!   U itself           = adj(M) W / det M.
//!
//! Expanding the equation naively through the rational jet map is
//! intractable in the four-variable case; these identities keep every
//! piece polynomial.  Their correctness is certified numerically against
//! the generic jet map at random rational points on every call.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, Zero};

use crate::expr::poly::Poly;
use crate::expr::rnf::{normalize, poly_to_expr};
use crate::expr::{Expr, SymbolId};
use crate::liegeom::check_symmetry;
use crate::canonical::canonical_for_translation_scaling;
use crate::liegeom::check_theorem1_structure;
use crate::expr::solve_linear;
use crate::canonical::PointTransformation;
use crate::transform::{
    classify, jet_exchange_relations, straighten_exchange, PDESystem, PushForward, ReduceError,
    Reduction, TransformError,
};

use super::hessian::{adjugate, det, f_hessian_matrix, hjet};
use super::{build_system, ma_fields, slot_kinds, MASpec, SlotKind};

fn matmul(a: &[Vec<Poly>], b: &[Vec<Poly>]) -> Vec<Vec<Poly>> {
    let n = a.len();
    let p = b[0].len();
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut acc = Poly::zero();
                    for (l, row) in b.iter().enumerate() {
                        acc = acc.add(&a[i][l].mul(&row[j]));
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// The matrix of new jets; `symmetric` collapses entry (A,i) to w[min,max].
fn w_matrix(k: u32, symmetric: bool) -> Vec<Vec<Poly>> {
    (1..=k)
        .map(|a| {
            (1..=k)
                .map(|i| {
                    let s = if symmetric {
                        hjet(a.min(i), a.max(i))
                    } else {
                        SymbolId::jet(a, i)
                    };
                    Poly::var(s)
                })
                .collect()
        })
        .collect()
}

/// det M and the numerators U det M = adj(M) W of the old jets, with M the
/// jet-exchange matrix I + W F.
fn old_jet_numerators(k: u32, symmetric: bool) -> (Poly, Vec<Vec<Poly>>) {
    let w = w_matrix(k, symmetric);
    let f = f_hessian_matrix(k);
    let mut m = matmul(&w, &f);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = row[i].add(&Poly::one());
    }
    let det_m = det(&m);
    let adj_m = adjugate(&m);
    (det_m, matmul(&adj_m, &w))
}

/// Numerators (over the common denominator det M) of the transformed slot
/// basis, in the order of `slot_kinds`.
pub struct TransformedSlots {
    pub det_m: Poly,
    pub pieces: Vec<Poly>,
}

/// Transform every slot of the equation shape through the jet exchange.
pub fn transformed_slots(spec: &MASpec) -> TransformedSlots {
    let k = spec.dim.k();
    let w = w_matrix(k, true);
    let f = f_hessian_matrix(k);
    // M = I + W F
    let mut m = matmul(&w, &f);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = row[i].add(&Poly::one());
    }
    let det_m = det(&m);
    let adj_m = adjugate(&m);
    let adj_w = adjugate(&w);
    let det_w = det(&w);
    // U det M = adj(M) W; cof(U) det M = M^T adj(W)
    let u_num = matmul(&adj_m, &w);
    let mt: Vec<Vec<Poly>> = (0..k as usize)
        .map(|i| (0..k as usize).map(|j| m[j][i].clone()).collect())
        .collect();
    let cof_num = matmul(&mt, &adj_w);

    // cache for products of U entries (quadratic slots)
    let mut pair_cache: BTreeMap<(SymbolId, SymbolId), Poly> = BTreeMap::new();
    let entry = |i: u32, j: u32| &u_num[(i - 1) as usize][(j - 1) as usize];
    let pack = super::hessian_pack(k);

    let mut pieces = Vec::new();
    for (_, kind) in slot_kinds(spec.dim) {
        let p = match kind {
            SlotKind::Det => det_w.clone(),
            SlotKind::DH(i, j) => {
                let weight = if i == j { 1 } else { 2 };
                cof_num[(i - 1) as usize][(j - 1) as usize]
                    .scale(&BigRational::from(BigInt::from(weight)))
            }
            SlotKind::D2H(kl, mn) => {
                // substitute U into the degree-2 polynomial; det M divides
                // the result exactly
                let d2 = &pack.d2h[&(kl, mn)];
                let mut acc = Poly::zero();
                for (mono, c) in &d2.terms {
                    let mut syms = Vec::new();
                    for (s, e) in &mono.0 {
                        for _ in 0..*e {
                            syms.push(s.clone());
                        }
                    }
                    assert_eq!(syms.len(), 2, "quadratic slot");
                    let key = (syms[0].clone(), syms[1].clone());
                    let prod = pair_cache.entry(key).or_insert_with(|| {
                        let lookup = |s: &SymbolId| match s {
                            SymbolId::Jet(a, i) => entry(*a, *i).clone(),
                            _ => unreachable!("jet symbols only"),
                        };
                        lookup(&syms[0]).mul(&lookup(&syms[1]))
                    });
                    acc = acc.add(&prod.scale(c));
                }
                acc.exact_div(&det_m)
                    .expect("det M divides the transformed quadratic slot")
            }
            SlotKind::Linear(i, j) => entry(i, j).clone(),
            SlotKind::Const => det_m.clone(),
        };
        pieces.push(p);
    }
    TransformedSlots { det_m, pieces }
}

/// The transformed equation numerator: sum of kappa_slot times the
/// transformed slot numerators (common denominator det M).
pub fn transformed_equation(spec: &MASpec) -> Expr {
    let ts = transformed_slots(spec);
    let mut terms = Vec::new();
    for ((idx, _), piece) in slot_kinds(spec.dim).iter().zip(ts.pieces.iter()) {
        let kap = &spec.kappas[*idx];
        if kap.is_zero() || piece.is_zero() {
            continue;
        }
        terms.push(kap.clone() * poly_to_expr(piece));
    }
    Expr::sum(terms)
}

/// Solve the jet-exchange defining relations numerically at the given new
/// coordinate point, returning values for the old jets.  `None` when the
/// point is inadmissible (singular exchange matrix, missing value).
fn old_jets_at(
    t: &PointTransformation,
    k: u32,
    point: &BTreeMap<SymbolId, BigRational>,
) -> Option<BTreeMap<SymbolId, BigRational>> {
    let mut old = BTreeMap::new();
    let empty = BTreeMap::new();
    for i in 1..=k {
        let (eqs, unknowns) = jet_exchange_relations(t, i);
        let mut bind: BTreeMap<SymbolId, Expr> = BTreeMap::new();
        for eq in &eqs {
            for s in eq.symbols() {
                if unknowns.contains(&s) || bind.contains_key(&s) {
                    continue;
                }
                let v = match &s {
                    SymbolId::Parameter(name) if name.starts_with("__wjet_") => {
                        let mut it = name["__wjet_".len()..].split('_');
                        let b: u32 = it.next()?.parse().ok()?;
                        let j: u32 = it.next()?.parse().ok()?;
                        point.get(&SymbolId::jet(b, j))?.clone()
                    }
                    other => point.get(other)?.clone(),
                };
                bind.insert(s, Expr::Rat(v));
            }
        }
        let numeric: Vec<Expr> = eqs.iter().map(|e| e.substitute(&bind)).collect();
        let sol = solve_linear(&numeric, &unknowns).ok()?;
        for (s, e) in sol {
            old.insert(s, e.eval(&empty).ok()?);
        }
    }
    Some(old)
}

/// Check a closed-form transformed equation against the jet exchange at
/// random rational points: original(old jets) * det M must equal the
/// transformed expression in the new coordinates.  The old jets are
/// obtained independently, by solving the defining relations of the jet
/// exchange numerically at each point; `symmetric` restricts the sample
/// points to symmetric jet matrices.
pub(crate) fn verify_at_points(
    k: u32,
    t: &PointTransformation,
    original: &Expr,
    transformed: &Expr,
    det_m: &Poly,
    symmetric: bool,
    points: usize,
) -> Result<(), TransformError> {
    let mut symbols: std::collections::BTreeSet<SymbolId> =
        original.symbols().into_iter().collect();
    symbols.extend(transformed.symbols());
    symbols.extend(det_m.symbols());
    for i in 1..=k {
        let (eqs, unknowns) = jet_exchange_relations(t, i);
        for eq in &eqs {
            for s in eq.symbols() {
                let placeholder =
                    matches!(&s, SymbolId::Parameter(name) if name.starts_with("__wjet_"));
                if !placeholder && !unknowns.contains(&s) {
                    symbols.insert(s);
                }
            }
        }
    }

    let mut gen = crate::transform::RationalSampler::new(0x5eed);
    let mut done = 0;
    let mut attempts = 0;
    while done < points {
        attempts += 1;
        if attempts > 100 * points {
            return Err(TransformError::Verification(
                "could not find admissible sample points".into(),
            ));
        }
        // assign values to the (new) jets, arbitrary values to everything
        // else
        let mut point: BTreeMap<SymbolId, BigRational> = BTreeMap::new();
        for a in 1..=k {
            for i in 1..=k {
                if symmetric && i < a {
                    let v = point[&SymbolId::jet(i, a)].clone();
                    point.insert(SymbolId::jet(a, i), v);
                } else {
                    point.insert(SymbolId::jet(a, i), gen.next_rational());
                }
            }
        }
        for s in &symbols {
            if !point.contains_key(s) && !s.is_jet() {
                point.insert(s.clone(), gen.next_rational());
            }
        }
        let dm = match det_m.eval(&point) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if dm.is_zero() {
            continue;
        }
        // old jets through the defining relations of the exchange
        let old = match old_jets_at(t, k, &point) {
            Some(o) => o,
            None => continue,
        };
        let mut old_point = point.clone();
        old_point.extend(old);
        let lhs = match original.eval(&old_point) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let rhs = match transformed.eval(&point) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if lhs * dm != rhs {
            return Err(TransformError::Verification(
                "closed-form push-forward disagrees with the jet exchange".into(),
            ));
        }
        done += 1;
    }
    Ok(())
}

/// Push the full system forward in closed form.  The exchange equation for
/// the pair (i, j) transforms to the (j, i) - (i, j) difference of the old
/// jets written over det M; the equation itself transforms through the slot
/// identities.  Every closed-form numerator is certified against the
/// generic jet map at random rational points.
pub fn push_forward_ma(spec: &MASpec) -> Result<PushForward, ReduceError> {
    let k = spec.dim.k();
    let fields = ma_fields(k);
    let transformation = canonical_for_translation_scaling(&fields)?;

    let mut equations = Vec::new();
    let mut cleared = Vec::new();
    // the exchange equations go through the full (non-symmetric) jet matrix
    let (det_m_full, u_num) = old_jet_numerators(k, false);
    let det_m_full_expr = poly_to_expr(&det_m_full);
    for i in 1..=k {
        for j in (i + 1)..=k {
            let original =
                Expr::sym(SymbolId::jet(j, i)) - Expr::sym(SymbolId::jet(i, j));
            let num = u_num[(j - 1) as usize][(i - 1) as usize]
                .add(&u_num[(i - 1) as usize][(j - 1) as usize].scale(
                    &-BigRational::from(BigInt::from(1)),
                ));
            let num_expr = poly_to_expr(&num);
            verify_at_points(k, &transformation, &original, &num_expr, &det_m_full, false, 3)?;
            equations.push(num_expr);
            cleared.push(det_m_full_expr.clone());
        }
    }
    // the equation itself is pushed forward on the symmetric locus, which
    // the exchange equations cut out
    let ts = transformed_slots(spec);
    let teq = transformed_equation(spec);
    let original = super::build_equation(spec);
    verify_at_points(k, &transformation, &original, &teq, &ts.det_m, true, 3)?;
    // the closed-form numerator may itself be rational in the coefficients
    let r = normalize(&teq).map_err(TransformError::Expr)?;
    equations.push(poly_to_expr(&r.num));
    cleared.push(poly_to_expr(&ts.det_m.mul(&r.den)));
    Ok(PushForward {
        system: PDESystem::new(k, k, equations),
        cleared_factors: cleared,
    })
}

/// The reduction pipeline specialized to the Monge-Ampère systems: same
/// stages and certificates as the generic pipeline, with the push-forward
/// done in closed form so that the four-variable case stays tractable.
pub fn reduce_ma(spec: &MASpec, mult_degree: Option<u32>) -> Result<Reduction, ReduceError> {
    let system = build_system(spec);
    let fields = ma_fields(spec.dim.k());
    let algebra = check_theorem1_structure(&fields)?;
    if !algebra.holds {
        return Err(ReduceError::Structure(algebra));
    }
    let mut symmetry = Vec::new();
    for (i, f) in fields.iter().enumerate() {
        let cert = check_symmetry(&system.equations, f, mult_degree)?;
        if !cert.is_symmetry {
            return Err(ReduceError::Symmetry {
                index: i + 1,
                certificate: cert,
            });
        }
        symmetry.push(cert);
    }
    let transformation = canonical_for_translation_scaling(&fields)?;
    let pushed = push_forward_ma(spec)?;
    let (transformed, straightened) = match straighten_exchange(&pushed.system)? {
        Some(s) => (s, true),
        None => (pushed.system, false),
    };
    let classification = classify(&transformed)?;
    Ok(Reduction {
        algebra,
        symmetry,
        transformation,
        transformed,
        cleared_factors: pushed.cleared_factors,
        straightened,
        classification,
    })
}
