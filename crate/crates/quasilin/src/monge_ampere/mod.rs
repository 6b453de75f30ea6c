//! Monge-Ampère equations of Hessian type in k independent variables
//! (k = 2, 3, 4), written as first-order systems, together with the
//! coefficient bookkeeping needed to bring them to homogeneous autonomous
//! quasilinear form.
//!
//! The second-order equation is a linear combination of the Hessian
//! determinant H, its first (and for k = 4 second) derivatives with respect
//! to the second-order jets, the second-order jets themselves, and a
//! constant; the coefficients kappa may depend on the dependent variables.
//! In first-order form u_{,ij} becomes the jet u[i,j] (canonical
//! representative i <= j) and the gradient components become the dependent
//! variables u_1..u_k, with exchange equations u[j,i] = u[i,j] expressing
//! the symmetry of second derivatives.

pub mod conditions;
pub mod hessian;
pub mod structured;
pub mod von_karman;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::poly::Poly;
use crate::expr::rnf::{normalize, poly_to_expr};
use crate::expr::{solve_with_residuals, Expr, ExprError, Rnf, SymbolId};
use crate::liegeom::VectorField;
use crate::transform::PDESystem;

pub use hessian::{hessian_pack, HessianPack};

#[derive(Debug, Error)]
pub enum MAError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("shift cannot be composed into opaque coefficient arguments")]
    OpaqueShift,
    #[error("the homogenization condition does not hold")]
    NotHomogenized,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Lie(#[from] crate::liegeom::LieError),
}

/// Number of independent variables of the second-order equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MADim {
    OnePlusOne,
    TwoPlusOne,
    ThreePlusOne,
}

impl MADim {
    /// Size k of the Hessian (= number of independent variables).
    pub fn k(&self) -> u32 {
        match self {
            MADim::OnePlusOne => 2,
            MADim::TwoPlusOne => 3,
            MADim::ThreePlusOne => 4,
        }
    }

    /// Number of kappa coefficients (including the constant slot).
    pub fn kappa_count(&self) -> usize {
        match self {
            MADim::OnePlusOne => 5,
            MADim::TwoPlusOne => 14,
            MADim::ThreePlusOne => 43,
        }
    }

    /// Number of independent entries of the symmetric shift matrix.
    pub fn alpha_count(&self) -> usize {
        let k = self.k() as usize;
        k * (k + 1) / 2
    }
}

/// A Monge-Ampère equation of Hessian type: the coefficients kappa
/// (functions of the dependent variables at most) and the symmetric affine
/// shift matrix alpha used to homogenize it.
#[derive(Debug, Clone)]
pub struct MASpec {
    pub dim: MADim,
    pub kappas: Vec<Expr>,
    pub alphas: Vec<Expr>,
}

impl MASpec {
    pub fn new(dim: MADim, kappas: Vec<Expr>, alphas: Vec<Expr>) -> Result<Self, MAError> {
        if kappas.len() != dim.kappa_count() {
            return Err(MAError::InvalidSpec(format!(
                "expected {} kappa coefficients, got {}",
                dim.kappa_count(),
                kappas.len()
            )));
        }
        if alphas.len() != dim.alpha_count() {
            return Err(MAError::InvalidSpec(format!(
                "expected {} alpha entries, got {}",
                dim.alpha_count(),
                alphas.len()
            )));
        }
        let k = dim.k();
        for (idx, kap) in kappas.iter().enumerate() {
            for s in kap.symbols() {
                let ok = match &s {
                    SymbolId::Dependent(a) => *a >= 1 && *a <= k,
                    SymbolId::Parameter(_) => true,
                    SymbolId::OpaqueDeriv { .. } => true,
                    _ => false,
                };
                if !ok {
                    return Err(MAError::InvalidSpec(format!(
                        "kappa_{} contains {}, which is neither a parameter nor a dependent variable",
                        idx + 1,
                        s
                    )));
                }
            }
        }
        if dim == MADim::ThreePlusOne && !kappas[23].is_zero() {
            return Err(MAError::InvalidSpec(
                "kappa_24 must be zero: its Hessian coefficient is dependent on the others"
                    .into(),
            ));
        }
        Ok(MASpec {
            dim,
            kappas,
            alphas,
        })
    }

    /// Fully abstract specification: kappa_r as opaque functions of the
    /// dependent variables, alpha_i as parameters.
    pub fn generic(dim: MADim) -> Self {
        let k = dim.k();
        let deps: Vec<u32> = (1..=k).collect();
        let kappas = (1..=dim.kappa_count())
            .map(|r| {
                if dim == MADim::ThreePlusOne && r == 24 {
                    Expr::zero()
                } else {
                    Expr::sym(SymbolId::opaque(&format!("k{r}"), &deps))
                }
            })
            .collect();
        let alphas = (1..=dim.alpha_count())
            .map(|i| Expr::sym(SymbolId::param(&format!("a{i}"))))
            .collect();
        MASpec {
            dim,
            kappas,
            alphas,
        }
    }

    /// The symmetric k x k shift matrix assembled from the alpha entries.
    pub fn alpha_matrix(&self) -> Vec<Vec<Expr>> {
        let k = self.dim.k() as usize;
        let mut mat = vec![vec![Expr::zero(); k]; k];
        let mut idx = 0;
        for i in 0..k {
            for j in i..k {
                mat[i][j] = self.alphas[idx].clone();
                mat[j][i] = self.alphas[idx].clone();
                idx += 1;
            }
        }
        mat
    }
}

/// Position of the coefficient of dH/du_{,ij} in the k = 4 enumeration
/// (i <= j), counting the determinant itself as 1: r ranges over 2..=11.
pub fn r_index(i: u32, j: u32) -> Result<u32, MAError> {
    if !(1 <= i && i <= j && j <= 4) {
        return Err(MAError::IndexOutOfRange(format!("r_index({i},{j})")));
    }
    Ok(i * (9 - i) / 2 + j - 3)
}

/// Linear position of the pair (a,b), a < b, among the C(4,2) = 6 pairs.
pub fn sigma_index(a: u32, b: u32) -> Result<u32, MAError> {
    if !(1 <= a && a < b && b <= 4) {
        return Err(MAError::IndexOutOfRange(format!("sigma_index({a},{b})")));
    }
    let v = 4 * (a as i64 - 1) - a as i64 * (a as i64 + 1) / 2 + b as i64;
    Ok(v as u32)
}

/// Position of the coefficient of d2H/(du_{,kl} du_{,mn}) in the k = 4
/// enumeration, for k < l, k <= m < n, (k,l) <= (m,n): s ranges over
/// 12..=32.  Index 24 lands on the pair (1,4),(2,3); because of the
/// identity d2H/du12du34 + d2H/du13du24 + d2H/du14du23 = 0 that
/// coefficient is redundant and is fixed to zero.
pub fn s_index(kl: (u32, u32), mn: (u32, u32)) -> Result<u32, MAError> {
    let (k, l) = kl;
    let (m, n) = mn;
    if !(k < l && k <= m && m < n && (k, l) <= (m, n)) {
        return Err(MAError::IndexOutOfRange(format!(
            "s_index(({k},{l}),({m},{n}))"
        )));
    }
    let skl = sigma_index(k, l)?;
    let smn = sigma_index(m, n)?;
    Ok(smn + skl * (13 - skl) / 2 + 5)
}

/// The same position computed by the off-by-one variant s = sigma_mn +
/// sigma_kl (13 - sigma_kl)/2 + 6, kept for reference: it collides with
/// the linear-coefficient range 33..42 and is not used by the builders.
pub fn s_index_shifted(kl: (u32, u32), mn: (u32, u32)) -> Result<u32, MAError> {
    Ok(s_index(kl, mn)? + 1)
}

/// A term shape of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// The Hessian determinant.
    Det,
    /// dH/du_{,ij} (symmetric-pair convention).
    DH(u32, u32),
    /// d2H/(du_{,kl} du_{,mn}).
    D2H((u32, u32), (u32, u32)),
    /// A plain second-order jet u_{,ij}.
    Linear(u32, u32),
    /// The jet-free slot.
    Const,
}

/// The coefficient slots of the equation: (kappa index 0-based, shape).
/// The constant slot comes last.
pub fn slot_kinds(dim: MADim) -> Vec<(usize, SlotKind)> {
    let mut out = vec![(0usize, SlotKind::Det)];
    match dim {
        MADim::OnePlusOne => {
            let mut idx = 1;
            for i in 1..=2 {
                for j in i..=2 {
                    out.push((idx, SlotKind::Linear(i, j)));
                    idx += 1;
                }
            }
        }
        MADim::TwoPlusOne => {
            let mut idx = 1;
            for i in 1..=3 {
                for j in i..=3 {
                    out.push((idx, SlotKind::DH(i, j)));
                    idx += 1;
                }
            }
            for i in 1..=3 {
                for j in i..=3 {
                    out.push((idx, SlotKind::Linear(i, j)));
                    idx += 1;
                }
            }
        }
        MADim::ThreePlusOne => {
            for i in 1..=4 {
                for j in i..=4 {
                    let r = r_index(i, j).unwrap() as usize;
                    out.push((r - 1, SlotKind::DH(i, j)));
                }
            }
            for kl in hessian::pairs(4) {
                for mn in hessian::pairs(4) {
                    if kl <= mn && kl.0 <= mn.0 {
                        let s = s_index(kl, mn).unwrap() as usize;
                        if s == 24 {
                            continue;
                        }
                        out.push((s - 1, SlotKind::D2H(kl, mn)));
                    }
                }
            }
            for i in 1..=4 {
                for j in i..=4 {
                    let r = r_index(i, j).unwrap() as usize;
                    out.push((r + 30, SlotKind::Linear(i, j)));
                }
            }
        }
    }
    out.push((dim.kappa_count() - 1, SlotKind::Const));
    out
}

/// The coefficient slots of the equation: (kappa index 0-based, basis
/// polynomial in the jets).  The constant slot (basis 1) comes last.
pub fn slots(dim: MADim) -> Vec<(usize, Poly)> {
    let pack = hessian_pack(dim.k());
    slot_kinds(dim)
        .into_iter()
        .map(|(idx, kind)| {
            let p = match kind {
                SlotKind::Det => pack.h.clone(),
                SlotKind::DH(i, j) => pack.dh[&(i, j)].clone(),
                SlotKind::D2H(kl, mn) => pack.d2h[&(kl, mn)].clone(),
                SlotKind::Linear(i, j) => Poly::var(hessian::hjet(i, j)),
                SlotKind::Const => Poly::one(),
            };
            (idx, p)
        })
        .collect()
}

/// The Monge-Ampère equation as a single expression (jets in canonical
/// symmetric representative form).
pub fn build_equation(spec: &MASpec) -> Expr {
    let mut terms = Vec::new();
    for (idx, basis) in slots(spec.dim) {
        let kap = &spec.kappas[idx];
        if kap.is_zero() {
            continue;
        }
        terms.push(kap.clone() * poly_to_expr(&basis));
    }
    Expr::sum(terms)
}

/// The full first-order system: exchange equations u[j,i] - u[i,j] for
/// i < j, then the Monge-Ampère equation.
pub fn build_system(spec: &MASpec) -> PDESystem {
    let k = spec.dim.k();
    let mut equations = Vec::new();
    for (i, j) in hessian::pairs(k) {
        equations.push(Expr::sym(SymbolId::jet(j, i)) - Expr::sym(SymbolId::jet(i, j)));
    }
    equations.push(build_equation(spec));
    PDESystem {
        n: k,
        m: k,
        equations,
    }
}

/// The solvable algebra of Theorem type for the k-dimensional equation:
/// the k translations together with the scaling-type field
/// sum_i (x_i - f_{;i}) d/dx_i, f an opaque function of u_1..u_k.
pub fn ma_fields(k: u32) -> Vec<VectorField> {
    let deps: Vec<u32> = (1..=k).collect();
    let mut fields: Vec<VectorField> = (1..=k)
        .map(|i| VectorField::translation(k, k, i))
        .collect();
    let xi: Vec<Expr> = (1..=k)
        .map(|i| {
            Expr::sym(SymbolId::indep(i)) - Expr::sym(SymbolId::opaque_deriv("f", &deps, &[i]))
        })
        .collect();
    let eta = vec![Expr::zero(); k as usize];
    fields.push(VectorField::new(k, k, xi, eta).expect("scaling field is jet-free"));
    fields
}

/// Substitute the affine shift u_A -> u_A + sum_i alpha_{Ai} x_i at the jet
/// level: every jet u[A,i] becomes u[A,i] + alpha_{Ai}.  With
/// `shift_args` set, the dependent variables occurring in the coefficient
/// expressions are shifted as well; that is an error when a coefficient is
/// an opaque function (the composition is not representable).
pub fn affine_shift(
    system: &PDESystem,
    spec: &MASpec,
    shift_args: bool,
) -> Result<PDESystem, MAError> {
    let k = spec.dim.k();
    let alpha = spec.alpha_matrix();
    let mut map: BTreeMap<SymbolId, Expr> = BTreeMap::new();
    for a in 1..=k {
        for i in 1..=k {
            map.insert(
                SymbolId::jet(a, i),
                Expr::sym(SymbolId::jet(a, i)) + alpha[(a - 1) as usize][(i - 1) as usize].clone(),
            );
        }
    }
    if shift_args {
        for eq in &system.equations {
            for s in eq.symbols() {
                if let SymbolId::OpaqueDeriv { deps, .. } = &s {
                    if !deps.is_empty() {
                        return Err(MAError::OpaqueShift);
                    }
                }
            }
        }
        for a in 1..=k {
            let mut shift = Expr::sym(SymbolId::dep(a));
            for i in 1..=k {
                shift = shift
                    + alpha[(a - 1) as usize][(i - 1) as usize].clone()
                        * Expr::sym(SymbolId::indep(i));
            }
            map.insert(SymbolId::dep(a), shift);
        }
    }
    let equations = system.equations.iter().map(|e| e.substitute(&map)).collect();
    Ok(PDESystem {
        n: system.n,
        m: system.m,
        equations,
    })
}

/// The value the last kappa must take for the shifted equation to lose its
/// jet-free part (the homogenization condition), returned as an expression
/// in the remaining kappas and alphas.
pub fn homogenization_condition(spec: &MASpec) -> Result<Expr, MAError> {
    let mut reduced = spec.clone();
    let last = reduced.kappas.len() - 1;
    reduced.kappas[last] = Expr::zero();
    let sys = PDESystem {
        n: spec.dim.k(),
        m: spec.dim.k(),
        equations: vec![build_equation(&reduced)],
    };
    let shifted = affine_shift(&sys, spec, false)?;
    let r = normalize(&shifted.equations[0])?;
    let grouped = r.num.group_by(|s| s.is_jet());
    let jet_free = grouped
        .get(&crate::expr::poly::Monomial::unit())
        .cloned()
        .unwrap_or_else(Poly::zero);
    let value = Rnf::new(jet_free, r.den.clone())?.neg();
    Ok(value.to_expr())
}

/// Coefficients of the shifted equation re-expanded over the slot basis:
/// returns one expression per kappa slot (the "hatted" coefficients).  The
/// last entry is the jet-free remainder; it vanishes exactly when the
/// homogenization condition holds.
pub fn hat_coefficients(spec: &MASpec) -> Result<Vec<Expr>, MAError> {
    let sys = PDESystem {
        n: spec.dim.k(),
        m: spec.dim.k(),
        equations: vec![build_equation(spec)],
    };
    let shifted = affine_shift(&sys, spec, false)?;
    let r = normalize(&shifted.equations[0])?;

    let slot_list = slots(spec.dim);
    // Row space: every jet monomial occurring in a slot basis element or in
    // the shifted equation.
    let mut monomials: Vec<crate::expr::poly::Monomial> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (_, basis) in &slot_list {
        for m in basis.terms.keys() {
            if seen.insert(m.clone()) {
                monomials.push(m.clone());
            }
        }
    }
    let grouped = r.num.group_by(|s| s.is_jet());
    for m in grouped.keys() {
        if seen.insert(m.clone()) {
            monomials.push(m.clone());
        }
    }

    let ncols = slot_list.len();
    let mut aug: Vec<Vec<Rnf>> = Vec::new();
    for m in &monomials {
        let mut row: Vec<Rnf> = Vec::with_capacity(ncols + 1);
        for (_, basis) in &slot_list {
            let c = basis
                .terms
                .get(m)
                .cloned()
                .unwrap_or_else(|| num::BigRational::from(num::BigInt::from(0)));
            row.push(Rnf::from_poly(Poly::constant(c)));
        }
        let coeff = grouped
            .get(m)
            .map(|p| Rnf::new(p.clone(), r.den.clone()))
            .transpose()?
            .unwrap_or_else(Rnf::zero);
        row.push(coeff);
        aug.push(row);
    }
    let (values, _free, residuals) = solve_with_residuals(&aug, ncols)?;
    for res in &residuals {
        if !res.is_zero() {
            return Err(MAError::InvalidSpec(
                "shifted equation leaves the slot basis span".into(),
            ));
        }
    }
    // Reorder from slot order to kappa order.
    let mut out = vec![Expr::zero(); spec.kappas.len()];
    for ((idx, _), v) in slot_list.iter().zip(values.iter()) {
        out[*idx] = v.to_expr();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::expr_eq;
    use crate::liegeom::check_theorem1_structure;

    fn kap(r: u32, k: u32) -> Expr {
        let deps: Vec<u32> = (1..=k).collect();
        Expr::sym(SymbolId::opaque(&format!("k{r}"), &deps))
    }

    fn par(name: &str) -> Expr {
        Expr::sym(SymbolId::param(name))
    }

    #[test]
    fn index_enumerations() {
        // r covers 2..=11 over i <= j.
        let mut rs = Vec::new();
        for i in 1..=4 {
            for j in i..=4 {
                rs.push(r_index(i, j).unwrap());
            }
        }
        rs.sort();
        assert_eq!(rs, (2..=11).collect::<Vec<_>>());
        assert_eq!(r_index(4, 4).unwrap(), 11);
        // sigma covers 1..=6 over pairs.
        let sigmas: Vec<u32> = hessian::pairs(4)
            .into_iter()
            .map(|(a, b)| sigma_index(a, b).unwrap())
            .collect();
        assert_eq!(sigmas, vec![1, 2, 3, 4, 5, 6]);
        // s covers 12..=32 over admissible pair-pairs.
        let mut ss = Vec::new();
        for kl in hessian::pairs(4) {
            for mn in hessian::pairs(4) {
                if kl <= mn && kl.0 <= mn.0 {
                    ss.push(s_index(kl, mn).unwrap());
                }
            }
        }
        ss.sort();
        assert_eq!(ss, (12..=32).collect::<Vec<_>>());
        // The redundant pair lands exactly on 24.
        assert_eq!(s_index((1, 4), (2, 3)).unwrap(), 24);
        assert_eq!(s_index((1, 2), (3, 4)).unwrap(), 17);
        assert_eq!(s_index((1, 3), (2, 4)).unwrap(), 21);
        assert_eq!(s_index_shifted((1, 2), (3, 4)).unwrap(), 18);
    }

    #[test]
    fn one_plus_one_equation() {
        let spec = MASpec::generic(MADim::OnePlusOne);
        let eq = build_equation(&spec);
        let v = |i, j| Expr::sym(SymbolId::jet(i, j));
        let want = kap(1, 2) * (v(1, 1) * v(2, 2) - Expr::pow(v(1, 2), 2))
            + kap(2, 2) * v(1, 1)
            + kap(3, 2) * v(1, 2)
            + kap(4, 2) * v(2, 2)
            + kap(5, 2);
        assert!(expr_eq(&eq, &want).unwrap());
    }

    #[test]
    fn ma_fields_satisfy_structure() {
        for k in 2..=4 {
            let fields = ma_fields(k);
            let report = check_theorem1_structure(&fields).unwrap();
            assert!(report.holds, "k={k}: {report:?}");
        }
    }

    #[test]
    fn homogenization_one_plus_one() {
        let spec = MASpec::generic(MADim::OnePlusOne);
        let got = homogenization_condition(&spec).unwrap();
        let (a1, a2, a3) = (par("a1"), par("a2"), par("a3"));
        let want = ((a1.clone() * a3.clone() - a2.clone() * a2.clone()) * kap(1, 2)
            + a1 * kap(2, 2)
            + a2 * kap(3, 2)
            + a3 * kap(4, 2))
        .neg();
        assert!(expr_eq(&got, &want).unwrap());
    }

    #[test]
    fn hat_coefficients_one_plus_one() {
        let spec = MASpec::generic(MADim::OnePlusOne);
        let hats = hat_coefficients(&spec).unwrap();
        let (a1, a2, a3) = (par("a1"), par("a2"), par("a3"));
        assert!(expr_eq(&hats[0], &kap(1, 2)).unwrap());
        assert!(expr_eq(&hats[1], &(a3 * kap(1, 2) + kap(2, 2))).unwrap());
        assert!(
            expr_eq(
                &hats[2],
                &(Expr::rat(-2, 1) * a2 * kap(1, 2) + kap(3, 2))
            )
            .unwrap()
        );
        assert!(expr_eq(&hats[3], &(a1 * kap(1, 2) + kap(4, 2))).unwrap());
    }

    #[test]
    fn hat_constant_vanishes_when_homogenized() {
        let mut spec = MASpec::generic(MADim::OnePlusOne);
        spec.kappas[4] = homogenization_condition(&spec).unwrap();
        let hats = hat_coefficients(&spec).unwrap();
        assert!(expr_eq(&hats[4], &Expr::zero()).unwrap());
    }

    #[test]
    fn shift_is_vacuous_on_exchange_rows() {
        let spec = MASpec::generic(MADim::TwoPlusOne);
        let sys = build_system(&spec);
        let shifted = affine_shift(&sys, &spec, false).unwrap();
        for i in 0..3 {
            assert!(expr_eq(&sys.equations[i], &shifted.equations[i]).unwrap());
        }
    }
}
