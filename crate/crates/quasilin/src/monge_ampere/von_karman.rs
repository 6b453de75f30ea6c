//! The fluid-dynamic instance of the two-variable equation.
//!
//! The one-dimensional Euler equations of an isentropic fluid, written in
//! potential form, collapse to a single second-order equation for the
//! potential; with the Von Karman constitutive law p = -kappa^2(s)/rho + b(s)
//! that equation is of Monge-Ampere type:
//!
//!   u_{,11} u_{,22} - u_{,12}^2 + kappa^2(s(u_{,2})) - b(s(u_{,2})) u_{,22} = 0.
//!
//! In first-order form this is the two-variable equation shape with
//! kappa_1 = 1, kappa_2 = kappa_3 = 0, kappa_4 = -b, kappa_5 = kappa^2,
//! where b and kappa^2 are unspecified functions of u_2 alone (the entropy
//! only enters through s(u_2)).  The module instantiates the spec and
//! derives the three constraints under which the system maps to a
//! homogeneous autonomous quasilinear one: the kappa^2 expression forced by
//! homogenization, the b expression forced by the scaling symmetry, and the
//! u_1-independence constraint on f that makes the b expression a function
//! of u_2 alone.


use crate::expr::{normalize, solve_linear, Expr, ExprError, SymbolId};
use crate::transform::PDESystem;

use super::conditions::symmetry_conditions;
use super::{build_system, homogenization_condition, MADim, MAError, MASpec};

/// The symbol b(s(u_2)) of the constitutive law.
pub fn b_symbol() -> SymbolId {
    SymbolId::opaque("b", &[2])
}

/// The symbol kappa^2(s(u_2)) of the constitutive law.
pub fn kappa_sq_symbol() -> SymbolId {
    SymbolId::opaque("ksq", &[2])
}

fn alpha(i: u32) -> Expr {
    Expr::sym(SymbolId::param(&format!("a{i}")))
}

fn f_d(index: &[u32]) -> Expr {
    Expr::sym(SymbolId::opaque_deriv("f", &[1, 2], index))
}

/// The two-variable spec of the Von Karman equation.
pub fn von_karman_spec() -> MASpec {
    let b = Expr::sym(b_symbol());
    let ksq = Expr::sym(kappa_sq_symbol());
    MASpec::new(
        MADim::OnePlusOne,
        vec![Expr::int(1), Expr::int(0), Expr::int(0), b.neg(), ksq],
        vec![alpha(1), alpha(2), alpha(3)],
    )
    .expect("the Von Karman spec is valid")
}

/// The equation in first-order form together with the three reduction
/// conditions.
pub struct VonKarmanExample {
    pub spec: MASpec,
    pub system: PDESystem,
    /// Vanishing conditions: the kappa^2 constraint, the b constraint
    /// (denominators cleared), and the u_1-independence constraint on f
    /// (numerator of the u_1-derivative).
    pub conditions: Vec<Expr>,
}

fn is_identical(x: &Expr, y: &Expr) -> Result<bool, ExprError> {
    Ok(normalize(&(x.clone() - y.clone()))?.num.is_zero())
}

fn is_proportional(x: &Expr, y: &Expr) -> Result<bool, ExprError> {
    let a = normalize(x)?.num.primitive_normalized();
    let b = normalize(y)?.num.primitive_normalized();
    Ok(a == b || a == b.scale(&-num::BigRational::from(num::BigInt::from(1))))
}

/// Instantiate the Von Karman equation and derive its reduction conditions,
/// cross-checking each against the general machinery.
pub fn von_karman_example() -> Result<VonKarmanExample, MAError> {
    let spec = von_karman_spec();
    let system = build_system(&spec);
    let b = Expr::sym(b_symbol());
    let ksq = Expr::sym(kappa_sq_symbol());
    let (a1, a2, a3) = (alpha(1), alpha(2), alpha(3));
    let (f11, f12, f22) = (f_d(&[1, 1]), f_d(&[1, 2]), f_d(&[2, 2]));

    // homogenization forces kappa^2 = alpha_2^2 - alpha_1 alpha_3
    // + alpha_3 b (the general last-coefficient display specialized to
    // kappa_1 = 1, kappa_4 = -b)
    let ksq_required = Expr::pow(a2.clone(), 2) - a1.clone() * a3.clone() + a3.clone() * b.clone();
    let cond_ksq = ksq - ksq_required.clone();
    let machine_ksq = homogenization_condition(&spec)?;
    if !is_identical(&ksq_required, &machine_ksq).map_err(MAError::Expr)? {
        return Err(MAError::Expr(ExprError::Inconsistent));
    }

    // the scaling symmetry forces b f_{;11} = 1 + alpha_3 f_{;22}
    // + 2 alpha_2 f_{;12} + alpha_1 f_{;11}
    let rhs = Expr::int(1)
        + a3.clone() * f22.clone()
        + Expr::int(2) * a2.clone() * f12.clone()
        + a1.clone() * f11.clone();
    let cond_b = b.clone() * f11.clone() - rhs;
    let machine = symmetry_conditions(&spec)?;
    if machine.len() != 1 || !is_proportional(&cond_b, &machine[0]).map_err(MAError::Expr)? {
        return Err(MAError::Expr(ExprError::Inconsistent));
    }

    // b is a function of u_2 alone, so the b expression must be free of
    // u_1; equivalently (1 + alpha_3 f_{;22} + 2 alpha_2 f_{;12}) / f_{;11}
    // has vanishing u_1-derivative.  Numerator form:
    let g = Expr::int(1) + a3 * f22 + Expr::int(2) * a2 * f12;
    let u1 = SymbolId::dep(1);
    let cond_f = g.diff(&u1) * f11.clone() - g * f11.diff(&u1);
    // cross-check: solving the b condition for b and differentiating gives
    // the same constraint
    let b_of = solve_linear(std::slice::from_ref(&cond_b), std::slice::from_ref(&b_symbol()))
        .map_err(MAError::Expr)?;
    let derived = b_of[&b_symbol()].diff(&u1);
    if !is_proportional(&cond_f, &derived).map_err(MAError::Expr)? {
        return Err(MAError::Expr(ExprError::Inconsistent));
    }

    Ok(VonKarmanExample {
        spec,
        system,
        conditions: vec![cond_ksq, cond_b, cond_f],
    })
}
