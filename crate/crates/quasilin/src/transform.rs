//! Push a first-order system through an invertible point transformation and
//! classify the result.
//!
//! The jet exchange solves the chain-rule identities
//!   sum_A u[A,i] (dW_B/du_A - sum_j dZ_j/du_A w[B,j])
//!     = sum_j dZ_j/dx_i w[B,j] - dW_B/dx_i
//! for the old jets, then rewrites the base point through the inverse maps.
//! New coordinates reuse the independent/dependent/jet symbol classes, so a
//! transformed system is again an ordinary [`PDESystem`].

use std::collections::BTreeMap;

use num::{BigInt, BigRational};
use thiserror::Error;

use crate::canonical::{canonical_for_translation_scaling, CanonicalError, PointTransformation};
use crate::expr::poly::Poly;
use crate::expr::rnf::poly_to_expr;
use crate::expr::solve::solve_linear;
use crate::expr::{normalize, Expr, ExprError, SymbolId};
use crate::liegeom::{
    check_symmetry, check_theorem1_structure, AlgebraReport, LieError, SymmetryCertificate,
    VectorField,
};

#[derive(Debug, Clone, Error)]
pub enum TransformError {
    #[error("transformation has no inverse (explicit or derivable)")]
    MissingInverse,
    #[error("jet map is singular: {0}")]
    SingularJetMap(String),
    #[error("equation is not polynomial in the jet variables")]
    NonPolynomialInJets,
    #[error("transformed system failed verification: {0}")]
    Verification(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// A first-order PDE system Delta(x, u, u^(1)) = 0.
#[derive(Debug, Clone)]
pub struct PDESystem {
    pub n: u32,
    pub m: u32,
    pub equations: Vec<Expr>,
}

impl PDESystem {
    pub fn new(n: u32, m: u32, equations: Vec<Expr>) -> Self {
        PDESystem { n, m, equations }
    }
}

/// Classification verdict for a (transformed) system.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub autonomous: bool,
    pub jet_degree: Vec<u32>,
    pub homogeneous_in_jets: Vec<bool>,
    pub quasilinear: bool,
    /// When quasilinear: `matrices[i][k][a]` is the coefficient of u[a+1,i+1]
    /// in equation k (one k x m matrix per independent variable).
    pub matrices: Option<Vec<Vec<Vec<Expr>>>>,
}

/// Classify autonomy, jet degree, jet homogeneity and quasilinearity, and
/// extract the coefficient matrices when the system is quasilinear.
pub fn classify(system: &PDESystem) -> Result<ClassificationReport, TransformError> {
    let is_jet = |s: &SymbolId| s.is_jet();
    let mut autonomous = true;
    let mut jet_degree = Vec::new();
    let mut homogeneous = Vec::new();
    let mut coeffs_ok = true;
    let mut polys = Vec::new();
    for eq in &system.equations {
        let r = normalize(eq)?;
        if r.den.contains_symbol_where(is_jet) {
            return Err(TransformError::NonPolynomialInJets);
        }
        if r.num.contains_symbol_where(|s| s.is_independent())
            || r.den.contains_symbol_where(|s| s.is_independent())
        {
            autonomous = false;
        }
        let degs: Vec<u32> = r
            .num
            .terms
            .keys()
            .map(|m| m.degree_where(is_jet))
            .collect();
        let maxd = degs.iter().copied().max().unwrap_or(0);
        let mind = degs.iter().copied().min().unwrap_or(0);
        jet_degree.push(maxd);
        homogeneous.push(maxd == mind && maxd >= 1);
        polys.push(r.num);
    }
    let linear = jet_degree.iter().all(|d| *d == 1);
    let homog = homogeneous.iter().all(|h| *h);
    let mut matrices = None;
    if linear && homog {
        let mut mats = Vec::new();
        for i in 1..=system.n {
            let mut mat = Vec::new();
            for p in &polys {
                let mut row = Vec::new();
                for a in 1..=system.m {
                    let c = p.derivative(&SymbolId::jet(a, i));
                    if c.contains_symbol_where(|s| s.is_independent()) {
                        coeffs_ok = false;
                    }
                    row.push(poly_to_expr(&c));
                }
                mat.push(row);
            }
            mats.push(mat);
        }
        matrices = Some(mats);
    }
    let quasilinear = linear && homog && autonomous && coeffs_ok;
    Ok(ClassificationReport {
        autonomous,
        jet_degree,
        homogeneous_in_jets: homogeneous,
        quasilinear,
        matrices: if quasilinear { matrices } else { None },
    })
}

/// Deterministic generator of small rational sample values (splitmix64).
pub(crate) struct RationalSampler {
    state: u64,
}

impl RationalSampler {
    pub(crate) fn new(seed: u64) -> Self {
        RationalSampler { state: seed }
    }

    pub(crate) fn next_rational(&mut self) -> BigRational {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        let num = (z % 17) as i64 - 8;
        let den = ((z >> 8) % 5) as i64 + 1;
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// Rank of a matrix of rational numbers by Gaussian elimination.
fn numeric_rank(mut mat: Vec<Vec<BigRational>>) -> usize {
    use num::Zero;
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !mat[r][c].is_zero()) else {
            continue;
        };
        mat.swap(rank, p);
        for r in 0..rows {
            if r != rank && !mat[r][c].is_zero() {
                let factor = &mat[r][c] / &mat[rank][c];
                for j in c..cols {
                    let v = &mat[r][j] - &factor * &mat[rank][j];
                    mat[r][j] = v;
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

pub(crate) fn wjet_placeholder(b: u32, j: u32) -> SymbolId {
    SymbolId::param(&format!("__wjet_{b}_{j}"))
}

/// The defining relations of the jet exchange in direction `i`: equations
/// affine in the old jets u[A,i], with the new jets represented by the
/// `wjet_placeholder` parameters.  Returned as (equations, unknowns).
pub(crate) fn jet_exchange_relations(
    t: &PointTransformation,
    i: u32,
) -> (Vec<Expr>, Vec<SymbolId>) {
    let n = t.n;
    let m = t.m;
    let mut eqs = Vec::with_capacity(m as usize);
    for b in 1..=m {
        let wb = &t.w[(b - 1) as usize];
        let mut lhs = Vec::new();
        for a in 1..=m {
            let mut coeff = vec![wb.diff(&SymbolId::dep(a))];
            for j in 1..=n {
                coeff.push(Expr::neg(Expr::prod(vec![
                    t.z[(j - 1) as usize].diff(&SymbolId::dep(a)),
                    Expr::sym(wjet_placeholder(b, j)),
                ])));
            }
            lhs.push(Expr::prod(vec![
                Expr::sym(SymbolId::jet(a, i)),
                Expr::sum(coeff),
            ]));
        }
        let mut rhs = vec![Expr::neg(wb.diff(&SymbolId::indep(i)))];
        for j in 1..=n {
            rhs.push(Expr::prod(vec![
                t.z[(j - 1) as usize].diff(&SymbolId::indep(i)),
                Expr::sym(wjet_placeholder(b, j)),
            ]));
        }
        // lhs - rhs = 0
        eqs.push(Expr::sum(lhs) - Expr::sum(rhs));
    }
    let unknowns: Vec<SymbolId> = (1..=m).map(|a| SymbolId::jet(a, i)).collect();
    (eqs, unknowns)
}

/// Express the old jets u[A,i] as expressions in the new coordinates
/// (z, w, w-jets), where the result reuses the standard symbol classes.
pub fn jet_exchange(
    t: &PointTransformation,
) -> Result<BTreeMap<SymbolId, Expr>, TransformError> {
    let inv = t.inverse.as_ref().ok_or(TransformError::MissingInverse)?;
    let n = t.n;
    let m = t.m;
    let mut out = BTreeMap::new();
    for i in 1..=n {
        // equations indexed by B, unknowns u[A,i]
        let (eqs, unknowns) = jet_exchange_relations(t, i);
        let sol = solve_linear(&eqs, &unknowns).map_err(|e| match e {
            ExprError::Inconsistent => TransformError::SingularJetMap("inconsistent".into()),
            ExprError::Unsupported(msg) => TransformError::SingularJetMap(msg),
            other => TransformError::Expr(other),
        })?;
        for (s, e) in sol {
            out.insert(s, e);
        }
    }
    // rewrite the base point through the inverse and swap placeholders for
    // real jet symbols
    let mut bind: BTreeMap<SymbolId, Expr> = BTreeMap::new();
    for (j, xe) in inv.x_of.iter().enumerate() {
        bind.insert(SymbolId::indep(j as u32 + 1), xe.clone());
    }
    for (a, ue) in inv.u_of.iter().enumerate() {
        bind.insert(SymbolId::dep(a as u32 + 1), ue.clone());
    }
    for b in 1..=m {
        for j in 1..=n {
            bind.insert(wjet_placeholder(b, j), Expr::sym(SymbolId::jet(b, j)));
        }
    }
    for e in out.values_mut() {
        *e = e.substitute(&bind);
    }
    Ok(out)
}

/// Result of a push-forward, with denominator-clearing provenance.
#[derive(Debug, Clone)]
pub struct PushForward {
    pub system: PDESystem,
    /// Per equation, the denominator that was cleared (1 when none).
    pub cleared_factors: Vec<Expr>,
}

/// Substitute the jet map and the inverse point map into each equation,
/// normalize, and clear denominators.
pub fn push_forward(
    system: &PDESystem,
    t: &PointTransformation,
) -> Result<PushForward, TransformError> {
    let jets = jet_exchange(t)?;
    let inv = t.inverse.as_ref().ok_or(TransformError::MissingInverse)?;
    let mut bind: BTreeMap<SymbolId, Expr> = jets;
    for (j, xe) in inv.x_of.iter().enumerate() {
        bind.insert(SymbolId::indep(j as u32 + 1), xe.clone());
    }
    for (a, ue) in inv.u_of.iter().enumerate() {
        bind.insert(SymbolId::dep(a as u32 + 1), ue.clone());
    }
    let mut equations = Vec::with_capacity(system.equations.len());
    let mut cleared = Vec::with_capacity(system.equations.len());
    for eq in &system.equations {
        let r = normalize(&eq.substitute(&bind))?;
        equations.push(poly_to_expr(&r.num));
        cleared.push(poly_to_expr(&r.den));
    }
    Ok(PushForward {
        system: PDESystem::new(system.n, system.m, equations),
        cleared_factors: cleared,
    })
}

/// Rewrite a transformed system so that equations lying in the ideal of the
/// jet-exchange binomials u[A,i] - u[i,A] are replaced by the plain binomials
/// themselves, and the remaining equations are reduced modulo them.
///
/// The replacement is sound when the quotient matrix expressing the original
/// equations in terms of the binomials is invertible; its generic
/// invertibility is certified by rank over the function field.  Returns
/// `None` (leaving the system untouched) when the certificate fails.
pub fn straighten_exchange(system: &PDESystem) -> Result<Option<PDESystem>, TransformError> {
    if system.n != system.m {
        return Ok(None);
    }
    let n = system.n;
    // candidate binomials u[A,i] - u[i,A], A < i
    let mut bins = Vec::new();
    for a in 1..=n {
        for i in a + 1..=n {
            bins.push((SymbolId::jet(a, i), SymbolId::jet(i, a)));
        }
    }
    let mut in_ideal: Vec<(usize, Vec<Poly>)> = Vec::new();
    let mut rest: Vec<(usize, Poly)> = Vec::new();
    for (k, eq) in system.equations.iter().enumerate() {
        let r = normalize(eq)?;
        if r.den.contains_symbol_where(|s| s.is_jet()) {
            return Err(TransformError::NonPolynomialInJets);
        }
        let (residue, quots) = reduce_mod_exchange(&r.num, &bins);
        if residue.is_zero() {
            in_ideal.push((k, quots));
        } else {
            rest.push((k, residue));
        }
    }
    if in_ideal.len() != bins.len() {
        return Ok(None);
    }
    // the quotient matrix must have full rank over the function field; a
    // full-rank rational specialization bounds the generic rank from below,
    // so sampling certifies invertibility without symbolic elimination
    let mut symbols: std::collections::BTreeSet<SymbolId> = Default::default();
    for (_, q) in &in_ideal {
        for p in q {
            symbols.extend(p.symbols());
        }
    }
    let mut sampler = RationalSampler::new(0xa11ce);
    let mut certified = false;
    'sample: for _ in 0..16 {
        let point: BTreeMap<SymbolId, BigRational> = symbols
            .iter()
            .map(|s| (s.clone(), sampler.next_rational()))
            .collect();
        let mut mat = Vec::with_capacity(in_ideal.len());
        for (_, q) in &in_ideal {
            let mut row = Vec::with_capacity(q.len());
            for p in q {
                match p.eval(&point) {
                    Ok(v) => row.push(v),
                    Err(_) => continue 'sample,
                }
            }
            mat.push(row);
        }
        if numeric_rank(mat) == bins.len() {
            certified = true;
            break;
        }
    }
    if !certified {
        return Ok(None);
    }
    let mut equations = vec![Expr::zero(); system.equations.len()];
    for ((k, _), (hi, lo)) in in_ideal.iter().zip(&bins) {
        equations[*k] = Expr::sym(lo.clone()) - Expr::sym(hi.clone());
    }
    for (k, residue) in rest {
        equations[k] = poly_to_expr(&residue);
    }
    Ok(Some(PDESystem::new(system.n, system.m, equations)))
}

/// p = residue (free of the `hi` symbols) + sum_b quotient_b * (hi_b - lo_b).
fn reduce_mod_exchange(p: &Poly, bins: &[(SymbolId, SymbolId)]) -> (Poly, Vec<Poly>) {
    let mut cur = p.clone();
    let mut quotients = Vec::with_capacity(bins.len());
    for (hi, lo) in bins {
        // canonical representative keeps the smaller symbol
        let (hi, lo) = if hi > lo { (hi, lo) } else { (lo, hi) };
        if cur.degree_of(hi) == 0 {
            quotients.push(Poly::zero());
            continue;
        }
        let mut map = BTreeMap::new();
        map.insert(hi.clone(), Poly::var(lo.clone()));
        let subbed = cur.substitute(&map);
        let divisor = Poly::var(hi.clone()).sub(&Poly::var(lo.clone()));
        let q = cur
            .sub(&subbed)
            .exact_div(&divisor)
            .expect("substitution difference divisible by the binomial");
        quotients.push(q);
        cur = subbed;
    }
    (cur, quotients)
}

/// Stage-tagged pipeline failure.
#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("algebra structure check failed")]
    Structure(AlgebraReport),
    #[error("field {index} is not a symmetry of the system")]
    Symmetry {
        index: usize,
        certificate: SymmetryCertificate,
    },
    #[error("canonical-variable construction failed: {0}")]
    Canonical(#[from] CanonicalError),
    #[error("push-forward failed: {0}")]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// Full pipeline outcome.
#[derive(Debug)]
pub struct Reduction {
    pub algebra: AlgebraReport,
    pub symmetry: Vec<SymmetryCertificate>,
    pub transformation: PointTransformation,
    pub transformed: PDESystem,
    pub cleared_factors: Vec<Expr>,
    pub straightened: bool,
    pub classification: ClassificationReport,
}

/// Run the reduction pipeline: structure check, per-field symmetry check,
/// canonical variables, push-forward (with exchange straightening when it
/// certifies), classification.  Each stage gates the next.
pub fn reduce(
    system: &PDESystem,
    fields: &[VectorField],
    mult_degree: Option<u32>,
) -> Result<Reduction, ReduceError> {
    let algebra = check_theorem1_structure(fields)?;
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
    let transformation = canonical_for_translation_scaling(fields)?;
    let pushed = push_forward(system, &transformation)?;
    let (transformed, straightened) = match straighten_exchange(&pushed.system)? {
        Some(mut s) => {
            // reduction modulo the exchange binomials can expose factors of
            // the cleared denominators, which are nonzero wherever the
            // transformation is defined; cancel them
            // the denominators are compared on the exchange locus, so
            // rewrite them modulo the binomials first
            let mut sym_map = BTreeMap::new();
            for a in 1..=s.n {
                for i in a + 1..=s.n {
                    sym_map.insert(SymbolId::jet(i, a), Poly::var(SymbolId::jet(a, i)));
                }
            }
            for (eq, den) in s.equations.iter_mut().zip(&pushed.cleared_factors) {
                let mut num = normalize(eq).map_err(TransformError::Expr)?.num;
                let denp = normalize(den)
                    .map_err(TransformError::Expr)?
                    .num
                    .substitute(&sym_map);
                loop {
                    let g = crate::expr::poly_gcd(&num, &denp);
                    if g.is_constant() {
                        break;
                    }
                    num = num.exact_div(&g).expect("gcd divides");
                }
                *eq = poly_to_expr(&num);
            }
            (s, true)
        }
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

/// Compare two systems as unordered sets of equations, up to a nonzero
/// rational-function scalar per equation.
pub fn systems_match(a: &PDESystem, b: &PDESystem) -> Result<bool, ExprError> {
    if a.equations.len() != b.equations.len() {
        return Ok(false);
    }
    let norm = |eq: &Expr| -> Result<Poly, ExprError> {
        Ok(normalize(eq)?.num.primitive_normalized())
    };
    let mut remaining: Vec<Poly> = b
        .equations
        .iter()
        .map(|e| norm(e))
        .collect::<Result<_, _>>()?;
    for eq in &a.equations {
        let pa = norm(eq)?;
        // proportional over the function field: pa * lead(pb) == pb * lead(pa)
        let pos = remaining.iter().position(|pb| proportional(&pa, pb));
        match pos {
            Some(i) => {
                remaining.remove(i);
            }
            None => return Ok(false),
        }
    }
    Ok(true)
}

/// Equations are regarded as equal when they differ by a factor free of jet
/// variables (a nonzero function of the base point, e.g. a cleared
/// denominator).
fn proportional(a: &Poly, b: &Poly) -> bool {
    if a.is_zero() || b.is_zero() {
        return a.is_zero() && b.is_zero();
    }
    let g = crate::expr::poly_gcd(a, b);
    let qa = a.exact_div(&g).expect("gcd divides");
    let qb = b.exact_div(&g).expect("gcd divides");
    let is_jet = |s: &SymbolId| s.is_jet();
    !qa.contains_symbol_where(is_jet) && !qb.contains_symbol_where(is_jet)
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

    #[test]
    fn identity_jet_exchange() {
        let t = PointTransformation::identity(2, 2);
        let map = jet_exchange(&t).unwrap();
        for a in 1..=2 {
            for i in 1..=2 {
                assert!(crate::expr::expr_eq(
                    &map[&SymbolId::jet(a, i)],
                    &v(a, i)
                )
                .unwrap());
            }
        }
    }

    #[test]
    fn scaling_jet_exchange() {
        // z = 2x, w = u (n = m = 1): u[1,1] = 2 w[1,1]
        let t = PointTransformation {
            n: 1,
            m: 1,
            z: vec![Expr::prod(vec![Expr::int(2), x(1)])],
            w: vec![u(1)],
            inverse: Some(crate::canonical::Inverse {
                x_of: vec![Expr::prod(vec![Expr::rat(1, 2), x(1)])],
                u_of: vec![u(1)],
            }),
        };
        let map = jet_exchange(&t).unwrap();
        let expected = Expr::prod(vec![Expr::int(2), v(1, 1)]);
        assert!(crate::expr::expr_eq(&map[&SymbolId::jet(1, 1)], &expected).unwrap());
    }

    #[test]
    fn classify_flags() {
        // quasilinear autonomous homogeneous
        let s1 = PDESystem::new(
            2,
            2,
            vec![
                v(2, 1) - v(1, 2),
                Expr::prod(vec![u(1), v(1, 1)]) + v(2, 2),
            ],
        );
        let rep = classify(&s1).unwrap();
        assert!(rep.quasilinear && rep.autonomous);
        let mats = rep.matrices.unwrap();
        assert!(crate::expr::expr_eq(&mats[0][1][0], &u(1)).unwrap());
        // source term breaks homogeneity
        let s2 = PDESystem::new(2, 2, vec![v(1, 1) + Expr::one()]);
        let rep2 = classify(&s2).unwrap();
        assert!(!rep2.homogeneous_in_jets[0] && !rep2.quasilinear);
        // explicit x breaks autonomy
        let s3 = PDESystem::new(2, 2, vec![v(1, 1) + Expr::prod(vec![x(1), v(1, 2)])]);
        let rep3 = classify(&s3).unwrap();
        assert!(!rep3.autonomous && !rep3.quasilinear);
        // nonlinear jet term
        let s4 = PDESystem::new(2, 2, vec![Expr::prod(vec![v(1, 1), v(2, 2)])]);
        let rep4 = classify(&s4).unwrap();
        assert_eq!(rep4.jet_degree[0], 2);
        assert!(!rep4.quasilinear);
    }

    #[test]
    fn push_forward_identity_is_noop() {
        let s = PDESystem::new(
            2,
            2,
            vec![v(2, 1) - v(1, 2), Expr::prod(vec![v(1, 1), v(2, 2)]) - Expr::one()],
        );
        let t = PointTransformation::identity(2, 2);
        let p = push_forward(&s, &t).unwrap();
        assert!(systems_match(&s, &p.system).unwrap());
    }

    #[test]
    fn systems_match_up_to_scalar_and_order() {
        let a = PDESystem::new(2, 2, vec![v(1, 1) + v(2, 2), v(2, 1) - v(1, 2)]);
        let b = PDESystem::new(
            2,
            2,
            vec![
                Expr::prod(vec![Expr::int(3), v(1, 2)]) - Expr::prod(vec![Expr::int(3), v(2, 1)]),
                Expr::prod(vec![u(1), v(1, 1)]) + Expr::prod(vec![u(1), v(2, 2)]),
            ],
        );
        assert!(systems_match(&a, &b).unwrap());
        let c = PDESystem::new(2, 2, vec![v(1, 1) - v(2, 2), v(2, 1) - v(1, 2)]);
        assert!(!systems_match(&a, &c).unwrap());
    }
}
