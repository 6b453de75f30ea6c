//! Exact linear algebra over the field of rational functions.
//!
//! Elimination works on [`Rnf`] entries with pivots chosen by sparsity
//! (fewest polynomial terms), which keeps intermediate fractions small on the
//! structured systems that arise here.

use std::collections::BTreeMap;

use super::rnf::{normalize, Rnf};
use super::symbol::SymbolId;
use super::tree::Expr;
use super::ExprError;

/// Outcome of solving `A x = b`.
#[derive(Clone, Debug)]
pub enum LinearSolution {
    /// A unique solution exists for the pivoted variables; free variables are
    /// reported with their index and set to zero in `values`.
    Solved {
        values: Vec<Rnf>,
        free: Vec<usize>,
    },
    /// The system is inconsistent.
    Inconsistent,
}

/// Rank of a matrix over the rational-function field.
pub fn matrix_rank(rows: &[Vec<Rnf>]) -> usize {
    let mut m: Vec<Vec<Rnf>> = rows.to_vec();
    let ncols = m.iter().map(|r| r.len()).max().unwrap_or(0);
    for r in m.iter_mut() {
        r.resize(ncols, Rnf::zero());
    }
    let mut rank = 0;
    for col in 0..ncols {
        if let Some(p) = pick_pivot(&m, rank, col) {
            m.swap(rank, p);
            eliminate_below(&mut m, rank, col);
            rank += 1;
            if rank == m.len() {
                break;
            }
        }
    }
    rank
}

/// Like [`solve_augmented`], but instead of declaring the system
/// inconsistent, returns the right-hand sides of the unsatisfiable rows.
/// Those residuals are exactly the conditions under which the system becomes
/// solvable with the reported `values`.
pub fn solve_with_residuals(
    aug: &[Vec<Rnf>],
    nvars: usize,
) -> Result<(Vec<Rnf>, Vec<usize>, Vec<Rnf>), ExprError> {
    let mut m: Vec<Vec<Rnf>> = aug
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.resize(nvars + 1, Rnf::zero());
            row
        })
        .collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; nvars];
    let mut row = 0;
    for col in 0..nvars {
        if let Some(p) = pick_pivot(&m, row, col) {
            m.swap(row, p);
            eliminate_all(&mut m, row, col)?;
            pivot_of_col[col] = Some(row);
            row += 1;
            if row == m.len() {
                break;
            }
        }
    }
    let mut residuals = Vec::new();
    for r in &m[row..] {
        if r[..nvars].iter().all(|e| e.is_zero()) && !r[nvars].is_zero() {
            residuals.push(r[nvars].clone());
        }
    }
    let mut values = vec![Rnf::zero(); nvars];
    let mut free = Vec::new();
    for col in 0..nvars {
        match pivot_of_col[col] {
            Some(r) => {
                values[col] = m[r][nvars].div(&m[r][col])?;
            }
            None => free.push(col),
        }
    }
    Ok((values, free, residuals))
}

/// Solve `A x = b` over the rational-function field.  `aug[r]` holds row `r`
/// of `A` followed by `b[r]` in the last position.
pub fn solve_augmented(aug: &[Vec<Rnf>], nvars: usize) -> Result<LinearSolution, ExprError> {
    let (values, free, residuals) = solve_with_residuals(aug, nvars)?;
    if residuals.is_empty() {
        // with free variables at zero, pivot rows reduce to x_col = rhs/pivot
        Ok(LinearSolution::Solved { values, free })
    } else {
        Ok(LinearSolution::Inconsistent)
    }
}

/// Nullspace basis of `A x = 0`: one vector per free column, expressed in the
/// original variable order.
pub fn nullspace(rows: &[Vec<Rnf>], nvars: usize) -> Result<Vec<Vec<Rnf>>, ExprError> {
    let mut m: Vec<Vec<Rnf>> = rows
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.resize(nvars, Rnf::zero());
            row
        })
        .collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; nvars];
    let mut row = 0;
    for col in 0..nvars {
        if let Some(p) = pick_pivot(&m, row, col) {
            m.swap(row, p);
            eliminate_all(&mut m, row, col)?;
            pivot_of_col[col] = Some(row);
            row += 1;
            if row == m.len() {
                break;
            }
        }
    }
    let mut basis = Vec::new();
    for fc in 0..nvars {
        if pivot_of_col[fc].is_some() {
            continue;
        }
        let mut v = vec![Rnf::zero(); nvars];
        v[fc] = Rnf::one();
        for col in 0..nvars {
            if let Some(r) = pivot_of_col[col] {
                // pivot row: m[r][col] * x_col + m[r][fc] * x_fc (+ other free) = 0
                v[col] = m[r][fc].div(&m[r][col])?.neg();
            }
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Reduced row echelon form; returns the list of pivot columns.  Rows are
/// rescaled so each pivot entry is 1, and zero rows are dropped.
pub fn rref(rows: &mut Vec<Vec<Rnf>>) -> Result<Vec<usize>, ExprError> {
    let ncols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    for r in rows.iter_mut() {
        r.resize(ncols, Rnf::zero());
    }
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == rows.len() {
            break;
        }
        if let Some(p) = pick_pivot(rows, row, col) {
            rows.swap(row, p);
            eliminate_all(rows, row, col)?;
            let inv = rows[row][col].recip()?;
            for e in rows[row].iter_mut() {
                *e = e.mul(&inv);
            }
            pivots.push(col);
            row += 1;
        }
    }
    rows.truncate(row);
    Ok(pivots)
}

/// Solve equations affine in the given unknowns for a unique solution, with
/// coefficients in the rational-function field of the remaining symbols.
/// The solution is verified by back-substitution before being returned.
pub fn solve_linear(
    equations: &[Expr],
    unknowns: &[SymbolId],
) -> Result<BTreeMap<SymbolId, Expr>, ExprError> {
    let mut aug: Vec<Vec<Rnf>> = Vec::with_capacity(equations.len());
    for eq in equations {
        let r = normalize(eq)?;
        // affine in the unknowns: numerator has degree <= 1 in each unknown
        // jointly; extract coefficients by differentiation
        let mut row = Vec::with_capacity(unknowns.len() + 1);
        let mut rest = r.num.clone();
        for s in unknowns {
            if r.num.degree_of(s) > 1 {
                return Err(ExprError::Unsupported(format!(
                    "equation not affine in unknown {s}"
                )));
            }
            let coeff = r.num.derivative(s);
            if coeff.contains_symbol_where(|t| unknowns.contains(t)) {
                return Err(ExprError::Unsupported(format!(
                    "equation not affine in unknown {s}"
                )));
            }
            rest = rest.substitute(&BTreeMap::from([(s.clone(), crate::expr::poly::Poly::zero())]));
            row.push(Rnf::from_poly(coeff));
        }
        // A x + rest = 0  =>  rhs = -rest
        row.push(Rnf::from_poly(rest.neg()));
        aug.push(row);
    }
    match solve_augmented(&aug, unknowns.len())? {
        LinearSolution::Inconsistent => Err(ExprError::Inconsistent),
        LinearSolution::Solved { values, free } => {
            if !free.is_empty() {
                return Err(ExprError::Unsupported(format!(
                    "underdetermined system: {} free unknowns",
                    free.len()
                )));
            }
            let mut out = BTreeMap::new();
            let mut bind = BTreeMap::new();
            for (s, v) in unknowns.iter().zip(&values) {
                out.insert(s.clone(), v.to_expr());
                bind.insert(s.clone(), v.clone());
            }
            // back-substitution check
            for eq in equations {
                let res = normalize(eq)?.substitute(&bind)?;
                assert!(res.is_zero(), "back-substitution residual nonzero");
            }
            Ok(out)
        }
    }
}

/// Pick the sparsest nonzero pivot in `col` at or below `from`.
fn pick_pivot(m: &[Vec<Rnf>], from: usize, col: usize) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (r, row) in m.iter().enumerate().skip(from) {
        let e = match row.get(col) {
            Some(e) if !e.is_zero() => e,
            _ => continue,
        };
        let weight = e.num.num_terms() + e.den.num_terms();
        match best {
            Some((_, w)) if w <= weight => {}
            _ => best = Some((r, weight)),
        }
    }
    best.map(|(r, _)| r)
}

fn eliminate_below(m: &mut [Vec<Rnf>], prow: usize, col: usize) {
    let pv = m[prow][col].clone();
    for r in prow + 1..m.len() {
        if m[r][col].is_zero() {
            continue;
        }
        let factor = m[r][col].div(&pv).expect("pivot nonzero");
        let prow_snapshot = m[prow].clone();
        for (e, p) in m[r].iter_mut().zip(prow_snapshot.iter()) {
            *e = e.sub(&p.mul(&factor));
        }
    }
}

fn eliminate_all(m: &mut [Vec<Rnf>], prow: usize, col: usize) -> Result<(), ExprError> {
    let pv = m[prow][col].clone();
    for r in 0..m.len() {
        if r == prow || m[r][col].is_zero() {
            continue;
        }
        let factor = m[r][col].div(&pv)?;
        let prow_snapshot = m[prow].clone();
        for (e, p) in m[r].iter_mut().zip(prow_snapshot.iter()) {
            *e = e.sub(&p.mul(&factor));
        }
    }
    Ok(())
}
