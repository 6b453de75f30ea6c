//! Hessian determinants, their derivatives under the symmetric-pair
//! convention, and cofactors — the raw material of the Monge-Ampère
//! builders.
//!
//! The Hessian is written in the first-order-system jets with the canonical
//! symmetric representative: entry (i,j) is the symbol u[min(i,j),max(i,j)].
//! For an off-diagonal pair that symbol occurs twice in the matrix, so the
//! plain partial derivative with respect to it automatically realizes the
//! convention dH/du_{,ij} = (2 - delta_ij) * cofactor(i,j).

use std::collections::BTreeMap;

use crate::expr::poly::Poly;
use crate::expr::SymbolId;

/// Jet symbol for the second derivative u_{,ij} in first-order-system form.
pub fn hjet(i: u32, j: u32) -> SymbolId {
    SymbolId::jet(i.min(j), i.max(j))
}

/// Determinant by Laplace expansion along the first row.
pub fn det(mat: &[Vec<Poly>]) -> Poly {
    let k = mat.len();
    if k == 1 {
        return mat[0][0].clone();
    }
    let mut acc = Poly::zero();
    for (j, entry) in mat[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<Poly>> = mat[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = entry.mul(&det(&minor));
        if j % 2 == 0 {
            acc = acc.add(&term);
        } else {
            acc = acc.sub(&term);
        }
    }
    acc
}

/// Cofactor of the (r,c) entry (1-based).
pub fn cofactor(mat: &[Vec<Poly>], r: usize, c: usize) -> Poly {
    let minor: Vec<Vec<Poly>> = mat
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != r - 1)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != c - 1)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect();
    let d = det(&minor);
    if (r + c) % 2 == 0 {
        d
    } else {
        d.neg()
    }
}

/// Adjugate: adj[i][j] = cofactor(j+1, i+1), so that mat * adj = det * I.
pub fn adjugate(mat: &[Vec<Poly>]) -> Vec<Vec<Poly>> {
    let k = mat.len();
    (0..k)
        .map(|i| (0..k).map(|j| cofactor(mat, j + 1, i + 1)).collect())
        .collect()
}

/// The symmetric jet Hessian matrix of size k.
pub fn hessian_matrix(k: u32) -> Vec<Vec<Poly>> {
    (1..=k)
        .map(|i| (1..=k).map(|j| Poly::var(hjet(i, j))).collect())
        .collect()
}

/// Hessian matrix of the opaque function f: entries f_{;ij}.
pub fn f_hessian_matrix(k: u32) -> Vec<Vec<Poly>> {
    let deps: Vec<u32> = (1..=k).collect();
    (1..=k)
        .map(|i| {
            (1..=k)
                .map(|j| {
                    Poly::var(SymbolId::opaque_deriv(
                        "f",
                        &deps,
                        &[i.min(j), i.max(j)],
                    ))
                })
                .collect()
        })
        .collect()
}

/// All the derived data of the k x k jet Hessian.
pub struct HessianPack {
    pub k: u32,
    pub h: Poly,
    /// dh[(i,j)] = (2 - delta_ij) * cofactor(i,j), keys with i <= j.
    pub dh: BTreeMap<(u32, u32), Poly>,
    /// d2h[((k,l),(m,n))] for the pairs occurring in the (3+1) equation.
    pub d2h: BTreeMap<((u32, u32), (u32, u32)), Poly>,
    /// cof[(i,j)] = cofactor of the (i,j) entry, keys with i <= j.
    pub cof: BTreeMap<(u32, u32), Poly>,
    /// cof_f[(i,j)] = cofactor of the Hessian of f, keys with i <= j.
    pub cof_f: BTreeMap<(u32, u32), Poly>,
}

/// Build the pack for k in {2, 3, 4}.
pub fn hessian_pack(k: u32) -> HessianPack {
    assert!((2..=4).contains(&k), "Hessian size must be 2, 3 or 4");
    let mat = hessian_matrix(k);
    let fmat = f_hessian_matrix(k);
    let h = det(&mat);
    let mut dh = BTreeMap::new();
    let mut cof = BTreeMap::new();
    let mut cof_f = BTreeMap::new();
    for i in 1..=k {
        for j in i..=k {
            dh.insert((i, j), h.derivative(&hjet(i, j)));
            cof.insert((i, j), cofactor(&mat, i as usize, j as usize));
            cof_f.insert((i, j), cofactor(&fmat, i as usize, j as usize));
        }
    }
    let mut d2h = BTreeMap::new();
    if k == 4 {
        for (kk, l) in pairs(k) {
            for (m, n) in pairs(k) {
                if (kk, l) <= (m, n) && kk <= m {
                    let d1 = h.derivative(&hjet(kk, l));
                    d2h.insert(((kk, l), (m, n)), d1.derivative(&hjet(m, n)));
                }
            }
        }
    }
    HessianPack {
        k,
        h,
        dh,
        d2h,
        cof,
        cof_f,
    }
}

/// Index pairs (a,b) with a < b.
pub fn pairs(k: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for a in 1..=k {
        for b in a + 1..=k {
            out.push((a, b));
        }
    }
    out
}
