//! Symbol identifiers for the symbolic kernel.
//!
//! The kernel works over five classes of indeterminates: independent
//! variables `x_i`, dependent variables `u_A`, first-order jets `u_{A,i}`,
//! named constant parameters, and formal derivatives of opaque function
//! symbols.  An opaque symbol `f;I` stands for the partial derivative of an
//! unspecified smooth function `f(u_...)` with respect to the dependent
//! variables listed in the multi-index `I`; mixed partials commute, so `I`
//! is kept sorted.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Identifier of a single indeterminate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SymbolId {
    /// Named constant parameter (the paper's `alpha_j`, ansatz unknowns, ...).
    Parameter(Arc<str>),
    /// Independent variable `x_i` (1-based).
    Independent(u32),
    /// Dependent variable `u_A` (1-based).
    Dependent(u32),
    /// First-order jet `u_{A,i}`: derivative of `u_A` with respect to `x_i`.
    Jet(u32, u32),
    /// Formal derivative of an opaque function symbol.
    ///
    /// `deps` is the sorted set of dependent-variable indices the function
    /// may depend on; differentiation along any other dependent yields zero.
    /// `index` is the sorted derivative multi-index (each entry in `deps`).
    OpaqueDeriv {
        name: Arc<str>,
        deps: Arc<[u32]>,
        index: Arc<[u32]>,
    },
}

impl SymbolId {
    pub fn param(name: &str) -> Self {
        SymbolId::Parameter(name.into())
    }

    pub fn indep(i: u32) -> Self {
        SymbolId::Independent(i)
    }

    pub fn dep(a: u32) -> Self {
        SymbolId::Dependent(a)
    }

    pub fn jet(a: u32, i: u32) -> Self {
        SymbolId::Jet(a, i)
    }

    /// The undifferentiated opaque symbol `name(u_deps)`.
    pub fn opaque(name: &str, deps: &[u32]) -> Self {
        Self::opaque_deriv(name, deps, &[])
    }

    /// Derivative symbol `name;index`; the multi-index is sorted on entry.
    pub fn opaque_deriv(name: &str, deps: &[u32], index: &[u32]) -> Self {
        let mut deps: Vec<u32> = deps.to_vec();
        deps.sort_unstable();
        deps.dedup();
        let mut index: Vec<u32> = index.to_vec();
        index.sort_unstable();
        SymbolId::OpaqueDeriv {
            name: name.into(),
            deps: deps.into(),
            index: index.into(),
        }
    }

    /// Differentiate this symbol with respect to `s`, as far as the result is
    /// again a single symbol times a constant.  Returns:
    /// `Some(sym)` when d(self)/d(s) is the symbol `sym`, `None` when it is 0.
    /// The only non-Kronecker case is the opaque chain rule
    /// `d(f;I)/d(u_A) = f;sort(I+A)`.
    pub fn formal_derivative(&self, s: &SymbolId) -> Option<SymbolId> {
        match (self, s) {
            (SymbolId::OpaqueDeriv { name, deps, index }, SymbolId::Dependent(a)) => {
                if deps.contains(a) {
                    let mut idx = index.to_vec();
                    idx.push(*a);
                    idx.sort_unstable();
                    Some(SymbolId::OpaqueDeriv {
                        name: name.clone(),
                        deps: deps.clone(),
                        index: idx.into(),
                    })
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn class_rank(&self) -> u8 {
        match self {
            SymbolId::Parameter(_) => 0,
            SymbolId::Independent(_) => 1,
            SymbolId::Dependent(_) => 2,
            SymbolId::Jet(_, _) => 3,
            SymbolId::OpaqueDeriv { .. } => 4,
        }
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, SymbolId::Jet(_, _))
    }

    pub fn is_independent(&self) -> bool {
        matches!(self, SymbolId::Independent(_))
    }
}

// Fixed global order: Parameters < Independents < Dependents < Jets <
// OpaqueDerivs, ordered within each class; normal forms depend on it, so
// it must stay stable.
impl Ord for SymbolId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.class_rank()
            .cmp(&other.class_rank())
            .then_with(|| match (self, other) {
                (SymbolId::Parameter(a), SymbolId::Parameter(b)) => a.cmp(b),
                (SymbolId::Independent(a), SymbolId::Independent(b)) => a.cmp(b),
                (SymbolId::Dependent(a), SymbolId::Dependent(b)) => a.cmp(b),
                (SymbolId::Jet(a, i), SymbolId::Jet(b, j)) => (a, i).cmp(&(b, j)),
                (
                    SymbolId::OpaqueDeriv {
                        name: n1, index: i1, ..
                    },
                    SymbolId::OpaqueDeriv {
                        name: n2, index: i2, ..
                    },
                ) => (i1.len(), n1, i1).cmp(&(i2.len(), n2, i2)),
                _ => unreachable!("class ranks equal"),
            })
    }
}

impl PartialOrd for SymbolId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolId::Parameter(name) => write!(f, "{name}"),
            SymbolId::Independent(i) => write!(f, "x{i}"),
            SymbolId::Dependent(a) => write!(f, "u{a}"),
            SymbolId::Jet(a, i) => write!(f, "u[{a},{i}]"),
            SymbolId::OpaqueDeriv { name, index, .. } => {
                if index.is_empty() {
                    write!(f, "{name}")
                } else {
                    write!(f, "{name};")?;
                    for k in index.iter() {
                        write!(f, "{k}")?;
                    }
                    Ok(())
                }
            }
        }
    }
}
