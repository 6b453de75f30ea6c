//! Exact symbolic kernel: expression trees, formal differentiation, a
//! canonical rational normal form with a decidable zero test, and linear
//! algebra over the rational-function field.

pub mod poly;
pub mod rnf;
pub mod solve;
pub mod symbol;
pub mod tree;

pub use poly::{poly_gcd, Monomial, Poly};
pub use rnf::{expr_eq, normalize, Rnf};
pub use solve::{matrix_rank, nullspace, rref, solve_augmented, solve_linear, solve_with_residuals, LinearSolution};
pub use symbol::SymbolId;
pub use tree::Expr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("input already contains jet variables")]
    InputContainsJets,
    #[error("unbound symbol {0} in evaluation point")]
    UnboundSymbol(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("{0}")]
    Unsupported(String),
}
