//! Text formats: the expression grammar, session files, and JSON reports.

pub mod grammar;
pub mod report;
pub mod session;

pub use grammar::{parse_expr, parse_expr_list, render_expr, ParseError, SymbolTable};
pub use report::Report;
pub use session::{SessionError, SessionFile};
