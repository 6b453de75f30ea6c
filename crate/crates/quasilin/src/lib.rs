//! Exact symbolic machinery for reducing first-order nonlinear PDE systems
//! with a suitable solvable symmetry algebra to homogeneous, autonomous
//! quasilinear form, together with Monge-Ampère builders that exercise the
//! full pipeline.

pub mod expr;
pub mod canonical;
pub mod liegeom;
pub mod monge_ampere;
pub mod io;
pub mod transform;
