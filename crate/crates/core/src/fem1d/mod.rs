//! One-dimensional quadratic (P2) finite elements.
//!
//! Every element carries three nodes (two vertices and the midpoint), so a
//! mesh with `N` elements has `2N + 1` nodes. Integrals are evaluated with the
//! 3-point Gauss–Legendre rule, which is exact for the constant-coefficient
//! P2 mass and stiffness forms.

mod assembly;
mod banded;
mod coefficient;
mod eigen;
mod function;
mod mesh;
pub mod quadrature;
mod sparse;

pub use assembly::{assemble, BoundaryCondition, DofMap, HermitianPencil};
pub use banded::{BandLu, BandMatrix};
pub use coefficient::{Coefficient, CoefficientProfile, Scaled};
pub use eigen::{count_below, solve_pencil, solve_pencil_range, Eigenpair, DENSE_DOF_LIMIT};
pub use function::{conjugate_wavenumber, nodal_l2_inner, FEFunction};
pub use mesh::Mesh1D;
pub use sparse::SparseHermitian;
