//! Bloch-wave homogenization of the one-dimensional periodic spectral problem
//! `-(a(x/ε) w')' = λ ρ(x/ε) w` on `Ω = (0, α)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`fem1d`]: quadratic finite elements, pencil assembly and eigensolvers.
//! * [`bloch_cell`]: the k-quasi-periodic cell problem and its coupling
//!   coefficients `b` and `c`.
//! * [`physical`]: the ε-periodic Dirichlet/Neumann problem on `Ω`.
//! * [`macro_solver`]: closed-form macroscopic eigenpairs for `ρ = 1`.
//! * [`two_scale`]: two-scale modes, the modulated two-scale transform and
//!   the residual of a two-scale mode against the physical operator.
//! * [`pipelines`]: mode matching, the modeling search and ε-convergence studies.

pub mod bloch_cell;
pub mod error;
pub mod fem1d;
pub mod macro_solver;
pub mod physical;
pub mod pipelines;
pub mod two_scale;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
