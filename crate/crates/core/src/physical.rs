//! The ε-periodic spectral problem `-(a(x/ε) w')' = λ ρ(x/ε) w` on `(0, α)`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::fem1d::{
    assemble, solve_pencil_range, BoundaryCondition, CoefficientProfile, FEFunction,
    HermitianPencil, Mesh1D, Scaled,
};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysicalBc {
    Dirichlet,
    Neumann,
}

impl From<PhysicalBc> for BoundaryCondition {
    fn from(bc: PhysicalBc) -> Self {
        match bc {
            PhysicalBc::Dirichlet => BoundaryCondition::Dirichlet,
            PhysicalBc::Neumann => BoundaryCondition::Neumann,
        }
    }
}

/// `Ω = (0, α)` made of `α/ε` whole cells, meshed with elements aligned to cells.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalProblem {
    alpha: f64,
    epsilon: f64,
    cells: usize,
    pub a: CoefficientProfile,
    pub rho: CoefficientProfile,
    pub bc: PhysicalBc,
    n_elements: usize,
}

/// Tolerance on `α/ε` being an integer.
pub const CELL_COUNT_TOL: f64 = 1e-9;

/// Rounds `t` to an integer if it is one within `CELL_COUNT_TOL`.
pub fn integral(t: f64) -> Option<usize> {
    let r = t.round();
    ((t - r).abs() <= CELL_COUNT_TOL && r >= 0.0 && r.is_finite()).then_some(r as usize)
}

impl PhysicalProblem {
    pub fn new(
        alpha: f64,
        epsilon: f64,
        a: CoefficientProfile,
        rho: CoefficientProfile,
        bc: PhysicalBc,
        n_elements: usize,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need α > 0 and ε > 0, got α = {alpha}, ε = {epsilon}"
            )));
        }
        let cells = integral(alpha / epsilon)
            .filter(|&c| c > 0)
            .ok_or_else(|| {
                Error::MeshCellMismatch(format!("α/ε = {} is not a positive integer", alpha / epsilon))
            })?;
        if n_elements == 0 || !n_elements.is_multiple_of(cells) {
            return Err(Error::MeshCellMismatch(format!(
                "{n_elements} elements do not split evenly into {cells} cells"
            )));
        }
        a.bounds()?;
        rho.bounds()?;
        Ok(Self {
            alpha,
            epsilon,
            cells,
            a,
            rho,
            bc,
            n_elements,
        })
    }

    /// `ε = α / cells`.
    pub fn with_cells(
        alpha: f64,
        cells: usize,
        a: CoefficientProfile,
        rho: CoefficientProfile,
        bc: PhysicalBc,
        n_elements: usize,
    ) -> Result<Self> {
        if cells == 0 {
            return Err(Error::MeshCellMismatch("zero cells".into()));
        }
        Self::new(alpha, alpha / cells as f64, a, rho, bc, n_elements)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn mesh(&self) -> Mesh1D {
        Mesh1D::new(0.0, self.alpha, self.n_elements).expect("validated at construction")
    }

    pub fn a_scaled(&self) -> Scaled<'_> {
        Scaled {
            profile: &self.a,
            epsilon: self.epsilon,
        }
    }

    pub fn rho_scaled(&self) -> Scaled<'_> {
        Scaled {
            profile: &self.rho,
            epsilon: self.epsilon,
        }
    }

    pub fn pencil(&self) -> Result<HermitianPencil> {
        assemble(
            &self.mesh(),
            &self.a_scaled(),
            &self.rho_scaled(),
            self.bc.into(),
        )
    }
}

/// Eigenpairs `(λ_p, w_p)` for a contiguous range of 1-based ranks `p`.
#[derive(Clone, Debug)]
pub struct PhysicalSpectrum {
    pub problem: PhysicalProblem,
    first: usize,
    eigenvalues: Vec<f64>,
    modes: Vec<FEFunction>,
}

impl PhysicalSpectrum {
    /// The ranks `p` held.
    pub fn indices(&self) -> RangeInclusive<usize> {
        self.first..=self.first + self.eigenvalues.len() - 1
    }

    pub fn contains(&self, p: usize) -> bool {
        p >= self.first && p < self.first + self.eigenvalues.len()
    }

    fn slot(&self, p: usize) -> usize {
        assert!(self.contains(p), "p = {p} outside {:?}", self.indices());
        p - self.first
    }

    pub fn eigenvalue(&self, p: usize) -> f64 {
        self.eigenvalues[self.slot(p)]
    }

    pub fn mode(&self, p: usize) -> &FEFunction {
        &self.modes[self.slot(p)]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `ε² λ_p`.
    pub fn renormalized_eigenvalue(&self, p: usize) -> f64 {
        self.problem.epsilon.powi(2) * self.eigenvalue(p)
    }

    /// `‖ε ∂x w_p‖_{L²(Ω)}`.
    pub fn gradient_bound(&self, p: usize) -> f64 {
        self.problem.epsilon * self.mode(p).derivative_l2_norm()
    }
}

/// Rotates `w` so that its first significant coefficient is real positive.
fn fix_phase(w: &mut FEFunction) {
    let max = w.max_nodal_abs();
    if max == 0.0 {
        return;
    }
    let at = w
        .coefficients()
        .iter()
        .position(|v| v.norm() > 1e-8 * max)
        .unwrap();
    let anchor = w.coefficients()[at];
    w.scale(anchor.conj() / anchor.norm());
    w.coefficients_mut()[at] = C64::new(anchor.norm(), 0.0);
}

/// Solves for the eigenpairs with 1-based ranks in `mode_range`, each
/// normalised to `‖w‖_{L²(Ω)} = 1`.
pub fn solve_physical(
    problem: &PhysicalProblem,
    mode_range: RangeInclusive<usize>,
) -> Result<PhysicalSpectrum> {
    let (lo, hi) = (*mode_range.start(), *mode_range.end());
    if lo == 0 || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "mode range {lo}..={hi} must be a non-empty range of 1-based ranks"
        )));
    }
    let pencil = problem.pencil()?;
    let pairs = solve_pencil_range(&pencil, lo - 1..hi)?;
    let mut eigenvalues = Vec::with_capacity(pairs.len());
    let mut modes = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let nrm = pair.mode.l2_norm();
        let mut w = pair.mode.scaled(C64::new(1.0 / nrm, 0.0));
        fix_phase(&mut w);
        eigenvalues.push(pair.value);
        modes.push(w);
    }
    Ok(PhysicalSpectrum {
        problem: problem.clone(),
        first: lo,
        eigenvalues,
        modes,
    })
}
