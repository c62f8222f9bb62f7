//! Two-scale modes `ψ(x) = Σ_σ u_σ(x) φ_σ(x/ε)`, the modulated two-scale
//! transform, and the residual of a two-scale mode against the physical operator.

use std::f64::consts::PI;

use crate::bloch_cell::CellSpectrum;
use crate::fem1d::{
    assemble, nodal_l2_inner, BandLu, BandMatrix, BoundaryCondition, FEFunction, Mesh1D,
    SparseHermitian,
};
use crate::macro_solver::{MacroForm, MacroSolution};
use crate::physical::{integral, PhysicalBc, PhysicalProblem};
use crate::{Error, Result, C64};

/// `φ(x/ε)` extended k-quasi-periodically: `φ(y) e^{2iπk·cell}` with
/// `x/ε = cell + y`, `y ∈ [0, 1)`.
pub fn eval_quasiperiodic(phi: &FEFunction, k: f64, epsilon: f64, x: f64) -> C64 {
    let t = x / epsilon;
    let cell = t.floor();
    let y = (t - cell).clamp(0.0, 1.0);
    let v = phi.evaluate(y).expect("y lies in the unit cell");
    v * C64::from_polar(1.0, 2.0 * PI * k * cell)
}

/// A two-scale approximation `(γ, ψ)` sampled at the physical mesh nodes.
#[derive(Clone, Debug)]
pub struct TwoScaleMode {
    pub k: f64,
    /// 0-based Bloch mode index.
    pub n: usize,
    pub ell: i64,
    pub epsilon: f64,
    pub lambda_n: f64,
    pub gamma: f64,
    pub macro_solution: MacroSolution,
    pub samples: FEFunction,
}

/// Samples `ψ` at every node of `physical_mesh`; `σ = -k` terms use the
/// conjugate Bloch data.
pub fn build_two_scale_mode(
    cell: &CellSpectrum,
    macro_solution: &MacroSolution,
    epsilon: f64,
    physical_mesh: &Mesh1D,
) -> Result<TwoScaleMode> {
    let n = macro_solution.n;
    if macro_solution.k != cell.k() {
        return Err(Error::ParameterMismatch(format!(
            "macroscopic solution at k = {} but cell spectrum at k = {}",
            macro_solution.k,
            cell.k()
        )));
    }
    if n >= cell.num_modes() {
        return Err(Error::ParameterMismatch(format!(
            "mode {n} outside the {} cell modes",
            cell.num_modes()
        )));
    }
    if let MacroForm::Double { m, .. } = macro_solution.form {
        if !cell.group_of(n).contains(&m) {
            return Err(Error::ParameterMismatch(format!(
                "modes {n} and {m} do not share an eigenvalue"
            )));
        }
    }
    let k = cell.k();
    let values: Vec<C64> = physical_mesh
        .nodes()
        .into_iter()
        .map(|x| {
            macro_solution
                .terms(x)
                .into_iter()
                .map(|(conj, idx, u)| {
                    let phi = eval_quasiperiodic(cell.mode(idx), k, epsilon, x);
                    u * if conj { phi.conj() } else { phi }
                })
                .sum()
        })
        .collect();
    let lambda_n = cell.eigenvalue(n);
    Ok(TwoScaleMode {
        k,
        n,
        ell: macro_solution.ell,
        epsilon,
        lambda_n,
        gamma: lambda_n + epsilon * macro_solution.lambda1,
        macro_solution: macro_solution.clone(),
        samples: FEFunction::from_nodal(*physical_mesh, values)?,
    })
}

/// `S_k^ε u` on `cells × y-nodes`, piecewise constant in `x` over cells.
#[derive(Clone, Debug)]
pub struct TwoScaleField {
    pub k: f64,
    pub epsilon: f64,
    pub y_mesh: Mesh1D,
    /// `values[l][j] = u(x0 + εl + ε y_j) e^{-2iπkl}`.
    pub values: Vec<Vec<C64>>,
}

impl TwoScaleField {
    /// `‖S u‖²_{L²(Ω×Y)} = Σ_l ε ∫_Y |S u(l, y)|² dy`.
    pub fn norm_squared(&self) -> f64 {
        self.values
            .iter()
            .map(|row| self.epsilon * nodal_l2_inner(&self.y_mesh, row, row).re)
            .sum()
    }
}

pub fn two_scale_transform(
    u: &FEFunction,
    k: f64,
    epsilon: f64,
    y_mesh: &Mesh1D,
) -> Result<TwoScaleField> {
    let mesh = u.mesh();
    let cells = integral(mesh.length() / epsilon)
        .filter(|&c| c > 0)
        .ok_or_else(|| {
            Error::MeshCellMismatch(format!(
                "domain length / ε = {} is not a positive integer",
                mesh.length() / epsilon
            ))
        })?;
    let ys = y_mesh.nodes();
    let values = (0..cells)
        .map(|l| {
            let phase = C64::from_polar(1.0, -2.0 * PI * k * l as f64);
            ys.iter()
                .map(|&y| {
                    let x = (mesh.start() + epsilon * (l as f64 + y)).min(mesh.end());
                    Ok(u.evaluate(x)? * phase)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TwoScaleField {
        k,
        epsilon,
        y_mesh: *y_mesh,
        values,
    })
}

/// The operators behind the residual `F`, assembled once per physical problem.
pub struct ResidualOperator {
    epsilon: f64,
    bc: PhysicalBc,
    mesh: Mesh1D,
    stiffness: SparseHermitian,
    mass: SparseHermitian,
    test_mass: BandLu,
}

impl ResidualOperator {
    pub fn new(problem: &PhysicalProblem) -> Result<Self> {
        let mesh = problem.mesh();
        let (a, rho) = (problem.a_scaled(), problem.rho_scaled());
        let full = assemble(&mesh, &a, &rho, BoundaryCondition::Free)?;
        let test = assemble(&mesh, &a, &rho, problem.bc.into())?;
        Ok(Self {
            epsilon: problem.epsilon(),
            bc: problem.bc,
            mesh,
            stiffness: full.stiffness,
            mass: full.mass,
            test_mass: BandMatrix::from_sparse(&test.mass).lu()?,
        })
    }

    /// Rows of the test space (interior nodes for Dirichlet).
    fn restrict(&self, v: Vec<C64>) -> Vec<C64> {
        match self.bc {
            PhysicalBc::Dirichlet => v[1..v.len() - 1].to_vec(),
            PhysicalBc::Neumann => v,
        }
    }

    /// `sqrt(r^H M⁻¹ r)` over the test space.
    fn dual_norm(&self, r: &[C64]) -> f64 {
        let z = self.test_mass.solve(r);
        r.iter()
            .zip(&z)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re
            .max(0.0)
            .sqrt()
    }

    /// `‖ε²Kψ − γMψ‖_{M⁻¹} / ‖γMψ‖_{M⁻¹}` for nodal values `psi`.
    pub fn relative_residual(&self, psi: &FEFunction, gamma: f64) -> Result<f64> {
        if !psi.mesh().matches(&self.mesh) || psi.bc() != BoundaryCondition::Free {
            return Err(Error::MeshMismatch);
        }
        if gamma == 0.0 {
            return Err(Error::DegenerateNormalization);
        }
        let v = psi.coefficients();
        let kv = self.stiffness.matvec(v);
        let mv = self.mass.matvec(v);
        let e2 = self.epsilon * self.epsilon;
        let r: Vec<C64> = kv.iter().zip(&mv).map(|(k, m)| k * e2 - m * gamma).collect();
        let gm: Vec<C64> = mv.iter().map(|m| m * gamma).collect();
        let den = self.dual_norm(&self.restrict(gm));
        if den == 0.0 {
            return Err(Error::DegenerateNormalization);
        }
        Ok(self.dual_norm(&self.restrict(r)) / den)
    }
}

/// The relative residual `F` of a two-scale mode against the physical problem.
pub fn residual_f(mode: &TwoScaleMode, problem: &PhysicalProblem) -> Result<f64> {
    if mode.gamma == 0.0 {
        return Err(Error::DegenerateNormalization);
    }
    ResidualOperator::new(problem)?.relative_residual(&mode.samples, mode.gamma)
}
