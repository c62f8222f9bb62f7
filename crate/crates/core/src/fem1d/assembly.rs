use crate::{Error, Result, C64};

use super::quadrature::{shape, shape_derivative, GAUSS_POINTS, GAUSS_WEIGHTS};
use super::{Coefficient, Mesh1D, SparseHermitian};

/// Boundary treatment of a P2 discretisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// Both endpoint values eliminated (set to zero).
    Dirichlet,
    /// Natural condition; all nodes active.
    Neumann,
    /// `u(end) = e^{2iπk} u(start)`; the last node is folded into the first.
    QuasiPeriodic(f64),
    /// No condition at all; all nodes active.
    Free,
}

impl BoundaryCondition {
    pub fn validate(&self) -> Result<()> {
        if let Self::QuasiPeriodic(k) = *self {
            if !(-0.5..0.5).contains(&k) {
                return Err(Error::InvalidWavenumber(k));
            }
        }
        Ok(())
    }
}

/// Map from mesh nodes to active degrees of freedom.
///
/// Each node is either eliminated (`None`, value zero) or equal to
/// `factor · dof[index]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    nodes: Vec<Option<(usize, C64)>>,
    num_dofs: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh1D, bc: BoundaryCondition) -> Self {
        let nn = mesh.num_nodes();
        let one = C64::new(1.0, 0.0);
        let nodes: Vec<Option<(usize, C64)>> = match bc {
            BoundaryCondition::Dirichlet => (0..nn)
                .map(|i| (i > 0 && i + 1 < nn).then(|| (i - 1, one)))
                .collect(),
            BoundaryCondition::Neumann | BoundaryCondition::Free => {
                (0..nn).map(|i| Some((i, one))).collect()
            }
            BoundaryCondition::QuasiPeriodic(k) => (0..nn)
                .map(|i| {
                    if i + 1 == nn {
                        Some((0, bloch_phase(k)))
                    } else {
                        Some((i, one))
                    }
                })
                .collect(),
        };
        let num_dofs = match bc {
            BoundaryCondition::Dirichlet => nn - 2,
            BoundaryCondition::QuasiPeriodic(_) => nn - 1,
            _ => nn,
        };
        Self { nodes, num_dofs }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn node(&self, i: usize) -> Option<(usize, C64)> {
        self.nodes[i]
    }

    /// Expands active coefficients to all nodal values.
    pub fn expand(&self, coefficients: &[C64]) -> Vec<C64> {
        self.nodes
            .iter()
            .map(|n| n.map_or(C64::default(), |(d, f)| f * coefficients[d]))
            .collect()
    }

    /// Restricts nodal values to active coefficients (the first node wins for folded DOFs).
    pub fn restrict(&self, nodal: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); self.num_dofs];
        let mut seen = vec![false; self.num_dofs];
        for (n, v) in self.nodes.iter().zip(nodal) {
            if let Some((d, f)) = n {
                if !seen[*d] {
                    out[*d] = v / f;
                    seen[*d] = true;
                }
            }
        }
        out
    }
}

/// `e^{2iπk}`.
pub fn bloch_phase(k: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k)
}

/// Discrete generalized Hermitian eigenproblem `K x = λ M x`.
#[derive(Clone, Debug)]
pub struct HermitianPencil {
    pub stiffness: SparseHermitian,
    pub mass: SparseHermitian,
    pub mesh: Mesh1D,
    pub bc: BoundaryCondition,
}

impl HermitianPencil {
    pub fn dof_count(&self) -> usize {
        self.mass.dim()
    }

    pub fn is_real(&self) -> bool {
        self.stiffness.is_real() && self.mass.is_real()
    }

    pub fn half_bandwidth(&self) -> usize {
        self.stiffness
            .half_bandwidth()
            .max(self.mass.half_bandwidth())
    }

    /// Relative Hermitian defects `(‖K − K^H‖ / ‖K‖, ‖M − M^H‖ / ‖M‖)` in the max norm.
    pub fn hermitian_defects(&self) -> (f64, f64) {
        let rel = |a: &SparseHermitian| {
            let m = a.max_abs();
            if m == 0.0 {
                0.0
            } else {
                a.hermitian_defect() / m
            }
        };
        (rel(&self.stiffness), rel(&self.mass))
    }

    pub fn dof_map(&self) -> DofMap {
        DofMap::new(&self.mesh, self.bc)
    }
}

/// Element integrals `(∫ a φ_j' φ_i', ∫ ρ φ_j φ_i)` on element `e`.
pub(crate) fn element_matrices(
    mesh: &Mesh1D,
    e: usize,
    a: &dyn Coefficient,
    rho: &dyn Coefficient,
) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let h = mesh.element_size();
    let x0 = mesh.element_start(e);
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for (&xi, &w) in GAUSS_POINTS.iter().zip(&GAUSS_WEIGHTS) {
        let x = x0 + xi * h;
        let av = a.value(x);
        let rv = rho.value(x);
        let n = shape(xi);
        let dn = shape_derivative(xi).map(|d| d / h);
        for i in 0..3 {
            for j in 0..3 {
                ke[i][j] += w * h * av * dn[i] * dn[j];
                me[i][j] += w * h * rv * n[i] * n[j];
            }
        }
    }
    (ke, me)
}

/// Assembles stiffness and mass for `−(a u')' = λ ρ u` on `mesh` under `bc`.
///
/// Reduced entries are `T^H K T` where `T` maps active DOFs to nodes.
pub fn assemble(
    mesh: &Mesh1D,
    a: &dyn Coefficient,
    rho: &dyn Coefficient,
    bc: BoundaryCondition,
) -> Result<HermitianPencil> {
    bc.validate()?;
    a.bounds()?;
    rho.bounds()?;
    let map = DofMap::new(mesh, bc);
    let n = map.num_dofs();
    if n == 0 {
        return Err(Error::InvalidMesh("no active degrees of freedom".into()));
    }
    let mut kt = Vec::with_capacity(9 * mesh.num_elements());
    let mut mt = Vec::with_capacity(9 * mesh.num_elements());
    for e in 0..mesh.num_elements() {
        let (ke, me) = element_matrices(mesh, e, a, rho);
        for i in 0..3 {
            let Some((di, fi)) = map.node(2 * e + i) else {
                continue;
            };
            for j in 0..3 {
                let Some((dj, fj)) = map.node(2 * e + j) else {
                    continue;
                };
                let f = fi.conj() * fj;
                kt.push((di, dj, f * ke[i][j]));
                mt.push((di, dj, f * me[i][j]));
            }
        }
    }
    Ok(HermitianPencil {
        stiffness: SparseHermitian::from_triplets(n, kt),
        mass: SparseHermitian::from_triplets(n, mt),
        mesh: *mesh,
        bc,
    })
}
