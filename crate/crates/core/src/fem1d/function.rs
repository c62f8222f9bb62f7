use crate::{Error, Result, C64};

use super::quadrature::{shape, shape_derivative, GAUSS_POINTS, GAUSS_WEIGHTS};
use super::assembly::bloch_phase;
use super::{BoundaryCondition, Coefficient, DofMap, Mesh1D};

/// A P2 finite-element function: active coefficients plus the boundary
/// treatment needed to rebuild eliminated nodal values.
#[derive(Clone, Debug, PartialEq)]
pub struct FEFunction {
    mesh: Mesh1D,
    bc: BoundaryCondition,
    coefficients: Vec<C64>,
}

impl FEFunction {
    pub fn new(mesh: Mesh1D, bc: BoundaryCondition, coefficients: Vec<C64>) -> Result<Self> {
        let expected = DofMap::new(&mesh, bc).num_dofs();
        if coefficients.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {expected} active dofs",
                coefficients.len()
            )));
        }
        Ok(Self {
            mesh,
            bc,
            coefficients,
        })
    }

    /// A function given by all its nodal values, with no boundary treatment.
    pub fn from_nodal(mesh: Mesh1D, values: Vec<C64>) -> Result<Self> {
        Self::new(mesh, BoundaryCondition::Free, values)
    }

    /// Nodal interpolant of `f` under `bc`; eliminated nodes follow the constraint.
    pub fn interpolate(mesh: &Mesh1D, bc: BoundaryCondition, f: impl Fn(f64) -> C64) -> Self {
        let map = DofMap::new(mesh, bc);
        let nodal: Vec<C64> = (0..mesh.num_nodes()).map(|i| f(mesh.node(i))).collect();
        Self {
            mesh: *mesh,
            bc,
            coefficients: map.restrict(&nodal),
        }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [C64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<C64> {
        self.coefficients
    }

    pub fn scale(&mut self, s: C64) {
        self.coefficients.iter_mut().for_each(|c| *c *= s);
    }

    pub fn scaled(mut self, s: C64) -> Self {
        self.scale(s);
        self
    }

    /// Values at all `2N + 1` mesh nodes, eliminated ones included.
    pub fn nodal_values(&self) -> Vec<C64> {
        DofMap::new(&self.mesh, self.bc).expand(&self.coefficients)
    }

    pub fn max_nodal_abs(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn element_values(nodal: &[C64], e: usize) -> [C64; 3] {
        [nodal[2 * e], nodal[2 * e + 1], nodal[2 * e + 2]]
    }

    fn node_value(&self, i: usize) -> C64 {
        let last = self.mesh.num_nodes() - 1;
        match self.bc {
            BoundaryCondition::Dirichlet if i == 0 || i == last => C64::default(),
            BoundaryCondition::Dirichlet => self.coefficients[i - 1],
            BoundaryCondition::QuasiPeriodic(k) if i == last => {
                bloch_phase(k) * self.coefficients[0]
            }
            _ => self.coefficients[i],
        }
    }

    fn local(&self, x: f64) -> Result<(usize, f64, [C64; 3])> {
        let (e, xi) = self.mesh.locate(x)?;
        let v = [0, 1, 2].map(|i| self.node_value(2 * e + i));
        Ok((e, xi, v))
    }

    pub fn evaluate(&self, x: f64) -> Result<C64> {
        let (_, xi, v) = self.local(x)?;
        let n = shape(xi);
        Ok(v[0] * n[0] + v[1] * n[1] + v[2] * n[2])
    }

    pub fn derivative(&self, x: f64) -> Result<C64> {
        let (_, xi, v) = self.local(x)?;
        let d = shape_derivative(xi);
        Ok((v[0] * d[0] + v[1] * d[1] + v[2] * d[2]) / self.mesh.element_size())
    }

    fn check_same(&self, other: &FEFunction) -> Result<()> {
        if self.mesh.matches(&other.mesh) && self.bc == other.bc {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// `∫ w f conj(g)` with the assembly quadrature.
    pub fn weighted_inner(&self, other: &FEFunction, weight: &dyn Coefficient) -> Result<C64> {
        self.check_same(other)?;
        let (f, g) = (self.nodal_values(), other.nodal_values());
        let h = self.mesh.element_size();
        let mut sum = C64::default();
        for e in 0..self.mesh.num_elements() {
            let (fe, ge) = (Self::element_values(&f, e), Self::element_values(&g, e));
            let x0 = self.mesh.element_start(e);
            for (&xi, &w) in GAUSS_POINTS.iter().zip(&GAUSS_WEIGHTS) {
                let n = shape(xi);
                let fv = fe[0] * n[0] + fe[1] * n[1] + fe[2] * n[2];
                let gv = ge[0] * n[0] + ge[1] * n[1] + ge[2] * n[2];
                sum += fv * gv.conj() * (w * h * weight.value(x0 + xi * h));
            }
        }
        Ok(sum)
    }

    /// `∫ f conj(g)`.
    pub fn l2_inner(&self, other: &FEFunction) -> Result<C64> {
        self.check_same(other)?;
        Ok(nodal_l2_inner(
            &self.mesh,
            &self.nodal_values(),
            &other.nodal_values(),
        ))
    }

    pub fn l2_norm(&self) -> f64 {
        let v = self.nodal_values();
        nodal_l2_inner(&self.mesh, &v, &v).re.max(0.0).sqrt()
    }

    /// `‖f'‖_{L²}`.
    pub fn derivative_l2_norm(&self) -> f64 {
        let v = self.nodal_values();
        let h = self.mesh.element_size();
        let mut sum = 0.0;
        for e in 0..self.mesh.num_elements() {
            let ve = Self::element_values(&v, e);
            for (&xi, &w) in GAUSS_POINTS.iter().zip(&GAUSS_WEIGHTS) {
                let d = shape_derivative(xi);
                let dv = (ve[0] * d[0] + ve[1] * d[1] + ve[2] * d[2]) / h;
                sum += w * h * dv.norm_sqr();
            }
        }
        sum.sqrt()
    }

    pub fn conj(&self) -> FEFunction {
        let bc = match self.bc {
            BoundaryCondition::QuasiPeriodic(k) => BoundaryCondition::QuasiPeriodic(conjugate_wavenumber(k)),
            other => other,
        };
        Self {
            mesh: self.mesh,
            bc,
            coefficients: self.coefficients.iter().map(|c| c.conj()).collect(),
        }
    }
}

/// `-k` folded back into `[-1/2, 1/2)`; `-1/2` is its own conjugate.
pub fn conjugate_wavenumber(k: f64) -> f64 {
    if k == -0.5 {
        k
    } else {
        0.0 - k
    }
}

/// `∫ f conj(g)` for P2 nodal vectors on `mesh`.
pub fn nodal_l2_inner(mesh: &Mesh1D, f: &[C64], g: &[C64]) -> C64 {
    let h = mesh.element_size();
    let mut sum = C64::default();
    for e in 0..mesh.num_elements() {
        let fe = FEFunction::element_values(f, e);
        let ge = FEFunction::element_values(g, e);
        for (&xi, &w) in GAUSS_POINTS.iter().zip(&GAUSS_WEIGHTS) {
            let n = shape(xi);
            let fv = fe[0] * n[0] + fe[1] * n[1] + fe[2] * n[2];
            let gv = ge[0] * n[0] + ge[1] * n[1] + ge[2] * n[2];
            sum += fv * gv.conj() * (w * h);
        }
    }
    sum
}
