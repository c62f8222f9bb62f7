//! The k-quasi-periodic cell problem `-(a φ')' = λ ρ φ` on `Y = (0, 1)`.
//!
//! Eigenvectors are normalised in `L²(Y)` and gauge-fixed so that `φ(0)` is
//! real and non-negative. When the pencil is real (`k = 0` or `k = -1/2`) a
//! double eigenvalue is rotated into the pair `(φ_n, φ_m)` with
//! `φ_m(0) = 0`, the discrete analogue of a `(cos, sin)` pair.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::fem1d::quadrature::{shape, shape_derivative, GAUSS_POINTS, GAUSS_WEIGHTS};
use crate::fem1d::{
    assemble, conjugate_wavenumber, solve_pencil, BoundaryCondition, Coefficient,
    CoefficientProfile, FEFunction, Mesh1D,
};
use crate::{Error, Result, C64};

/// Relative gap below which eigenvalues are grouped.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

/// Relative size below which `φ(0)` counts as zero.
pub const VANISHING_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct CellSpectrum {
    k: f64,
    eigenvalues: Vec<f64>,
    modes: Vec<FEFunction>,
    mesh: Mesh1D,
    groups: Vec<Vec<usize>>,
}

impl CellSpectrum {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.eigenvalues[n]
    }

    pub fn modes(&self) -> &[FEFunction] {
        &self.modes
    }

    pub fn mode(&self, n: usize) -> &FEFunction {
        &self.modes[n]
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// Partition of `0..num_modes` into runs of equal eigenvalues.
    pub fn multiplicity_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, n: usize) -> &[usize] {
        self.groups
            .iter()
            .find(|g| g.contains(&n))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// `φ_n(0)`.
    pub fn value_at_zero(&self, n: usize) -> C64 {
        self.modes[n].coefficients()[0]
    }
}

/// Groups consecutive indices whose eigenvalues differ by at most
/// `MULTIPLICITY_TOL · max(1, |λ|)`.
pub fn multiplicity_groups(eigenvalues: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in eigenvalues.iter().enumerate() {
        match groups.last_mut() {
            Some(g)
                if (l - eigenvalues[*g.last().unwrap()]).abs()
                    <= MULTIPLICITY_TOL * l.abs().max(1.0) =>
            {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Rotates `f` by a unit scalar: `f(0)` real and non-negative, or, when
/// `f(0)` vanishes, the first significant nodal value real positive.
fn fix_phase(f: &mut FEFunction) {
    let c = f.coefficients();
    let max = f.max_nodal_abs();
    if max == 0.0 {
        return;
    }
    let at = if c[0].norm() >= VANISHING_TOL * max {
        0
    } else {
        c.iter().position(|v| v.norm() > VANISHING_TOL * max).unwrap()
    };
    let anchor = c[at];
    f.scale(anchor.conj() / anchor.norm());
    f.coefficients_mut()[at] = C64::new(anchor.norm(), 0.0);
}

/// Rotates a real orthonormal pair so that the second member vanishes at 0.
fn rotate_real_pair(u: &FEFunction, v: &FEFunction) -> Option<(FEFunction, FEFunction)> {
    let (u0, v0) = (u.coefficients()[0].re, v.coefficients()[0].re);
    let r = u0.hypot(v0);
    let max = u.max_nodal_abs().max(v.max_nodal_abs());
    if r < VANISHING_TOL * max {
        return None;
    }
    let combine = |a: f64, b: f64| {
        let coeffs = u
            .coefficients()
            .iter()
            .zip(v.coefficients())
            .map(|(x, y)| (x * a + y * b) / r)
            .collect();
        FEFunction::new(*u.mesh(), u.bc(), coeffs).expect("same layout")
    };
    Some((combine(u0, v0), combine(-v0, u0)))
}

/// Solves the cell problem for `k ∈ [-1/2, 1/2)` and returns the
/// `num_modes` lowest Bloch eigenpairs.
pub fn solve_cell(
    a: &CoefficientProfile,
    rho: &CoefficientProfile,
    k: f64,
    n_elements: usize,
    num_modes: usize,
) -> Result<CellSpectrum> {
    if num_modes == 0 {
        return Err(Error::InvalidArgument("num_modes must be at least 1".into()));
    }
    let k = if k == 0.0 { 0.0 } else { k };
    let mesh = Mesh1D::unit_cell(n_elements)?;
    let pencil = assemble(&mesh, a, rho, BoundaryCondition::QuasiPeriodic(k))?;
    if num_modes > pencil.dof_count() {
        return Err(Error::InvalidArgument(format!(
            "{num_modes} modes requested from {} dofs",
            pencil.dof_count()
        )));
    }
    // One extra mode so that a double eigenvalue at the cut is rotated as a pair.
    let solved = (num_modes + 1).min(pencil.dof_count());
    let pairs = solve_pencil(&pencil, solved)?;
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    let mut modes: Vec<FEFunction> = pairs
        .into_iter()
        .map(|p| {
            let nrm = p.mode.l2_norm();
            p.mode.scaled(C64::new(1.0 / nrm, 0.0))
        })
        .collect();
    let groups = multiplicity_groups(&eigenvalues);
    let real = pencil.is_real();
    for g in &groups {
        if real && g.len() == 2 {
            if let Some((n, m)) = rotate_real_pair(&modes[g[0]], &modes[g[1]]) {
                modes[g[0]] = n;
                modes[g[1]] = m;
            }
        }
        for &i in g {
            fix_phase(&mut modes[i]);
        }
    }
    modes.truncate(num_modes);
    let mut eigenvalues = eigenvalues;
    eigenvalues.truncate(num_modes);
    let groups = multiplicity_groups(&eigenvalues);
    Ok(CellSpectrum {
        k,
        eigenvalues,
        modes,
        mesh,
        groups,
    })
}

/// The `-k` spectrum from conjugation: same eigenvalues, conjugated modes.
pub fn conjugate_spectrum(s: &CellSpectrum) -> CellSpectrum {
    CellSpectrum {
        k: conjugate_wavenumber(s.k),
        eigenvalues: s.eigenvalues.clone(),
        modes: s.modes.iter().map(FEFunction::conj).collect(),
        mesh: s.mesh,
        groups: s.groups.clone(),
    }
}

/// Coupling coefficients over a list of mode indices:
/// `c[i][j] = c(k, n_i, n_j) = ∫ a (φ_m' conj φ_n − φ_m conj φ_n')` and
/// `b[i][j] = ∫ ρ φ_m conj φ_n` with `n = indices[i]`, `m = indices[j]`.
#[derive(Clone, Debug)]
pub struct CouplingCoefficients {
    pub k: f64,
    pub indices: Vec<usize>,
    pub c: DMatrix<C64>,
    pub b: DMatrix<C64>,
}

impl CouplingCoefficients {
    fn position(&self, n: usize) -> usize {
        self.indices
            .iter()
            .position(|&i| i == n)
            .unwrap_or_else(|| panic!("mode {n} not among the coupling indices"))
    }

    pub fn c(&self, n: usize, m: usize) -> C64 {
        self.c[(self.position(n), self.position(m))]
    }

    pub fn b(&self, n: usize, m: usize) -> C64 {
        self.b[(self.position(n), self.position(m))]
    }
}

pub fn coupling(
    s: &CellSpectrum,
    a: &dyn Coefficient,
    rho: &dyn Coefficient,
    indices: &[usize],
) -> Result<CouplingCoefficients> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= s.num_modes()) {
        return Err(Error::InvalidArgument(format!(
            "mode index {bad} outside the {} computed modes",
            s.num_modes()
        )));
    }
    let nodal: Vec<Vec<C64>> = indices.iter().map(|&i| s.modes[i].nodal_values()).collect();
    let q = indices.len();
    let mut c = DMatrix::<C64>::zeros(q, q);
    let mut b = DMatrix::<C64>::zeros(q, q);
    let mesh = &s.mesh;
    let h = mesh.element_size();
    let mut val = vec![C64::default(); q];
    let mut der = vec![C64::default(); q];
    for e in 0..mesh.num_elements() {
        let x0 = mesh.element_start(e);
        for (&xi, &w) in GAUSS_POINTS.iter().zip(&GAUSS_WEIGHTS) {
            let (sh, dsh) = (shape(xi), shape_derivative(xi));
            for (t, v) in nodal.iter().enumerate() {
                let ve = [v[2 * e], v[2 * e + 1], v[2 * e + 2]];
                val[t] = ve[0] * sh[0] + ve[1] * sh[1] + ve[2] * sh[2];
                der[t] = (ve[0] * dsh[0] + ve[1] * dsh[1] + ve[2] * dsh[2]) / h;
            }
            let x = x0 + xi * h;
            let (wa, wr) = (w * h * a.value(x), w * h * rho.value(x));
            for i in 0..q {
                for j in 0..q {
                    c[(i, j)] += (der[j] * val[i].conj() - val[j] * der[i].conj()) * wa;
                    b[(i, j)] += val[j] * val[i].conj() * wr;
                }
            }
        }
    }
    Ok(CouplingCoefficients {
        k: s.k,
        indices: indices.to_vec(),
        c,
        b,
    })
}

/// One cell spectrum per wavenumber, in grid order.
pub fn band_sweep(
    a: &CoefficientProfile,
    rho: &CoefficientProfile,
    k_grid: &[f64],
    n_elements: usize,
    num_modes: usize,
) -> Result<Vec<CellSpectrum>> {
    let results: Vec<Result<CellSpectrum>> = k_grid
        .par_iter()
        .map(|&k| solve_cell(a, rho, k, n_elements, num_modes))
        .collect();
    let mut failures = Vec::new();
    let mut spectra = Vec::with_capacity(results.len());
    for (&k, r) in k_grid.iter().zip(results) {
        match r {
            Ok(s) => spectra.push(s),
            Err(e) => failures.push((k, e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(spectra)
    } else {
        Err(Error::BandSweep(failures))
    }
}
