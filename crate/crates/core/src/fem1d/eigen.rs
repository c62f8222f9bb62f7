use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::{Error, Result, C64};

use super::{BandMatrix, FEFunction, HermitianPencil, SparseHermitian};

/// Pencils up to this many DOFs are solved densely; larger narrow-band
/// pencils use Sturm bisection and inverse iteration.
pub const DENSE_DOF_LIMIT: usize = 200;

const MAX_BANDED_HALF_WIDTH: usize = 8;

/// Relative gap under which bisected eigenvalues share one inverse-iteration
/// subspace; wider than the bisection accuracy of the indefinite LDL counts.
const CLUSTER_TOL: f64 = 1e-7;

/// `(K, M)` in a DOF ordering with small bandwidth, and the ordering.
struct BandedPencil {
    k: SparseHermitian,
    m: SparseHermitian,
    /// `perm[i]` is the original DOF stored at position `i`; `None` is identity.
    perm: Option<Vec<usize>>,
}

impl BandedPencil {
    /// Wrap-around couplings (periodic folding) are removed by interleaving
    /// the DOFs from both ends: `0, n−1, 1, n−2, …`.
    fn new(pencil: &HermitianPencil) -> Option<Self> {
        let (k, m) = (&pencil.stiffness, &pencil.mass);
        if pencil.half_bandwidth() <= MAX_BANDED_HALF_WIDTH {
            return Some(Self {
                k: k.clone(),
                m: m.clone(),
                perm: None,
            });
        }
        let n = k.dim();
        let perm: Vec<usize> = (0..n)
            .map(|i| if i % 2 == 0 { i / 2 } else { n - 1 - i / 2 })
            .collect();
        let (k, m) = (k.permuted(&perm), m.permuted(&perm));
        (k.half_bandwidth().max(m.half_bandwidth()) <= 2 * MAX_BANDED_HALF_WIDTH).then_some(Self {
            k,
            m,
            perm: Some(perm),
        })
    }

    fn count_below(&self, sigma: f64) -> usize {
        BandMatrix::shifted(&self.k, &self.m, sigma).negative_pivots()
    }

    fn unpermute(&self, v: Vec<C64>) -> Vec<C64> {
        match &self.perm {
            None => v,
            Some(perm) => {
                let mut out = vec![C64::default(); v.len()];
                for (x, &p) in v.into_iter().zip(perm) {
                    out[p] = x;
                }
                out
            }
        }
    }
}

/// An eigenvalue with its M-normalised eigenvector.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub mode: FEFunction,
}

/// The `num_modes` smallest eigenpairs, ascending.
pub fn solve_pencil(pencil: &HermitianPencil, num_modes: usize) -> Result<Vec<Eigenpair>> {
    solve_pencil_range(pencil, 0..num_modes)
}

/// Eigenpairs with 0-based ascending ranks in `range`.
pub fn solve_pencil_range(pencil: &HermitianPencil, range: Range<usize>) -> Result<Vec<Eigenpair>> {
    let n = pencil.dof_count();
    if range.end > n || range.start > range.end {
        return Err(Error::InvalidArgument(format!(
            "mode range {range:?} exceeds {n} dofs"
        )));
    }
    if range.is_empty() {
        return Ok(Vec::new());
    }
    let pairs = match BandedPencil::new(pencil) {
        Some(bp) if n > DENSE_DOF_LIMIT => banded(pencil, &bp, range)?,
        _ => dense(pencil, range)?,
    };
    pairs
        .into_iter()
        .map(|(value, v)| {
            Ok(Eigenpair {
                value,
                mode: FEFunction::new(pencil.mesh, pencil.bc, v)?,
            })
        })
        .collect()
}

/// Number of pencil eigenvalues strictly below `sigma`.
pub fn count_below(pencil: &HermitianPencil, sigma: f64) -> usize {
    match BandedPencil::new(pencil) {
        Some(bp) => bp.count_below(sigma),
        None => BandMatrix::shifted(&pencil.stiffness, &pencil.mass, sigma).negative_pivots(),
    }
}

fn failure(pencil: &HermitianPencil, detail: impl Into<String>) -> Error {
    let (dk, dm) = pencil.hermitian_defects();
    Error::SolverFailure {
        dofs: pencil.dof_count(),
        detail: format!(
            "{} (hermitian defects K {dk:.1e}, M {dm:.1e}; half-bandwidth {})",
            detail.into(),
            pencil.half_bandwidth()
        ),
    }
}

fn dense(pencil: &HermitianPencil, range: Range<usize>) -> Result<Vec<(f64, Vec<C64>)>> {
    let k = pencil.stiffness.to_dense();
    let m = pencil.mass.to_dense();
    let chol = nalgebra::Cholesky::new(m)
        .ok_or_else(|| failure(pencil, "mass matrix is not positive definite"))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&k)
        .ok_or_else(|| failure(pencil, "singular Cholesky factor"))?;
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| failure(pencil, "singular Cholesky factor"))?;
    let c = (&c + c.adjoint()).scale(0.5);

    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if pencil.is_real() {
        let cr = c.map(|z| z.re);
        let eig = SymmetricEigen::try_new(cr, f64::EPSILON, 10_000)
            .ok_or_else(|| failure(pencil, "symmetric QR iteration did not converge"))?;
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|v| C64::new(v, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000)
            .ok_or_else(|| failure(pencil, "hermitian QR iteration did not converge"))?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(failure(pencil, "non-finite eigenvalue"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    order[range]
        .iter()
        .map(|&i| {
            let y = vectors.column(i).into_owned();
            let v = l
                .ad_solve_lower_triangular(&y)
                .ok_or_else(|| failure(pencil, "singular Cholesky factor"))?;
            Ok((values[i], m_normalize(&pencil.mass, v.iter().copied().collect())))
        })
        .collect()
}

fn m_inner(m: &SparseHermitian, x: &[C64], y: &[C64]) -> C64 {
    // y^H M x
    let mx = m.matvec(x);
    y.iter().zip(&mx).map(|(a, b)| a.conj() * b).sum()
}

fn m_normalize(m: &SparseHermitian, mut v: Vec<C64>) -> Vec<C64> {
    let nrm = m_inner(m, &v, &v).re.sqrt();
    v.iter_mut().for_each(|c| *c /= nrm);
    v
}

/// Sturm bisection for eigenvalues, inverse iteration for eigenvectors.
fn banded(
    pencil: &HermitianPencil,
    bp: &BandedPencil,
    range: Range<usize>,
) -> Result<Vec<(f64, Vec<C64>)>> {
    let count = |s: f64| bp.count_below(s);
    let mut lo = 0.0;
    let mut steps = 0;
    while count(lo) > range.start {
        lo = if lo == 0.0 { -1.0 } else { 2.0 * lo };
        steps += 1;
        if steps > 1100 {
            return Err(failure(pencil, "no lower bracket for the spectrum"));
        }
    }
    let mut hi = 1.0;
    steps = 0;
    while count(hi) < range.end {
        hi *= 2.0;
        steps += 1;
        if steps > 1100 {
            return Err(failure(pencil, "no upper bracket for the spectrum"));
        }
    }

    let values: Vec<f64> = range
        .clone()
        .into_par_iter()
        .map(|j| {
            // count(a) ≤ j < count(b)
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b || b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
                    break;
                }
                if count(mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect();

    // Clusters of numerically equal eigenvalues share one shift and are
    // orthogonalised against each other.
    let mut clusters: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len()
            || (values[i] - values[i - 1]).abs() > CLUSTER_TOL * values[i].abs().max(1.0)
        {
            clusters.push(start..i);
            start = i;
        }
    }

    let vectors: Vec<Vec<Vec<C64>>> = clusters
        .par_iter()
        .map(|cl| inverse_iteration(pencil, bp, &values, cl.clone(), range.start))
        .collect::<Result<_>>()?;
    // Rayleigh quotients are accurate to O(residual²), beyond the bisection.
    Ok(vectors
        .into_iter()
        .flatten()
        .map(|v| (m_inner(&bp.k, &v, &v).re, bp.unpermute(v)))
        .collect())
}

fn inverse_iteration(
    pencil: &HermitianPencil,
    bp: &BandedPencil,
    values: &[f64],
    cluster: Range<usize>,
    offset: usize,
) -> Result<Vec<Vec<C64>>> {
    let n = pencil.dof_count();
    let sigma = values[cluster.start];
    let lu = BandMatrix::shifted(&bp.k, &bp.m, sigma).lu()?;
    let mut found: Vec<Vec<C64>> = Vec::new();
    for j in cluster {
        let seed = (offset + j) as f64;
        let mut x: Vec<C64> = (0..n)
            .map(|i| {
                let t = i as f64 + 1.0;
                C64::new(1.0 + 0.5 * (0.37 * t + seed).sin(), 0.0)
            })
            .collect();
        for _ in 0..3 {
            let rhs = bp.m.matvec(&x);
            x = lu.solve(&rhs);
            for prev in &found {
                let proj = m_inner(&bp.m, &x, prev);
                x.iter_mut().zip(prev).for_each(|(a, b)| *a -= proj * b);
            }
            x = m_normalize(&bp.m, x);
            if x.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(failure(pencil, "inverse iteration diverged"));
            }
        }
        found.push(x);
    }
    Ok(found)
}
