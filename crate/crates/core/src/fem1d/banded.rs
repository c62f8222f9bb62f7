use crate::{Error, Result, C64};

use super::SparseHermitian;

/// Square complex band matrix with equal lower and upper half-bandwidth `w`.
///
/// Entry `(i, j)` with `|i − j| ≤ w` lives at `i·(2w + 1) + j + w − i`.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    w: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, w: usize) -> Self {
        Self {
            n,
            w,
            data: vec![C64::default(); n * (2 * w + 1)],
        }
    }

    /// `K − σ M` in band form.
    pub fn shifted(k: &SparseHermitian, m: &SparseHermitian, sigma: f64) -> Self {
        let n = k.dim();
        let w = k.half_bandwidth().max(m.half_bandwidth());
        let mut out = Self::zeros(n, w);
        for i in 0..n {
            for &(j, v) in k.row(i) {
                out.add(i, j, v);
            }
            for &(j, v) in m.row(i) {
                out.add(i, j, -sigma * v);
            }
        }
        out
    }

    pub fn from_sparse(a: &SparseHermitian) -> Self {
        let mut out = Self::zeros(a.dim(), a.half_bandwidth());
        for i in 0..a.dim() {
            for &(j, v) in a.row(i) {
                out.add(i, j, v);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.w
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.w);
        i * (2 * self.w + 1) + j + self.w - i
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i.abs_diff(j) > self.w {
            C64::default()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let at = self.idx(i, j);
        self.data[at] += v;
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Number of negative pivots of an unpivoted `L D L^H` factorisation.
    ///
    /// For a Hermitian `K − σM` with `M` positive definite this is the number
    /// of pencil eigenvalues strictly below `σ` (Sylvester's law of inertia).
    /// Pivots smaller than `ε_mach · max|A|` are replaced by that threshold.
    pub fn negative_pivots(&self) -> usize {
        let (n, w) = (self.n, self.w);
        let tiny = f64::EPSILON * self.max_abs().max(f64::MIN_POSITIVE);
        let mut a = self.data.clone();
        let at = |i: usize, j: usize| i * (2 * w + 1) + j + w - i;
        let mut count = 0;
        for j in 0..n {
            let mut d = a[at(j, j)].re;
            if d.abs() < tiny {
                d = tiny;
            }
            if d < 0.0 {
                count += 1;
            }
            let last = (j + w).min(n - 1);
            for i in j + 1..=last {
                let l = a[at(i, j)] / d;
                if l == C64::default() {
                    continue;
                }
                for c in j + 1..=last {
                    let u = a[at(j, c)];
                    a[at(i, c)] -= l * u;
                }
            }
        }
        count
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Result<BandLu> {
        BandLu::new(self)
    }
}

/// Banded LU with partial row pivoting.
///
/// Row position `i` stores columns `[i − kl, i + kl + ku]`, which covers all
/// fill-in produced by row interchanges.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    rows: Vec<C64>,
    multipliers: Vec<C64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn new(a: &BandMatrix) -> Result<Self> {
        let (n, kl) = (a.n, a.w);
        let ku = a.w;
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            width,
            rows: vec![C64::default(); n * width],
            multipliers: vec![C64::default(); n * kl],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let at = lu.at(i, j);
                lu.rows[at] = a.get(i, j);
            }
        }
        let tiny = f64::EPSILON * a.max_abs();
        if !(tiny > 0.0) || !tiny.is_finite() {
            return Err(Error::SolverFailure {
                dofs: n,
                detail: "band matrix is zero or not finite".into(),
            });
        }
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let last_col = (j + kl + ku).min(n - 1);
            let p = (j..=last_row)
                .max_by(|&r, &s| {
                    lu.rows[lu.at(r, j)]
                        .norm()
                        .total_cmp(&lu.rows[lu.at(s, j)].norm())
                        .then(s.cmp(&r))
                })
                .unwrap();
            lu.pivots[j] = p;
            if p != j {
                for c in j..=last_col {
                    let (x, y) = (lu.at(j, c), lu.at(p, c));
                    lu.rows.swap(x, y);
                }
            }
            let djj = lu.at(j, j);
            if lu.rows[djj].norm() < tiny {
                lu.rows[djj] = C64::new(tiny, 0.0);
            }
            let pivot = lu.rows[djj];
            for r in j + 1..=last_row {
                let m = lu.rows[lu.at(r, j)] / pivot;
                lu.multipliers[j * kl + (r - j - 1)] = m;
                if m == C64::default() {
                    continue;
                }
                for c in j + 1..=last_col {
                    let u = lu.rows[lu.at(j, c)];
                    let at = lu.at(r, c);
                    lu.rows[at] -= m * u;
                }
            }
        }
        Ok(lu)
    }

    fn at(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j < i + self.width - self.kl);
        i * self.width + j + self.kl - i
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let (n, kl) = (self.n, self.kl);
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.pivots[j]);
            let xj = x[j];
            for r in j + 1..=(j + kl).min(n - 1) {
                x[r] -= self.multipliers[j * kl + (r - j - 1)] * xj;
            }
        }
        let reach = self.width - kl - 1;
        for i in (0..n).rev() {
            let mut s = x[i];
            for c in i + 1..=(i + reach).min(n - 1) {
                s -= self.rows[self.at(i, c)] * x[c];
            }
            x[i] = s / self.rows[self.at(i, i)];
        }
        x
    }
}
