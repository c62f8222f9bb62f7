//! Matching physical modes with two-scale modes, the modeling search, and
//! ε-convergence studies.
//!
//! Bloch indices `n` in reports are 1-based band numbers; physical indices `p`
//! are 1-based ranks. The ℓ-window for wavenumber `k` is
//! `⌊2αk/ε⌋ + {-r, …, r}` and `λ¹` is evaluated with `l = αk/ε`, so that
//! `λ¹ = 0` at `ℓ = 2αk/ε`.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch_cell::{coupling, solve_cell, CellSpectrum};
use crate::fem1d::{count_below, CoefficientProfile, FEFunction};
use crate::macro_solver::{
    macro_eigenpair_0, macro_eigenpair_0_simple, macro_eigenpair_k, MacroSolution,
};
use crate::physical::{integral, solve_physical, PhysicalBc, PhysicalProblem, PhysicalSpectrum};
use crate::two_scale::{build_two_scale_mode, ResidualOperator, TwoScaleMode};
use crate::{Error, Result, C64};

/// Vector-error level above which a wavenumber explains nothing.
pub const EXCLUSION_THRESHOLD: f64 = 0.2;

/// Gap below which two vector errors count as equal (discretisation noise);
/// stage 2 then prefers the smaller eigenvalue error.
pub const VECTOR_TIE_TOL: f64 = 1e-6;

/// Default ℓ-window radius.
pub const DEFAULT_R: i64 = 15;

/// Wavenumber grids on `[0, 1/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KGrid {
    /// `{0, 1/K, …, ⌊(K−1)/2⌋/K}`.
    Count(usize),
    /// Multiples of the step strictly below 1/2.
    Step(f64),
    Values(Vec<f64>),
}

impl KGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts: Vec<f64> = match self {
            Self::Count(0) => Vec::new(),
            Self::Count(n) => (0..=(n - 1) / 2).map(|i| i as f64 / *n as f64).collect(),
            Self::Step(s) => {
                if !(*s > 0.0 && *s < 0.5) {
                    return Err(Error::InvalidArgument(format!("k step {s} outside (0, 1/2)")));
                }
                (0..).map(|i| i as f64 * s).take_while(|&k| k < 0.5 - 1e-12).collect()
            }
            Self::Values(v) => v.clone(),
        };
        if let Some(&bad) = pts.iter().find(|k| !(-0.5..0.5).contains(*k)) {
            return Err(Error::InvalidWavenumber(bad));
        }
        Ok(pts)
    }
}

/// Rounds to the nearest integer when within `1e-9`, else floors.
fn snapped_floor(t: f64) -> i64 {
    let r = t.round();
    if (t - r).abs() <= 1e-9 * t.abs().max(1.0) {
        r as i64
    } else {
        t.floor() as i64
    }
}

/// `⌊2αk/ε⌋ + {-r, …, r}`.
pub fn ell_window(alpha: f64, k: f64, epsilon: f64, r: i64) -> RangeInclusive<i64> {
    let c = snapped_floor(2.0 * alpha * k / epsilon);
    c - r..=c + r
}

/// A candidate `(γ, ψ)` recipe: Bloch data at one `k`, one band, one ℓ.
#[derive(Clone, Debug)]
pub struct Candidate {
    /// 0-based Bloch index.
    pub n: usize,
    pub ell: i64,
    pub lambda_n: f64,
    pub lambda1: f64,
    pub gamma: f64,
    pub macro_solution: MacroSolution,
}

/// All candidates for one cell spectrum and a given ε.
pub fn candidates(
    cell: &CellSpectrum,
    a: &CoefficientProfile,
    rho: &CoefficientProfile,
    alpha: f64,
    epsilon: f64,
    r: i64,
) -> Result<Vec<Candidate>> {
    let k = cell.k();
    let count = cell.num_modes();
    let idx: Vec<usize> = (0..count).collect();
    let cc = coupling(cell, a, rho, &idx)?;
    let mut out = Vec::new();
    let mut push = |n: usize, sol: MacroSolution| {
        let lambda_n = cell.eigenvalue(n);
        out.push(Candidate {
            n,
            ell: sol.ell,
            lambda_n,
            lambda1: sol.lambda1,
            gamma: lambda_n + epsilon * sol.lambda1,
            macro_solution: sol,
        });
    };
    if k != 0.0 {
        let l_k = alpha * k / epsilon;
        for n in 0..count {
            let phi0 = cell.value_at_zero(n);
            for ell in ell_window(alpha, k, epsilon, r) {
                let sol = macro_eigenpair_k(
                    k,
                    n,
                    cc.c(n, n),
                    cc.b(n, n).re,
                    phi0,
                    phi0.conj(),
                    alpha,
                    l_k,
                    ell,
                    1.0,
                );
                match sol {
                    Ok(s) => push(n, s),
                    Err(Error::DegenerateMacroModel | Error::PeriodicDegenerateMode) => break,
                    Err(e) => return Err(e),
                }
            }
        }
    } else {
        for g in cell.multiplicity_groups() {
            match g.as_slice() {
                &[n, m] => {
                    let (pn, pm) = (cell.value_at_zero(n).re, cell.value_at_zero(m).re);
                    for ell in ell_window(alpha, k, epsilon, r) {
                        let sol = macro_eigenpair_0(
                            n,
                            m,
                            cc.c(n, m),
                            pn,
                            pm,
                            alpha,
                            ell,
                            C64::new(pm, 0.0),
                        );
                        match sol {
                            Ok(s) => push(n, s),
                            Err(Error::DegenerateMacroModel | Error::UnderdeterminedBoundary) => {
                                break
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
                group => {
                    for &n in group {
                        if let Ok(s) = macro_eigenpair_0_simple(n, cell.value_at_zero(n).re, alpha) {
                            push(n, s);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `|ε²λ_p − γ| / |ε²λ_p|`.
pub fn eigenvalue_error(eps2_lambda: f64, gamma: f64) -> f64 {
    ((eps2_lambda - gamma) / eps2_lambda).abs()
}

/// Least-squares alignment `s* = ⟨w, ψ⟩ / ‖ψ‖²` and
/// `‖w − s*ψ‖_{L²} / max_nodes |w|`.
pub fn align(w: &FEFunction, psi: &FEFunction) -> Result<(C64, f64)> {
    let w = FEFunction::from_nodal(*w.mesh(), w.nodal_values())?;
    let psi = FEFunction::from_nodal(*psi.mesh(), psi.nodal_values())?;
    let pp = psi.l2_inner(&psi)?.re;
    let s = if pp > 0.0 {
        w.l2_inner(&psi)? / pp
    } else {
        C64::default()
    };
    let diff: Vec<C64> = w
        .coefficients()
        .iter()
        .zip(psi.coefficients())
        .map(|(a, b)| a - s * b)
        .collect();
    let diff = FEFunction::from_nodal(*w.mesh(), diff)?;
    Ok((s, diff.l2_norm() / w.max_nodal_abs()))
}

/// Stage-1 ordering: error, then band, then distance of ℓ to `2αk/ε`.
fn better(a: (f64, usize, f64, i64), b: (f64, usize, f64, i64)) -> bool {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
        .then(a.3.cmp(&b.3))
        .is_lt()
}

fn best_candidate(cands: &[Candidate], eps2_lambda: f64, centre: f64) -> Option<&Candidate> {
    let key = |c: &Candidate| {
        (
            eigenvalue_error(eps2_lambda, c.gamma),
            c.n,
            (c.ell as f64 - centre).abs(),
            c.ell,
        )
    };
    let mut best: Option<&Candidate> = None;
    for c in cands {
        if best.is_none_or(|b| better(key(c), key(b))) {
            best = Some(c);
        }
    }
    best
}

/// Stage-1 optimum and its vector error at one wavenumber.
#[derive(Clone, Debug, Serialize)]
pub struct PerK {
    pub k: f64,
    /// 1-based band.
    pub n: usize,
    pub ell: i64,
    pub lambda_nk: f64,
    pub lambda1: f64,
    pub er_value: f64,
    pub er_vector: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchReport {
    pub p: usize,
    pub epsilon: f64,
    pub eps2_lambda: f64,
    pub k: f64,
    /// 1-based band.
    pub n: usize,
    pub ell: i64,
    pub lambda_nk: f64,
    pub lambda1: f64,
    pub gamma: f64,
    pub er_value: f64,
    pub er_vector: f64,
    pub alignment_re: f64,
    pub alignment_im: f64,
    pub excluded: bool,
    pub exclusion_reason: Option<String>,
    pub per_k: Vec<PerK>,
}

impl MatchReport {
    pub fn alignment(&self) -> C64 {
        C64::new(self.alignment_re, self.alignment_im)
    }

    /// `er_value` from the stored eigenvalues.
    pub fn recomputed_er_value(&self) -> f64 {
        eigenvalue_error(self.eps2_lambda, self.lambda_nk + self.epsilon * self.lambda1)
    }
}

/// The search: Bloch data over a k grid and the candidate recipes for one ε.
pub struct Matcher<'a> {
    spectrum: &'a PhysicalSpectrum,
    bands: &'a [CellSpectrum],
    candidates: Vec<Vec<Candidate>>,
    r: i64,
}

impl<'a> Matcher<'a> {
    pub fn new(spectrum: &'a PhysicalSpectrum, bands: &'a [CellSpectrum], r: i64) -> Result<Self> {
        let prob = &spectrum.problem;
        let candidates = bands
            .par_iter()
            .map(|cell| candidates(cell, &prob.a, &prob.rho, prob.alpha(), prob.epsilon(), r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spectrum,
            bands,
            candidates,
            r,
        })
    }

    pub fn r(&self) -> i64 {
        self.r
    }

    pub fn mode_for(&self, k_index: usize, c: &Candidate) -> Result<TwoScaleMode> {
        let prob = &self.spectrum.problem;
        build_two_scale_mode(
            &self.bands[k_index],
            &c.macro_solution,
            prob.epsilon(),
            &prob.mesh(),
        )
    }

    /// Two-stage match of physical mode `p`.
    pub fn match_mode(&self, p: usize) -> Result<MatchReport> {
        if !self.spectrum.contains(p) {
            return Err(Error::InvalidArgument(format!(
                "p = {p} outside the solved range {:?}",
                self.spectrum.indices()
            )));
        }
        let prob = &self.spectrum.problem;
        let eps = prob.epsilon();
        let target = self.spectrum.renormalized_eigenvalue(p);
        let w = self.spectrum.mode(p);
        let mut per_k = Vec::new();
        let mut best: Option<(usize, &Candidate, C64, f64)> = None;
        for (ki, (cell, cands)) in self.bands.iter().zip(&self.candidates).enumerate() {
            let centre = 2.0 * prob.alpha() * cell.k() / eps;
            let Some(c) = best_candidate(cands, target, centre) else {
                continue;
            };
            let mode = self.mode_for(ki, c)?;
            let (s, er_vector) = align(w, &mode.samples)?;
            per_k.push(PerK {
                k: cell.k(),
                n: c.n + 1,
                ell: c.ell,
                lambda_nk: c.lambda_n,
                lambda1: c.lambda1,
                er_value: eigenvalue_error(target, c.gamma),
                er_vector,
            });
            let er_value = eigenvalue_error(target, c.gamma);
            let replace = best.is_none_or(|(_, bc, _, bv)| {
                if (er_vector - bv).abs() <= VECTOR_TIE_TOL {
                    er_value < eigenvalue_error(target, bc.gamma)
                } else {
                    er_vector < bv
                }
            });
            if replace {
                best = Some((ki, c, s, er_vector));
            }
        }
        let (ki, c, s, er_vector) = best.ok_or(Error::EmptySearch)?;
        let excluded = per_k.iter().all(|r| r.er_vector > EXCLUSION_THRESHOLD);
        Ok(MatchReport {
            p,
            epsilon: eps,
            eps2_lambda: target,
            k: self.bands[ki].k(),
            n: c.n + 1,
            ell: c.ell,
            lambda_nk: c.lambda_n,
            lambda1: c.lambda1,
            gamma: c.gamma,
            er_value: eigenvalue_error(target, c.gamma),
            er_vector,
            alignment_re: s.re,
            alignment_im: s.im,
            excluded,
            exclusion_reason: excluded.then(|| "boundary-spectrum heuristic".to_string()),
            per_k,
        })
    }

    /// One report per index, in input order.
    pub fn sweep(&self, indices: &[usize]) -> Result<Vec<MatchReport>> {
        indices.par_iter().map(|&p| self.match_mode(p)).collect()
    }
}

/// Solves bands on `k_grid` and matches one mode.
pub fn match_mode(
    p: usize,
    physical: &PhysicalSpectrum,
    bands: &[CellSpectrum],
    r: i64,
) -> Result<MatchReport> {
    Matcher::new(physical, bands, r)?.match_mode(p)
}

pub fn sweep_match(
    indices: &[usize],
    physical: &PhysicalSpectrum,
    bands: &[CellSpectrum],
    r: i64,
) -> Result<Vec<MatchReport>> {
    if indices.is_empty() {
        return Ok(Vec::new());
    }
    Matcher::new(physical, bands, r)?.sweep(indices)
}

#[derive(Clone, Debug, Serialize)]
pub struct EllResidual {
    pub ell: i64,
    pub lambda1: f64,
    pub gamma: f64,
    pub f: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelReport {
    pub k: f64,
    /// 1-based band.
    pub n: usize,
    pub epsilon: f64,
    pub lambda_nk: f64,
    pub ell: i64,
    pub lambda1: f64,
    pub gamma: f64,
    pub f_min: f64,
    pub p: usize,
    pub eps2_lambda: f64,
    pub er_value: f64,
    pub er_vector: f64,
    pub scan: Vec<EllResidual>,
}

/// Minimises `F` over the ℓ-window of band `n` (0-based) at `cell.k()`, then
/// identifies the physical mode closest in eigenvalue.
pub fn modeling_search(
    cell: &CellSpectrum,
    n: usize,
    physical: &PhysicalSpectrum,
    r: i64,
) -> Result<ModelReport> {
    let prob = &physical.problem;
    let eps = prob.epsilon();
    let cands: Vec<Candidate> = candidates(cell, &prob.a, &prob.rho, prob.alpha(), eps, r)?
        .into_iter()
        .filter(|c| c.n == n)
        .collect();
    if cands.is_empty() {
        return Err(Error::EmptySearch);
    }
    let op = ResidualOperator::new(prob)?;
    let mesh = prob.mesh();
    let scan: Vec<(EllResidual, TwoScaleMode)> = cands
        .par_iter()
        .map(|c| {
            let mode = build_two_scale_mode(cell, &c.macro_solution, eps, &mesh)?;
            let f = op.relative_residual(&mode.samples, mode.gamma)?;
            Ok((
                EllResidual {
                    ell: c.ell,
                    lambda1: c.lambda1,
                    gamma: c.gamma,
                    f,
                },
                mode,
            ))
        })
        .collect::<Result<_>>()?;
    let centre = 2.0 * prob.alpha() * cell.k() / eps;
    let (best, mode) = scan
        .iter()
        .min_by(|(a, _), (b, _)| {
            a.f.total_cmp(&b.f).then(
                (a.ell as f64 - centre)
                    .abs()
                    .total_cmp(&(b.ell as f64 - centre).abs()),
            )
        })
        .unwrap();
    if best.f > 1.0 {
        return Err(Error::NoPhysicalCounterpart { f_min: best.f });
    }
    let p = physical
        .indices()
        .min_by(|&a, &b| {
            eigenvalue_error(physical.renormalized_eigenvalue(a), best.gamma)
                .total_cmp(&eigenvalue_error(physical.renormalized_eigenvalue(b), best.gamma))
        })
        .ok_or(Error::EmptySearch)?;
    let (_, er_vector) = align(physical.mode(p), &mode.samples)?;
    Ok(ModelReport {
        k: cell.k(),
        n: n + 1,
        epsilon: eps,
        lambda_nk: cell.eigenvalue(n),
        ell: best.ell,
        lambda1: best.lambda1,
        gamma: best.gamma,
        f_min: best.f,
        p,
        eps2_lambda: physical.renormalized_eigenvalue(p),
        er_value: eigenvalue_error(physical.renormalized_eigenvalue(p), best.gamma),
        er_vector,
        scan: scan.into_iter().map(|(e, _)| e).collect(),
    })
}

/// Physical ranks whose renormalised eigenvalues bracket `target` with `pad`
/// extra modes on each side.
pub fn rank_window(problem: &PhysicalProblem, target: f64, pad: usize) -> Result<RangeInclusive<usize>> {
    let pencil = problem.pencil()?;
    let e2 = problem.epsilon().powi(2);
    let below = count_below(&pencil, target / e2);
    let lo = below.saturating_sub(pad).max(1);
    let hi = (below + pad).min(pencil.dof_count()).max(lo);
    Ok(lo..=hi)
}

/// Setup of an ε-convergence study at fixed `(k, n)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceSetup {
    pub alpha: f64,
    pub a: CoefficientProfile,
    pub rho: CoefficientProfile,
    pub k: f64,
    pub l: f64,
    pub h_list: Vec<u64>,
    /// 1-based band.
    pub n: usize,
    pub r: i64,
    pub n_bloch_elements: usize,
    pub elements_per_cell: usize,
    /// Physical modes examined on each side of `λ_n / ε²`.
    pub rank_pad: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub h: u64,
    pub epsilon: f64,
    pub cells: usize,
    pub p: usize,
    pub ell: i64,
    pub lambda1: f64,
    pub er_value: f64,
    pub er_vector: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Rate {
    pub q_value: f64,
    pub q_vector: f64,
    pub c_value: f64,
    pub c_vector: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub k: f64,
    pub l: f64,
    pub n: usize,
    pub lambda_nk: f64,
    pub rows: Vec<ConvergenceRow>,
    /// One entry per consecutive pair of rows.
    pub rates: Vec<Rate>,
}

/// `q = log(e/e') / log(ε/ε')` and `c = e / ε^q` for consecutive rows.
pub fn decay_rates(rows: &[ConvergenceRow]) -> Vec<Rate> {
    rows.windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let de = (a.epsilon / b.epsilon).ln();
            let q_value = (a.er_value / b.er_value).ln() / de;
            let q_vector = (a.er_vector / b.er_vector).ln() / de;
            Rate {
                q_value,
                q_vector,
                c_value: a.er_value / a.epsilon.powf(q_value),
                c_vector: a.er_vector / a.epsilon.powf(q_vector),
            }
        })
        .collect()
}

/// `ε_h = αk/(h + l)` with `(h + l)/k` cells; at each ε the physical mode
/// with the smallest eigenvalue error against band `n` is selected.
pub fn convergence_study(setup: &ConvergenceSetup) -> Result<ConvergenceReport> {
    if setup.n == 0 {
        return Err(Error::InvalidArgument("band n is 1-based".into()));
    }
    if !(setup.k > 0.0 && setup.k < 0.5) || !(0.0..1.0).contains(&setup.l) {
        return Err(Error::InvalidSubsequence(format!(
            "need k in (0, 1/2) and l in [0, 1), got k = {}, l = {}",
            setup.k, setup.l
        )));
    }
    let n = setup.n - 1;
    let cell = solve_cell(&setup.a, &setup.rho, setup.k, setup.n_bloch_elements, setup.n)?;
    let lambda_nk = cell.eigenvalue(n);
    let rows = setup
        .h_list
        .par_iter()
        .map(|&h| {
            let t = h as f64 + setup.l;
            let cells = integral(setup.alpha * t / setup.k)
                .filter(|&c| c > 0)
                .ok_or_else(|| {
                    Error::InvalidSubsequence(format!(
                        "α(h + l)/k = {} is not a positive integer for h = {h}",
                        setup.alpha * t / setup.k
                    ))
                })?;
            let problem = PhysicalProblem::with_cells(
                setup.alpha,
                cells,
                setup.a.clone(),
                setup.rho.clone(),
                PhysicalBc::Dirichlet,
                setup.elements_per_cell * cells,
            )?;
            let eps = problem.epsilon();
            let window = rank_window(&problem, lambda_nk, setup.rank_pad)?;
            let spectrum = solve_physical(&problem, window)?;
            let cands: Vec<Candidate> =
                candidates(&cell, &setup.a, &setup.rho, setup.alpha, eps, setup.r)?
                    .into_iter()
                    .filter(|c| c.n == n)
                    .collect();
            let centre = 2.0 * setup.alpha * setup.k / eps;
            let mut best: Option<(usize, &Candidate, f64)> = None;
            for p in spectrum.indices() {
                let target = spectrum.renormalized_eigenvalue(p);
                if let Some(c) = best_candidate(&cands, target, centre) {
                    let e = eigenvalue_error(target, c.gamma);
                    if best.is_none_or(|b| e < b.2) {
                        best = Some((p, c, e));
                    }
                }
            }
            let (p, c, er_value) = best.ok_or(Error::EmptySearch)?;
            let mode = build_two_scale_mode(&cell, &c.macro_solution, eps, &problem.mesh())?;
            let (_, er_vector) = align(spectrum.mode(p), &mode.samples)?;
            Ok(ConvergenceRow {
                h,
                epsilon: eps,
                cells,
                p,
                ell: c.ell,
                lambda1: c.lambda1,
                er_value,
                er_vector,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rates = decay_rates(&rows);
    Ok(ConvergenceReport {
        k: setup.k,
        l: setup.l,
        n: setup.n,
        lambda_nk,
        rows,
        rates,
    })
}
