//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero when any criterion fails.
//!
//! `cargo test -p bloch-homog --test acceptance -- 3 7` runs a subset.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use bloch_homog::bloch_cell::{band_sweep, coupling, solve_cell};
use bloch_homog::fem1d::{
    assemble, solve_pencil, BoundaryCondition, CoefficientProfile, FEFunction, Mesh1D,
};
use bloch_homog::macro_solver::{macro_eigenpair_0, macro_eigenpair_0_simple, macro_eigenpair_k};
use bloch_homog::physical::{solve_physical, PhysicalBc, PhysicalProblem, PhysicalSpectrum};
use bloch_homog::pipelines::{
    candidates, convergence_study, modeling_search, sweep_match, ConvergenceSetup, KGrid,
    MatchReport, Matcher,
};
use bloch_homog::two_scale::{build_two_scale_mode, residual_f, two_scale_transform};
use bloch_homog::C64;
use rand::{rngs::StdRng, Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn unit() -> CoefficientProfile {
    CoefficientProfile::constant(1.0)
}

fn reference() -> CoefficientProfile {
    CoefficientProfile::reference_sine()
}

/// 50 cells, 2000 elements, Dirichlet, physical ranks 40..=150.
fn reference_spectrum() -> PhysicalSpectrum {
    let prob = PhysicalProblem::with_cells(1.0, 50, reference(), unit(), PhysicalBc::Dirichlet, 2000)
        .expect("reference problem");
    solve_physical(&prob, 40..=150).expect("reference spectrum")
}

fn dispersion_oracle() -> Outcome {
    let mesh = Mesh1D::unit_cell(50).unwrap();
    let mut worst: f64 = 0.0;
    let mut worst_at = (0.0, 0);
    for i in 0..10 {
        let k = -0.5 + i as f64 / 10.0;
        let p = assemble(&mesh, &unit(), &unit(), BoundaryCondition::QuasiPeriodic(k)).unwrap();
        let pairs = solve_pencil(&p, 6).unwrap();
        let mut exact: Vec<f64> = (-5..=5).map(|m| 4.0 * PI * PI * (m as f64 + k).powi(2)).collect();
        exact.sort_by(f64::total_cmp);
        for (j, (e, x)) in pairs.iter().zip(&exact).enumerate() {
            let rel = (e.value - x).abs() / x.max(1.0);
            if rel > worst {
                worst = rel;
                worst_at = (k, j + 1);
            }
        }
    }
    outcome(
        worst <= 1e-6,
        format!(
            "max relative error {worst:.2e} (tol 1e-6) at k={}, n={}",
            worst_at.0, worst_at.1
        ),
    )
}

fn coefficient_identities() -> Outcome {
    let a = reference();
    let idx: Vec<usize> = (0..10).collect();
    let mut skew: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut delta: f64 = 0.0;
    let mut real_diag: f64 = 0.0;
    let mut real_sets = 0;
    for k in [0.0, 0.16, 0.25, -0.3, -0.5] {
        let s = solve_cell(&a, &unit(), k, 50, 10).unwrap();
        let cc = coupling(&s, &a, &unit(), &idx).unwrap();
        let all_real = s
            .modes()
            .iter()
            .all(|m| m.coefficients().iter().all(|v| v.im == 0.0));
        for i in 0..10 {
            for j in 0..10 {
                skew = skew.max((cc.c(i, j) + cc.c(j, i).conj()).norm());
                herm = herm.max((cc.b(i, j) - cc.b(j, i).conj()).norm());
                let d = if i == j { 1.0 } else { 0.0 };
                delta = delta.max((cc.b(i, j) - d).norm());
            }
            if all_real {
                real_diag = real_diag.max(cc.c(i, i).norm());
            }
        }
        real_sets += all_real as usize;
    }
    let worst = skew.max(herm).max(delta).max(real_diag);
    outcome(
        worst <= 1e-10 && real_sets >= 1,
        format!(
            "skew c {skew:.1e}, hermitian b {herm:.1e}, b=δ {delta:.1e}, real c(n,n) {real_diag:.1e} over {real_sets} real k (tol 1e-10)"
        ),
    )
}

fn describe(r: &MatchReport) -> String {
    format!(
        "(k,n,ℓ)=({},{},{}), λ_n={:.4}, λ¹={:.3}, er_value={:.2e}, er_vector={:.2e}",
        r.k, r.n, r.ell, r.lambda_nk, r.lambda1, r.er_value, r.er_vector
    )
}

fn headline_match() -> Outcome {
    let spectrum = reference_spectrum();
    let ks = KGrid::Count(125).points().unwrap();
    let bands = band_sweep(&reference(), &unit(), &ks, 50, 10).unwrap();
    let r = Matcher::new(&spectrum, &bands, 15).unwrap().match_mode(85).unwrap();
    let labels = (r.k - 0.16).abs() < 1e-12 && r.n == 2 && r.ell == 17;
    let at_016 = r.per_k.iter().find(|q| (q.k - 0.16).abs() < 1e-12).unwrap();
    outcome(
        labels && r.er_value <= 5e-4 && r.er_vector <= 2e-2,
        format!(
            "p=85 → {} (want (0.16,2,17), er_value ≤ 5e-4, er_vector ≤ 2e-2); at k=0.16: n={}, ℓ={}, λ¹={:.2}, er_value={:.2e}, er_vector={:.2e}",
            describe(&r),
            at_016.n,
            at_016.ell,
            at_016.lambda1,
            at_016.er_value,
            at_016.er_vector
        ),
    )
}

fn sweep_bounds() -> Outcome {
    let t = Instant::now();
    let spectrum = reference_spectrum();
    let ks = KGrid::Count(125).points().unwrap();
    let bands = band_sweep(&reference(), &unit(), &ks, 50, 10).unwrap();
    let ps: Vec<usize> = (40..=150).filter(|&p| p != 50).collect();
    let reps = sweep_match(&ps, &spectrum, &bands, 15).unwrap();
    let max_v = reps.iter().map(|r| r.er_value).fold(0.0, f64::max);
    let max_w = reps.iter().map(|r| r.er_vector).fold(0.0, f64::max);
    let under = reps
        .iter()
        .filter(|r| r.er_value <= 6e-3 && r.er_vector <= 8e-2)
        .count();
    let frac = under as f64 / reps.len() as f64;
    let elapsed = t.elapsed();
    outcome(
        max_v <= 1.2e-2 && max_w <= 1.6e-1 && frac >= 0.9 && within(elapsed, 7200.0),
        format!(
            "{} modes: max er_value {max_v:.2e} (≤ 1.2e-2), max er_vector {max_w:.2e} (≤ 1.6e-1), {:.0}% under 6e-3/8e-2 (≥ 90%)",
            reps.len(),
            100.0 * frac
        ),
    )
}

fn refinement_table() -> Outcome {
    let spectrum = reference_spectrum();
    // (p, coarse er_value, coarse er_vector, fine er_value, fine er_vector)
    let table = [(66, 1.2e-3, 1.9e-2, 9.0e-5, 5.3e-3), (102, 4.0e-4, 5.8e-3, 3.0e-5, 1.4e-3)];
    let run = |step: f64| {
        let ks = KGrid::Step(step).points().unwrap();
        let bands = band_sweep(&reference(), &unit(), &ks, 50, 10).unwrap();
        let m = Matcher::new(&spectrum, &bands, 15).unwrap();
        table
            .iter()
            .map(|&(p, ..)| m.match_mode(p).unwrap())
            .collect::<Vec<_>>()
    };
    let coarse = run(8e-3);
    let fine = run(3e-3);
    let factor3 = |got: f64, want: f64| got <= 3.0 * want && got >= want / 3.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for ((row, c), f) in table.iter().zip(&coarse).zip(&fine) {
        let decreasing = f.er_value < c.er_value && f.er_vector < c.er_vector;
        let close = factor3(c.er_value, row.1)
            && factor3(c.er_vector, row.2)
            && factor3(f.er_value, row.3)
            && factor3(f.er_vector, row.4);
        pass &= decreasing && close;
        parts.push(format!(
            "p={}: 8e-3 → {:.1e}/{:.1e} (table {:.1e}/{:.1e}), 3e-3 → {:.1e}/{:.1e} (table {:.1e}/{:.1e}), decreasing={decreasing}, within×3={close}",
            row.0, c.er_value, c.er_vector, row.1, row.2, f.er_value, f.er_vector, row.3, row.4
        ));
    }
    outcome(pass, parts.join("; "))
}

fn modeling_table() -> Outcome {
    let spectrum = reference_spectrum();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, f_tol, want_p, want_l1) in [(0.16, 2e-2, 84, None), (0.352, 9e-2, 65, Some(-8.55))] {
        let cell = solve_cell(&reference(), &unit(), k, 50, 10).unwrap();
        let r = modeling_search(&cell, 1, &spectrum, 15).unwrap();
        let l1_ok = want_l1.is_none_or(|w: f64| (r.lambda1 - w).abs() <= 0.2 * w.abs());
        let ok = r.f_min <= f_tol && r.p == want_p && l1_ok;
        pass &= ok;
        parts.push(format!(
            "k={k}: F={:.2e} (≤ {f_tol:.0e}), p={} (want {want_p}), ℓ={}, λ¹={:.3}{}",
            r.f_min,
            r.p,
            r.ell,
            r.lambda1,
            want_l1.map_or(String::new(), |w| format!(" (want {w} ± 20%)"))
        ));
    }
    outcome(pass, parts.join("; "))
}

fn convergence_table() -> Outcome {
    let t = Instant::now();
    let rep = convergence_study(&ConvergenceSetup {
        alpha: 1.0,
        a: reference(),
        rho: unit(),
        k: 0.3,
        l: 0.6,
        h_list: vec![3, 9, 15, 21],
        n: 2,
        r: 15,
        n_bloch_elements: 50,
        elements_per_cell: 40,
        rank_pad: 8,
    })
    .unwrap();
    let elapsed = t.elapsed();
    let in_range = |v: f64, lo: f64, hi: f64| (lo..=hi).contains(&v);
    let pass = rep.rates.iter().all(|r| {
        in_range(r.q_value, 0.9, 1.1)
            && in_range(r.q_vector, 0.9, 1.1)
            && in_range(r.c_value, 0.3, 0.8)
            && in_range(r.c_vector, 0.04, 0.12)
    }) && within(elapsed, 1200.0);
    let rows: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("h={} p={} er={:.1e}/{:.1e}", r.h, r.p, r.er_value, r.er_vector))
        .collect();
    let rates: Vec<String> = rep
        .rates
        .iter()
        .map(|r| {
            format!(
                "q={:.2}/{:.2} c={:.3}/{:.3}",
                r.q_value, r.q_vector, r.c_value, r.c_vector
            )
        })
        .collect();
    outcome(
        pass,
        format!(
            "{}; rates value/vector {} (want q in [0.9,1.1], c_value in [0.3,0.8], c_vector in [0.04,0.12])",
            rows.join(", "),
            rates.join(", ")
        ),
    )
}

fn exact_modes_residual() -> Outcome {
    let cells = 10;
    let problem =
        PhysicalProblem::with_cells(1.0, cells, unit(), unit(), PhysicalBc::Dirichlet, 40 * cells)
            .unwrap();
    let eps = problem.epsilon();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in [0.0, 0.25, 0.3, 0.45] {
        let cell = solve_cell(&unit(), &unit(), k, 40, 4).unwrap();
        for c in candidates(&cell, &unit(), &unit(), 1.0, eps, 0).unwrap() {
            // r = 0 keeps only ℓ = 2l^k
            assert!(c.lambda1.abs() < 1e-9);
            let mode = build_two_scale_mode(&cell, &c.macro_solution, eps, &problem.mesh()).unwrap();
            worst = worst.max(residual_f(&mode, &problem).unwrap());
            count += 1;
        }
    }
    outcome(
        worst <= 1e-4 && count > 0,
        format!("{count} modes with λ¹ = 0: max F {worst:.2e} (tol 1e-4)"),
    )
}

fn transform_isometry() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let (cells, per_cell) = (10, 20);
    let eps = 1.0 / cells as f64;
    let mesh = Mesh1D::new(0.0, 1.0, cells * per_cell).unwrap();
    let y = Mesh1D::unit_cell(per_cell).unwrap();
    let mut iso: f64 = 0.0;
    let mut conj: f64 = 0.0;
    for _ in 0..50 {
        let nodes = mesh.num_nodes();
        let u: Vec<C64> = (0..nodes)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let u = FEFunction::from_nodal(mesh, u).unwrap();
        let real: Vec<C64> = (0..nodes).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let real = FEFunction::from_nodal(mesh, real).unwrap();
        for k in [0.0, 0.16, -0.3] {
            let n2 = u.l2_norm().powi(2);
            let s = two_scale_transform(&u, k, eps, &y).unwrap();
            iso = iso.max((s.norm_squared() - n2).abs() / n2);
            let sp = two_scale_transform(&real, k, eps, &y).unwrap();
            let sm = two_scale_transform(&real, -k, eps, &y).unwrap();
            for (a, b) in sp.values.iter().flatten().zip(sm.values.iter().flatten()) {
                conj = conj.max((a - b.conj()).norm());
            }
        }
    }
    outcome(
        iso <= 1e-6 && conj <= 1e-12,
        format!("max relative isometry defect {iso:.1e} (tol 1e-6), conjugation defect {conj:.1e} (tol 1e-12)"),
    )
}

fn macro_residuals() -> Outcome {
    let mut rng = StdRng::seed_from_u64(17);
    let alpha = 1.0;
    let (mut ode, mut bnd, mut im): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut root: f64 = 0.0;
    let mut branches = [0usize; 3];
    let mut draws = 0;
    while draws < 1000 {
        let a = if rng.gen_bool(0.3) {
            CoefficientProfile::constant(rng.gen_range(0.5..3.0))
        } else {
            let offset = rng.gen_range(1.5..3.0);
            CoefficientProfile::sine(rng.gen_range(0.0..offset - 0.5), offset)
        };
        let cells: usize = rng.gen_range(10..80);
        let eps = alpha / cells as f64;
        let k = if rng.gen_bool(0.15) {
            0.0
        } else {
            rng.gen_range(-0.49..0.49)
        };
        let s = solve_cell(&a, &unit(), k, 50, 6).unwrap();
        let n = rng.gen_range(0..5);
        let cc = coupling(&s, &a, &unit(), &(0..6).collect::<Vec<_>>()).unwrap();
        let l_k = alpha * k / eps;
        let centre = (2.0 * l_k).floor() as i64;
        let ell = centre + rng.gen_range(-15..=15);
        let sol = if k != 0.0 {
            let phi0 = s.value_at_zero(n);
            let at = |l: f64, e: i64| {
                macro_eigenpair_k(k, n, cc.c(n, n), cc.b(n, n).re, phi0, phi0.conj(), alpha, l, e, 1.0)
            };
            match at(l_k, ell) {
                Ok(sol) => {
                    let exact = at(ell as f64 / 2.0, ell).unwrap();
                    root = root.max(exact.lambda1.abs()).max(exact.lambda1_im.abs());
                    branches[0] += 1;
                    sol
                }
                Err(_) => continue,
            }
        } else {
            let g = s.group_of(n).to_vec();
            if let [p, q] = g[..] {
                let (pn, pm) = (s.value_at_zero(p).re, s.value_at_zero(q).re);
                match macro_eigenpair_0(p, q, cc.c(p, q), pn, pm, alpha, ell, C64::new(pm, 0.0)) {
                    Ok(sol) => {
                        branches[1] += 1;
                        sol
                    }
                    Err(_) => continue,
                }
            } else {
                match macro_eigenpair_0_simple(n, s.value_at_zero(n).re, alpha) {
                    Ok(sol) => {
                        branches[2] += 1;
                        sol
                    }
                    Err(_) => continue,
                }
            }
        };
        draws += 1;
        im = im.max(sol.lambda1_im.abs());
        for i in 0..=20 {
            ode = ode.max(sol.ode_residual(alpha * i as f64 / 20.0));
        }
        bnd = bnd.max(sol.boundary_residual(0.0)).max(sol.boundary_residual(alpha));
    }
    outcome(
        ode <= 1e-9 && bnd <= 1e-9 && im <= 1e-9 && root == 0.0,
        format!(
            "{draws} draws (k≠0 {}, k=0 double {}, k=0 simple {}): ODE {ode:.1e}, boundary {bnd:.1e}, |Im λ¹| {im:.1e} (tol 1e-9), λ¹ at ℓ=2l {root:e} (want 0)",
            branches[0], branches[1], branches[2]
        ),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome, f64);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "analytic dispersion oracle", dispersion_oracle, 5.0),
        (2, "coupling coefficient identities", coefficient_identities, 10.0),
        (3, "headline match p=85", headline_match, 600.0),
        (4, "sweep bounds p in 40..150", sweep_bounds, 7200.0),
        (5, "k-step refinement table", refinement_table, f64::INFINITY),
        (6, "modeling table", modeling_table, f64::INFINITY),
        (7, "ε-convergence table", convergence_table, 1200.0),
        (8, "exact two-scale modes", exact_modes_residual, f64::INFINITY),
        (9, "transform isometry", transform_isometry, f64::INFINITY),
        (10, "macro closed-form residuals", macro_residuals, f64::INFINITY),
    ];
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (id, name, run, limit) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let elapsed = t.elapsed();
        let timely = within(elapsed, limit);
        let pass = o.pass && timely;
        let time_note = if timely {
            String::new()
        } else {
            format!(" (runtime limit {limit} s exceeded)")
        };
        println!(
            "criterion {id:>2} {} {name} [{:.1} s]{time_note}: {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
