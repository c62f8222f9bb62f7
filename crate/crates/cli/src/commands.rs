//! One function per subcommand. Each preflights everything that can be
//! checked without solving, echoes the configuration, then writes its CSV
//! files and a JSON summary holding the same rows.

use bloch_homog::bloch_cell::{band_sweep, solve_cell};
use bloch_homog::physical::{solve_physical, PhysicalSpectrum};
use bloch_homog::pipelines::{
    convergence_study, modeling_search, ConvergenceSetup, MatchReport, Matcher,
};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::error::CliResult;
use crate::output::{Cell, OutDir};

/// Rows matched between two flushes of `match.csv`.
const MATCH_CHUNK: usize = 8;

fn echo_config(cfg: &LoadedConfig, out: &OutDir) -> CliResult<()> {
    out.write_text("config.toml", &cfg.source)?;
    let resolved = toml::to_string(&cfg.config)
        .map_err(|e| crate::error::CliError::Io(format!("resolved config: {e}")))?;
    out.write_text("resolved_config.toml", &resolved)
}

#[derive(Serialize)]
struct BandRow {
    k: f64,
    n: usize,
    lambda: f64,
}

#[derive(Serialize)]
struct BandSummary {
    k_grid: Vec<f64>,
    num_modes: usize,
    n_bloch_elements: usize,
    rows: Vec<BandRow>,
}

pub fn band(cfg: &LoadedConfig, out: &OutDir) -> CliResult<()> {
    let c = &cfg.config;
    let k_grid = cfg.k_points()?;
    echo_config(cfg, out)?;
    let spectra = band_sweep(&c.a, &c.rho, &k_grid, c.n_bloch_elements, c.num_bloch_modes)?;
    // One block per band, k ascending within a block.
    let mut rows = Vec::with_capacity(k_grid.len() * c.num_bloch_modes);
    for n in 0..c.num_bloch_modes {
        for s in &spectra {
            rows.push(BandRow {
                k: s.k(),
                n: n + 1,
                lambda: s.eigenvalue(n),
            });
        }
    }
    let mut csv = out.csv("bands.csv", &["k", "n", "lambda"])?;
    for r in &rows {
        csv.row(vec![r.k.into(), r.n.into(), r.lambda.into()])?;
    }
    csv.finish()?;
    println!("band: {} rows -> {}", rows.len(), out.path("bands.csv").display());
    out.write_json(
        "bands.json",
        &BandSummary {
            k_grid,
            num_modes: c.num_bloch_modes,
            n_bloch_elements: c.n_bloch_elements,
            rows,
        },
    )
}

#[derive(Serialize)]
struct PhysicalRow {
    p: usize,
    lambda: f64,
    eps2_lambda: f64,
    gradient_bound: f64,
}

#[derive(Serialize)]
struct Profile {
    p: usize,
    x: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize)]
struct PhysicalSummary {
    alpha: f64,
    epsilon: f64,
    n_elements: usize,
    rows: Vec<PhysicalRow>,
    profiles: Vec<Profile>,
}

fn physical_spectrum(cfg: &LoadedConfig) -> CliResult<PhysicalSpectrum> {
    Ok(solve_physical(&cfg.problem()?, cfg.p_range())?)
}

pub fn physical(cfg: &LoadedConfig, out: &OutDir) -> CliResult<()> {
    echo_config(cfg, out)?;
    let spectrum = physical_spectrum(cfg)?;
    let rows: Vec<PhysicalRow> = spectrum
        .indices()
        .map(|p| PhysicalRow {
            p,
            lambda: spectrum.eigenvalue(p),
            eps2_lambda: spectrum.renormalized_eigenvalue(p),
            gradient_bound: spectrum.gradient_bound(p),
        })
        .collect();
    let mut csv = out.csv("physical.csv", &["p", "lambda", "eps2_lambda", "gradient_bound"])?;
    for r in &rows {
        csv.row(vec![
            r.p.into(),
            r.lambda.into(),
            r.eps2_lambda.into(),
            r.gradient_bound.into(),
        ])?;
    }
    csv.finish()?;

    let mut profiles = Vec::new();
    for &p in &cfg.config.physical.profiles {
        let w = spectrum.mode(p);
        let values = w.nodal_values();
        let profile = Profile {
            p,
            x: w.mesh().nodes(),
            re: values.iter().map(|v| v.re).collect(),
            im: values.iter().map(|v| v.im).collect(),
        };
        let mut csv = out.csv(&format!("mode_{p}.csv"), &["x", "re", "im"])?;
        for i in 0..profile.x.len() {
            csv.row(vec![
                profile.x[i].into(),
                profile.re[i].into(),
                profile.im[i].into(),
            ])?;
        }
        csv.finish()?;
        profiles.push(profile);
    }
    println!(
        "physical: p = {}..={} ({} profiles) -> {}",
        cfg.config.physical.p_min,
        cfg.config.physical.p_max,
        profiles.len(),
        out.path("physical.csv").display()
    );
    let problem = &spectrum.problem;
    out.write_json(
        "physical.json",
        &PhysicalSummary {
            alpha: problem.alpha(),
            epsilon: problem.epsilon(),
            n_elements: problem.n_elements(),
            rows,
            profiles,
        },
    )
}

const MATCH_HEADER: [&str; 11] = [
    "p",
    "k",
    "n",
    "ell",
    "lambda_nk",
    "lambda1",
    "er_value",
    "er_vector",
    "excluded",
    "alignment_re",
    "alignment_im",
];

fn match_cells(r: &MatchReport) -> Vec<Cell> {
    vec![
        r.p.into(),
        r.k.into(),
        r.n.into(),
        r.ell.into(),
        r.lambda_nk.into(),
        r.lambda1.into(),
        r.er_value.into(),
        r.er_vector.into(),
        r.excluded.into(),
        r.alignment_re.into(),
        r.alignment_im.into(),
    ]
}

pub fn matching(cfg: &LoadedConfig, out: &OutDir) -> CliResult<()> {
    let c = &cfg.config;
    let k_grid = cfg.k_points()?;
    let indices = cfg.match_indices();
    echo_config(cfg, out)?;
    let spectrum = physical_spectrum(cfg)?;
    let bands = band_sweep(&c.a, &c.rho, &k_grid, c.n_bloch_elements, c.num_bloch_modes)?;
    let matcher = Matcher::new(&spectrum, &bands, c.r)?;
    let mut csv = out.csv("match.csv", &MATCH_HEADER)?;
    let mut reports = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(MATCH_CHUNK.max(rayon::current_num_threads())) {
        for r in matcher.sweep(chunk)? {
            csv.row(match_cells(&r))?;
            reports.push(r);
        }
        csv.flush()?;
    }
    csv.finish()?;
    let excluded = reports.iter().filter(|r| r.excluded).count();
    let max = |f: fn(&MatchReport) -> f64| {
        reports
            .iter()
            .filter(|r| !r.excluded)
            .map(f)
            .fold(0.0, f64::max)
    };
    println!(
        "match: {} modes ({excluded} excluded), max er_value {:e}, max er_vector {:e} -> {}",
        reports.len(),
        max(|r| r.er_value),
        max(|r| r.er_vector),
        out.path("match.csv").display()
    );
    out.write_json("match.json", &reports)
}

pub fn model(cfg: &LoadedConfig, out: &OutDir) -> CliResult<()> {
    let c = &cfg.config;
    echo_config(cfg, out)?;
    let spectrum = physical_spectrum(cfg)?;
    let cell = solve_cell(&c.a, &c.rho, c.model.k, c.n_bloch_elements, c.num_bloch_modes)?;
    let report = modeling_search(&cell, c.model.n - 1, &spectrum, c.r)?;
    let mut csv = out.csv("model.csv", &["ell", "lambda1", "gamma", "f"])?;
    for s in &report.scan {
        csv.row(vec![s.ell.into(), s.lambda1.into(), s.gamma.into(), s.f.into()])?;
    }
    csv.finish()?;
    println!(
        "model: (k, n) = ({}, {}) -> ell {}, F {:e}, p {}, lambda1 {}",
        report.k, report.n, report.ell, report.f_min, report.p, report.lambda1
    );
    out.write_json("model.json", &report)
}

pub fn converge(cfg: &LoadedConfig, out: &OutDir) -> CliResult<()> {
    let c = &cfg.config;
    let cv = &c.converge;
    echo_config(cfg, out)?;
    let setup = ConvergenceSetup {
        alpha: c.alpha,
        a: c.a.clone(),
        rho: c.rho.clone(),
        k: cv.k,
        l: cv.l,
        h_list: cv.h.clone(),
        n: cv.n,
        r: c.r,
        n_bloch_elements: c.n_bloch_elements,
        elements_per_cell: cv.elements_per_cell,
        rank_pad: cv.rank_pad,
    };
    let report = convergence_study(&setup)?;
    let mut csv = out.csv(
        "converge.csv",
        &["h", "epsilon", "er_value", "er_vector", "p", "q_value", "q_vector"],
    )?;
    for (i, row) in report.rows.iter().enumerate() {
        // The rate between rows i-1 and i sits on row i.
        let rate = i.checked_sub(1).map(|j| &report.rates[j]);
        csv.row(vec![
            row.h.into(),
            row.epsilon.into(),
            row.er_value.into(),
            row.er_vector.into(),
            row.p.into(),
            rate.map(|r| r.q_value).into(),
            rate.map(|r| r.q_vector).into(),
        ])?;
    }
    csv.finish()?;
    println!(
        "converge: {} rows, q_value {:?}, q_vector {:?} -> {}",
        report.rows.len(),
        report.rates.iter().map(|r| r.q_value).collect::<Vec<_>>(),
        report.rates.iter().map(|r| r.q_vector).collect::<Vec<_>>(),
        out.path("converge.csv").display()
    );
    out.write_json("converge.json", &report)
}
