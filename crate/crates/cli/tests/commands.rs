use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, config: &str, sub: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_blochhom"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--workers")
        .arg("2")
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Header and rows of a CSV file; empty cells become `None`.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .map(|s| match s {
                    "" => None,
                    "true" => Some(1.0),
                    "false" => Some(0.0),
                    s => Some(s.parse().unwrap()),
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every CSV column named like a JSON field equals it exactly.
fn assert_mirrors(csv: &Path, rows: &[Value]) {
    let (header, data) = read_csv(csv);
    assert_eq!(data.len(), rows.len());
    for (row, obj) in data.iter().zip(rows) {
        for (name, cell) in header.iter().zip(row) {
            let Some(v) = obj.get(name) else { continue };
            let expected = match v {
                Value::Bool(b) => Some(*b as u8 as f64),
                Value::Null => None,
                v => Some(v.as_f64().unwrap()),
            };
            assert_eq!(*cell, expected, "column {name}");
        }
    }
}

const UNIT: &str = r#"
[a]
kind = "constant"
value = 1.0

[rho]
kind = "constant"
value = 1.0
"#;

#[test]
fn band_reproduces_free_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "n_bloch_elements = 200\nnum_bloch_modes = 6\n{UNIT}\n[k_grid]\nvalues = [0.0, 0.1, 0.25, 0.4]\n"
    );
    let o = run(dir.path(), &config, "band");
    ok(&o);
    let out = dir.path().join("out");
    let (header, rows) = read_csv(&out.join("bands.csv"));
    assert_eq!(header, ["k", "n", "lambda"]);
    assert_eq!(rows.len(), 24);
    for row in &rows {
        let (k, n, lambda) = (row[0].unwrap(), row[1].unwrap() as usize, row[2].unwrap());
        let mut exact: Vec<f64> = (-4..=4)
            .map(|m| 4.0 * PI * PI * (m as f64 + k).powi(2))
            .collect();
        exact.sort_by(f64::total_cmp);
        let want = exact[n - 1];
        assert!((lambda - want).abs() <= 1e-6 * want.max(1.0), "k {k} n {n}: {lambda} vs {want}");
    }
    // Blocks of one band with k ascending.
    assert!(rows.windows(2).all(|w| w[0][1] < w[1][1] || w[0][0] < w[1][0]));
    let json = read_json(&out.join("bands.json"));
    assert_mirrors(&out.join("bands.csv"), json["rows"].as_array().unwrap());
    assert_eq!(fs::read_to_string(out.join("config.toml")).unwrap(), config);
    assert!(out.join("resolved_config.toml").exists());
}

#[test]
fn default_band_grid_has_630_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), "", "band"));
    let (_, rows) = read_csv(&dir.path().join("out/bands.csv"));
    assert_eq!(rows.len(), 63 * 10);
    assert_eq!(rows[62][0], Some(62.0 / 125.0));
}

#[test]
fn empty_k_grid_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "r = 3\n[k_grid]\nvalues = []\n", "band");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("empty"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "alpha = 1.0\n\n[physical]\np_min = 9\np_max = 3\n", "physical");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");

    let o = run(dir.path(), "alpha = \"one\"\n", "band");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn physical_writes_eigenvalues_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let config = "num_cells = 5\nn_phys_elements = 100\n\n[physical]\np_min = 1\np_max = 8\nexclude = []\nprofiles = [3]\n";
    ok(&run(dir.path(), config, "physical"));
    let out = dir.path().join("out");
    let json = read_json(&out.join("physical.json"));
    let rows = json["rows"].as_array().unwrap();
    assert_mirrors(&out.join("physical.csv"), rows);
    for r in rows {
        let eps2 = r["eps2_lambda"].as_f64().unwrap();
        assert!((eps2 - 0.04 * r["lambda"].as_f64().unwrap()).abs() <= 1e-12 * eps2);
    }
    let (header, profile) = read_csv(&out.join("mode_3.csv"));
    assert_eq!(header, ["x", "re", "im"]);
    assert_eq!(profile.len(), 201);
    let p = &json["profiles"][0];
    assert_eq!(p["p"], 3);
    for (i, row) in profile.iter().enumerate() {
        assert_eq!(row[1], p["re"][i].as_f64());
    }
    // Dirichlet ends.
    assert_eq!(profile[0][1], Some(0.0));
    assert_eq!(profile[200][1], Some(0.0));
}

#[test]
fn match_on_homogeneous_medium_is_exact_and_mirrored() {
    // sin(pπx) over 5 cells has k = p/10 mod 1, so p = 5 needs k = -1/2.
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "num_cells = 5\nn_phys_elements = 100\nn_bloch_elements = 20\nr = 6\n{UNIT}\n[k_grid]\nvalues = [-0.5, 0.0, 0.1, 0.2, 0.3, 0.4]\n\n[physical]\np_min = 1\np_max = 6\nexclude = [4]\n"
    );
    ok(&run(dir.path(), &config, "match"));
    let out = dir.path().join("out");
    let json = read_json(&out.join("match.json"));
    let reports = json.as_array().unwrap();
    assert_eq!(
        reports.iter().map(|r| r["p"].as_u64().unwrap()).collect::<Vec<_>>(),
        [1, 2, 3, 5, 6]
    );
    assert_mirrors(&out.join("match.csv"), reports);
    for r in reports {
        assert!(r["er_value"].as_f64().unwrap() < 1e-6, "{r}");
        assert!(r["er_vector"].as_f64().unwrap() < 1e-3, "{r}");
        assert_eq!(r["excluded"], false);
    }
}

#[test]
fn model_scan_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = "num_cells = 10\nn_phys_elements = 200\nn_bloch_elements = 20\nr = 4\n\n[physical]\np_min = 1\np_max = 40\n\n[model]\nk = 0.2\nn = 1\n";
    ok(&run(dir.path(), config, "model"));
    let out = dir.path().join("out");
    let json = read_json(&out.join("model.json"));
    assert_mirrors(&out.join("model.csv"), json["scan"].as_array().unwrap());
    assert_eq!(json["scan"].as_array().unwrap().len(), 9);
    let f_min = json["f_min"].as_f64().unwrap();
    assert!(json["scan"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["f"].as_f64().unwrap() >= f_min));
    assert!(f_min < 0.1, "{json}");
}

#[test]
fn converge_writes_one_row_per_h() {
    let dir = tempfile::tempdir().unwrap();
    let config = "n_bloch_elements = 20\nr = 6\n\n[converge]\nk = 0.3\nl = 0.6\nh = [3, 6]\nn = 2\nelements_per_cell = 16\nrank_pad = 4\n";
    ok(&run(dir.path(), config, "converge"));
    let out = dir.path().join("out");
    let json = read_json(&out.join("converge.json"));
    let rows = json["rows"].as_array().unwrap();
    assert_mirrors(&out.join("converge.csv"), rows);
    let (header, data) = read_csv(&out.join("converge.csv"));
    assert_eq!(header[5], "q_value");
    assert_eq!(data.len(), 2);
    assert_eq!(data[0][5], None);
    assert_eq!(data[1][5], json["rates"][0]["q_value"].as_f64());
    assert_eq!(data[1][6], json["rates"][0]["q_vector"].as_f64());
}
