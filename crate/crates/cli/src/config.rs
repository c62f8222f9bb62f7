//! Run configuration: a TOML file whose omitted keys default to the
//! reference experiment (`a = sin(2πy) + 2`, 50 cells, 2000 elements).

use std::ops::RangeInclusive;
use std::path::PathBuf;

use bloch_homog::fem1d::CoefficientProfile;
use bloch_homog::physical::{PhysicalBc, PhysicalProblem};
use bloch_homog::pipelines::KGrid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    /// `ε = α / num_cells`.
    pub num_cells: usize,
    pub n_phys_elements: usize,
    pub n_bloch_elements: usize,
    pub num_bloch_modes: usize,
    pub r: i64,
    pub bc: PhysicalBc,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub a: CoefficientProfile,
    pub rho: CoefficientProfile,
    pub k_grid: KGrid,
    pub physical: PhysicalSection,
    #[serde(rename = "match")]
    pub matching: MatchSection,
    pub model: ModelSection,
    pub converge: ConvergeSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            num_cells: 50,
            n_phys_elements: 2000,
            n_bloch_elements: 50,
            num_bloch_modes: 10,
            r: 15,
            bc: PhysicalBc::Dirichlet,
            out: PathBuf::from("out"),
            workers: None,
            a: CoefficientProfile::reference_sine(),
            rho: CoefficientProfile::constant(1.0),
            k_grid: KGrid::Count(125),
            physical: PhysicalSection::default(),
            matching: MatchSection::default(),
            model: ModelSection::default(),
            converge: ConvergeSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalSection {
    /// First and last 1-based rank solved.
    pub p_min: usize,
    pub p_max: usize,
    /// Ranks skipped by `match`.
    pub exclude: Vec<usize>,
    /// Ranks whose nodal profiles are written to `mode_<p>.csv`.
    pub profiles: Vec<usize>,
}

impl Default for PhysicalSection {
    fn default() -> Self {
        Self {
            p_min: 40,
            p_max: 150,
            exclude: vec![50],
            profiles: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchSection {
    /// Explicit ranks; empty means the physical range minus `exclude`.
    pub p: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub k: f64,
    /// 1-based band.
    pub n: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { k: 0.16, n: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub k: f64,
    pub l: f64,
    pub h: Vec<u64>,
    /// 1-based band.
    pub n: usize,
    pub elements_per_cell: usize,
    pub rank_pad: usize,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            k: 0.3,
            l: 0.6,
            h: vec![3, 9, 15, 21],
            n: 2,
            elements_per_cell: 40,
            rank_pad: 8,
        }
    }
}

/// A parsed configuration and the text it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: String,
}

impl LoadedConfig {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(source).map_err(|e| CliError::Config(e.to_string()))?;
        let loaded = Self {
            config,
            source: source.to_string(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    /// 1-based line of `key = …` (optionally within `[section]`).
    fn line_of(&self, section: Option<&str>, key: &str) -> Option<usize> {
        let mut current: Option<String> = None;
        for (i, raw) in self.source.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(name.trim().to_string());
                if section == Some(name.trim()) && key.is_empty() {
                    return Some(i + 1);
                }
                continue;
            }
            let in_section = current.as_deref() == section;
            let matches_key = line
                .split_once('=')
                .is_some_and(|(k, _)| k.trim() == key);
            if in_section && matches_key {
                return Some(i + 1);
            }
        }
        None
    }

    fn error(&self, section: Option<&str>, key: &str, msg: impl std::fmt::Display) -> CliError {
        let name = match section {
            Some(s) if key.is_empty() => format!("[{s}]"),
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        let at = self
            .line_of(section, key)
            .or_else(|| section.and_then(|s| self.line_of(Some(s), "")));
        match at {
            Some(line) => CliError::Config(format!("line {line}: {name}: {msg}")),
            None => CliError::Config(format!("{name} (default): {msg}")),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if !(c.alpha > 0.0 && c.alpha.is_finite()) {
            return Err(self.error(None, "alpha", "must be positive and finite"));
        }
        for (key, v) in [
            ("num_cells", c.num_cells),
            ("n_phys_elements", c.n_phys_elements),
            ("n_bloch_elements", c.n_bloch_elements),
            ("num_bloch_modes", c.num_bloch_modes),
        ] {
            if v == 0 {
                return Err(self.error(None, key, "must be positive"));
            }
        }
        if c.r < 0 {
            return Err(self.error(None, "r", "must be non-negative"));
        }
        if c.workers == Some(0) {
            return Err(self.error(None, "workers", "must be positive"));
        }
        for (section, profile) in [("a", &c.a), ("rho", &c.rho)] {
            if let Err(e) = profile.bounds() {
                return Err(self.error(Some(section), "", e));
            }
        }
        if let Err(e) = self.problem() {
            // Blame whichever of the two mesh keys the file sets.
            let key = ["n_phys_elements", "num_cells", "alpha"]
                .into_iter()
                .find(|k| self.line_of(None, k).is_some())
                .unwrap_or("n_phys_elements");
            return Err(self.error(None, key, e));
        }
        if let Err(e) = c.k_grid.points() {
            return Err(self.error(Some("k_grid"), "", e));
        }
        let p = &c.physical;
        if p.p_min == 0 || p.p_max < p.p_min {
            return Err(self.error(
                Some("physical"),
                "p_min",
                format!("need 1 <= p_min <= p_max, got {}..={}", p.p_min, p.p_max),
            ));
        }
        let dofs = match c.bc {
            PhysicalBc::Dirichlet => 2 * c.n_phys_elements - 1,
            PhysicalBc::Neumann => 2 * c.n_phys_elements + 1,
        };
        if p.p_max > dofs {
            return Err(self.error(
                Some("physical"),
                "p_max",
                format!("exceeds the {dofs} available modes"),
            ));
        }
        if let Some(bad) = p.profiles.iter().find(|q| !self.p_range().contains(q)) {
            return Err(self.error(
                Some("physical"),
                "profiles",
                format!("rank {bad} outside p_min..=p_max"),
            ));
        }
        if let Some(bad) = c.matching.p.iter().find(|q| !self.p_range().contains(q)) {
            return Err(self.error(
                Some("match"),
                "p",
                format!("rank {bad} outside p_min..=p_max"),
            ));
        }
        if c.model.n == 0 || c.model.n > c.num_bloch_modes {
            return Err(self.error(
                Some("model"),
                "n",
                format!("band must be in 1..={}", c.num_bloch_modes),
            ));
        }
        if !(-0.5..0.5).contains(&c.model.k) {
            return Err(self.error(Some("model"), "k", "must lie in [-1/2, 1/2)"));
        }
        let cv = &c.converge;
        if cv.h.is_empty() {
            return Err(self.error(Some("converge"), "h", "needs at least one value"));
        }
        if cv.n == 0 || cv.elements_per_cell == 0 {
            return Err(self.error(
                Some("converge"),
                "n",
                "n and elements_per_cell must be positive",
            ));
        }
        Ok(())
    }

    /// The k grid; empty grids are rejected here rather than at load because
    /// only `band` and `match` use one.
    pub fn k_points(&self) -> Result<Vec<f64>, CliError> {
        let pts = self
            .config
            .k_grid
            .points()
            .map_err(|e| self.error(Some("k_grid"), "", e))?;
        if pts.is_empty() {
            return Err(self.error(Some("k_grid"), "", "the k grid is empty"));
        }
        Ok(pts)
    }

    pub fn p_range(&self) -> RangeInclusive<usize> {
        self.config.physical.p_min..=self.config.physical.p_max
    }

    pub fn problem(&self) -> bloch_homog::Result<PhysicalProblem> {
        let c = &self.config;
        PhysicalProblem::with_cells(
            c.alpha,
            c.num_cells,
            c.a.clone(),
            c.rho.clone(),
            c.bc,
            c.n_phys_elements,
        )
    }

    /// Ranks examined by `match`.
    pub fn match_indices(&self) -> Vec<usize> {
        let c = &self.config;
        if !c.matching.p.is_empty() {
            return c.matching.p.clone();
        }
        self.p_range()
            .filter(|p| !c.physical.exclude.contains(p))
            .collect()
    }
}
