use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::materials::{CellConfig, CellLayout, IsotropicPhase};
use crate::quasistatic::{TimeGrid, TrescaLoading};

/// Preset resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `cellres = 8`, `M = 128`, `N ∈ {4, 8, 16}`; minutes on one core.
    Desk,
    /// `cellres = 32`, `M = 1024`, `N ∈ {4, 8, 16, 32}`; hours.
    Paper,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "desk" => Some(Self::Desk),
            "paper" => Some(Self::Paper),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Desk => "desk",
            Self::Paper => "paper",
        }
    }
}

/// One experiment: cell material, loading, resolutions and tolerances.
///
/// `N` lists the cell counts per axis (`ε = 1/N`); the macro mesh of each
/// case has `(N·cellres)²` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub layout: CellLayout,
    pub phase0: IsotropicPhase,
    pub phase1: IsotropicPhase,
    pub n_cells: Vec<usize>,
    pub cellres: usize,
    pub steps: usize,
    pub t_end: f64,
    pub friction_bound: f64,
    /// Vertical body force `f²` (GN/m³); `f¹ = 0`.
    pub f2: f64,
    pub trac_a: f64,
    pub trac_b: f64,
    /// Relative tolerance of the per-step optimizer.
    pub tol_opt: f64,
    pub tol_cg: f64,
    /// Half-width of the accepted band around rate ½.
    pub tol_r: f64,
    pub out: PathBuf,
}

const KEYS: [&str; 17] = [
    "layout", "E0", "nu0", "E1", "nu1", "N", "cellres", "M", "T", "HT", "f2", "trac_a", "trac_b",
    "tol_opt", "tol_cg", "tol_r", "out",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::profile(Profile::Paper)
    }
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let loading = TrescaLoading::default();
        let reference = CellConfig::reference(CellLayout::CrossInset);
        let (n_cells, cellres, steps, tol_r) = match profile {
            Profile::Desk => (vec![4, 8, 16], 8, 128, 0.15),
            Profile::Paper => (vec![4, 8, 16, 32], 32, 1024, 0.1),
        };
        Self {
            layout: CellLayout::CrossInset,
            phase0: reference.phase0,
            phase1: reference.phase1,
            n_cells,
            cellres,
            steps,
            t_end: 1.0,
            friction_bound: loading.friction_bound,
            f2: loading.body_force[1],
            trac_a: loading.trac_a,
            trac_b: loading.trac_b,
            tol_opt: 1e-10,
            tol_cg: 1e-12,
            tol_r,
            out: PathBuf::from("out"),
        }
    }

    /// Parses `key = value` lines over `self`. Blank lines and `#` comments
    /// are skipped; unknown keys and repeated keys are errors.
    pub fn parse_over(mut self, text: &str) -> Result<Self> {
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            self.set(key, value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
            seen.push(key);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn parse(text: &str, profile: Profile) -> Result<Self> {
        Self::profile(profile).parse_over(text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, v: &str) -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}`: not a number: `{v}`")))
        }
        fn count(key: &str, v: &str) -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("`{key}`: not a positive integer: `{v}`")))
        }
        match key {
            "layout" => {
                self.layout = CellLayout::parse(value)
                    .ok_or_else(|| Error::Config(format!("unknown layout `{value}`")))?
            }
            "E0" => self.phase0.e = num(key, value)?,
            "nu0" => self.phase0.nu = num(key, value)?,
            "E1" => self.phase1.e = num(key, value)?,
            "nu1" => self.phase1.nu = num(key, value)?,
            "N" => {
                self.n_cells = value
                    .split(',')
                    .map(|v| count(key, v.trim()))
                    .collect::<Result<_>>()?;
            }
            "cellres" => self.cellres = count(key, value)?,
            "M" => self.steps = count(key, value)?,
            "T" => self.t_end = num(key, value)?,
            "HT" => self.friction_bound = num(key, value)?,
            "f2" => self.f2 = num(key, value)?,
            "trac_a" => self.trac_a = num(key, value)?,
            "trac_b" => self.trac_b = num(key, value)?,
            "tol_opt" => self.tol_opt = num(key, value)?,
            "tol_cg" => self.tol_cg = num(key, value)?,
            "tol_r" => self.tol_r = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => {
                return Err(Error::Config(format!(
                    "unknown key `{key}` (expected one of {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.cell_config()?;
        if self.n_cells.is_empty() || self.n_cells.contains(&0) {
            return Err(Error::Config("N must list positive cell counts".into()));
        }
        if self.cellres < 2 {
            return Err(Error::Config("cellres must be at least 2".into()));
        }
        if self.steps == 0 || !(self.t_end > 0.0) {
            return Err(Error::Config("need M ≥ 1 and T > 0".into()));
        }
        if !(self.friction_bound >= 0.0) {
            return Err(Error::Config("HT must be non-negative".into()));
        }
        for (name, v) in [
            ("tol_opt", self.tol_opt),
            ("tol_cg", self.tol_cg),
            ("tol_r", self.tol_r),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn cell_config(&self) -> Result<CellConfig> {
        CellConfig::new(self.layout, self.phase0, self.phase1)
    }

    pub fn loading(&self) -> TrescaLoading {
        TrescaLoading {
            body_force: [0.0, self.f2],
            trac_a: self.trac_a,
            trac_b: self.trac_b,
            friction_bound: self.friction_bound,
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid {
            t_end: self.t_end,
            steps: self.steps,
        }
    }

    /// Elements per axis of the macro mesh for `N` cells.
    pub fn mesh_size(&self, n: usize) -> usize {
        n * self.cellres
    }

    /// The same configuration restricted to one `N`.
    pub fn single(&self, n: usize) -> Self {
        Self {
            n_cells: vec![n],
            ..self.clone()
        }
    }

    /// Round-trippable `key = value` text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let n: Vec<String> = self.n_cells.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "layout = {}", self.layout.name());
        let _ = writeln!(s, "E0 = {}", self.phase0.e);
        let _ = writeln!(s, "nu0 = {}", self.phase0.nu);
        let _ = writeln!(s, "E1 = {}", self.phase1.e);
        let _ = writeln!(s, "nu1 = {}", self.phase1.nu);
        let _ = writeln!(s, "N = {}", n.join(","));
        let _ = writeln!(s, "cellres = {}", self.cellres);
        let _ = writeln!(s, "M = {}", self.steps);
        let _ = writeln!(s, "T = {}", self.t_end);
        let _ = writeln!(s, "HT = {}", self.friction_bound);
        let _ = writeln!(s, "f2 = {}", self.f2);
        let _ = writeln!(s, "trac_a = {}", self.trac_a);
        let _ = writeln!(s, "trac_b = {}", self.trac_b);
        let _ = writeln!(s, "tol_opt = {}", self.tol_opt);
        let _ = writeln!(s, "tol_cg = {}", self.tol_cg);
        let _ = writeln!(s, "tol_r = {}", self.tol_r);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}
