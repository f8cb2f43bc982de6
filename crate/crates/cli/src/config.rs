//! Scenario configuration read from TOML. Every key is listed here; anything
//! else is rejected at parse time.

use std::path::{Path, PathBuf};

use cauchy_core::geometry::{DomainConfig, GammaDescriptor};
use cauchy_core::laplace::Stencil;
use cauchy_core::oracle::manufactured_case;
use cauchy_core::solver::{BasisSettings, GridSettings, PipelineSettings, QuadratureSettings, SolvabilityPolicy};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: DomainConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub basis: BasisSettings,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Exactly one of `case`, `u0_csv` or `classical_csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Manufactured case name, e.g. `POLE_OUTSIDE(2)`.
    pub case: Option<String>,
    /// Columns `s, re, im`: the trace of u on Γ against the curve parameter.
    pub u0_csv: Option<PathBuf>,
    /// Columns `x, y, re, im` on a full rectangular grid covering D.
    pub f_csv: Option<PathBuf>,
    /// Columns `s, u, dudn` with the outward normal derivative.
    pub classical_csv: Option<PathBuf>,
    /// Differentiation along Γ for classical data.
    #[serde(default = "default_stencil")]
    pub stencil: Stencil,
}

fn default_stencil() -> Stencil {
    Stencil::Panel
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n: usize,
    pub thresholds: SolvabilityPolicy,
    pub grid: GridSettings,
    pub quadrature: QuadratureSettings,
    pub force_reconstruct: bool,
    /// Triangles per side of the loop-residual grid (classical data).
    pub loop_cells: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = PipelineSettings::default();
        SolverConfig {
            n: p.n,
            thresholds: p.policy,
            grid: p.grid,
            quadrature: p.quadrature,
            force_reconstruct: p.force_reconstruct,
            loop_cells: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub emit_plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out"), emit_plots: true }
    }
}

/// Where the data comes from once the config is validated.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Case(String),
    Samples { u0: PathBuf, f: Option<PathBuf> },
    Classical(PathBuf),
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))
    }

    /// Parse a file and resolve relative data paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingFile(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.data.u0_csv);
        fix(&mut self.data.f_csv);
        fix(&mut self.data.classical_csv);
    }

    pub fn settings(&self) -> PipelineSettings {
        PipelineSettings {
            n: self.solver.n,
            policy: self.solver.thresholds,
            quadrature: self.solver.quadrature,
            basis: self.basis,
            grid: self.solver.grid,
            force_reconstruct: self.solver.force_reconstruct,
        }
    }

    /// Range checks and file existence. Geometry is validated when the
    /// domain is built.
    pub fn validate(&self) -> Result<DataSource, CliError> {
        let bad = |m: String| Err(CliError::Invalid(m));
        let d = &self.domain;
        if !(d.omega_radius.is_finite() && d.omega_radius > 0.0) {
            return bad(format!("domain.omega_radius = {}", d.omega_radius));
        }
        match d.gamma {
            GammaDescriptor::Chord { offset } if !offset.is_finite() => return bad(format!("gamma.offset = {offset}")),
            GammaDescriptor::Arc { center, radius } if !(center.is_finite() && radius.is_finite()) => {
                return bad(format!("gamma = arc({center}, {radius})"))
            }
            _ => {}
        }
        let s = &self.solver;
        let t = &s.thresholds;
        if s.n == 0 || s.n > self.basis.n_max {
            return bad(format!("solver.n = {} must lie in 1..=basis.n_max = {}", s.n, self.basis.n_max));
        }
        if s.grid.n < 2 || !(s.grid.min_dist >= 0.0) {
            return bad(format!("solver.grid = {{ n = {}, min_dist = {} }}", s.grid.n, s.grid.min_dist));
        }
        for (name, v) in [
            ("rho_max", t.rho_max),
            ("eps_tail", t.eps_tail),
            ("growth_factor", t.growth_factor),
            ("divergence_tail", t.divergence_tail),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("solver.thresholds.{name} = {v}"));
            }
        }
        if !(t.margin.is_finite() && t.margin >= 0.0) {
            return bad(format!("solver.thresholds.margin = {}", t.margin));
        }
        let q = &s.quadrature;
        if q.gamma_panels == 0 || q.gamma_order < 2 || q.area.s_panels == 0 || q.area.t_panels == 0 || q.area.order < 2 {
            return bad("solver.quadrature: panel counts must be positive and orders at least 2".into());
        }
        if s.loop_cells < 2 {
            return bad(format!("solver.loop_cells = {}", s.loop_cells));
        }
        let exists = |p: &PathBuf| {
            if p.is_file() {
                Ok(())
            } else {
                Err(CliError::MissingFile(p.display().to_string()))
            }
        };
        let data = &self.data;
        match (&data.case, &data.u0_csv, &data.classical_csv) {
            (Some(name), None, None) if data.f_csv.is_none() => {
                manufactured_case(name).map_err(|e| CliError::Invalid(e.to_string()))?;
                Ok(DataSource::Case(name.clone()))
            }
            (None, Some(u0), None) => {
                exists(u0)?;
                if let Some(f) = &data.f_csv {
                    exists(f)?;
                }
                Ok(DataSource::Samples { u0: u0.clone(), f: data.f_csv.clone() })
            }
            (None, None, Some(c)) if data.f_csv.is_none() => {
                exists(c)?;
                Ok(DataSource::Classical(c.clone()))
            }
            _ => bad("data: give exactly one of case, u0_csv (with optional f_csv) or classical_csv".into()),
        }
    }
}
