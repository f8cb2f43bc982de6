//! Scenario execution and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};

use cauchy_core::basis::Provenance;
use cauchy_core::geometry::{AreaResolution, DomainSpec};
use cauchy_core::kernels::ComplexInstance;
use cauchy_core::laplace::{sample_classical, solve_classical, to_holomorphic, ClassicalCauchyData, ClassicalSolution, LaplaceReconstruction};
use cauchy_core::oracle::manufactured_case;
use cauchy_core::scalar::{cabs, f256, Real, C};
use cauchy_core::solver::{
    build_basis, check_compatibility, suggest_truncation, ErrorNorms, Pipeline, PipelineSettings, Solution, SolvabilityReport,
    StageTiming, TruncationSuggestion,
};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, ScenarioConfig};
use crate::data::{load_classical, CsvSource};
use crate::error::CliError;

/// Extended precision used for coefficient extraction.
pub type High = f256;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub force_reconstruct: bool,
    pub seed_free: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    /// `case`, `csv` or `classical`.
    pub source: String,
    pub case: Option<String>,
    pub gamma_samples: usize,
    pub area_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSummary {
    pub gamma_panels: usize,
    pub gamma_order: usize,
    pub gamma_nodes: usize,
    pub area: Option<AreaResolution>,
    pub area_nodes: Option<usize>,
    pub omega_nodes: usize,
    pub precision_bits: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSummary {
    pub method: String,
    pub points: usize,
    pub non_convergent: bool,
    pub errors: Option<ErrorNorms>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSummary {
    pub points: usize,
    pub sup_error: Option<f64>,
    pub loop_residual: f64,
    pub sup_g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub config: ScenarioConfig,
    pub data: DataSummary,
    pub quadrature: QuadratureSummary,
    pub solvability: SolvabilityReport,
    /// Balance of the fitted decay against data noise amplified by `λ_N^{-1/2}`.
    pub truncation: TruncationSuggestion,
    pub reconstruction: Option<ReconstructionSummary>,
    pub potential: Option<PotentialSummary>,
    pub artifacts: Vec<String>,
    pub rng_used: bool,
    pub timings: Vec<StageTiming>,
}

impl RunReport {
    /// The report without the `timings` key.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timings");
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

/// Files written so far; removed again unless the run completes.
struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    done: bool,
}

impl Artifacts {
    fn open(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), created_dir, files: Vec::new(), done: false })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        fs::write(&path, contents)?;
        Ok(())
    }

    fn names(&self) -> Vec<String> {
        self.files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect()
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if self.done {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Read a TOML scenario, or the config echo of a `report.json`.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| CliError::MissingFile(format!("{}: {e}", path.display())))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
        let cfg = v.get("config").cloned().unwrap_or(v);
        return serde_json::from_value(cfg).map_err(|e| CliError::Parse(e.to_string()));
    }
    ScenarioConfig::load(path)
}

fn apply(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioConfig, CliError> {
    let mut cfg = cfg.clone();
    if let Some(o) = &opts.output {
        cfg.output.directory = o.clone();
    }
    if opts.force_reconstruct {
        cfg.solver.force_reconstruct = true;
    }
    for p in [&mut cfg.data.u0_csv, &mut cfg.data.f_csv, &mut cfg.data.classical_csv].into_iter().flatten() {
        if let Ok(abs) = fs::canonicalize(&*p) {
            *p = abs;
        }
    }
    Ok(cfg)
}

/// Everything computed for one scenario, before it is written out.
pub struct Outcome {
    pub spec: DomainSpec<f64>,
    pub solution: Solution,
    pub potential: Option<LaplaceReconstruction<f64>>,
    pub data: DataSummary,
    pub quadrature: QuadratureSummary,
    pub truncation: TruncationSuggestion,
    /// `(Re, Im)` of the exact solution, when known.
    pub exact: Option<Box<dyn Fn(C<f64>) -> C<f64>>>,
}

/// Relative precision of the data: `f64` for files, the working precision
/// for manufactured cases.
fn data_precision(source: &str) -> f64 {
    if source == "case" {
        2f64.powi(-236)
    } else {
        f64::EPSILON
    }
}

fn truncation(p: &Pipeline<High>, solution: &Solution, source: &str) -> TruncationSuggestion {
    let scale = p.data.u0.iter().map(|z| cabs(*z).to_f64()).fold(0.0, f64::max);
    let noise = data_precision(source) * scale.max(f64::MIN_POSITIVE);
    suggest_truncation(&solution.series, &p.basis_f64(), &p.settings.policy, noise, p.settings.n)
}

fn summary(p: &Pipeline<High>, source: &str, case: Option<String>) -> (DataSummary, QuadratureSummary) {
    let q = &p.settings.quadrature;
    (
        DataSummary {
            source: source.into(),
            case,
            gamma_samples: p.data.u0.len(),
            area_samples: p.data.f.as_ref().map(Vec::len),
        },
        QuadratureSummary {
            gamma_panels: q.gamma_panels,
            gamma_order: q.gamma_order,
            gamma_nodes: p.gamma.len(),
            area: p.area.as_ref().map(|_| q.area),
            area_nodes: p.area.as_ref().map(|a| a.len()),
            omega_nodes: p.omega.len(),
            precision_bits: 256,
        },
    )
}

fn run_classical(
    mut p: Pipeline<High>,
    data: &ClassicalCauchyData<High>,
    cfg: &ScenarioConfig,
    case: Option<String>,
    exact_u: Option<Box<dyn Fn(C<f64>) -> f64>>,
) -> Result<Outcome, CliError> {
    let source = if case.is_some() { "case" } else { "classical" };
    let ClassicalSolution { solution, potential } =
        solve_classical(&mut p, data, cfg.data.stencil, cfg.solver.loop_cells, exact_u.as_deref())?;
    let (data, quadrature) = summary(&p, source, case);
    let truncation = truncation(&p, &solution, source);
    let exact = exact_u.map(|u| Box::new(move |z| C::new(u(z), 0.0)) as Box<dyn Fn(C<f64>) -> C<f64>>);
    Ok(Outcome { spec: p.spec.clone(), solution, potential, data, quadrature, truncation, exact })
}

/// Build and solve the discretised problem.
pub fn execute(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let source = cfg.validate()?;
    let st: PipelineSettings = cfg.settings();
    match source {
        DataSource::Case(name) => {
            let case = manufactured_case(&name).map_err(|e| CliError::Invalid(e.to_string()))?;
            if case.is_classical() {
                let p = Pipeline::<High>::prepare(&cfg.domain, &st, false)?;
                let data = sample_classical(&p.gamma, |z| case.classical(z).expect("classical case"), p.gamma.len() / 2);
                let c = case.clone();
                let u = Box::new(move |z: C<f64>| c.classical(z).expect("classical case").0);
                return run_classical(p, &data, cfg, Some(case.name()), Some(u));
            }
            let p = Pipeline::<High>::new(&cfg.domain, &st, &case)?;
            let spec = p.spec.clone();
            let exact: Option<Box<dyn Fn(C<f64>) -> C<f64>>> = case.exact(&spec, C::new(0.0, 0.0)).map(|_| {
                let (c, s) = (case.clone(), spec.clone());
                Box::new(move |z| c.exact(&s, z).expect("exact solution")) as Box<dyn Fn(C<f64>) -> C<f64>>
            });
            let solution = p.run(exact.as_deref())?;
            let (data, quadrature) = summary(&p, "case", Some(case.name()));
            let truncation = truncation(&p, &solution, "case");
            Ok(Outcome { spec, solution, potential: None, data, quadrature, truncation, exact })
        }
        DataSource::Samples { u0, f } => {
            let src = CsvSource::load(&u0, f.as_deref())?;
            let mut p = Pipeline::<High>::prepare(&cfg.domain, &st, src.f.is_some())?;
            if let Some(g) = &src.f {
                if !g.covers(p.spec.bounding_box()) {
                    return Err(CliError::Data("f_csv grid does not cover D".into()));
                }
            }
            p.sample(&src);
            let solution = p.run(None)?;
            let (data, quadrature) = summary(&p, "csv", None);
            let truncation = truncation(&p, &solution, "csv");
            Ok(Outcome { spec: p.spec.clone(), solution, potential: None, data, quadrature, truncation, exact: None })
        }
        DataSource::Classical(path) => {
            let p = Pipeline::<High>::prepare(&cfg.domain, &st, false)?;
            let data = load_classical(&path, &p.gamma)?;
            run_classical(p, &data, cfg, None, None)
        }
    }
}

fn coefficients_csv(solution: &Solution) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["nu", "re_c", "im_c", "partial_sum"]).map_err(err)?;
    for (i, (c, s)) in solution.series.coefficients.iter().zip(&solution.series.partial_sums).enumerate() {
        w.write_record([(i + 1).to_string(), format!("{:e}", c.re), format!("{:e}", c.im), format!("{s:e}")])
            .map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn field_csv(out: &Outcome) -> Result<Option<Vec<u8>>, CliError> {
    let (points, values): (Vec<C<f64>>, Vec<C<f64>>) = if let Some(p) = &out.potential {
        (p.points.clone(), p.u.iter().map(|u| C::new(*u, 0.0)).collect())
    } else if let Some(r) = &out.solution.reconstruction {
        (r.points.clone(), r.values.clone())
    } else {
        return Ok(None);
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    let mut header = vec!["x", "y", "re_u", "im_u"];
    if out.exact.is_some() {
        header.extend(["re_exact", "im_exact", "abs_error"]);
    }
    w.write_record(&header).map_err(err)?;
    for (z, v) in points.iter().zip(&values) {
        let mut row = vec![format!("{:e}", z.re), format!("{:e}", z.im), format!("{:e}", v.re), format!("{:e}", v.im)];
        if let Some(exact) = &out.exact {
            let e = exact(*z);
            row.extend([format!("{:e}", e.re), format!("{:e}", e.im), format!("{:e}", (v - e).norm())]);
        }
        w.write_record(&row).map_err(err)?;
    }
    Ok(Some(w.into_inner().map_err(|e| CliError::Data(e.to_string()))?))
}

fn plot_script(with_field: bool, with_error: bool) -> String {
    let mut s = String::from(
        "set datafile separator ','\n\
         set terminal pngcairo size 1200,500\n\
         set output 'plots.png'\n\
         set multiplot layout 1,2\n\
         set logscale y\n\
         set xlabel 'nu'\n\
         set ylabel '|c_nu|'\n\
         plot 'coefficients.csv' skip 1 using 1:(sqrt($2**2 + $3**2)) with linespoints title '|c_nu|'\n\
         unset logscale y\n",
    );
    if with_field {
        let col = if with_error { "7" } else { "(sqrt($3**2 + $4**2))" };
        let title = if with_error { "abs error" } else { "|u|" };
        s.push_str(&format!(
            "set xlabel 'x'\nset ylabel 'y'\nset size ratio -1\n\
             plot 'field.csv' skip 1 using 1:2:{col} with points pt 7 ps 0.6 palette title '{title}'\n"
        ));
    }
    s.push_str("unset multiplot\n");
    s
}

/// `solve`: run a scenario and write its artifacts.
pub fn solve(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = apply(cfg, opts)?;
    let out = execute(&cfg)?;
    let mut files = Artifacts::open(&cfg.output.directory)?;
    files.write("coefficients.csv", &coefficients_csv(&out.solution)?)?;
    let field = field_csv(&out)?;
    if let Some(f) = &field {
        files.write("field.csv", f)?;
    }
    if cfg.output.emit_plots {
        files.write("plot.gp", plot_script(field.is_some(), out.exact.is_some()).as_bytes())?;
    }
    let mut artifacts = files.names();
    artifacts.push("report.json".into());
    let report = RunReport {
        tool: ToolInfo { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() },
        config: cfg.clone(),
        data: out.data,
        quadrature: out.quadrature,
        solvability: out.solution.report.clone(),
        truncation: out.truncation,
        reconstruction: out.solution.reconstruction.as_ref().map(|r| ReconstructionSummary {
            method: "series".into(),
            points: r.points.len(),
            non_convergent: r.non_convergent,
            errors: if out.potential.is_some() { None } else { r.errors },
        }),
        potential: out.potential.as_ref().map(|p| PotentialSummary {
            points: p.points.len(),
            sup_error: p.sup_error,
            loop_residual: p.loop_residual,
            sup_g: p.sup_g,
        }),
        artifacts,
        rng_used: false,
        timings: out.solution.timings.clone(),
    };
    if opts.seed_free && report.rng_used {
        return Err(CliError::SeedFree("a stage drew random numbers".into()));
    }
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?;
    files.write("report.json", json.as_bytes())?;
    files.done = true;
    Ok(report)
}

/// `check`: compatibility and data sanity, as printable lines.
pub fn check(cfg: &ScenarioConfig) -> Result<Vec<String>, CliError> {
    let source = cfg.validate()?;
    let st = cfg.settings();
    let mut lines = Vec::new();
    let compat = check_compatibility(ComplexInstance::DolbeaultN1, None, 0.0)?;
    let p = match &source {
        DataSource::Case(name) => {
            let case = manufactured_case(name).map_err(|e| CliError::Invalid(e.to_string()))?;
            let mut p = Pipeline::<High>::prepare(&cfg.domain, &st, case.has_f())?;
            if case.is_classical() {
                let data = sample_classical(&p.gamma, |z| case.classical(z).expect("classical case"), 0);
                p.set_data(to_holomorphic(&p.spec_hi, &p.gamma, &data, cfg.data.stencil)?)?;
            } else {
                p.sample(&case);
            }
            lines.push(format!("data: case {}", case.name()));
            p
        }
        DataSource::Samples { u0, f } => {
            let src = CsvSource::load(u0, f.as_deref())?;
            let mut p = Pipeline::<High>::prepare(&cfg.domain, &st, src.f.is_some())?;
            if let Some(g) = &src.f {
                if !g.covers(p.spec.bounding_box()) {
                    return Err(CliError::Data("f_csv grid does not cover D".into()));
                }
                lines.push(format!("data: f grid {}x{}", g.xs.len(), g.ys.len()));
            }
            lines.push(format!("data: {} u0 samples in s ∈ [{}, {}]", src.u0.len(), src.u0.xs[0], src.u0.xs[src.u0.len() - 1]));
            p.sample(&src);
            p
        }
        DataSource::Classical(path) => {
            let mut p = Pipeline::<High>::prepare(&cfg.domain, &st, false)?;
            let data = load_classical(path, &p.gamma)?;
            p.set_data(to_holomorphic(&p.spec_hi, &p.gamma, &data, cfg.data.stencil)?)?;
            lines.push(format!("data: classical samples from {}", path.display()));
            p
        }
    };
    let finite = p.data.u0.iter().chain(p.data.f.iter().flatten()).all(|z| z.re.is_finite() && z.im.is_finite());
    if !finite {
        return Err(CliError::Data("non-finite sample".into()));
    }
    lines.push(format!(
        "data: {} samples on Gamma{}, all finite",
        p.data.u0.len(),
        p.data.f.as_ref().map_or(String::new(), |f| format!(", {} in D", f.len()))
    ));
    if compat.vacuous {
        lines.push("compatibility: vacuous (E₂=0)".into());
    } else {
        lines.push(format!("compatibility: max residual {:e}", compat.max_residual));
    }
    Ok(lines)
}

/// `basis`: the first `n_max` elements as CSV `nu, degree, lambda`.
pub fn basis_table(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let spec = cauchy_core::geometry::make_domain::<High>(&cfg.domain)?;
    let basis = build_basis(&spec, &cfg.basis)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(["nu", "degree", "lambda", "provenance"]).map_err(err)?;
    let prov = match basis.provenance {
        Provenance::Analytic => "analytic",
        Provenance::Numeric { .. } => "numeric",
    };
    for (k, l) in basis.test_norms.iter().enumerate() {
        w.write_record([(k + 1).to_string(), basis.dominant_degree(k).to_string(), format!("{:e}", l.to_f64()), prov.into()])
            .map_err(err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Data(e.to_string()))?).map_err(|e| CliError::Data(e.to_string()))
}

/// `basis` written to `<output>/basis.csv`.
pub fn basis(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let cfg = apply(cfg, opts)?;
    let table = basis_table(&cfg)?;
    let mut files = Artifacts::open(&cfg.output.directory)?;
    files.write("basis.csv", table.as_bytes())?;
    files.done = true;
    Ok(cfg.output.directory.join("basis.csv"))
}
