//! The Cauchy-problem pipeline: Fourier coefficients of `F = M ũ₀ + T f` on
//! ω, the solvability verdict, the extension `𝓕_N = Σ c_ν b_ν` and the
//! reconstruction `u = F − 𝓕_N` in D, in series and in Carleman form.
//!
//! Coefficients are amplified by `λ_ν^{-1/2}`, so [`Pipeline`] extracts them
//! in a high precision `H` and evaluates fields in D in `f64` on the same
//! quadrature rounded down.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{disc_rule_for_degree, make_analytic_basis, make_numeric_basis, BasisError, DobBasis, Provenance};
use crate::geometry::{
    boundary_rule, disc_rule, domain_rule, AreaResolution, AreaRule, BoundaryPart, BoundaryRule, DomainConfig,
    DomainSpec, GeometryError, Region,
};
use crate::kernels::{carleman_regular_part, ComplexInstance, KernelError, KernelForm};
use crate::potentials::{volume_integral, CauchyData, Density, PotentialError, PotentialField};
use crate::scalar::{cabs, cast, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("{found} coefficients, the policy needs at least {required}")]
    TooFewTerms { found: usize, required: usize },
    #[error("point ({x}, {y}) is not in D away from the boundary margin")]
    PointOutsideD { x: f64, y: f64 },
    #[error("{found} samples for {expected} quadrature nodes")]
    SampleMismatch { expected: usize, found: usize },
    #[error("data are not solvable (fitted ratio {rho_hat:.4}); reconstruction needs the force flag")]
    NotSolvable { rho_hat: f64 },
    #[error("curl check needs at least 3x3 grid points")]
    GridTooCoarse,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

// ---------------------------------------------------------------------------
// Compatibility

/// A planar vector field `(f₁, f₂)` encoded as `f₁ + i f₂` on a uniform grid,
/// row-major with `x` fastest.
#[derive(Clone, Debug)]
pub struct VectorGrid {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<C<f64>>,
}

impl VectorGrid {
    pub fn sample(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> C<f64>) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(x0 + h * i as f64, y0 + h * j as f64));
            }
        }
        VectorGrid { x0, y0, h, nx, ny, values }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: f64,
    pub y: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub vacuous: bool,
    pub note: String,
    pub max_residual: f64,
    pub violations: Vec<Violation>,
}

/// Necessary conditions on `f` for solvability. The ∂̄ complex in one
/// variable ends at `E₂ = 0`, so nothing is checked there; for the gradient
/// the centred-difference curl of `f` is compared with `tolerance`.
pub fn check_compatibility(
    instance: ComplexInstance,
    field: Option<&VectorGrid>,
    tolerance: f64,
) -> Result<CompatibilityReport, SolverError> {
    match (instance, field) {
        (ComplexInstance::DolbeaultN1, _) | (ComplexInstance::Derham2dDeg0, None) => Ok(CompatibilityReport {
            vacuous: true,
            note: "E_{i+2} = 0: condition vacuous".into(),
            max_residual: 0.0,
            violations: vec![],
        }),
        (ComplexInstance::Derham2dDeg0, Some(g)) => {
            if g.nx < 3 || g.ny < 3 {
                return Err(SolverError::GridTooCoarse);
            }
            let at = |i: usize, j: usize| g.values[j * g.nx + i];
            let mut out = CompatibilityReport {
                vacuous: false,
                note: "curl f = 0 checked by centred differences".into(),
                max_residual: 0.0,
                violations: vec![],
            };
            for j in 1..g.ny - 1 {
                for i in 1..g.nx - 1 {
                    let dx_f2 = (at(i + 1, j).im - at(i - 1, j).im) / (2.0 * g.h);
                    let dy_f1 = (at(i, j + 1).re - at(i, j - 1).re) / (2.0 * g.h);
                    let r = (dx_f2 - dy_f1).abs();
                    out.max_residual = out.max_residual.max(r);
                    if r > tolerance {
                        out.violations.push(Violation { x: g.x0 + g.h * i as f64, y: g.y0 + g.h * j as f64, residual: r });
                    }
                }
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Coefficients

#[derive(Clone, Debug)]
pub struct CoefficientSeries<R> {
    /// `c_ν`, ν = 1..N.
    pub coefficients: Vec<C<R>>,
    /// `S_N = Σ_{ν≤N} |c_ν|²`.
    pub partial_sums: Vec<R>,
    pub provenance: Provenance,
}

impl<R: Real> CoefficientSeries<R> {
    pub fn new(coefficients: Vec<C<R>>, provenance: Provenance) -> Self {
        let mut s = R::zero();
        let partial_sums = coefficients
            .iter()
            .map(|c| {
                s += c.norm_sqr();
                s
            })
            .collect();
        CoefficientSeries { coefficients, partial_sums, provenance }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn truncate(&self, n: usize) -> Self {
        CoefficientSeries::new(self.coefficients[..n.min(self.len())].to_vec(), self.provenance)
    }

    pub fn convert<S: Real>(&self) -> CoefficientSeries<S> {
        CoefficientSeries {
            coefficients: self.coefficients.iter().map(|c| cast(*c)).collect(),
            partial_sums: self.partial_sums.iter().map(|s| S::from_f64(s.to_f64())).collect(),
            provenance: self.provenance,
        }
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| cabs(*c).to_f64()).collect()
    }
}

/// `c_ν = (F, b_ν)_ω / λ_ν` from values of `F` at the nodes of the ω rule.
pub fn coefficients_from_samples<R: Real>(
    values: &[C<R>],
    basis: &DobBasis<R>,
    omega_rule: &AreaRule<R>,
    n: usize,
) -> Result<CoefficientSeries<R>, SolverError> {
    basis.require(n)?;
    if values.len() != omega_rule.len() {
        return Err(SolverError::SampleMismatch { expected: omega_rule.len(), found: values.len() });
    }
    let mut acc = vec![C::new(R::zero(), R::zero()); n];
    for ((z, w), v) in omega_rule.nodes.iter().zip(&omega_rule.weights).zip(values) {
        let fv = *v * *w;
        for (a, b) in acc.iter_mut().zip(basis.eval_first(n, *z)) {
            *a += fv * b.conj();
        }
    }
    for (a, l) in acc.iter_mut().zip(&basis.test_norms) {
        *a = *a / *l;
    }
    Ok(CoefficientSeries::new(acc, basis.provenance))
}

/// Coefficients of a potential field, evaluated on ω through its local
/// expansion about the origin.
pub fn compute_coefficients<R: Real>(
    field: &PotentialField<R>,
    basis: &DobBasis<R>,
    omega_rule: &AreaRule<R>,
    n: usize,
) -> Result<CoefficientSeries<R>, SolverError> {
    basis.require(n)?;
    let radius = omega_rule.nodes.iter().map(|z| cabs(*z)).fold(R::zero(), R::max);
    let values = field.eval_in_disc(C::new(R::zero(), R::zero()), radius, &omega_rule.nodes)?;
    coefficients_from_samples(&values, basis, omega_rule, n)
}

// ---------------------------------------------------------------------------
// Verdict

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Solvable,
    NotSolvable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Solvable => "SOLVABLE",
            Verdict::NotSolvable => "NOT_SOLVABLE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Finite-N thresholds for the convergence of `Σ |c_ν|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolvabilityPolicy {
    /// SOLVABLE needs `ρ̂ < rho_max`.
    pub rho_max: f64,
    /// NOT_SOLVABLE when `ρ̂ > 1 + margin`.
    pub margin: f64,
    /// SOLVABLE needs `(S_N − S_{N/2})/S_N < eps_tail`.
    pub eps_tail: f64,
    /// NOT_SOLVABLE when `S_N / S_{N/2} > growth_factor`.
    pub growth_factor: f64,
    /// NOT_SOLVABLE when the relative tail increment reaches this.
    pub divergence_tail: f64,
    pub min_terms: usize,
    /// Fit window; `max(4, N/4)` when absent.
    pub window: Option<usize>,
}

impl Default for SolvabilityPolicy {
    fn default() -> Self {
        SolvabilityPolicy {
            rho_max: 0.95,
            margin: 0.05,
            eps_tail: 1e-3,
            growth_factor: 10.0,
            divergence_tail: 0.25,
            min_terms: 16,
            window: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub verdict: Verdict,
    pub rho_hat: f64,
    pub tail_increment: f64,
    pub growth: f64,
    pub n_terms: usize,
    pub window: usize,
    /// Index ν of the largest coefficient before the window.
    pub anchor: usize,
    pub policy: SolvabilityPolicy,
}

/// Decay ratio of `|c_ν|`: slope of `log|c_ν| − log|c_a|` against `ν − a`
/// through the origin over the last `window` terms, where `a` maximises
/// `|c_ν|` before the window. Returns `(ρ̂, a)`; zero terms are skipped.
pub fn fit_decay(magnitudes: &[f64], window: usize) -> (f64, usize) {
    let n = magnitudes.len();
    let w = window.clamp(1, n.saturating_sub(1).max(1));
    let head = &magnitudes[..n - w];
    let anchor = head
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .fold(None::<(usize, f64)>, |best, (i, m)| match best {
            Some((_, b)) if b >= *m => best,
            _ => Some((i, *m)),
        });
    let Some((a, ma)) = anchor else {
        return (0.0, 1);
    };
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, m) in magnitudes.iter().enumerate().skip(n - w) {
        if *m > 0.0 {
            let x = (i - a) as f64;
            sxy += x * (m.ln() - ma.ln());
            sxx += x * x;
        }
    }
    let rho = if sxx > 0.0 { (sxy / sxx).exp() } else { 0.0 };
    (rho, a + 1)
}

pub fn solvability_indicator<R: Real>(
    series: &CoefficientSeries<R>,
    policy: &SolvabilityPolicy,
) -> Result<SolvabilityReport, SolverError> {
    let n = series.len();
    if n < policy.min_terms.max(2) {
        return Err(SolverError::TooFewTerms { found: n, required: policy.min_terms.max(2) });
    }
    let window = policy.window.unwrap_or((n / 4).max(4)).min(n - 1);
    let mags = series.magnitudes();
    let s_n = series.partial_sums[n - 1].to_f64();
    let s_half = series.partial_sums[n / 2 - 1].to_f64();
    let mut report = SolvabilityReport {
        verdict: Verdict::Solvable,
        rho_hat: 0.0,
        tail_increment: 0.0,
        growth: 1.0,
        n_terms: n,
        window,
        anchor: 1,
        policy: *policy,
    };
    if s_n == 0.0 {
        return Ok(report);
    }
    let (rho, anchor) = fit_decay(&mags, window);
    report.rho_hat = rho;
    report.anchor = anchor;
    report.tail_increment = (s_n - s_half) / s_n;
    report.growth = if s_half > 0.0 { s_n / s_half } else { f64::INFINITY };
    report.verdict = if rho > 1.0 + policy.margin
        || report.growth > policy.growth_factor
        || report.tail_increment >= policy.divergence_tail
    {
        Verdict::NotSolvable
    } else if rho < policy.rho_max && report.tail_increment < policy.eps_tail {
        Verdict::Solvable
    } else {
        Verdict::Inconclusive
    };
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSuggestion {
    pub n: usize,
    pub model_amplitude: f64,
    pub rho_hat: f64,
    pub noise: f64,
    pub predicted_error: f64,
}

/// `N* = argmin_{N ≤ cap} A ρ̂^N + noise·λ_N^{-1/2}` with `A ρ̂^a = |c_a|` at
/// the fitted anchor. Never exceeds `cap` or the series length.
pub fn suggest_truncation<R: Real>(
    series: &CoefficientSeries<R>,
    basis: &DobBasis<R>,
    policy: &SolvabilityPolicy,
    noise: f64,
    cap: usize,
) -> TruncationSuggestion {
    let n = series.len().min(basis.len());
    let mags = series.magnitudes();
    let window = policy.window.unwrap_or((n / 4).max(4)).min(n.saturating_sub(1).max(1));
    let (rho, anchor) = if n >= 2 { fit_decay(&mags[..n], window) } else { (0.0, 1) };
    let amp = if rho > 0.0 { mags[anchor - 1] / rho.powi(anchor as i32) } else { 0.0 };
    let mut best = TruncationSuggestion { n: 1, model_amplitude: amp, rho_hat: rho, noise, predicted_error: f64::INFINITY };
    for k in 1..=cap.min(n).max(1) {
        let e = amp * rho.powi(k as i32) + noise / basis.test_norms[k - 1].to_f64().sqrt();
        if e < best.predicted_error {
            best.n = k;
            best.predicted_error = e;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Extension and reconstruction

/// `𝓕_N(z) = Σ_{ν≤N} c_ν b_ν(z)`.
pub fn extend<R: Real>(series: &CoefficientSeries<R>, basis: &DobBasis<R>, z: C<R>, n: usize) -> C<R> {
    let n = n.min(series.len());
    basis.eval_first(n, z).iter().zip(&series.coefficients).fold(C::new(R::zero(), R::zero()), |a, (b, c)| a + *b * *c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Series,
    Carleman,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub sup: f64,
    /// Root mean square over the grid.
    pub l2: f64,
}

#[derive(Clone, Debug)]
pub struct Reconstruction<R> {
    pub method: Method,
    pub points: Vec<C<R>>,
    pub values: Vec<C<R>>,
    pub reference: Option<Vec<C<R>>>,
    pub errors: Option<ErrorNorms>,
    /// Set when the series was not judged convergent.
    pub non_convergent: bool,
}

impl<R: Real> Reconstruction<R> {
    pub fn new(method: Method, points: Vec<C<R>>, values: Vec<C<R>>) -> Self {
        Reconstruction { method, points, values, reference: None, errors: None, non_convergent: false }
    }

    pub fn attach_reference(&mut self, exact: &dyn Fn(C<R>) -> C<R>) {
        let r: Vec<C<R>> = self.points.iter().map(|z| exact(*z)).collect();
        let errs: Vec<f64> = r.iter().zip(&self.values).map(|(a, b)| cabs(*a - *b).to_f64()).collect();
        let sup = errs.iter().cloned().fold(0.0, f64::max);
        let l2 = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len().max(1) as f64).sqrt();
        self.reference = Some(r);
        self.errors = Some(ErrorNorms { sup, l2 });
    }
}

fn check_in_d<R: Real>(spec: &DomainSpec<R>, z: C<R>) -> Result<(), SolverError> {
    if spec.classify(z) == Region::InD {
        Ok(())
    } else {
        Err(SolverError::PointOutsideD { x: z.re.to_f64(), y: z.im.to_f64() })
    }
}

/// `u = F − 𝓕_N` on grid points of D.
pub fn reconstruct_series<R: Real>(
    spec: &DomainSpec<R>,
    field: &PotentialField<R>,
    series: &CoefficientSeries<R>,
    basis: &DobBasis<R>,
    n: usize,
    grid: &[C<R>],
) -> Result<Reconstruction<R>, SolverError> {
    basis.require(n)?;
    if series.len() < n {
        return Err(SolverError::TooFewTerms { found: series.len(), required: n });
    }
    let mut values = Vec::with_capacity(grid.len());
    for &z in grid {
        check_in_d(spec, z)?;
        values.push(field.eval(z)? - extend(series, basis, z, n));
    }
    Ok(Reconstruction::new(Method::Series, grid.to_vec(), values))
}

/// `Σ_j w_j f_j (K − 𝔠_N)(ζ_j, x)` over an area rule on D.
pub fn carleman_regular_integral<R: Real>(
    area: &AreaRule<R>,
    f: &[C<R>],
    basis: &DobBasis<R>,
    n: usize,
    x: C<R>,
    omega_rule: Option<&AreaRule<R>>,
) -> Result<C<R>, SolverError> {
    if f.len() != area.len() {
        return Err(SolverError::SampleMismatch { expected: area.len(), found: f.len() });
    }
    let mut acc = C::new(R::zero(), R::zero());
    for ((zeta, w), fv) in area.nodes.iter().zip(&area.weights).zip(f) {
        acc += *fv * *w * carleman_regular_part(basis, n, *zeta, x, KernelForm::Closed, omega_rule)?;
    }
    Ok(acc)
}

/// `u_N(x) = ∫_D 𝔠_N(ζ, x) f(ζ) dA(ζ)` for data with `u₀ = 0`. The singular
/// part `K` is integrated target-adapted, which makes this `T f(x)` minus
/// the smooth remainder of the kernel.
pub fn reconstruct_carleman<R: Real>(
    spec: &DomainSpec<R>,
    area: &AreaRule<R>,
    f: &[C<R>],
    basis: &DobBasis<R>,
    n: usize,
    x: C<R>,
    omega_rule: Option<&AreaRule<R>>,
) -> Result<C<R>, SolverError> {
    check_in_d(spec, x)?;
    let regular = carleman_regular_integral(area, f, basis, n, x, omega_rule)?;
    Ok(volume_integral(area, Density::Samples(f), x) - regular)
}

// ---------------------------------------------------------------------------
// Pipeline

/// Cauchy data as functions: `u₀` at points of Γ (with curve parameter) and
/// `f = ∂̄u` in D.
pub trait CauchySource<R: Real> {
    fn u0(&self, z: C<R>, s: R) -> C<R>;
    fn f(&self, _z: C<R>) -> C<R> {
        C::new(R::zero(), R::zero())
    }
    fn has_f(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Analytic,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSettings {
    pub kind: BasisKind,
    pub n_max: usize,
    /// Monomial degree cutoff of the numeric basis; `n_max − 1` when absent.
    pub degree_cutoff: Option<usize>,
}

impl Default for BasisSettings {
    fn default() -> Self {
        BasisSettings { kind: BasisKind::Analytic, n_max: 60, degree_cutoff: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSettings {
    pub gamma_panels: usize,
    pub gamma_order: usize,
    pub area: AreaResolution,
    /// Radial and angular nodes of the ω rule; sized from N when absent.
    pub omega_radial: Option<usize>,
    pub omega_angular: Option<usize>,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            gamma_panels: 32,
            gamma_order: 40,
            area: AreaResolution::default(),
            omega_radial: None,
            omega_angular: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    /// Points per side of the bounding box of D.
    pub n: usize,
    pub min_dist: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { n: 41, min_dist: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSettings {
    /// Truncation N.
    pub n: usize,
    pub policy: SolvabilityPolicy,
    pub quadrature: QuadratureSettings,
    pub basis: BasisSettings,
    pub grid: GridSettings,
    pub force_reconstruct: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            n: 40,
            policy: SolvabilityPolicy::default(),
            quadrature: QuadratureSettings::default(),
            basis: BasisSettings::default(),
            grid: GridSettings::default(),
            force_reconstruct: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything the pipeline produced, in `f64`.
#[derive(Clone, Debug)]
pub struct Solution {
    pub series: CoefficientSeries<f64>,
    pub report: SolvabilityReport,
    pub reconstruction: Option<Reconstruction<f64>>,
    pub timings: Vec<StageTiming>,
}

/// Discretised problem: rules and data in precision `H`.
pub struct Pipeline<H: Real> {
    pub spec_hi: DomainSpec<H>,
    pub spec: DomainSpec<f64>,
    pub gamma: BoundaryRule<H>,
    pub area: Option<AreaRule<H>>,
    pub omega: AreaRule<H>,
    pub basis: DobBasis<H>,
    pub data: CauchyData<H>,
    pub settings: PipelineSettings,
    pub timings: Vec<StageTiming>,
}

fn timed<T>(timings: &mut Vec<StageTiming>, stage: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    timings.push(StageTiming { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
    out
}

impl<H: Real> Pipeline<H> {
    /// Rules and basis for a domain, with zero data.
    pub fn prepare(cfg: &DomainConfig, settings: &PipelineSettings, with_area: bool) -> Result<Self, SolverError> {
        let mut timings = Vec::new();
        let spec_hi = crate::geometry::make_domain::<H>(cfg)?;
        let spec = crate::geometry::make_domain::<f64>(cfg)?;
        let q = &settings.quadrature;
        let n_rule = settings.n.max(settings.basis.n_max);
        let gamma = timed(&mut timings, "gamma_rule", || {
            boundary_rule(&spec_hi, BoundaryPart::Gamma, q.gamma_panels, q.gamma_order)
        });
        let area = if with_area {
            Some(timed(&mut timings, "area_rule", || domain_rule(&spec_hi, q.area))?)
        } else {
            None
        };
        let omega = timed(&mut timings, "omega_rule", || {
            disc_rule(
                C::new(H::zero(), H::zero()),
                spec_hi.test_ball_radius,
                q.omega_radial.unwrap_or(n_rule / 2 + 8),
                q.omega_angular.unwrap_or(2 * n_rule + 96),
            )
        });
        let basis = timed(&mut timings, "basis", || build_basis(&spec_hi, &settings.basis))?;
        let data = CauchyData { u0: vec![C::new(H::zero(), H::zero()); gamma.len()], f: None, zero_extension: true };
        Ok(Pipeline { spec_hi, spec, gamma, area, omega, basis, data, settings: *settings, timings })
    }

    pub fn new(
        cfg: &DomainConfig,
        settings: &PipelineSettings,
        source: &dyn CauchySource<H>,
    ) -> Result<Self, SolverError> {
        let mut p = Self::prepare(cfg, settings, source.has_f())?;
        p.sample(source);
        Ok(p)
    }

    /// Sample a source on the rules.
    pub fn sample(&mut self, source: &dyn CauchySource<H>) {
        let (gamma, area) = (&self.gamma, &self.area);
        self.data = timed(&mut self.timings, "sampling", || {
            let u0 = gamma.nodes.iter().zip(&gamma.params).map(|(z, s)| source.u0(*z, *s)).collect();
            let f = area.as_ref().map(|a| a.nodes.iter().map(|z| source.f(*z)).collect());
            CauchyData { u0, f, zero_extension: true }
        });
    }

    /// Install data sampled elsewhere on [`Pipeline::gamma`] and [`Pipeline::area`].
    pub fn set_data(&mut self, data: CauchyData<H>) -> Result<(), SolverError> {
        data.check(&self.gamma, self.area.as_ref())?;
        if data.f.is_some() && self.area.is_none() {
            return Err(SolverError::SampleMismatch { expected: 0, found: data.f.as_ref().map_or(0, |f| f.len()) });
        }
        self.data = data;
        Ok(())
    }

    /// `F` in the high precision.
    pub fn field_hi(&self) -> Result<PotentialField<H>, SolverError> {
        Ok(PotentialField::from_data(&self.spec_hi, &self.gamma, self.area.as_ref(), &self.data)?)
    }

    /// `F` in `f64` on the rounded rules.
    pub fn field(&self) -> Result<PotentialField<f64>, SolverError> {
        let gamma = self.gamma.convert::<f64>();
        let area = self.area.as_ref().map(|a| a.convert::<f64>());
        let data = CauchyData {
            u0: self.data.u0.iter().map(|z| cast(*z)).collect(),
            f: self.data.f.as_ref().map(|f| f.iter().map(|z| cast(*z)).collect()),
            zero_extension: self.data.zero_extension,
        };
        Ok(PotentialField::from_data(&self.spec, &gamma, area.as_ref(), &data)?)
    }

    pub fn basis_f64(&self) -> DobBasis<f64> {
        match self.basis.provenance {
            Provenance::Analytic => make_analytic_basis(&self.spec, self.basis.len()),
            Provenance::Numeric { .. } => self.basis.convert(),
        }
    }

    pub fn coefficients(&self, n: usize) -> Result<CoefficientSeries<H>, SolverError> {
        compute_coefficients(&self.field_hi()?, &self.basis, &self.omega, n)
    }

    /// Interior grid of D from the settings.
    pub fn grid(&self) -> Vec<C<f64>> {
        self.spec.interior_grid(self.settings.grid.n, self.settings.grid.min_dist)
    }

    /// Carleman-form values at points of D: `T f(x)` in `f64`, the smooth
    /// kernel remainder in `H`.
    pub fn carleman(&self, n: usize, points: &[C<f64>]) -> Result<Vec<C<f64>>, SolverError> {
        let (Some(area), Some(f)) = (&self.area, &self.data.f) else {
            return Ok(vec![C::new(0.0, 0.0); points.len()]);
        };
        let area64 = area.convert::<f64>();
        let f64s: Vec<C<f64>> = f.iter().map(|z| cast(*z)).collect();
        let omega = (self.basis.provenance != Provenance::Analytic).then_some(&self.omega);
        points
            .iter()
            .map(|&x| {
                check_in_d(&self.spec, x)?;
                let reg = carleman_regular_integral(area, f, &self.basis, n, cast(x), omega)?;
                Ok(volume_integral(&area64, Density::Samples(&f64s), x) - cast(reg))
            })
            .collect()
    }

    /// Coefficients, verdict and (unless refused) the series reconstruction on
    /// the interior grid.
    pub fn run(&self, reference: Option<&dyn Fn(C<f64>) -> C<f64>>) -> Result<Solution, SolverError> {
        let mut timings = self.timings.clone();
        let n = self.settings.n;
        let series_hi = timed(&mut timings, "coefficients", || self.coefficients(n))?;
        let series = series_hi.convert::<f64>();
        let report = solvability_indicator(&series_hi, &self.settings.policy)?;
        let refuse = report.verdict == Verdict::NotSolvable && !self.settings.force_reconstruct;
        let reconstruction = if refuse {
            None
        } else {
            let mut r = timed(&mut timings, "reconstruction", || -> Result<_, SolverError> {
                let field = self.field()?;
                reconstruct_series(&self.spec, &field, &series, &self.basis_f64(), n, &self.grid())
            })?;
            r.non_convergent = report.verdict != Verdict::Solvable;
            if let Some(exact) = reference {
                r.attach_reference(exact);
            }
            Some(r)
        };
        Ok(Solution { series, report, reconstruction, timings })
    }
}

/// Basis from settings. The numeric basis uses polar product rules on Ω and
/// ω sized to integrate its Gram matrices exactly.
pub fn build_basis<R: Real>(spec: &DomainSpec<R>, s: &BasisSettings) -> Result<DobBasis<R>, SolverError> {
    match s.kind {
        BasisKind::Analytic => Ok(make_analytic_basis(spec, s.n_max)),
        BasisKind::Numeric => {
            let m = s.degree_cutoff.unwrap_or(s.n_max.saturating_sub(1)).max(1);
            let big = disc_rule_for_degree(spec.omega_radius, m);
            let small = disc_rule_for_degree(spec.test_ball_radius, m);
            Ok(make_numeric_basis(&big, &small, spec.omega_radius, m)?)
        }
    }
}
