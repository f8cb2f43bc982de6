//! Layer and volume potentials of the ∂̄ complex and the homotopy residual.
//!
//! `M v(z) = (1/2πi) ∫_{∂D} v(ζ)/(ζ − z) dζ` and
//! `T f(z) = −(1/π) ∫_D f(ζ)/(ζ − z) dA(ζ)` satisfy `M(u|∂D) + T(∂̄u) = χ_D u`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AreaRule, BoundaryRule, CellMap, DomainSpec, Region};
use crate::kernels::ComplexInstance;
use crate::scalar::{cabs, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("evaluation at distance {distance:e} from the boundary, inside the margin {margin:e}")]
    SingularEvaluation { distance: f64, margin: f64 },
    #[error("{expected} quadrature nodes but {found} samples")]
    QuadratureMismatch { expected: usize, found: usize },
    #[error("local expansion requested but targets are not separated from the sources")]
    NotSeparated,
}

/// Cauchy data of the ∂̄ problem sampled on the quadrature rules.
#[derive(Clone, Debug)]
pub struct CauchyData<R> {
    /// `u₀` at the nodes of the Γ rule.
    pub u0: Vec<C<R>>,
    /// `f = ∂̄u` at the nodes of the D rule; `None` means `f ≡ 0`.
    pub f: Option<Vec<C<R>>>,
    /// The density on the outer arc is taken to be zero.
    pub zero_extension: bool,
}

impl<R: Real> CauchyData<R> {
    pub fn check(&self, gamma: &BoundaryRule<R>, area: Option<&AreaRule<R>>) -> Result<(), PotentialError> {
        if self.u0.len() != gamma.len() {
            return Err(PotentialError::QuadratureMismatch { expected: gamma.len(), found: self.u0.len() });
        }
        if let (Some(f), Some(a)) = (&self.f, area) {
            if f.len() != a.len() {
                return Err(PotentialError::QuadratureMismatch { expected: a.len(), found: f.len() });
            }
        }
        Ok(())
    }
}

/// Density on an area rule.
#[derive(Clone, Copy)]
pub enum Density<'a, R> {
    /// Values at the rule's nodes, interpolated inside cells when needed.
    Samples(&'a [C<R>]),
    /// A closed-form function.
    Function(&'a dyn Fn(C<R>) -> C<R>),
}

/// Discrete point sources: the field `Σ q_j / (ζ_j − z)`.
#[derive(Clone, Debug)]
pub struct SourceSet<R> {
    pub points: Vec<C<R>>,
    pub strengths: Vec<C<R>>,
}

impl<R: Real> Default for SourceSet<R> {
    fn default() -> Self {
        SourceSet { points: Vec::new(), strengths: Vec::new() }
    }
}

impl<R: Real> SourceSet<R> {
    /// Sources reproducing the plain Gauss rule for `M v`.
    pub fn from_boundary(rule: &BoundaryRule<R>, density: &[C<R>]) -> Self {
        let two_pi_i = C::new(R::zero(), R::two() * R::pi());
        SourceSet {
            points: rule.nodes.clone(),
            strengths: density.iter().zip(&rule.dz).map(|(v, dz)| *v * *dz / two_pi_i).collect(),
        }
    }

    /// Sources reproducing the plain area rule for `T f`.
    pub fn from_area(rule: &AreaRule<R>, density: &[C<R>]) -> Self {
        SourceSet {
            points: rule.nodes.clone(),
            strengths: density.iter().zip(&rule.weights).map(|(f, w)| -(*f * *w) / R::pi()).collect(),
        }
    }

    pub fn extend(&mut self, other: SourceSet<R>) {
        self.points.extend(other.points);
        self.strengths.extend(other.strengths);
    }

    pub fn eval(&self, z: C<R>) -> C<R> {
        let mut acc = C::new(R::zero(), R::zero());
        for (p, q) in self.points.iter().zip(&self.strengths) {
            acc += *q / (*p - z);
        }
        acc
    }

    /// Taylor expansion about `center`, valid on `B(center, radius)`.
    pub fn local_expansion(&self, center: C<R>, radius: R) -> Result<LocalExpansion<R>, PotentialError> {
        let dmin = self.points.iter().map(|p| cabs(*p - center)).fold(R::from_f64(f64::INFINITY), R::min);
        let ratio = radius / dmin;
        if !(ratio < R::from_f64(0.8)) {
            return Err(PotentialError::NotSeparated);
        }
        let tol = R::epsilon() * R::from_f64(1e-2);
        let terms = (tol.ln() / ratio.ln()).to_f64().ceil().max(1.0) as usize + 2;
        let mut coef = vec![C::new(R::zero(), R::zero()); terms];
        for (p, q) in self.points.iter().zip(&self.strengths) {
            let w = (*p - center).inv();
            let mut pw = *q * w;
            for c in coef.iter_mut() {
                *c += pw;
                pw *= w;
            }
        }
        Ok(LocalExpansion { center, radius, coefficients: coef })
    }
}

/// `F(z) = Σ_k a_k (z − c)^k` on `B(c, radius)`.
#[derive(Clone, Debug)]
pub struct LocalExpansion<R> {
    pub center: C<R>,
    pub radius: R,
    pub coefficients: Vec<C<R>>,
}

impl<R: Real> LocalExpansion<R> {
    pub fn eval(&self, z: C<R>) -> C<R> {
        let w = z - self.center;
        let mut acc = C::new(R::zero(), R::zero());
        for c in self.coefficients.iter().rev() {
            acc = acc * w + *c;
        }
        acc
    }
}

/// Near-field acceptance ratio: a panel or cell is integrated with its plain
/// Gauss rule once the target is farther than this many bounding radii.
const NEAR_RATIO: f64 = 3.0;
const MAX_DEPTH: usize = 60;

/// `M v(z)` from a boundary rule, with adaptive refinement of panels close to
/// `z`. No margin check is made here.
pub fn cauchy_integral<R: Real>(
    spec: &DomainSpec<R>,
    rule: &BoundaryRule<R>,
    density: &[C<R>],
    z: C<R>,
) -> C<R> {
    let eta = R::from_f64(NEAR_RATIO);
    let mut acc = C::new(R::zero(), R::zero());
    for panel in &rule.panels {
        let nodes = &rule.nodes[panel.start..panel.start + panel.len];
        let vals = &density[panel.start..panel.start + panel.len];
        if vals.iter().all(|v| *v == C::new(R::zero(), R::zero())) {
            continue;
        }
        let mid = (panel.s0 + panel.s1) * R::half();
        let c = spec.curve_point(panel.curve, mid);
        let rad = nodes.iter().map(|p| cabs(*p - c)).fold(R::zero(), R::max) * R::from_f64(1.1);
        if cabs(z - c) > eta * rad {
            let dz = &rule.dz[panel.start..panel.start + panel.len];
            for ((p, v), d) in nodes.iter().zip(vals).zip(dz) {
                acc += *v * *d / (*p - z);
            }
        } else {
            acc += refine_panel(spec, rule, panel, vals, panel.s0, panel.s1, z, 0);
        }
    }
    acc / C::new(R::zero(), R::two() * R::pi())
}

#[allow(clippy::too_many_arguments)]
fn refine_panel<R: Real>(
    spec: &DomainSpec<R>,
    rule: &BoundaryRule<R>,
    panel: &crate::geometry::Panel<R>,
    vals: &[C<R>],
    a: R,
    b: R,
    z: C<R>,
    depth: usize,
) -> C<R> {
    let mid = (a + b) * R::half();
    let c = spec.curve_point(panel.curve, mid);
    let rad = cabs(spec.curve_point(panel.curve, a) - c).max(cabs(spec.curve_point(panel.curve, b) - c)) * R::from_f64(1.1);
    if cabs(z - c) > R::from_f64(NEAR_RATIO) * rad || depth >= MAX_DEPTH {
        let orient = R::from_f64(panel.curve.orientation() as f64);
        let half = (panel.s1 - panel.s0) * R::half();
        let pmid = (panel.s0 + panel.s1) * R::half();
        let mut acc = C::new(R::zero(), R::zero());
        for (s, w) in rule.gauss.mapped(a, b) {
            let lw = rule.gauss.lagrange_weights((s - pmid) / half);
            let v = lw.iter().zip(vals).fold(C::new(R::zero(), R::zero()), |acc, (l, v)| acc + *v * *l);
            let p = spec.curve_point(panel.curve, s);
            let d = spec.curve_deriv(panel.curve, s) * (w * orient);
            acc += v * d / (p - z);
        }
        acc
    } else {
        refine_panel(spec, rule, panel, vals, a, mid, z, depth + 1)
            + refine_panel(spec, rule, panel, vals, mid, b, z, depth + 1)
    }
}

/// Generic target-adapted area integration of `kernel(ζ, f(ζ))` against a
/// density with at most a `1/|ζ − z|` singularity at the target `z`.
pub fn singular_area_integral<R: Real>(
    rule: &AreaRule<R>,
    density: Density<'_, R>,
    z: C<R>,
    kernel: &dyn Fn(C<R>, C<R>) -> C<R>,
) -> C<R> {
    let sample = |i: usize| -> C<R> {
        match density {
            Density::Samples(v) => v[i],
            Density::Function(f) => f(rule.nodes[i]),
        }
    };
    let (map, gauss) = match (&rule.map, &rule.gauss) {
        (Some(m), Some(g)) => (m, g),
        _ => {
            let mut acc = C::new(R::zero(), R::zero());
            for (i, w) in rule.weights.iter().enumerate() {
                acc += kernel(rule.nodes[i], sample(i)) * *w;
            }
            return acc;
        }
    };
    let eta = R::from_f64(NEAR_RATIO);
    let host_param = map.inverse(z);
    let mut acc = C::new(R::zero(), R::zero());
    for (ci, cell) in rule.cells.iter().enumerate() {
        let host = host_param
            .filter(|&(s, t)| s >= cell.s0 && s <= cell.s1 && t >= cell.t0 && t <= cell.t1)
            .is_some();
        if !host && cabs(z - cell.center) > eta * cell.radius {
            for i in cell.start..cell.start + cell.len {
                acc += kernel(rule.nodes[i], sample(i)) * rule.weights[i];
            }
            continue;
        }
        let ctx = CellContext { rule, map, gauss, cell: ci, density, z, kernel };
        if host && host_param.is_some() {
            let (s, t) = host_param.unwrap_or((cell.s0, cell.t0));
            acc += ctx.host_integral(s, t);
        } else {
            acc += ctx.adaptive(cell.s0, cell.s1, cell.t0, cell.t1, 0);
        }
    }
    acc
}

struct CellContext<'a, R: Real> {
    rule: &'a AreaRule<R>,
    map: &'a CellMap<R>,
    gauss: &'a crate::gauss::GaussRule<R>,
    cell: usize,
    density: Density<'a, R>,
    z: C<R>,
    kernel: &'a dyn Fn(C<R>, C<R>) -> C<R>,
}

impl<R: Real> CellContext<'_, R> {
    fn density_at(&self, s: R, t: R, p: C<R>) -> C<R> {
        match self.density {
            Density::Function(f) => f(p),
            Density::Samples(v) => {
                let cell = &self.rule.cells[self.cell];
                let q = self.gauss.len();
                let rs = (R::two() * s - cell.s0 - cell.s1) / (cell.s1 - cell.s0);
                let rt = (R::two() * t - cell.t0 - cell.t1) / (cell.t1 - cell.t0);
                let ls = self.gauss.lagrange_weights(rs);
                let lt = self.gauss.lagrange_weights(rt);
                let mut acc = C::new(R::zero(), R::zero());
                for i in 0..q {
                    let mut row = C::new(R::zero(), R::zero());
                    for j in 0..q {
                        row += v[cell.start + i * q + j] * lt[j];
                    }
                    acc += row * ls[i];
                }
                acc
            }
        }
    }

    fn tensor(&self, s0: R, s1: R, t0: R, t1: R) -> C<R> {
        let mut acc = C::new(R::zero(), R::zero());
        for (s, ws) in self.gauss.mapped(s0, s1) {
            for (t, wt) in self.gauss.mapped(t0, t1) {
                let p = self.map.point(s, t);
                let w = ws * wt * self.map.jacobian(s, t);
                acc += (self.kernel)(p, self.density_at(s, t, p)) * w;
            }
        }
        acc
    }

    fn adaptive(&self, s0: R, s1: R, t0: R, t1: R, depth: usize) -> C<R> {
        if s1 <= s0 || t1 <= t0 {
            return C::new(R::zero(), R::zero());
        }
        let (c, r) = self.map.bounds(s0, s1, t0, t1);
        if cabs(self.z - c) > R::from_f64(NEAR_RATIO) * r || depth >= MAX_DEPTH {
            return self.tensor(s0, s1, t0, t1);
        }
        // Bisect across the physically longer direction.
        let sm = (s0 + s1) * R::half();
        let tm = (t0 + t1) * R::half();
        let ls = polyline(|x| self.map.point(x, tm), s0, s1);
        let lt = polyline(|x| self.map.point(sm, x), t0, t1);
        if ls >= lt {
            self.adaptive(s0, sm, t0, t1, depth + 1) + self.adaptive(sm, s1, t0, t1, depth + 1)
        } else {
            self.adaptive(s0, s1, t0, tm, depth + 1) + self.adaptive(s0, s1, tm, t1, depth + 1)
        }
    }

    /// Cell containing the target: a physically square block centred on the
    /// target is integrated in Duffy (polar-like) coordinates, the rest of the
    /// cell adaptively.
    fn host_integral(&self, sz: R, tz: R) -> C<R> {
        let cell = &self.rule.cells[self.cell];
        let h = R::from_f64(1e-7);
        let xs = cabs(self.map.point(sz + h, tz) - self.map.point(sz - h, tz)) / (R::two() * h);
        let xt = cabs(self.map.point(sz, tz + h) - self.map.point(sz, tz - h)) / (R::two() * h);
        let a = (sz - cell.s0).min(cell.s1 - sz);
        let b = (tz - cell.t0).min(cell.t1 - tz);
        let m = (a * xs).min(b * xt);
        let (da, db) = if m > R::zero() && xs > R::zero() && xt > R::zero() {
            (m / xs, m / xt)
        } else {
            (R::zero(), R::zero())
        };
        let ss = [cell.s0, sz - da, sz + da, cell.s1];
        let ts = [cell.t0, tz - db, tz + db, cell.t1];
        let mut acc = C::new(R::zero(), R::zero());
        for i in 0..3 {
            for j in 0..3 {
                if i == 1 && j == 1 {
                    continue;
                }
                acc += self.adaptive(ss[i], ss[i + 1], ts[j], ts[j + 1], 0);
            }
        }
        if da > R::zero() && db > R::zero() {
            let corners = [
                (sz - da, tz - db),
                (sz + da, tz - db),
                (sz + da, tz + db),
                (sz - da, tz + db),
            ];
            for k in 0..4 {
                acc += self.duffy((sz, tz), corners[k], corners[(k + 1) % 4]);
            }
        }
        acc
    }

    fn duffy(&self, apex: (R, R), q1: (R, R), q2: (R, R)) -> C<R> {
        let e1 = (q1.0 - apex.0, q1.1 - apex.1);
        let e2 = (q2.0 - q1.0, q2.1 - q1.1);
        let det = (e1.0 * e2.1 - e1.1 * e2.0).abs();
        let mut acc = C::new(R::zero(), R::zero());
        for (u, wu) in self.gauss.mapped(R::zero(), R::one()) {
            for (v, wv) in self.gauss.mapped(R::zero(), R::one()) {
                let s = apex.0 + u * (e1.0 + v * e2.0);
                let t = apex.1 + u * (e1.1 + v * e2.1);
                let p = self.map.point(s, t);
                let w = wu * wv * u * det * self.map.jacobian(s, t);
                acc += (self.kernel)(p, self.density_at(s, t, p)) * w;
            }
        }
        acc
    }
}

fn polyline<R: Real>(f: impl Fn(R) -> C<R>, a: R, b: R) -> R {
    let n = 4;
    let mut len = R::zero();
    let mut prev = f(a);
    for k in 1..=n {
        let p = f(a + (b - a) * R::from_usize(k) / R::from_usize(n));
        len += cabs(p - prev);
        prev = p;
    }
    len
}

/// `T f(z)` on an area rule with target-adapted integration.
pub fn volume_integral<R: Real>(rule: &AreaRule<R>, density: Density<'_, R>, z: C<R>) -> C<R> {
    let k = move |zeta: C<R>, f: C<R>| -> C<R> { f / (zeta - z) };
    -singular_area_integral(rule, density, z, &k) / R::pi()
}

fn guard<R: Real>(spec: &DomainSpec<R>, z: C<R>) -> Result<(), PotentialError> {
    let d = spec.dist_to_boundary(z);
    if d < spec.margin {
        Err(PotentialError::SingularEvaluation { distance: d.to_f64(), margin: spec.margin.to_f64() })
    } else {
        Ok(())
    }
}

/// `T f(z)` for samples on a D rule, refusing the NEAR_BOUNDARY zone.
pub fn volume_potential_t<R: Real>(
    spec: &DomainSpec<R>,
    f_samples: &[C<R>],
    rule: &AreaRule<R>,
    z: C<R>,
) -> Result<C<R>, PotentialError> {
    if f_samples.len() != rule.len() {
        return Err(PotentialError::QuadratureMismatch { expected: rule.len(), found: f_samples.len() });
    }
    guard(spec, z)?;
    Ok(volume_integral(rule, Density::Samples(f_samples), z))
}

/// `M ũ₀(z)` for samples on a boundary rule, refusing the NEAR_BOUNDARY zone.
pub fn green_integral_m<R: Real>(
    spec: &DomainSpec<R>,
    u0_samples: &[C<R>],
    rule: &BoundaryRule<R>,
    z: C<R>,
) -> Result<C<R>, PotentialError> {
    if u0_samples.len() != rule.len() {
        return Err(PotentialError::QuadratureMismatch { expected: rule.len(), found: u0_samples.len() });
    }
    guard(spec, z)?;
    Ok(cauchy_integral(spec, rule, u0_samples, z))
}

/// Which potentials make up a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FieldProvenance {
    M,
    T,
    MPlusT,
}

/// `F = M ũ₀ + T f` as an evaluable field.
#[derive(Clone, Debug)]
pub struct PotentialField<R> {
    pub spec: DomainSpec<R>,
    pub provenance: FieldProvenance,
    boundary: Option<(BoundaryRule<R>, Vec<C<R>>)>,
    volume: Option<(AreaRule<R>, Vec<C<R>>)>,
}

impl<R: Real> PotentialField<R> {
    pub fn new(
        spec: &DomainSpec<R>,
        boundary: Option<(BoundaryRule<R>, Vec<C<R>>)>,
        volume: Option<(AreaRule<R>, Vec<C<R>>)>,
    ) -> Result<Self, PotentialError> {
        if let Some((r, v)) = &boundary {
            if r.len() != v.len() {
                return Err(PotentialError::QuadratureMismatch { expected: r.len(), found: v.len() });
            }
        }
        if let Some((r, v)) = &volume {
            if r.len() != v.len() {
                return Err(PotentialError::QuadratureMismatch { expected: r.len(), found: v.len() });
            }
        }
        let provenance = match (&boundary, &volume) {
            (Some(_), Some(_)) => FieldProvenance::MPlusT,
            (None, Some(_)) => FieldProvenance::T,
            _ => FieldProvenance::M,
        };
        Ok(PotentialField { spec: spec.clone(), provenance, boundary, volume })
    }

    /// Build `F` from Cauchy data on a Γ rule and an optional D rule.
    pub fn from_data(
        spec: &DomainSpec<R>,
        gamma: &BoundaryRule<R>,
        area: Option<&AreaRule<R>>,
        data: &CauchyData<R>,
    ) -> Result<Self, PotentialError> {
        data.check(gamma, area)?;
        let volume = match (&data.f, area) {
            (Some(f), Some(a)) if f.iter().any(|v| *v != C::new(R::zero(), R::zero())) => Some((a.clone(), f.clone())),
            _ => None,
        };
        Self::new(spec, Some((gamma.clone(), data.u0.clone())), volume)
    }

    pub fn eval(&self, z: C<R>) -> Result<C<R>, PotentialError> {
        guard(&self.spec, z)?;
        let mut acc = C::new(R::zero(), R::zero());
        if let Some((rule, v)) = &self.boundary {
            acc += cauchy_integral(&self.spec, rule, v, z);
        }
        if let Some((rule, f)) = &self.volume {
            acc += volume_integral(rule, Density::Samples(f), z);
        }
        Ok(acc)
    }

    /// The plain-rule point sources of the field.
    pub fn sources(&self) -> SourceSet<R> {
        let mut s = SourceSet::default();
        if let Some((rule, v)) = &self.boundary {
            s.extend(SourceSet::from_boundary(rule, v));
        }
        if let Some((rule, f)) = &self.volume {
            s.extend(SourceSet::from_area(rule, f));
        }
        s
    }

    /// Evaluate at many targets inside `B(center, radius)`, through a local
    /// expansion when the disc is well separated from ∂D and by direct
    /// evaluation otherwise.
    pub fn eval_in_disc(&self, center: C<R>, radius: R, targets: &[C<R>]) -> Result<Vec<C<R>>, PotentialError> {
        for z in targets {
            guard(&self.spec, *z)?;
        }
        match self.sources().local_expansion(center, radius) {
            Ok(exp) => Ok(targets.iter().map(|z| exp.eval(*z)).collect()),
            Err(_) => targets.iter().map(|z| self.eval(*z)).collect(),
        }
    }

    pub fn eval_many(&self, targets: &[C<R>]) -> Result<Vec<C<R>>, PotentialError> {
        targets.iter().map(|z| self.eval(*z)).collect()
    }
}

/// A smooth test function and its image under the operator of the complex
/// (`∂̄u`, or `∇u` encoded as `u_x + i u_y`).
pub struct SmoothField<'a, R> {
    pub value: &'a dyn Fn(C<R>) -> C<R>,
    pub derivative: &'a dyn Fn(C<R>) -> C<R>,
}

/// Residuals of the homotopy formula at interior probes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyResidual {
    /// `sup |M u + T Au − u|` over probes in D.
    pub max_in_d: f64,
    /// `sup |M u + T Au|` over probes in D⁺.
    pub max_in_dplus: f64,
    /// The smoothing term `K` is identically zero at degree 0.
    pub k_term: f64,
    pub probes_in_d: usize,
    pub probes_in_dplus: usize,
}

/// Probe points at distance at least `min_dist` from ∂D: `n × n` grid over Ω.
pub fn default_probes<R: Real>(spec: &DomainSpec<R>, n: usize, min_dist: R) -> Vec<C<R>> {
    let r = spec.omega_radius;
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let x = -r + R::two() * r * R::from_usize(i) / R::from_usize(n - 1);
            let y = -r + R::two() * r * R::from_usize(j) / R::from_usize(n - 1);
            let p = C::new(x, y);
            if p.norm_sqr() < r * r && spec.dist_to_boundary(p) >= min_dist {
                out.push(p);
            }
        }
    }
    out
}

/// Evaluate `M(τu) + T(Au)` at the probes and compare with `χ_D u`.
pub fn homotopy_residual<R: Real>(
    instance: ComplexInstance,
    spec: &DomainSpec<R>,
    u: &SmoothField<'_, R>,
    boundary: &BoundaryRule<R>,
    area: &AreaRule<R>,
    probes: &[C<R>],
) -> Result<HomotopyResidual, PotentialError> {
    let trace: Vec<C<R>> = boundary.nodes.iter().map(|z| (u.value)(*z)).collect();
    let mut out = HomotopyResidual { max_in_d: 0.0, max_in_dplus: 0.0, k_term: 0.0, probes_in_d: 0, probes_in_dplus: 0 };
    for &z in probes {
        guard(spec, z)?;
        let total = match instance {
            ComplexInstance::DolbeaultN1 => {
                cauchy_integral(spec, boundary, &trace, z) + volume_integral(area, Density::Function(u.derivative), z)
            }
            ComplexInstance::Derham2dDeg0 => {
                derham_double_layer(boundary, &trace, z) + derham_volume(area, u.derivative, z)
            }
        };
        match spec.classify(z) {
            Region::InD => {
                out.max_in_d = out.max_in_d.max(cabs(total - (u.value)(z)).to_f64());
                out.probes_in_d += 1;
            }
            r if r.is_dplus() => {
                out.max_in_dplus = out.max_in_dplus.max(cabs(total).to_f64());
                out.probes_in_dplus += 1;
            }
            _ => {}
        }
    }
    Ok(out)
}

/// `∫_{∂D} u ∂_n Φ ds` with `Φ(ζ, z) = ln|ζ − z| / 2π`.
fn derham_double_layer<R: Real>(rule: &BoundaryRule<R>, trace: &[C<R>], z: C<R>) -> C<R> {
    let mut acc = C::new(R::zero(), R::zero());
    for i in 0..rule.len() {
        let d = rule.nodes[i] - z;
        let dn = (d.conj() * rule.normals[i]).re / (R::two() * R::pi() * d.norm_sqr());
        acc += trace[i] * (dn * rule.weights[i]);
    }
    acc
}

/// `−∫_D ∇_ζΦ · g dA` for a vector field `g` encoded as `g_x + i g_y`.
fn derham_volume<R: Real>(rule: &AreaRule<R>, grad: &dyn Fn(C<R>) -> C<R>, z: C<R>) -> C<R> {
    let k = move |zeta: C<R>, g: C<R>| -> C<R> {
        let d = zeta - z;
        C::new(-(d.conj() * g).re / (R::two() * R::pi() * d.norm_sqr()), R::zero())
    };
    singular_area_integral(rule, Density::Function(grad), z, &k)
}
