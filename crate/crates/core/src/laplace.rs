//! The classical Cauchy problem for the Laplace equation through the
//! holomorphic gradient `g = u_x − i u_y`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauss::GaussRule;
use crate::geometry::{BoundaryRule, Curve, DomainSpec, Region};
use crate::potentials::{CauchyData, PotentialError};
use crate::scalar::{cabs, cast, Real, C};
use crate::solver::{extend, Pipeline, Solution, SolverError, StageTiming, Verdict};

pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaplaceError {
    #[error("{found} samples on Gamma, at least {MIN_SAMPLES} needed")]
    TooFewSamples { found: usize },
    #[error("{found} samples for {expected} quadrature nodes")]
    SampleMismatch { expected: usize, found: usize },
    #[error("no path inside D from the anchor to ({x}, {y})")]
    PathEscapesDomain { x: f64, y: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `u` and `∂u/∂n` (outward normal) at the nodes of a Γ rule, and one value
/// fixing the additive constant.
#[derive(Clone, Debug)]
pub struct ClassicalCauchyData<R> {
    pub u: Vec<R>,
    pub dudn: Vec<R>,
    pub anchor: C<R>,
    pub anchor_value: R,
}

/// Differentiation along Γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stencil {
    /// Interpolate through all nodes of the panel.
    Panel,
    /// Interpolate through `width` nearest nodes of the panel, one-sided at
    /// the panel ends.
    Local { width: usize },
}

/// Derivative weights at `xs[at]` of the interpolant through `xs`.
fn derivative_weights<R: Real>(xs: &[R], at: usize) -> Vec<R> {
    let n = xs.len();
    let w: Vec<R> = (0..n)
        .map(|j| {
            let mut p = R::one();
            for k in 0..n {
                if k != j {
                    p *= xs[j] - xs[k];
                }
            }
            R::one() / p
        })
        .collect();
    let mut d = vec![R::zero(); n];
    let mut diag = R::zero();
    for j in 0..n {
        if j != at {
            d[j] = w[j] / w[at] / (xs[at] - xs[j]);
            diag -= d[j];
        }
    }
    d[at] = diag;
    d
}

/// `d/ds` of nodal values on each panel of a rule.
pub fn parameter_derivative<R: Real>(rule: &BoundaryRule<R>, values: &[R], stencil: Stencil) -> Vec<R> {
    let mut out = vec![R::zero(); values.len()];
    for p in &rule.panels {
        let xs = &rule.params[p.start..p.start + p.len];
        let vs = &values[p.start..p.start + p.len];
        let width = match stencil {
            Stencil::Panel => p.len,
            Stencil::Local { width } => width.clamp(2, p.len),
        };
        for i in 0..p.len {
            let lo = i.saturating_sub(width / 2).min(p.len - width);
            let d = derivative_weights(&xs[lo..lo + width], i - lo);
            out[p.start + i] = d.iter().zip(&vs[lo..lo + width]).fold(R::zero(), |a, (w, v)| a + *w * *v);
        }
    }
    out
}

/// `g = u_x − i u_y` on Γ from `u` and `∂u/∂n`, with `f = 0`.
pub fn to_holomorphic<R: Real>(
    spec: &DomainSpec<R>,
    rule: &BoundaryRule<R>,
    data: &ClassicalCauchyData<R>,
    stencil: Stencil,
) -> Result<CauchyData<R>, LaplaceError> {
    let n = rule.len();
    if data.u.len() < MIN_SAMPLES {
        return Err(LaplaceError::TooFewSamples { found: data.u.len() });
    }
    for len in [data.u.len(), data.dudn.len()] {
        if len != n {
            return Err(LaplaceError::SampleMismatch { expected: n, found: len });
        }
    }
    let du = parameter_derivative(rule, &data.u, stencil);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let curve = rule.panels[rule.panel_of(i)].curve;
        let d = spec.curve_deriv(curve, rule.params[i]);
        let speed = cabs(d);
        let grad = d / speed * (du[i] / speed) + rule.normals[i] * data.dudn[i];
        g.push(grad.conj());
    }
    Ok(CauchyData { u0: g, f: None, zero_extension: true })
}

/// Classical data of a harmonic function on the nodes of a rule.
pub fn sample_classical<R: Real>(
    rule: &BoundaryRule<R>,
    u: impl Fn(C<R>) -> (R, C<R>),
    anchor_index: usize,
) -> ClassicalCauchyData<R> {
    let (mut us, mut dn) = (Vec::new(), Vec::new());
    for (z, n) in rule.nodes.iter().zip(&rule.normals) {
        let (v, grad) = u(*z);
        us.push(v);
        dn.push(grad.re * n.re + grad.im * n.im);
    }
    ClassicalCauchyData { anchor: rule.nodes[anchor_index], anchor_value: us[anchor_index], u: us, dudn: dn }
}

/// Integrator of `∫ g dz` along polygonal paths in D.
pub struct PathIntegrator<'a, R: Real> {
    spec: &'a DomainSpec<R>,
    g: &'a dyn Fn(C<R>) -> Result<C<R>, PotentialError>,
    gauss: GaussRule<R>,
    max_segment: R,
    /// Offset from Γ of the first trapezoid leg.
    eps: R,
    /// Value of `g` at the anchor from the boundary datum, when the anchor
    /// lies on Γ.
    anchor_g: Option<C<R>>,
}

impl<'a, R: Real> PathIntegrator<'a, R> {
    pub fn new(
        spec: &'a DomainSpec<R>,
        g: &'a dyn Fn(C<R>) -> Result<C<R>, PotentialError>,
        anchor_g: Option<C<R>>,
    ) -> Self {
        PathIntegrator {
            spec,
            g,
            gauss: GaussRule::new(24),
            max_segment: spec.omega_radius * R::from_f64(0.25),
            eps: spec.margin * R::two(),
            anchor_g,
        }
    }

    /// `∫_a^b g dz` on a straight segment inside D.
    pub fn segment(&self, a: C<R>, b: C<R>) -> Result<C<R>, PotentialError> {
        let len = cabs(b - a);
        let pieces = (len / self.max_segment).to_f64().ceil().max(1.0) as usize;
        let mut acc = C::new(R::zero(), R::zero());
        for k in 0..pieces {
            let t0 = R::from_usize(k) / R::from_usize(pieces);
            let t1 = R::from_usize(k + 1) / R::from_usize(pieces);
            for (t, w) in self.gauss.mapped(t0, t1) {
                acc += (self.g)(a + (b - a) * t)? * w;
            }
        }
        Ok(acc * (b - a))
    }

    fn visible(&self, a: C<R>, b: C<R>) -> bool {
        let n = 64;
        (0..=n).all(|k| {
            let p = a + (b - a) * (R::from_usize(k) / R::from_usize(n));
            self.spec.classify(p) == Region::InD && self.spec.dist_to_boundary(p) > self.eps * R::half()
        })
    }

    /// Leave the anchor along the inward normal: a short trapezoid leg using
    /// the boundary datum, then Gauss to a point well inside D. Returns the
    /// start point for the remaining path and the integral so far.
    pub fn departure(&self, anchor: C<R>, inward: C<R>) -> Result<(C<R>, C<R>), PotentialError> {
        let on_gamma = self.spec.dist_to_boundary(anchor) <= self.eps;
        if !on_gamma {
            return Ok((anchor, C::new(R::zero(), R::zero())));
        }
        let p1 = anchor + inward * self.eps;
        let g0 = match self.anchor_g {
            Some(v) => v,
            None => (self.g)(p1)?,
        };
        let leg = (g0 + (self.g)(p1)?) * (self.eps * R::half()) * inward;
        let q0 = anchor + inward * (self.spec.omega_radius * R::from_f64(0.05));
        Ok((q0, leg + self.segment(p1, q0)?))
    }

    /// Waypoints from `start` to `x`: direct, or through the centre of D.
    pub fn route(&self, start: C<R>, x: C<R>) -> Result<Vec<C<R>>, LaplaceError> {
        if self.visible(start, x) {
            return Ok(vec![start, x]);
        }
        let w = self.spec.ruled_point(R::zero(), R::half());
        if self.visible(start, w) && self.visible(w, x) {
            return Ok(vec![start, w, x]);
        }
        Err(LaplaceError::PathEscapesDomain { x: x.re.to_f64(), y: x.im.to_f64() })
    }

    pub fn along(&self, path: &[C<R>]) -> Result<C<R>, PotentialError> {
        let mut acc = C::new(R::zero(), R::zero());
        for w in path.windows(2) {
            acc += self.segment(w[0], w[1])?;
        }
        Ok(acc)
    }

    pub fn closed_loop(&self, vertices: &[C<R>]) -> Result<C<R>, PotentialError> {
        let mut acc = C::new(R::zero(), R::zero());
        for k in 0..vertices.len() {
            acc += self.segment(vertices[k], vertices[(k + 1) % vertices.len()])?;
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub struct LaplaceReconstruction<R> {
    pub points: Vec<C<R>>,
    pub u: Vec<R>,
    /// Largest `|∮ g dz|` over the sample triangles.
    pub loop_residual: f64,
    pub sup_g: f64,
    pub sup_error: Option<f64>,
}

/// Right triangles with legs `h` on a coarse grid of D, away from ∂D.
pub fn sample_triangles<R: Real>(spec: &DomainSpec<R>, n: usize, min_dist: R) -> Vec<[C<R>; 3]> {
    let (x0, x1, y0, y1) = spec.bounding_box();
    let h = (x1 - x0).max(y1 - y0) / R::from_usize(n);
    let ok = |p: C<R>| spec.classify(p) == Region::InD && spec.dist_to_boundary(p) >= min_dist;
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let a = C::new(x0 + h * R::from_usize(i), y0 + h * R::from_usize(j));
            let tri = [a, a + C::new(h, R::zero()), a + C::new(R::zero(), h)];
            if tri.iter().all(|p| ok(*p)) {
                out.push(tri);
            }
        }
    }
    out
}

/// `u(x) = u(p₀) + Re ∫_{p₀→x} g dz` at the points, with the loop residual
/// over `triangles`.
pub fn from_holomorphic<R: Real>(
    spec: &DomainSpec<R>,
    g: &dyn Fn(C<R>) -> Result<C<R>, PotentialError>,
    anchor: C<R>,
    anchor_value: R,
    anchor_g: Option<C<R>>,
    points: &[C<R>],
    triangles: &[[C<R>; 3]],
) -> Result<LaplaceReconstruction<R>, LaplaceError> {
    let integ = PathIntegrator::new(spec, g, anchor_g);
    let inward = inward_normal(spec, anchor);
    let (start, base) = integ.departure(anchor, inward)?;
    let mut u = Vec::with_capacity(points.len());
    let mut sup_g = 0.0f64;
    for &x in points {
        let path = integ.route(start, x)?;
        u.push(anchor_value + (base + integ.along(&path)?).re);
        sup_g = sup_g.max(cabs(g(x)?).to_f64());
    }
    let mut loop_residual = 0.0f64;
    for t in triangles {
        loop_residual = loop_residual.max(cabs(integ.closed_loop(t)?).to_f64());
    }
    Ok(LaplaceReconstruction { points: points.to_vec(), u, loop_residual, sup_g, sup_error: None })
}

/// Unit normal into D at a point of Γ (or towards the centre of D when the
/// point is off Γ).
fn inward_normal<R: Real>(spec: &DomainSpec<R>, p: C<R>) -> C<R> {
    let mut best = (R::from_f64(f64::INFINITY), R::zero());
    let n = 400;
    for k in 0..=n {
        let s = -R::one() + R::two() * R::from_usize(k) / R::from_usize(n);
        let d = cabs(spec.curve_point(Curve::Gamma, s) - p);
        if d < best.0 {
            best = (d, s);
        }
    }
    let t = spec.curve_deriv(Curve::Gamma, best.1);
    let cand = C::new(-t.im, t.re) / cabs(t);
    let probe = p + cand * (spec.omega_radius * R::from_f64(1e-2));
    if spec.contains(probe) {
        cand
    } else {
        -cand
    }
}

impl<R: Real> LaplaceReconstruction<R> {
    pub fn attach_reference(&mut self, exact: impl Fn(C<R>) -> R) {
        let e = self.points.iter().zip(&self.u).map(|(z, v)| (exact(*z) - *v).abs().to_f64()).fold(0.0, f64::max);
        self.sup_error = Some(e);
    }
}

/// Result of [`solve_classical`]: the holomorphic solve on `g` and the
/// recovered potential on the interior grid, when the verdict allows it.
#[derive(Clone, Debug)]
pub struct ClassicalSolution {
    pub solution: Solution,
    pub potential: Option<LaplaceReconstruction<f64>>,
}

/// Convert classical data to `g`, solve for `g` in D, then integrate
/// `Re ∫ g dz` from the anchor. `loop_cells` sets the triangle grid used for
/// the path-independence residual.
pub fn solve_classical<H: Real>(
    pipeline: &mut Pipeline<H>,
    data: &ClassicalCauchyData<H>,
    stencil: Stencil,
    loop_cells: usize,
    reference: Option<&dyn Fn(C<f64>) -> f64>,
) -> Result<ClassicalSolution, LaplaceError> {
    let holo = to_holomorphic(&pipeline.spec_hi, &pipeline.gamma, data, stencil)?;
    let anchor_g = pipeline.gamma.nodes.iter().position(|z| *z == data.anchor).map(|i| cast(holo.u0[i]));
    pipeline.set_data(holo)?;
    let mut solution = pipeline.run(None)?;
    if solution.report.verdict == Verdict::NotSolvable && !pipeline.settings.force_reconstruct {
        return Ok(ClassicalSolution { solution, potential: None });
    }
    let t = std::time::Instant::now();
    let field = pipeline.field()?;
    let basis = pipeline.basis_f64();
    let n = pipeline.settings.n;
    let series = &solution.series;
    let g = |z: C<f64>| -> Result<C<f64>, PotentialError> { Ok(field.eval(z)? - extend(series, &basis, z, n)) };
    let spec = &pipeline.spec;
    let tris = sample_triangles(spec, loop_cells, pipeline.settings.grid.min_dist);
    let anchor = cast(data.anchor);
    let mut rec = from_holomorphic(spec, &g, anchor, data.anchor_value.to_f64(), anchor_g, &pipeline.grid(), &tris)?;
    if let Some(exact) = reference {
        rec.attach_reference(exact);
    }
    solution.timings.push(StageTiming { stage: "laplace".into(), seconds: t.elapsed().as_secs_f64() });
    Ok(ClassicalSolution { solution, potential: Some(rec) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_rule, make_domain, BoundaryPart, DomainConfig, GammaDescriptor, Side};

    fn setup(gamma: GammaDescriptor) -> (DomainSpec<f64>, BoundaryRule<f64>) {
        let d = make_domain(&DomainConfig {
            omega_radius: 1.0,
            gamma,
            side: Side::Right,
            test_ball_radius: Some(0.15),
            margin: None,
        })
        .unwrap();
        let r = boundary_rule(&d, BoundaryPart::Gamma, 8, 16);
        (d, r)
    }

    fn g_of(
        d: &DomainSpec<f64>,
        r: &BoundaryRule<f64>,
        u: impl Fn(C<f64>) -> (f64, C<f64>),
        stencil: Stencil,
    ) -> Vec<C<f64>> {
        to_holomorphic(d, r, &sample_classical(r, u, 0), stencil).unwrap().u0
    }

    #[test]
    fn gradient_traces() {
        for gamma in [GammaDescriptor::Chord { offset: 0.3 }, GammaDescriptor::Arc { center: 0.9, radius: 0.6 }] {
            let (d, r) = setup(gamma);
            let g = g_of(&d, &r, |z| (z.re, C::new(1.0, 0.0)), Stencil::Panel);
            assert!(g.iter().all(|v| (v - 1.0).norm() < 1e-11));
            let g = g_of(&d, &r, |_| (4.0, C::new(0.0, 0.0)), Stencil::Panel);
            assert!(g.iter().all(|v| v.norm() < 1e-11));
            let g = g_of(&d, &r, |z| (z.re * z.re - z.im * z.im, z.conj() * 2.0), Stencil::Panel);
            assert!(g.iter().zip(&r.nodes).all(|(v, z)| (v - z * 2.0).norm() < 1e-10));
            let g = g_of(&d, &r, |z| (z.re * z.re - z.im * z.im, z.conj() * 2.0), Stencil::Local { width: 5 });
            assert!(g.iter().zip(&r.nodes).all(|(v, z)| (v - z * 2.0).norm() < 1e-4));
        }
    }

    #[test]
    fn too_few_samples() {
        let (d, r) = setup(GammaDescriptor::Chord { offset: 0.3 });
        let data = ClassicalCauchyData { u: vec![0.0; 8], dudn: vec![0.0; 8], anchor: r.nodes[0], anchor_value: 0.0 };
        assert_eq!(to_holomorphic(&d, &r, &data, Stencil::Panel).unwrap_err(), LaplaceError::TooFewSamples { found: 8 });
    }

    #[test]
    fn antiderivative_recovery() {
        let (d, r) = setup(GammaDescriptor::Chord { offset: 0.3 });
        let p0 = r.nodes[20];
        let pts = d.interior_grid(9, 0.1);
        let tris = sample_triangles(&d, 8, 0.1);
        assert!(!tris.is_empty());
        let zero = |_: C<f64>| Ok(C::new(0.0, 0.0));
        let rec = from_holomorphic(&d, &zero, p0, 1.5, None, &pts, &tris).unwrap();
        assert!(rec.u.iter().all(|v| *v == 1.5));
        let g = |z: C<f64>| Ok(z * 2.0);
        let mut rec = from_holomorphic(&d, &g, p0, (p0 * p0).re, Some(p0 * 2.0), &pts, &tris).unwrap();
        rec.attach_reference(|z| z.re * z.re - z.im * z.im);
        assert!(rec.sup_error.unwrap() < 1e-9, "{:?}", rec.sup_error);
        assert!(rec.loop_residual < 1e-13);
    }
}
