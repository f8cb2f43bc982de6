//! Domain description: the disc Ω = B(0, R), the cut Γ, the region D on one
//! side of Γ, its complement D⁺ and the test ball ω centred at the origin.
//!
//! Internally every domain is stored in a canonical frame where D lies on the
//! right (contains +R). A domain on the left is the canonical one rotated by π.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauss::GaussRule;
use crate::scalar::{cabs, carg, cast, from_polar, Real, C};

/// Shape of the cut Γ in physical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaDescriptor {
    /// The vertical segment `Re z = offset` inside Ω.
    Chord { offset: f64 },
    /// The part inside Ω of the circle `|z - center| = radius`, centre on the
    /// real axis. D is the lens `Ω ∩ B(center, radius)`.
    Arc { center: f64, radius: f64 },
}

/// Which side of Γ the region D occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// D contains the boundary point `+R`.
    Right,
    /// D contains the boundary point `-R`.
    Left,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("gamma passes through the origin")]
    GammaThroughOrigin,
    #[error("closure of the test ball (radius {radius}) meets closure of D (dist(0, D) = {distance})")]
    TestBallCollision { radius: f64, distance: f64 },
    #[error("chord offset {offset} does not cut the disc of radius {radius}")]
    DegenerateChord { offset: f64, radius: f64 },
    #[error("circle |z - {center}| = {radius} does not cut the disc in an admissible lens")]
    DegenerateArc { center: f64, radius: f64 },
    #[error("invalid geometry parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown boundary part `{0}`")]
    UnknownPart(String),
    #[error("ruled parametrisation of D folds over (Jacobian {0:e})")]
    FoldedParametrization(f64),
}

/// A smooth piece of ∂D, parametrised by `s ∈ [-1, 1]` from the lower to the
/// upper corner (canonical frame).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Gamma,
    OuterArc,
}

impl Curve {
    /// +1 if increasing `s` follows the positive orientation of ∂D.
    pub fn orientation(self) -> i32 {
        match self {
            Curve::OuterArc => 1,
            Curve::Gamma => -1,
        }
    }
}

/// Boundary portion selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryPart {
    Gamma,
    OuterArc,
    Full,
}

impl BoundaryPart {
    pub fn curves(self) -> &'static [Curve] {
        match self {
            BoundaryPart::Gamma => &[Curve::Gamma],
            BoundaryPart::OuterArc => &[Curve::OuterArc],
            BoundaryPart::Full => &[Curve::OuterArc, Curve::Gamma],
        }
    }
}

impl FromStr for BoundaryPart {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GAMMA" => Ok(BoundaryPart::Gamma),
            "OUTER_ARC" => Ok(BoundaryPart::OuterArc),
            "FULL" => Ok(BoundaryPart::Full),
            _ => Err(GeometryError::UnknownPart(s.to_string())),
        }
    }
}

/// Point classification relative to the domain decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Region {
    InD,
    InDplus,
    InOmegaTestBall,
    NearBoundary,
    Outside,
}

impl Region {
    /// True for points of D⁺, including the test ball.
    pub fn is_dplus(self) -> bool {
        matches!(self, Region::InDplus | Region::InOmegaTestBall)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::InD => "IN_D",
            Region::InDplus => "IN_DPLUS",
            Region::InOmegaTestBall => "IN_OMEGA_TEST_BALL",
            Region::NearBoundary => "NEAR_BOUNDARY",
            Region::Outside => "OUTSIDE",
        };
        f.write_str(s)
    }
}

/// User-facing domain parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub omega_radius: f64,
    pub gamma: GammaDescriptor,
    pub side: Side,
    #[serde(default)]
    pub test_ball_radius: Option<f64>,
    #[serde(default)]
    pub margin: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
enum Cut<R> {
    Chord { h: R },
    /// `p(s) = c - r·e^{-iαs}`, sweeping the arc through its leftmost point.
    Arc { c: R, r: R, alpha: R },
}

/// Fully validated domain data in working precision `R`.
#[derive(Clone, Debug)]
pub struct DomainSpec<R> {
    pub omega_radius: R,
    pub test_ball_radius: R,
    /// Width of the NEAR_BOUNDARY band around ∂D.
    pub margin: R,
    /// Kernel evaluations closer than this are refused.
    pub exclusion_radius: R,
    pub side: Side,
    pub descriptor: GammaDescriptor,
    cut: Cut<R>,
    sign: R,
    corner: C<R>,
    theta: R,
}

/// Build and validate a domain.
pub fn make_domain<R: Real>(cfg: &DomainConfig) -> Result<DomainSpec<R>, GeometryError> {
    let rad = cfg.omega_radius;
    if !(rad.is_finite() && rad > 0.0) {
        return Err(GeometryError::InvalidParameter(format!("omega_radius = {rad}")));
    }
    let sgn = match cfg.side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let big_r = R::from_f64(rad);
    let (cut, dist0) = match cfg.gamma {
        GammaDescriptor::Chord { offset } => {
            if !offset.is_finite() {
                return Err(GeometryError::InvalidParameter(format!("offset = {offset}")));
            }
            if offset.abs() >= rad {
                return Err(GeometryError::DegenerateChord { offset, radius: rad });
            }
            if offset == 0.0 {
                return Err(GeometryError::GammaThroughOrigin);
            }
            let h = sgn * offset;
            if h < 0.0 {
                // The origin would lie inside D.
                return Err(GeometryError::TestBallCollision {
                    radius: cfg.test_ball_radius.unwrap_or(0.0),
                    distance: 0.0,
                });
            }
            (Cut::Chord { h: R::from_f64(h) }, R::from_f64(h))
        }
        GammaDescriptor::Arc { center, radius } => {
            if !(center.is_finite() && radius.is_finite() && radius > 0.0) {
                return Err(GeometryError::InvalidParameter(format!(
                    "arc center = {center}, radius = {radius}"
                )));
            }
            let c = sgn * center;
            if c.abs() == radius {
                return Err(GeometryError::GammaThroughOrigin);
            }
            if c <= 0.0 || c < radius {
                return Err(GeometryError::TestBallCollision {
                    radius: cfg.test_ball_radius.unwrap_or(0.0),
                    distance: 0.0,
                });
            }
            if c >= rad + radius || c <= (rad - radius).abs() {
                return Err(GeometryError::DegenerateArc { center, radius });
            }
            let (cr, rr) = (R::from_f64(c), R::from_f64(radius));
            let xs = (big_r * big_r + cr * cr - rr * rr) / (R::two() * cr);
            let ys = (big_r * big_r - xs * xs).sqrt();
            let psi = ys.atan2(xs - cr);
            (Cut::Arc { c: cr, r: rr, alpha: R::pi() - psi }, cr - rr)
        }
    };
    let corner = match cut {
        Cut::Chord { h } => C::new(h, (big_r * big_r - h * h).sqrt()),
        Cut::Arc { c, r, .. } => {
            let xs = (big_r * big_r + c * c - r * r) / (R::two() * c);
            C::new(xs, (big_r * big_r - xs * xs).sqrt())
        }
    };
    let theta = corner.im.atan2(corner.re);
    let r_omega = match cfg.test_ball_radius {
        Some(v) => {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeometryError::InvalidParameter(format!("test_ball_radius = {v}")));
            }
            R::from_f64(v)
        }
        None => dist0 * R::half(),
    };
    if r_omega >= dist0 {
        return Err(GeometryError::TestBallCollision {
            radius: r_omega.to_f64(),
            distance: dist0.to_f64(),
        });
    }
    let margin = match cfg.margin {
        Some(m) if m.is_finite() && m > 0.0 => R::from_f64(m),
        Some(m) => return Err(GeometryError::InvalidParameter(format!("margin = {m}"))),
        None => big_r * R::from_f64(1e-3),
    };
    Ok(DomainSpec {
        omega_radius: big_r,
        test_ball_radius: r_omega,
        margin,
        exclusion_radius: big_r * R::from_f64(1e-8),
        side: cfg.side,
        descriptor: cfg.gamma,
        cut,
        sign: R::from_f64(sgn),
        corner,
        theta,
    })
}

impl<R: Real> DomainSpec<R> {
    /// The same domain in another precision.
    pub fn convert<S: Real>(&self) -> DomainSpec<S> {
        let cfg = self.config();
        let mut out = make_domain::<S>(&cfg).expect("domain was validated already");
        out.test_ball_radius = S::from_f64(self.test_ball_radius.to_f64());
        out.margin = S::from_f64(self.margin.to_f64());
        out
    }

    /// Parameters that rebuild this domain.
    pub fn config(&self) -> DomainConfig {
        DomainConfig {
            omega_radius: self.omega_radius.to_f64(),
            gamma: self.descriptor,
            side: self.side,
            test_ball_radius: Some(self.test_ball_radius.to_f64()),
            margin: Some(self.margin.to_f64()),
        }
    }

    fn to_canonical(&self, p: C<R>) -> C<R> {
        p * self.sign
    }

    fn to_physical(&self, q: C<R>) -> C<R> {
        q * self.sign
    }

    /// dist(0, Γ).
    pub fn gamma_distance_to_origin(&self) -> R {
        match self.cut {
            Cut::Chord { h } => h,
            Cut::Arc { c, r, .. } => c - r,
        }
    }

    /// Distance from the endpoints of Γ to the nearest other point of ∂Ω is
    /// zero by construction; this reports how far Γ stays from ∂Ω at its
    /// midpoint, used only for diagnostics.
    pub fn gamma_distance_to_outer_circle(&self) -> R {
        self.omega_radius - cabs(self.gamma_canonical(R::zero()))
    }

    /// Corners of D (endpoints of Γ), lower then upper, physical frame.
    pub fn corners(&self) -> [C<R>; 2] {
        [self.to_physical(self.corner.conj()), self.to_physical(self.corner)]
    }

    /// Half opening angle of the outer arc.
    pub fn outer_half_angle(&self) -> R {
        self.theta
    }

    fn gamma_canonical(&self, s: R) -> C<R> {
        match self.cut {
            Cut::Chord { h } => C::new(h, self.corner.im * s),
            Cut::Arc { c, r, alpha } => C::new(c, R::zero()) - from_polar(r, -(alpha * s)),
        }
    }

    fn gamma_canonical_deriv(&self, s: R) -> C<R> {
        match self.cut {
            Cut::Chord { .. } => C::new(R::zero(), self.corner.im),
            Cut::Arc { r, alpha, .. } => {
                from_polar(r, -(alpha * s)) * C::new(R::zero(), alpha)
            }
        }
    }

    fn arc_canonical(&self, s: R) -> C<R> {
        from_polar(self.omega_radius, self.theta * s)
    }

    fn arc_canonical_deriv(&self, s: R) -> C<R> {
        from_polar(self.omega_radius, self.theta * s) * C::new(R::zero(), self.theta)
    }

    /// Point on a boundary curve, physical frame.
    pub fn curve_point(&self, curve: Curve, s: R) -> C<R> {
        self.to_physical(match curve {
            Curve::Gamma => self.gamma_canonical(s),
            Curve::OuterArc => self.arc_canonical(s),
        })
    }

    /// Parameter derivative of a boundary curve, physical frame.
    pub fn curve_deriv(&self, curve: Curve, s: R) -> C<R> {
        self.to_physical(match curve {
            Curve::Gamma => self.gamma_canonical_deriv(s),
            Curve::OuterArc => self.arc_canonical_deriv(s),
        })
    }

    /// Analytic length of a boundary curve.
    pub fn curve_length(&self, curve: Curve) -> R {
        match (curve, self.cut) {
            (Curve::OuterArc, _) => R::two() * self.theta * self.omega_radius,
            (Curve::Gamma, Cut::Chord { .. }) => R::two() * self.corner.im,
            (Curve::Gamma, Cut::Arc { r, alpha, .. }) => R::two() * alpha * r,
        }
    }

    /// Analytic area of D.
    pub fn area_d(&self) -> R {
        let big_r = self.omega_radius;
        let seg = |d: R, rad: R| -> R {
            // Area of the part of B(0, rad) beyond the line x = d.
            let ratio = (d / rad).max(-R::one()).min(R::one());
            let acos = (R::one() - ratio * ratio).sqrt().atan2(ratio);
            rad * rad * acos - d * (rad * rad - d * d).sqrt()
        };
        match self.cut {
            Cut::Chord { h } => seg(h, big_r),
            Cut::Arc { c, r, .. } => {
                let xs = self.corner.re;
                // Ω-part right of x*, plus the small-circle part left of x*.
                seg(xs, big_r) + (r * r * R::pi() - seg(xs - c, r))
            }
        }
    }

    /// Strict membership in D.
    pub fn contains(&self, p: C<R>) -> bool {
        let q = self.to_canonical(p);
        if q.norm_sqr() >= self.omega_radius * self.omega_radius {
            return false;
        }
        match self.cut {
            Cut::Chord { h } => q.re > h,
            Cut::Arc { c, r, .. } => (q - C::new(c, R::zero())).norm_sqr() < r * r,
        }
    }

    /// Distance from `p` to Γ.
    pub fn dist_to_gamma(&self, p: C<R>) -> R {
        let q = self.to_canonical(p);
        let y = self.corner.im;
        match self.cut {
            Cut::Chord { h } => {
                let yy = q.im.max(-y).min(y);
                cabs(q - C::new(h, yy))
            }
            Cut::Arc { c, r, alpha } => {
                let w = q - C::new(c, R::zero());
                // Angle measured from the leftmost point of the circle.
                let phi = carg(-w);
                if phi.abs() <= alpha {
                    (cabs(w) - r).abs()
                } else {
                    cabs(q - self.corner).min(cabs(q - self.corner.conj()))
                }
            }
        }
    }

    /// Distance from `p` to the outer arc of ∂D.
    pub fn dist_to_outer_arc(&self, p: C<R>) -> R {
        let q = self.to_canonical(p);
        if carg(q).abs() <= self.theta {
            (cabs(q) - self.omega_radius).abs()
        } else {
            cabs(q - self.corner).min(cabs(q - self.corner.conj()))
        }
    }

    /// dist(p, ∂D).
    pub fn dist_to_boundary(&self, p: C<R>) -> R {
        self.dist_to_gamma(p).min(self.dist_to_outer_arc(p))
    }

    /// Classify a point.
    pub fn classify(&self, p: C<R>) -> Region {
        if self.dist_to_boundary(p) < self.margin {
            return Region::NearBoundary;
        }
        if p.norm_sqr() >= self.omega_radius * self.omega_radius {
            return Region::Outside;
        }
        if self.contains(p) {
            return Region::InD;
        }
        if p.norm_sqr() < self.test_ball_radius * self.test_ball_radius {
            Region::InOmegaTestBall
        } else {
            Region::InDplus
        }
    }

    /// Axis-aligned bounding box of D, `(xmin, xmax, ymin, ymax)`.
    pub fn bounding_box(&self) -> (R, R, R, R) {
        let mut lo = C::new(self.omega_radius, self.omega_radius);
        let mut hi = -lo;
        let n = 256;
        for curve in [Curve::Gamma, Curve::OuterArc] {
            for k in 0..=n {
                let s = R::from_f64(-1.0 + 2.0 * k as f64 / n as f64);
                let z = self.curve_point(curve, s);
                lo = C::new(lo.re.min(z.re), lo.im.min(z.im));
                hi = C::new(hi.re.max(z.re), hi.im.max(z.im));
            }
        }
        (lo.re, hi.re, lo.im, hi.im)
    }

    /// Ruled map `X(s, t) = (1 - t)·Γ(s) + t·A(s)` onto D, physical frame.
    pub fn ruled_point(&self, s: R, t: R) -> C<R> {
        let g = self.gamma_canonical(s);
        let a = self.arc_canonical(s);
        self.to_physical(g + (a - g) * t)
    }

    /// Area element of the ruled map.
    pub fn ruled_jacobian(&self, s: R, t: R) -> R {
        let g = self.gamma_canonical(s);
        let a = self.arc_canonical(s);
        let xs = self.gamma_canonical_deriv(s) * (R::one() - t) + self.arc_canonical_deriv(s) * t;
        let xt = a - g;
        (xs * xt.conj()).im
    }

    /// Invert the ruled map by Newton iteration.
    pub fn ruled_inverse(&self, p: C<R>) -> Option<(R, R)> {
        let q = self.to_canonical(p);
        let y = self.corner.im;
        let mut s = (q.im / y).max(-R::one()).min(R::one());
        let mut t = R::half();
        let tol = R::epsilon() * R::from_f64(64.0);
        for _ in 0..60 {
            let g = self.gamma_canonical(s);
            let a = self.arc_canonical(s);
            let x = g + (a - g) * t;
            let xs = self.gamma_canonical_deriv(s) * (R::one() - t) + self.arc_canonical_deriv(s) * t;
            let xt = a - g;
            let res = x - q;
            let det = xs.re * xt.im - xs.im * xt.re;
            if det == R::zero() {
                return None;
            }
            let ds = (res.re * xt.im - res.im * xt.re) / det;
            let dt = (xs.re * res.im - xs.im * res.re) / det;
            s -= ds;
            t -= dt;
            s = s.max(-R::from_f64(1.5)).min(R::from_f64(1.5));
            if ds.abs() + dt.abs() <= tol {
                break;
            }
        }
        let slack = R::from_f64(1e-9);
        let ok = s >= -R::one() - slack && s <= R::one() + slack && t >= -slack && t <= R::one() + slack;
        let back = self.ruled_point(s, t);
        if ok && cabs(back - p) <= R::from_f64(1e-10) * self.omega_radius {
            Some((s, t))
        } else {
            None
        }
    }

    /// Uniform `n × n` grid over the bounding box of D keeping points of D at
    /// distance at least `min_dist` from ∂D.
    pub fn interior_grid(&self, n: usize, min_dist: R) -> Vec<C<R>> {
        let (x0, x1, y0, y1) = self.bounding_box();
        let mut out = Vec::new();
        let step = |a: R, b: R, k: usize| a + (b - a) * R::from_usize(k) / R::from_usize(n - 1);
        for j in 0..n {
            for i in 0..n {
                let p = C::new(step(x0, x1, i), step(y0, y1, j));
                if self.contains(p) && self.dist_to_boundary(p) >= min_dist {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// Area of the region of a disc of radius `radius` beyond the line `x = d`.
pub fn circular_segment_area(radius: f64, d: f64) -> f64 {
    let ratio = (d / radius).clamp(-1.0, 1.0);
    radius * radius * ratio.acos() - d * (radius * radius - d * d).max(0.0).sqrt()
}

/// A Gauss panel on a boundary curve.
#[derive(Clone, Debug)]
pub struct Panel<R> {
    pub curve: Curve,
    pub s0: R,
    pub s1: R,
    /// Index of the first node of the panel in the rule.
    pub start: usize,
    pub len: usize,
}

/// Composite Gauss–Legendre rule on part of ∂D.
#[derive(Clone, Debug)]
pub struct BoundaryRule<R> {
    pub part: BoundaryPart,
    pub nodes: Vec<C<R>>,
    /// Arc-length weights, all positive.
    pub weights: Vec<R>,
    /// Oriented line elements `dζ` following the positive orientation of ∂D.
    pub dz: Vec<C<R>>,
    /// Unit normals pointing out of D.
    pub normals: Vec<C<R>>,
    /// Curve parameter of each node.
    pub params: Vec<R>,
    pub panels: Vec<Panel<R>>,
    pub gauss: GaussRule<R>,
}

fn rc<R: Real, S: Real>(x: R) -> S {
    S::from_f64(x.to_f64())
}

impl<R: Real> BoundaryRule<R> {
    /// The same nodes and weights rounded to another precision, so that
    /// evaluations in both precisions share one quadrature.
    pub fn convert<S: Real>(&self) -> BoundaryRule<S> {
        BoundaryRule {
            part: self.part,
            nodes: self.nodes.iter().map(|z| cast(*z)).collect(),
            weights: self.weights.iter().map(|w| rc(*w)).collect(),
            dz: self.dz.iter().map(|z| cast(*z)).collect(),
            normals: self.normals.iter().map(|z| cast(*z)).collect(),
            params: self.params.iter().map(|s| rc(*s)).collect(),
            panels: self
                .panels
                .iter()
                .map(|p| Panel { curve: p.curve, s0: rc(p.s0), s1: rc(p.s1), start: p.start, len: p.len })
                .collect(),
            gauss: self.gauss.convert(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Panel index containing node `i`.
    pub fn panel_of(&self, i: usize) -> usize {
        self.panels.partition_point(|p| p.start + p.len <= i)
    }

    /// Σ wⱼ f(ζⱼ) against arc length.
    pub fn integrate<F: Fn(C<R>) -> C<R>>(&self, f: F) -> C<R> {
        let mut acc = C::new(R::zero(), R::zero());
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*z) * *w;
        }
        acc
    }

    /// Total length.
    pub fn length(&self) -> R {
        self.weights.iter().fold(R::zero(), |a, &w| a + w)
    }
}

const DEFAULT_PANEL_ORDER: usize = 16;

/// Composite Gauss rule with about `n_nodes` nodes (at least 8).
pub fn boundary_quadrature<R: Real>(
    spec: &DomainSpec<R>,
    part: BoundaryPart,
    n_nodes: usize,
) -> BoundaryRule<R> {
    let n_nodes = n_nodes.max(8);
    let curves = part.curves().len();
    let order = DEFAULT_PANEL_ORDER.min(n_nodes / curves).max(4);
    let panels = (n_nodes / order).max(curves);
    boundary_rule(spec, part, panels, order)
}

/// Composite Gauss rule with an explicit panel count and per-panel order.
pub fn boundary_rule<R: Real>(
    spec: &DomainSpec<R>,
    part: BoundaryPart,
    n_panels: usize,
    order: usize,
) -> BoundaryRule<R> {
    let breaks = graded_breaks(spec, part.curves(), n_panels);
    let gauss = GaussRule::<R>::new(order);
    let mut rule = BoundaryRule {
        part,
        nodes: Vec::new(),
        weights: Vec::new(),
        dz: Vec::new(),
        normals: Vec::new(),
        params: Vec::new(),
        panels: Vec::new(),
        gauss: gauss.clone(),
    };
    for (curve, s0, s1) in breaks {
        let start = rule.nodes.len();
        let orient = R::from_f64(curve.orientation() as f64);
        for (s, w) in gauss.mapped(s0, s1) {
            let z = spec.curve_point(curve, s);
            let d = spec.curve_deriv(curve, s);
            let speed = cabs(d);
            let tangent = d * orient / speed;
            rule.nodes.push(z);
            rule.weights.push(w * speed);
            rule.dz.push(tangent * (w * speed));
            // Outward normal: tangent rotated clockwise.
            rule.normals.push(C::new(tangent.im, -tangent.re));
            rule.params.push(s);
        }
        rule.panels.push(Panel { curve, s0, s1, start, len: order });
    }
    rule
}

/// Deterministic greedy panel placement on the given curves. Panels are split
/// at their parameter midpoint in order of decreasing length relative to the
/// local scale, which shrinks near the origin and near the corners.
fn graded_breaks<R: Real>(spec: &DomainSpec<R>, curves: &[Curve], n_panels: usize) -> Vec<(Curve, R, R)> {
    let mut panels: Vec<(Curve, R, R)> = Vec::new();
    let per = if n_panels >= 2 * curves.len() { 2 } else { 1 };
    for &c in curves {
        if per == 2 {
            panels.push((c, -R::one(), R::zero()));
            panels.push((c, R::zero(), R::one()));
        } else {
            panels.push((c, -R::one(), R::one()));
        }
    }
    let rad = spec.omega_radius.to_f64();
    let corners = spec.corners().map(|z| crate::scalar::to_c64(z));
    let badness = |&(c, s0, s1): &(Curve, R, R)| -> f64 {
        let a = crate::scalar::to_c64(spec.curve_point(c, s0));
        let b = crate::scalar::to_c64(spec.curve_point(c, s1));
        let m = crate::scalar::to_c64(spec.curve_point(c, (s0 + s1) * R::half()));
        let len = (a - m).norm() + (m - b).norm();
        let dc = corners.iter().map(|k| (m - k).norm()).fold(f64::INFINITY, f64::min);
        let scale = m.norm().min((4.0 * dc).max(1e-2 * rad));
        len / scale
    };
    while panels.len() < n_panels {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, p) in panels.iter().enumerate() {
            let v = badness(p);
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        let (c, s0, s1) = panels[best];
        let mid = (s0 + s1) * R::half();
        panels[best] = (c, s0, mid);
        panels.insert(best + 1, (c, mid, s1));
    }
    panels
}

/// Region selector for area rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AreaRegion {
    D,
    OmegaTestBall,
}

/// Parametrisation used by a cell-structured area rule.
#[derive(Clone, Debug)]
pub enum CellMap<R> {
    /// The ruled map of D.
    Ruled(Box<DomainSpec<R>>),
    /// Polar coordinates `(ρ, θ)` about a centre.
    Polar { center: C<R> },
}

impl<R: Real> CellMap<R> {
    pub fn point(&self, s: R, t: R) -> C<R> {
        match self {
            CellMap::Ruled(d) => d.ruled_point(s, t),
            CellMap::Polar { center } => *center + from_polar(s, t),
        }
    }

    pub fn jacobian(&self, s: R, t: R) -> R {
        match self {
            CellMap::Ruled(d) => d.ruled_jacobian(s, t),
            CellMap::Polar { .. } => s,
        }
    }

    pub fn inverse(&self, p: C<R>) -> Option<(R, R)> {
        match self {
            CellMap::Ruled(d) => d.ruled_inverse(p),
            CellMap::Polar { center } => {
                let w = p - *center;
                let mut th = carg(w);
                if th < R::zero() {
                    th += R::two() * R::pi();
                }
                Some((cabs(w), th))
            }
        }
    }
}

/// A tensor Gauss cell in parameter space.
#[derive(Clone, Debug)]
pub struct Cell<R> {
    pub s0: R,
    pub s1: R,
    pub t0: R,
    pub t1: R,
    pub start: usize,
    pub len: usize,
    /// Physical centre and a bounding radius, for near-field tests.
    pub center: C<R>,
    pub radius: R,
}

impl<R: Real> CellMap<R> {
    /// Centre and bounding radius of the image of a parameter rectangle.
    pub fn bounds(&self, s0: R, s1: R, t0: R, t1: R) -> (C<R>, R) {
        let sm = (s0 + s1) * R::half();
        let tm = (t0 + t1) * R::half();
        let c = self.point(sm, tm);
        let mut r = R::zero();
        for &s in &[s0, sm, s1] {
            for &t in &[t0, tm, t1] {
                r = r.max(cabs(self.point(s, t) - c));
            }
        }
        // The image of an edge bulges past its three samples by a small
        // amount for the curved maps used here.
        (c, r * R::from_f64(1.05))
    }
}

/// Area quadrature rule. Cell structure is present for rules that support
/// singular (target-adapted) integration.
#[derive(Clone, Debug)]
pub struct AreaRule<R> {
    pub nodes: Vec<C<R>>,
    pub weights: Vec<R>,
    pub cells: Vec<Cell<R>>,
    pub map: Option<CellMap<R>>,
    pub gauss: Option<GaussRule<R>>,
}

impl<R: Real> AreaRule<R> {
    /// The same rule rounded to another precision.
    pub fn convert<S: Real>(&self) -> AreaRule<S> {
        AreaRule {
            nodes: self.nodes.iter().map(|z| cast(*z)).collect(),
            weights: self.weights.iter().map(|w| rc(*w)).collect(),
            cells: self
                .cells
                .iter()
                .map(|c| Cell {
                    s0: rc(c.s0),
                    s1: rc(c.s1),
                    t0: rc(c.t0),
                    t1: rc(c.t1),
                    start: c.start,
                    len: c.len,
                    center: cast(c.center),
                    radius: rc(c.radius),
                })
                .collect(),
            map: self.map.as_ref().map(|m| match m {
                CellMap::Ruled(d) => CellMap::Ruled(Box::new(d.convert())),
                CellMap::Polar { center } => CellMap::Polar { center: cast(*center) },
            }),
            gauss: self.gauss.as_ref().map(|g| g.convert()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> R {
        self.weights.iter().fold(R::zero(), |a, &w| a + w)
    }

    pub fn integrate<F: Fn(C<R>) -> C<R>>(&self, f: F) -> C<R> {
        let mut acc = C::new(R::zero(), R::zero());
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*z) * *w;
        }
        acc
    }
}

/// Resolution of the cell rule on D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaResolution {
    /// Panels along Γ.
    pub s_panels: usize,
    /// Layers between Γ and the outer arc.
    pub t_panels: usize,
    /// Gauss points per cell direction.
    pub order: usize,
    /// Geometric layering toward Γ and greedy panel grading along Γ.
    pub graded: bool,
}

impl Default for AreaResolution {
    fn default() -> Self {
        AreaResolution { s_panels: 16, t_panels: 6, order: 16, graded: true }
    }
}

/// Area rule on D or on the test ball, `resolution ≥ 16`.
pub fn area_quadrature<R: Real>(
    spec: &DomainSpec<R>,
    region: AreaRegion,
    resolution: usize,
) -> Result<AreaRule<R>, GeometryError> {
    let res = resolution.max(16);
    match region {
        AreaRegion::OmegaTestBall => Ok(disc_rule(
            C::new(R::zero(), R::zero()),
            spec.test_ball_radius,
            res / 2 + 8,
            2 * res + 16,
        )),
        AreaRegion::D => domain_rule(
            spec,
            AreaResolution { s_panels: res, t_panels: (res / 3).max(5), ..Default::default() },
        ),
    }
}

/// Mapped tensor-cell rule on D.
pub fn domain_rule<R: Real>(spec: &DomainSpec<R>, res: AreaResolution) -> Result<AreaRule<R>, GeometryError> {
    let s_breaks: Vec<(R, R)> = if res.graded {
        graded_breaks(spec, &[Curve::Gamma], res.s_panels).into_iter().map(|(_, a, b)| (a, b)).collect()
    } else {
        uniform_breaks(-R::one(), R::one(), res.s_panels)
    };
    let t_breaks: Vec<(R, R)> = if res.graded {
        let m = res.t_panels as i32;
        let denom = R::two().powi(m) - R::one();
        (0..m)
            .map(|k| ((R::two().powi(k) - R::one()) / denom, (R::two().powi(k + 1) - R::one()) / denom))
            .collect()
    } else {
        uniform_breaks(R::zero(), R::one(), res.t_panels)
    };
    let map = CellMap::Ruled(Box::new(spec.clone()));
    let gauss = GaussRule::<R>::new(res.order);
    let mut rule = AreaRule { nodes: vec![], weights: vec![], cells: vec![], map: None, gauss: None };
    for &(s0, s1) in &s_breaks {
        for &(t0, t1) in &t_breaks {
            let start = rule.nodes.len();
            push_cell(&mut rule, &map, &gauss, s0, s1, t0, t1)?;
            let (center, radius) = map.bounds(s0, s1, t0, t1);
            rule.cells.push(Cell { s0, s1, t0, t1, start, len: res.order * res.order, center, radius });
        }
    }
    rule.map = Some(map);
    rule.gauss = Some(gauss);
    Ok(rule)
}

fn push_cell<R: Real>(
    rule: &mut AreaRule<R>,
    map: &CellMap<R>,
    gauss: &GaussRule<R>,
    s0: R,
    s1: R,
    t0: R,
    t1: R,
) -> Result<(), GeometryError> {
    for (s, ws) in gauss.mapped(s0, s1) {
        for (t, wt) in gauss.mapped(t0, t1) {
            let j = map.jacobian(s, t);
            if !(j > R::zero()) {
                return Err(GeometryError::FoldedParametrization(j.to_f64()));
            }
            rule.nodes.push(map.point(s, t));
            rule.weights.push(ws * wt * j);
        }
    }
    Ok(())
}

fn uniform_breaks<R: Real>(a: R, b: R, n: usize) -> Vec<(R, R)> {
    let n = n.max(1);
    (0..n)
        .map(|k| {
            let x0 = a + (b - a) * R::from_usize(k) / R::from_usize(n);
            let x1 = a + (b - a) * R::from_usize(k + 1) / R::from_usize(n);
            (x0, x1)
        })
        .collect()
}

/// Polar product rule on a disc: Gauss–Legendre in `σ = ρ²` and the
/// trapezoid rule in angle. Exact for `z^j z̄^k` when `|j - k| < n_angular`
/// and `j + k < 4 n_radial`.
pub fn disc_rule<R: Real>(center: C<R>, radius: R, n_radial: usize, n_angular: usize) -> AreaRule<R> {
    let g = GaussRule::<R>::new(n_radial);
    let mut nodes = Vec::with_capacity(n_radial * n_angular);
    let mut weights = Vec::with_capacity(n_radial * n_angular);
    let dtheta = R::two() * R::pi() / R::from_usize(n_angular);
    let angles: Vec<C<R>> = (0..n_angular).map(|k| from_polar(R::one(), dtheta * R::from_usize(k))).collect();
    for (sigma, w) in g.mapped(R::zero(), radius * radius) {
        let rho = sigma.sqrt();
        for e in &angles {
            nodes.push(center + *e * rho);
            weights.push(w * R::half() * dtheta);
        }
    }
    AreaRule { nodes, weights, cells: vec![], map: None, gauss: None }
}

/// Polar cell rule on a disc supporting target-adapted integration.
pub fn disc_cell_rule<R: Real>(
    center: C<R>,
    radius: R,
    rho_panels: usize,
    theta_panels: usize,
    order: usize,
) -> AreaRule<R> {
    let map = CellMap::Polar { center };
    let gauss = GaussRule::<R>::new(order);
    let mut rule = AreaRule { nodes: vec![], weights: vec![], cells: vec![], map: None, gauss: None };
    for (r0, r1) in uniform_breaks(R::zero(), radius, rho_panels) {
        for (t0, t1) in uniform_breaks(R::zero(), R::two() * R::pi(), theta_panels) {
            let start = rule.nodes.len();
            for (s, ws) in gauss.mapped(r0, r1) {
                for (t, wt) in gauss.mapped(t0, t1) {
                    rule.nodes.push(map.point(s, t));
                    rule.weights.push(ws * wt * s);
                }
            }
            let (center, radius) = map.bounds(r0, r1, t0, t1);
            rule.cells.push(Cell { s0: r0, s1: r1, t0, t1, start, len: order * order, center, radius });
        }
    }
    rule.map = Some(map);
    rule.gauss = Some(gauss);
    rule
}
