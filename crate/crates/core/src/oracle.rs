//! Brute-force references used to check the rest of the crate: manufactured
//! solutions, closed-form geometry, finite differences and refinement
//! studies. Nothing here calls the quadrature or potential code.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DomainSpec, GammaDescriptor};
use crate::scalar::{Real, C};
use crate::solver::CauchySource;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),
    #[error("grid needs at least 3 points per direction, got {nx}x{ny}")]
    GridTooCoarse { nx: usize, ny: usize },
    #[error("refinement study needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("{0} samples do not match the grid")]
    SampleMismatch(usize),
}

// ---------------------------------------------------------------------------
// Manufactured cases

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaseKind {
    /// `u = z²`.
    Poly2,
    /// `u = z̄`, `f = 1`.
    ZbarRhs,
    /// `u = 1/(z − a)` with `|a| > R`.
    PoleOutside { re: f64, im: f64 },
    /// `u = 1/(z − a)` with `a ∈ D⁺`.
    PoleInDplus { re: f64, im: f64 },
    /// `u₀ = ζ̄` on Γ, `f = 0`.
    Antiholo,
    /// Laplace data of `u = Re z³ + 2`.
    HarmonicCubic,
}

pub const CATALOG: [&str; 6] = ["POLY2", "ZBAR_RHS", "POLE_OUTSIDE", "POLE_IN_DPLUS", "ANTIHOLO", "HARMONIC_CUBIC"];

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |re: f64, im: f64| if im == 0.0 { format!("{re}") } else { format!("{re},{im}") };
        match self {
            CaseKind::Poly2 => write!(f, "POLY2"),
            CaseKind::ZbarRhs => write!(f, "ZBAR_RHS"),
            CaseKind::PoleOutside { re, im } => write!(f, "POLE_OUTSIDE({})", arg(*re, *im)),
            CaseKind::PoleInDplus { re, im } => write!(f, "POLE_IN_DPLUS({})", arg(*re, *im)),
            CaseKind::Antiholo => write!(f, "ANTIHOLO"),
            CaseKind::HarmonicCubic => write!(f, "HARMONIC_CUBIC"),
        }
    }
}

impl FromStr for CaseKind {
    type Err = OracleError;

    /// `NAME` or `NAME(a)` with `a` written `re` or `re,im`.
    fn from_str(s: &str) -> Result<Self, OracleError> {
        let bad = || OracleError::UnknownCase(s.to_string());
        let t = s.trim();
        let (name, arg) = match t.find('(') {
            Some(i) if t.ends_with(')') => (&t[..i], Some(&t[i + 1..t.len() - 1])),
            Some(_) => return Err(bad()),
            None => (t, None),
        };
        let point = |default: (f64, f64)| -> Result<(f64, f64), OracleError> {
            let Some(a) = arg else { return Ok(default) };
            let parts: Vec<&str> = a.split(',').map(str::trim).collect();
            let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
            match parts.as_slice() {
                [re] => Ok((num(re)?, 0.0)),
                [re, im] => Ok((num(re)?, num(im)?)),
                _ => Err(bad()),
            }
        };
        let plain = |k: CaseKind| if arg.is_some() { Err(bad()) } else { Ok(k) };
        match name.to_ascii_uppercase().as_str() {
            "POLY2" => plain(CaseKind::Poly2),
            "ZBAR_RHS" => plain(CaseKind::ZbarRhs),
            "ANTIHOLO" => plain(CaseKind::Antiholo),
            "HARMONIC_CUBIC" => plain(CaseKind::HarmonicCubic),
            "POLE_OUTSIDE" => point((2.0, 0.0)).map(|(re, im)| CaseKind::PoleOutside { re, im }),
            "POLE_IN_DPLUS" => point((-0.5, 0.0)).map(|(re, im)| CaseKind::PoleInDplus { re, im }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    /// Whether the Cauchy problem on a generic lens has an L²(D) solution.
    pub solvable: bool,
    pub notes: String,
}

pub fn manufactured_case(name: &str) -> Result<ManufacturedCase, OracleError> {
    let kind: CaseKind = name.parse()?;
    let (solvable, notes) = match kind {
        CaseKind::Poly2 => (true, "entire".to_string()),
        CaseKind::ZbarRhs => (true, "dbar u = 1".to_string()),
        CaseKind::PoleOutside { re, im } => (true, format!("pole at {re}{im:+}i outside the disc")),
        CaseKind::PoleInDplus { re, im } => (true, format!("pole at {re}{im:+}i in D+")),
        CaseKind::Antiholo => (false, "conj(z) on Gamma; see solvable_on for straight cuts".to_string()),
        CaseKind::HarmonicCubic => (true, "classical data of Re z^3 + 2; g = 3 z^2".to_string()),
    };
    Ok(ManufacturedCase { kind, solvable, notes })
}

fn pole<R: Real>(re: f64, im: f64) -> C<R> {
    C::new(R::from_f64(re), R::from_f64(im))
}

impl ManufacturedCase {
    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    /// Solvability on a given domain. On a chord `ζ̄ = 2h − ζ` on Γ, so
    /// ANTIHOLO has the holomorphic solution `2h − z`; on an arc the
    /// continuation `c + r²/(z − c)` has its pole inside D.
    pub fn solvable_on<R: Real>(&self, spec: &DomainSpec<R>) -> bool {
        match self.kind {
            CaseKind::Antiholo => matches!(spec.descriptor, GammaDescriptor::Chord { .. }),
            _ => self.solvable,
        }
    }

    /// Exact solution in D, when one exists on this domain.
    pub fn exact<R: Real>(&self, spec: &DomainSpec<R>, z: C<R>) -> Option<C<R>> {
        Some(match self.kind {
            CaseKind::Poly2 => z * z,
            CaseKind::ZbarRhs => z.conj(),
            CaseKind::PoleOutside { re, im } | CaseKind::PoleInDplus { re, im } => (z - pole::<R>(re, im)).inv(),
            CaseKind::Antiholo => match spec.descriptor {
                GammaDescriptor::Chord { offset } => C::new(R::from_f64(2.0 * offset), R::zero()) - z,
                GammaDescriptor::Arc { .. } => return None,
            },
            // The holomorphic datum g = u_x − i u_y.
            CaseKind::HarmonicCubic => z * z * R::from_f64(3.0),
        })
    }

    /// `u₀` at a point of Γ.
    pub fn u0<R: Real>(&self, z: C<R>) -> C<R> {
        match self.kind {
            CaseKind::Poly2 => z * z,
            CaseKind::ZbarRhs | CaseKind::Antiholo => z.conj(),
            CaseKind::PoleOutside { re, im } | CaseKind::PoleInDplus { re, im } => (z - pole::<R>(re, im)).inv(),
            CaseKind::HarmonicCubic => z * z * R::from_f64(3.0),
        }
    }

    /// `f = ∂̄u` in D.
    pub fn f<R: Real>(&self, _z: C<R>) -> C<R> {
        match self.kind {
            CaseKind::ZbarRhs => C::new(R::one(), R::zero()),
            _ => C::new(R::zero(), R::zero()),
        }
    }

    pub fn has_f(&self) -> bool {
        self.kind == CaseKind::ZbarRhs
    }

    pub fn is_classical(&self) -> bool {
        self.kind == CaseKind::HarmonicCubic
    }

    /// Harmonic potential and its gradient `(u, u_x + i u_y)` of a classical case.
    pub fn classical<R: Real>(&self, z: C<R>) -> Option<(R, C<R>)> {
        match self.kind {
            CaseKind::HarmonicCubic => {
                let (x, y) = (z.re, z.im);
                let three = R::from_f64(3.0);
                let u = x * x * x - three * x * y * y + R::two();
                let grad = C::new(three * (x * x - y * y), -(R::from_f64(6.0) * x * y));
                Some((u, grad))
            }
            _ => None,
        }
    }
}

impl<R: Real> CauchySource<R> for ManufacturedCase {
    fn u0(&self, z: C<R>, _s: R) -> C<R> {
        ManufacturedCase::u0(self, z)
    }

    fn f(&self, z: C<R>) -> C<R> {
        ManufacturedCase::f(self, z)
    }

    fn has_f(&self) -> bool {
        ManufacturedCase::has_f(self)
    }
}

// ---------------------------------------------------------------------------
// Closed forms

/// `c_ν` of `F(ζ) = 1/(ζ − a)`, `|a| > r_ω`, in the analytic basis of
/// B(0, R): from `1/(ζ − a) = −Σ ζ^k / a^{k+1}` and `b_ν = β_ν ζ^{ν−1}`,
/// `c_ν = −a^{−ν}/β_ν`.
pub fn pole_coefficients(a: C<f64>, radius: f64, n: usize) -> Vec<C<f64>> {
    (1..=n)
        .map(|nu| {
            let beta = (nu as f64 / std::f64::consts::PI).sqrt() / radius.powi(nu as i32);
            -a.powi(-(nu as i32)) / beta
        })
        .collect()
}

/// `J(ν)` by direct binomial products in exact integer arithmetic:
/// `J = C(ν+d−1, d−1) − C(ν+d−3, d−1)`.
pub fn harmonic_count_oracle(d: u64, nu: u64) -> u128 {
    fn binom(n: i64, k: i64) -> u128 {
        if n < k || k < 0 {
            return 0;
        }
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc
    }
    let (d, nu) = (d as i64, nu as i64);
    binom(nu + d - 1, d - 1) - binom(nu + d - 3, d - 1)
}

/// Area of D from its descriptor: the circular segment beyond a chord, or
/// the lens of two intersecting circles.
pub fn lens_area(radius: f64, gamma: GammaDescriptor) -> f64 {
    match gamma {
        GammaDescriptor::Chord { offset } => {
            let h = offset.abs();
            radius * radius * (h / radius).acos() - h * (radius * radius - h * h).sqrt()
        }
        GammaDescriptor::Arc { center, radius: r } => {
            let d = center.abs();
            let big = radius;
            let a1 = ((d * d + big * big - r * r) / (2.0 * d * big)).acos();
            let a2 = ((d * d + r * r - big * big) / (2.0 * d * r)).acos();
            let k = ((-d + big + r) * (d + big - r) * (d - big + r) * (d + big + r)).sqrt();
            big * big * a1 + r * r * a2 - 0.5 * k
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Quasi-Monte Carlo estimate of the area of `{p : inside(p)}` within the
/// box `[x0,x1]×[y0,y1]` from `n` Halton points.
pub fn halton_area(inside: impl Fn(C<f64>) -> bool, bbox: (f64, f64, f64, f64), n: u64) -> f64 {
    let (x0, x1, y0, y1) = bbox;
    let hits = (1..=n)
        .filter(|&i| {
            let p = C::new(x0 + (x1 - x0) * radical_inverse(i, 2), y0 + (y1 - y0) * radical_inverse(i, 3));
            inside(p)
        })
        .count();
    (x1 - x0) * (y1 - y0) * hits as f64 / n as f64
}

/// Area enclosed by a closed polygon (shoelace formula).
pub fn polygon_area(vertices: &[C<f64>]) -> f64 {
    let n = vertices.len();
    (0..n).map(|i| {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        a.re * b.im - b.re * a.im
    })
    .sum::<f64>()
        * 0.5
}

/// Vertices of D sampled uniformly in angle along both boundary pieces, from
/// the descriptor alone, counter-clockwise.
pub fn boundary_polygon(radius: f64, gamma: GammaDescriptor, right: bool, n: usize) -> Vec<C<f64>> {
    let sgn = if right { 1.0 } else { -1.0 };
    let mut pts = Vec::with_capacity(2 * n);
    match gamma {
        GammaDescriptor::Chord { offset } => {
            let h = sgn * offset;
            let th = (radius * radius - h * h).sqrt().atan2(h);
            for k in 0..n {
                let t = -th + 2.0 * th * k as f64 / n as f64;
                pts.push(C::from_polar(radius, t));
            }
            let y = (radius * radius - h * h).sqrt();
            for k in 0..n {
                pts.push(C::new(h, y - 2.0 * y * k as f64 / n as f64));
            }
        }
        GammaDescriptor::Arc { center, radius: r } => {
            let c = sgn * center;
            let xs = (radius * radius + c * c - r * r) / (2.0 * c);
            let ys = (radius * radius - xs * xs).sqrt();
            let th = ys.atan2(xs);
            for k in 0..n {
                let t = -th + 2.0 * th * k as f64 / n as f64;
                pts.push(C::from_polar(radius, t));
            }
            let phi = ys.atan2(xs - c);
            for k in 0..n {
                let t = phi + 2.0 * (std::f64::consts::PI - phi) * k as f64 / n as f64;
                pts.push(C::new(c, 0.0) + C::from_polar(r, t));
            }
        }
    }
    pts.into_iter().map(|p| p * sgn).collect()
}

// ---------------------------------------------------------------------------
// Polynomial fit on Γ

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub degree: usize,
    /// Relative discrete L² residual of the fit on the sample points.
    pub residual: f64,
    /// Largest modulus of the fitted polynomial at the probes.
    pub max_at_probes: f64,
}

/// Least-squares fit of `data` at `points` by polynomials of degree
/// ≤ `degree`, orthogonalised on the points (Vandermonde with Arnoldi).
pub fn polynomial_fit(points: &[C<f64>], data: &[C<f64>], degree: usize, probes: &[C<f64>]) -> PolynomialFit {
    let m = points.len();
    let sm = (m as f64).sqrt();
    let mut q: Vec<Vec<C<f64>>> = vec![vec![C::new(1.0 / sm, 0.0); m]];
    let mut hess = vec![vec![C::new(0.0, 0.0); degree + 1]; degree + 2];
    for k in 0..degree {
        let mut v: Vec<C<f64>> = points.iter().zip(&q[k]).map(|(z, x)| z * x).collect();
        for _ in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let h: C<f64> = qj.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                hess[j][k] += h;
                for (vi, a) in v.iter_mut().zip(qj) {
                    *vi -= h * a;
                }
            }
        }
        let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        hess[k + 1][k] = C::new(nrm, 0.0);
        q.push(v.iter().map(|x| x / nrm).collect());
    }
    let coef: Vec<C<f64>> = q.iter().map(|qj| qj.iter().zip(data).map(|(a, b)| a.conj() * b).sum()).collect();
    let fit: Vec<C<f64>> = (0..m).map(|i| q.iter().zip(&coef).map(|(qj, c)| qj[i] * c).sum()).collect();
    let dn = data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let rn = data.iter().zip(&fit).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    // Evaluate the orthogonal polynomials at the probes through the same
    // recurrence.
    let mut max_at_probes = 0.0f64;
    for z in probes {
        let mut w = vec![C::new(1.0 / sm, 0.0)];
        for k in 0..degree {
            let mut v = z * w[k];
            for (j, wj) in w.iter().enumerate() {
                v -= hess[j][k] * wj;
            }
            w.push(v / hess[k + 1][k].re);
        }
        let val: C<f64> = w.iter().zip(&coef).map(|(a, c)| a * c).sum();
        max_at_probes = max_at_probes.max(val.norm());
    }
    PolynomialFit { degree, residual: rn / dn.max(f64::MIN_POSITIVE), max_at_probes }
}

// ---------------------------------------------------------------------------
// Finite differences

/// Samples on a uniform grid, row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSamples {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<C<f64>>,
}

impl GridSamples {
    pub fn sample(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, f: impl Fn(C<f64>) -> C<f64>) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(C::new(x0 + h * i as f64, y0 + h * j as f64)));
            }
        }
        GridSamples { x0, y0, h, nx, ny, values }
    }

    pub fn point(&self, i: usize, j: usize) -> C<f64> {
        C::new(self.x0 + self.h * i as f64, self.y0 + self.h * j as f64)
    }

    pub fn at(&self, i: usize, j: usize) -> C<f64> {
        self.values[j * self.nx + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FdOperator {
    /// `½(∂x + i∂y)`.
    Dbar,
    Laplacian,
    /// `∂x f₂ − ∂y f₁` of `f₁ + i f₂`.
    Curl,
}

/// Second-order centred stencils on the grid interior; the result grid drops
/// one layer of points on each side.
pub fn fd_operator(s: &GridSamples, op: FdOperator) -> Result<GridSamples, OracleError> {
    if s.nx < 3 || s.ny < 3 {
        return Err(OracleError::GridTooCoarse { nx: s.nx, ny: s.ny });
    }
    if s.values.len() != s.nx * s.ny {
        return Err(OracleError::SampleMismatch(s.values.len()));
    }
    let h = s.h;
    let mut values = Vec::with_capacity((s.nx - 2) * (s.ny - 2));
    for j in 1..s.ny - 1 {
        for i in 1..s.nx - 1 {
            let dx = (s.at(i + 1, j) - s.at(i - 1, j)) / (2.0 * h);
            let dy = (s.at(i, j + 1) - s.at(i, j - 1)) / (2.0 * h);
            values.push(match op {
                FdOperator::Dbar => (dx + C::new(0.0, 1.0) * dy) * 0.5,
                FdOperator::Laplacian => {
                    (s.at(i + 1, j) + s.at(i - 1, j) + s.at(i, j + 1) + s.at(i, j - 1) - s.at(i, j) * 4.0) / (h * h)
                }
                FdOperator::Curl => C::new(dx.im - dy.re, 0.0),
            });
        }
    }
    Ok(GridSamples { x0: s.x0 + h, y0: s.y0 + h, h, nx: s.nx - 2, ny: s.ny - 2, values })
}

// ---------------------------------------------------------------------------
// Refinement studies

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log e` against `log h`.
    pub order: f64,
    /// Slopes between consecutive levels.
    pub local_orders: Vec<f64>,
    /// Reported when some level did not reduce the error.
    pub non_monotone: bool,
}

/// Run `op(level) -> (h, error)` over the levels and fit the convergence
/// order.
pub fn refinement_study(
    op: impl Fn(usize) -> (f64, f64),
    levels: &[usize],
) -> Result<RefinementStudy, OracleError> {
    if levels.len() < 3 {
        return Err(OracleError::TooFewLevels(levels.len()));
    }
    let (steps, errors): (Vec<f64>, Vec<f64>) = levels.iter().map(|&l| op(l)).unzip();
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let local_orders = xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
    let non_monotone = errors.windows(2).any(|e| e[1] > e[0]);
    Ok(RefinementStudy { steps, errors, order: sxy / sxx, local_orders, non_monotone })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_parse() {
        for n in CATALOG {
            assert!(manufactured_case(n).is_ok(), "{n}");
        }
        let c = manufactured_case("POLE_OUTSIDE(2)").unwrap();
        assert_eq!(c.kind, CaseKind::PoleOutside { re: 2.0, im: 0.0 });
        assert_eq!(c.name(), "POLE_OUTSIDE(2)");
        let c = manufactured_case("pole_in_dplus(-0.4, 0.1)").unwrap();
        assert_eq!(c.kind, CaseKind::PoleInDplus { re: -0.4, im: 0.1 });
        assert!(manufactured_case("POLY3").is_err());
        assert!(manufactured_case("POLY2(1)").is_err());
        assert!(!manufactured_case("ANTIHOLO").unwrap().solvable);
        assert!(manufactured_case("ZBAR_RHS").unwrap().solvable);
    }

    #[test]
    fn stencils_on_polynomials() {
        let s = GridSamples::sample(-1.0, -1.0, 0.1, 21, 21, |z| z * z);
        assert!(fd_operator(&s, FdOperator::Dbar).unwrap().max_abs() < 1e-13);
        let s = GridSamples::sample(-1.0, -1.0, 0.1, 21, 21, |z| C::new(z.re * z.re - z.im * z.im, 0.0));
        assert!(fd_operator(&s, FdOperator::Laplacian).unwrap().max_abs() < 1e-11);
        let s = GridSamples::sample(-1.0, -1.0, 0.1, 21, 21, |z| C::new(z.re.powi(4), 0.0));
        let l = fd_operator(&s, FdOperator::Laplacian).unwrap();
        for j in 0..l.ny {
            for i in 0..l.nx {
                let x = l.point(i, j).re;
                assert!((l.at(i, j).re - 12.0 * x * x).abs() <= 2.0 * 0.01 + 1e-10);
            }
        }
        let tiny = GridSamples::sample(0.0, 0.0, 0.1, 2, 9, |z| z);
        assert_eq!(fd_operator(&tiny, FdOperator::Curl), Err(OracleError::GridTooCoarse { nx: 2, ny: 9 }));
    }

    #[test]
    fn refinement_slope() {
        let st = refinement_study(|l| {
            let h = 0.5f64.powi(l as i32);
            (h, 3.0 * h * h)
        }, &[1, 2, 3, 4])
        .unwrap();
        assert!((st.order - 2.0).abs() < 1e-12 && !st.non_monotone);
        let st = refinement_study(|l| (1.0 / l as f64, [1.0, 0.5, 0.7][l - 1]), &[1, 2, 3]).unwrap();
        assert!(st.non_monotone);
        assert_eq!(refinement_study(|_| (1.0, 1.0), &[1, 2]), Err(OracleError::TooFewLevels(2)));
    }

    #[test]
    fn harmonic_counts() {
        for nu in 0..=6 {
            assert_eq!(harmonic_count_oracle(2, nu), if nu == 0 { 1 } else { 2 });
            assert_eq!(harmonic_count_oracle(4, nu), ((nu + 1) * (nu + 1)) as u128);
        }
    }

    #[test]
    fn areas_agree() {
        for (g, right) in [
            (GammaDescriptor::Chord { offset: 0.3 }, true),
            (GammaDescriptor::Chord { offset: -0.2 }, false),
            (GammaDescriptor::Arc { center: 0.9, radius: 0.6 }, true),
        ] {
            let exact = lens_area(1.0, g);
            let poly = polygon_area(&boundary_polygon(1.0, g, right, 4000));
            assert!((poly - exact).abs() < 1e-5, "{g:?}: {poly} {exact}");
        }
        let disc = halton_area(|z| z.norm() < 1.0, (-1.0, 1.0, -1.0, 1.0), 200_000);
        assert!((disc - std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn polynomial_fit_of_conjugate() {
        let h = 0.3f64;
        let y = (1.0 - h * h).sqrt();
        let pts: Vec<C<f64>> = (0..200).map(|k| C::new(h, -y + 2.0 * y * (k as f64 + 0.5) / 200.0)).collect();
        let data: Vec<C<f64>> = pts.iter().map(|z| z.conj()).collect();
        let probes = [C::new(0.6, 0.0), C::new(0.8, 0.5)];
        let fit = polynomial_fit(&pts, &data, 10, &probes);
        assert!(fit.residual < 1e-12);
        assert!((fit.max_at_probes - (C::new(2.0 * h, 0.0) - probes[1]).norm()).abs() < 1e-9);
    }
}
