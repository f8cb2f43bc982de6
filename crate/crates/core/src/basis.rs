//! Doubly orthogonal bases: orthonormal in L²(Ω) and orthogonal in L²(ω).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AreaRule, DomainSpec};
use crate::linalg::{self, Matrix};
use crate::scalar::{cabs, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("dimension {0} is odd")]
    OddDimension(usize),
    #[error("dimension must be at least 2")]
    DimensionTooSmall,
    #[error("harmonic count overflows for d = {d}, nu = {nu}")]
    Overflow { d: usize, nu: usize },
    #[error("Gram matrix over Omega is not positive definite (minimum eigenvalue {min_eigenvalue:e})")]
    GramNotPositive { min_eigenvalue: f64 },
    #[error("basis has {available} elements, {requested} requested")]
    BasisTooSmall { requested: usize, available: usize },
    #[error("degree cutoff must be at least 1")]
    EmptyBasis,
}

/// Number of linearly independent solid harmonics of degree ν in ℝᵈ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarmonicCount {
    pub dimension: usize,
    pub degree: usize,
    pub count: u128,
}

/// `J(ν) = (2n+2ν−2)(2n+ν−3)! / (ν!(2n−2)!)` with `d = 2n` and `J(0) = 1`.
pub fn harmonic_count(d: usize, nu: usize) -> Result<HarmonicCount, BasisError> {
    if d % 2 == 1 {
        return Err(BasisError::OddDimension(d));
    }
    if d < 2 {
        return Err(BasisError::DimensionTooSmall);
    }
    let n = d / 2;
    let count = if nu == 0 {
        1
    } else {
        let overflow = BasisError::Overflow { d, nu };
        let fact = |m: usize| -> Option<u128> { (1..=m as u128).try_fold(1u128, |a, k| a.checked_mul(k)) };
        let num = fact(2 * n + nu - 3).and_then(|f| f.checked_mul((2 * n + 2 * nu - 2) as u128));
        let den = fact(nu).and_then(|a| fact(2 * n - 2).and_then(|b| a.checked_mul(b)));
        match (num, den) {
            (Some(a), Some(b)) => a / b,
            _ => return Err(overflow),
        }
    };
    Ok(HarmonicCount { dimension: d, degree: nu, count })
}

/// Squared L²(B(0,R)) norm of a degree-ν solid harmonic with unit norm on
/// the unit sphere: `R^{2ν+d} / (2ν+d)`.
pub fn ball_norm_squared(nu: usize, radius: f64, d: usize) -> f64 {
    let e = (2 * nu + d) as i32;
    radius.powi(e) / e as f64
}

/// Spanning monomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonomialFamily {
    /// `z^k`, `k ≥ 0`.
    Holomorphic,
    /// `z^k` and `z̄^k`, `k ≥ 1`, harmonic but not holomorphic.
    Harmonic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Numeric { degree_cutoff: usize },
}

/// A scaled monomial `β_k z^k` or `β_k z̄^k` with unit L²(Ω) norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub degree: usize,
    pub conjugate: bool,
}

fn monomial_list(family: MonomialFamily, m: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    for k in 0..=m {
        out.push(Monomial { degree: k, conjugate: false });
        if family == MonomialFamily::Harmonic && k >= 1 {
            out.push(Monomial { degree: k, conjugate: true });
        }
    }
    out
}

/// `√((k+1)/(π R^{2k+2}))`.
fn monomial_scale<R: Real>(k: usize, radius: R) -> R {
    (R::from_usize(k + 1) / (R::pi() * radius.powi(2 * k as i32 + 2))).sqrt()
}

/// A double orthogonality basis `b_ν`, ν = 1..len.
#[derive(Clone, Debug)]
pub struct DobBasis<R> {
    pub family: MonomialFamily,
    pub provenance: Provenance,
    pub omega_radius: R,
    pub monomials: Vec<Monomial>,
    scales: Vec<R>,
    /// Element ν−1 expanded in the scaled monomials; `None` for the analytic
    /// basis, whose elements are the scaled monomials themselves.
    coefficients: Option<Vec<Vec<C<R>>>>,
    /// `‖b_ν‖²_{L²(Ω)}`.
    pub omega_norms: Vec<R>,
    /// `λ_ν = ‖b_ν‖²_{L²(ω)}`, non-increasing.
    pub test_norms: Vec<R>,
}

/// Closed-form basis for concentric discs Ω = B(0,R), ω = B(0,r).
pub fn make_analytic_basis<R: Real>(spec: &DomainSpec<R>, n_max: usize) -> DobBasis<R> {
    analytic_basis(spec.omega_radius, spec.test_ball_radius, n_max, MonomialFamily::Holomorphic)
}

/// Closed-form basis with an explicit family. For the harmonic family the
/// elements alternate `z^k, z̄^k` after the constant.
pub fn analytic_basis<R: Real>(radius: R, test_radius: R, n_max: usize, family: MonomialFamily) -> DobBasis<R> {
    let mut monomials = monomial_list(family, n_max);
    monomials.truncate(n_max);
    let scales: Vec<R> = monomials.iter().map(|m| monomial_scale(m.degree, radius)).collect();
    let ratio = test_radius / radius;
    let test_norms = monomials.iter().map(|m| ratio.powi(2 * m.degree as i32 + 2)).collect();
    DobBasis {
        family,
        provenance: Provenance::Analytic,
        omega_radius: radius,
        omega_norms: vec![R::one(); monomials.len()],
        monomials,
        scales,
        coefficients: None,
        test_norms,
    }
}

/// Gram matrix `G[j][k] = Σ w conj(e_j) e_k` of the scaled monomials.
fn gram<R: Real>(rule: &AreaRule<R>, monomials: &[Monomial], scales: &[R]) -> Matrix<R> {
    let m = monomials.len();
    let mut g = linalg::zeros::<R>(m, m);
    let mut vals = vec![C::new(R::zero(), R::zero()); m];
    for (z, w) in rule.nodes.iter().zip(&rule.weights) {
        eval_monomials(*z, monomials, scales, &mut vals);
        for j in 0..m {
            let cj = vals[j].conj() * *w;
            for k in j..m {
                g[j][k] += cj * vals[k];
            }
        }
    }
    for j in 0..m {
        for k in 0..j {
            g[j][k] = g[k][j].conj();
        }
    }
    g
}

fn eval_monomials<R: Real>(z: C<R>, monomials: &[Monomial], scales: &[R], out: &mut [C<R>]) {
    let mut pw = C::new(R::one(), R::zero());
    let mut deg = 0;
    for (i, m) in monomials.iter().enumerate() {
        while deg < m.degree {
            pw *= z;
            deg += 1;
        }
        let v = if m.conjugate { pw.conj() } else { pw };
        out[i] = v * scales[i];
    }
}

/// Polar product rule on `B(0, radius)` exact for the Gram entries of
/// monomials of degree ≤ `degree`.
pub fn disc_rule_for_degree<R: Real>(radius: R, degree: usize) -> AreaRule<R> {
    crate::geometry::disc_rule(C::new(R::zero(), R::zero()), radius, degree / 2 + 4, 2 * degree + 8)
}

/// Basis from the generalized eigenproblem `G_ω v = λ G_Ω v` over
/// monomials of degree ≤ `degree_cutoff`.
pub fn make_numeric_basis<R: Real>(
    omega_big: &AreaRule<R>,
    omega_small: &AreaRule<R>,
    radius: R,
    degree_cutoff: usize,
) -> Result<DobBasis<R>, BasisError> {
    numeric_basis(omega_big, omega_small, radius, degree_cutoff, MonomialFamily::Holomorphic)
}

pub fn numeric_basis<R: Real>(
    omega_big: &AreaRule<R>,
    omega_small: &AreaRule<R>,
    radius: R,
    degree_cutoff: usize,
    family: MonomialFamily,
) -> Result<DobBasis<R>, BasisError> {
    if degree_cutoff < 1 {
        return Err(BasisError::EmptyBasis);
    }
    let monomials = monomial_list(family, degree_cutoff);
    let scales: Vec<R> = monomials.iter().map(|m| monomial_scale(m.degree, radius)).collect();
    let m = monomials.len();
    let g_big = gram(omega_big, &monomials, &scales);
    let g_small = gram(omega_small, &monomials, &scales);
    // Pivots at rounding level mean the rule cannot resolve the span.
    let floor = R::epsilon().sqrt();
    let chol = linalg::cholesky(&g_big)
        .ok()
        .filter(|l| (0..m).all(|j| l[j][j].re * l[j][j].re > floor * g_big[j][j].re));
    let l = match chol {
        Some(l) => l,
        None => {
            let (ev, _) = linalg::jacobi_eigh(&g_big);
            let min = ev.iter().copied().fold(ev[0], R::min);
            return Err(BasisError::GramNotPositive { min_eigenvalue: min.to_f64() });
        }
    };
    let x = linalg::solve_lower(&l, &g_small);
    let c = linalg::adjoint(&linalg::solve_lower(&l, &linalg::adjoint(&x)));
    let mut c = c;
    // Symmetrize against rounding.
    for j in 0..m {
        for k in 0..j {
            let avg = (c[j][k] + c[k][j].conj()) * R::half();
            c[j][k] = avg;
            c[k][j] = avg.conj();
        }
        c[j][j].im = R::zero();
    }
    let (lam, y) = linalg::jacobi_eigh(&c);
    let v = linalg::solve_lower_adjoint(&l, &y);
    let mut cols: Vec<(R, Vec<C<R>>)> = (0..m).map(|k| (lam[k], (0..m).map(|i| v[i][k]).collect())).collect();
    cols.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    // Clusters of numerically equal eigenvalues.
    let cluster_tol = R::from_f64(1e-8);
    let mut out: Vec<Vec<C<R>>> = Vec::with_capacity(m);
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && (cols[j - 1].0 - cols[j].0).abs() <= cluster_tol * cols[i].0.abs() {
            j += 1;
        }
        let mut group: Vec<Vec<C<R>>> = cols[i..j].iter().map(|c| c.1.clone()).collect();
        if group.len() > 1 {
            reorthogonalize(&mut group, &g_big);
            group.sort_by_key(|vec| dominant_index(vec));
        }
        out.extend(group);
        i = j;
    }
    for vec in &mut out {
        fix_phase(vec);
    }
    let norms = |g: &Matrix<R>| -> Vec<R> { out.iter().map(|v| quad_form(g, v)).collect() };
    let omega_norms = norms(&g_big);
    let test_norms = norms(&g_small);
    Ok(DobBasis {
        family,
        provenance: Provenance::Numeric { degree_cutoff },
        omega_radius: radius,
        monomials,
        scales,
        coefficients: Some(out),
        omega_norms,
        test_norms,
    })
}

fn quad_form<R: Real>(g: &Matrix<R>, v: &[C<R>]) -> R {
    let mut s = C::new(R::zero(), R::zero());
    for j in 0..v.len() {
        for k in 0..v.len() {
            s += v[j].conj() * g[j][k] * v[k];
        }
    }
    s.re
}

fn inner<R: Real>(g: &Matrix<R>, a: &[C<R>], b: &[C<R>]) -> C<R> {
    let mut s = C::new(R::zero(), R::zero());
    for j in 0..a.len() {
        for k in 0..a.len() {
            s += b[j].conj() * g[j][k] * a[k];
        }
    }
    s
}

fn reorthogonalize<R: Real>(group: &mut [Vec<C<R>>], g: &Matrix<R>) {
    for i in 0..group.len() {
        for j in 0..i {
            let proj = inner(g, &group[i], &group[j]);
            let gj = group[j].clone();
            for (x, y) in group[i].iter_mut().zip(&gj) {
                *x -= *y * proj;
            }
        }
        let nrm = quad_form(g, &group[i]).sqrt();
        for x in group[i].iter_mut() {
            *x = *x / nrm;
        }
    }
}

fn dominant_index<R: Real>(v: &[C<R>]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if cabs(*x) > cabs(v[best]) {
            best = i;
        }
    }
    best
}

/// Rotate so the first non-negligible coefficient is positive real.
fn fix_phase<R: Real>(v: &mut [C<R>]) {
    let big = v.iter().map(|x| cabs(*x)).fold(R::zero(), R::max);
    let thresh = big * R::from_f64(1e-8);
    if let Some(first) = v.iter().find(|x| cabs(**x) > thresh).copied() {
        let ph = first.conj() / cabs(first);
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

impl<R: Real> DobBasis<R> {
    pub fn len(&self) -> usize {
        self.test_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test_norms.is_empty()
    }

    pub fn is_holomorphic(&self) -> bool {
        self.family == MonomialFamily::Holomorphic
    }

    /// Coefficients of `b_ν` (ν = `index + 1`) over the scaled monomials.
    pub fn element_coefficients(&self, index: usize) -> Vec<C<R>> {
        match &self.coefficients {
            Some(c) => c[index].clone(),
            None => {
                let mut v = vec![C::new(R::zero(), R::zero()); self.monomials.len()];
                v[index] = C::new(R::one(), R::zero());
                v
            }
        }
    }

    /// Monomial coefficient matrix, rows indexed by element.
    pub fn coefficient_rows(&self) -> Vec<Vec<C<R>>> {
        (0..self.len()).map(|i| self.element_coefficients(i)).collect()
    }

    /// `b_ν(z)` for ν = `index + 1`.
    pub fn eval(&self, index: usize, z: C<R>) -> C<R> {
        self.eval_first(index + 1, z)[index]
    }

    /// `b_1(z), …, b_n(z)`.
    pub fn eval_first(&self, n: usize, z: C<R>) -> Vec<C<R>> {
        let mut vals = vec![C::new(R::zero(), R::zero()); self.monomials.len()];
        match &self.coefficients {
            None => {
                eval_monomials(z, &self.monomials[..n], &self.scales[..n], &mut vals[..n]);
                vals.truncate(n);
                vals
            }
            Some(rows) => {
                eval_monomials(z, &self.monomials, &self.scales, &mut vals);
                rows[..n]
                    .iter()
                    .map(|row| row.iter().zip(&vals).fold(C::new(R::zero(), R::zero()), |a, (c, e)| a + *c * *e))
                    .collect()
            }
        }
    }

    /// Monomial degree carrying the largest coefficient of `b_ν`.
    pub fn dominant_degree(&self, index: usize) -> usize {
        match &self.coefficients {
            None => self.monomials[index].degree,
            Some(rows) => self.monomials[dominant_index(&rows[index])].degree,
        }
    }

    pub fn require(&self, n: usize) -> Result<(), BasisError> {
        if n > self.len() {
            Err(BasisError::BasisTooSmall { requested: n, available: self.len() })
        } else {
            Ok(())
        }
    }

    /// Convert to another precision.
    pub fn convert<S: Real>(&self) -> DobBasis<S> {
        let c = |z: &C<R>| crate::scalar::cast::<R, S>(*z);
        DobBasis {
            family: self.family,
            provenance: self.provenance,
            omega_radius: S::from_f64(self.omega_radius.to_f64()),
            monomials: self.monomials.clone(),
            scales: self.monomials.iter().map(|m| monomial_scale(m.degree, S::from_f64(self.omega_radius.to_f64()))).collect(),
            coefficients: self.coefficients.as_ref().map(|rows| rows.iter().map(|r| r.iter().map(c).collect()).collect()),
            omega_norms: self.omega_norms.iter().map(|x| S::from_f64(x.to_f64())).collect(),
            test_norms: self.test_norms.iter().map(|x| S::from_f64(x.to_f64())).collect(),
        }
    }
}

/// Gram matrix of the first `n` basis elements over a rule.
pub fn basis_gram<R: Real>(basis: &DobBasis<R>, rule: &AreaRule<R>, n: usize) -> Matrix<R> {
    let mut g = linalg::zeros::<R>(n, n);
    for (z, w) in rule.nodes.iter().zip(&rule.weights) {
        let v = basis.eval_first(n, *z);
        for j in 0..n {
            let cj = v[j].conj() * *w;
            for k in 0..n {
                g[j][k] += cj * v[k];
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::disc_rule;
    use crate::scalar::f256;

    #[test]
    fn counting_function_values() {
        assert_eq!(harmonic_count(2, 0).unwrap().count, 1);
        assert_eq!(harmonic_count(2, 5).unwrap().count, 2);
        assert_eq!(harmonic_count(4, 2).unwrap().count, 9);
        assert_eq!(harmonic_count(3, 2), Err(BasisError::OddDimension(3)));
        assert_eq!(harmonic_count(0, 2), Err(BasisError::DimensionTooSmall));
    }

    #[test]
    fn ball_norms() {
        assert_eq!(ball_norm_squared(0, 1.0, 2), 0.5);
        assert_eq!(ball_norm_squared(1, 1.0, 2), 0.25);
        assert!(ball_norm_squared(3, 1e-6, 2) < 1e-40);
    }

    #[test]
    fn analytic_first_element() {
        let b = analytic_basis(1.0f64, 0.5, 5, MonomialFamily::Holomorphic);
        assert!((b.eval(0, C::new(0.3, 0.1)).re - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((b.test_norms[0] - 0.25).abs() < 1e-15);
        assert!((b.test_norms[2] - 0.015625).abs() < 1e-15);
    }

    #[test]
    fn numeric_matches_analytic_for_concentric_discs() {
        let zero = C::new(f256::from(0.0), f256::from(0.0));
        let big = disc_rule(zero, f256::from(1.0), 16, 40);
        let small = disc_rule(zero, f256::from(0.3), 16, 40);
        let b = make_numeric_basis(&big, &small, f256::from(1.0), 10).unwrap();
        for k in 0..11 {
            let exact = f256::from(0.3).powi(2 * k as i32 + 2);
            let rel = ((b.test_norms[k] - exact) / exact).abs().to_f64();
            assert!(rel < 1e-20, "k={k} rel={rel}");
            assert_eq!(b.dominant_degree(k), k);
            let c = b.element_coefficients(k);
            assert!((c[k].re.to_f64() - 1.0).abs() < 1e-20);
        }
    }

    #[test]
    fn omega_equal_to_big_disc_gives_unit_spectrum() {
        let big = disc_rule(C::new(0.0, 0.0), 1.0f64, 10, 30);
        let b = make_numeric_basis(&big, &big, 1.0, 6).unwrap();
        for l in &b.test_norms {
            assert!((l - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn coarse_quadrature_is_rejected() {
        let big = disc_rule(C::new(0.0, 0.0), 1.0f64, 2, 4);
        let err = make_numeric_basis(&big, &big, 1.0, 8).unwrap_err();
        assert!(matches!(err, BasisError::GramNotPositive { .. }));
    }
}
