//! Fundamental solutions and truncated Carleman kernels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{BasisError, DobBasis, Provenance};
use crate::geometry::AreaRule;
use crate::scalar::{cabs, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel evaluated at distance {distance:e}, inside the exclusion radius {radius:e}")]
    SingularEvaluation { distance: f64, radius: f64 },
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("series form of the Carleman kernel needs a test-ball quadrature rule")]
    MissingRule,
}

/// The instantiated elliptic complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ComplexInstance {
    /// Scalar ∂̄ = ½(∂x + i∂y) on functions in ℂ.
    DolbeaultN1,
    /// The gradient on functions in ℝ².
    Derham2dDeg0,
}

impl ComplexInstance {
    pub fn degree(self) -> usize {
        0
    }

    pub fn dimension(self) -> usize {
        2
    }

    /// `c` with `Δ_i = c·Δ`; for ∂̄ this is ∂∂̄ = ¼Δ, for the gradient ∇*∇ = −Δ.
    pub fn laplacian_scale(self) -> f64 {
        match self {
            ComplexInstance::DolbeaultN1 => 0.25,
            ComplexInstance::Derham2dDeg0 => -1.0,
        }
    }

    /// Principal symbol σ(A)(ξ) applied to a scalar; `ξ` is encoded as
    /// `ξ₁ + iξ₂`. The ∂̄ symbol is `½(ξ₁ + iξ₂)`; the gradient symbol returns
    /// the vector `(ξ₁, ξ₂)` in the same encoding.
    pub fn symbol<R: Real>(self, xi: C<R>) -> C<R> {
        match self {
            ComplexInstance::DolbeaultN1 => xi * R::half(),
            ComplexInstance::Derham2dDeg0 => xi,
        }
    }
}

fn check_distance<R: Real>(zeta: C<R>, z: C<R>, exclusion: R) -> Result<(), KernelError> {
    let d = cabs(z - zeta);
    if d <= exclusion {
        Err(KernelError::SingularEvaluation { distance: d.to_f64(), radius: exclusion.to_f64() })
    } else {
        Ok(())
    }
}

/// Fundamental solution of the instance: `1/(π(z−ζ))` for ∂̄ (so that
/// ∂̄_z of it is δ_ζ) and `−ln|z−ζ|/(2π)` for the gradient complex.
pub fn fundamental_solution<R: Real>(
    instance: ComplexInstance,
    zeta: C<R>,
    z: C<R>,
    exclusion: R,
) -> Result<C<R>, KernelError> {
    check_distance(zeta, z, exclusion)?;
    Ok(match instance {
        ComplexInstance::DolbeaultN1 => (z - zeta).inv() / R::pi(),
        ComplexInstance::Derham2dDeg0 => {
            C::new(-cabs(z - zeta).ln() / (R::two() * R::pi()), R::zero())
        }
    })
}

#[inline]
pub(crate) fn cauchy<R: Real>(zeta: C<R>, z: C<R>) -> C<R> {
    (z - zeta).inv() / R::pi()
}

/// Fourier coefficients `c_ν(K(ζ,·))`, ν = 1..n, of the Cauchy kernel over ω
/// in closed form (analytic basis): `−ζ^{−ν}/(π β_ν)` with
/// `β_ν = √(ν/(π R^{2ν}))`.
pub fn kernel_coefficients_closed<R: Real>(basis: &DobBasis<R>, n: usize, zeta: C<R>) -> Vec<C<R>> {
    let inv = zeta.inv();
    let mut pw = inv;
    let mut out = Vec::with_capacity(n);
    for nu in 1..=n {
        let beta = (R::from_usize(nu) / (R::pi() * basis.omega_radius.powi(2 * nu as i32))).sqrt();
        out.push(-pw / (R::pi() * beta));
        pw *= inv;
    }
    out
}

/// Fourier coefficients `c_ν(K(ζ,·))` by quadrature over ω.
pub fn kernel_coefficients_quadrature<R: Real>(
    basis: &DobBasis<R>,
    n: usize,
    zeta: C<R>,
    omega_rule: &AreaRule<R>,
) -> Vec<C<R>> {
    let mut acc = vec![C::new(R::zero(), R::zero()); n];
    for (z, w) in omega_rule.nodes.iter().zip(&omega_rule.weights) {
        let k = cauchy(zeta, *z) * *w;
        for (a, b) in acc.iter_mut().zip(basis.eval_first(n, *z)) {
            *a += k * b.conj();
        }
    }
    for (a, l) in acc.iter_mut().zip(&basis.test_norms) {
        *a = *a / *l;
    }
    acc
}

/// How a Carleman kernel is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    /// `(1/(π(z−ζ)))·(z/ζ)^N`; only for analytic bases.
    Closed,
    /// `K(ζ,z) − Σ_{ν≤N} c_ν(K(ζ,·)) b_ν(z)` with quadrature coefficients.
    Series,
}

/// The truncated kernel `𝔠_N(ζ, z)`.
pub fn carleman_kernel<R: Real>(
    basis: &DobBasis<R>,
    n: usize,
    zeta: C<R>,
    z: C<R>,
    exclusion: R,
    form: KernelForm,
    omega_rule: Option<&AreaRule<R>>,
) -> Result<C<R>, KernelError> {
    basis.require(n)?;
    check_distance(zeta, z, exclusion)?;
    let form = if basis.provenance != Provenance::Analytic { KernelForm::Series } else { form };
    match form {
        KernelForm::Closed => Ok(cauchy(zeta, z) * power(z / zeta, n)),
        KernelForm::Series => {
            let rule = omega_rule.ok_or(KernelError::MissingRule)?;
            let c = kernel_coefficients_quadrature(basis, n, zeta, rule);
            let b = basis.eval_first(n, z);
            let mut v = cauchy(zeta, z);
            for (ci, bi) in c.iter().zip(&b) {
                v -= *ci * *bi;
            }
            Ok(v)
        }
    }
}

/// `K(ζ,z) − 𝔠_N(ζ,z) = Σ_{ν≤N} c_ν(K(ζ,·)) b_ν(z)`, smooth in both
/// arguments. The closed form sums `−(1/(πζ)) Σ_{k<N} (z/ζ)^k`.
pub fn carleman_regular_part<R: Real>(
    basis: &DobBasis<R>,
    n: usize,
    zeta: C<R>,
    z: C<R>,
    form: KernelForm,
    omega_rule: Option<&AreaRule<R>>,
) -> Result<C<R>, KernelError> {
    basis.require(n)?;
    let form = if basis.provenance != Provenance::Analytic { KernelForm::Series } else { form };
    match form {
        KernelForm::Closed => {
            let q = z / zeta;
            let mut acc = C::new(R::zero(), R::zero());
            for _ in 0..n {
                acc = acc * q + R::one();
            }
            Ok(-acc / (zeta * R::pi()))
        }
        KernelForm::Series => {
            let rule = omega_rule.ok_or(KernelError::MissingRule)?;
            let c = kernel_coefficients_quadrature(basis, n, zeta, rule);
            Ok(c.iter().zip(basis.eval_first(n, z)).fold(C::new(R::zero(), R::zero()), |a, (ci, bi)| a + *ci * bi))
        }
    }
}

pub(crate) fn power<R: Real>(z: C<R>, n: usize) -> C<R> {
    let mut out = C::new(R::one(), R::zero());
    let mut base = z;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            out *= base;
        }
        base *= base;
        e >>= 1;
    }
    out
}
