//! Gauss–Legendre rules and barycentric Lagrange interpolation on them.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Clone, Debug)]
pub struct GaussRule<R> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
    /// Barycentric weights for interpolation through `nodes`.
    pub bary: Vec<R>,
}

impl<R: Real> GaussRule<R> {
    /// The same rule rounded to another precision.
    pub fn convert<S: Real>(&self) -> GaussRule<S> {
        let c = |v: &Vec<R>| v.iter().map(|x| S::from_f64(x.to_f64())).collect();
        GaussRule { nodes: c(&self.nodes), weights: c(&self.weights), bary: c(&self.bary) }
    }

    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        let tol = R::epsilon() * R::from_f64(8.0);
        for i in 0..n.div_ceil(2) {
            let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut x = R::from_f64(guess);
            let mut dp = R::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= tol {
                    let (_, d) = legendre(n, x);
                    dp = d;
                    break;
                }
            }
            let w = R::two() / ((R::one() - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            nodes[i] = -x;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = R::zero();
        }
        let bary = (0..n)
            .map(|j| {
                // For Gauss points the barycentric weights are (-1)^j sqrt((1-x^2) w).
                let s = ((R::one() - nodes[j] * nodes[j]) * weights[j]).sqrt();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        GaussRule { nodes, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: R, b: R) -> impl Iterator<Item = (R, R)> + '_ {
        let mid = (a + b) * R::half();
        let half = (b - a) * R::half();
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Lagrange basis values at `x ∈ [-1, 1]` (reference coordinates).
    pub fn lagrange_weights(&self, x: R) -> Vec<R> {
        let n = self.len();
        let mut out = vec![R::zero(); n];
        for j in 0..n {
            if x == self.nodes[j] {
                out[j] = R::one();
                return out;
            }
        }
        let mut total = R::zero();
        for j in 0..n {
            let t = self.bary[j] / (x - self.nodes[j]);
            out[j] = t;
            total += t;
        }
        for v in &mut out {
            *v /= total;
        }
        out
    }

    /// Differentiation matrix `D[i][j] = ℓ_j'(x_i)` on the reference interval.
    pub fn diff_matrix(&self) -> Vec<Vec<R>> {
        let n = self.len();
        let mut d = vec![vec![R::zero(); n]; n];
        for i in 0..n {
            let mut diag = R::zero();
            for j in 0..n {
                if i != j {
                    let v = (self.bary[j] / self.bary[i]) / (self.nodes[i] - self.nodes[j]);
                    d[i][j] = v;
                    diag -= v;
                }
            }
            d[i][i] = diag;
        }
        d
    }
}

fn legendre<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    for k in 2..=n {
        let kr = R::from_usize(k);
        let p2 = ((R::two() * kr - R::one()) * x * p1 - (kr - R::one()) * p0) / kr;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (R::one(), R::zero());
    }
    let d = R::from_usize(n) * (x * p1 - p0) / (x * x - R::one());
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::f256;

    #[test]
    fn integrates_polynomials_exactly() {
        let g = GaussRule::<f64>::new(12);
        for k in 0..24 {
            let q: f64 = g.mapped(0.0, 1.0).map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn extended_rule_is_accurate() {
        let g = GaussRule::<f256>::new(20);
        let total = g.weights.iter().fold(f256::from(0.0), |a, &w| a + w);
        assert!((total - f256::from(2.0)).abs() < f256::from(1e-68));
        let q = g.mapped(f256::from(0.0), f256::from(1.0))
            .fold(f256::from(0.0), |a, (x, w)| a + w * x.powi(38));
        let exact = f256::from(1.0) / f256::from(39.0);
        assert!((q - exact).abs() < f256::from(1e-68));
    }

    #[test]
    fn interpolation_and_differentiation() {
        let g = GaussRule::<f64>::new(10);
        let vals: Vec<f64> = g.nodes.iter().map(|x| x.powi(5) - x).collect();
        let lw = g.lagrange_weights(0.37);
        let v: f64 = lw.iter().zip(&vals).map(|(a, b)| a * b).sum();
        assert!((v - (0.37f64.powi(5) - 0.37)).abs() < 1e-14);
        let d = g.diff_matrix();
        for i in 0..10 {
            let dv: f64 = (0..10).map(|j| d[i][j] * vals[j]).sum();
            let x = g.nodes[i];
            assert!((dv - (5.0 * x.powi(4) - 1.0)).abs() < 1e-12);
        }
    }
}
