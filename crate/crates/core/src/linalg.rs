//! Dense Hermitian linear algebra in generic precision.

use crate::scalar::{cabs, Real, C};

pub type Matrix<R> = Vec<Vec<C<R>>>;

pub fn zeros<R: Real>(n: usize, m: usize) -> Matrix<R> {
    vec![vec![C::new(R::zero(), R::zero()); m]; n]
}

pub fn identity<R: Real>(n: usize) -> Matrix<R> {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = C::new(R::one(), R::zero());
    }
    a
}

/// Lower-triangular `L` with `A = L Lᴴ`, or the index and value of the first
/// non-positive pivot.
pub fn cholesky<R: Real>(a: &Matrix<R>) -> Result<Matrix<R>, (usize, R)> {
    let n = a.len();
    let mut l = zeros::<R>(n, n);
    for j in 0..n {
        let mut d = a[j][j].re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if !(d > R::zero()) {
            return Err((j, d));
        }
        let dj = d.sqrt();
        l[j][j] = C::new(dj, R::zero());
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / dj;
        }
    }
    Ok(l)
}

/// Solve `L X = B` for lower-triangular `L`, column by column.
pub fn solve_lower<R: Real>(l: &Matrix<R>, b: &Matrix<R>) -> Matrix<R> {
    let n = l.len();
    let m = b[0].len();
    let mut x = zeros::<R>(n, m);
    for c in 0..m {
        for i in 0..n {
            let mut s = b[i][c];
            for k in 0..i {
                s -= l[i][k] * x[k][c];
            }
            x[i][c] = s / l[i][i];
        }
    }
    x
}

/// Solve `Lᴴ X = B` for lower-triangular `L`.
pub fn solve_lower_adjoint<R: Real>(l: &Matrix<R>, b: &Matrix<R>) -> Matrix<R> {
    let n = l.len();
    let m = b[0].len();
    let mut x = zeros::<R>(n, m);
    for c in 0..m {
        for i in (0..n).rev() {
            let mut s = b[i][c];
            for k in i + 1..n {
                s -= l[k][i].conj() * x[k][c];
            }
            x[i][c] = s / l[i][i].conj();
        }
    }
    x
}

pub fn adjoint<R: Real>(a: &Matrix<R>) -> Matrix<R> {
    let n = a.len();
    let m = a[0].len();
    let mut t = zeros::<R>(m, n);
    for i in 0..n {
        for j in 0..m {
            t[j][i] = a[i][j].conj();
        }
    }
    t
}

pub fn matmul<R: Real>(a: &Matrix<R>, b: &Matrix<R>) -> Matrix<R> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut c = zeros::<R>(n, m);
    for i in 0..n {
        for p in 0..k {
            let aip = a[i][p];
            for j in 0..m {
                c[i][j] += aip * b[p][j];
            }
        }
    }
    c
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(λ, V)` with `A = V diag(λ) Vᴴ`; the columns of `V` are the
/// eigenvectors, in the original (unsorted) order. Rotations are skipped when
/// `|a_pq| ≤ ε·√|a_pp a_qq|`, which keeps small eigenvalues accurate relative
/// to their own size.
pub fn jacobi_eigh<R: Real>(a: &Matrix<R>) -> (Vec<R>, Matrix<R>) {
    let n = a.len();
    let mut a = a.clone();
    let mut v = identity::<R>(n);
    let tol = R::epsilon() * R::from_f64(4.0);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                let mag = cabs(apq);
                if mag == R::zero() {
                    continue;
                }
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                if mag <= tol * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let tau = (aqq - app) / (R::two() * mag);
                let t = {
                    let sq = (R::one() + tau * tau).sqrt();
                    if tau >= R::zero() {
                        R::one() / (tau + sq)
                    } else {
                        -R::one() / (-tau + sq)
                    }
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) · [[c, s], [-s, c]].
                let gpp = C::new(c, R::zero());
                let gpq = C::new(s, R::zero());
                let gqp = phase.conj() * (-s);
                let gqq = phase.conj() * c;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * gpp + y * gqp;
                    row[q] = x * gpq + y * gqq;
                }
                for k in 0..n {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = gpp.conj() * x + gqp.conj() * y;
                    a[q][k] = gpq.conj() * x + gqq.conj() * y;
                }
                a[p][q] = C::new(R::zero(), R::zero());
                a[q][p] = C::new(R::zero(), R::zero());
                a[p][p].im = R::zero();
                a[q][q].im = R::zero();
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * gpp + y * gqp;
                    row[q] = x * gpq + y * gqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    ((0..n).map(|i| a[i][i].re).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix() -> Matrix<f64> {
        let n = 7;
        let mut a = zeros::<f64>(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = C::new(((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0, if i == j { 0.0 } else { ((i + 2 * j) % 5) as f64 / 4.0 - 0.5 });
                a[i][j] = v;
                a[j][i] = v.conj();
            }
            a[i][i].re += 6.0;
        }
        a
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = test_matrix();
        let (lam, v) = jacobi_eigh(&a);
        let n = a.len();
        for i in 0..n {
            for j in 0..n {
                let mut s = C::new(0.0, 0.0);
                for k in 0..n {
                    s += v[i][k] * lam[k] * v[j][k].conj();
                }
                assert!((s - a[i][j]).norm() < 1e-12);
            }
        }
        let vhv = matmul(&adjoint(&v), &v);
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((vhv[i][j] - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_and_triangular_solves() {
        let a = test_matrix();
        let l = cholesky(&a).unwrap();
        let llh = matmul(&l, &adjoint(&l));
        for i in 0..a.len() {
            for j in 0..a.len() {
                assert!((llh[i][j] - a[i][j]).norm() < 1e-12);
            }
        }
        let x = solve_lower(&l, &a);
        let y = solve_lower_adjoint(&l, &x);
        for i in 0..a.len() {
            for j in 0..a.len() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((y[i][j] - e).norm() < 1e-11);
            }
        }
        let mut bad = a.clone();
        bad[3][3].re = -10.0;
        assert!(cholesky(&bad).is_err());
    }

    #[test]
    fn graded_spectrum_keeps_relative_accuracy() {
        let n = 6;
        let mut a = zeros::<f64>(n, n);
        for i in 0..n {
            a[i][i] = C::new(10f64.powi(-(3 * i as i32)), 0.0);
        }
        let (lam, _) = jacobi_eigh(&a);
        for i in 0..n {
            assert_eq!(lam[i], 10f64.powi(-(3 * i as i32)));
        }
    }
}
