//! CSV inputs and their interpolation onto the quadrature nodes.

use std::path::Path;

use cauchy_core::geometry::BoundaryRule;
use cauchy_core::laplace::ClassicalCauchyData;
use cauchy_core::scalar::{Real, C};
use cauchy_core::solver::CauchySource;

use crate::error::CliError;

/// Points used by the local Lagrange interpolants.
const STENCIL: usize = 6;

fn read_rows(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let err = |m: String| CliError::Data(format!("{}: {m}", path.display()));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| err(e.to_string()))?;
    let header: Vec<String> = rdr.headers().map_err(|e| err(e.to_string()))?.iter().map(str::to_string).collect();
    if header != columns {
        return Err(err(format!("expected columns {columns:?}, found {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let row: Vec<f64> = rec
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| err(format!("row {}: non-numeric or non-finite value", i + 2)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err("no rows".into()));
    }
    Ok(rows)
}

/// Values against a strictly increasing abscissa.
#[derive(Clone, Debug)]
pub struct Series1d {
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
}

impl Series1d {
    fn from_rows(path: &Path, rows: Vec<Vec<f64>>) -> Result<Self, CliError> {
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Data(format!("{}: s must be strictly increasing", path.display())));
        }
        if xs[0] < -1.0 - 1e-12 || xs[xs.len() - 1] > 1.0 + 1e-12 {
            return Err(CliError::Data(format!("{}: s must lie in [-1, 1]", path.display())));
        }
        let ys = (1..rows[0].len()).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        Ok(Series1d { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Column `c` at `x` from the nearest `STENCIL` samples.
    pub fn eval(&self, c: usize, x: f64) -> f64 {
        let (lo, hi) = window(&self.xs, x, STENCIL);
        lagrange(&self.xs[lo..hi], &self.ys[c][lo..hi], x)
    }
}

fn window(xs: &[f64], x: f64, width: usize) -> (usize, usize) {
    let w = width.min(xs.len());
    let i = xs.partition_point(|v| *v < x);
    let lo = i.saturating_sub(w / 2).min(xs.len() - w);
    (lo, lo + w)
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (j, (xj, yj)) in xs.iter().zip(ys).enumerate() {
        let mut l = 1.0;
        for (k, xk) in xs.iter().enumerate() {
            if k != j {
                l *= (x - xk) / (xj - xk);
            }
        }
        acc += l * yj;
    }
    acc
}

/// `f` on a rectangular grid, row order arbitrary.
#[derive(Clone, Debug)]
pub struct Grid2d {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[j * nx + i]` at `(xs[i], ys[j])`.
    pub values: Vec<C<f64>>,
}

impl Grid2d {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let rows = read_rows(path, &["x", "y", "re", "im"])?;
        let err = |m: &str| CliError::Data(format!("{}: {m}", path.display()));
        let axis = |k: usize| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (xs, ys) = (axis(0), axis(1));
        if xs.len() < 2 || ys.len() < 2 || xs.len() * ys.len() != rows.len() {
            return Err(err("f samples must form a full rectangular grid"));
        }
        let mut values = vec![C::new(f64::NAN, f64::NAN); rows.len()];
        for r in &rows {
            let i = xs.partition_point(|v| *v < r[0]);
            let j = ys.partition_point(|v| *v < r[1]);
            values[j * xs.len() + i] = C::new(r[2], r[3]);
        }
        if values.iter().any(|v| v.re.is_nan()) {
            return Err(err("duplicate grid points"));
        }
        Ok(Grid2d { xs, ys, values })
    }

    pub fn covers(&self, bbox: (f64, f64, f64, f64)) -> bool {
        let tol = 1e-12;
        self.xs[0] <= bbox.0 + tol
            && self.xs[self.xs.len() - 1] >= bbox.1 - tol
            && self.ys[0] <= bbox.2 + tol
            && self.ys[self.ys.len() - 1] >= bbox.3 - tol
    }

    /// Tensor-product Lagrange interpolation on the nearest `4×4` block.
    pub fn eval(&self, z: C<f64>) -> C<f64> {
        let (i0, i1) = window(&self.xs, z.re, 4);
        let (j0, j1) = window(&self.ys, z.im, 4);
        let nx = self.xs.len();
        let mut col_re = Vec::with_capacity(j1 - j0);
        let mut col_im = Vec::with_capacity(j1 - j0);
        for j in j0..j1 {
            let row = &self.values[j * nx + i0..j * nx + i1];
            let re: Vec<f64> = row.iter().map(|v| v.re).collect();
            let im: Vec<f64> = row.iter().map(|v| v.im).collect();
            col_re.push(lagrange(&self.xs[i0..i1], &re, z.re));
            col_im.push(lagrange(&self.xs[i0..i1], &im, z.re));
        }
        let ys = &self.ys[j0..j1];
        C::new(lagrange(ys, &col_re, z.im), lagrange(ys, &col_im, z.im))
    }
}

/// Data read from `u0_csv` and optionally `f_csv`.
#[derive(Clone, Debug)]
pub struct CsvSource {
    pub u0: Series1d,
    pub f: Option<Grid2d>,
}

impl CsvSource {
    pub fn load(u0: &Path, f: Option<&Path>) -> Result<Self, CliError> {
        let u0 = Series1d::from_rows(u0, read_rows(u0, &["s", "re", "im"])?)?;
        let f = f.map(Grid2d::load).transpose()?;
        Ok(CsvSource { u0, f })
    }
}

impl<R: Real> CauchySource<R> for CsvSource {
    fn u0(&self, _z: C<R>, s: R) -> C<R> {
        let s = s.to_f64();
        C::new(R::from_f64(self.u0.eval(0, s)), R::from_f64(self.u0.eval(1, s)))
    }

    fn f(&self, z: C<R>) -> C<R> {
        match &self.f {
            Some(g) => {
                let v = g.eval(C::new(z.re.to_f64(), z.im.to_f64()));
                C::new(R::from_f64(v.re), R::from_f64(v.im))
            }
            None => C::new(R::zero(), R::zero()),
        }
    }

    fn has_f(&self) -> bool {
        self.f.is_some()
    }
}

/// Columns `s, u, dudn` interpolated onto the nodes of a Γ rule. The
/// additive constant is fixed at the middle node.
pub fn load_classical<R: Real>(path: &Path, rule: &BoundaryRule<R>) -> Result<ClassicalCauchyData<R>, CliError> {
    let series = Series1d::from_rows(path, read_rows(path, &["s", "u", "dudn"])?)?;
    if series.len() < cauchy_core::laplace::MIN_SAMPLES {
        return Err(CliError::Laplace(cauchy_core::laplace::LaplaceError::TooFewSamples { found: series.len() }));
    }
    let u: Vec<R> = rule.params.iter().map(|s| R::from_f64(series.eval(0, s.to_f64()))).collect();
    let dudn = rule.params.iter().map(|s| R::from_f64(series.eval(1, s.to_f64()))).collect();
    let mid = rule.len() / 2;
    Ok(ClassicalCauchyData { anchor: rule.nodes[mid], anchor_value: u[mid], u, dudn })
}
