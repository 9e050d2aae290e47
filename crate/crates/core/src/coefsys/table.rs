//! Tabulated coefficients with natural cubic-spline interpolation.

use std::path::Path;
use std::sync::Arc;

use super::{CoefError, Coeffs, Scenario};
use crate::Mat2;

/// Sampled coefficient triples on an ascending grid.
#[derive(Debug, Clone)]
pub struct TabulatedCoeffs {
    pub times: Vec<f64>,
    pub samples: Vec<Coeffs>,
}

/// Column names of the CSV format, in order.
pub fn csv_header() -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for m in ["a", "b", "c"] {
        for e in ["11", "12", "21", "22"] {
            cols.push(format!("re_{m}{e}"));
            cols.push(format!("im_{m}{e}"));
        }
    }
    cols
}

fn flatten(co: &Coeffs) -> [f64; 24] {
    let mut out = [0.0; 24];
    out[..8].copy_from_slice(&co.a.to_flat());
    out[8..16].copy_from_slice(&co.b.to_flat());
    out[16..].copy_from_slice(&co.c.to_flat());
    out
}

fn unflatten(v: &[f64]) -> Coeffs {
    Coeffs {
        a: Mat2::from_flat(&v[..8]),
        b: Mat2::from_flat(&v[8..16]),
        c: Mat2::from_flat(&v[16..24]),
    }
}

/// Reads the 25-column CSV format (`t` then A, B, C row-major, re/im pairs).
pub fn read_table_csv(path: &Path) -> Result<TabulatedCoeffs, CoefError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CoefError::Table(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| CoefError::Table(e.to_string()))?.clone();
    let expected = csv_header();
    if header.len() != expected.len() {
        return Err(CoefError::Table(format!(
            "expected {} columns, found {}",
            expected.len(),
            header.len()
        )));
    }
    for (got, want) in header.iter().zip(&expected) {
        if got != want {
            return Err(CoefError::Table(format!("column `{got}` where `{want}` was expected")));
        }
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CoefError::Table(e.to_string()))?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(|s| s.parse::<f64>()).collect();
        let vals = vals.map_err(|e| CoefError::Table(format!("row {}: {e}", row + 2)))?;
        times.push(vals[0]);
        samples.push(unflatten(&vals[1..]));
    }
    Ok(TabulatedCoeffs { times, samples })
}

#[derive(Debug, Clone)]
struct Spline {
    x: Arc<Vec<f64>>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn natural(x: Arc<Vec<f64>>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        Self { x, y, m }
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        let i = self.x.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(n - 2)
    }

    fn eval(&self, i: usize, t: f64) -> (f64, f64) {
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0
            + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        (v, d)
    }
}

/// Scenario interpolating the table; evaluation outside the grid is an error.
pub fn from_table(tab: &TabulatedCoeffs) -> Result<Scenario, CoefError> {
    let n = tab.times.len();
    if n < 2 || tab.samples.len() != n {
        return Err(CoefError::Table("need at least two samples".into()));
    }
    if tab.times.windows(2).any(|w| !(w[1] > w[0])) || tab.times.iter().any(|t| !t.is_finite()) {
        return Err(CoefError::Table("times must be finite and strictly increasing".into()));
    }
    for (t, co) in tab.times.iter().zip(&tab.samples) {
        if !co.is_finite() {
            return Err(CoefError::NonFinite(*t));
        }
        for m in [co.b, co.c] {
            if !m.is_hermitian(m.tol_herm()).hermitian {
                return Err(CoefError::NonHermitianSample(*t));
            }
        }
    }
    let x = Arc::new(tab.times.clone());
    let flat: Vec<[f64; 24]> = tab.samples.iter().map(flatten).collect();
    let splines: Arc<Vec<Spline>> = Arc::new(
        (0..24)
            .map(|k| Spline::natural(x.clone(), flat.iter().map(|f| f[k]).collect()))
            .collect(),
    );
    let nodes = x.clone();
    let samples = Arc::new(tab.samples.clone());
    let sp_eval = splines.clone();
    let eval = move |t: f64| -> Coeffs {
        if let Ok(i) = nodes.binary_search_by(|s| s.partial_cmp(&t).expect("finite grid")) {
            return samples[i];
        }
        let i = sp_eval[0].locate(t);
        let v: Vec<f64> = sp_eval.iter().map(|s| s.eval(i, t).0).collect();
        unflatten(&v)
    };
    let sp_der = splines;
    let deriv = move |t: f64| -> Coeffs {
        let i = sp_der[0].locate(t);
        let v: Vec<f64> = sp_der.iter().map(|s| s.eval(i, t).1).collect();
        unflatten(&v)
    };
    let t0 = tab.times[0];
    let t1 = tab.times[n - 1];
    Ok(Scenario::new("table", t0, Arc::new(eval))
        .with_derivatives(Arc::new(deriv))
        .with_domain_end(t1))
}

impl TabulatedCoeffs {
    /// Samples `s` at the given times.
    pub fn sample(s: &Scenario, times: &[f64]) -> Result<Self, CoefError> {
        let samples = times.iter().map(|&t| s.eval(t)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { times: times.to_vec(), samples })
    }

    /// Writes the table in the 25-column CSV format.
    pub fn write_csv(&self, path: &Path) -> Result<(), CoefError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CoefError::Table(e.to_string()))?;
        w.write_record(csv_header()).map_err(|e| CoefError::Table(e.to_string()))?;
        for (t, co) in self.times.iter().zip(&self.samples) {
            let mut row = vec![format!("{t:?}")];
            row.extend(flatten(co).iter().map(|v| format!("{v:?}")));
            w.write_record(&row).map_err(|e| CoefError::Table(e.to_string()))?;
        }
        w.flush().map_err(|e| CoefError::Table(e.to_string()))
    }
}
