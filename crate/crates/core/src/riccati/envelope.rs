//! Bounds on the off-diagonal Riccati entries in the diagonal positive case.
//!
//! With `R = int Re(a11 + a22)` the envelope carries
//!
//! ```text
//! M(t)  = exp(-R(t)) max_{s <= t} exp(R(s)) |r1(s) - r2(s)|
//! E3'   = |r2' + r2 (conj(a11) + a22) + c12| - Re(a11 + a22) E3,   E3(t0) = 0
//! E4'   = |r1' + r1 (conj(a11) + a22) + c12| - Re(a11 + a22) E4,   E4(t0) = 0
//! chi3  = b2 (M + E3)^2 - |a21|^2 / b2 - c11
//! chi4  = b1 (M + E4)^2 - |a12|^2 / b1 - c22
//! ```
//!
//! `R`, `E3` and `E4` come from one integration; the running maximum is kept
//! in log space on a uniform grid and completed by the value at `t` itself.

use std::sync::Arc;

use super::{check_window, uniform_grid, C12Sign, GridOptions, RealFn, RiccatiError};
use crate::coefsys::{ratio_fns, RatioPoint, Scenario};
use crate::odeint::{adaptive_solve, OdeError, OdeintError, Trajectory};
use crate::Mat2;

/// Diagonal-form data at one time.
#[derive(Debug, Clone, Copy)]
pub struct DiagPoint {
    pub a: Mat2,
    pub b1: f64,
    pub b2: f64,
    pub c: Mat2,
    pub ratios: RatioPoint,
}

pub type DiagFn = Arc<dyn Fn(f64) -> Result<DiagPoint, RiccatiError> + Send + Sync>;

/// Diagonal data of a scenario with `B = diag(b1, b2)`, `b1, b2 > 0`.
pub fn diag_source(s: &Scenario) -> Result<DiagFn, RiccatiError> {
    let rf = ratio_fns(s)?;
    let s = s.clone();
    Ok(Arc::new(move |t| {
        let co = s.eval(t)?;
        let (b1, b2) = (co.b.e11.re, co.b.e22.re);
        if !(b1 > 0.0 && b2 > 0.0) {
            return Err(RiccatiError::NotPositiveB(t));
        }
        let ratios = rf.at(t)?;
        Ok(DiagPoint { a: co.a, b1, b2, c: co.c, ratios })
    }))
}

/// Values of the envelope at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeValue {
    pub frak_m: f64,
    pub e3: f64,
    pub e4: f64,
    pub chi3: f64,
    pub chi4: f64,
}

pub struct Envelope {
    src: DiagFn,
    pub window: (f64, f64),
    pub sign: C12Sign,
    traj: Trajectory<f64>,
    grid: Vec<f64>,
    prefix_log_max: Vec<f64>,
}

fn log_gap(p: &DiagPoint) -> f64 {
    (p.ratios.r1 - p.ratios.r2).norm().ln()
}

impl Envelope {
    pub fn build(src: DiagFn, window: (f64, f64), sign: C12Sign, grid: &GridOptions) -> Result<Self, RiccatiError> {
        check_window(window)?;
        let ts = uniform_grid(window, grid.envelope_samples);
        for &t in &ts {
            src(t)?;
        }
        let sg = sign.factor();
        let field = |t: f64, y: &[f64], dy: &mut [f64]| match src(t) {
            Ok(p) => {
                let (a, r) = (p.a, p.ratios);
                let rho = (a.e11 + a.e22).re;
                let mix = a.e11.conj() + a.e22;
                let f3 = r.dr2 + r.r2 * mix + p.c.e12 * sg;
                let f4 = r.dr1 + r.r1 * mix + p.c.e12 * sg;
                dy[0] = rho;
                dy[1] = f3.norm() - rho * y[1];
                dy[2] = f4.norm() - rho * y[2];
            }
            Err(_) => dy.fill(f64::NAN),
        };
        let traj = adaptive_solve(field, &[0.0; 3], window, &grid.tol.options())
            .map_err(|e: OdeError<f64>| RiccatiError::Odeint(OdeintError::Ode(e)))?;
        let mut prefix_log_max = Vec::with_capacity(ts.len());
        let mut running = f64::NEG_INFINITY;
        for &t in &ts {
            let p = src(t)?;
            let r = traj.dense_eval(t).map_or(f64::NAN, |y| y[0]);
            running = running.max(r + log_gap(&p));
            prefix_log_max.push(running);
        }
        Ok(Self { src, window, sign, traj, grid: ts, prefix_log_max })
    }

    pub fn at(&self, t: f64) -> Result<EnvelopeValue, RiccatiError> {
        let (t0, t1) = self.window;
        let y = self.traj.dense_eval(t).ok_or(RiccatiError::InvalidWindow(t0, t1))?;
        let p = (self.src)(t)?;
        let n = self.grid.len() - 1;
        let cell = (((t - t0) / (t1 - t0)) * n as f64).floor().clamp(0.0, n as f64) as usize;
        let cell = if self.grid[cell] > t { cell.saturating_sub(1) } else { cell };
        let log_max = self.prefix_log_max[cell].max(y[0] + log_gap(&p));
        let frak_m = (log_max - y[0]).exp();
        let (e3, e4) = (y[1], y[2]);
        let chi3 = p.b2 * (frak_m + e3).powi(2) - p.a.e21.norm_sqr() / p.b2 - p.c.e11.re;
        let chi4 = p.b1 * (frak_m + e4).powi(2) - p.a.e12.norm_sqr() / p.b1 - p.c.e22.re;
        Ok(EnvelopeValue { frak_m, e3, e4, chi3, chi4 })
    }

    /// `chi3` (`idx = 3`) or `chi4` as a closure; NaN outside the window.
    pub fn chi_fn(self: &Arc<Self>, idx: usize) -> RealFn {
        let me = Arc::clone(self);
        Arc::new(move |t| match me.at(t) {
            Ok(v) if idx == 3 => v.chi3,
            Ok(v) => v.chi4,
            Err(_) => f64::NAN,
        })
    }
}
