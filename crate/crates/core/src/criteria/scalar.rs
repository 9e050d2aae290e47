//! Zero counting for the scalar system
//! `phi' = f11 phi + f12 psi`, `psi' = f21 phi + f22 psi`.

use serde::{Deserialize, Serialize};

use crate::odeint::roots::bracket_root;
use crate::odeint::zeros::sample_times;
use crate::odeint::{adaptive_solve, solve_scalar_riccati, IntegratorTol, OdeintError, Trajectory, Y_MAX};
use crate::riccati::RealFn;

#[derive(Clone)]
pub struct ScalarSystem {
    pub f11: RealFn,
    pub f12: RealFn,
    pub f21: RealFn,
    pub f22: RealFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarVerdict {
    Oscillatory,
    NonOscillatory,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarOutcome {
    pub verdict: ScalarVerdict,
    /// Zeros of `phi` from the starts `(1, 0)` and `(0, 1)`.
    pub zeros: [Vec<f64>; 2],
    /// Escape times of `y = psi / phi` from `y(t0) = 0`, restarted past each escape.
    pub riccati_escapes: Vec<f64>,
}

/// Whether a zero list looks recurrent on `window`: at least `n_min` zeros
/// and either the last one in the final quarter, or the distance from the
/// last zero to the window end within twice the larger of the last two
/// gaps, stretched by the largest recent gap growth. Zeros of Euler-type
/// equations spread geometrically, and zeros of `det Phi` may interleave
/// two such families.
pub fn recurrent(zeros: &[f64], window: (f64, f64), n_min: usize) -> bool {
    let n = zeros.len();
    if n < n_min.max(1) {
        return false;
    }
    let (t0, t1) = window;
    let last = zeros[n - 1];
    if last >= t1 - 0.25 * (t1 - t0) {
        return true;
    }
    if n < 2 {
        return false;
    }
    let gaps: Vec<f64> = zeros.windows(2).map(|w| w[1] - w[0]).collect();
    let recent = &gaps[gaps.len().saturating_sub(4)..];
    let gap = recent.iter().rev().take(2).fold(0.0f64, |m, &g| m.max(g));
    let growth = recent.windows(2).map(|w| w[1] / w[0]).fold(1.0f64, f64::max);
    t1 - last <= 2.0 * gap * growth
}

/// Whether no zero lies past the burn-in prefix `burn_in * (T - t0)`.
pub fn zero_free_after(zeros: &[f64], window: (f64, f64), burn_in: f64) -> bool {
    let cut = window.0 + burn_in * (window.1 - window.0);
    zeros.iter().all(|&z| z <= cut)
}

// Zeros of phi are tracked through the Pruefer angle
// (phi, psi) = rho (sin theta, cos theta), so phi = 0 exactly when theta is
// a multiple of pi. The angle equation stays bounded where phi grows
// exponentially and the integrator can take long steps there.
fn zeros_from(sys: &ScalarSystem, start: [f64; 2], window: (f64, f64), tol: IntegratorTol) -> Result<Vec<f64>, OdeintError> {
    let field = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (s, c) = y[0].sin_cos();
        dy[0] = (sys.f11)(t) * s * c + (sys.f12)(t) * c * c - (sys.f21)(t) * s * s - (sys.f22)(t) * s * c;
    };
    let theta0 = start[0].atan2(start[1]);
    let traj = adaptive_solve(field, &[theta0], window, &tol.options())?;
    Ok(angle_crossings(&traj))
}

fn angle_crossings(traj: &Trajectory<f64>) -> Vec<f64> {
    use std::f64::consts::PI;
    let (t0, t1) = (traj.t_first(), traj.t_last());
    let mut buf = [0.0];
    let mut theta = |t: f64| {
        traj.dense_into(t, &mut buf);
        buf[0]
    };
    let mut out = Vec::new();
    let th0 = traj.state(0)[0];
    if (th0 / PI).round() * PI == th0 {
        out.push(t0);
    }
    let ts = sample_times(traj, 4, 0.01 * (t1 - t0));
    let vals: Vec<f64> = ts.iter().map(|&t| theta(t)).collect();
    for k in 0..ts.len().saturating_sub(1) {
        let (a, b) = (vals[k], vals[k + 1]);
        let (lo, hi) = (a.min(b), a.max(b));
        for m in (lo / PI).floor() as i64 + 1..=(hi / PI).floor() as i64 {
            let level = m as f64 * PI;
            let root = bracket_root(|t| theta(t) - level, ts[k], ts[k + 1], 1e-12 * ts[k].abs().max(1.0));
            out.push(root);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

// Restart magnitude after an escape; the skipped stretch is about
// 1 / (f12 * RESTART) long.
const RESTART: f64 = 1e4;
const MAX_ESCAPES: usize = 10_000;

fn riccati_escapes(sys: &ScalarSystem, window: (f64, f64), tol: IntegratorTol) -> Result<Vec<f64>, OdeintError> {
    let f = |t: f64| (sys.f12)(t);
    let g = |t: f64| (sys.f11)(t) - (sys.f22)(t);
    let h = |t: f64| -(sys.f21)(t);
    let mut out = Vec::new();
    let (mut t, mut y) = (window.0, 0.0);
    while out.len() < MAX_ESCAPES {
        let run = solve_scalar_riccati(f, g, h, y, (t, window.1), Y_MAX, tol)?;
        let Some(b) = run.blowup else { break };
        out.push(b.escape_time);
        if b.escape_time <= t || window.1 - b.escape_time <= 1e-9 * (1.0 + window.1.abs()) {
            break;
        }
        y = -run.traj.last_state()[0].signum() * RESTART;
        t = b.escape_time;
    }
    Ok(out)
}

/// Follows the system from `(1, 0)` and `(0, 1)` and classifies the
/// zeros of `phi`: oscillatory when both zero lists are [`recurrent`],
/// non-oscillatory when both are free of zeros after the burn-in prefix.
pub fn scalar_oscillation(
    sys: &ScalarSystem,
    window: (f64, f64),
    n_min: usize,
    burn_in: f64,
    tol: IntegratorTol,
) -> Result<ScalarOutcome, OdeintError> {
    let z1 = zeros_from(sys, [1.0, 0.0], window, tol)?;
    let z2 = zeros_from(sys, [0.0, 1.0], window, tol)?;
    let verdict = if recurrent(&z1, window, n_min) && recurrent(&z2, window, n_min) {
        ScalarVerdict::Oscillatory
    } else if zero_free_after(&z1, window, burn_in) && zero_free_after(&z2, window, burn_in) {
        ScalarVerdict::NonOscillatory
    } else {
        ScalarVerdict::Undecided
    };
    let riccati_escapes = riccati_escapes(sys, window, tol)?;
    Ok(ScalarOutcome { verdict, zeros: [z1, z2], riccati_escapes })
}
