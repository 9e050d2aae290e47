//! The Riccati system in the coordinates of the diagonal case.
//!
//! With `r1 = a12 / b1`, `r2 = conj(a21) / b2`, the upper form tracks
//! `(z11, y = z12 + r2)` and the lower form `(z22, v = z12 + r1)`. Each form
//! is not closed on its own (the `y` equation contains `z22` and the `v`
//! equation `z11`), so the remaining diagonal entry is carried along as a
//! partner.

use serde::Serialize;

use super::{check_window, uniform_grid, C12Sign, Envelope, GridOptions, RiccatiError};
use super::envelope::diag_source;
use crate::coefsys::{ratio_fns, Scenario};
use crate::odeint::{solve_with_hook, EscapeWhen, IntegratorTol, OdeError, OdeintError, Trajectory, Y_MAX};
use crate::Cx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    /// `(z11, y)` with partner `z22`.
    Upper,
    /// `(z22, v)` with partner `z11`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsystemInit {
    pub z: f64,
    pub w: Cx,
    pub partner: f64,
}

#[derive(Debug, Clone)]
pub struct SubsystemRun {
    pub which: Subsystem,
    /// State `[z, Re w, Im w, partner]`.
    pub traj: Trajectory<f64>,
    /// Time of numerical escape, if any.
    pub blowup: Option<f64>,
}

impl SubsystemRun {
    pub fn z(&self, t: f64) -> Option<f64> {
        self.traj.dense_eval(t).map(|y| y[0])
    }

    pub fn w(&self, t: f64) -> Option<Cx> {
        self.traj.dense_eval(t).map(|y| Cx::new(y[1], y[2]))
    }

    pub fn partner(&self, t: f64) -> Option<f64> {
        self.traj.dense_eval(t).map(|y| y[3])
    }
}

pub fn subsystem_solve(
    s: &Scenario,
    which: Subsystem,
    init: SubsystemInit,
    window: (f64, f64),
    tol: IntegratorTol,
) -> Result<SubsystemRun, RiccatiError> {
    check_window(window)?;
    let rf = ratio_fns(s)?;
    rf.at(window.0)?;
    let field = |t: f64, y: &[f64], dy: &mut [f64]| {
        let (Ok(co), Ok(rp)) = (s.eval(t), rf.at(t)) else {
            dy.fill(f64::NAN);
            return;
        };
        let (a, c) = (co.a, co.c);
        let (b1, b2) = (co.b.e11.re, co.b.e22.re);
        let mix = a.e11.conj() + a.e22;
        let w = Cx::new(y[1], y[2]);
        let (z11, z22) = match which {
            Subsystem::Upper => (y[0], y[3]),
            Subsystem::Lower => (y[3], y[0]),
        };
        let damp = mix + (b1 * z11 + b2 * z22);
        let e11 = |z12: Cx| -(b1 * z11 * z11 + 2.0 * a.e11.re * z11 + b2 * (z12 + rp.r2).norm_sqr()
            - a.e21.norm_sqr() / b2
            - c.e11.re);
        let e22 = |z12: Cx| -(b2 * z22 * z22 + 2.0 * a.e22.re * z22 + b1 * (z12 + rp.r1).norm_sqr()
            - a.e12.norm_sqr() / b1
            - c.e22.re);
        let (dz, dw, dp) = match which {
            Subsystem::Upper => {
                let z12 = w - rp.r2;
                let dw = -damp * w - (rp.r1 - rp.r2) * (b1 * z11) + rp.dr2 + rp.r2 * mix + c.e12;
                (e11(z12), dw, e22(z12))
            }
            Subsystem::Lower => {
                let z12 = w - rp.r1;
                let dw = -damp * w - (rp.r2 - rp.r1) * (b2 * z22) + rp.dr1 + rp.r1 * mix + c.e12;
                (e22(z12), dw, e11(z12))
            }
        };
        dy[0] = dz;
        dy[1] = dw.re;
        dy[2] = dw.im;
        dy[3] = dp;
    };
    let mut hook = EscapeWhen(|_t: f64, y: &[f64]| {
        let n = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (n >= Y_MAX || !n.is_finite()).then(|| format!("|state| = {n:e} reached the escape threshold"))
    });
    let y0 = [init.z, init.w.re, init.w.im, init.partner];
    match solve_with_hook(field, &y0, window, &tol.options(), &mut hook) {
        Ok(traj) => {
            let blowup = (!traj.events.is_empty()).then(|| traj.t_last());
            Ok(SubsystemRun { which, traj, blowup })
        }
        Err(OdeError::StepUnderflow { partial, .. }) => {
            let blowup = Some(partial.t_last());
            Ok(SubsystemRun { which, traj: *partial, blowup })
        }
        Err(e) => Err(RiccatiError::Odeint(OdeintError::Ode(e))),
    }
}

/// Outcome of [`cauchy_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyBoundReport {
    pub holds: bool,
    /// How far each form kept `z11, z22 >= 0`: `[upper, lower]`.
    pub checked_until: [f64; 2],
    /// Whether the diagonal entries stayed nonnegative on the whole window.
    pub hypotheses_held: bool,
    /// Largest `(|w| - bound) / (1 + bound)` seen.
    pub worst_margin: f64,
    pub samples: usize,
}

/// Integrates both forms from `z11 = z22 = z0 >= 0` and `w(t0) = 0`, and
/// checks `|y| <= M + E3`, `|v| <= M + E4` wherever the diagonal entries
/// remain nonnegative.
pub fn cauchy_bound_check(
    s: &Scenario,
    window: (f64, f64),
    z0: f64,
    sign: C12Sign,
    grid: &GridOptions,
) -> Result<CauchyBoundReport, RiccatiError> {
    if z0 < 0.0 {
        return Err(RiccatiError::HypothesisViolated { which: "z(t0) >= 0".into(), t: window.0 });
    }
    let env = Envelope::build(diag_source(s)?, window, sign, grid)?;
    let mut report =
        CauchyBoundReport { holds: true, checked_until: [window.0; 2], hypotheses_held: true, worst_margin: f64::NEG_INFINITY, samples: 0 };
    for (k, which) in [Subsystem::Upper, Subsystem::Lower].into_iter().enumerate() {
        let init = SubsystemInit { z: z0, w: Cx::new(0.0, 0.0), partner: z0 };
        let run = subsystem_solve(s, which, init, window, grid.tol)?;
        let traj = &run.traj;
        let stop = (0..traj.len())
            .find(|&i| traj.state(i)[0] < -1e-9 || traj.state(i)[3] < -1e-9)
            .map(|i| traj.times()[i.saturating_sub(1)])
            .unwrap_or(traj.t_last());
        if stop < window.1 {
            report.hypotheses_held = false;
        }
        report.checked_until[k] = stop;
        let mut ts: Vec<f64> = uniform_grid(window, grid.samples).into_iter().filter(|&t| t <= stop).collect();
        ts.extend(traj.times().iter().copied().filter(|&t| t <= stop));
        for t in ts {
            let Some(w) = run.w(t) else { continue };
            let e = env.at(t)?;
            let bound = e.frak_m + if which == Subsystem::Upper { e.e3 } else { e.e4 };
            let margin = (w.norm() - bound) / (1.0 + bound);
            report.worst_margin = report.worst_margin.max(margin);
            report.samples += 1;
            if margin > 1e-6 {
                report.holds = false;
            }
        }
    }
    Ok(report)
}
