//! Scalar `y' + f y^2 + g y + h = 0` and matrix `Z' + ZBZ + A*Z + ZA - C = 0`.

use serde::{Deserialize, Serialize};

use super::{solve_with_hook, IntegratorTol, OdeError, OdeintError, StepHook, Trajectory};
use crate::coefsys::Scenario;
use crate::Mat2;

/// Escape diagnostic for a Riccati solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupRecord {
    /// Last accepted time before escape.
    pub escape_time: f64,
    pub last_norm: f64,
    /// Infimum of `G(t) = int tr(B Z)` (scalar: `int f y`) seen up to escape.
    pub g_lower_bound: f64,
    /// Always true: escape is detected numerically.
    pub numerical: bool,
}

/// Riccati trajectory with optional blow-up.
#[derive(Debug, Clone)]
pub struct RiccatiRun {
    /// Scalar runs store `[y, G]`; matrix runs store `Z` (8 reals) then `G`.
    pub traj: Trajectory<f64>,
    pub blowup: Option<BlowupRecord>,
    pub g_infimum: f64,
}

pub type MatrixRiccatiRun = RiccatiRun;

impl RiccatiRun {
    /// Whether the solution reached the end of the requested window.
    pub fn is_global(&self) -> bool {
        self.blowup.is_none()
    }

    pub fn z_at(&self, t: f64) -> Option<Mat2> {
        let y = self.traj.dense_eval(t)?;
        Some(Mat2::from_flat(&y[..8]))
    }
}

struct Escape {
    y_max: f64,
    norm: fn(&[f64]) -> f64,
    last_norm: f64,
    hermitian: bool,
}

impl StepHook<f64> for Escape {
    fn escape(&mut self, _t: f64, y: &[f64]) -> Option<String> {
        let n = (self.norm)(y);
        if n >= self.y_max || !n.is_finite() {
            self.last_norm = n;
            return Some(format!("|y| = {n:e} reached the escape threshold"));
        }
        None
    }

    fn after_step(&mut self, _t: f64, y: &mut [f64]) -> Result<(), String> {
        if self.hermitian {
            let z = Mat2::from_flat(&y[..8]).hermitian_part();
            z.write_flat(&mut y[..8]);
        }
        Ok(())
    }
}

fn g_infimum(traj: &Trajectory<f64>, gi: usize) -> f64 {
    (0..traj.len()).map(|i| traj.state(i)[gi]).fold(f64::INFINITY, f64::min)
}

fn settle(
    res: Result<Trajectory<f64>, OdeError<f64>>,
    hook: &Escape,
    gi: usize,
) -> Result<RiccatiRun, OdeintError> {
    match res {
        Ok(traj) => {
            let inf = g_infimum(&traj, gi);
            let blowup = traj.events.iter().find(|e| e.kind == super::EventKind::Escape).map(|e| {
                BlowupRecord {
                    escape_time: e.time,
                    last_norm: hook.last_norm,
                    g_lower_bound: inf,
                    numerical: true,
                }
            });
            Ok(RiccatiRun { traj, blowup, g_infimum: inf })
        }
        Err(OdeError::StepUnderflow { partial, .. }) => {
            let traj = *partial;
            let inf = g_infimum(&traj, gi);
            let last_norm = (hook.norm)(traj.last_state());
            let blowup = Some(BlowupRecord {
                escape_time: traj.t_last(),
                last_norm,
                g_lower_bound: inf,
                numerical: true,
            });
            Ok(RiccatiRun { traj, blowup, g_infimum: inf })
        }
        Err(e) => Err(e.into()),
    }
}

/// Integrates `y' = -(f y^2 + g y + h)` from `y0`, stopping at `|y| >= y_max`.
pub fn solve_scalar_riccati<F, G, H>(
    f: F,
    g: G,
    h: H,
    y0: f64,
    window: (f64, f64),
    y_max: f64,
    tol: IntegratorTol,
) -> Result<RiccatiRun, OdeintError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let field = |t: f64, y: &[f64], dy: &mut [f64]| {
        let ft = f(t);
        dy[0] = -(ft * y[0] * y[0] + g(t) * y[0] + h(t));
        dy[1] = ft * y[0];
    };
    let mut hook = Escape { y_max, norm: |y| y[0].abs(), last_norm: 0.0, hermitian: false };
    let res = solve_with_hook(field, &[y0, 0.0], window, &tol.options(), &mut hook);
    settle(res, &hook, 1)
}

/// Integrates the matrix Riccati equation from Hermitian `z0`, symmetrising
/// after every accepted step and accumulating `G = int tr(B Z)`.
pub fn solve_matrix_riccati(
    s: &Scenario,
    z0: Mat2,
    window: (f64, f64),
    y_max: f64,
    tol: IntegratorTol,
) -> Result<RiccatiRun, OdeintError> {
    let flag = z0.is_hermitian(z0.tol_herm());
    if !flag.hermitian {
        return Err(OdeintError::NotHermitian(flag.defect));
    }
    s.eval(window.0)?;
    let field = |t: f64, y: &[f64], dy: &mut [f64]| {
        let co = s.coeffs(t);
        let z = Mat2::from_flat(&y[..8]);
        let dz = -(z * co.b * z + co.a.adjoint() * z + z * co.a - co.c);
        dz.write_flat(&mut dy[..8]);
        dy[8] = (co.b * z).tr().re;
    };
    let mut y0 = vec![0.0; 9];
    z0.hermitian_part().write_flat(&mut y0[..8]);
    let mut hook = Escape {
        y_max,
        norm: |y| Mat2::from_flat(&y[..8]).norm(),
        last_norm: 0.0,
        hermitian: true,
    };
    let res = solve_with_hook(field, &y0, window, &tol.options(), &mut hook);
    settle(res, &hook, 8)
}
