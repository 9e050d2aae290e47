//! The matrix system `Phi' = A Phi + B Psi`, `Psi' = C Phi - A* Psi`.

use super::{solve_with_hook, IntegratorTol, OdeintError, StepHook, Trajectory};
use crate::coefsys::{Scenario, Tag};
use crate::{Cx, Mat2};

/// `|Phi* Psi - Psi* Phi|_F`.
pub fn conjoined_defect(phi: &Mat2, psi: &Mat2) -> f64 {
    (phi.adjoint() * *psi - psi.adjoint() * *phi).norm()
}

fn defect_bound(phi: &Mat2, psi: &Mat2) -> f64 {
    1e-8 * (1.0 + phi.norm() * psi.norm())
}

fn tol_conj(phi: &Mat2, psi: &Mat2) -> f64 {
    1e-10 * (1.0 + phi.norm() * psi.norm())
}

/// Solution of the matrix system, possibly with renormalised columns.
#[derive(Debug, Clone)]
pub struct HamiltonianRun {
    /// State layout: `Phi` (8 reals) then `Psi` (8 reals).
    pub traj: Trajectory<f64>,
    /// Conjoinedness defect at every node.
    pub defects: Vec<f64>,
    /// Cumulative `ln det R` of the factors removed up to each node (zero when raw).
    pub log_scale: Vec<f64>,
    pub normalized: bool,
    pub real_coefficients: bool,
}

pub(crate) fn split(y: &[f64]) -> (Mat2, Mat2) {
    (Mat2::from_flat(&y[..8]), Mat2::from_flat(&y[8..16]))
}

fn field(s: &Scenario) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    move |t, y, dy| {
        let co = s.coeffs(t);
        let (phi, psi) = split(y);
        let dphi = co.a * phi + co.b * psi;
        let dpsi = co.c * phi - co.a.adjoint() * psi;
        dphi.write_flat(&mut dy[..8]);
        dpsi.write_flat(&mut dy[8..16]);
    }
}

fn initial_state(phi0: &Mat2, psi0: &Mat2) -> Vec<f64> {
    let mut y = vec![0.0; 16];
    phi0.write_flat(&mut y[..8]);
    psi0.write_flat(&mut y[8..16]);
    y
}

fn check_start(t0: f64, phi0: &Mat2, psi0: &Mat2) -> Result<(), OdeintError> {
    let d0 = conjoined_defect(phi0, psi0);
    let tol = tol_conj(phi0, psi0);
    if d0 > tol {
        return Err(OdeintError::ConjoinedDrift { t: t0, defect: d0, bound: tol, at_start: true });
    }
    Ok(())
}

/// Orthonormalises the two columns of `[Phi; Psi]` in place.
/// Returns `ln det R`, which is real because `R` has a positive diagonal.
fn renormalize(y: &mut [f64]) -> Result<f64, String> {
    let (phi, psi) = split(y);
    let col = |m: &Mat2, n: &Mat2, j: usize| [m.get(0, j), m.get(1, j), n.get(0, j), n.get(1, j)];
    let c1 = col(&phi, &psi, 0);
    let c2 = col(&phi, &psi, 1);
    let norm = |v: &[Cx; 4]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let r11 = norm(&c1);
    if !(r11 > 0.0) || !r11.is_finite() {
        return Err("first column collapsed".into());
    }
    let q1: Vec<Cx> = c1.iter().map(|z| z / r11).collect();
    let r12: Cx = q1.iter().zip(&c2).map(|(a, b)| a.conj() * b).sum();
    let mut w = c2;
    for (wk, qk) in w.iter_mut().zip(&q1) {
        *wk -= r12 * qk;
    }
    // second Gram-Schmidt pass for orthogonality at large column ratios
    let r12b: Cx = q1.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
    for (wk, qk) in w.iter_mut().zip(&q1) {
        *wk -= r12b * qk;
    }
    let r22 = norm(&w);
    if !(r22 > 0.0) || !r22.is_finite() {
        return Err("columns became dependent".into());
    }
    let q2: Vec<Cx> = w.iter().map(|z| z / r22).collect();
    let phi_n = Mat2::new(q1[0], q2[0], q1[1], q2[1]);
    let psi_n = Mat2::new(q1[2], q2[2], q1[3], q2[3]);
    phi_n.write_flat(&mut y[..8]);
    psi_n.write_flat(&mut y[8..16]);
    Ok(r11.ln() + r22.ln())
}

struct Renormalizer {
    logs: Vec<f64>,
    acc: f64,
}

impl StepHook<f64> for Renormalizer {
    fn after_step(&mut self, _t: f64, y: &mut [f64]) -> Result<(), String> {
        let l = renormalize(y)?;
        self.acc += l;
        self.logs.push(self.acc);
        Ok(())
    }
}

fn step_cap(window: (f64, f64)) -> f64 {
    0.01 * (window.1 - window.0)
}

fn finish(
    s: &Scenario,
    traj: Trajectory<f64>,
    log_scale: Vec<f64>,
    normalized: bool,
) -> Result<HamiltonianRun, OdeintError> {
    let mut defects = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let (phi, psi) = split(traj.state(i));
        let d = conjoined_defect(&phi, &psi);
        let bound = defect_bound(&phi, &psi);
        if d > bound {
            return Err(OdeintError::ConjoinedDrift {
                t: traj.times()[i],
                defect: d,
                bound,
                at_start: false,
            });
        }
        defects.push(d);
    }
    Ok(HamiltonianRun {
        traj,
        defects,
        log_scale,
        normalized,
        real_coefficients: s.has_tag(Tag::RealCoefficients),
    })
}

/// Integrates the raw matrix system from `(phi0, psi0)`.
pub fn solve_hamiltonian(
    s: &Scenario,
    phi0: Mat2,
    psi0: Mat2,
    window: (f64, f64),
    tol: IntegratorTol,
) -> Result<HamiltonianRun, OdeintError> {
    check_start(window.0, &phi0, &psi0)?;
    s.eval(window.0)?;
    let y0 = initial_state(&phi0, &psi0);
    let mut opts = tol.options();
    opts.h_max = Some(step_cap(window));
    let traj = solve_with_hook(field(s), &y0, window, &opts, &mut super::NoHook)?;
    let n = traj.len();
    finish(s, traj, vec![0.0; n], false)
}

/// Integrates the matrix system, orthonormalising `[Phi; Psi]` after every
/// step. Zeros of `det Phi` are unaffected; the removed scale is kept in
/// [`HamiltonianRun::log_scale`].
pub fn solve_hamiltonian_normalized(
    s: &Scenario,
    phi0: Mat2,
    psi0: Mat2,
    window: (f64, f64),
    tol: IntegratorTol,
) -> Result<HamiltonianRun, OdeintError> {
    check_start(window.0, &phi0, &psi0)?;
    s.eval(window.0)?;
    let mut y0 = initial_state(&phi0, &psi0);
    let l0 = renormalize(&mut y0).map_err(|_| OdeintError::ConjoinedDrift {
        t: window.0,
        defect: f64::NAN,
        bound: 0.0,
        at_start: true,
    })?;
    let mut hook = Renormalizer { logs: vec![l0], acc: l0 };
    let mut opts = tol.options();
    opts.h_max = Some(step_cap(window));
    let traj = solve_with_hook(field(s), &y0, window, &opts, &mut hook)?;
    let mut logs = hook.logs;
    logs.truncate(traj.len());
    finish(s, traj, logs, true)
}

impl HamiltonianRun {
    pub fn window(&self) -> (f64, f64) {
        (self.traj.t_first(), self.traj.t_last())
    }

    /// `(Phi, Psi)` at `t` as stored (normalised runs return the normalised pair).
    pub fn phi_psi(&self, t: f64) -> Option<(Mat2, Mat2)> {
        let y = self.traj.dense_eval(t)?;
        Some(split(&y))
    }

    /// Scale-free determinant `det Phi / sqrt(det(Phi* Phi + Psi* Psi))`.
    pub fn normalized_det(&self, t: f64) -> Option<Cx> {
        let (phi, psi) = self.phi_psi(t)?;
        Some(normalized_det_of(&phi, &psi))
    }

    /// `det Phi` of the unnormalised solution.
    pub fn det_phi(&self, t: f64) -> Option<Cx> {
        let i = self.traj.segment_of(t).unwrap_or(0);
        let (phi, _) = self.phi_psi(t)?;
        let scale = if self.traj.times().get(i + 1) == Some(&t) {
            self.log_scale[i + 1]
        } else {
            self.log_scale[i]
        };
        Some(phi.det() * scale.exp())
    }

    /// Defect `|Phi* Psi - Psi* Phi|` at `t` on the dense output.
    pub fn defect_at(&self, t: f64) -> Option<f64> {
        let (phi, psi) = self.phi_psi(t)?;
        Some(conjoined_defect(&phi, &psi))
    }

    pub fn max_defect(&self) -> f64 {
        self.defects.iter().cloned().fold(0.0, f64::max)
    }
}

pub(crate) fn normalized_det_of(phi: &Mat2, psi: &Mat2) -> Cx {
    let g = phi.adjoint() * *phi + psi.adjoint() * *psi;
    let dg = g.det().re.max(f64::MIN_POSITIVE);
    phi.det() / dg.sqrt()
}
