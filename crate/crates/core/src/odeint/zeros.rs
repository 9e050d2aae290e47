//! Zeros of `det Phi` and of scalar components on dense output.

use serde::{Deserialize, Serialize};

use super::hamiltonian::{normalized_det_of, split};
use super::roots::{bracket_root, golden_min};
use super::{HamiltonianRun, Trajectory};
use crate::Mat2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroKind {
    SignChange,
    ModulusDip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub time: f64,
    /// `|det Phi|` at the refined point, in the scale-free normalisation.
    pub residual: f64,
    pub kind: ZeroKind,
}

/// Samples per accepted step used by the zero scans.
pub const SAMPLES_PER_STEP: usize = 8;

const MERGE_DIST: f64 = 1e-9;

/// Sample times: every node plus interior points of each step.
pub fn sample_times(traj: &Trajectory<f64>, per_step: usize, max_spacing: f64) -> Vec<f64> {
    let ts = traj.times();
    let mut out = Vec::with_capacity(ts.len() * per_step);
    for w in ts.windows(2) {
        let h = w[1] - w[0];
        let k = per_step.max((h / max_spacing).ceil() as usize).max(1);
        for j in 0..k {
            out.push(w[0] + h * j as f64 / k as f64);
        }
    }
    if let Some(&last) = ts.last() {
        out.push(last);
    }
    out
}

struct DetProbe<'a> {
    run: &'a HamiltonianRun,
    buf: std::cell::RefCell<Vec<f64>>,
}

impl DetProbe<'_> {
    fn pair(&self, t: f64) -> (Mat2, Mat2) {
        let mut b = self.buf.borrow_mut();
        self.run.traj.dense_into(t, &mut b);
        split(&b)
    }

    fn det(&self, t: f64) -> num_complex::Complex<f64> {
        let (phi, psi) = self.pair(t);
        normalized_det_of(&phi, &psi)
    }

    /// `eps (1 + |Phi_n|^2)` with `Phi_n = Phi G^{-1/2}` the scale-free factor.
    fn threshold(&self, t: f64, eps: f64) -> f64 {
        let (phi, psi) = self.pair(t);
        let g = phi.adjoint() * phi + psi.adjoint() * psi;
        let pn2 = match g.inv() {
            Ok(gi) => (phi.adjoint() * phi * gi).tr().re.max(0.0),
            Err(_) => 2.0,
        };
        eps * (1.0 + pn2)
    }
}

/// Locates zeros of `det Phi` on a Hamiltonian run.
///
/// Local minima of `|det|` are refined by golden-section search and kept
/// when below threshold; for real-coefficient runs sign changes of
/// `Re det` are refined by false position as well. Zeros closer than
/// `1e-9` are merged.
pub fn detect_det_zeros(run: &HamiltonianRun, eps_zero: f64) -> Vec<ZeroRecord> {
    let traj = &run.traj;
    if traj.len() < 2 {
        return Vec::new();
    }
    let (t0, t1) = (traj.t_first(), traj.t_last());
    let probe = DetProbe { run, buf: std::cell::RefCell::new(vec![0.0; traj.dim()]) };
    let ts = sample_times(traj, SAMPLES_PER_STEP, 0.01 * (t1 - t0));
    let ds: Vec<_> = ts.iter().map(|&t| probe.det(t)).collect();
    let mags: Vec<f64> = ds.iter().map(|d| d.norm()).collect();
    let n = ts.len();
    let xtol = |t: f64| 1e-12 * t.abs().max(1.0);

    // modulus dips
    let mut dips: Vec<(ZeroRecord, f64, f64)> = Vec::new();
    for k in 0..n {
        let left = if k == 0 { f64::INFINITY } else { mags[k - 1] };
        let right = if k + 1 == n { f64::INFINITY } else { mags[k + 1] };
        if !(mags[k] <= left && mags[k] <= right) {
            continue;
        }
        if k > 0 && mags[k] == left {
            // flat run: keep only its first sample
            continue;
        }
        let a = ts[k.saturating_sub(1)];
        let b = ts[(k + 1).min(n - 1)];
        let (tm, fm) = if k == 0 && mags[0] == 0.0 {
            (ts[0], 0.0)
        } else {
            golden_min(|t| probe.det(t).norm(), a, b, xtol(ts[k]))
        };
        let (tm, fm) = if fm <= mags[k] { (tm, fm) } else { (ts[k], mags[k]) };
        if fm <= probe.threshold(tm, eps_zero) {
            dips.push((ZeroRecord { time: tm, residual: fm, kind: ZeroKind::ModulusDip }, a, b));
        }
    }

    // sign changes of Re det for real data
    let mut signs: Vec<ZeroRecord> = Vec::new();
    if run.real_coefficients {
        for k in 0..n - 1 {
            let (fa, fb) = (ds[k].re, ds[k + 1].re);
            if fa == 0.0 || (fa > 0.0) == (fb > 0.0) || fb == 0.0 {
                continue;
            }
            let r = bracket_root(|t| probe.det(t).re, ts[k], ts[k + 1], xtol(ts[k]));
            let d = probe.det(r);
            let thr = probe.threshold(r, eps_zero);
            if d.norm() <= thr {
                signs.push(ZeroRecord { time: r, residual: d.norm(), kind: ZeroKind::SignChange });
            }
        }
    }

    let mut all: Vec<ZeroRecord> = dips
        .into_iter()
        .filter(|(_, a, b)| !signs.iter().any(|s| s.time >= *a && s.time <= *b))
        .map(|(z, _, _)| z)
        .collect();
    all.extend(signs);
    all.sort_by(|x, y| x.time.total_cmp(&y.time));
    let mut merged: Vec<ZeroRecord> = Vec::with_capacity(all.len());
    for z in all {
        match merged.last_mut() {
            Some(last) if (z.time - last.time).abs() < MERGE_DIST => {
                if z.residual < last.residual {
                    *last = z;
                }
            }
            _ => merged.push(z),
        }
    }
    merged
}

/// Zeros of component `idx` of a real trajectory: sign changes refined by
/// false position, plus exact zeros at sample points (one per run of them).
pub fn scalar_zeros(traj: &Trajectory<f64>, idx: usize) -> Vec<f64> {
    if traj.len() < 2 {
        return if traj.len() == 1 && traj.state(0)[idx] == 0.0 { vec![traj.t_first()] } else { vec![] };
    }
    let (t0, t1) = (traj.t_first(), traj.t_last());
    let ts = sample_times(traj, SAMPLES_PER_STEP, 0.01 * (t1 - t0));
    let mut buf = vec![0.0; traj.dim()];
    let mut val = |t: f64| {
        traj.dense_into(t, &mut buf);
        buf[idx]
    };
    let vs: Vec<f64> = ts.iter().map(|&t| val(t)).collect();
    let mut out: Vec<f64> = Vec::new();
    for k in 0..ts.len() {
        if vs[k] == 0.0 {
            // a run of exact zeros (an identically vanishing stretch) counts once
            if k == 0 || vs[k - 1] != 0.0 {
                out.push(ts[k]);
            }
            continue;
        }
        if k + 1 < ts.len() && vs[k + 1] != 0.0 && (vs[k] > 0.0) != (vs[k + 1] > 0.0) {
            let r = bracket_root(&mut val, ts[k], ts[k + 1], 1e-12 * ts[k].abs().max(1.0));
            out.push(r);
        }
    }
    out.dedup_by(|a, b| (*a - *b).abs() < MERGE_DIST);
    out
}
