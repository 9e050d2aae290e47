//! Dormand-Prince 5(4) with PI step control and fourth-order dense output.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Kind of a recorded trajectory event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The escape predicate fired and integration stopped.
    Escape,
    /// The projection hook rejected the state and integration stopped.
    HookStop,
}

#[derive(Debug, Clone)]
pub struct Event<T> {
    pub kind: EventKind,
    pub time: T,
    pub detail: String,
}

/// Accepted nodes plus per-step dense interpolants.
#[derive(Clone)]
pub struct Trajectory<T> {
    dim: usize,
    times: Vec<T>,
    states: Vec<T>,
    // five coefficient blocks of length `dim` per step
    dense: Vec<T>,
    pub events: Vec<Event<T>>,
    pub rejected_steps: usize,
    pub evaluations: usize,
}

impl<T: Real> fmt::Debug for Trajectory<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("dim", &self.dim)
            .field("nodes", &self.times.len())
            .field("t_first", &self.times.first())
            .field("t_last", &self.times.last())
            .field("events", &self.events)
            .finish()
    }
}

impl<T: Real> Trajectory<T> {
    fn new(dim: usize, t0: T, y0: &[T]) -> Self {
        Self {
            dim,
            times: vec![t0],
            states: y0.to_vec(),
            dense: Vec::new(),
            events: Vec::new(),
            rejected_steps: 0,
            evaluations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of accepted nodes (steps + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[T] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn state_mut(&mut self, i: usize) -> &mut [T] {
        let d = self.dim;
        &mut self.states[i * d..(i + 1) * d]
    }

    pub fn t_first(&self) -> T {
        self.times[0]
    }

    pub fn t_last(&self) -> T {
        *self.times.last().expect("trajectory has at least one node")
    }

    pub fn last_state(&self) -> &[T] {
        self.state(self.len() - 1)
    }

    /// Index `i` of the step `[t_i, t_{i+1}]` containing `t`.
    pub fn segment_of(&self, t: T) -> Option<usize> {
        let n = self.times.len();
        if n < 2 || t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t);
        Some(i.saturating_sub(1).min(n - 2))
    }

    /// Interpolated state at `t`, exact at accepted nodes.
    pub fn dense_eval(&self, t: T) -> Option<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        if self.dense_into(t, &mut out) {
            Some(out)
        } else {
            None
        }
    }

    /// Writes the interpolated state at `t` into `out`; false outside the range.
    pub fn dense_into(&self, t: T, out: &mut [T]) -> bool {
        if self.times.len() == 1 {
            if t == self.times[0] {
                out.copy_from_slice(self.state(0));
                return true;
            }
            return false;
        }
        let Some(i) = self.segment_of(t) else {
            return false;
        };
        if t == self.times[i] {
            out.copy_from_slice(self.state(i));
            return true;
        }
        if t == self.times[i + 1] {
            out.copy_from_slice(self.state(i + 1));
            return true;
        }
        self.segment_eval(i, t, out);
        true
    }

    /// Interpolant of step `i` evaluated at `t` (no node snapping).
    pub fn segment_eval(&self, i: usize, t: T, out: &mut [T]) {
        let d = self.dim;
        let h = self.times[i + 1] - self.times[i];
        let theta = (t - self.times[i]) / h;
        let theta1 = T::one() - theta;
        let r = &self.dense[i * 5 * d..(i + 1) * 5 * d];
        for k in 0..d {
            out[k] = r[k]
                + theta
                    * (r[d + k]
                        + theta1 * (r[2 * d + k] + theta * (r[3 * d + k] + theta1 * r[4 * d + k])));
        }
    }

    fn push_step(&mut self, t: T, y: &[T], coeffs: &[T]) {
        self.times.push(t);
        self.states.extend_from_slice(y);
        self.dense.extend_from_slice(coeffs);
    }
}

#[derive(Debug, Error)]
pub enum OdeError<T: Real> {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: T, h: T, partial: Box<Trajectory<T>> },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: T, partial: Box<Trajectory<T>> },
    #[error("non-finite initial state or derivative")]
    NonFiniteInitial,
    #[error("invalid tolerances (rtol = {rtol:e}, atol = {atol:e})")]
    InvalidTolerance { rtol: T, atol: T },
    #[error("invalid window [{t0}, {t1}]")]
    InvalidWindow { t0: T, t1: T },
}

impl<T: Real> OdeError<T> {
    /// Partial trajectory carried by step failures.
    pub fn partial(&self) -> Option<&Trajectory<T>> {
        match self {
            OdeError::StepUnderflow { partial, .. } | OdeError::MaxSteps { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub h_init: Option<T>,
    pub h_max: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            h_init: None,
            h_max: None,
            max_steps: 2_000_000,
        }
    }
}

/// Per-step callbacks. `after_step` may modify the accepted state (projection);
/// returning `Err` stops integration with a [`EventKind::HookStop`] event.
pub trait StepHook<T> {
    fn after_step(&mut self, _t: T, _y: &mut [T]) -> Result<(), String> {
        Ok(())
    }

    /// Returns a reason to stop before the step is recorded.
    fn escape(&mut self, _t: T, _y: &[T]) -> Option<String> {
        None
    }
}

/// Hook that does nothing.
pub struct NoHook;

impl<T> StepHook<T> for NoHook {}

/// Escape hook driven by a predicate.
pub struct EscapeWhen<F>(pub F);

impl<T, F: FnMut(T, &[T]) -> Option<String>> StepHook<T> for EscapeWhen<F> {
    fn escape(&mut self, t: T, y: &[T]) -> Option<String> {
        (self.0)(t, y)
    }
}

/// Integrates `y' = field(t, y)` over `window` without hooks.
pub fn adaptive_solve<T, F>(
    field: F,
    y0: &[T],
    window: (T, T),
    opts: &SolveOptions<T>,
) -> Result<Trajectory<T>, OdeError<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    solve_with_hook(field, y0, window, opts, &mut NoHook)
}

fn weighted_rms<T: Real>(v: &[T], scale: &[T]) -> T {
    let mut acc = T::zero();
    for (x, s) in v.iter().zip(scale) {
        let q = *x / *s;
        acc += q * q;
    }
    (acc / T::count(v.len().max(1))).sqrt()
}

/// Integrates `y' = field(t, y)` over `window`, calling `hook` after each step.
pub fn solve_with_hook<T, F, H>(
    mut field: F,
    y0: &[T],
    window: (T, T),
    opts: &SolveOptions<T>,
    hook: &mut H,
) -> Result<Trajectory<T>, OdeError<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
    H: StepHook<T> + ?Sized,
{
    let (t0, t1) = window;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(OdeError::InvalidWindow { t0, t1 });
    }
    if !(opts.rtol > T::zero()) || !(opts.atol >= T::zero()) {
        return Err(OdeError::InvalidTolerance { rtol: opts.rtol, atol: opts.atol });
    }
    let n = y0.len();
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteInitial);
    }
    let h_max = opts.h_max.unwrap_or(t1 - t0).min(t1 - t0);
    let mut traj = Trajectory::new(n, t0, y0);

    let mut y = y0.to_vec();
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut k5 = vec![T::zero(); n];
    let mut k6 = vec![T::zero(); n];
    let mut k7 = vec![T::zero(); n];
    let mut ytmp = vec![T::zero(); n];
    let mut y1 = vec![T::zero(); n];
    let mut err = vec![T::zero(); n];
    let mut sk = vec![T::zero(); n];
    let mut coeffs = vec![T::zero(); 5 * n];

    field(t0, &y, &mut k1);
    traj.evaluations += 1;
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteInitial);
    }

    let mut h = match opts.h_init {
        Some(h) => h.min(h_max),
        None => initial_step(&mut field, t0, &y, &k1, opts, h_max, &mut traj.evaluations),
    };

    let beta = T::lit(0.04);
    let expo1 = T::lit(0.2) - beta * T::lit(0.75);
    let safe = T::lit(0.9);
    let facc1 = T::lit(5.0);
    let facc2 = T::lit(0.1);
    let mut facold = T::lit(1e-4);
    let mut last_rejected = false;
    let mut t = t0;
    let mut steps = 0usize;

    loop {
        if t >= t1 {
            break;
        }
        if steps >= opts.max_steps {
            return Err(OdeError::MaxSteps { t, partial: Box::new(traj) });
        }
        let mut last = false;
        if t + h * T::lit(1.01) >= t1 {
            h = t1 - t;
            last = true;
        }
        let h_floor = T::lit(1e-14) * T::one().max(t.abs());
        if h < h_floor {
            return Err(OdeError::StepUnderflow { t, h, partial: Box::new(traj) });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * T::lit(A21) * k1[i];
        }
        field(t + T::lit(C2) * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (T::lit(A31) * k1[i] + T::lit(A32) * k2[i]);
        }
        field(t + T::lit(C3) * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] =
                y[i] + h * (T::lit(A41) * k1[i] + T::lit(A42) * k2[i] + T::lit(A43) * k3[i]);
        }
        field(t + T::lit(C4) * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (T::lit(A51) * k1[i]
                    + T::lit(A52) * k2[i]
                    + T::lit(A53) * k3[i]
                    + T::lit(A54) * k4[i]);
        }
        field(t + T::lit(C5) * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (T::lit(A61) * k1[i]
                    + T::lit(A62) * k2[i]
                    + T::lit(A63) * k3[i]
                    + T::lit(A64) * k4[i]
                    + T::lit(A65) * k5[i]);
        }
        let t_new = t + h;
        field(t_new, &ytmp, &mut k6);
        for i in 0..n {
            y1[i] = y[i]
                + h * (T::lit(A71) * k1[i]
                    + T::lit(A73) * k3[i]
                    + T::lit(A74) * k4[i]
                    + T::lit(A75) * k5[i]
                    + T::lit(A76) * k6[i]);
        }
        field(t_new, &y1, &mut k7);
        traj.evaluations += 6;

        for i in 0..n {
            err[i] = h
                * (T::lit(E1) * k1[i]
                    + T::lit(E3) * k3[i]
                    + T::lit(E4) * k4[i]
                    + T::lit(E5) * k5[i]
                    + T::lit(E6) * k6[i]
                    + T::lit(E7) * k7[i]);
            sk[i] = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            if sk[i] == T::zero() {
                sk[i] = T::min_positive_value();
            }
        }
        let enorm = weighted_rms(&err, &sk);

        let finite = enorm.is_finite()
            && y1.iter().all(|v| v.is_finite())
            && k7.iter().all(|v| v.is_finite());
        if !finite {
            h = h * T::lit(0.5);
            traj.rejected_steps += 1;
            last_rejected = true;
            continue;
        }

        let fac11 = enorm.powf(expo1);
        if enorm <= T::one() {
            let mut fac = fac11 / facold.powf(beta);
            fac = facc2.max(facc1.min(fac / safe));
            let mut h_new = h / fac;
            facold = enorm.max(T::lit(1e-4));

            if let Some(reason) = hook.escape(t_new, &y1) {
                traj.events.push(Event { kind: EventKind::Escape, time: t, detail: reason });
                return Ok(traj);
            }

            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                coeffs[i] = y[i];
                coeffs[n + i] = ydiff;
                coeffs[2 * n + i] = bspl;
                coeffs[3 * n + i] = ydiff - h * k7[i] - bspl;
                coeffs[4 * n + i] = h
                    * (T::lit(D1) * k1[i]
                        + T::lit(D3) * k3[i]
                        + T::lit(D4) * k4[i]
                        + T::lit(D5) * k5[i]
                        + T::lit(D6) * k6[i]
                        + T::lit(D7) * k7[i]);
            }

            let before = y1.clone();
            if let Err(reason) = hook.after_step(t_new, &mut y1) {
                traj.push_step(t_new, &y1, &coeffs);
                traj.events.push(Event { kind: EventKind::HookStop, time: t_new, detail: reason });
                return Ok(traj);
            }
            traj.push_step(t_new, &y1, &coeffs);
            if y1 != before {
                field(t_new, &y1, &mut k7);
                traj.evaluations += 1;
            }
            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut y1);
            t = t_new;
            steps += 1;

            if last {
                break;
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new.min(h_max);
            last_rejected = false;
        } else {
            let h_new = h / facc1.min(fac11 / safe);
            traj.rejected_steps += 1;
            last_rejected = true;
            h = h_new;
        }
    }
    Ok(traj)
}

fn initial_step<T, F>(
    field: &mut F,
    t0: T,
    y0: &[T],
    f0: &[T],
    opts: &SolveOptions<T>,
    h_max: T,
    evals: &mut usize,
) -> T
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    let n = y0.len();
    let sk: Vec<T> = y0
        .iter()
        .map(|v| {
            let s = opts.atol + opts.rtol * v.abs();
            if s == T::zero() {
                T::min_positive_value()
            } else {
                s
            }
        })
        .collect();
    let d0 = weighted_rms(y0, &sk);
    let d1 = weighted_rms(f0, &sk);
    let mut h0 = if d0 <= T::lit(1e-10) || d1 <= T::lit(1e-10) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h0 = h0.min(h_max);
    let y1: Vec<T> = (0..n).map(|i| y0[i] + h0 * f0[i]).collect();
    let mut f1 = vec![T::zero(); n];
    field(t0 + h0, &y1, &mut f1);
    *evals += 1;
    let diff: Vec<T> = (0..n).map(|i| f1[i] - f0[i]).collect();
    let d2 = weighted_rms(&diff, &sk) / h0;
    let dm = d1.max(d2);
    let h1 = if !dm.is_finite() {
        h0 * T::lit(1e-3)
    } else if dm <= T::lit(1e-15) {
        T::lit(1e-6).max(h0 * T::lit(1e-3))
    } else {
        (T::lit(0.01) / dm).powf(T::lit(0.2))
    };
    (h0 * T::lit(100.0)).min(h1).min(h_max)
}
