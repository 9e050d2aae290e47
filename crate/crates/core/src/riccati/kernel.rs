//! Kernels `(g, h)` of scalar Riccati equations `y' + f y^2 + g y + h = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_window, uniform_grid, GridOptions, RiccatiError};
use crate::odeint::{
    adaptive_solve, solve_scalar_riccati, solve_with_hook, EscapeWhen, IntegratorTol, OdeError,
    OdeintError, Trajectory, Y_MAX,
};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficients `g` and `h` of a scalar Riccati equation; `f >= 0` is implied.
#[derive(Clone)]
pub struct Kernel {
    pub g: RealFn,
    pub h: RealFn,
}

impl Kernel {
    pub fn new<G, H>(g: G, h: H) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { g: Arc::new(g), h: Arc::new(h) }
    }
}

fn ode_err(e: OdeError<f64>) -> RiccatiError {
    RiccatiError::Odeint(OdeintError::Ode(e))
}

/// `I_{g,h}(t; xi) = int_xi^t exp(-int_s^t g) h(s) ds`, the solution of
/// `I' = h - g I`, `I(xi) = 0`.
pub fn weighted_integral(k: &Kernel, xi: f64, t: f64, tol: IntegratorTol) -> Result<f64, RiccatiError> {
    if t == xi {
        return Ok(0.0);
    }
    check_window((xi, t))?;
    let (g, h) = (&k.g, &k.h);
    let traj = adaptive_solve(|s, y: &[f64], dy: &mut [f64]| dy[0] = h(s) - g(s) * y[0], &[0.0], (xi, t), &tol.options())
        .map_err(ode_err)?;
    Ok(traj.last_state()[0])
}

// State (I, J, K) started at xi:
//   I' = h - g I,  J' = h - (g - I) J,  K' = |h| - (g - I) K.
// J is the integral int_xi^t exp(int_xi^s (g - I)) h ds times the positive
// factor exp(-int_xi^t (g - I)), so the two share a sign. K is the same
// integral of |h| and sets the scale of the tolerance.
const OVERFLOW: f64 = 1e250;

struct ConditionRun {
    traj: Trajectory<f64>,
    /// Last time the state is trusted; short of the target on overflow.
    reached: f64,
}

fn condition_run(k: &Kernel, xi: f64, end: f64, tol: IntegratorTol) -> Result<ConditionRun, RiccatiError> {
    let (g, h) = (&k.g, &k.h);
    let field = |s: f64, y: &[f64], dy: &mut [f64]| {
        let (gs, hs) = (g(s), h(s));
        let w = gs - y[0];
        dy[0] = hs - gs * y[0];
        dy[1] = hs - w * y[1];
        dy[2] = hs.abs() - w * y[2];
    };
    let mut hook = EscapeWhen(|_t: f64, y: &[f64]| {
        if y.iter().any(|v| !v.is_finite() || v.abs() > OVERFLOW) {
            Some("condition state overflow".to_string())
        } else if !conforming(y) {
            // nothing past the first failure is used
            Some("condition fails".to_string())
        } else {
            None
        }
    });
    match solve_with_hook(field, &[0.0; 3], (xi, end), &tol.options(), &mut hook) {
        Ok(traj) => {
            let reached = if traj.events.is_empty() { end } else { traj.t_last() };
            Ok(ConditionRun { traj, reached })
        }
        Err(OdeError::StepUnderflow { partial, .. }) | Err(OdeError::MaxSteps { partial, .. }) => {
            let reached = partial.t_last();
            Ok(ConditionRun { traj: *partial, reached })
        }
        Err(e) => Err(ode_err(e)),
    }
}

fn conforming(y: &[f64]) -> bool {
    y[1] <= 1e-10 * (1.0 + y[2])
}

impl ConditionRun {
    fn holds_at(&self, t: f64, buf: &mut [f64; 3]) -> bool {
        t <= self.reached && self.traj.dense_into(t, buf) && conforming(buf)
    }

    /// First time in `ts` (sorted) or among the nodes where the condition fails.
    fn first_failure(&self, ts: &[f64]) -> Option<f64> {
        let mut buf = [0.0; 3];
        let grid_fail = ts.iter().copied().find(|&t| !self.holds_at(t, &mut buf));
        let node_fail = (0..self.traj.len())
            .find(|&i| !conforming(self.traj.state(i)))
            .map(|i| self.traj.times()[i]);
        match (grid_fail, node_fail) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Partition `t0 = points[0] < points[1] < ...` of `[t0, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub points: Vec<f64>,
    pub end: f64,
}

impl Partition {
    pub fn single(window: (f64, f64)) -> Self {
        Self { points: vec![window.0], end: window.1 }
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().enumerate().map(|(i, &a)| (a, self.points.get(i + 1).copied().unwrap_or(self.end)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegativityOutcome {
    pub holds: bool,
    /// Subinterval index and time of the first failure.
    pub first_violation: Option<(usize, f64)>,
    pub evaluations: usize,
}

/// Checks `int_{t_k}^t exp(int_{t_k}^s (g - I_{g,h}(.; t_k))) h(s) ds <= 0`
/// on every subinterval of `part`, at `per_interval` equally spaced points
/// plus the endpoints and every integrator node.
pub fn nonnegativity_check(
    k: &Kernel,
    part: &Partition,
    per_interval: usize,
    tol: IntegratorTol,
) -> Result<NonnegativityOutcome, RiccatiError> {
    check_window((part.points[0], part.end))?;
    if part.points.windows(2).any(|w| !(w[1] > w[0])) || *part.points.last().unwrap() >= part.end {
        return Err(RiccatiError::InvalidWindow(part.points[0], part.end));
    }
    let mut evaluations = 0;
    for (i, (a, b)) in part.intervals().enumerate() {
        let run = condition_run(k, a, b, tol)?;
        let ts = uniform_grid((a, b), per_interval.max(1));
        evaluations += ts.len() + run.traj.len();
        if let Some(t) = run.first_failure(&ts) {
            return Ok(NonnegativityOutcome { holds: false, first_violation: Some((i, t)), evaluations });
        }
    }
    Ok(NonnegativityOutcome { holds: true, first_violation: None, evaluations })
}

/// Whether `h <= 0` at every point of a uniform grid over `window`.
pub fn sign_definite(h: &RealFn, window: (f64, f64), n: usize) -> bool {
    let ts = uniform_grid(window, n);
    let vals: Vec<f64> = ts.iter().map(|&t| h(t)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    vals.iter().all(|&v| v.is_finite() && v <= 1e-12 * (1.0 + scale))
}

// Restart positions tried across the last run of `h <= 0` grid points.
const CANDIDATES: usize = 8;

/// Greedy search for a partition on which the nonnegativity condition holds.
///
/// From the current point the condition is integrated forward on a uniform
/// grid of `grid.samples` cells up to its first failure. Grid points
/// before the failure with `h <= 0` are candidates for the next point, spread
/// evenly over the last run of such points. A late restart leaves little
/// negative mass in front of the next positive stretch of `h`, an early one
/// lets the growing weight amplify that stretch, so the candidate whose own
/// run reaches farthest wins (ties go to the latest). Advances shorter than
/// `(T - t0) / max_points` abort the search. The result is re-checked with
/// [`nonnegativity_check`] before it is returned.
pub fn partition_search(
    k: &Kernel,
    window: (f64, f64),
    max_points: usize,
    grid: &GridOptions,
) -> Result<Partition, RiccatiError> {
    check_window(window)?;
    let ts = uniform_grid(window, grid.samples);
    let min_advance = (window.1 - window.0) / max_points.max(1) as f64;
    let reach = |at: usize| -> Result<Option<f64>, RiccatiError> {
        Ok(condition_run(k, ts[at], window.1, grid.tol)?.first_failure(&ts[at..]))
    };
    let mut points = vec![window.0];
    let mut at = 0usize;
    let mut fail = reach(0)?;
    while let Some(f) = fail {
        let xi = ts[at];
        let stall = |points: Vec<f64>| RiccatiError::PartitionNotFound { stalled_at: xi, points };
        let usable: Vec<usize> = (at + 1..ts.len())
            .take_while(|&j| ts[j] < f)
            .filter(|&j| (k.h)(ts[j]) <= 0.0 && ts[j] - xi >= min_advance)
            .collect();
        let Some(&latest) = usable.last() else { return Err(stall(points)) };
        let mut run_start = latest;
        while usable.contains(&(run_start.wrapping_sub(1))) {
            run_start -= 1;
        }
        if points.len() >= max_points {
            return Err(stall(points));
        }
        let span = latest - run_start;
        let mut candidates: Vec<usize> = (0..=CANDIDATES).map(|i| run_start + span * i / CANDIDATES).collect();
        candidates.dedup();
        let key = |r: Option<f64>| r.unwrap_or(f64::INFINITY);
        let mut best = (latest, reach(latest)?);
        for &c in candidates.iter().rev().skip(1) {
            let r = reach(c)?;
            if key(r) > key(best.1) {
                best = (c, r);
            }
        }
        let (next, next_fail) = best;
        points.push(ts[next]);
        at = next;
        fail = next_fail;
    }
    let part = Partition { points, end: window.1 };
    let check = nonnegativity_check(k, &part, grid.per_interval, grid.tol)?;
    if let Some((_, t)) = check.first_violation {
        return Err(RiccatiError::PartitionNotFound { stalled_at: t, points: part.points });
    }
    Ok(part)
}

/// Compares `y' + f y^2 + g y + h = 0` with the same equation driven by
/// `h1 >= h`. Returns whether `y` exists wherever `y1` does and stays above
/// it there, after checking `f >= 0`, `h <= h1` and `y(t0) >= y1(t0)` on a
/// 256-point grid.
#[allow(clippy::too_many_arguments)]
pub fn comparison_oracle<F, G, H, H1>(
    f: F,
    g: G,
    h: H,
    h1: H1,
    y1_0: f64,
    y_0: f64,
    window: (f64, f64),
    tol: IntegratorTol,
) -> Result<bool, RiccatiError>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
    H1: Fn(f64) -> f64,
{
    check_window(window)?;
    let ts = uniform_grid(window, 256);
    for &t in &ts {
        let ft = f(t);
        if ft < -1e-12 * (1.0 + ft.abs()) {
            return Err(RiccatiError::HypothesisViolated { which: "f >= 0".into(), t });
        }
        let (ht, h1t) = (h(t), h1(t));
        if ht > h1t + 1e-12 * (1.0 + h1t.abs()) {
            return Err(RiccatiError::HypothesisViolated { which: "h <= h1".into(), t });
        }
    }
    if y_0 < y1_0 - 1e-12 * (1.0 + y1_0.abs()) {
        return Err(RiccatiError::HypothesisViolated { which: "y(t0) >= y1(t0)".into(), t: window.0 });
    }
    let low = solve_scalar_riccati(&f, &g, &h1, y1_0, window, Y_MAX, tol)?;
    let high = solve_scalar_riccati(&f, &g, &h, y_0, window, Y_MAX, tol)?;
    let t_low = low.blowup.map_or(window.1, |b| b.escape_time);
    let t_high = high.blowup.map_or(window.1, |b| b.escape_time);
    if t_high < t_low - 1e-6 * (1.0 + t_low.abs()) {
        return Ok(false);
    }
    let until = t_low.min(t_high);
    let mut probe: Vec<f64> = ts.iter().copied().filter(|&t| t <= until).collect();
    probe.extend(low.traj.times().iter().copied().filter(|&t| t <= until));
    for t in probe {
        let (Some(a), Some(b)) = (high.traj.dense_eval(t), low.traj.dense_eval(t)) else { continue };
        if a[0] < b[0] - 1e-6 * (1.0 + b[0].abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}
