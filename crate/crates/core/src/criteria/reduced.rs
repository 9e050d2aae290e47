//! Criteria for positive semidefinite `B`, through the reduction to `B = I`.
//!
//! With `S = sqrt(B)`, `M = A S - S'` and `F` solving `S F M = M`, the
//! substitution `Phi = S U` turns the system into one with coefficients
//! `(P, I, Q) = (F M, I, S C S)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    certify, record_rule, scalar_run, series, matrices, AnalysisOptions, CriteriaError, Criterion, CriterionReport,
    ExponentSource, ReportBuilder, ScalarSystem, Witness,
};
use crate::coefsys::{coeff_derivative, sqrt_b, CoefError, Coeffs, FOverride, Scenario, Tag, Which};
use crate::riccati::{chi_diag, diag_source, uniform_grid, Envelope, Kernel, RealFn};
use crate::{Cx, Mat2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPoint {
    pub sqrt_b: Mat2,
    pub m: Mat2,
    pub f: Mat2,
    /// `|S F M - M|`.
    pub residual: f64,
    pub p: Mat2,
    pub q: Mat2,
    /// Asymmetry of `S C S` removed by symmetrisation.
    pub q_defect: f64,
}

/// Residual of one grid sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub t: f64,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Clone)]
pub struct PsdReduction {
    scenario: Scenario,
    f_override: Option<FOverride>,
    pub window: (f64, f64),
    pub samples: Vec<ResidualSample>,
}

/// The reduction at one time, without the residual check.
pub fn reduce_point(s: &Scenario, f_override: Option<&FOverride>, t: f64) -> Result<ReducedPoint, CoefError> {
    let co = s.eval(t)?;
    let root = sqrt_b(s, t)?;
    let droot = coeff_derivative(s, Which::SqrtB, t)?;
    let m = co.a * root - droot;
    let f = match f_override {
        Some(o) => (o.f)(t),
        // solve_sandwich returns S^-1 for invertible S; skip its QR then
        None => root.inv().unwrap_or_else(|_| Mat2::solve_sandwich(&root, &m).f),
    };
    let residual = (root * f * m - m).norm();
    let scs = root * co.c * root;
    let q_defect = (scs - scs.adjoint()).max_abs();
    Ok(ReducedPoint { sqrt_b: root, m, f, residual, p: f * m, q: scs.hermitian_part(), q_defect })
}

fn residual_bound(m: &Mat2) -> f64 {
    1e-8 * (1.0 + m.norm())
}

/// Builds the reduction on `window`, checking the sandwich residual on a
/// uniform grid of `n` cells. Needs the `B_psd` tag.
pub fn psd_reduce(
    s: &Scenario,
    window: (f64, f64),
    f_override: Option<&FOverride>,
    n: usize,
) -> Result<PsdReduction, CriteriaError> {
    if !s.has_tag(Tag::BPsd) {
        return Err(CriteriaError::MissingTag(Tag::BPsd));
    }
    let mut samples = Vec::with_capacity(n + 1);
    for t in uniform_grid(window, n) {
        let pt = reduce_point(s, f_override, t)?;
        let bound = residual_bound(&pt.m);
        if pt.residual > bound {
            return Err(CriteriaError::ResidualTooLarge { t, residual: pt.residual, bound });
        }
        samples.push(ResidualSample { t, residual: pt.residual, bound });
    }
    Ok(PsdReduction { scenario: s.clone(), f_override: f_override.cloned(), window, samples })
}

impl PsdReduction {
    pub fn at(&self, t: f64) -> Result<ReducedPoint, CoefError> {
        reduce_point(&self.scenario, self.f_override.as_ref(), t)
    }

    /// Which `F` is in use.
    pub fn f_label(&self) -> &str {
        self.f_override.as_ref().map_or("minimum_norm", |o| o.label.as_str())
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.residual))
    }

    /// The scenario `(P, I, Q)`; non-finite where the reduction fails.
    pub fn reduced_scenario(&self) -> Scenario {
        let me = self.clone();
        let nan = Mat2::identity().scale(f64::NAN);
        let mut red = Scenario::from_fn(format!("{}_reduced", self.scenario.name), self.scenario.t0, move |t| {
            match me.at(t) {
                Ok(pt) => Coeffs { a: pt.p, b: Mat2::identity(), c: pt.q },
                Err(_) => Coeffs { a: nan, b: Mat2::identity(), c: nan },
            }
        });
        red.t_end = self.scenario.t_end;
        red
    }
}

/// Time of the first grid point where `f` looks non-smooth: the second
/// difference at spacing `h / 2` keeps more than 0.4 of the one at spacing
/// `h` (a smooth function keeps about a quarter) and the latter is not
/// negligible.
fn roughness(f: impl Fn(f64) -> Result<Cx, CoefError>, window: (f64, f64), n: usize) -> Result<Option<f64>, CoefError> {
    let ts = uniform_grid(window, n);
    let h = (window.1 - window.0) / n as f64;
    let vals: Vec<Cx> = ts.iter().map(|&t| f(t)).collect::<Result<_, _>>()?;
    let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    for k in 1..n {
        let t = ts[k];
        let full = (vals[k + 1] - vals[k] * 2.0 + vals[k - 1]).norm();
        let half = (f(t + 0.5 * h)? - vals[k] * 2.0 + f(t - 0.5 * h)?).norm();
        if full > 1e-3 * scale && half > 0.4 * full {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Validation, `B_psd` and the reduction; `None` after recording the failed hypothesis.
fn reduced_setup(
    b: &mut ReportBuilder,
    s: &Scenario,
    window: (f64, f64),
    opts: &AnalysisOptions,
) -> Option<(PsdReduction, Scenario)> {
    let s = b.validated(s, opts)?;
    if !b.require_tag(&s, Tag::BPsd) {
        return None;
    }
    let over = if opts.use_f_override { s.f_override.as_ref() } else { None };
    let red = match psd_reduce(&s, window, over, opts.hypothesis_samples) {
        Ok(r) => r,
        Err(e) => {
            b.witness("F", Witness::Text { value: over.map_or("minimum_norm", |o| o.label.as_str()).into() });
            b.hyp("sandwich equation solved", false, e.to_string());
            return None;
        }
    };
    b.hyp("sandwich equation solved", true, format!("max residual {:e}", red.max_residual()));
    b.witness("F", Witness::Text { value: red.f_label().into() });
    let n = opts.witness_samples;
    b.witness("P", matrices(window, n, |t| red.at(t).ok().map(|p| p.p)));
    b.witness("Q", matrices(window, n, |t| red.at(t).ok().map(|p| p.q)));
    b.witness("F_values", matrices(window, n, |t| red.at(t).ok().map(|p| p.f)));
    b.witness("residual", Witness::Series {
        t: red.samples.iter().map(|s| s.t).collect(),
        values: red.samples.iter().map(|s| s.residual).collect(),
    });
    match red.reduced_scenario().validated(window, opts.hypothesis_samples) {
        Ok(rs) => Some((red, rs)),
        Err(e) => {
            b.hyp("reduced coefficients valid", false, e.to_string());
            None
        }
    }
}

/// Oscillation through either scalar equation
/// `u'' + 2 Re p_jj u' + chi~_j u = 0` of the reduced system.
pub fn reduced_oscillation(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> CriterionReport {
    let mut b = ReportBuilder::new(Criterion::ReducedOscillation, window);
    let Some((_, rs)) = reduced_setup(&mut b, s, window, opts) else { return b.inconclusive() };
    record_rule(&mut b, opts);
    let mut fired = false;
    for j in 1..=2 {
        let chi = match chi_diag(&rs, j, opts.paper_literal_chi) {
            Ok(c) => c,
            Err(e) => {
                b.note(e.to_string());
                continue;
            }
        };
        b.witness(format!("chi_tilde{j}"), series(window, opts.witness_samples, |t| chi.value(t)));
        let chi_fn = chi.as_fn();
        let sys = ScalarSystem {
            f11: Arc::new(|_| 0.0),
            f12: Arc::new(|_| 1.0),
            f21: Arc::new(move |t| -chi_fn(t)),
            f22: two_re_diag(&rs, j, -2.0),
        };
        if scalar_run(&mut b, &format!("j{j}"), &sys, window, opts) {
            b.note(format!("reduced scalar equation j = {j} oscillates"));
            fired = true;
        }
    }
    b.finish(fired)
}

/// `factor * Re` of the `j`-th diagonal entry of the scenario's `A`.
fn two_re_diag(s: &Scenario, j: usize, factor: f64) -> RealFn {
    super::coef_fn(s, move |co| factor * if j == 1 { co.a.e11.re } else { co.a.e22.re })
}

/// Non-oscillation through the envelope of the reduced system: kernels
/// `(2 Re p11, chi~3)` and `(2 Re p22, chi~4)`, with `2 Re a_jj` as the
/// weight when `exponent_source = a`.
pub fn reduced_nonoscillation(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> CriterionReport {
    let mut b = ReportBuilder::new(Criterion::ReducedEnvelope, window);
    let Some((red, rs)) = reduced_setup(&mut b, s, window, opts) else { return b.inconclusive() };
    let n = opts.grid.samples;
    for (name, pick) in [("p12", 0usize), ("p21", 1usize)] {
        let entry = |t: f64| red.at(t).map(|p| if pick == 0 { p.p.e12 } else { p.p.e21 });
        match roughness(entry, window, n) {
            Ok(None) => {
                b.hyp(&format!("{name} continuously differentiable"), true, "smoothness heuristic passed");
            }
            Ok(Some(t)) => {
                b.hyp(&format!("{name} continuously differentiable"), false, format!("looks non-smooth near t = {t}"));
            }
            Err(e) => {
                b.hyp(&format!("{name} continuously differentiable"), false, e.to_string());
            }
        }
    }
    if b.any_failed() {
        return b.inconclusive();
    }
    let env = match diag_source(&rs).and_then(|src| Envelope::build(src, window, opts.sign_convention, &opts.grid)) {
        Ok(e) => Arc::new(e),
        Err(e) => {
            b.hyp("envelope available", false, e.to_string());
            return b.inconclusive();
        }
    };
    let weights_from = match opts.exponent_source {
        ExponentSource::P => &rs,
        ExponentSource::A => &red.scenario,
    };
    b.witness("sign_convention", Witness::Text { value: opts.sign_convention.label().into() });
    b.witness("exponent_source", Witness::Text {
        value: match opts.exponent_source {
            ExponentSource::P => "p",
            ExponentSource::A => "a",
        }
        .into(),
    });
    b.witness("frak_m", series(window, opts.witness_samples, |t| env.at(t).map_or(f64::NAN, |v| v.frak_m)));
    let mut certified = true;
    for (j, idx) in [(1, 3), (2, 4)] {
        let h = env.chi_fn(idx);
        b.witness(format!("chi_tilde{idx}"), series(window, opts.witness_samples, |t| h(t)));
        let k = Kernel { g: two_re_diag(weights_from, j, 2.0), h };
        certified &= certify(&mut b, &format!("chi_tilde{idx}"), &k, window, opts);
    }
    b.finish(certified)
}
