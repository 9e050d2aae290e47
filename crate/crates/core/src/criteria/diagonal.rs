//! Criteria for `B = diag(b1, b2)`.

use std::sync::Arc;

use super::{
    certify, coef_fn, record_rule, sample_coeffs, scalar_run, series, AnalysisOptions, Criterion, ReportBuilder,
    ScalarSystem, Witness,
};
use crate::coefsys::{tol_pos, Coeffs, Scenario, Tag};
use crate::riccati::{chi_diag, diag_source, Envelope, Kernel, RealFn};

fn b_entry(co: &Coeffs, j: usize) -> f64 {
    if j == 1 {
        co.b.e11.re
    } else {
        co.b.e22.re
    }
}

/// First sample where some `b_j` vanishes while a coupling entry of `A` does not.
fn live_coupling(samples: &[(f64, Coeffs)]) -> Option<f64> {
    samples.iter().find_map(|(t, co)| {
        let tb = tol_pos(&co.b);
        let ta = 1e-9 * (1.0 + co.a.norm());
        let zero_b = co.b.e11.re.abs() <= tb || co.b.e22.re.abs() <= tb;
        (zero_b && (co.a.e12.norm() > ta || co.a.e21.norm() > ta)).then_some(*t)
    })
}

fn two_re_a(s: &Scenario, j: usize) -> RealFn {
    coef_fn(s, move |co| 2.0 * if j == 1 { co.a.e11.re } else { co.a.e22.re })
}

/// Common prefix: validation, diagonal `B` and the coefficient samples.
fn diagonal_setup(
    b: &mut ReportBuilder,
    s: &Scenario,
    window: (f64, f64),
    opts: &AnalysisOptions,
) -> Option<(Scenario, Vec<(f64, Coeffs)>)> {
    let s = b.validated(s, opts)?;
    if !b.require_tag(&s, Tag::BDiagonal) {
        return None;
    }
    match sample_coeffs(&s, window, opts.hypothesis_samples) {
        Ok(samples) => Some((s, samples)),
        Err(e) => {
            b.hyp("coefficients valid", false, e.to_string());
            None
        }
    }
}

fn coupling_hypothesis(b: &mut ReportBuilder, samples: &[(f64, Coeffs)]) -> bool {
    let live = live_coupling(samples);
    b.hyp(
        "couplings vanish where b_j = 0",
        live.is_none(),
        live.map_or(String::new(), |t| format!("a12 or a21 nonzero where some b_j = 0, t = {t}")),
    )
}

/// Oscillation through either scalar equation
/// `(exp(-int 2 Re a_jj) u' / b_j)' + chi_j exp(-int 2 Re a_jj) u = 0`,
/// written as the system `phi' = 2 Re a_jj phi + b_j psi`, `psi' = -chi_j phi`.
/// Needs `b1, b2 >= 0`.
pub fn diagonal_oscillation(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> super::CriterionReport {
    let mut b = ReportBuilder::new(Criterion::DiagonalOscillation, window);
    let Some((s, samples)) = diagonal_setup(&mut b, s, window, opts) else { return b.inconclusive() };
    let negative = samples.iter().find(|(_, co)| (1..=2).any(|j| b_entry(co, j) < -tol_pos(&co.b)));
    let nonneg = b.hyp(
        "b1, b2 >= 0",
        negative.is_none(),
        negative.map_or(String::new(), |(t, _)| format!("negative b_j at t = {t}")),
    );
    if !nonneg || !coupling_hypothesis(&mut b, &samples) {
        return b.inconclusive();
    }
    record_rule(&mut b, opts);
    let mut fired = false;
    for j in 1..=2 {
        let chi = match chi_diag(&s, j, opts.paper_literal_chi) {
            Ok(c) => c,
            Err(e) => {
                b.note(e.to_string());
                continue;
            }
        };
        b.witness(format!("chi{j}"), series(window, opts.witness_samples, |t| chi.value(t)));
        let chi_fn = chi.as_fn();
        let sys = ScalarSystem {
            f11: two_re_a(&s, j),
            f12: coef_fn(&s, move |co| b_entry(co, j)),
            f21: Arc::new(move |t| -chi_fn(t)),
            f22: Arc::new(|_| 0.0),
        };
        if scalar_run(&mut b, &format!("j{j}"), &sys, window, opts) {
            b.note(format!("scalar equation j = {j} oscillates"));
            fired = true;
        }
    }
    b.finish(fired)
}

/// Non-oscillation when `b1 >= 0 >= b2` (or the reverse) and both kernels
/// `(2 Re a11, +-chi1)`, `(2 Re a22, -+chi2)` satisfy the nonnegativity
/// condition on a partition.
pub fn split_sign_nonoscillation(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> super::CriterionReport {
    let mut b = ReportBuilder::new(Criterion::SplitSign, window);
    let Some((s, samples)) = diagonal_setup(&mut b, s, window, opts) else { return b.inconclusive() };
    let pattern = |sg1: f64| {
        samples.iter().all(|(_, co)| {
            let tol = tol_pos(&co.b);
            sg1 * b_entry(co, 1) >= -tol && -sg1 * b_entry(co, 2) >= -tol
        })
    };
    let sign1 = if pattern(1.0) {
        Some(1.0)
    } else if pattern(-1.0) {
        Some(-1.0)
    } else {
        None
    };
    let split = b.hyp(
        "b1 >= 0 >= b2 or b1 <= 0 <= b2",
        sign1.is_some(),
        if sign1.is_some() { "" } else { "b1 and b2 do not have fixed opposite signs" },
    );
    if !split || !coupling_hypothesis(&mut b, &samples) {
        return b.inconclusive();
    }
    let sign1 = sign1.unwrap();
    b.witness("sign_pattern", Witness::Text {
        value: if sign1 > 0.0 { "b1 >= 0 >= b2" } else { "b1 <= 0 <= b2" }.into(),
    });
    let mut certified = true;
    for (j, sg) in [(1, sign1), (2, -sign1)] {
        let chi = match chi_diag(&s, j, opts.paper_literal_chi) {
            Ok(c) => c.as_fn(),
            Err(e) => {
                b.note(e.to_string());
                return b.inconclusive();
            }
        };
        let h: RealFn = Arc::new(move |t| sg * chi(t));
        b.witness(format!("h{j}"), series(window, opts.witness_samples, |t| h(t)));
        let k = Kernel { g: two_re_a(&s, j), h };
        certified &= certify(&mut b, &format!("j{j}"), &k, window, opts);
    }
    b.finish(certified)
}

/// Non-oscillation for positive diagonal `B` through the envelope functions:
/// kernels `(2 Re a11, chi3)` and `(2 Re a22, chi4)`.
pub fn positive_nonoscillation(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> super::CriterionReport {
    let mut b = ReportBuilder::new(Criterion::PositiveEnvelope, window);
    let Some((s, samples)) = diagonal_setup(&mut b, s, window, opts) else { return b.inconclusive() };
    if !b.require_tag(&s, Tag::BPositive) {
        return b.inconclusive();
    }
    if let Some((_, co)) = samples.first() {
        if co.a.e12.norm() > 0.0 || co.a.e21.norm() > 0.0 {
            b.note("a12(t0) or a21(t0) is nonzero; the envelope starts from z12(t0) = -r2(t0) and -r1(t0)");
        }
    }
    let env = match diag_source(&s).and_then(|src| Envelope::build(src, window, opts.sign_convention, &opts.grid)) {
        Ok(e) => Arc::new(e),
        Err(e) => {
            b.hyp("envelope available", false, e.to_string());
            return b.inconclusive();
        }
    };
    b.witness("sign_convention", Witness::Text { value: opts.sign_convention.label().into() });
    b.witness("frak_m", series(window, opts.witness_samples, |t| env.at(t).map_or(f64::NAN, |v| v.frak_m)));
    let mut certified = true;
    for (j, idx) in [(1, 3), (2, 4)] {
        let h = env.chi_fn(idx);
        b.witness(format!("chi{idx}"), series(window, opts.witness_samples, |t| h(t)));
        let k = Kernel { g: two_re_a(&s, j), h };
        certified &= certify(&mut b, &format!("chi{idx}"), &k, window, opts);
    }
    b.finish(certified)
}
