//! Verdict engines for the 4D system and their cross-check by simulation.
//!
//! Five criteria run on every scenario, each one-directional:
//!
//! | label    | function                     | can conclude    |
//! |----------|------------------------------|-----------------|
//! | `3.1`    | [`diagonal_oscillation`]     | oscillatory     |
//! | `3.2`    | [`split_sign_nonoscillation`]| non-oscillatory |
//! | `3.3`    | [`positive_nonoscillation`]  | non-oscillatory |
//! | `cor3.1` | [`reduced_oscillation`]      | oscillatory     |
//! | `3.4`    | [`reduced_nonoscillation`]   | non-oscillatory |
//!
//! A failed hypothesis or an uncertified condition yields `Inconclusive`
//! from that criterion; [`analyze`] keeps the first definite verdict and
//! refuses contradictory ones.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefsys::{CoefError, Coeffs, Scenario, Tag};
use crate::odeint::OdeintError;
use crate::riccati::{
    partition_search, sign_definite, uniform_grid, C12Sign, GridOptions, Kernel, RealFn, RiccatiError,
};
use crate::Mat2;

mod diagonal;
mod reduced;
mod scalar;
mod simulate;

pub use diagonal::{diagonal_oscillation, positive_nonoscillation, split_sign_nonoscillation};
pub use reduced::{
    psd_reduce, reduce_point, reduced_nonoscillation, reduced_oscillation, PsdReduction, ReducedPoint, ResidualSample,
};
pub use scalar::{recurrent, scalar_oscillation, zero_free_after, ScalarOutcome, ScalarSystem, ScalarVerdict};
pub use simulate::{
    conjoined_starts, cross_validate, simulate, Agreement, CrossValidation, SimVerdict, Simulation, StartOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Oscillatory,
    NonOscillatory,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Label of the criterion that produced the verdict; empty for an
    /// inconclusive aggregate.
    pub theorem: String,
    pub window: [f64; 2],
    pub notes: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "3.1")]
    DiagonalOscillation,
    #[serde(rename = "3.2")]
    SplitSign,
    #[serde(rename = "3.3")]
    PositiveEnvelope,
    #[serde(rename = "cor3.1")]
    ReducedOscillation,
    #[serde(rename = "3.4")]
    ReducedEnvelope,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::DiagonalOscillation,
        Criterion::SplitSign,
        Criterion::PositiveEnvelope,
        Criterion::ReducedOscillation,
        Criterion::ReducedEnvelope,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::DiagonalOscillation => "3.1",
            Criterion::SplitSign => "3.2",
            Criterion::PositiveEnvelope => "3.3",
            Criterion::ReducedOscillation => "cor3.1",
            Criterion::ReducedEnvelope => "3.4",
        }
    }

    /// The only definite verdict the criterion can give.
    pub fn direction(self) -> VerdictKind {
        match self {
            Criterion::DiagonalOscillation | Criterion::ReducedOscillation => VerdictKind::Oscillatory,
            _ => VerdictKind::NonOscillatory,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub held: bool,
    pub detail: String,
}

/// Evidence attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Series { t: Vec<f64>, values: Vec<f64> },
    /// Zero lists, partitions, escape times.
    Times { values: Vec<f64> },
    /// Matrices flattened row-major as `[re, im]` pairs.
    Matrices { t: Vec<f64>, values: Vec<[f64; 8]> },
    Scalar { value: f64 },
    Text { value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub verdict: Verdict,
    pub witnesses: BTreeMap<String, Witness>,
    pub applicability: Vec<Hypothesis>,
}

/// Which diagonal entry weights the condition integrals of the reduced system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentSource {
    /// `2 Re a_jj` of the original system.
    A,
    /// `2 Re p_jj` of the reduced system.
    #[default]
    P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub n_min: usize,
    /// Fraction of the window ignored when declaring a solution zero-free.
    pub burn_in: f64,
    pub max_points: usize,
    pub sign_convention: C12Sign,
    pub exponent_source: ExponentSource,
    pub paper_literal_chi: bool,
    /// Use the scenario's F override (if any) in the reduction.
    pub use_f_override: bool,
    pub grid: GridOptions,
    /// Grid for hypothesis checks.
    pub hypothesis_samples: usize,
    /// Grid for witness series.
    pub witness_samples: usize,
    pub eps_zero: f64,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            n_min: 5,
            burn_in: 0.1,
            max_points: 64,
            sign_convention: C12Sign::Plus,
            exponent_source: ExponentSource::P,
            paper_literal_chi: false,
            use_f_override: true,
            grid: GridOptions::default(),
            hypothesis_samples: 256,
            witness_samples: 64,
            eps_zero: 1e-7,
            n_starts: 5,
            seed: 42,
        }
    }
}

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("scenario validation failed: {0}")]
    Validation(#[from] CoefError),
    #[error("criteria disagree: {}", summary(.reports))]
    CriteriaConflict { reports: Vec<CriterionReport> },
    #[error(transparent)]
    Odeint(#[from] OdeintError),
    #[error("sandwich residual {residual:e} exceeds {bound:e} at t = {t}")]
    ResidualTooLarge { t: f64, residual: f64, bound: f64 },
    #[error("scenario lacks the `{0}` property on the window")]
    MissingTag(Tag),
}

fn summary(reports: &[CriterionReport]) -> String {
    reports
        .iter()
        .filter(|r| r.verdict.kind != VerdictKind::Inconclusive)
        .map(|r| format!("{} says {:?}", r.criterion.label(), r.verdict.kind))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Reports of every criterion plus the aggregate verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub overall: Verdict,
    pub reports: Vec<CriterionReport>,
}

/// Runs every criterion (concurrently, reported in fixed order). The overall
/// verdict is the first definite one; opposite definite verdicts are a
/// [`CriteriaError::CriteriaConflict`].
pub fn analyze(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> Result<Analysis, CriteriaError> {
    let s = s.clone().validated(window, opts.hypothesis_samples)?;
    let reports: Vec<CriterionReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = Criterion::ALL
            .iter()
            .map(|&c| {
                let s = &s;
                scope.spawn(move || run_criterion(c, s, window, opts))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread panicked")).collect()
    });
    let definite: Vec<&CriterionReport> =
        reports.iter().filter(|r| r.verdict.kind != VerdictKind::Inconclusive).collect();
    if definite.iter().any(|r| r.verdict.kind != definite[0].verdict.kind) {
        return Err(CriteriaError::CriteriaConflict { reports });
    }
    let overall = match definite.first() {
        Some(r) => r.verdict.clone(),
        None => Verdict {
            kind: VerdictKind::Inconclusive,
            theorem: String::new(),
            window: [window.0, window.1],
            notes: "no criterion applies or certifies on this window".into(),
        },
    };
    Ok(Analysis { overall, reports })
}

pub fn run_criterion(c: Criterion, s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> CriterionReport {
    match c {
        Criterion::DiagonalOscillation => diagonal_oscillation(s, window, opts),
        Criterion::SplitSign => split_sign_nonoscillation(s, window, opts),
        Criterion::PositiveEnvelope => positive_nonoscillation(s, window, opts),
        Criterion::ReducedOscillation => reduced_oscillation(s, window, opts),
        Criterion::ReducedEnvelope => reduced_nonoscillation(s, window, opts),
    }
}

/// Collects hypotheses, witnesses and notes of one criterion run.
pub(crate) struct ReportBuilder {
    criterion: Criterion,
    window: (f64, f64),
    hyps: Vec<Hypothesis>,
    witnesses: BTreeMap<String, Witness>,
    notes: Vec<String>,
}

impl ReportBuilder {
    pub(crate) fn new(criterion: Criterion, window: (f64, f64)) -> Self {
        Self { criterion, window, hyps: Vec::new(), witnesses: BTreeMap::new(), notes: Vec::new() }
    }

    /// Records a hypothesis and returns whether it held.
    pub(crate) fn hyp(&mut self, name: &str, held: bool, detail: impl Into<String>) -> bool {
        self.hyps.push(Hypothesis { name: name.into(), held, detail: detail.into() });
        held
    }

    pub(crate) fn witness(&mut self, key: impl Into<String>, w: Witness) {
        self.witnesses.insert(key.into(), w);
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Validates `s` on the window; a failure is recorded as a hypothesis.
    pub(crate) fn validated(&mut self, s: &Scenario, opts: &AnalysisOptions) -> Option<Scenario> {
        match s.clone().validated(self.window, opts.hypothesis_samples) {
            Ok(s) => {
                self.hyp("coefficients valid", true, "");
                Some(s)
            }
            Err(e) => {
                self.hyp("coefficients valid", false, e.to_string());
                None
            }
        }
    }

    pub(crate) fn require_tag(&mut self, s: &Scenario, tag: Tag) -> bool {
        let held = s.has_tag(tag);
        self.hyp(&tag.to_string(), held, if held { "" } else { "not satisfied on the sampled window" })
    }

    pub(crate) fn any_failed(&self) -> bool {
        self.hyps.iter().any(|h| !h.held)
    }

    /// Finishes with the criterion's direction when `decided`, else `Inconclusive`.
    pub(crate) fn finish(self, decided: bool) -> CriterionReport {
        let all_held = self.hyps.iter().all(|h| h.held);
        let kind = if decided && all_held { self.criterion.direction() } else { VerdictKind::Inconclusive };
        let mut notes = self.notes;
        if let Some(h) = self.hyps.iter().find(|h| !h.held) {
            notes.insert(0, format!("hypothesis `{}` fails: {}", h.name, h.detail));
        }
        CriterionReport {
            criterion: self.criterion,
            verdict: Verdict {
                kind,
                theorem: self.criterion.label().to_string(),
                window: [self.window.0, self.window.1],
                notes: notes.join("; "),
            },
            witnesses: self.witnesses,
            applicability: self.hyps,
        }
    }

    pub(crate) fn inconclusive(self) -> CriterionReport {
        self.finish(false)
    }
}

/// Coefficients on a uniform grid of `n` cells.
pub(crate) fn sample_coeffs(s: &Scenario, window: (f64, f64), n: usize) -> Result<Vec<(f64, Coeffs)>, CoefError> {
    uniform_grid(window, n).into_iter().map(|t| s.eval(t).map(|co| (t, co))).collect()
}

/// A real function of the coefficients; NaN where they cannot be evaluated.
pub(crate) fn coef_fn(s: &Scenario, f: impl Fn(&Coeffs) -> f64 + Send + Sync + 'static) -> RealFn {
    let s = s.clone();
    Arc::new(move |t| s.eval(t).map_or(f64::NAN, |co| f(&co)))
}

pub(crate) fn series(window: (f64, f64), n: usize, f: impl Fn(f64) -> f64) -> Witness {
    let t = uniform_grid(window, n);
    let values = t.iter().map(|&x| f(x)).collect();
    Witness::Series { t, values }
}

pub(crate) fn matrices(window: (f64, f64), n: usize, f: impl Fn(f64) -> Option<Mat2>) -> Witness {
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for t in uniform_grid(window, n) {
        if let Some(m) = f(t) {
            ts.push(t);
            values.push(m.to_flat());
        }
    }
    Witness::Matrices { t: ts, values }
}

/// Certifies the nonnegativity condition for one kernel: directly when
/// `h <= 0` on the grid, otherwise through a partition search. Partitions
/// and stall points go into the witnesses under `key`.
pub(crate) fn certify(b: &mut ReportBuilder, key: &str, k: &Kernel, window: (f64, f64), opts: &AnalysisOptions) -> bool {
    if sign_definite(&k.h, window, opts.grid.samples) {
        b.witness(format!("partition_{key}"), Witness::Times { values: vec![window.0, window.1] });
        b.note(format!("{key}: h <= 0 on the grid"));
        return true;
    }
    match partition_search(k, window, opts.max_points, &opts.grid) {
        Ok(part) => {
            let mut values = part.points.clone();
            values.push(part.end);
            b.note(format!("{key}: partition with {} points", part.points.len()));
            b.witness(format!("partition_{key}"), Witness::Times { values });
            true
        }
        Err(RiccatiError::PartitionNotFound { stalled_at, points }) => {
            b.note(format!("{key}: no partition found, stalled at t = {stalled_at}"));
            b.witness(format!("stalled_{key}"), Witness::Times { values: points });
            false
        }
        Err(e) => {
            b.note(format!("{key}: {e}"));
            false
        }
    }
}

/// Runs [`scalar_oscillation`] and records zeros and escapes under `key`;
/// true when the system oscillates.
pub(crate) fn scalar_run(
    b: &mut ReportBuilder,
    key: &str,
    sys: &ScalarSystem,
    window: (f64, f64),
    opts: &AnalysisOptions,
) -> bool {
    match scalar_oscillation(sys, window, opts.n_min, opts.burn_in, opts.grid.tol) {
        Ok(out) => {
            let [z1, z2] = out.zeros;
            b.note(format!("{key}: {} and {} zeros, {:?}", z1.len(), z2.len(), out.verdict));
            b.witness(format!("zeros_{key}_start_10"), Witness::Times { values: z1 });
            b.witness(format!("zeros_{key}_start_01"), Witness::Times { values: z2 });
            b.witness(format!("riccati_escapes_{key}"), Witness::Times { values: out.riccati_escapes });
            out.verdict == ScalarVerdict::Oscillatory
        }
        Err(e) => {
            b.note(format!("{key}: integration failed: {e}"));
            false
        }
    }
}

pub(crate) fn record_rule(b: &mut ReportBuilder, opts: &AnalysisOptions) {
    b.witness("n_min", Witness::Scalar { value: opts.n_min as f64 });
    b.witness("burn_in", Witness::Scalar { value: opts.burn_in });
}
