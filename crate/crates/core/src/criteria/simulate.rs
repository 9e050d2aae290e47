//! Direct simulation of conjoined solutions and its comparison with [`analyze`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{analyze, recurrent, zero_free_after, Analysis, AnalysisOptions, CriteriaError, VerdictKind};
use crate::coefsys::{Scenario, Tag};
use crate::odeint::{detect_det_zeros, solve_hamiltonian_normalized, HamiltonianRun};
use crate::riccati::uniform_grid;
use crate::{Cx, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimVerdict {
    #[serde(rename = "SIM-oscillatory")]
    Oscillatory,
    #[serde(rename = "SIM-nonoscillatory")]
    NonOscillatory,
    #[serde(rename = "SIM-undecided")]
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub label: String,
    pub zeros: Vec<f64>,
    /// Smallest scale-free `|det Phi|` seen on a uniform grid and the nodes.
    pub min_abs_det: f64,
    pub max_defect: f64,
    pub recurrent: bool,
    pub zero_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub verdict: SimVerdict,
    pub starts: Vec<StartOutcome>,
}

/// Initial pairs `(Phi0, Psi0)`: `(I, 0)`, `(I, I)`, then `(I, H)` with
/// random Hermitian `H` (real symmetric for real coefficients).
pub fn conjoined_starts(s: &Scenario, n_starts: usize, seed: u64) -> Vec<(String, Mat2, Mat2)> {
    let mut out = vec![
        ("identity_zero".to_string(), Mat2::identity(), Mat2::zero()),
        ("identity_identity".to_string(), Mat2::identity(), Mat2::identity()),
    ];
    let real = s.has_tag(Tag::RealCoefficients);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..n_starts.saturating_sub(2) {
        let mut u = || rng.gen_range(-1.0..1.0);
        let (d1, d2, re) = (u(), u(), u());
        let im = if real { 0.0 } else { u() };
        let off = Cx::new(re, im);
        let h = Mat2::new(Cx::new(d1, 0.0), off, off.conj(), Cx::new(d2, 0.0));
        out.push((format!("random_{k}"), Mat2::identity(), h));
    }
    out.truncate(n_starts.max(1));
    out
}

fn min_abs_det(run: &HamiltonianRun, window: (f64, f64)) -> f64 {
    uniform_grid(window, 2000)
        .into_iter()
        .chain(run.traj.times().iter().copied())
        .filter_map(|t| run.normalized_det(t))
        .fold(f64::INFINITY, |m, d| m.min(d.norm()))
}

/// Integrates every start and classifies the zero sets of `det Phi`:
/// oscillatory when every start has two or more zeros recurring to the end
/// of the window, non-oscillatory when some start has no zero after the
/// burn-in prefix.
pub fn simulate(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> Result<Simulation, CriteriaError> {
    let s = s.clone().validated(window, opts.hypothesis_samples)?;
    let mut starts = Vec::new();
    for (label, phi0, psi0) in conjoined_starts(&s, opts.n_starts, opts.seed) {
        let run = solve_hamiltonian_normalized(&s, phi0, psi0, window, opts.grid.tol)?;
        let zeros: Vec<f64> = detect_det_zeros(&run, opts.eps_zero).iter().map(|z| z.time).collect();
        starts.push(StartOutcome {
            label,
            recurrent: recurrent(&zeros, window, 2),
            zero_free: zero_free_after(&zeros, window, opts.burn_in),
            min_abs_det: min_abs_det(&run, window),
            max_defect: run.max_defect(),
            zeros,
        });
    }
    let verdict = if starts.iter().all(|st| st.recurrent) {
        SimVerdict::Oscillatory
    } else if starts.iter().any(|st| st.zero_free) {
        SimVerdict::NonOscillatory
    } else {
        SimVerdict::Undecided
    };
    Ok(Simulation { verdict, starts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    /// Same verdict, or both undecided.
    Consistent,
    /// Opposite verdicts, or a definite analysis the simulation cannot see.
    Mismatch,
    /// The analysis is inconclusive but the simulation decided.
    Unconfirmed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub analysis: Analysis,
    pub simulation: Simulation,
    pub agreement: Agreement,
    pub hint: Option<String>,
}

impl CrossValidation {
    pub fn consistent(&self) -> bool {
        self.agreement != Agreement::Mismatch
    }
}

/// Runs [`analyze`] and [`simulate`] on the same window and compares them.
pub fn cross_validate(s: &Scenario, window: (f64, f64), opts: &AnalysisOptions) -> Result<CrossValidation, CriteriaError> {
    let analysis = analyze(s, window, opts)?;
    let simulation = simulate(s, window, opts)?;
    let (agreement, hint) = match (analysis.overall.kind, simulation.verdict) {
        (VerdictKind::Oscillatory, SimVerdict::Oscillatory)
        | (VerdictKind::NonOscillatory, SimVerdict::NonOscillatory)
        | (VerdictKind::Inconclusive, SimVerdict::Undecided) => (Agreement::Consistent, None),
        (VerdictKind::Inconclusive, _) => (Agreement::Unconfirmed, None),
        (_, SimVerdict::Undecided) => (
            Agreement::Mismatch,
            Some("simulation undecided; the window may be too short to show the behaviour".to_string()),
        ),
        _ => (Agreement::Mismatch, None),
    };
    Ok(CrossValidation { analysis, simulation, agreement, hint })
}
