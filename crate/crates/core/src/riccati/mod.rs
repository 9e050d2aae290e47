//! Scalar criterion kernels: the weighted integral `I_{g,h}`, the
//! nonnegativity condition and its partition search, the comparison check,
//! the chi functions of the diagonal case, the coupling envelope and the
//! two diagonal subsystems.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefsys::CoefError;
use crate::odeint::{IntegratorTol, OdeintError};

mod chi;
mod envelope;
mod kernel;
mod subsystem;

pub use chi::{chi_diag, ChiBranch, ChiProfile, ChiSample};
pub use envelope::{diag_source, DiagFn, DiagPoint, Envelope, EnvelopeValue};
pub use kernel::{
    comparison_oracle, nonnegativity_check, partition_search, sign_definite, weighted_integral,
    Kernel, NonnegativityOutcome, Partition, RealFn,
};
pub use subsystem::{
    cauchy_bound_check, subsystem_solve, CauchyBoundReport, Subsystem, SubsystemInit, SubsystemRun,
};

#[derive(Debug, Error)]
pub enum RiccatiError {
    #[error(transparent)]
    Odeint(#[from] OdeintError),
    #[error(transparent)]
    Coef(#[from] CoefError),
    #[error("hypothesis `{which}` fails at t = {t}")]
    HypothesisViolated { which: String, t: f64 },
    #[error("B is not positive definite at t = {0}")]
    NotPositiveB(f64),
    #[error("no partition certified on the window (stalled at t = {stalled_at})")]
    PartitionNotFound { stalled_at: f64, points: Vec<f64> },
    #[error("invalid window [{0}, {1}]")]
    InvalidWindow(f64, f64),
}

/// Sign of `c12` inside the envelope integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum C12Sign {
    /// `+ c12`, the sign produced by the substitution into the Riccati system.
    #[default]
    #[serde(rename = "plus_c12")]
    Plus,
    #[serde(rename = "minus_c12")]
    Minus,
}

impl C12Sign {
    pub fn factor(self) -> f64 {
        match self {
            C12Sign::Plus => 1.0,
            C12Sign::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            C12Sign::Plus => "plus_c12",
            C12Sign::Minus => "minus_c12",
        }
    }
}

/// Grid densities and tolerances shared by the kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Uniform samples per window for partition search and sign scans.
    pub samples: usize,
    /// Minimum evaluation points per partition subinterval.
    pub per_interval: usize,
    /// Grid for the running maximum inside the coupling envelope.
    pub envelope_samples: usize,
    pub tol: IntegratorTol,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { samples: 1024, per_interval: 64, envelope_samples: 4096, tol: IntegratorTol::default() }
    }
}

pub(crate) fn check_window(window: (f64, f64)) -> Result<(), RiccatiError> {
    if !(window.1 > window.0) || !window.0.is_finite() || !window.1.is_finite() {
        return Err(RiccatiError::InvalidWindow(window.0, window.1));
    }
    Ok(())
}

/// `n + 1` equally spaced points covering `window`.
pub fn uniform_grid(window: (f64, f64), n: usize) -> Vec<f64> {
    let n = n.max(1);
    let h = (window.1 - window.0) / n as f64;
    (0..=n).map(|k| if k == n { window.1 } else { window.0 + h * k as f64 }).collect()
}
