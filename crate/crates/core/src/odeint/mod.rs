//! Adaptive integration of the matrix system, Riccati equations and quadrature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefsys::CoefError;

mod dopri;
pub mod hamiltonian;
pub mod riccati_flow;
pub mod roots;
pub mod zeros;

pub use dopri::{
    adaptive_solve, solve_with_hook, EscapeWhen, Event, EventKind, NoHook, OdeError,
    SolveOptions, StepHook, Trajectory,
};
pub use hamiltonian::{
    conjoined_defect, solve_hamiltonian, solve_hamiltonian_normalized, HamiltonianRun,
};
pub use riccati_flow::{
    solve_matrix_riccati, solve_scalar_riccati, BlowupRecord, MatrixRiccatiRun, RiccatiRun,
};
pub use zeros::{detect_det_zeros, scalar_zeros, ZeroKind, ZeroRecord};

pub use crate::quad::{integrate as quadrature, QuadResult};

/// Relative and absolute tolerances handed to the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorTol {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegratorTol {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

impl IntegratorTol {
    pub fn options(&self) -> SolveOptions<f64> {
        SolveOptions { rtol: self.rtol, atol: self.atol, ..SolveOptions::default() }
    }
}

#[derive(Debug, Error)]
pub enum OdeintError {
    #[error(transparent)]
    Ode(#[from] OdeError<f64>),
    #[error(transparent)]
    Coef(#[from] CoefError),
    #[error(
        "conjoinedness defect {defect:e} exceeds {bound:e} at t = {t}{}",
        if *.at_start { " (initial pair is not conjoined)" } else { "" }
    )]
    ConjoinedDrift { t: f64, defect: f64, bound: f64, at_start: bool },
    #[error("initial Riccati value is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureNoConvergence { a: f64, b: f64 },
}

/// Default escape threshold for Riccati solutions.
pub const Y_MAX: f64 = 1e8;

/// Adaptive Gauss-Kronrod quadrature with error `<= tol (1 + |result|)`.
pub fn quadrature_checked<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, OdeintError> {
    let r = quadrature(f, a, b, tol, tol);
    if !r.converged || !r.value.is_finite() {
        return Err(OdeintError::QuadratureNoConvergence { a, b });
    }
    Ok(r.value)
}
