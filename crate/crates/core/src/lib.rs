//! Oscillation and non-oscillation criteria for four-dimensional linear
//! Hamiltonian systems
//!
//! ```text
//! Phi' = A(t) Phi + B(t) Psi,   Psi' = C(t) Phi - A*(t) Psi,   B = B*, C = C*
//! ```
//!
//! The crate combines Riccati-equation criteria with direct simulation of
//! conjoined solutions. The numeric kernels ([`mat2`], [`quad`] and the
//! integrator in [`odeint`]) are generic over [`Real`]; the coefficient and
//! criterion layers work in `f64` through the aliases below.

pub mod coefsys;
pub mod criteria;
pub mod mat2;
pub mod odeint;
pub mod quad;
pub mod riccati;
pub mod scalar;

pub use scalar::Real;

/// Complex `f64`.
pub type Cx = num_complex::Complex<f64>;
/// 2x2 complex matrix over `f64`.
pub type Mat2 = mat2::Mat2<f64>;
/// 2x2 complex matrix over `f32`.
pub type Mat2F32 = mat2::Mat2<f32>;
/// Dense trajectory over `f64`.
pub type Trajectory = odeint::Trajectory<f64>;

pub use coefsys::{Coeffs, Scenario, Tag};
pub use mat2::{HermFlag, MatError, Sandwich};
