//! Coefficient providers `t -> (A(t), B(t), C(t))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Cx, Mat2};

pub mod families;
pub mod table;

pub use families::{catalogue, make_family, CatalogueEntry, FAMILY_IDS};
pub use table::{from_table, read_table_csv, TabulatedCoeffs};

/// Coefficient triple at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    pub a: Mat2,
    pub b: Mat2,
    pub c: Mat2,
}

impl Coeffs {
    pub fn zero() -> Self {
        Self { a: Mat2::zero(), b: Mat2::zero(), c: Mat2::zero() }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

pub type CoeffFn = Arc<dyn Fn(f64) -> Coeffs + Send + Sync>;
pub type MatFn = Arc<dyn Fn(f64) -> Mat2 + Send + Sync>;

/// Structural flags established by [`validate_scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    BDiagonal,
    BPsd,
    BPositive,
    RealCoefficients,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::BDiagonal => "B_diagonal",
            Tag::BPsd => "B_psd",
            Tag::BPositive => "B_positive",
            Tag::RealCoefficients => "real_coefficients",
        };
        f.write_str(s)
    }
}

/// Which coefficient a derivative is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    A,
    B,
    C,
    SqrtB,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Which::A => "A",
            Which::B => "B",
            Which::C => "C",
            Which::SqrtB => "sqrtB",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoefError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` needs parameter `{param}`")]
    MissingParam { family: String, param: String },
    #[error("parameter `{param}` of family `{family}` is invalid: {detail}")]
    BadParam { family: String, param: String, detail: String },
    #[error("tabulated sample at t = {0} has non-Hermitian B or C")]
    NonHermitianSample(f64),
    #[error("t = {0} is outside the coefficient domain")]
    OutOfDomain(f64),
    #[error("{which} is not Hermitian at t = {t} (asymmetry {asymmetry:e})")]
    NonHermitian { t: f64, which: Which, asymmetry: f64 },
    #[error("b_j vanishes at t = {0}")]
    ZeroDiagonalB(f64),
    #[error("B is not diagonal at t = {0}")]
    NotDiagonalB(f64),
    #[error("coefficients are not finite at t = {0}")]
    NonFinite(f64),
    #[error("sqrt(B) unavailable at t = {t}: {detail}")]
    SqrtB { t: f64, detail: String },
    #[error("table: {0}")]
    Table(String),
}

/// Replacement for the minimum-norm sandwich solution.
#[derive(Clone)]
pub struct FOverride {
    pub label: String,
    pub f: MatFn,
}

impl fmt::Debug for FOverride {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FOverride").field("label", &self.label).finish()
    }
}

impl FOverride {
    /// `F = sqrt(2) I`.
    pub fn sqrt2_identity() -> Self {
        Self {
            label: "paper_sqrt2_identity".to_string(),
            f: Arc::new(|_| Mat2::identity().scale(std::f64::consts::SQRT_2)),
        }
    }
}

/// A coefficient triple with metadata.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub t0: f64,
    /// Right end of the domain; `None` means unbounded.
    pub t_end: Option<f64>,
    eval_fn: CoeffFn,
    deriv_fn: Option<CoeffFn>,
    pub tags: BTreeSet<Tag>,
    pub f_override: Option<FOverride>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("params", &self.params)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("tags", &self.tags)
            .field("f_override", &self.f_override)
            .finish()
    }
}

impl Scenario {
    pub fn new(name: impl Into<String>, t0: f64, eval: CoeffFn) -> Self {
        let name = name.into();
        Self {
            family: name.clone(),
            name,
            params: BTreeMap::new(),
            t0,
            t_end: None,
            eval_fn: eval,
            deriv_fn: None,
            tags: BTreeSet::new(),
            f_override: None,
        }
    }

    /// Scenario with constant coefficients.
    pub fn constant(name: impl Into<String>, a: Mat2, b: Mat2, c: Mat2) -> Self {
        let co = Coeffs { a, b, c };
        Self::new(name, 0.0, Arc::new(move |_| co)).with_derivatives(Arc::new(|_| Coeffs::zero()))
    }

    pub fn from_fn<F>(name: impl Into<String>, t0: f64, f: F) -> Self
    where
        F: Fn(f64) -> Coeffs + Send + Sync + 'static,
    {
        Self::new(name, t0, Arc::new(f))
    }

    pub fn with_derivatives(mut self, d: CoeffFn) -> Self {
        self.deriv_fn = Some(d);
        self
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_domain_end(mut self, t_end: f64) -> Self {
        self.t_end = Some(t_end);
        self
    }

    pub fn with_f_override(mut self, f: Option<FOverride>) -> Self {
        self.f_override = f;
        self
    }

    pub fn with_family(mut self, family: impl Into<String>, params: BTreeMap<String, f64>) -> Self {
        self.family = family.into();
        self.params = params;
        self
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.deriv_fn.is_some()
    }

    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn in_domain(&self, t: f64) -> bool {
        t.is_finite() && t >= self.t0 && self.t_end.is_none_or(|e| t <= e)
    }

    /// Coefficients at `t`, checked against the domain.
    pub fn eval(&self, t: f64) -> Result<Coeffs, CoefError> {
        if !self.in_domain(t) {
            return Err(CoefError::OutOfDomain(t));
        }
        let co = (self.eval_fn)(t);
        if !co.is_finite() {
            return Err(CoefError::NonFinite(t));
        }
        Ok(co)
    }

    /// Coefficients at `t` without domain checks (integrator inner loops).
    pub fn coeffs(&self, t: f64) -> Coeffs {
        (self.eval_fn)(t)
    }

    pub fn analytic_derivatives(&self, t: f64) -> Option<Coeffs> {
        self.deriv_fn.as_ref().map(|d| d(t))
    }

    /// Default window `[t0, t0 + len]` clipped to the domain.
    pub fn window(&self, len: f64) -> (f64, f64) {
        let end = self.t0 + len;
        (self.t0, self.t_end.map_or(end, |e| e.min(end)))
    }
}

fn pick(co: &Coeffs, which: Which) -> Mat2 {
    match which {
        Which::A => co.a,
        Which::B => co.b,
        Which::C => co.c,
        Which::SqrtB => unreachable!("sqrtB is derived, not stored"),
    }
}

/// Step used by every finite difference in the crate.
pub fn fd_step(t: f64) -> f64 {
    f64::EPSILON.cbrt() * t.abs().max(1.0)
}

/// Derivative of `f` at `t` on `[lo, hi]`: central difference inside,
/// second-order one-sided differences at the edges.
pub fn fd_derivative<F>(f: F, t: f64, lo: f64, hi: Option<f64>) -> Result<Mat2, CoefError>
where
    F: Fn(f64) -> Result<Mat2, CoefError>,
{
    let h = fd_step(t);
    let fits_left = t - h >= lo;
    let fits_right = hi.is_none_or(|e| t + h <= e);
    if fits_left && fits_right {
        let d = f(t + h)? - f(t - h)?;
        return Ok(d.scale(0.5 / h));
    }
    if fits_right && hi.is_none_or(|e| t + 2.0 * h <= e) {
        let d = f(t)?.scale(-3.0) + f(t + h)?.scale(4.0) - f(t + 2.0 * h)?;
        return Ok(d.scale(0.5 / h));
    }
    if t - 2.0 * h >= lo {
        let d = f(t)?.scale(3.0) - f(t - h)?.scale(4.0) + f(t - 2.0 * h)?;
        return Ok(d.scale(0.5 / h));
    }
    Err(CoefError::OutOfDomain(t))
}

/// `sqrt(B(t))`.
pub fn sqrt_b(s: &Scenario, t: f64) -> Result<Mat2, CoefError> {
    let b = s.eval(t)?.b;
    b.sqrt_psd().map_err(|e| CoefError::SqrtB { t, detail: e.to_string() })
}

/// Derivative of A, B, C or sqrt(B) at `t`.
pub fn coeff_derivative(s: &Scenario, which: Which, t: f64) -> Result<Mat2, CoefError> {
    if !s.in_domain(t) {
        return Err(CoefError::OutOfDomain(t));
    }
    match which {
        Which::SqrtB => fd_derivative(|x| sqrt_b(s, x), t, s.t0, s.t_end),
        _ => {
            if let Some(d) = s.analytic_derivatives(t) {
                return Ok(pick(&d, which));
            }
            fd_derivative(|x| s.eval(x).map(|co| pick(&co, which)), t, s.t0, s.t_end)
        }
    }
}

/// Finite-difference derivative of A, B or C even when analytic ones exist.
pub fn coeff_derivative_fd(s: &Scenario, which: Which, t: f64) -> Result<Mat2, CoefError> {
    match which {
        Which::SqrtB => coeff_derivative(s, which, t),
        _ => fd_derivative(|x| s.eval(x).map(|co| pick(&co, which)), t, s.t0, s.t_end),
    }
}

/// Positivity margin `1e-9 (1 + |B|)`.
pub fn tol_pos(b: &Mat2) -> f64 {
    1e-9 * (1.0 + b.norm())
}

/// The ratios `r1 = a12 / b1` and `r2 = conj(a21) / b2` with derivatives.
#[derive(Clone)]
pub struct RatioFns {
    scenario: Scenario,
}

/// Ratio values at one time.
#[derive(Debug, Clone, Copy)]
pub struct RatioPoint {
    pub r1: Cx,
    pub r2: Cx,
    pub dr1: Cx,
    pub dr2: Cx,
}

pub fn ratio_fns(s: &Scenario) -> Result<RatioFns, CoefError> {
    if !s.has_tag(Tag::BDiagonal) {
        return Err(CoefError::NotDiagonalB(s.t0));
    }
    Ok(RatioFns { scenario: s.clone() })
}

impl RatioFns {
    fn diag_b(&self, t: f64) -> Result<(Coeffs, f64, f64), CoefError> {
        let co = self.scenario.eval(t)?;
        let tol = tol_pos(&co.b);
        let (b1, b2) = (co.b.e11.re, co.b.e22.re);
        if b1.abs() <= tol || b2.abs() <= tol {
            return Err(CoefError::ZeroDiagonalB(t));
        }
        Ok((co, b1, b2))
    }

    pub fn r1(&self, t: f64) -> Result<Cx, CoefError> {
        let (co, b1, _) = self.diag_b(t)?;
        Ok(co.a.e12 / b1)
    }

    pub fn r2(&self, t: f64) -> Result<Cx, CoefError> {
        let (co, _, b2) = self.diag_b(t)?;
        Ok(co.a.e21.conj() / b2)
    }

    pub fn at(&self, t: f64) -> Result<RatioPoint, CoefError> {
        let (co, b1, b2) = self.diag_b(t)?;
        let r1 = co.a.e12 / b1;
        let r2 = co.a.e21.conj() / b2;
        let s = &self.scenario;
        let (dr1, dr2) = if let Some(d) = s.analytic_derivatives(t) {
            let db1 = d.b.e11.re;
            let db2 = d.b.e22.re;
            (
                (d.a.e12 * b1 - co.a.e12 * db1) / (b1 * b1),
                (d.a.e21.conj() * b2 - co.a.e21.conj() * db2) / (b2 * b2),
            )
        } else {
            let g = |x: f64| -> Result<Mat2, CoefError> {
                let p = self.diag_b(x)?;
                let (co, b1, b2) = p;
                Ok(Mat2::new(co.a.e12 / b1, co.a.e21.conj() / b2, Cx::new(0.0, 0.0), Cx::new(0.0, 0.0)))
            };
            let d = fd_derivative(g, t, s.t0, s.t_end)?;
            (d.e11, d.e12)
        };
        Ok(RatioPoint { r1, r2, dr1, dr2 })
    }
}

/// Outcome of [`validate_scenario`].
#[derive(Debug, Clone, Serialize)]
pub struct Validation {
    pub tags: BTreeSet<Tag>,
    pub max_asymmetry: f64,
    pub min_b_eigenvalue: f64,
    pub samples: usize,
}

/// Samples the window uniformly and establishes the structural tags.
pub fn validate_scenario(
    s: &Scenario,
    window: (f64, f64),
    n_samples: usize,
) -> Result<Validation, CoefError> {
    let (t0, t1) = window;
    if !(t1 > t0) || n_samples < 2 {
        return Err(CoefError::OutOfDomain(t1));
    }
    let mut diag = true;
    let mut psd = true;
    let mut pos = true;
    let mut real = true;
    let mut max_asym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for k in 0..n_samples {
        let t = t0 + (t1 - t0) * k as f64 / (n_samples - 1) as f64;
        let co = s.eval(t)?;
        for (m, which) in [(co.b, Which::B), (co.c, Which::C)] {
            let tol = m.tol_herm();
            let flag = m.is_hermitian(tol);
            max_asym = max_asym.max(flag.defect);
            if !flag.hermitian {
                return Err(CoefError::NonHermitian { t, which, asymmetry: flag.defect });
            }
        }
        let tol_b = co.b.tol_herm();
        if co.b.e12.norm() > tol_b || co.b.e21.norm() > tol_b {
            diag = false;
        }
        let (lo, _) = co.b.hermitian_eigenvalues();
        min_eig = min_eig.min(lo);
        if lo < -tol_b {
            psd = false;
        }
        if lo <= tol_pos(&co.b) {
            pos = false;
        }
        for m in [co.a, co.b, co.c] {
            let tol = m.tol_herm();
            if [m.e11, m.e12, m.e21, m.e22].iter().any(|z| z.im.abs() > tol) {
                real = false;
            }
        }
    }
    let mut tags = BTreeSet::new();
    if diag {
        tags.insert(Tag::BDiagonal);
    }
    if psd {
        tags.insert(Tag::BPsd);
    }
    if psd && pos {
        tags.insert(Tag::BPositive);
    }
    if real {
        tags.insert(Tag::RealCoefficients);
    }
    Ok(Validation { tags, max_asymmetry: max_asym, min_b_eigenvalue: min_eig, samples: n_samples })
}

impl Scenario {
    /// Runs [`validate_scenario`] and stores the resulting tags.
    pub fn validated(mut self, window: (f64, f64), n_samples: usize) -> Result<Self, CoefError> {
        let v = validate_scenario(&self, window, n_samples)?;
        self.tags = v.tags;
        Ok(self)
    }
}
