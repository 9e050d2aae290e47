//! `chi_j` of the diagonal case: the forcing left in the `z_jj` equation once
//! the coupling term is dropped.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{uniform_grid, RealFn, RiccatiError};
use crate::coefsys::{tol_pos, CoefError, Scenario, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiBranch {
    /// `b_{3-j}` vanished and the coupling term was dropped.
    BZero,
    BNonzero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSample {
    pub t: f64,
    pub value: f64,
    pub branch: ChiBranch,
}

/// `chi_j(t) = -c_jj - |a_{3-j,j}|^2 / b_{3-j}`, or `-c_jj` where
/// `b_{3-j} = 0`. With `paper_literal` both signs are flipped.
#[derive(Clone)]
pub struct ChiProfile {
    scenario: Scenario,
    pub j: usize,
    pub paper_literal: bool,
}

pub fn chi_diag(s: &Scenario, j: usize, paper_literal: bool) -> Result<ChiProfile, RiccatiError> {
    if !s.has_tag(Tag::BDiagonal) {
        return Err(CoefError::NotDiagonalB(s.t0).into());
    }
    if j != 1 && j != 2 {
        return Err(RiccatiError::HypothesisViolated { which: format!("j = {j} is not 1 or 2"), t: s.t0 });
    }
    Ok(ChiProfile { scenario: s.clone(), j, paper_literal })
}

impl ChiProfile {
    pub fn at(&self, t: f64) -> Result<ChiSample, RiccatiError> {
        let co = self.scenario.eval(t)?;
        let tol = tol_pos(&co.b);
        let (c, a, b) = if self.j == 1 {
            (co.c.e11.re, co.a.e21, co.b.e22.re)
        } else {
            (co.c.e22.re, co.a.e12, co.b.e11.re)
        };
        let (coupling, branch) =
            if b.abs() <= tol { (0.0, ChiBranch::BZero) } else { (a.norm_sqr() / b, ChiBranch::BNonzero) };
        let value = if self.paper_literal { c + coupling } else { -c - coupling };
        Ok(ChiSample { t, value, branch })
    }

    /// `chi_j(t)`, NaN where the coefficients cannot be evaluated.
    pub fn value(&self, t: f64) -> f64 {
        self.at(t).map_or(f64::NAN, |s| s.value)
    }

    pub fn as_fn(&self) -> RealFn {
        let me = self.clone();
        Arc::new(move |t| me.value(t))
    }

    pub fn sample(&self, window: (f64, f64), n: usize) -> Result<Vec<ChiSample>, RiccatiError> {
        uniform_grid(window, n).into_iter().map(|t| self.at(t)).collect()
    }
}
