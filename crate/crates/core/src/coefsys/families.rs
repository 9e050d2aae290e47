//! Built-in parametric coefficient families and the scenario catalogue.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{CoefError, Coeffs, Scenario};
use crate::{Cx, Mat2};

pub const FAMILY_IDS: &[&str] = &[
    "harmonic",
    "zero",
    "euler",
    "vector_schrodinger",
    "diag_B",
    "ones_B_zero_drift",
    "ones_B_euler",
    "ones_B_alpha_conditions",
];

struct Params<'a> {
    family: &'a str,
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn get(&self, keys: &[&str], default: Option<f64>) -> Result<f64, CoefError> {
        for k in keys {
            if let Some(v) = self.map.get(*k) {
                if !v.is_finite() {
                    return Err(CoefError::BadParam {
                        family: self.family.to_string(),
                        param: k.to_string(),
                        detail: "not finite".into(),
                    });
                }
                return Ok(*v);
            }
        }
        default.ok_or_else(|| CoefError::MissingParam {
            family: self.family.to_string(),
            param: keys[0].to_string(),
        })
    }

    fn opt(&self, keys: &[&str], default: f64) -> Result<f64, CoefError> {
        self.get(keys, Some(default))
    }
}

fn cx(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

fn canonical(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Builds a scenario from a family id and its parameters.
///
/// Every family accepts an optional `t0`.
pub fn make_family(family: &str, params: &BTreeMap<String, f64>) -> Result<Scenario, CoefError> {
    let p = Params { family, map: params };
    let s = match family {
        "harmonic" => {
            let omega = p.opt(&["omega", "ω"], 1.0)?;
            let t0 = p.opt(&["t0"], 0.0)?;
            let co = Coeffs {
                a: Mat2::zero(),
                b: Mat2::identity(),
                c: Mat2::identity().scale(-omega * omega),
            };
            Scenario::new(family, t0, Arc::new(move |_| co))
                .with_derivatives(Arc::new(|_| Coeffs::zero()))
                .with_family(family, canonical(&[("omega", omega), ("t0", t0)]))
        }
        "zero" => {
            let t0 = p.opt(&["t0"], 0.0)?;
            Scenario::new(family, t0, Arc::new(|_| Coeffs::zero()))
                .with_derivatives(Arc::new(|_| Coeffs::zero()))
                .with_family(family, canonical(&[("t0", t0)]))
        }
        "euler" => {
            let c = p.get(&["c"], None)?;
            let t0 = p.opt(&["t0"], 1.0)?;
            if t0 <= 0.0 {
                return Err(CoefError::BadParam {
                    family: family.into(),
                    param: "t0".into(),
                    detail: "must be positive".into(),
                });
            }
            Scenario::new(
                family,
                t0,
                Arc::new(move |t| Coeffs {
                    a: Mat2::zero(),
                    b: Mat2::identity(),
                    c: Mat2::identity().scale(-c / (t * t)),
                }),
            )
            .with_derivatives(Arc::new(move |t| Coeffs {
                a: Mat2::zero(),
                b: Mat2::zero(),
                c: Mat2::identity().scale(2.0 * c / (t * t * t)),
            }))
            .with_family(family, canonical(&[("c", c), ("t0", t0)]))
        }
        "vector_schrodinger" => {
            let p1 = p.opt(&["p1", "p₁"], 1.0)?;
            let p2 = p.opt(&["p2", "p₂"], 1.0)?;
            let l1 = p.opt(&["lambda1", "λ1", "λ₁"], 1.0)?;
            let l2 = p.opt(&["lambda2", "λ2", "λ₂"], std::f64::consts::SQRT_2)?;
            let th1 = p.opt(&["theta1", "θ1", "θ₁"], 0.0)?;
            let th2 = p.opt(&["theta2", "θ2", "θ₂"], 0.0)?;
            let k = p.opt(&["coupling"], 10.0)?;
            let t0 = p.opt(&["t0"], 0.0)?;
            if l1 == 0.0 || l2 == 0.0 {
                return Err(CoefError::BadParam {
                    family: family.into(),
                    param: "lambda".into(),
                    detail: "frequencies must be nonzero".into(),
                });
            }
            let mu = move |t: f64| p1 * (l1 * t + th1).sin() + p2 * (l2 * t + th2).sin();
            let dmu = move |t: f64| p1 * l1 * (l1 * t + th1).cos() + p2 * l2 * (l2 * t + th2).cos();
            // C = -K with K = [[mu, k i], [-k i, -t^2]]
            Scenario::new(
                family,
                t0,
                Arc::new(move |t| Coeffs {
                    a: Mat2::zero(),
                    b: Mat2::identity(),
                    c: Mat2::new(cx(-mu(t), 0.0), cx(0.0, -k), cx(0.0, k), cx(t * t, 0.0)),
                }),
            )
            .with_derivatives(Arc::new(move |t| Coeffs {
                a: Mat2::zero(),
                b: Mat2::zero(),
                c: Mat2::from_real(-dmu(t), 0.0, 0.0, 2.0 * t),
            }))
            .with_family(
                family,
                canonical(&[
                    ("p1", p1),
                    ("p2", p2),
                    ("lambda1", l1),
                    ("lambda2", l2),
                    ("theta1", th1),
                    ("theta2", th2),
                    ("coupling", k),
                    ("t0", t0),
                ]),
            )
        }
        "diag_B" => {
            let b1 = p.opt(&["b1"], 1.0)?;
            let b2 = p.opt(&["b2"], 1.0)?;
            let a11 = p.opt(&["a11"], 0.0)?;
            let a12 = p.opt(&["a12"], 0.0)?;
            let a21 = p.opt(&["a21"], 0.0)?;
            let a22 = p.opt(&["a22"], 0.0)?;
            let c11 = p.opt(&["c11"], 0.0)?;
            let c12_re = p.opt(&["c12_re", "c12"], 0.0)?;
            let c12_im = p.opt(&["c12_im"], 0.0)?;
            let c22 = p.opt(&["c22"], 0.0)?;
            let t0 = p.opt(&["t0"], 0.0)?;
            let co = Coeffs {
                a: Mat2::from_real(a11, a12, a21, a22),
                b: Mat2::diag(b1, b2),
                c: Mat2::new(cx(c11, 0.0), cx(c12_re, c12_im), cx(c12_re, -c12_im), cx(c22, 0.0)),
            };
            Scenario::new(family, t0, Arc::new(move |_| co))
                .with_derivatives(Arc::new(|_| Coeffs::zero()))
                .with_family(
                    family,
                    canonical(&[
                        ("b1", b1),
                        ("b2", b2),
                        ("a11", a11),
                        ("a12", a12),
                        ("a21", a21),
                        ("a22", a22),
                        ("c11", c11),
                        ("c12_re", c12_re),
                        ("c12_im", c12_im),
                        ("c22", c22),
                        ("t0", t0),
                    ]),
                )
        }
        "ones_B_zero_drift" => {
            let a = p.opt(&["a"], 0.0)?;
            let csum = p.opt(&["csum", "c_sum"], -1.0)?;
            let t0 = p.opt(&["t0"], 0.0)?;
            // rows of A sum to zero; C carries the whole sum c11 + 2 Re c12 + c22
            let co = Coeffs {
                a: Mat2::from_real(a, -a, a, -a),
                b: Mat2::ones(),
                c: Mat2::ones().scale(csum / 4.0),
            };
            Scenario::new(family, t0, Arc::new(move |_| co))
                .with_derivatives(Arc::new(|_| Coeffs::zero()))
                .with_family(family, canonical(&[("a", a), ("csum", csum), ("t0", t0)]))
        }
        "ones_B_euler" => {
            let alpha = p.opt(&["alpha", "α"], 0.5)?;
            let t0 = p.opt(&["t0"], 1.0)?;
            if t0 <= 0.0 {
                return Err(CoefError::BadParam {
                    family: family.into(),
                    param: "t0".into(),
                    detail: "must be positive".into(),
                });
            }
            let k = alpha - alpha * alpha;
            Scenario::new(
                family,
                t0,
                Arc::new(move |t| Coeffs {
                    a: Mat2::ones().scale(alpha / (2.0 * t)),
                    b: Mat2::ones(),
                    c: Mat2::ones().scale(k / (4.0 * t * t)),
                }),
            )
            .with_derivatives(Arc::new(move |t| Coeffs {
                a: Mat2::ones().scale(-alpha / (2.0 * t * t)),
                b: Mat2::zero(),
                c: Mat2::ones().scale(-k / (2.0 * t * t * t)),
            }))
            .with_family(family, canonical(&[("alpha", alpha), ("t0", t0)]))
        }
        "ones_B_alpha_conditions" => {
            let s0 = p.opt(&["s0"], 1.0)?;
            let kappa = p.opt(&["kappa", "κ"], 0.0)?;
            let csum = p.opt(&["csum", "c_sum"], 0.0)?;
            let t0 = p.opt(&["t0"], 0.0)?;
            if s0 + kappa * t0 <= 0.0 || kappa < 0.0 {
                return Err(CoefError::BadParam {
                    family: family.into(),
                    param: "s0".into(),
                    detail: "row sums must be positive and nondecreasing".into(),
                });
            }
            Scenario::new(
                family,
                t0,
                Arc::new(move |t| Coeffs {
                    a: Mat2::ones().scale((s0 + kappa * t) / 2.0),
                    b: Mat2::ones(),
                    c: Mat2::ones().scale(csum / 4.0),
                }),
            )
            .with_derivatives(Arc::new(move |_| Coeffs {
                a: Mat2::ones().scale(kappa / 2.0),
                b: Mat2::zero(),
                c: Mat2::zero(),
            }))
            .with_family(
                family,
                canonical(&[("s0", s0), ("kappa", kappa), ("csum", csum), ("t0", t0)]),
            )
        }
        other => return Err(CoefError::UnknownFamily(other.to_string())),
    };
    Ok(s)
}

/// A named built-in scenario.
#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub family: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub window: (f64, f64),
    pub anchor: &'static str,
    pub description: &'static str,
    pub f_override: Option<&'static str>,
    pub n_min: Option<usize>,
}

impl CatalogueEntry {
    pub fn params_map(&self) -> BTreeMap<String, f64> {
        canonical(self.params)
    }

    pub fn scenario(&self) -> Result<Scenario, CoefError> {
        let mut s = make_family(self.family, &self.params_map())?;
        s.name = self.name.to_string();
        if self.f_override == Some("paper_sqrt2_identity") {
            s.f_override = Some(super::FOverride::sqrt2_identity());
        }
        Ok(s)
    }
}

static CATALOGUE: &[CatalogueEntry] = &[
    CatalogueEntry {
        name: "example_3_1",
        family: "vector_schrodinger",
        params: &[
            ("p1", 1.0),
            ("p2", 1.0),
            ("lambda1", 1.0),
            ("lambda2", std::f64::consts::SQRT_2),
            ("theta1", 0.0),
            ("theta2", 0.0),
        ],
        window: (0.0, 200.0),
        anchor: "3.1",
        description: "vector equation phi'' + K(t) phi = 0 with quasi-periodic mu and 10i coupling",
        f_override: None,
        n_min: Some(10),
    },
    CatalogueEntry {
        name: "example_3_2_zero_drift",
        family: "ones_B_zero_drift",
        params: &[("a", 0.0), ("csum", -1.0)],
        window: (0.0, 100.0),
        anchor: "3.2",
        description: "B = ones, zero row sums of A, c11 + 2 Re c12 + c22 = -1",
        f_override: Some("paper_sqrt2_identity"),
        n_min: None,
    },
    CatalogueEntry {
        name: "example_3_2_euler_a05",
        family: "ones_B_euler",
        params: &[("alpha", 0.5)],
        window: (1.0, 1000.0),
        anchor: "3.2",
        description: "B = ones, row sums alpha/t, c11 + 2 Re c12 + c22 = (alpha - alpha^2)/t^2",
        f_override: None,
        n_min: None,
    },
    CatalogueEntry {
        name: "example_3_2_alpha_conditions",
        family: "ones_B_alpha_conditions",
        params: &[("s0", 1.0), ("kappa", 0.0), ("csum", 0.0)],
        window: (0.0, 100.0),
        anchor: "3.2",
        description: "B = ones, positive nondecreasing row sums of A",
        f_override: None,
        n_min: None,
    },
    CatalogueEntry {
        name: "harmonic",
        family: "harmonic",
        params: &[],
        window: (0.0, 50.0),
        anchor: "sanity family",
        description: "A = 0, B = I, C = -I",
        f_override: None,
        n_min: None,
    },
    CatalogueEntry {
        name: "zero",
        family: "zero",
        params: &[],
        window: (0.0, 50.0),
        anchor: "sanity family",
        description: "A = B = C = 0",
        f_override: None,
        n_min: None,
    },
    CatalogueEntry {
        name: "euler_c2_5",
        family: "euler",
        params: &[("c", 2.5)],
        window: (1.0, 10000.0),
        anchor: "Euler calibration",
        description: "phi'' + (c / t^2) phi = 0 in both components, c = 2.5",
        f_override: None,
        n_min: Some(3),
    },
    CatalogueEntry {
        name: "diag_split",
        family: "diag_B",
        params: &[("b1", 1.0), ("b2", -1.0), ("c11", 1.0), ("c22", -1.0)],
        window: (0.0, 50.0),
        anchor: "diagonal B, opposite signs",
        description: "A = 0, B = diag(1, -1), C = diag(1, -1)",
        f_override: None,
        n_min: None,
    },
    CatalogueEntry {
        name: "diag_positive",
        family: "diag_B",
        params: &[("b1", 1.0), ("b2", 1.0), ("c11", 1.0), ("c22", 1.0)],
        window: (0.0, 50.0),
        anchor: "diagonal B, positive",
        description: "A = 0, B = I, C = I",
        f_override: None,
        n_min: None,
    },
];

pub fn catalogue() -> &'static [CatalogueEntry] {
    CATALOGUE
}
