//! Scenario files: a coefficient family or table, a window and analysis options.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hamosc_core::coefsys::{from_table, make_family, read_table_csv, FOverride, Scenario};
use hamosc_core::criteria::{AnalysisOptions, ExponentSource};
use hamosc_core::riccati::C12Sign;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Relative paths are taken from the scenario file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_csv_path: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub window: [f64; 2],
    #[serde(default)]
    pub options: FileOptions,
}

/// Options a scenario file may set; missing ones take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileOptions {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub n_min: Option<usize>,
    pub max_points: Option<usize>,
    pub sign_convention: Option<C12Sign>,
    pub exponent_source: Option<ExponentSource>,
    #[serde(rename = "F_override")]
    pub f_override: Option<String>,
    #[serde(alias = "ε_zero")]
    pub eps_zero: Option<f64>,
    pub burn_in: Option<f64>,
    pub paper_literal_chi: Option<bool>,
}

/// A parsed and validated scenario file.
pub struct Loaded {
    /// The file with every option filled in with the value in effect.
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub window: (f64, f64),
    pub opts: AnalysisOptions,
}

fn invalid(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {msg}", path.display()))
}

pub fn parse(path: &Path, text: &str) -> Result<ScenarioFile, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Input(format!("{}: malformed JSON at line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })
}

pub fn load(path: &Path, seed: u64) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(path, e))?;
    let mut file = parse(path, &text)?;
    let [t0, t1] = file.window;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(invalid(path, format!("window [{t0}, {t1}] must be finite with T > t0")));
    }
    let mut scenario = match (&file.family, &file.table_csv_path) {
        (Some(family), None) => make_family(family, &file.params).map_err(|e| invalid(path, e))?,
        (None, Some(table)) => {
            let table = path.parent().unwrap_or(Path::new(".")).join(table);
            let tab = read_table_csv(&table).map_err(|e| invalid(path, e))?;
            from_table(&tab).map_err(|e| invalid(path, e))?
        }
        _ => return Err(invalid(path, "exactly one of `family` and `table_csv_path` is required")),
    };
    scenario.name = file.name.clone();
    scenario.f_override = match file.options.f_override.as_deref() {
        None => None,
        Some("paper_sqrt2_identity") => Some(FOverride::sqrt2_identity()),
        Some(other) => return Err(invalid(path, format!("unknown F_override `{other}`"))),
    };

    let o = &file.options;
    let mut opts = AnalysisOptions { seed, ..AnalysisOptions::default() };
    opts.grid.tol.rtol = o.rtol.unwrap_or(opts.grid.tol.rtol);
    opts.grid.tol.atol = o.atol.unwrap_or(opts.grid.tol.atol);
    opts.n_min = o.n_min.unwrap_or(opts.n_min);
    opts.max_points = o.max_points.unwrap_or(opts.max_points);
    opts.sign_convention = o.sign_convention.unwrap_or(opts.sign_convention);
    opts.exponent_source = o.exponent_source.unwrap_or(opts.exponent_source);
    opts.eps_zero = o.eps_zero.unwrap_or(opts.eps_zero);
    opts.burn_in = o.burn_in.unwrap_or(opts.burn_in);
    opts.paper_literal_chi = o.paper_literal_chi.unwrap_or(opts.paper_literal_chi);
    if !(opts.grid.tol.rtol > 0.0 && opts.grid.tol.atol > 0.0 && opts.eps_zero > 0.0) {
        return Err(invalid(path, "rtol, atol and eps_zero must be positive"));
    }
    if !(0.0..1.0).contains(&opts.burn_in) {
        return Err(invalid(path, "burn_in must lie in [0, 1)"));
    }

    let window = (t0, t1);
    let scenario = scenario.validated(window, opts.hypothesis_samples).map_err(|e| invalid(path, e))?;
    file.options = FileOptions {
        rtol: Some(opts.grid.tol.rtol),
        atol: Some(opts.grid.tol.atol),
        n_min: Some(opts.n_min),
        max_points: Some(opts.max_points),
        sign_convention: Some(opts.sign_convention),
        exponent_source: Some(opts.exponent_source),
        f_override: file.options.f_override.clone(),
        eps_zero: Some(opts.eps_zero),
        burn_in: Some(opts.burn_in),
        paper_literal_chi: Some(opts.paper_literal_chi),
    };
    Ok(Loaded { file, scenario, window, opts })
}
