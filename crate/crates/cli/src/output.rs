//! Atomic file output and the determinant CSV.

use std::io::Write;
use std::path::Path;

use hamosc_core::odeint::HamiltonianRun;
use hamosc_core::riccati::uniform_grid;
use tempfile::NamedTempFile;

use crate::CliError;

/// Minimum number of uniform cells in the determinant CSV.
pub const CSV_CELLS: usize = 1000;

pub const CSV_HEADER: [&str; 5] = ["t", "re_det", "im_det", "abs_det", "conjoined_defect"];

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Output(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Sends `text` to `out` when given, to standard output otherwise.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            // a closed pipe (`| head`) is not an error
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Output(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

/// Scale-free `det Phi` and the conjoinedness defect on a uniform grid of
/// [`CSV_CELLS`] cells merged with `events`.
pub fn det_csv(run: &HamiltonianRun, window: (f64, f64), events: &[f64]) -> Result<Vec<u8>, CliError> {
    let mut ts = uniform_grid(window, CSV_CELLS);
    ts.extend(events.iter().copied().filter(|t| (window.0..=window.1).contains(t)));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let fail = |e: csv::Error| CliError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(fail)?;
    for t in ts {
        let (Some(d), Some(defect)) = (run.normalized_det(t), run.defect_at(t)) else { continue };
        // Display on f64 is the shortest text that reads back to the same value
        w.write_record([t, d.re, d.im, d.norm(), defect].map(|v| v.to_string())).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}
