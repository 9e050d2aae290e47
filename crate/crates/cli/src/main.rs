//! `hamosc`: analysis, simulation and cross-checks of scenario files.

mod output;
mod scenario_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hamosc_core::coefsys::catalogue;
use hamosc_core::criteria::{
    analyze, conjoined_starts, cross_validate, simulate, Agreement, AnalysisOptions, CriteriaError, SimVerdict,
    VerdictKind,
};
use hamosc_core::odeint::solve_hamiltonian_normalized;
use serde::Serialize;

use scenario_file::{load, Loaded, ScenarioFile};

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid input.
    #[error("{0}")]
    Input(String),
    #[error("criteria disagree: {0}")]
    Conflict(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Conflict(_) => 3,
            CliError::Output(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<CriteriaError> for CliError {
    fn from(e: CriteriaError) -> Self {
        match e {
            CriteriaError::Validation(e) => CliError::Input(e.to_string()),
            CriteriaError::CriteriaConflict { reports } => {
                let sides: Vec<String> = reports
                    .iter()
                    .filter(|r| r.verdict.kind != VerdictKind::Inconclusive)
                    .map(|r| format!("{} says {:?}", r.criterion.label(), r.verdict.kind))
                    .collect();
                CliError::Conflict(sides.join(", "))
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "hamosc", version, about = "Oscillation criteria for four-dimensional linear Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every criterion and write the JSON report
    Analyze {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate conjoined solutions and report the zeros of det Phi
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Determinant table of the first start
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Compare the criteria with direct simulation
    Verify {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// List the built-in scenarios
    List,
}

/// Fields shared by every JSON document the tool writes.
#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a ScenarioFile,
    window: [f64; 2],
    options: &'a AnalysisOptions,
}

impl<'a> Header<'a> {
    fn new(l: &'a Loaded) -> Self {
        Self {
            tool: "hamosc",
            version: env!("CARGO_PKG_VERSION"),
            scenario: &l.file,
            window: [l.window.0, l.window.1],
            options: &l.opts,
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    #[serde(flatten)]
    header: Header<'a>,
    #[serde(flatten)]
    body: &'a T,
}

fn to_json<T: Serialize>(l: &Loaded, body: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(&Document { header: Header::new(l), body }).map_err(|e| CliError::Failed(e.to_string()))
}

fn seed_from_env() -> Result<u64, CliError> {
    match std::env::var("HAMOSC_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("HAMOSC_SEED must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn load_with(path: &Path, starts: Option<usize>) -> Result<Loaded, CliError> {
    let mut l = load(path, seed_from_env()?)?;
    if let Some(n) = starts {
        if n == 0 {
            return Err(CliError::Input("--starts must be at least 1".into()));
        }
        l.opts.n_starts = n;
    }
    Ok(l)
}

fn sim_label(v: SimVerdict) -> &'static str {
    match v {
        SimVerdict::Oscillatory => "SIM-oscillatory",
        SimVerdict::NonOscillatory => "SIM-nonoscillatory",
        SimVerdict::Undecided => "SIM-undecided",
    }
}

fn cmd_analyze(path: &Path, out: Option<&Path>) -> Result<ExitCode, CliError> {
    let l = load_with(path, None)?;
    let analysis = analyze(&l.scenario, l.window, &l.opts)?;
    output::emit(out, &to_json(&l, &analysis)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(path: &Path, out: Option<&Path>, csv: Option<&Path>, starts: Option<usize>) -> Result<ExitCode, CliError> {
    let l = load_with(path, starts)?;
    let sim = simulate(&l.scenario, l.window, &l.opts)?;
    for st in &sim.starts {
        eprintln!("{}: {} zeros, min |det| {:e}", st.label, st.zeros.len(), st.min_abs_det);
        for z in &st.zeros {
            eprintln!("  {z:.6}");
        }
    }
    if let Some(csv) = csv {
        let (_, phi0, psi0) = conjoined_starts(&l.scenario, l.opts.n_starts, l.opts.seed).swap_remove(0);
        let run = solve_hamiltonian_normalized(&l.scenario, phi0, psi0, l.window, l.opts.grid.tol)
            .map_err(|e| CliError::Failed(e.to_string()))?;
        let mut events = sim.starts[0].zeros.clone();
        events.extend(run.traj.events.iter().map(|e| e.time));
        output::write_atomic(csv, &output::det_csv(&run, l.window, &events)?)?;
    }
    output::emit(out, &to_json(&l, &sim)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(path: &Path, out: Option<&Path>, starts: Option<usize>) -> Result<ExitCode, CliError> {
    let l = load_with(path, starts)?;
    let cv = cross_validate(&l.scenario, l.window, &l.opts)?;
    let sim = sim_label(cv.simulation.verdict);
    println!("{:<10} {:<16} simulation", "criterion", "verdict");
    for r in &cv.analysis.reports {
        println!("{:<10} {:<16} {sim}", r.criterion.label(), format!("{:?}", r.verdict.kind));
    }
    println!("{:<10} {:<16} {sim}", "overall", format!("{:?}", cv.analysis.overall.kind));
    let agreement = match cv.agreement {
        Agreement::Consistent => "consistent",
        Agreement::Mismatch => "mismatch",
        Agreement::Unconfirmed => "unconfirmed",
    };
    println!("agreement: {agreement}");
    if let Some(h) = &cv.hint {
        println!("hint: {h}");
    }
    if let Some(out) = out {
        output::write_atomic(out, to_json(&l, &cv)?.as_bytes())?;
    }
    Ok(if cv.consistent() { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn cmd_list() {
    println!("{:<30} {:<26} {:<28} description", "name", "family", "anchor");
    for e in catalogue() {
        let anchor = if e.anchor.starts_with(|c: char| c.is_ascii_digit()) {
            format!("Example {}", e.anchor)
        } else {
            e.anchor.to_string()
        };
        println!("{:<30} {:<26} {:<28} {}", e.name, e.family, anchor, e.description);
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Analyze { scenario, out } => cmd_analyze(&scenario, out.as_deref()),
        Command::Simulate { scenario, out, csv, starts } => cmd_simulate(&scenario, out.as_deref(), csv.as_deref(), starts),
        Command::Verify { scenario, out, starts } => cmd_verify(&scenario, out.as_deref(), starts),
        Command::List => {
            cmd_list();
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hamosc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
