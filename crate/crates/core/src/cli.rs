//! Command-line front end: `hhg <dipole|spectrum|state|scenario> --config <path>
//! [--out <dir>] [--threads N] [-v]`.
//!
//! Exit codes: 0 on success, 1 on any configuration, validation or I/O
//! error, 2 when a scenario finishes with at least one failing evidence
//! record.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use log::{info, warn, LevelFilter};

use crate::config::{DriveSection, RunFile};
use crate::dipole::DipoleEngine;
use crate::error::{invalid, Error, Result};
use crate::harmonics::{coherent_amplitudes, spectrum_ensemble, SpectrumLine, SpectrumMetadata, SpectrumResult, Window};
use crate::io::{write_density_csv, write_dipole_csv, write_husimi_csv, write_json, write_spectrum_csv};
use crate::phasespace::HusimiSampler;
use crate::quantum_state::{coherent_mode_state, phase_averaged_mode_state, CoherenceReport};
use crate::scenarios::{emit_report, run_scenario, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_EVIDENCE_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hhg", version, about = "Quantum-optical high harmonic generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dipole response of the coherent drive component: dipole.csv
    Dipole(CommonArgs),
    /// Harmonic spectrum of the configured drive: spectrum.csv, spectrum.json
    Spectrum(CommonArgs),
    /// Harmonic mode states: rho_q<q>.csv, coherence.json, husimi.csv
    State(CommonArgs),
    /// Scenario run with evidence: <out>/<scenario>/evidence.json and tables
    Scenario(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Upper bound on worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    Dipole,
    Spectrum,
    State,
    Scenario,
}

/// Parsed command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    pub config: PathBuf,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub verbosity: u8,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let (subcommand, args) = match cli.command {
            Command::Dipole(a) => (SubcommandKind::Dipole, a),
            Command::Spectrum(a) => (SubcommandKind::Spectrum, a),
            Command::State(a) => (SubcommandKind::State, a),
            Command::Scenario(a) => (SubcommandKind::Scenario, a),
        };
        RunConfig {
            subcommand,
            config: args.config,
            out: args.out,
            threads: args.threads,
            verbosity: args.verbose,
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let run = match Cli::try_parse_from(argv) {
        Ok(cli) => RunConfig::from(cli),
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    init_logging(run.verbosity);
    let outcome = match run.threads {
        Some(0) => Err(invalid("--threads", "must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| invalid("--threads", e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(&run))),
        None => dispatch(&run),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    // a logger may already be installed when running in-process
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

/// Runs a parsed command line.
pub fn dispatch(run: &RunConfig) -> Result<i32> {
    let file = RunFile::load(&run.config)?;
    info!("loaded {}", run.config.display());
    match run.subcommand {
        SubcommandKind::Dipole => write_dipole(&file, &run.out).map(|_| EXIT_OK),
        SubcommandKind::Spectrum => write_spectrum(&file, &run.out).map(|_| EXIT_OK),
        SubcommandKind::State => write_states(&file, &run.out).map(|_| EXIT_OK),
        SubcommandKind::Scenario => run_scenario_command(file, &run.out),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot create output directory {}: {e}", dir.display())))
    })
}

fn write_dipole(file: &RunFile, out: &Path) -> Result<()> {
    create_dir(out)?;
    let engine = file.engine.build()?;
    let dipole = engine.dipole(&file.field, &file.time_grid()?)?;
    write_dipole_csv(&out.join("dipole.csv"), &dipole)
}

/// Spectrum of the configured drive: the coherent spectrum for a coherent
/// drive, otherwise the Husimi-averaged ensemble spectrum.
pub fn compute_spectrum(file: &RunFile) -> Result<SpectrumResult> {
    let engine = file.engine.build()?;
    let grid = file.time_grid()?;
    let q_range = file.harmonics.q_range()?;
    match file.drive {
        DriveSection::Coherent => {
            let amps = coherent_amplitudes(&engine, &file.field, &grid, q_range, file.harmonics.window)?;
            Ok(SpectrumResult {
                metadata: SpectrumMetadata {
                    drive: "coherent".into(),
                    engine: engine.name().into(),
                    grid,
                    kappa: file.field.kappa,
                    omega: file.field.omega,
                    quadrature: None,
                },
                lines: amps.iter().map(|a| SpectrumLine { q: a.q, value: a.value.norm_sqr() }).collect(),
            })
        }
        _ => {
            if file.harmonics.window != Window::None {
                return Err(invalid("harmonics.window", "windowing applies to coherent drives only"));
            }
            let sampler = HusimiSampler::new(file.driving_state()?, file.quadrature()?)?;
            spectrum_ensemble(&sampler, &engine, &file.field, &grid, q_range)
        }
    }
}

fn write_spectrum(file: &RunFile, out: &Path) -> Result<()> {
    let spectrum = compute_spectrum(file)?;
    create_dir(out)?;
    write_spectrum_csv(&out.join("spectrum.csv"), &spectrum)?;
    write_json(&out.join("spectrum.json"), &spectrum)
}

fn write_states(file: &RunFile, out: &Path) -> Result<()> {
    let state = file.state.as_ref().ok_or_else(|| invalid("state", "section is required for the state subcommand"))?;
    let engine = file.engine.build()?;
    let amps = coherent_amplitudes(
        &engine,
        &file.field,
        &file.time_grid()?,
        file.harmonics.q_range()?,
        file.harmonics.window,
    )?;
    create_dir(out)?;
    let mut reports: Vec<CoherenceReport> = Vec::new();
    for &q in &state.orders {
        let chi = amps.iter().find(|a| a.q == q).map(|a| a.value).unwrap_or_default();
        let n_max = state.n_max_for(chi.norm_sqr());
        let rho = match file.drive {
            DriveSection::Coherent => coherent_mode_state(q, chi, n_max)?,
            DriveSection::PhaseAveraged { .. } => {
                phase_averaged_mode_state(chi.norm(), q, state.n_phi_for(q, n_max), n_max)?
            }
            DriveSection::Fock { .. } => {
                return Err(invalid("drive.kind", "state export supports coherent and phase_averaged drives"));
            }
        };
        write_density_csv(&out.join(format!("rho_q{q}.csv")), &rho)?;
        reports.push(rho.coherence_report());
    }
    write_json(&out.join("coherence.json"), &reports)?;
    if let Some(h) = &file.husimi {
        let sampler = HusimiSampler::new(file.driving_state()?, file.quadrature.unwrap_or_default())?;
        write_husimi_csv(&out.join("husimi.csv"), &sampler.grid(h.extent, h.points))?;
    }
    Ok(())
}

fn run_scenario_command(file: RunFile, out: &Path) -> Result<i32> {
    let config = ScenarioConfig::new(file, out)?;
    let outcome = run_scenario(&config)?;
    create_dir(&config.out_dir)?;
    emit_report(&outcome, &config.out_dir)?;
    for r in &outcome.records {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{status} {} (tolerance {:e})", r.claim, r.tolerance);
        if !r.pass {
            warn!("{} failed: {:?} {}", r.claim, r.measured, r.error.as_deref().unwrap_or(""));
        }
    }
    Ok(if outcome.all_pass() { EXIT_OK } else { EXIT_EVIDENCE_FAILED })
}
