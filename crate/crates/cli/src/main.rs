//! `congruence` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use congruence::doc::{self, Document};
use congruence::dvr::{format_rat, Prime};
use congruence::hecke::localize_and_export;
use congruence::suite::{run_case_with, run_directory, Check, ErrorRecord, Report};
use congruence::synth::{synth, SynthOptions};
use congruence::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "congruence", version, about = "Congruence modules and congruence ideals over Z_(p)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit timings so reports are byte-identical across runs.
    #[arg(long, global = true)]
    mask_timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// η exponents by both routes, plus congruence modules of any listed modules.
    Eta { input: PathBuf },
    /// Congruence detection with witness, checked against the brute-force oracle.
    Detect { input: PathBuf },
    /// Pairing hypotheses, transferred exponents and the δ-pairing.
    VerifyPairing { input: PathBuf },
    /// Cotangent order of a presented ring and the surjection inequality.
    Cotangent { input: PathBuf },
    /// Generate reproducible fixtures into a directory.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        rank_bound: usize,
        /// Fixed prime; drawn from 2..13 when omitted.
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        dir: PathBuf,
    },
    /// Modular symbols for Γ0(N): localize at a rational eigensystem and export.
    Msym {
        #[arg(long)]
        level: u64,
        #[arg(long)]
        prime: u64,
        /// Index of the rational eigensystem to localize at.
        #[arg(long, default_value_t = 0)]
        system: usize,
        /// Comma-separated Hecke primes; defaults to the Sturm bound.
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
        /// Where to write the exported bundle document.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Check every document in a directory.
    RunSuite { dir: PathBuf },
}

fn single(path: &Path, check: Check) -> Result<Report> {
    let d = doc::read(path)?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Report::new(vec![run_case_with(&id, &d, check)]))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn msym(level: u64, prime: u64, system: usize, primes: Option<Vec<u64>>, bundle: Option<&Path>) -> Result<Report> {
    let (b, systems) = localize_and_export(level, Prime::new(prime)?, system, primes)?;
    let d = Document::Bundle(Box::new(b));
    if let Some(path) = bundle {
        write(path, &doc::to_string(&d))?;
    }
    let mut case = run_case_with(&format!("level-{level}-p{prime}-system-{system}"), &d, Check::All);
    let table: Vec<_> = systems
        .iter()
        .map(|s| {
            json!({
                "dimension": s.dimension(),
                "field": s.field,
                "primes": s.primes,
                "values": s.values.iter().map(|v| [format_rat(&v.u), format_rat(&v.v)]).collect::<Vec<_>>(),
                "unsupported": s.unsupported,
            })
        })
        .collect();
    case.results.insert("eigensystems".into(), table.into());
    Ok(Report::new(vec![case]))
}

/// The rendered output and the exit status it carries.
fn run(cli: &Cli) -> Result<(String, u8)> {
    let mut report = match &cli.command {
        Command::Eta { input } => single(input, Check::Eta)?,
        Command::Detect { input } => single(input, Check::Detect)?,
        Command::VerifyPairing { input } => single(input, Check::Pairing)?,
        Command::Cotangent { input } => single(input, Check::Cotangent)?,
        Command::RunSuite { dir } => run_directory(dir)?,
        Command::Msym { level, prime, system, primes, bundle } => {
            msym(*level, *prime, *system, primes.clone(), bundle.as_deref())?
        }
        Command::Synth { seed, rank_bound, prime, count, dir } => {
            let docs = synth(&SynthOptions { seed: *seed, rank_bound: *rank_bound, prime: *prime, count: *count })?;
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            for (name, d) in &docs {
                write(&dir.join(format!("{name}.json")), &doc::to_string(d))?;
            }
            let summary = json!({ "written": docs.len(), "seed": seed });
            return Ok((format!("{}\n", serde_json::to_string_pretty(&summary).expect("json")), 0));
        }
    };
    if cli.mask_timings {
        report.mask_timings();
    }
    Ok((report.to_json(), report.exit_code() as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, code) = match run(&cli) {
        Ok(out) => out,
        Err(e) => {
            let record = json!({ "error": ErrorRecord::from(&e) });
            (format!("{}\n", serde_json::to_string_pretty(&record).expect("json")), e.exit_code() as u8)
        }
    };
    let written = match &cli.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    match written {
        Ok(()) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
