//! `orfh`: generate orbital-rotated Hubbard benchmark instances and run the
//! solver suite on them. Every run writes its reports plus a `manifest.json`
//! from which `orfh replay` regenerates them byte for byte.

mod commands;
mod instance;
mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use commands::{
    AnalyzeArgs, BetheArgs, Context, DmrgArgs, ExactArgs, GenerateArgs, GroupArgs, HfArgs, IngestArgs, ShotsArgs,
    VqeArgs,
};
use output::{FileHash, Format, Manifest, OutputDir};

const THREADS_VAR: &str = "ORFH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "orfh", version, about = "Orbital-rotated Fermi-Hubbard benchmark generator and solvers")]
#[command(after_help = "Threads: set ORFH_THREADS (default: all available cores).")]
struct Cli {
    /// Seed for rotations, randomized starts and initial states
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Generate an FH or ORFH instance: tensors, Pauli sum and descriptor
    Generate(GenerateArgs),
    /// Convert an FCIDUMP file to tensors and a Pauli sum
    Ingest(IngestArgs),
    /// Pauli term counts and coefficient norms
    Analyze(AnalyzeArgs),
    /// Generalized Hartree-Fock energies and correlation ratios
    Hf(HfArgs),
    /// Lowest eigenpairs by exact diagonalization
    Exact(ExactArgs),
    /// Finite-ring and bulk Bethe-ansatz energies at half filling
    Bethe(BetheArgs),
    /// Measurement grouping (qubitwise, general commuting, basis rotation)
    Group(GroupArgs),
    /// Shot counts to reach a target precision on the exact ground state
    Shots(ShotsArgs),
    /// VQE trajectories for the four optimizers
    Vqe(VqeArgs),
    /// DMRG energies and errors across bond dimensions
    Dmrg(DmrgArgs),
    /// Re-run the command recorded in a manifest and compare output hashes
    Replay {
        /// manifest.json of the run to regenerate
        manifest: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Ingest(_) => "ingest",
            Command::Analyze(_) => "analyze",
            Command::Hf(_) => "hf",
            Command::Exact(_) => "exact",
            Command::Bethe(_) => "bethe",
            Command::Group(_) => "group",
            Command::Shots(_) => "shots",
            Command::Vqe(_) => "vqe",
            Command::Dmrg(_) => "dmrg",
            Command::Replay { .. } => "replay",
        }
    }
}

/// A failure with a machine-readable kind.
#[derive(Debug)]
pub struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            kind: "invalid_input",
            message: message.into(),
        }
    }

    pub fn capability(message: impl Into<String>) -> Self {
        Self {
            kind: "capability",
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.kind;
        }
        if let Some(e) = cause.downcast_ref::<orfh_core::Error>() {
            return match e {
                orfh_core::Error::WidthTooLarge { .. } => "capability",
                orfh_core::Error::NoConvergence { .. } => "no_convergence",
                orfh_core::Error::Io(_) => "io",
                _ => "invalid_input",
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "internal"
}

/// Arguments after the program name with `--out` removed.
fn replayable_argv(args: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        let s = a.to_string_lossy().into_owned();
        if skip {
            skip = false;
        } else if s == "--out" {
            skip = true;
        } else if !s.starts_with("--out=") {
            out.push(s);
        }
    }
    out
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var(THREADS_VAR) {
        let n: usize = value
            .parse()
            .map_err(|_| Failure::invalid(format!("{THREADS_VAR} must be a positive integer, got '{value}'")))?;
        if n == 0 {
            bail!(Failure::invalid(format!("{THREADS_VAR} must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn execute(cli: &Cli, argv: Vec<String>) -> Result<Manifest> {
    let mut ctx = Context {
        seed: cli.seed,
        format: cli.format,
        out: OutputDir::create(&cli.out)?,
        inputs: Vec::new(),
    };
    match &cli.command {
        Command::Generate(a) => commands::generate(a, &mut ctx)?,
        Command::Ingest(a) => commands::ingest(a, &mut ctx)?,
        Command::Analyze(a) => commands::analyze(a, &mut ctx)?,
        Command::Hf(a) => commands::hf(a, &mut ctx)?,
        Command::Exact(a) => commands::exact(a, &mut ctx)?,
        Command::Bethe(a) => commands::bethe(a, &mut ctx)?,
        Command::Group(a) => commands::group(a, &mut ctx)?,
        Command::Shots(a) => commands::shots(a, &mut ctx)?,
        Command::Vqe(a) => commands::vqe(a, &mut ctx)?,
        Command::Dmrg(a) => commands::dmrg(a, &mut ctx)?,
        Command::Replay { .. } => unreachable!("replay is dispatched separately"),
    }
    let manifest = Manifest {
        tool: "orfh".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        prng: orfh_core::model::PRNG_ID.into(),
        command: cli.command.name().into(),
        argv,
        config: json!({
            "seed": cli.seed,
            "format": cli.format,
            "args": serde_json::to_value(&cli.command)?,
        }),
        inputs: ctx.inputs,
        outputs: Vec::new(),
    };
    ctx.out.finish(manifest)
}

fn replay(manifest_path: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let recorded: Manifest = serde_json::from_str(&text)?;
    for input in &recorded.inputs {
        let now = FileHash::of_file(Path::new(&input.path))?;
        if now.sha256 != input.sha256 {
            bail!(Failure {
                kind: "input_changed",
                message: format!("input {} no longer matches the manifest", input.path),
            });
        }
    }
    let mut args: Vec<OsString> = vec!["orfh".into()];
    args.extend(recorded.argv.iter().map(OsString::from));
    args.push("--out".into());
    args.push(out.as_os_str().to_owned());
    let cli = Cli::try_parse_from(&args).map_err(|e| Failure::invalid(format!("manifest argv: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        bail!(Failure::invalid("a manifest cannot replay another replay"));
    }
    let fresh = execute(&cli, recorded.argv.clone())?;
    let mismatched: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|o| !fresh.outputs.contains(o))
        .map(|o| o.path.as_str())
        .collect();
    eprintln!("{}", json!({ "replay": { "identical": mismatched.is_empty(), "mismatched": mismatched } }));
    if !mismatched.is_empty() {
        bail!(Failure {
            kind: "replay_mismatch",
            message: format!("regenerated files differ: {}", mismatched.join(", ")),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let cli = Cli::parse_from(&raw);
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Replay { manifest } => replay(manifest, &cli.out),
        _ => execute(&cli, replayable_argv(&raw[1..])).map(|_| ()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = json!({ "error": { "kind": error_kind(&err), "message": format!("{err:#}") } });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_flag_is_stripped() {
        let args: Vec<OsString> = ["exact", "--out", "x", "--sites", "2", "--out=y"].iter().map(OsString::from).collect();
        assert_eq!(replayable_argv(&args), vec!["exact", "--sites", "2"]);
    }

    #[test]
    fn core_errors_are_classified() {
        let err = anyhow::Error::new(orfh_core::Error::WidthTooLarge { width: 15, limit: 14 });
        assert_eq!(error_kind(&err), "capability");
        let err = anyhow::Error::new(Failure::invalid("x")).context("outer");
        assert_eq!(error_kind(&err), "invalid_input");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
