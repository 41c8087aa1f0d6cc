use std::path::PathBuf;
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use debroglie_cli::config::{load_config_text, parse_length_flag, parse_scenario};
use debroglie_cli::runner::{
    run_envelope_scan, run_fit, run_fringe_scan, run_ghz_noon, run_hom_scan, FitKind, RunOptions,
};
use debroglie_cli::CliError;

/// Desk-scale simulator of a two-photon interferometer: entangled-pair,
/// single-photon, and N-photon fringes, coincidence dips, and coherence
/// envelopes, with Poisson counting noise and least-squares fits.
#[derive(Parser)]
#[command(name = "debroglie", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the interferometer delay and record fringes in every channel.
    FringeScan(ScanArgs),
    /// Scan the source-side splitter delay and record the coincidence dip.
    HomScan(ScanArgs),
    /// Sample fringe bursts over a wide delay range and fit the coherence envelope.
    EnvelopeScan(ScanArgs),
    /// Send an N-photon superposition through and fit the fringe at 1/N the period.
    GhzNoon(GhzArgs),
    /// Fit a fringe, envelope, or dip model to a column of an existing CSV.
    Fit(FitArgs),
}

#[derive(Args)]
struct ScanArgs {
    /// Config file path or bundled name (defaults: paper_dl1_0; hom-scan uses paper_hom).
    #[arg(long)]
    config: Option<String>,
    /// Directory the CSV and report files are written into.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the RNG seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scan step, e.g. "10 nm".
    #[arg(long)]
    grid_step: Option<String>,
    /// Write expectation values only, no Poisson counting noise.
    #[arg(long)]
    no_noise: bool,
}

#[derive(Args)]
struct GhzArgs {
    /// Photon number of the superposition.
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    scan: ScanArgs,
}

#[derive(Args)]
struct FitArgs {
    /// CSV file written by one of the scan commands.
    #[arg(long)]
    input: PathBuf,
    /// Model to fit.
    #[arg(long, value_enum)]
    model: FitModelArg,
    /// Column to fit (default: the second column). Count columns get
    /// Poisson weighting.
    #[arg(long)]
    column: Option<String>,
    /// Directory the fit report is written into.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModelArg {
    Fringe,
    Envelope,
    HomDip,
}

fn options(args: &ScanArgs, default_config: &str) -> Result<(String, RunOptions), CliError> {
    let label = args.config.clone().unwrap_or_else(|| default_config.to_string());
    let grid_step_um = args
        .grid_step
        .as_deref()
        .map(parse_length_flag)
        .transpose()?;
    Ok((
        label.clone(),
        RunOptions {
            out_dir: args.out.clone(),
            config_label: label,
            seed: args.seed,
            grid_step_um,
            no_noise: args.no_noise,
        },
    ))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::FringeScan(args) => {
            let (label, opts) = options(&args, "paper_dl1_0")?;
            let cfg = parse_scenario(&load_config_text(&label)?)?;
            run_fringe_scan(&cfg, &opts)
        }
        Command::HomScan(args) => {
            let (label, opts) = options(&args, "paper_hom")?;
            let cfg = parse_scenario(&load_config_text(&label)?)?;
            run_hom_scan(&cfg, &opts)
        }
        Command::EnvelopeScan(args) => {
            let (label, opts) = options(&args, "paper_dl1_0")?;
            let cfg = parse_scenario(&load_config_text(&label)?)?;
            run_envelope_scan(&cfg, &opts)
        }
        Command::GhzNoon(args) => {
            let (label, opts) = options(&args.scan, "paper_dl1_0")?;
            let cfg = parse_scenario(&load_config_text(&label)?)?;
            run_ghz_noon(&cfg, args.n, &opts)
        }
        Command::Fit(args) => {
            let opts = RunOptions {
                out_dir: args.out.clone(),
                config_label: String::new(),
                seed: None,
                grid_step_um: None,
                no_noise: false,
            };
            let kind = match args.model {
                FitModelArg::Fringe => FitKind::Fringe,
                FitModelArg::Envelope => FitKind::Envelope,
                FitModelArg::HomDip => FitKind::HomDip,
            };
            run_fit(&args.input, kind, args.column.as_deref(), &opts)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            exit(code);
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code());
        }
    }
}
