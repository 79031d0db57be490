//! The `fda` command line: config-driven retrieval evaluation,
//! threshold sweeps, mask export, and embedding-store utilities.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use fda_cli::config::RunConfig;
use fda_cli::runner::{
    export_masks, inspect_store, pack_store, run_eval, tau_sweep, HarnessError,
};

#[derive(Parser)]
#[command(name = "fda", version, about = "Motion-masked text-video retrieval toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full evaluation and write report.json
    Eval {
        /// Path to the run configuration JSON
        #[arg(long)]
        config: PathBuf,
    },
    /// Rerun the evaluation across thresholds and write sweep.csv
    Sweep {
        /// Path to the run configuration JSON
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated binarization thresholds, e.g. 0,1,25,100,255
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<u8>,
    },
    /// Export one video's dynamic-region masks as PGM files
    Masks {
        /// Path to the run configuration JSON
        #[arg(long)]
        config: PathBuf,
        /// Video id from the manifest
        #[arg(long)]
        video: String,
    },
    /// Build an embedding store file from JSON input
    PackStore {
        /// JSON file of the form {"dim": D, "records": {"id": [floats]}}
        #[arg(long)]
        input: PathBuf,
        /// Store file to create
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the header and record norms of an embedding store file
    InspectStore {
        /// Store file to read
        #[arg(long)]
        store: PathBuf,
    },
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Eval { config } => {
            let config = RunConfig::load(&config)?;
            let (report, path) = run_eval(&config)?;
            print!("{}", summarize(&report));
            println!("report written to {}", path.display());
        }
        Command::Sweep { config, taus } => {
            let config = RunConfig::load(&config)?;
            let (rows, path) = tau_sweep(&config, &taus)?;
            println!("sweep written to {} ({} rows)", path.display(), rows.len());
        }
        Command::Masks { config, video } => {
            let config = RunConfig::load(&config)?;
            let paths = export_masks(&config, &video)?;
            let dir = config.output_dir.join("masks");
            println!("wrote {} masks to {}", paths.len(), dir.display());
        }
        Command::PackStore { input, output } => {
            let (count, dim) = pack_store(&input, &output)?;
            println!(
                "packed {count} records (dim {dim}) into {}",
                output.display()
            );
        }
        Command::InspectStore { store } => {
            print!("{}", inspect_store(&store)?);
        }
    }
    Ok(())
}

fn summarize(report: &fda_core::RetrievalReport) -> String {
    let line = |name: &str, d: &fda_core::DirectionReport| {
        format!(
            "{name}  r@1 {:.1}  r@5 {:.1}  r@10 {:.1}  mdr {}  mnr {:.1}\n",
            d.r_at_1, d.r_at_5, d.r_at_10, d.median_rank, d.mean_rank
        )
    };
    format!(
        "{}{}meta sum {:.1}\n",
        line("t2v", &report.t2v),
        line("v2t", &report.v2t),
        report.meta_sum
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // Every harness error spells out its cause chain in Display.
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
