//! Command-line driver: generate weight-matrix ensembles and turn them
//! into the analysis tables.
//!
//! Exit codes: 0 success, 2 missing input data, 3 diverged runs.

use clap::{Args, Parser, Subcommand};
use pigmm::dataio::read_store;
use pigmm::pipeline::{
    analyze_store, cmd_analyze, cmd_generate, cmd_report, write_deviation_tables,
    write_invariant_tables, write_param_table, write_prediction_tables, write_wasserstein_table,
    ExperimentConfig,
};
use pigmm::{Error, Scheme};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pigmm", about = "Permutation-invariant Gaussian statistics of weight ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ConfigOverrides {
    /// JSON config file; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// gaussian or uniform (repeatable)
    #[arg(long)]
    scheme: Vec<Scheme>,
    /// L2 loss weight; 0 disables regularisation
    #[arg(long)]
    l2: Option<f64>,
    /// central-layer width variant (repeatable)
    #[arg(long)]
    width: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(runs) = self.runs {
            cfg.runs = runs;
        }
        if let Some(epochs) = self.epochs {
            cfg.epochs = epochs;
        }
        if !self.scheme.is_empty() {
            cfg.schemes = self.scheme.clone();
        }
        if let Some(l2) = self.l2 {
            cfg.l2_lambda = l2;
        }
        if !self.width.is_empty() {
            cfg.widths = self.width.clone();
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(dir) = &self.mnist_dir {
            cfg.mnist_dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct StoreArgs {
    /// snapshot store produced by `generate`
    #[arg(long)]
    store: PathBuf,
    /// output directory for the tables
    #[arg(long, default_value = "out/analysis")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured ensembles and write snapshot stores
    Generate(ConfigOverrides),
    /// Per-epoch statistics of all 52 invariants
    Invariants(StoreArgs),
    /// Fit the 13 model parameters per (layer, epoch)
    Fit(StoreArgs),
    /// Predict cubic/quartic invariants from the fitted models
    Predict {
        #[command(flatten)]
        store: StoreArgs,
        /// invariant ids to predict (defaults to all cubic/quartic)
        #[arg(long)]
        ids: Vec<usize>,
    },
    /// Deviations from the initialisation reference and from the fitted
    /// model predictions
    Deviations(StoreArgs),
    /// Distance of the fitted models from the scheme's reference point
    Wasserstein(StoreArgs),
    /// Full analysis: everything the subcommands above produce
    Analyze {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        ids: Vec<usize>,
    },
    /// Bundle an analysis directory into report/ with a summary
    Report {
        /// analysis directory produced by `analyze`
        #[arg(long, default_value = "out/analysis")]
        dir: PathBuf,
        /// matrix dimension for the reference tables
        #[arg(long, default_value_t = 10)]
        dim: usize,
        /// ensemble size for the reference tables
        #[arg(long, default_value_t = 20)]
        runs: usize,
    },
}

fn default_ids(ids: &[usize]) -> Vec<usize> {
    if ids.is_empty() {
        pigmm::invariants::cubic_quartic_ids()
    } else {
        ids.to_vec()
    }
}

fn run() -> Result<(), (Error, u8)> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(overrides) => {
            let cfg = overrides.resolve().map_err(|e| (e, 1))?;
            let outcome = cmd_generate(&cfg).map_err(|e| match e {
                Error::Io(_) => (e, 2),
                other => (other, 1),
            })?;
            if !outcome.diverged.is_empty() {
                for (store, runs) in &outcome.diverged {
                    eprintln!("diverged runs in {store}: {runs:?}");
                }
                return Err((Error::Argument("some runs diverged".into()), 3));
            }
            Ok(())
        }
        Command::Invariants(args) => with_analysis(&args, write_invariant_tables),
        Command::Fit(args) => with_analysis(&args, write_param_table),
        Command::Predict { store, ids } => {
            let ids = default_ids(&ids);
            with_analysis(&store, |a, out| write_prediction_tables(a, &ids, out))
        }
        Command::Deviations(args) => with_analysis(&args, |a, out| {
            write_deviation_tables(a, out)?;
            let ids = pigmm::invariants::cubic_quartic_ids();
            write_prediction_tables(a, &ids, out)
        }),
        Command::Wasserstein(args) => with_analysis(&args, write_wasserstein_table),
        Command::Analyze { store, ids } => {
            let ids = default_ids(&ids);
            cmd_analyze(&store.store, &store.out, &ids).map_err(classify_error)
        }
        Command::Report { dir, dim, runs } => {
            let report = cmd_report(&dir, dim, runs).map_err(classify_error)?;
            println!("report written to {}", report.display());
            Ok(())
        }
    }
}

fn classify_error(e: Error) -> (Error, u8) {
    match e {
        Error::Io(_) => (e, 2),
        other => (other, 1),
    }
}

fn with_analysis<F>(args: &StoreArgs, f: F) -> Result<(), (Error, u8)>
where
    F: FnOnce(&pigmm::pipeline::StoreAnalysis, &std::path::Path) -> Result<(), Error>,
{
    let store = read_store(&args.store).map_err(classify_error)?;
    std::fs::create_dir_all(&args.out).map_err(|e| (Error::Io(e), 1))?;
    let analysis = analyze_store(&store).map_err(classify_error)?;
    f(&analysis, &args.out).map_err(classify_error)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((e, code)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
