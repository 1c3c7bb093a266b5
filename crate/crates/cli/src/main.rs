use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netrecon_cli::harness::{
    gs_infer_to_csv, read_edge_csv, read_truth_csv, run_benchmark, truth_csv_genes, write_truth_csv,
};
use netrecon_cli::{equivalence_check, BenchmarkConfig, HarnessError};
use netrecon_core::bayes::{infer_edge_posterior, GPolicy};
use netrecon_core::dataset::{FormulationSpec, PredictorSet, ResponseKind, TimeSeriesDataset};
use netrecon_core::metrics::{aur, ScoredEdgeSet};
use netrecon_core::sim::{generate_replicates, OdeNetworkModel, SamplingPlan, DEFAULT_STEP};

#[derive(Parser)]
#[command(
    name = "netrecon",
    about = "Network structure reconstruction from time-course data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResponseArg {
    Euler,
    Cdbn,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictorArg {
    Standard,
    Product,
}

#[derive(Args)]
struct FormulationArgs {
    /// Response formulation
    #[arg(long, value_enum, default_value = "euler")]
    response: ResponseArg,
    /// Candidate predictor set
    #[arg(long, value_enum, default_value = "standard")]
    predictors: PredictorArg,
    /// Add lagged predictor copies with this lag (in samples)
    #[arg(long)]
    lag: Option<usize>,
}

impl FormulationArgs {
    fn spec(&self) -> FormulationSpec {
        FormulationSpec::new(
            match self.response {
                ResponseArg::Euler => ResponseKind::EulerGradient,
                ResponseArg::Cdbn => ResponseKind::ConventionalDbn,
            },
            match self.predictors {
                PredictorArg::Standard => PredictorSet::Standard,
                PredictorArg::Product => PredictorSet::Product,
            },
            self.lag,
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate an ODE network model and write noisy replicate CSVs
    Simulate {
        /// Model JSON file
        #[arg(long)]
        model: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Sampling times in minutes (comma separated); default: the uneven
        /// 19-point grid
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long, default_value_t = 20.0)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
    },
    /// Exact Bayesian model averaging on one dataset CSV
    Infer {
        #[arg(long)]
        data: PathBuf,
        /// Output edge CSV (source,target,probability)
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        formulation: FormulationArgs,
        #[arg(long, default_value_t = 2)]
        d_max: usize,
        /// Fixed g; default is g = regression row count
        #[arg(long)]
        g: Option<f64>,
        /// Optional diagnostics JSON listing skipped blankets
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Grow-shrink baseline on one dataset CSV (0/1 membership flags)
    GsInfer {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        formulation: FormulationArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// AUR of an edge CSV against a truth CSV
    Evaluate {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = false)]
        include_self_loops: bool,
    },
    /// Full pipeline: simulate, infer every variant, evaluate, summarize
    Benchmark {
        /// Benchmark config JSON
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's worker count
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Equal-spacing equivalence report (requires an even sampling plan)
    EquivalenceCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> Result<(), HarnessError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            model,
            out,
            times,
            snr,
            seed,
            replicates,
            step,
        } => {
            let model = OdeNetworkModel::from_json_path(&model)
                .map_err(|e| HarnessError::Config(format!("model file: {e}")))?;
            let plan = SamplingPlan {
                times: times.unwrap_or_else(SamplingPlan::default_uneven_times),
                snr,
                seed,
            };
            std::fs::create_dir_all(&out)?;
            let datasets = generate_replicates(&model, &plan, replicates, step)?;
            for (r, ds) in datasets.iter().enumerate() {
                ds.to_csv_path(out.join(format!("rep_{r:04}.csv")))?;
            }
            write_truth_csv(&model, out.join("truth.csv"))?;
            println!(
                "wrote {} replicate(s) and truth.csv to {}",
                datasets.len(),
                out.display()
            );
        }
        Command::Infer {
            data,
            out,
            formulation,
            d_max,
            g,
            diagnostics,
        } => {
            let ds = TimeSeriesDataset::from_csv_path(&data)?;
            let g_policy = match g {
                Some(value) => GPolicy::Fixed(value),
                None => GPolicy::RowCount,
            };
            let (posterior, skipped) =
                infer_edge_posterior(&ds, &formulation.spec(), d_max, g_policy)?;
            posterior.to_csv_path(&out)?;
            if let Some(path) = diagnostics {
                std::fs::write(path, serde_json::to_string_pretty(&skipped)?)?;
            }
            println!(
                "wrote {} ({} skipped blankets)",
                out.display(),
                skipped.len()
            );
        }
        Command::GsInfer {
            data,
            out,
            formulation,
            alpha,
        } => {
            let ds = TimeSeriesDataset::from_csv_path(&data)?;
            gs_infer_to_csv(&ds, &formulation.spec(), alpha, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Evaluate {
            edges,
            truth,
            include_self_loops,
        } => {
            let p = truth_csv_genes(&truth)?;
            let scores = read_edge_csv(&edges, p)?;
            let truth = read_truth_csv(&truth, p)?;
            let mut set = ScoredEdgeSet::new(scores, truth);
            set.include_self_loops = include_self_loops;
            println!("AUR = {}", aur(&set)?);
        }
        Command::Benchmark {
            config,
            out,
            seed,
            workers,
        } => {
            let mut config = BenchmarkConfig::from_json_path(&config)?;
            if let Some(out) = out {
                config.out = out;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(workers) = workers {
                config.workers = workers;
            }
            let report = run_benchmark(&config)?;
            for v in &report.summary.variants {
                println!(
                    "{}: median {:.4} (q1 {:.4}, q3 {:.4}, n {})",
                    v.variant, v.median, v.q1, v.q3, v.n
                );
            }
            if !report.failures.is_empty() {
                eprintln!(
                    "{} of {} cells failed",
                    report.failures.len(),
                    report.total_cells
                );
            }
        }
        Command::EquivalenceCheck { config, out } => {
            let mut config = BenchmarkConfig::from_json_path(&config)?;
            if let Some(out) = out {
                config.out = out;
            }
            let report = equivalence_check(&config)?;
            println!(
                "replicates: {}\nmax row identity error: {:.3e}\nGS disagreement fraction: {:.3}",
                report.replicates, report.max_row_identity_error, report.gs_disagreement_fraction
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
