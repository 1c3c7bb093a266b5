//! Full benchmark pipeline with crash-isolated replicate-variant cells.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use netrecon_core::bayes::infer_edge_posterior;
use netrecon_core::dataset::TimeSeriesDataset;
use netrecon_core::metrics::{
    aur, benchmark_summary, write_aur_long_csv, BenchmarkSummary, ScoredEdgeSet,
};
use netrecon_core::sim::{generate_replicates, OdeNetworkModel};

use crate::config::BenchmarkConfig;
use crate::HarnessError;

/// One failed replicate-variant cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub variant: String,
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub summary: BenchmarkSummary,
    pub failures: Vec<CellFailure>,
    pub total_cells: usize,
    pub skipped_blankets: usize,
}

/// Run manifest: everything needed to reproduce or audit a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub seed: u64,
    pub replicates: usize,
    pub variants: Vec<String>,
    pub version: String,
}

pub fn write_truth_csv(model: &OdeNetworkModel, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["source", "target"])?;
    let mut edges = model.true_edges.clone();
    edges.sort();
    for [s, t] in edges {
        wtr.write_record([s.to_string(), t.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn config_hash(config: &BenchmarkConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&canonical);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Generate replicates once, run every variant on every replicate, write all
/// artifacts under `config.out`. Individual cell failures are recorded and do
/// not abort the run; more than 10% of failing cells is an error.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport, HarnessError> {
    config.validate()?;
    let model = OdeNetworkModel::from_json_path(&config.model)
        .map_err(|e| HarnessError::Config(format!("model file: {e}")))?;
    let variants = config.effective_variants();
    if variants.is_empty() {
        return Err(HarnessError::Config("variant list is empty".into()));
    }

    let out = &config.out;
    fs::create_dir_all(out.join("replicates"))?;
    let plan = config.sampling_plan();
    let datasets = generate_replicates(&model, &plan, config.replicates, config.step)?;
    for (r, ds) in datasets.iter().enumerate() {
        ds.to_csv_path(out.join(format!("replicates/rep_{r:04}.csv")))?;
    }
    write_truth_csv(&model, out.join("truth.csv"))?;

    let truth = model.truth_matrix();
    for variant in &variants {
        fs::create_dir_all(out.join("edges").join(variant.id()))?;
    }

    let cells: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..config.replicates).map(move |r| (v, r)))
        .collect();

    let run_cell = |&(v, r): &(usize, usize)| -> (usize, usize, Result<(f64, usize), String>) {
        let variant = &variants[v];
        let result = (|| {
            let (posterior, skipped) =
                infer_edge_posterior(&datasets[r], variant, config.d_max, config.g)?;
            posterior.to_csv_path(
                config
                    .out
                    .join("edges")
                    .join(variant.id())
                    .join(format!("rep_{r:04}.csv")),
            )?;
            let score = aur(&ScoredEdgeSet::new(posterior.probs, truth.clone()))?;
            Ok::<_, netrecon_core::Error>((score, skipped.len()))
        })()
        .map_err(|e| e.to_string());
        (v, r, result)
    };

    let results: Vec<_> = if config.workers == 1 {
        cells.iter().map(run_cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_cell).collect())
    };

    let mut aurs_by_variant: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut skipped_blankets = 0;
    let mut ordered = results;
    ordered.sort_by_key(|&(v, r, _)| (v, r));
    for (v, r, result) in ordered {
        match result {
            Ok((score, skipped)) => {
                skipped_blankets += skipped;
                aurs_by_variant
                    .entry(variants[v].id())
                    .or_default()
                    .push(score);
            }
            Err(error) => failures.push(CellFailure {
                variant: variants[v].id(),
                replicate: r,
                error,
            }),
        }
    }

    let summary = benchmark_summary(&aurs_by_variant);
    summary.to_csv_path(out.join("summary.csv"))?;
    write_aur_long_csv(out.join("aur_long.csv"), &aurs_by_variant)?;

    let manifest = RunManifest {
        config_sha256: config_hash(config),
        seed: config.seed,
        replicates: config.replicates,
        variants: variants.iter().map(|v| v.id()).collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let total_cells = cells.len();
    let report = BenchmarkReport {
        summary,
        failures: failures.clone(),
        total_cells,
        skipped_blankets,
    };
    fs::write(
        out.join("diagnostics.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    if failures.len() * 10 > total_cells {
        return Err(HarnessError::ExcessCellFailures {
            failed: failures.len(),
            total: total_cells,
        });
    }
    Ok(report)
}

/// Read an edge CSV (`source,target,probability`) back into a score matrix.
pub fn read_edge_csv(
    path: impl AsRef<Path>,
    num_genes: usize,
) -> Result<nalgebra::DMatrix<f64>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut m = nalgebra::DMatrix::zeros(num_genes, num_genes);
    for record in rdr.records() {
        let record = record?;
        let parse_idx = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("bad index `{s}`")))
        };
        let s = parse_idx(record.get(0).unwrap_or(""))?;
        let t = parse_idx(record.get(1).unwrap_or(""))?;
        let prob: f64 = record
            .get(2)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config("bad probability".into()))?;
        if s >= num_genes || t >= num_genes {
            return Err(HarnessError::Config("edge index out of range".into()));
        }
        m[(s, t)] = prob;
    }
    Ok(m)
}

/// Read a `source,target` truth CSV into a boolean adjacency matrix.
pub fn read_truth_csv(
    path: impl AsRef<Path>,
    num_genes: usize,
) -> Result<nalgebra::DMatrix<bool>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut m = nalgebra::DMatrix::from_element(num_genes, num_genes, false);
    for record in rdr.records() {
        let record = record?;
        let parse_idx = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| HarnessError::Config(format!("bad index `{s}`")))
        };
        let s = parse_idx(record.get(0).unwrap_or(""))?;
        let t = parse_idx(record.get(1).unwrap_or(""))?;
        if s >= num_genes || t >= num_genes {
            return Err(HarnessError::Config("truth index out of range".into()));
        }
        m[(s, t)] = true;
    }
    Ok(m)
}

/// Number of genes implied by a truth CSV (max index + 1).
pub fn truth_csv_genes(path: impl AsRef<Path>) -> Result<usize, HarnessError> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    let mut max = 0;
    for record in rdr.records() {
        let record = record?;
        for field in record.iter().take(2) {
            let idx: usize = field
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad index `{field}`")))?;
            max = max.max(idx);
        }
    }
    Ok(max + 1)
}

/// Grow-shrink over one dataset, written in the same edge CSV format with a
/// 0/1 membership flag in the probability column.
pub fn gs_infer_to_csv(
    ds: &TimeSeriesDataset,
    spec: &netrecon_core::dataset::FormulationSpec,
    alpha: f64,
    path: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    let m = netrecon_core::gs::gs_edge_matrix(ds, spec, alpha)?;
    let posterior = netrecon_core::bayes::EdgePosterior {
        probs: m,
        formulation: *spec,
        d_max: ds.num_genes(),
    };
    posterior.to_csv_path(path)?;
    Ok(())
}
