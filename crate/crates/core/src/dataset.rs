//! Time-course datasets and their conversion into regression problems.
//!
//! A [`TimeSeriesDataset`] holds a gene-by-time expression matrix with
//! explicit, possibly uneven, timestamps. [`build_problem`] turns it into a
//! response vector and candidate-predictor design matrix for one target gene
//! under a chosen [`FormulationSpec`]: the response is either the next
//! observation itself or the Euler finite-difference gradient, and the
//! candidate set optionally adds pairwise product columns and lagged copies.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gene-by-time expression matrix with explicit timestamps (minutes).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    times: Vec<f64>,
    values: DMatrix<f64>, // T x p, row = timestamp, column = gene
    names: Vec<String>,
}

impl TimeSeriesDataset {
    pub fn new(times: Vec<f64>, values: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if times.len() != values.nrows() {
            return Err(Error::InvalidDataset(format!(
                "{} timestamps but {} value rows",
                times.len(),
                values.nrows()
            )));
        }
        if values.ncols() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 genes, got {}",
                values.ncols()
            )));
        }
        if times.len() < 3 {
            return Err(Error::InvalidDataset(format!(
                "need at least 3 timestamps, got {}",
                times.len()
            )));
        }
        if names.len() != values.ncols() {
            return Err(Error::InvalidDataset(format!(
                "{} names but {} gene columns",
                names.len(),
                values.ncols()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDataset(
                "timestamps must be strictly increasing".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite entries".into()));
        }
        Ok(Self {
            times,
            values,
            names,
        })
    }

    /// Number of sampling times T.
    pub fn num_times(&self) -> usize {
        self.times.len()
    }

    /// Number of genes p.
    pub fn num_genes(&self) -> usize {
        self.values.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// True when all sampling intervals are equal (relative tolerance 1e-9).
    pub fn evenly_spaced(&self) -> bool {
        let dt0 = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt0).abs() <= 1e-9 * dt0.abs())
    }

    /// Load from CSV with header `time,<name1>,...,<namep>`.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || headers.get(0) != Some("time") {
            return Err(Error::InvalidDataset(
                "first CSV column must be `time`".into(),
            ));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let p = names.len();
        let mut times = Vec::new();
        let mut rows: Vec<f64> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != p + 1 {
                return Err(Error::InvalidDataset(format!(
                    "row has {} fields, expected {}",
                    record.len(),
                    p + 1
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidDataset(format!("bad number `{s}`")))
            };
            times.push(parse(record.get(0).unwrap())?);
            for field in record.iter().skip(1) {
                rows.push(parse(field)?);
            }
        }
        let values = DMatrix::from_row_slice(times.len(), p, &rows);
        Self::new(times, values, names)
    }

    /// Write the CSV format accepted by [`Self::from_csv_path`].
    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let mut header = vec!["time".to_string()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header)?;
        for (t, row) in self.times.iter().zip(self.values.row_iter()) {
            let mut rec = vec![format!("{t}")];
            rec.extend(row.iter().map(|v| format!("{v}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Which quantity is regressed on the previous time slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseKind {
    /// The next observation X_i(t+1).
    ConventionalDbn,
    /// The finite difference (X_i(t+1) - X_i(t)) / dt.
    EulerGradient,
}

/// Which candidate predictor columns are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorSet {
    /// One column per gene.
    Standard,
    /// Gene columns plus all unordered pair products, squares included.
    Product,
}

/// One formulation variant from the benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormulationSpec {
    pub response: ResponseKind,
    pub predictors: PredictorSet,
    pub lagged: bool,
    /// Lag in sample indices; only consulted when `lagged` is set.
    #[serde(default = "one")]
    pub lag_samples: usize,
}

fn one() -> usize {
    1
}

impl FormulationSpec {
    pub fn new(response: ResponseKind, predictors: PredictorSet, lag: Option<usize>) -> Self {
        Self {
            response,
            predictors,
            lagged: lag.is_some(),
            lag_samples: lag.unwrap_or(1),
        }
    }

    fn lag(&self) -> usize {
        if self.lagged {
            self.lag_samples
        } else {
            0
        }
    }

    fn validate(&self, num_times: usize) -> Result<()> {
        if self.lagged {
            if self.lag_samples < 1 {
                return Err(Error::InvalidFormulation("lag_samples must be >= 1".into()));
            }
            if self.lag_samples > num_times.saturating_sub(2) {
                return Err(Error::InvalidFormulation(format!(
                    "lag_samples {} too large for T = {num_times}",
                    self.lag_samples
                )));
            }
        }
        Ok(())
    }

    /// Short identifier used in file names and summary tables, e.g.
    /// `euler_std_lag2`.
    pub fn id(&self) -> String {
        let resp = match self.response {
            ResponseKind::ConventionalDbn => "cdbn",
            ResponseKind::EulerGradient => "euler",
        };
        let pred = match self.predictors {
            PredictorSet::Standard => "std",
            PredictorSet::Product => "prod",
        };
        if self.lagged {
            format!("{resp}_{pred}_lag{}", self.lag_samples)
        } else {
            format!("{resp}_{pred}_nolag")
        }
    }
}

impl fmt::Display for FormulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// What a design column measures: which source genes it implicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PredictorLabel {
    /// X_j(t)
    Gene { gene: usize },
    /// X_j(t) * X_k(t), j <= k
    Product { a: usize, b: usize },
    /// X_j(t - lag_samples)
    Lagged { gene: usize, lag_samples: usize },
}

impl PredictorLabel {
    /// Source genes implicated by this column (size 1 or 2).
    pub fn genes(&self) -> Vec<usize> {
        match *self {
            PredictorLabel::Gene { gene } | PredictorLabel::Lagged { gene, .. } => vec![gene],
            PredictorLabel::Product { a, b } => {
                if a == b {
                    vec![a]
                } else {
                    vec![a, b]
                }
            }
        }
    }

    pub fn implicates(&self, gene: usize) -> bool {
        match *self {
            PredictorLabel::Gene { gene: g } | PredictorLabel::Lagged { gene: g, .. } => g == gene,
            PredictorLabel::Product { a, b } => a == gene || b == gene,
        }
    }
}

impl fmt::Display for PredictorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PredictorLabel::Gene { gene } => write!(f, "x{gene}"),
            PredictorLabel::Product { a, b } => write!(f, "x{a}*x{b}"),
            PredictorLabel::Lagged { gene, lag_samples } => write!(f, "x{gene}[-{lag_samples}]"),
        }
    }
}

/// Response vector and full candidate design matrix for one target gene.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub target: usize,
    pub y: DVector<f64>,
    /// n x q full candidate matrix.
    pub design: DMatrix<f64>,
    pub labels: Vec<PredictorLabel>,
    /// Timestamp of the predictor slice for each regression row.
    pub row_times: Vec<f64>,
    /// Number of genes in the originating dataset.
    pub num_genes: usize,
}

impl RegressionProblem {
    pub fn num_rows(&self) -> usize {
        self.y.len()
    }

    pub fn num_candidates(&self) -> usize {
        self.design.ncols()
    }
}

/// Default lag rule: about a tenth of the sampling times, at least one sample.
pub fn default_lag(num_times: usize) -> usize {
    ((num_times as f64 / 10.0).round() as usize).max(1)
}

/// Response vector (and the per-row predictor timestamps) for one target.
///
/// Rows run over transitions t -> t+1; with a lag the first `lag_samples`
/// transitions are dropped so every row has its lagged predictors.
pub fn build_response(
    ds: &TimeSeriesDataset,
    target: usize,
    spec: &FormulationSpec,
) -> Result<(DVector<f64>, Vec<f64>)> {
    spec.validate(ds.num_times())?;
    if target >= ds.num_genes() {
        return Err(Error::InvalidFormulation(format!(
            "target {target} out of range for p = {}",
            ds.num_genes()
        )));
    }
    let lag = spec.lag();
    let t_count = ds.num_times();
    let n = t_count - 1 - lag;
    if n < 2 {
        return Err(Error::InsufficientData { rows: n });
    }
    let times = ds.times();
    let x = ds.values();
    let mut y = DVector::zeros(n);
    let mut row_times = Vec::with_capacity(n);
    for (row, t) in (lag..t_count - 1).enumerate() {
        let next = x[(t + 1, target)];
        y[row] = match spec.response {
            ResponseKind::ConventionalDbn => next,
            ResponseKind::EulerGradient => (next - x[(t, target)]) / (times[t + 1] - times[t]),
        };
        row_times.push(times[t]);
    }
    Ok((y, row_times))
}

/// Full candidate predictor matrix and its column labels.
pub fn build_predictors(
    ds: &TimeSeriesDataset,
    spec: &FormulationSpec,
) -> Result<(DMatrix<f64>, Vec<PredictorLabel>)> {
    spec.validate(ds.num_times())?;
    let lag = spec.lag();
    let p = ds.num_genes();
    let t_count = ds.num_times();
    let n = t_count - 1 - lag;
    if n < 2 {
        return Err(Error::InsufficientData { rows: n });
    }
    let x = ds.values();

    let mut columns: Vec<(PredictorLabel, Vec<f64>)> = Vec::new();
    let rows: Vec<usize> = (lag..t_count - 1).collect();
    for j in 0..p {
        let col = rows.iter().map(|&t| x[(t, j)]).collect();
        columns.push((PredictorLabel::Gene { gene: j }, col));
    }
    if spec.predictors == PredictorSet::Product {
        for a in 0..p {
            for b in a..p {
                let col = rows.iter().map(|&t| x[(t, a)] * x[(t, b)]).collect();
                columns.push((PredictorLabel::Product { a, b }, col));
            }
        }
    }
    if spec.lagged {
        for j in 0..p {
            let col = rows.iter().map(|&t| x[(t - lag, j)]).collect();
            columns.push((
                PredictorLabel::Lagged {
                    gene: j,
                    lag_samples: lag,
                },
                col,
            ));
        }
    }

    let q = columns.len();
    let mut design = DMatrix::zeros(n, q);
    let mut labels = Vec::with_capacity(q);
    for (c, (label, col)) in columns.into_iter().enumerate() {
        labels.push(label);
        for (r, v) in col.into_iter().enumerate() {
            design[(r, c)] = v;
        }
    }
    Ok((design, labels))
}

/// Response and predictors assembled together for one target gene.
pub fn build_problem(
    ds: &TimeSeriesDataset,
    target: usize,
    spec: &FormulationSpec,
) -> Result<RegressionProblem> {
    let (y, row_times) = build_response(ds, target, spec)?;
    let (design, labels) = build_predictors(ds, spec)?;
    debug_assert_eq!(y.len(), design.nrows());
    Ok(RegressionProblem {
        target,
        y,
        design,
        labels,
        row_times,
        num_genes: ds.num_genes(),
    })
}
