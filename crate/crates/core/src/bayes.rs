//! Exact Bayesian model averaging over Markov blankets.
//!
//! Each target gene is scored against every candidate-column subset up to a
//! maximum in-degree, using the closed-form g-prior marginal likelihood and a
//! network prior uniform over subset size. Posterior edge probabilities are
//! the normalized mass of all blankets whose columns implicate the source
//! gene. Also houses the coefficient-scale reparameterization linking the
//! Euler gradient formulation to the conventional next-value formulation
//! under equal sampling intervals.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::{FormulationSpec, RegressionProblem};
use crate::error::{Error, Result};

/// Relative tolerance for rank decisions in the design decomposition.
const RANK_RTOL: f64 = 1e-10;

/// Hard cap on the number of enumerated blankets per target.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// How the g-prior scale is chosen per regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy", content = "value")]
pub enum GPolicy {
    /// g equals the regression row count n (unit-information prior).
    RowCount,
    /// A fixed, explicitly chosen g.
    Fixed(f64),
}

impl GPolicy {
    pub fn value(&self, rows: usize) -> f64 {
        match *self {
            GPolicy::RowCount => rows as f64,
            GPolicy::Fixed(g) => g,
        }
    }
}

impl Default for GPolicy {
    fn default() -> Self {
        GPolicy::RowCount
    }
}

/// In-degree-capped uniform-over-size network prior (per-target factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkPrior {
    /// Maximum permissible blanket size.
    pub d_max: usize,
    /// Candidate pool size the prior normalizes over.
    pub candidates: usize,
}

impl NetworkPrior {
    pub fn new(d_max: usize, candidates: usize) -> Result<Self> {
        if d_max > candidates {
            return Err(Error::InvalidFormulation(format!(
                "d_max {d_max} exceeds candidate count {candidates}"
            )));
        }
        Ok(Self { d_max, candidates })
    }

    /// log prior mass of a blanket of size `m`: -log C(q, m), or -inf above
    /// the in-degree cap.
    pub fn log_prior(&self, m: usize) -> f64 {
        if m > self.d_max || m > self.candidates {
            f64::NEG_INFINITY
        } else {
            -ln_binomial(self.candidates, m)
        }
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Closed-form g-prior log marginal likelihood (up to the blanket-independent
/// constant):
///
/// ```text
/// -(m/2) log(1+g) - (n/2) log( y'y - g/(1+g) * yhat'yhat )
/// ```
///
/// with `yhat` the orthogonal projection of `y` onto the column space of `d`,
/// computed by column-pivoted QR rather than explicit inversion. `m = 0`
/// means the empty design (`yhat = 0`).
pub fn log_marginal_likelihood(y: &DVector<f64>, d: &DMatrix<f64>, g: f64) -> Result<f64> {
    log_marginal_likelihood_labeled(y, d, g, &[])
}

fn log_marginal_likelihood_labeled(
    y: &DVector<f64>,
    d: &DMatrix<f64>,
    g: f64,
    blanket: &[usize],
) -> Result<f64> {
    let n = y.len();
    let m = d.ncols();
    assert!(n >= 2, "need at least 2 regression rows");
    assert!(g > 0.0, "g must be positive");
    assert!(m == 0 || d.nrows() == n, "design/response row mismatch");

    let yty = y.dot(y);
    let proj_sq = if m == 0 {
        0.0
    } else {
        let qr = d.clone().col_piv_qr();
        let r = qr.r();
        let rank_tol = RANK_RTOL
            * (0..r.nrows().min(r.ncols()))
                .map(|i| r[(i, i)].abs())
                .fold(0.0, f64::max);
        let rank = (0..r.nrows().min(r.ncols()))
            .take_while(|&i| r[(i, i)].abs() > rank_tol)
            .count();
        if rank < m {
            return Err(Error::CollinearDesign {
                blanket: blanket.to_vec(),
                rank,
                cols: m,
            });
        }
        let qty = qr.q().transpose() * y;
        qty.dot(&qty)
    };

    let shrink = g / (1.0 + g);
    let residual = yty - shrink * proj_sq;
    if residual <= RANK_RTOL * yty.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateResidual {
            blanket: blanket.to_vec(),
            value: residual,
        });
    }
    Ok(-(m as f64 / 2.0) * (1.0 + g).ln() - (n as f64 / 2.0) * residual.ln())
}

/// Number of blankets `enumerate_blankets` would produce.
pub fn blanket_count(candidates: usize, d_max: usize) -> u64 {
    let mut total: u64 = 0;
    for k in 0..=d_max.min(candidates) {
        let mut c: u64 = 1;
        for i in 0..k {
            c = c * (candidates - i) as u64 / (i as u64 + 1);
        }
        total = total.saturating_add(c);
    }
    total
}

/// All column subsets of size <= d_max, ordered by size then lexicographically.
pub fn enumerate_blankets(candidates: usize, d_max: usize) -> Result<Vec<Vec<usize>>> {
    enumerate_blankets_capped(candidates, d_max, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_blankets_capped(
    candidates: usize,
    d_max: usize,
    cap: u64,
) -> Result<Vec<Vec<usize>>> {
    if d_max > candidates {
        return Err(Error::InvalidFormulation(format!(
            "d_max {d_max} exceeds candidate count {candidates}"
        )));
    }
    let count = blanket_count(candidates, d_max);
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    for k in 0..=d_max {
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            out.push(subset.clone());
            if k == 0 || !next_combination(&mut subset, candidates) {
                break;
            }
        }
    }
    Ok(out)
}

/// Advance to the next k-combination of {0..n-1} in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] != n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// A blanket that received zero posterior mass and why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedBlanket {
    pub target: usize,
    pub columns: Vec<usize>,
    pub reason: String,
}

/// Posterior summary for one target gene.
#[derive(Debug, Clone)]
pub struct TargetPosterior {
    pub target: usize,
    /// P(j regulates target) for each source gene j.
    pub source_probs: Vec<f64>,
    /// Normalized posterior mass per enumerated blanket (skipped ones hold 0).
    pub blanket_probs: Vec<f64>,
    pub blankets: Vec<Vec<usize>>,
    pub skipped: Vec<SkippedBlanket>,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Exact model-averaged edge probabilities for one target.
///
/// A gene is credited whenever any included column implicates it (product and
/// lagged columns count toward every gene they reference). Collinear or
/// degenerate blankets receive zero mass and are reported, not fatal.
pub fn posterior_edge_probabilities(
    problem: &RegressionProblem,
    prior: &NetworkPrior,
    g: f64,
) -> Result<TargetPosterior> {
    posterior_edge_probabilities_capped(problem, prior, g, DEFAULT_ENUMERATION_CAP)
}

pub fn posterior_edge_probabilities_capped(
    problem: &RegressionProblem,
    prior: &NetworkPrior,
    g: f64,
    cap: u64,
) -> Result<TargetPosterior> {
    let q = problem.num_candidates();
    let blankets = enumerate_blankets_capped(q, prior.d_max, cap)?;
    let mut log_scores = vec![f64::NEG_INFINITY; blankets.len()];
    let mut skipped = Vec::new();

    for (idx, blanket) in blankets.iter().enumerate() {
        let d_sub = problem.design.select_columns(blanket.iter());
        match log_marginal_likelihood_labeled(&problem.y, &d_sub, g, blanket) {
            Ok(logml) => log_scores[idx] = logml + prior.log_prior(blanket.len()),
            Err(e @ (Error::CollinearDesign { .. } | Error::DegenerateResidual { .. })) => {
                skipped.push(SkippedBlanket {
                    target: problem.target,
                    columns: blanket.clone(),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }

    let lse = log_sum_exp(log_scores.iter().copied());
    if lse == f64::NEG_INFINITY {
        return Err(Error::NoValidModels {
            target: problem.target,
        });
    }
    let blanket_probs: Vec<f64> = log_scores.iter().map(|s| (s - lse).exp()).collect();

    let p = problem.num_genes;
    let mut source_probs = vec![0.0; p];
    for (blanket, &mass) in blankets.iter().zip(&blanket_probs) {
        if mass == 0.0 {
            continue;
        }
        let mut seen = vec![false; p];
        for &col in blanket {
            for gene in problem.labels[col].genes() {
                if !seen[gene] {
                    seen[gene] = true;
                    source_probs[gene] += mass;
                }
            }
        }
    }
    for prob in &mut source_probs {
        *prob = prob.clamp(0.0, 1.0);
    }

    Ok(TargetPosterior {
        target: problem.target,
        source_probs,
        blanket_probs,
        blankets,
        skipped,
    })
}

/// Posterior edge probability matrix for a whole dataset, entry
/// `[(source, target)]`.
#[derive(Debug, Clone)]
pub struct EdgePosterior {
    pub probs: DMatrix<f64>,
    pub formulation: FormulationSpec,
    pub d_max: usize,
}

impl EdgePosterior {
    /// Edges scoring at least `tau`, as `(source, target)` pairs.
    pub fn threshold_edges(&self, tau: f64) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for source in 0..self.probs.nrows() {
            for target in 0..self.probs.ncols() {
                if self.probs[(source, target)] >= tau {
                    edges.push((source, target));
                }
            }
        }
        edges
    }

    /// Write `source,target,probability` rows sorted descending by probability.
    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["source", "target", "probability"])?;
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        for s in 0..self.probs.nrows() {
            for t in 0..self.probs.ncols() {
                rows.push((s, t, self.probs[(s, t)]));
            }
        }
        rows.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        for (s, t, prob) in rows {
            wtr.write_record([s.to_string(), t.to_string(), format!("{prob}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Full-network inference: one exact model-averaging pass per target gene.
///
/// The prior's candidate pool is the column count of the formulation's full
/// design, so product/lag variants normalize over their expanded pool.
pub fn infer_edge_posterior(
    ds: &crate::dataset::TimeSeriesDataset,
    spec: &FormulationSpec,
    d_max: usize,
    g_policy: GPolicy,
) -> Result<(EdgePosterior, Vec<SkippedBlanket>)> {
    let p = ds.num_genes();
    let mut probs = DMatrix::zeros(p, p);
    let mut skipped = Vec::new();
    for target in 0..p {
        let problem = crate::dataset::build_problem(ds, target, spec)?;
        let prior = NetworkPrior::new(d_max.min(problem.num_candidates()), problem.num_candidates())?;
        let g = g_policy.value(problem.num_rows());
        let post = posterior_edge_probabilities(&problem, &prior, g)?;
        for source in 0..p {
            probs[(source, target)] = post.source_probs[source];
        }
        skipped.extend(post.skipped);
    }
    Ok((
        EdgePosterior {
            probs,
            formulation: *spec,
            d_max,
        },
        skipped,
    ))
}

/// Which parameter scale a coefficient matrix lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientScale {
    /// Gradient-model coefficients (rate units, 1/min).
    Ode,
    /// Next-value-model coefficients (dimensionless transition weights).
    Dbn,
}

/// p x p coefficient matrix, entry `[(target, source)]`, tagged with its
/// scale and the sampling interval linking the two scales.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub scale: CoefficientScale,
    pub values: DMatrix<f64>,
    pub dt: f64,
}

/// Scale conversion: DBN weights are `dt * beta` off the diagonal and
/// `1 + dt * beta` on it; the inverse map recovers the rate-scale matrix.
/// Round trips are exact up to floating point.
pub fn reparameterize(c: &CoefficientMatrix, to_scale: CoefficientScale) -> CoefficientMatrix {
    assert!(c.dt > 0.0, "dt must be positive");
    if c.scale == to_scale {
        return c.clone();
    }
    let p = c.values.nrows();
    let mut values = c.values.clone();
    match to_scale {
        CoefficientScale::Dbn => {
            values *= c.dt;
            for i in 0..p {
                values[(i, i)] += 1.0;
            }
        }
        CoefficientScale::Ode => {
            for i in 0..p {
                values[(i, i)] -= 1.0;
            }
            values /= c.dt;
        }
    }
    CoefficientMatrix {
        scale: to_scale,
        values,
        dt: c.dt,
    }
}

/// Generating-model blanket: sources with exactly nonzero coefficients in the
/// target's row. Intended for ground-truth matrices where zeros are exact.
pub fn blanket_from_coefficients(c: &CoefficientMatrix, target: usize) -> Vec<usize> {
    (0..c.values.ncols())
        .filter(|&j| c.values[(target, j)] != 0.0)
        .collect()
}
