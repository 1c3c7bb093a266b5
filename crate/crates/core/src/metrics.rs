//! ROC/AUR evaluation against ground-truth adjacency and replicate-level
//! aggregation of AUR distributions.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Score matrix paired with ground truth, both indexed `[(source, target)]`.
#[derive(Debug, Clone)]
pub struct ScoredEdgeSet {
    pub scores: DMatrix<f64>,
    pub truth: DMatrix<bool>,
    /// Whether diagonal (self-loop) entries participate in evaluation.
    pub include_self_loops: bool,
}

impl ScoredEdgeSet {
    pub fn new(scores: DMatrix<f64>, truth: DMatrix<bool>) -> Self {
        Self {
            scores,
            truth,
            include_self_loops: false,
        }
    }

    /// (score, is_true) for every evaluated candidate edge.
    fn labeled_scores(&self) -> Result<Vec<(f64, bool)>> {
        if self.scores.shape() != self.truth.shape() {
            return Err(Error::InvalidFormulation(
                "score/truth shape mismatch".into(),
            ));
        }
        let p = self.scores.nrows();
        let mut out = Vec::with_capacity(p * p);
        for s in 0..p {
            for t in 0..self.scores.ncols() {
                if s == t && !self.include_self_loops {
                    continue;
                }
                out.push((self.scores[(s, t)], self.truth[(s, t)]));
            }
        }
        if !out.iter().any(|&(_, l)| l) || !out.iter().any(|&(_, l)| !l) {
            return Err(Error::UndefinedAur);
        }
        Ok(out)
    }
}

/// Area under the ROC curve in its rank-sum form: the probability that a
/// random true edge outscores a random false edge, ties credited one half.
pub fn aur(set: &ScoredEdgeSet) -> Result<f64> {
    let mut labeled = set.labeled_scores()?;
    labeled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_true = labeled.iter().filter(|&&(_, l)| l).count() as f64;
    let n_false = labeled.len() as f64 - n_true;

    // midranks over tied groups
    let mut rank_sum_true = 0.0;
    let mut i = 0;
    while i < labeled.len() {
        let mut j = i;
        while j < labeled.len() && labeled[j].0 == labeled[i].0 {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0; // average of ranks i+1..=j
        rank_sum_true += midrank * labeled[i..j].iter().filter(|&&(_, l)| l).count() as f64;
        i = j;
    }
    let u = rank_sum_true - n_true * (n_true + 1.0) / 2.0;
    Ok(u / (n_true * n_false))
}

/// ROC curve as (false-positive rate, true-positive rate) points, swept over
/// unique score thresholds from +inf down. Trapezoidal area equals [`aur`].
pub fn roc_curve(set: &ScoredEdgeSet) -> Result<Vec<(f64, f64)>> {
    let mut labeled = set.labeled_scores()?;
    labeled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n_true = labeled.iter().filter(|&&(_, l)| l).count() as f64;
    let n_false = labeled.len() as f64 - n_true;

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut i = 0;
    while i < labeled.len() {
        let mut j = i;
        while j < labeled.len() && labeled[j].0 == labeled[i].0 {
            if labeled[j].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            j += 1;
        }
        points.push((fp / n_false, tp / n_true));
        i = j;
    }
    Ok(points)
}

/// Trapezoidal area under a ROC point list.
pub fn roc_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Distribution summary of one variant's AUR values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Linear-interpolation (type-7) quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
}

/// Per-variant summaries plus pairwise median differences, plot-ready.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub variants: Vec<VariantSummary>,
    /// (variant_a, variant_b, median_a - median_b) for a < b in table order.
    pub median_differences: Vec<(String, String, f64)>,
}

pub fn benchmark_summary(aurs_by_variant: &BTreeMap<String, Vec<f64>>) -> BenchmarkSummary {
    let mut variants = Vec::new();
    for (name, values) in aurs_by_variant {
        assert!(!values.is_empty(), "variant {name} has no AUR values");
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        variants.push(VariantSummary {
            variant: name.clone(),
            median: quantile_sorted(&sorted, 0.5),
            q1: quantile_sorted(&sorted, 0.25),
            q3: quantile_sorted(&sorted, 0.75),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            min: sorted[0],
            max: *sorted.last().unwrap(),
            n: sorted.len(),
        });
    }
    let mut median_differences = Vec::new();
    for i in 0..variants.len() {
        for j in i + 1..variants.len() {
            median_differences.push((
                variants[i].variant.clone(),
                variants[j].variant.clone(),
                variants[i].median - variants[j].median,
            ));
        }
    }
    BenchmarkSummary {
        variants,
        median_differences,
    }
}

impl BenchmarkSummary {
    /// `variant,median,q1,q3,mean,min,max,n` rows.
    pub fn to_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["variant", "median", "q1", "q3", "mean", "min", "max", "n"])?;
        for v in &self.variants {
            wtr.write_record([
                v.variant.clone(),
                format!("{}", v.median),
                format!("{}", v.q1),
                format!("{}", v.q3),
                format!("{}", v.mean),
                format!("{}", v.min),
                format!("{}", v.max),
                format!("{}", v.n),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Long-format per-replicate AUR table: `variant,replicate,aur`.
pub fn write_aur_long_csv(
    path: impl AsRef<Path>,
    aurs_by_variant: &BTreeMap<String, Vec<f64>>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["variant", "replicate", "aur"])?;
    for (variant, values) in aurs_by_variant {
        for (rep, value) in values.iter().enumerate() {
            wtr.write_record([variant.clone(), rep.to_string(), format!("{value}")])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(scores: &[f64], truth: &[bool], p: usize) -> ScoredEdgeSet {
        ScoredEdgeSet::new(
            DMatrix::from_row_slice(p, p, scores),
            DMatrix::from_row_slice(p, p, truth),
        )
    }

    #[test]
    fn perfect_ranking_scores_one() {
        let s = set(
            &[0.0, 0.9, 0.8, 0.1, 0.0, 0.2, 0.05, 0.15, 0.0],
            &[
                false, true, true, false, false, false, false, false, false,
            ],
            3,
        );
        assert_abs_diff_eq!(aur(&s).unwrap(), 1.0);
        let curve = roc_curve(&s).unwrap();
        assert!(curve.contains(&(0.0, 1.0)));
    }

    #[test]
    fn all_ties_score_half() {
        let s = set(
            &[0.5; 9],
            &[
                false, true, false, false, false, true, false, false, false,
            ],
            3,
        );
        assert_abs_diff_eq!(aur(&s).unwrap(), 0.5);
        let curve = roc_curve(&s).unwrap();
        assert_eq!(curve, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_abs_diff_eq!(roc_area(&curve), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_is_excluded_by_default() {
        // truth only on the diagonal plus one off-diagonal edge; diagonal
        // scores would otherwise dominate
        let mut s = set(
            &[9.0, 0.8, 0.1, 0.2, 9.0, 0.1, 0.3, 0.1, 9.0],
            &[
                true, true, false, false, true, false, false, false, true,
            ],
            3,
        );
        assert_abs_diff_eq!(aur(&s).unwrap(), 1.0);
        s.include_self_loops = true;
        // with self-loops the three 9.0-scored diagonal trues still rank top
        assert_abs_diff_eq!(aur(&s).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_truth_is_an_error() {
        let s = set(&[0.1; 9], &[false; 9], 3);
        assert!(matches!(aur(&s), Err(Error::UndefinedAur)));
        let s = set(
            &[0.1; 9],
            &[
                false, true, true, true, false, true, true, true, false,
            ],
            3,
        );
        assert!(matches!(aur(&s), Err(Error::UndefinedAur)));
    }

    #[test]
    fn quantiles_are_type_seven() {
        let sorted = [0.4, 0.5, 0.6];
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.5), 0.5);
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.25), 0.45);
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.75), 0.55);
    }

    #[test]
    fn summary_of_single_values() {
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), vec![0.7]);
        map.insert("b".to_string(), vec![0.6]);
        let summary = benchmark_summary(&map);
        assert_eq!(summary.variants[0].median, 0.7);
        assert_eq!(summary.variants[0].n, 1);
        assert_eq!(summary.median_differences.len(), 1);
        assert_abs_diff_eq!(summary.median_differences[0].2, 0.1, epsilon = 1e-12);
    }
}
