//! Grow-shrink Markov blanket discovery with partial-correlation tests.
//!
//! The conditional independence test regresses the conditioning set (plus an
//! intercept) out of both variables and correlates the residuals; the
//! statistic r * sqrt(dof / (1 - r^2)) is referred to a t-distribution with
//! dof = N - 2 - |conditioning|. With an empty conditioning set this is the
//! plain Pearson test.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::RegressionProblem;
use crate::error::{Error, Result};

/// Outcome of one (partial) correlation test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiTestResult {
    pub r: f64,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// True when the test fails to reject independence at the given level.
    pub independent: bool,
}

/// Residuals of `v` after least-squares regression on `[1, conditioning...]`.
fn residualize(v: &DVector<f64>, conditioning: &[DVector<f64>]) -> DVector<f64> {
    let n = v.len();
    let mut z = DMatrix::zeros(n, conditioning.len() + 1);
    z.column_mut(0).fill(1.0);
    for (c, col) in conditioning.iter().enumerate() {
        z.set_column(c + 1, col);
    }
    let qr = z.col_piv_qr();
    let q = qr.q();
    // rank-deficient conditioning sets are fine: project onto the span only
    let r = qr.r();
    let tol = 1e-12
        * (0..r.nrows().min(r.ncols()))
            .map(|i| r[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
    let rank = (0..r.nrows().min(r.ncols()))
        .take_while(|&i| r[(i, i)].abs() > tol)
        .count();
    let qr_span = q.columns(0, rank);
    v - &qr_span * (qr_span.transpose() * v)
}

/// Partial correlation test of `x` and `y` given `conditioning` at level `alpha`.
pub fn pearson_ci_test(
    x: &DVector<f64>,
    y: &DVector<f64>,
    conditioning: &[DVector<f64>],
    alpha: f64,
) -> Result<CiTestResult> {
    let n = x.len();
    assert_eq!(n, y.len(), "vector length mismatch");
    assert!(
        conditioning.iter().all(|c| c.len() == n),
        "conditioning length mismatch"
    );
    assert!(
        n >= conditioning.len() + 3,
        "need at least |conditioning| + 3 samples"
    );

    let variance = |v: &DVector<f64>| {
        let mean = v.mean();
        v.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
    };
    if variance(x) <= 0.0 || variance(y) <= 0.0 {
        return Err(Error::ConstantVector);
    }

    let rx = residualize(x, conditioning);
    let ry = residualize(y, conditioning);
    let sx = rx.dot(&rx).sqrt();
    let sy = ry.dot(&ry).sqrt();
    // a conditioning set that explains a variable perfectly leaves nothing to
    // correlate; report r = 0
    let r = if sx <= 1e-12 || sy <= 1e-12 {
        0.0
    } else {
        (rx.dot(&ry) / (sx * sy)).clamp(-1.0, 1.0)
    };

    let dof = n - 2 - conditioning.len();
    if r.abs() >= 1.0 - 1e-12 {
        return Ok(CiTestResult {
            r,
            statistic: f64::INFINITY * r.signum(),
            dof,
            p_value: 0.0,
            independent: false,
        });
    }
    let statistic = r * (dof as f64 / (1.0 - r * r)).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof as f64).expect("dof >= 1");
    let p_value = 2.0 * (1.0 - t.cdf(statistic.abs()));
    Ok(CiTestResult {
        r,
        statistic,
        dof,
        p_value,
        independent: p_value > alpha,
    })
}

/// Grow-shrink blanket estimate over the problem's candidate columns.
///
/// Grow passes (ascending column order) add any candidate dependent on the
/// response given the current set, repeating until a full pass adds nothing;
/// shrink passes remove any member independent of the response given the
/// rest. Deterministic for a fixed candidate ordering.
pub fn grow_shrink(problem: &RegressionProblem, alpha: f64) -> Result<Vec<usize>> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
    let q = problem.num_candidates();
    let cols: Vec<DVector<f64>> = (0..q)
        .map(|c| problem.design.column(c).into_owned())
        .collect();
    let y = &problem.y;

    let usable = |conditioning: usize| y.len() >= conditioning + 3;

    let mut blanket: Vec<usize> = Vec::new();
    // grow
    loop {
        let mut grew = false;
        for c in 0..q {
            if blanket.contains(&c) || !usable(blanket.len()) {
                continue;
            }
            let conditioning: Vec<DVector<f64>> =
                blanket.iter().map(|&b| cols[b].clone()).collect();
            let test = match pearson_ci_test(&cols[c], y, &conditioning, alpha) {
                Ok(t) => t,
                Err(Error::ConstantVector) => continue,
                Err(e) => return Err(e),
            };
            if !test.independent {
                blanket.push(c);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    // shrink
    loop {
        let mut shrunk = false;
        for (pos, &c) in blanket.iter().enumerate() {
            let rest: Vec<DVector<f64>> = blanket
                .iter()
                .filter(|&&b| b != c)
                .map(|&b| cols[b].clone())
                .collect();
            if !usable(rest.len()) {
                continue;
            }
            let test = match pearson_ci_test(&cols[c], y, &rest, alpha) {
                Ok(t) => t,
                Err(Error::ConstantVector) => continue,
                Err(e) => return Err(e),
            };
            if test.independent {
                blanket.remove(pos);
                shrunk = true;
                break;
            }
        }
        if !shrunk {
            break;
        }
    }
    blanket.sort_unstable();
    Ok(blanket)
}

/// Inter-gene source set implied by a blanket of design columns: every gene a
/// surviving column implicates, the target itself excluded.
pub fn blanket_source_genes(problem: &RegressionProblem, blanket: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; problem.num_genes];
    for &col in blanket {
        for gene in problem.labels[col].genes() {
            seen[gene] = true;
        }
    }
    (0..problem.num_genes)
        .filter(|&g| g != problem.target && seen[g])
        .collect()
}

/// Grow-shrink applied to every target: 0/1 membership matrix indexed
/// `[(source, target)]`, self-loops excluded.
pub fn gs_edge_matrix(
    ds: &crate::dataset::TimeSeriesDataset,
    spec: &crate::dataset::FormulationSpec,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let p = ds.num_genes();
    let mut m = DMatrix::zeros(p, p);
    for target in 0..p {
        let problem = crate::dataset::build_problem(ds, target, spec)?;
        let blanket = grow_shrink(&problem, alpha)?;
        for source in blanket_source_genes(&problem, &blanket) {
            m[(source, target)] = 1.0;
        }
    }
    Ok(m)
}
