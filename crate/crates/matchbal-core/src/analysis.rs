//! Feature selection and coefficient significance: greedy correlation
//! pruning, recursive feature elimination over a pluggable importance
//! function, and OLS t-statistics with two-sided p-values.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::stats;

/// Ordered keep/drop flags over the schema coordinates, with a note on
/// which procedure produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub keep: Vec<bool>,
    pub provenance: String,
}

impl FeatureMask {
    pub fn full(dim: usize) -> Self {
        FeatureMask { keep: vec![true; dim], provenance: "all features".into() }
    }

    pub fn from_indices(dim: usize, indices: &[usize], provenance: &str) -> Result<Self> {
        let mut keep = vec![false; dim];
        for &i in indices {
            if i >= dim {
                return Err(Error::Parameter(format!("mask index {i} out of range {dim}")));
            }
            keep[i] = true;
        }
        let mask = FeatureMask { keep, provenance: provenance.into() };
        mask.validate()?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.keep.iter().any(|&k| k) {
            return Err(Error::Invariant("mask keeps no coordinates".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.keep.len()
    }

    pub fn n_kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect()
    }

    pub fn select(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.keep.len() {
            return Err(Error::Schema(format!(
                "mask over {} coordinates applied to row of {}",
                self.keep.len(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .zip(&self.keep)
            .filter_map(|(&v, &k)| k.then_some(v))
            .collect())
    }
}

/// Greedy scan in schema order: whenever a kept pair correlates beyond
/// `r_max` in magnitude, the later coordinate is dropped. Constant
/// columns correlate with nothing and are kept.
pub fn correlation_prune(x: &Matrix, r_max: f64) -> Result<FeatureMask> {
    if x.rows() < 2 {
        return Err(Error::Parameter("correlation pruning needs at least 2 rows".into()));
    }
    let d = x.cols();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
    let mut keep = vec![true; d];
    for i in 0..d {
        if !keep[i] {
            continue;
        }
        for j in (i + 1)..d {
            if !keep[j] {
                continue;
            }
            if stats::pearson(&cols[i], &cols[j]).abs() > r_max {
                keep[j] = false;
            }
        }
    }
    Ok(FeatureMask { keep, provenance: format!("correlation prune, |r| > {r_max}") })
}

/// Outcome of recursive feature elimination: survivors first (ranked by
/// final importance), then the eliminated features in reverse order of
/// elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    pub ranking: Vec<usize>,
    pub mask: FeatureMask,
    /// Schema indices in the order they were dropped.
    pub elimination_order: Vec<usize>,
}

/// Repeatedly fit and drop the `step` least-important features until
/// `keep_k` remain. `fit_importance` sees the active submatrix and must
/// return one non-negative importance per active column. Importance ties
/// are broken by dropping the later schema index first.
pub fn rfe<F>(
    mut fit_importance: F,
    x: &Matrix,
    y: &[f64],
    keep_k: usize,
    step: usize,
) -> Result<RfeResult>
where
    F: FnMut(&Matrix, &[f64]) -> Result<Vec<f64>>,
{
    let d = x.cols();
    if keep_k == 0 || keep_k > d {
        return Err(Error::Parameter(format!(
            "keep_k must lie in 1..={d}, got {keep_k}"
        )));
    }
    if step == 0 {
        return Err(Error::Parameter("step must be positive".into()));
    }

    let mut active: Vec<usize> = (0..d).collect();
    let mut eliminated: Vec<usize> = Vec::with_capacity(d - keep_k);
    let final_importance: Vec<f64>;
    loop {
        let sub = x.select_cols(&active);
        let importance = fit_importance(&sub, y)?;
        if importance.len() != active.len() {
            return Err(Error::Parameter(format!(
                "importance function returned {} values for {} features",
                importance.len(),
                active.len()
            )));
        }
        if active.len() == keep_k {
            final_importance = importance;
            break;
        }
        let n_drop = step.min(active.len() - keep_k);
        // Sort candidate positions by (importance asc, schema index desc)
        // so ties drop the later coordinate first.
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by(|&a, &b| {
            importance[a]
                .total_cmp(&importance[b])
                .then(active[b].cmp(&active[a]))
        });
        let mut drop_positions: Vec<usize> = order[..n_drop].to_vec();
        drop_positions.sort_unstable();
        for &pos in drop_positions.iter().rev() {
            eliminated.push(active.remove(pos));
        }
    }

    // Survivors ranked by final importance (desc, earlier index first).
    let mut survivor_order: Vec<usize> = (0..active.len()).collect();
    survivor_order.sort_by(|&a, &b| {
        final_importance[b]
            .total_cmp(&final_importance[a])
            .then(active[a].cmp(&active[b]))
    });
    let mut ranking: Vec<usize> = survivor_order.iter().map(|&p| active[p]).collect();
    ranking.extend(eliminated.iter().rev());

    let mask = FeatureMask::from_indices(d, &active, &format!("rfe keep_k={keep_k}"))?;
    Ok(RfeResult { ranking, mask, elimination_order: eliminated })
}

/// Importance for linear RFE: absolute least-squares coefficients.
/// Meaningful when the columns are z-scored.
pub fn linear_importance(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let fit = crate::models::linear::fit_linear(x, y, 1e-8)?;
    Ok(fit.coef.iter().map(|c| c.abs()).collect())
}

/// One row of the coefficient significance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub feature: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    pub p_value: f64,
}

/// OLS coefficient table: standard errors from the sigma^2 (X^T X)^-1
/// diagonal, two-sided p-values with n - d - 1 degrees of freedom, rows
/// sorted by |coefficient| descending. The design matrix must have full
/// column rank; prune correlated features first.
pub fn ols_significance(x: &Matrix, y: &[f64], names: &[String]) -> Result<Vec<SignificanceRow>> {
    let n = x.rows();
    let d = x.cols();
    if names.len() != d {
        return Err(Error::Parameter(format!("{} names for {d} columns", names.len())));
    }
    if n <= d + 1 {
        return Err(Error::Parameter(format!(
            "need more than d + 1 = {} rows, got {n}",
            d + 1
        )));
    }
    if y.len() != n {
        return Err(Error::Parameter("target length mismatch".into()));
    }

    let xi = x.with_intercept();
    let gram = xi.gram();
    let Some(factor) = linalg::cholesky_with_tol(&gram, 1e-10) else {
        return Err(Error::RankDeficient(
            "X'X is not positive definite; prune correlated features first".into(),
        ));
    };
    let beta = linalg::cholesky_solve_factored(&factor, &xi.xt_v(y));
    let fitted = xi.mul_vec(&beta);
    let rss: f64 = y
        .iter()
        .zip(&fitted)
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    let dof = (n - d - 1) as f64;
    let sigma2 = rss / dof;
    let inv = linalg::inverse_from_factor(&factor);

    let mut rows: Vec<SignificanceRow> = (0..d)
        .map(|j| {
            let se = (sigma2 * inv.get(j, j)).sqrt();
            let t = if se > 0.0 { beta[j] / se } else { f64::INFINITY };
            SignificanceRow {
                feature: names[j].clone(),
                coefficient: beta[j],
                std_error: se,
                t_statistic: t,
                p_value: stats::t_two_sided_p(t, dof),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.coefficient.abs().total_cmp(&a.coefficient.abs()));
    Ok(rows)
}
