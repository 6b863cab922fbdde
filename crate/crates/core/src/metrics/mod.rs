//! Scoring prediction sets: error measures, group discrimination, the
//! impartiality score and side-by-side estimator comparisons.

mod impartiality;

pub use impartiality::{
    impartiality_breakdown, impartiality_score, ImpartialityBreakdown, ImpartialityMode,
    VARIANCE_FLOOR,
};

use std::collections::BTreeMap;

use crate::dataset::EncodedDesign;
use crate::error::{Error, Result};
use crate::estimators::ImpartialPrediction;
use crate::linalg::sum;

fn check_lengths(context: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::dim(context, a, b));
    }
    if a == 0 {
        return Err(Error::EmptyDesign(format!("{context}: no rows")));
    }
    Ok(())
}

fn squared_error(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths("predictions vs truth", truth.len(), predictions.len())?;
    let sq: Vec<f64> = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .collect();
    Ok(sum(&sq))
}

/// Root mean squared error.
pub fn rmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    Ok((squared_error(predictions, truth)? / truth.len() as f64).sqrt())
}

/// Root of the summed squared error.
pub fn rsse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    Ok(squared_error(predictions, truth)?.sqrt())
}

/// Mean value per group label, keyed in sorted label order.
pub fn group_means(values: &[f64], group_labels: &[String]) -> Result<BTreeMap<String, f64>> {
    check_lengths("group labels", values.len(), group_labels.len())?;
    let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (v, g) in values.iter().zip(group_labels) {
        acc.entry(g.clone()).or_default().push(*v);
    }
    Ok(acc
        .into_iter()
        .map(|(g, vs)| (g, sum(&vs) / vs.len() as f64))
        .collect())
}

/// Mean prediction in `positive` minus mean prediction in `negative`.
pub fn discrimination_score(
    predictions: &[f64],
    group_labels: &[String],
    positive: &str,
    negative: &str,
) -> Result<f64> {
    let means = group_means(predictions, group_labels)?;
    let get = |g: &str| {
        means
            .get(g)
            .copied()
            .ok_or_else(|| Error::UnknownGroup(g.to_string()))
    };
    Ok(get(positive)? - get(negative)?)
}

/// Largest absolute gap between any two group means.
pub fn max_pairwise_ds(predictions: &[f64], group_labels: &[String]) -> Result<f64> {
    let means = group_means(predictions, group_labels)?;
    let lo = means.values().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(if means.len() < 2 { 0.0 } else { hi - lo })
}

/// Default ordered pair for DS: (last, first) group in sorted label order.
pub fn default_group_pair(group_labels: &[String]) -> Option<(String, String)> {
    let first = group_labels.iter().min()?;
    let last = group_labels.iter().max()?;
    Some((last.clone(), first.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub rsse: f64,
    pub ds: f64,
    pub is_score: f64,
    pub is_mode: ImpartialityMode,
    pub per_group_means: BTreeMap<String, f64>,
    pub n: usize,
}

impl MetricsReport {
    /// Score `predictions` against `truth`; the residual used for the
    /// impartiality score is `truth - predictions`. `pair` is the
    /// (positive, negative) group pair for DS, defaulting to
    /// [`default_group_pair`].
    pub fn compute(
        predictions: &[f64],
        truth: &[f64],
        design: &EncodedDesign,
        mode: ImpartialityMode,
        pair: Option<(&str, &str)>,
    ) -> Result<MetricsReport> {
        let labels = &design.group_labels;
        let (pos, neg) = match pair {
            Some((p, n)) => (p.to_string(), n.to_string()),
            None => default_group_pair(labels)
                .ok_or_else(|| Error::EmptyDesign("no rows to score".into()))?,
        };
        Ok(MetricsReport {
            rmse: rmse(predictions, truth)?,
            rsse: rsse(predictions, truth)?,
            ds: discrimination_score(predictions, labels, &pos, &neg)?,
            is_score: impartiality_score(predictions, design, truth, mode)?,
            is_mode: mode,
            per_group_means: group_means(predictions, labels)?,
            n: predictions.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Row-wise `a - b`.
    pub differences: Vec<f64>,
    pub mean_difference: f64,
    pub mean_abs_difference: f64,
    pub per_group_mean_difference: BTreeMap<String, f64>,
}

pub fn compare_estimators(
    a: &ImpartialPrediction,
    b: &ImpartialPrediction,
    group_labels: &[String],
) -> Result<ComparisonReport> {
    check_lengths("compared predictions", a.values.len(), b.values.len())?;
    let differences: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    let n = differences.len() as f64;
    let abs: Vec<f64> = differences.iter().map(|d| d.abs()).collect();
    Ok(ComparisonReport {
        mean_difference: sum(&differences) / n,
        mean_abs_difference: sum(&abs) / n,
        per_group_mean_difference: group_means(&differences, group_labels)?,
        differences,
    })
}
