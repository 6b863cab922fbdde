//! Propensity-stratified baseline: bin rows by the estimated probability of
//! belonging to the sensitive group and fit an F-SEO model inside each bin.

use log::info;

use crate::dataset::{encode, Dataset, EncodedDesign, Schema};
use crate::error::{Error, Result};
use crate::estimators::{fit_total, predict, EstimatorVariant, ImpartialPrediction};
use crate::linalg::{mean, Matrix, QrFactor};

pub fn calders_baseline(
    data: &Dataset,
    schema: &Schema,
    bins: usize,
) -> Result<ImpartialPrediction> {
    let design = encode(data, schema)?;
    let values = calders_predict(&design, &design, bins)?;
    Ok(ImpartialPrediction {
        variant: EstimatorVariant::CaldersBaseline,
        values,
        training_fingerprint: String::new(),
    })
}

/// Train on `train` (centered) and predict the rows of `test`.
pub fn calders_predict(
    train: &EncodedDesign,
    test: &EncodedDesign,
    bins: usize,
) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::Config("at least one propensity bin is needed".into()));
    }
    if train.rows() == 0 {
        return Err(Error::EmptyDesign("no training rows".into()));
    }
    if train.s.cols() != 1 {
        return Err(Error::Config(format!(
            "propensity stratification needs one binary sensitive column, found {}",
            train.s.cols()
        )));
    }
    let s_raw: Vec<f64> = train.s.col(0).iter().map(|v| v + train.means.s[0]).collect();
    let mut levels: Vec<f64> = Vec::new();
    for &v in &s_raw {
        if !levels.iter().any(|l| (l - v).abs() < 1e-9) {
            levels.push(v);
        }
    }
    if levels.len() > 2 {
        return Err(Error::Config(
            "propensity stratification needs a binary sensitive attribute".into(),
        ));
    }
    let test = test.centered_with(&train.means)?;

    // linear probability model of s on every other covariate
    let z_train = Matrix::hcat(&[&train.x, &train.w, &train.b])?;
    let z_test = Matrix::hcat(&[&test.x, &test.w, &test.b])?;
    let coef = if z_train.is_empty() {
        Vec::new()
    } else {
        QrFactor::new(&z_train).solve(train.s.col(0))
    };
    let propensity = |z: &Matrix| -> Vec<f64> {
        if z.is_empty() {
            vec![train.means.s[0]; z.rows()]
        } else {
            z.mul_vec(&coef)
                .into_iter()
                .map(|v| v + train.means.s[0])
                .collect()
        }
    };
    let p_train = propensity(&z_train);
    let p_test = propensity(&z_test);

    let mut sorted = p_train.clone();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    let cuts: Vec<f64> = if range < 1e-9 {
        Vec::new()
    } else {
        (1..bins)
            .map(|k| sorted[k * sorted.len() / bins])
            .collect()
    };
    let bin_of = |p: f64| cuts.iter().filter(|&&c| c <= p).count();

    let train_s = train.all_as_suspect();
    let test_s = test.all_as_suspect();
    let mut out = vec![0.0; test.rows()];
    for b in 0..=cuts.len() {
        let t_idx: Vec<usize> = (0..test.rows()).filter(|&i| bin_of(p_test[i]) == b).collect();
        if t_idx.is_empty() {
            continue;
        }
        let idx: Vec<usize> = (0..train.rows()).filter(|&i| bin_of(p_train[i]) == b).collect();
        let both_groups = levels.len() == 2
            && levels
                .iter()
                .all(|l| idx.iter().any(|&i| (s_raw[i] - l).abs() < 1e-9));
        let values = if both_groups {
            let sub = train_s.select_rows(&idx).centered();
            let fit = fit_total(&sub)?;
            predict(&fit, &test_s.select_rows(&t_idx), EstimatorVariant::Fseo)?.values
        } else {
            let fallback = if idx.is_empty() {
                mean(&train.y)
            } else {
                mean(&idx.iter().map(|&i| train.y[i]).collect::<Vec<_>>())
            };
            info!(
                "propensity bin {b} holds a single sensitive class ({} training rows); \
                 using its mean response",
                idx.len()
            );
            vec![fallback; t_idx.len()]
        };
        for (&i, v) in t_idx.iter().zip(values) {
            out[i] = v;
        }
    }
    Ok(out)
}
