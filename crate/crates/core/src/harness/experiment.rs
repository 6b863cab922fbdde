//! Train on biased data, test on raw data, k-fold over several bias draws.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::bias::biased_rows;
use super::{calders_predict, derive_seed, rng, BaggedTrees, BiasSpec, TreeConfig};
use super::{TAG_BIAS, TAG_FOLDS, TAG_TREES};
use crate::dataset::{encode_raw, Dataset, EncodedDesign, Schema};
use crate::error::{Error, Result};
use crate::estimators::{fit_total, predict, EstimatorVariant};
use crate::format::{csv_number, table_number};
use crate::linalg::Matrix;
use crate::metrics::{
    default_group_pair, discrimination_score, impartiality_score, rmse, ImpartialityMode,
};

/// One column of the experiment table: an estimator together with the
/// covariate roles it is trained under and the impartiality it is scored for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Full regression; all non-sensitive covariates scored as suspect.
    Ols,
    /// All non-sensitive covariates legitimate.
    FormalEo,
    /// All non-sensitive covariates suspect.
    SubstantiveEo,
    /// Roles as declared in the schema.
    Total,
    Calders,
    Marginal,
    Trees,
    /// Tree predictions corrected with every other covariate legitimate.
    FormalEoTrees,
    /// Tree predictions corrected with every other covariate suspect.
    SubstantiveEoTrees,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Ols,
        Method::FormalEo,
        Method::SubstantiveEo,
        Method::Total,
        Method::Calders,
        Method::Marginal,
        Method::Trees,
        Method::FormalEoTrees,
        Method::SubstantiveEoTrees,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::FormalEo => "feo",
            Method::SubstantiveEo => "seo",
            Method::Total => "total",
            Method::Calders => "calders",
            Method::Marginal => "marginal",
            Method::Trees => "trees",
            Method::FormalEoTrees => "feo-trees",
            Method::SubstantiveEoTrees => "seo-trees",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::Ols => "OLS",
            Method::FormalEo => "Formal EO",
            Method::SubstantiveEo => "Sub. EO",
            Method::Total => "Total",
            Method::Calders => "Calders",
            Method::Marginal => "Marginal",
            Method::Trees => "Trees",
            Method::FormalEoTrees => "Formal EO trees",
            Method::SubstantiveEoTrees => "Sub. EO trees",
        }
    }

    fn uses_trees(self) -> bool {
        matches!(
            self,
            Method::Trees | Method::FormalEoTrees | Method::SubstantiveEoTrees
        )
    }

    pub fn impartiality_mode(self) -> ImpartialityMode {
        match self {
            Method::FormalEo => ImpartialityMode::Feo,
            _ => ImpartialityMode::Seo,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.key() == key)
            .or(match key.as_str() {
                "full" => Some(Method::Ols),
                "fseo" => Some(Method::SubstantiveEo),
                _ => None,
            })
            .ok_or_else(|| Error::Variant(format!("unknown experiment method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    RmseBiased,
    RmseRaw,
    Ds,
    Is,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::RmseBiased, Metric::RmseRaw, Metric::Ds, Metric::Is];

    pub fn name(self) -> &'static str {
        match self {
            Metric::RmseBiased => "RMSE-biased",
            Metric::RmseRaw => "RMSE-raw",
            Metric::Ds => "DS",
            Metric::Is => "IS",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub repetitions: usize,
    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub seed: u64,
    pub calders_bins: usize,
    pub trees: TreeConfig,
    /// (positive, negative) groups for DS; defaults to (last, first) label.
    pub group_pair: Option<(String, String)>,
}

impl ExperimentConfig {
    /// The linear-model line-up.
    pub fn linear(seed: u64) -> Self {
        ExperimentConfig {
            folds: 5,
            repetitions: 20,
            methods: vec![
                Method::Ols,
                Method::FormalEo,
                Method::SubstantiveEo,
                Method::Calders,
                Method::Marginal,
            ],
            metrics: Metric::ALL.to_vec(),
            seed,
            calders_bins: 5,
            trees: TreeConfig::default(),
            group_pair: None,
        }
    }

    /// The black-box line-up.
    pub fn black_box(seed: u64) -> Self {
        ExperimentConfig {
            methods: vec![
                Method::Trees,
                Method::FormalEoTrees,
                Method::SubstantiveEoTrees,
                Method::Calders,
                Method::Marginal,
            ],
            ..ExperimentConfig::linear(seed)
        }
    }

    pub fn validate(&self, rows: usize) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config("at least 2 folds are needed".into()));
        }
        if self.folds > rows {
            return Err(Error::Config(format!(
                "{} folds requested for {rows} rows",
                self.folds
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("at least one repetition is needed".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods to run".into()));
        }
        Ok(())
    }
}

/// Mean of each metric over all folds and repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub rmse_biased: f64,
    pub rmse_raw: f64,
    pub ds: f64,
    pub is_score: f64,
    pub is_mode: ImpartialityMode,
}

impl MethodSummary {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::RmseBiased => self.rmse_biased,
            Metric::RmseRaw => self.rmse_raw,
            Metric::Ds => self.ds,
            Metric::Is => self.is_score,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<MethodSummary>,
    pub metrics: Vec<Metric>,
    pub folds: usize,
    pub repetitions: usize,
}

impl ExperimentTable {
    pub fn get(&self, method: Method) -> Option<&MethodSummary> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// One line per method and metric.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "metric", "value", "is_mode"])?;
        for r in &self.rows {
            for &m in &self.metrics {
                w.write_record([
                    r.method.key(),
                    m.name(),
                    &csv_number(r.metric(m)),
                    r.is_mode.name(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Metrics as rows, methods as columns.
    pub fn to_text(&self) -> String {
        let mut header = vec![String::new()];
        header.extend(self.rows.iter().map(|r| r.method.title().to_string()));
        let mut lines = vec![header];
        for &m in &self.metrics {
            let mut line = vec![m.name().to_string()];
            line.extend(self.rows.iter().map(|r| table_number(r.metric(m))));
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|j| lines.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| {
                    if j == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

struct Job {
    repetition: usize,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
    tree_seed: u64,
}

/// Held-out predictions of one fold: one vector per method, plus the raw
/// tree predictions when a tree method ran.
struct FoldOutput {
    preds: Vec<Vec<f64>>,
    trees: Option<Vec<f64>>,
}

fn run_job(biased: &EncodedDesign, job: &Job, config: &ExperimentConfig) -> Result<FoldOutput> {
    let train = biased.select_rows(&job.train_idx).centered();
    let test = biased
        .select_rows(&job.test_idx)
        .centered_with(&train.means)?;

    let legit = (train.all_as_legitimate(), test.all_as_legitimate());
    let suspect = (train.all_as_suspect(), test.all_as_suspect());

    let needs = |ms: &[Method]| config.methods.iter().any(|m| ms.contains(m));
    let suspect_fit = if needs(&[Method::Ols, Method::SubstantiveEo, Method::Marginal]) {
        Some(fit_total(&suspect.0)?)
    } else {
        None
    };
    let forest = if config.methods.iter().any(|m| m.uses_trees()) {
        let f = BaggedTrees::fit(&train.full_matrix(), &train.y, config.trees, job.tree_seed)?;
        let test_pred = f.predict(&test.full_matrix())?;
        Some((f.oob_predictions().to_vec(), test_pred))
    } else {
        None
    };
    let corrected = |view: &(EncodedDesign, EncodedDesign)| -> Result<Vec<f64>> {
        let (oob, test_pred) = forest.as_ref().expect("forest fitted");
        let label = vec!["trees".to_string()];
        let tr = view
            .0
            .with_blackbox(&Matrix::column_vector(oob.clone()), label.clone(), None)?;
        let fit = fit_total(&tr)?;
        let te = view.1.with_blackbox(
            &Matrix::column_vector(test_pred.clone()),
            label,
            Some(&fit.means.b),
        )?;
        Ok(predict(&fit, &te, EstimatorVariant::BlackBoxCorrected)?.values)
    };
    let from_suspect = |v: EstimatorVariant| -> Result<Vec<f64>> {
        Ok(predict(suspect_fit.as_ref().expect("fit"), &suspect.1, v)?.values)
    };

    let mut preds = Vec::with_capacity(config.methods.len());
    for &m in &config.methods {
        preds.push(match m {
            Method::Ols => from_suspect(EstimatorVariant::Full)?,
            Method::SubstantiveEo => from_suspect(EstimatorVariant::Fseo)?,
            Method::Marginal => from_suspect(EstimatorVariant::Marginal)?,
            Method::FormalEo => {
                predict(&fit_total(&legit.0)?, &legit.1, EstimatorVariant::Feo)?.values
            }
            Method::Total => predict(&fit_total(&train)?, &test, EstimatorVariant::Total)?.values,
            Method::Calders => calders_predict(&train, &test, config.calders_bins)?,
            Method::Trees => forest.as_ref().expect("forest fitted").1.clone(),
            Method::FormalEoTrees => corrected(&legit)?,
            Method::SubstantiveEoTrees => corrected(&suspect)?,
        });
    }
    Ok(FoldOutput {
        preds,
        trees: forest.map(|(_, t)| t),
    })
}

/// Design a method's held-out predictions are scored against.
fn scoring_view(method: Method, full: &EncodedDesign, trees: Option<&[f64]>) -> Result<EncodedDesign> {
    let with_trees = |d: EncodedDesign| -> Result<EncodedDesign> {
        let t = trees.expect("tree predictions");
        d.with_blackbox(&Matrix::column_vector(t.to_vec()), vec!["trees".into()], None)
    };
    Ok(match method {
        Method::FormalEo => full.all_as_legitimate(),
        Method::Total => full.clone(),
        Method::FormalEoTrees => with_trees(full.all_as_legitimate())?,
        Method::SubstantiveEoTrees => with_trees(full.all_as_suspect())?,
        _ => full.all_as_suspect(),
    })
}

fn fold_bounds(n: usize, folds: usize, f: usize) -> (usize, usize) {
    (f * n / folds, (f + 1) * n / folds)
}

/// Repeated k-fold validation under injected bias.
///
/// Each repetition draws a fresh bias assignment and a fresh fold
/// permutation. Models are trained on the biased rows outside each fold and
/// predict the rows inside it; the pooled held-out predictions of a
/// repetition are then scored: RMSE against biased and raw responses, DS on
/// the predictions, IS against the biased responses. Scores are averaged
/// over repetitions.
pub fn kfold_validate(
    data: &Dataset,
    schema: &Schema,
    config: &ExperimentConfig,
    bias: &BiasSpec,
) -> Result<ExperimentTable> {
    bias.validate()?;
    let n = data.rows();
    config.validate(n)?;
    let raw = encode_raw(data, schema)?;
    if raw.s.is_empty() {
        return Err(Error::Config(
            "the validation protocol needs a sensitive column".into(),
        ));
    }
    let pair = match &config.group_pair {
        Some(p) => p.clone(),
        None => default_group_pair(&raw.group_labels)
            .ok_or_else(|| Error::EmptyDesign("no rows".into()))?,
    };

    let mut biased = Vec::with_capacity(config.repetitions);
    let mut jobs = Vec::new();
    for r in 0..config.repetitions {
        let spec = BiasSpec {
            seed: derive_seed(config.seed ^ bias.seed, r as u64, 0, TAG_BIAS),
            ..bias.clone()
        };
        let mut y = raw.y.clone();
        for i in biased_rows(&raw.group_labels, &spec)? {
            y[i] += spec.shift;
        }
        biased.push(raw.with_response(y)?);

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng(derive_seed(config.seed, r as u64, 0, TAG_FOLDS)));
        for f in 0..config.folds {
            let (lo, hi) = fold_bounds(n, config.folds, f);
            let mut test_idx = perm[lo..hi].to_vec();
            test_idx.sort_unstable();
            let mut train_idx: Vec<usize> = perm[..lo].iter().chain(&perm[hi..]).copied().collect();
            train_idx.sort_unstable();
            jobs.push(Job {
                repetition: r,
                train_idx,
                test_idx,
                tree_seed: derive_seed(config.seed, r as u64, f as u64, TAG_TREES),
            });
        }
    }

    let run = || -> Vec<Result<FoldOutput>> {
        jobs.par_iter()
            .map(|j| run_job(&biased[j.repetition], j, config))
            .collect()
    };
    let outputs = match thread_cap() {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    // reassemble and score in (repetition, method) order so sums are
    // bit-reproducible
    let full = raw.centered();
    let m = config.methods.len();
    let mut totals = vec![[0.0; 4]; m];
    let mut outputs = outputs.into_iter();
    for (r, design_b) in biased.iter().enumerate() {
        let mut pooled = vec![vec![0.0; n]; m];
        let mut trees = vec![0.0; n];
        for job in jobs.iter().filter(|j| j.repetition == r) {
            let out = outputs.next().expect("one output per job")?;
            for (k, p) in out.preds.iter().enumerate() {
                for (&i, v) in job.test_idx.iter().zip(p) {
                    pooled[k][i] = *v;
                }
            }
            if let Some(t) = out.trees {
                for (&i, v) in job.test_idx.iter().zip(t) {
                    trees[i] = v;
                }
            }
        }
        let uses_trees = config.methods.iter().any(|m| m.uses_trees());
        for (k, &method) in config.methods.iter().enumerate() {
            let pred = &pooled[k];
            let view = scoring_view(method, &full, uses_trees.then_some(trees.as_slice()))?;
            let scores = [
                rmse(pred, &design_b.y)?,
                rmse(pred, &raw.y)?,
                discrimination_score(pred, &raw.group_labels, &pair.0, &pair.1)?,
                impartiality_score(pred, &view, &design_b.y, method.impartiality_mode())?,
            ];
            for (t, s) in totals[k].iter_mut().zip(scores) {
                *t += s;
            }
        }
    }

    let reps = config.repetitions as f64;
    let rows = config
        .methods
        .iter()
        .zip(totals)
        .map(|(&method, t)| MethodSummary {
            method,
            rmse_biased: t[0] / reps,
            rmse_raw: t[1] / reps,
            ds: t[2] / reps,
            is_score: t[3] / reps,
            is_mode: method.impartiality_mode(),
        })
        .collect();
    Ok(ExperimentTable {
        rows,
        metrics: config.metrics.clone(),
        folds: config.folds,
        repetitions: config.repetitions,
    })
}

/// Worker cap from `IMPARTIAL_THREADS`, if set to a positive integer.
pub(crate) fn thread_cap() -> Option<usize> {
    std::env::var("IMPARTIAL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
}
