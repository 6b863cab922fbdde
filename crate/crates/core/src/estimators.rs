//! Estimator variants derived from one joint least-squares fit.
//!
//! [`fit_total`] regresses the response on `[S | X | W | B]` (all centered)
//! and runs the auxiliary regressions every variant needs:
//!
//! * `[W|B]` on `[S, X]`: the S part is removed from suspect columns and the
//!   X part is kept (Total / black-box correction);
//! * `[W|B]` on `S` alone (F-SEO);
//! * `S` on `X` (direct/indirect split of the marginal coefficients);
//! * `y` on `[X | W | B]` (the exclude-S restricted model).
//!
//! Prediction re-centers incoming data with the training means, so the same
//! fit serves in-sample and held-out rows.

use std::fmt;
use std::str::FromStr;

use log::warn;
use sha2::{Digest, Sha256};

use crate::dataset::{BlockLabels, Centering, EncodedDesign};
use crate::error::{Error, Result};
use crate::linalg::{fit_with, mean, Matrix, QrFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorVariant {
    Full,
    ExcludeS,
    Marginal,
    Feo,
    Fseo,
    Total,
    BlackBoxCorrected,
    CaldersBaseline,
}

impl EstimatorVariant {
    pub const ALL: [EstimatorVariant; 8] = [
        EstimatorVariant::Full,
        EstimatorVariant::ExcludeS,
        EstimatorVariant::Marginal,
        EstimatorVariant::Feo,
        EstimatorVariant::Fseo,
        EstimatorVariant::Total,
        EstimatorVariant::BlackBoxCorrected,
        EstimatorVariant::CaldersBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorVariant::Full => "full",
            EstimatorVariant::ExcludeS => "exclude-s",
            EstimatorVariant::Marginal => "marginal",
            EstimatorVariant::Feo => "feo",
            EstimatorVariant::Fseo => "fseo",
            EstimatorVariant::Total => "total",
            EstimatorVariant::BlackBoxCorrected => "blackbox-corrected",
            EstimatorVariant::CaldersBaseline => "calders",
        }
    }
}

impl fmt::Display for EstimatorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "full" | "ols" => EstimatorVariant::Full,
            "exclude-s" | "excludes" | "exclude" => EstimatorVariant::ExcludeS,
            "marginal" => EstimatorVariant::Marginal,
            "feo" => EstimatorVariant::Feo,
            "fseo" | "seo" => EstimatorVariant::Fseo,
            "total" => EstimatorVariant::Total,
            "blackbox-corrected" | "blackbox" | "corrected" => EstimatorVariant::BlackBoxCorrected,
            "calders" => EstimatorVariant::CaldersBaseline,
            _ => return Err(Error::Variant(format!("unknown estimator variant '{s}'"))),
        })
    }
}

/// Coefficients of the joint fit plus the auxiliary regressions.
///
/// `beta0` is the intercept on centered blocks, i.e. the training mean of y.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalModelFit {
    pub beta0: f64,
    pub beta_s: Vec<f64>,
    pub beta_x: Vec<f64>,
    pub beta_w: Vec<f64>,
    pub beta_b: Vec<f64>,
    /// Rows: S columns then X columns; one column per `[W|B]` column.
    pub lambda_sx_for_w: Matrix,
    /// Rows: S columns; one column per `[W|B]` column.
    pub lambda_s_for_w: Matrix,
    /// Rows: X columns; one column per S column.
    pub lambda_x_for_s: Matrix,
    /// Restricted model coefficients over `[X | W | B]`.
    pub exclude_s_coef: Vec<f64>,
    pub means: Centering,
    pub labels: BlockLabels,
    pub n: usize,
    pub rank: usize,
    /// Labels of covariates aliased out of the joint fit.
    pub dropped: Vec<String>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpartialPrediction {
    pub variant: EstimatorVariant,
    pub values: Vec<f64>,
    pub training_fingerprint: String,
}

fn fingerprint(design: &EncodedDesign) -> String {
    let mut h = Sha256::new();
    for v in &design.y {
        h.update(v.to_le_bytes());
    }
    for (m, labels) in [
        (&design.s, &design.labels.s),
        (&design.x, &design.labels.x),
        (&design.w, &design.labels.w),
        (&design.b, &design.labels.b),
    ] {
        h.update((m.cols() as u64).to_le_bytes());
        for l in labels {
            h.update(l.as_bytes());
            h.update([0u8]);
        }
        for v in m.as_slice() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn check_centered(design: &EncodedDesign) -> Result<()> {
    for m in [&design.s, &design.x, &design.w, &design.b] {
        for col in m.columns() {
            let scale = col.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            if mean(col).abs() > 1e-8 * scale {
                return Err(Error::Config(
                    "design blocks must be centered before fitting (see dataset::encode)".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Coefficients of each column of `targets` regressed on `basis`
/// (`basis.cols() x targets.cols()`).
fn coefficient_matrix(basis: &Matrix, targets: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(basis.cols(), targets.cols());
    if basis.is_empty() || targets.is_empty() {
        return out;
    }
    let qr = QrFactor::new(basis);
    for j in 0..targets.cols() {
        let c = qr.solve(targets.col(j));
        out.col_mut(j).copy_from_slice(&c);
    }
    out
}

pub fn fit_total(design: &EncodedDesign) -> Result<TotalModelFit> {
    let n = design.rows();
    if n == 0 {
        return Err(Error::EmptyDesign("no rows".into()));
    }
    let p = design.covariate_count();
    if p == 0 {
        return Err(Error::EmptyDesign("all covariate blocks are empty".into()));
    }
    let full = design.full_matrix();
    if !full.all_finite() || design.y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design".into()));
    }
    check_centered(design)?;
    if n <= p + 1 {
        warn!("{n} rows for {p} covariates plus intercept: fit is rank deficient");
    }

    let beta0 = mean(&design.y);
    let yc: Vec<f64> = design.y.iter().map(|v| v - beta0).collect();

    let qr = QrFactor::new(&full);
    let joint = fit_with(&qr, &yc);
    let (ps, px, pw) = (design.s.cols(), design.x.cols(), design.w.cols());
    let coef = &joint.coefficients;
    let beta_s = coef[..ps].to_vec();
    let beta_x = coef[ps..ps + px].to_vec();
    let beta_w = coef[ps + px..ps + px + pw].to_vec();
    let beta_b = coef[ps + px + pw..].to_vec();

    let all_labels: Vec<&String> = design
        .labels
        .s
        .iter()
        .chain(&design.labels.x)
        .chain(&design.labels.w)
        .chain(&design.labels.b)
        .collect();
    let dropped = joint
        .dropped_columns
        .iter()
        .map(|&j| all_labels[j].clone())
        .collect();

    let sx = Matrix::hcat(&[&design.s, &design.x])?;
    let wb = design.suspect_matrix();
    let lambda_sx_for_w = coefficient_matrix(&sx, &wb);
    let lambda_s_for_w = coefficient_matrix(&design.s, &wb);
    let lambda_x_for_s = coefficient_matrix(&design.x, &design.s);

    let xwb = Matrix::hcat(&[&design.x, &design.w, &design.b])?;
    let exclude_s_coef = if xwb.is_empty() {
        Vec::new()
    } else {
        QrFactor::new(&xwb).solve(&yc)
    };

    Ok(TotalModelFit {
        beta0,
        beta_s,
        beta_x,
        beta_w,
        beta_b,
        lambda_sx_for_w,
        lambda_s_for_w,
        lambda_x_for_s,
        exclude_s_coef,
        means: design.means.clone(),
        labels: design.labels.clone(),
        n,
        rank: joint.rank,
        dropped,
        fingerprint: fingerprint(design),
    })
}

impl TotalModelFit {
    /// Coefficients over `[W | B]`.
    pub fn beta_suspect(&self) -> Vec<f64> {
        [self.beta_w.clone(), self.beta_b.clone()].concat()
    }

    fn ps(&self) -> usize {
        self.beta_s.len()
    }

    /// `Λ̂` rows belonging to S in the joint `[W|B] ~ [S, X]` regression.
    pub fn lambda_s_joint(&self) -> Matrix {
        let rows: Vec<usize> = (0..self.ps()).collect();
        self.lambda_sx_for_w.select_rows(&rows)
    }

    /// `Λ̂` rows belonging to X in the joint `[W|B] ~ [S, X]` regression.
    pub fn lambda_x_joint(&self) -> Matrix {
        let rows: Vec<usize> = (self.ps()..self.lambda_sx_for_w.rows()).collect();
        self.lambda_sx_for_w.select_rows(&rows)
    }

    /// Intercept of the full model on the uncentered covariate scale.
    pub fn raw_intercept(&self) -> f64 {
        let shift: f64 = [
            (&self.beta_s, &self.means.s),
            (&self.beta_x, &self.means.x),
            (&self.beta_w, &self.means.w),
            (&self.beta_b, &self.means.b),
        ]
        .iter()
        .map(|(b, m)| b.iter().zip(m.iter()).map(|(b, m)| b * m).sum::<f64>())
        .sum();
        self.beta0 - shift
    }

    /// Coefficient table rows `(block, column, value)`, raw-scale intercept
    /// first.
    pub fn coefficient_table(&self) -> Vec<(&'static str, String, f64)> {
        let mut rows = vec![("intercept", "(intercept)".to_string(), self.raw_intercept())];
        for (block, labels, coef) in [
            ("sensitive", &self.labels.s, &self.beta_s),
            ("legitimate", &self.labels.x, &self.beta_x),
            ("suspect", &self.labels.w, &self.beta_w),
            ("blackbox", &self.labels.b, &self.beta_b),
        ] {
            for (l, c) in labels.iter().zip(coef.iter()) {
                rows.push((block, l.clone(), *c));
            }
        }
        rows
    }

    pub(crate) fn align(&self, design: &EncodedDesign) -> Result<EncodedDesign> {
        if design.labels != self.labels {
            return Err(Error::Schema(
                "design columns do not match the columns the model was trained on".into(),
            ));
        }
        design.centered_with(&self.means)
    }
}

/// `W - S Λ̂`: suspect columns with their S component removed.
fn purge_sensitive(wb: &Matrix, s: &Matrix, lambda_s: &Matrix) -> Matrix {
    if s.is_empty() {
        return wb.clone();
    }
    wb.sub(&s.mul(lambda_s))
}

fn offset(beta0: f64, parts: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut out = vec![beta0; n];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

pub fn predict(
    fit: &TotalModelFit,
    design: &EncodedDesign,
    variant: EstimatorVariant,
) -> Result<ImpartialPrediction> {
    let d = fit.align(design)?;
    let n = d.rows();
    let wb = d.suspect_matrix();
    let beta_wb = fit.beta_suspect();

    let values = match variant {
        EstimatorVariant::Full => offset(
            fit.beta0,
            &[
                d.s.mul_vec(&fit.beta_s),
                d.x.mul_vec(&fit.beta_x),
                wb.mul_vec(&beta_wb),
            ],
            n,
        ),
        EstimatorVariant::ExcludeS => {
            let xwb = Matrix::hcat(&[&d.x, &wb])?;
            offset(fit.beta0, &[xwb.mul_vec(&fit.exclude_s_coef)], n)
        }
        EstimatorVariant::Marginal => vec![fit.beta0; n],
        EstimatorVariant::Feo => {
            if !wb.is_empty() {
                return Err(Error::Variant(
                    "FEO needs a design without suspect or black-box covariates; \
                     use the total variant instead"
                        .into(),
                ));
            }
            offset(fit.beta0, &[d.x.mul_vec(&fit.beta_x)], n)
        }
        EstimatorVariant::Fseo => {
            if !d.x.is_empty() {
                return Err(Error::Variant(
                    "F-SEO needs a design without legitimate covariates; \
                     use the total variant instead"
                        .into(),
                ));
            }
            let purged = purge_sensitive(&wb, &d.s, &fit.lambda_s_for_w);
            offset(fit.beta0, &[purged.mul_vec(&beta_wb)], n)
        }
        EstimatorVariant::Total | EstimatorVariant::BlackBoxCorrected => {
            if variant == EstimatorVariant::BlackBoxCorrected && d.b.is_empty() {
                return Err(Error::Variant(
                    "black-box correction needs black-box columns in the design".into(),
                ));
            }
            // impartial estimate of each suspect column: its fit on [S, X]
            // with the S part dropped
            let lambda_x = fit.lambda_x_joint();
            let w_hat = if d.x.is_empty() {
                Matrix::zeros(n, wb.cols())
            } else {
                d.x.mul(&lambda_x)
            };
            let sx = Matrix::hcat(&[&d.s, &d.x])?;
            let w_unique = wb.sub(&sx.mul(&fit.lambda_sx_for_w));
            offset(
                fit.beta0,
                &[
                    d.x.mul_vec(&fit.beta_x),
                    w_hat.mul_vec(&beta_wb),
                    w_unique.mul_vec(&beta_wb),
                ],
                n,
            )
        }
        EstimatorVariant::CaldersBaseline => {
            return Err(Error::Variant(
                "the Calders baseline is produced by harness::calders_baseline, not by a fit".into(),
            ))
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("predictions".into()));
    }
    Ok(ImpartialPrediction {
        variant,
        values,
        training_fingerprint: fit.fingerprint.clone(),
    })
}

/// Replace the suspect block by its S-free part and declare it legitimate.
///
/// The S component is the one estimated in the joint regression of W on
/// `[S, X]`; with no legitimate covariates this is exactly `(I - H_S) W`.
/// Refitting on the result leaves the suspect coefficients unchanged, and the
/// FEO prediction of the refit equals the Total prediction of the original.
pub fn residualize_suspect(design: &EncodedDesign) -> Result<EncodedDesign> {
    if design.s.is_empty() {
        warn!("residualize_suspect: no sensitive covariates, design returned unchanged");
        return Ok(design.clone());
    }
    let sx = Matrix::hcat(&[&design.s, &design.x])?;
    let lambda = coefficient_matrix(&sx, &design.w);
    let ps = design.s.cols();
    let rows: Vec<usize> = (0..ps).collect();
    let lambda_s = lambda.select_rows(&rows);
    let resid = purge_sensitive(&design.w, &design.s, &lambda_s);

    let mut d = design.clone();
    d.x = Matrix::hcat(&[&design.x, &resid])?;
    d.labels.x.extend(design.labels.w.iter().map(|l| format!("{l}|s-resid")));
    // residualized columns of a centered W stay centered
    d.means.x.extend(design.means.w.iter().copied());
    d.w = Matrix::empty(design.rows());
    d.labels.w.clear();
    d.means.w.clear();
    Ok(d)
}

/// Append external predictions as black-box covariates, fit, and return
/// the corrected (impartial) predictions.
pub fn correct_blackbox(
    design: &EncodedDesign,
    external: &Matrix,
) -> Result<(TotalModelFit, ImpartialPrediction)> {
    if external.rows() != design.rows() {
        return Err(Error::dim("external predictions", design.rows(), external.rows()));
    }
    if !external.all_finite() {
        return Err(Error::NonFinite("external predictions".into()));
    }
    let start = design.b.cols();
    let labels = (0..external.cols())
        .map(|k| format!("blackbox_{}", start + k))
        .collect();
    let d = design.with_blackbox(external, labels, None)?;
    let fit = fit_total(&d)?;
    let pred = predict(&fit, &d, EstimatorVariant::BlackBoxCorrected)?;
    Ok((fit, pred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{encode, read_csv, Schema};

    fn two_group() -> EncodedDesign {
        let schema = Schema::parse("y = response\ng = sensitive,categorical\n").unwrap();
        let d = read_csv(
            "y,g\n1,a\n3,a\n2,b\n6,b\n7,b\n".as_bytes(),
            &schema,
            "mem",
        )
        .unwrap();
        encode(&d, &schema).unwrap()
    }

    #[test]
    fn two_group_ols_is_difference_of_means() {
        let d = two_group();
        let fit = fit_total(&d).unwrap();
        assert!((fit.beta0 - 19.0 / 5.0).abs() < 1e-12);
        assert!((fit.beta_s[0] - (5.0 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn marginal_is_constant_mean() {
        let d = two_group();
        let fit = fit_total(&d).unwrap();
        let p = predict(&fit, &d, EstimatorVariant::Marginal).unwrap();
        assert!(p.values.iter().all(|&v| (v - 3.8).abs() < 1e-12));
    }

    #[test]
    fn variant_contract_errors() {
        let schema =
            Schema::parse("y = response\ng = sensitive,categorical\nz = suspect\nx = legitimate\n")
                .unwrap();
        let data = read_csv(
            "y,g,z,x\n1,a,1,2\n3,a,2,1\n2,b,5,0\n6,b,4,3\n7,b,3,3\n".as_bytes(),
            &schema,
            "mem",
        )
        .unwrap();
        let d = encode(&data, &schema).unwrap();
        let fit = fit_total(&d).unwrap();
        assert!(matches!(
            predict(&fit, &d, EstimatorVariant::Feo),
            Err(Error::Variant(_))
        ));
        assert!(matches!(
            predict(&fit, &d, EstimatorVariant::Fseo),
            Err(Error::Variant(_))
        ));
        assert!(matches!(
            predict(&fit, &d, EstimatorVariant::CaldersBaseline),
            Err(Error::Variant(_))
        ));
        assert!(predict(&fit, &d, EstimatorVariant::Total).is_ok());
    }

    #[test]
    fn uncentered_design_is_rejected() {
        let schema = Schema::parse("y = response\ng = sensitive,categorical\n").unwrap();
        let data = read_csv("y,g\n1,a\n3,b\n2,b\n".as_bytes(), &schema, "mem").unwrap();
        let raw = crate::dataset::encode_raw(&data, &schema).unwrap();
        assert!(matches!(fit_total(&raw), Err(Error::Config(_))));
    }

    #[test]
    fn empty_blocks_rejected() {
        let schema = Schema::parse("y = response\n").unwrap();
        let data = read_csv("y\n1\n2\n".as_bytes(), &schema, "mem").unwrap();
        let d = encode(&data, &schema).unwrap();
        assert!(matches!(fit_total(&d), Err(Error::EmptyDesign(_))));
    }

    #[test]
    fn variant_names_round_trip() {
        for v in EstimatorVariant::ALL {
            assert_eq!(v.name().parse::<EstimatorVariant>().unwrap(), v);
        }
        assert!("bogus".parse::<EstimatorVariant>().is_err());
    }

    #[test]
    fn perfect_predictor_reduces_to_group_mean_equalized_response() {
        let d = two_group();
        let ext = Matrix::column_vector(d.y.clone());
        let (_, pred) = correct_blackbox(&d, &ext).unwrap();
        // y minus its group mean plus the overall mean
        let expected = [2.8, 4.8, 0.8, 4.8, 5.8];
        for (p, e) in pred.values.iter().zip(expected) {
            assert!((p - e).abs() < 1e-10, "{p} vs {e}");
        }
    }

    #[test]
    fn constant_predictor_is_aliased() {
        let d = two_group();
        let ext = Matrix::column_vector(vec![0.7; 5]);
        let (fit, pred) = correct_blackbox(&d, &ext).unwrap();
        assert_eq!(fit.beta_b, vec![0.0]);
        assert_eq!(fit.dropped, vec!["blackbox_0".to_string()]);
        let base = fit_total(&d).unwrap();
        let total = predict(&base, &d, EstimatorVariant::Total).unwrap();
        for (a, b) in pred.values.iter().zip(&total.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
