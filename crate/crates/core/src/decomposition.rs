//! Split full-model fitted values into legally meaningful parts.
//!
//! Each covariate block's contribution `M·β̂` is separated into the piece
//! lying in the span of the other blocks (`H·M·β̂`) and the piece orthogonal
//! to it (`(I-H)·M·β̂`). Which blocks condition which depends on the mode:
//!
//! | mode  | S split against | X split against | W split against |
//! |-------|-----------------|-----------------|-----------------|
//! | FEO   | X               | S               | -               |
//! | F-SEO | W               | -               | S               |
//! | Total | [X, W]          | [S, W]          | [X, S]          |
//!
//! The S pieces are disparate impact (`di`, in span) and disparate treatment
//! (`dt`, orthogonal). The in-span X piece is `sd_plus`; the in-span W piece is
//! `sd_minus_mixed` (pure sd⁻ in F-SEO mode, mixed sd⁻/sd⁺ in Total mode).
//! All blocks are centered, so projections carry no intercept column and the
//! intercept is reported on its own.

use std::fmt;
use std::str::FromStr;

use crate::dataset::EncodedDesign;
use crate::error::{Error, Result};
use crate::estimators::TotalModelFit;
use crate::linalg::{project_with, Matrix, QrFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionMode {
    Feo,
    Fseo,
    Total,
}

impl DecompositionMode {
    pub fn name(self) -> &'static str {
        match self {
            DecompositionMode::Feo => "feo",
            DecompositionMode::Fseo => "fseo",
            DecompositionMode::Total => "total",
        }
    }
}

impl fmt::Display for DecompositionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecompositionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feo" => Ok(DecompositionMode::Feo),
            "fseo" | "seo" => Ok(DecompositionMode::Fseo),
            "total" => Ok(DecompositionMode::Total),
            other => Err(Error::Mode(format!("unknown decomposition mode '{other}'"))),
        }
    }
}

/// Per-row components; every row sums to the full-model fitted value.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub mode: DecompositionMode,
    pub intercept: Vec<f64>,
    pub dt: Vec<f64>,
    pub di: Vec<f64>,
    pub sd_plus: Vec<f64>,
    pub sd_minus_mixed: Vec<f64>,
    pub unique_x: Vec<f64>,
    pub unique_w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    pub name: &'static str,
    pub sum: f64,
    /// Root mean square over rows.
    pub rms: f64,
}

impl ComponentReport {
    pub const COLUMN_NAMES: [&'static str; 7] = [
        "intercept",
        "dt",
        "di",
        "sd_plus",
        "sd_minus_mixed",
        "unique_x",
        "unique_w",
    ];

    pub fn rows(&self) -> usize {
        self.intercept.len()
    }

    pub fn columns(&self) -> [(&'static str, &[f64]); 7] {
        [
            ("intercept", &self.intercept),
            ("dt", &self.dt),
            ("di", &self.di),
            ("sd_plus", &self.sd_plus),
            ("sd_minus_mixed", &self.sd_minus_mixed),
            ("unique_x", &self.unique_x),
            ("unique_w", &self.unique_w),
        ]
    }

    /// Rowwise sum of all components.
    pub fn total(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|i| self.columns().iter().map(|(_, c)| c[i]).sum())
            .collect()
    }

    pub fn summary(&self) -> Vec<ComponentSummary> {
        self.columns()
            .iter()
            .map(|(name, c)| ComponentSummary {
                name,
                sum: c.iter().sum(),
                rms: rms(c),
            })
            .collect()
    }
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// `(H_basis · M · β, (I - H_basis) · M · β)`.
fn split(basis: &Matrix, block: &Matrix, coef: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = block.rows();
    if block.is_empty() {
        return (vec![0.0; n], vec![0.0; n]);
    }
    let qr = QrFactor::new(basis);
    let pair = project_with(&qr, block);
    (pair.projected.mul_vec(coef), pair.orthogonal.mul_vec(coef))
}

pub fn decompose(
    fit: &TotalModelFit,
    design: &EncodedDesign,
    mode: DecompositionMode,
) -> Result<ComponentReport> {
    let d = fit.align(design)?;
    let n = d.rows();
    let wb = d.suspect_matrix();
    let beta_wb = fit.beta_suspect();

    let (s_basis, x_basis, w_basis) = match mode {
        DecompositionMode::Feo => {
            if !wb.is_empty() {
                return Err(Error::Mode(
                    "FEO decomposition needs a design without suspect or black-box covariates"
                        .into(),
                ));
            }
            (d.x.clone(), d.s.clone(), Matrix::empty(n))
        }
        DecompositionMode::Fseo => {
            if !d.x.is_empty() {
                return Err(Error::Mode(
                    "F-SEO decomposition needs a design without legitimate covariates".into(),
                ));
            }
            (wb.clone(), Matrix::empty(n), d.s.clone())
        }
        DecompositionMode::Total => (
            Matrix::hcat(&[&d.x, &wb])?,
            Matrix::hcat(&[&d.s, &wb])?,
            Matrix::hcat(&[&d.x, &d.s])?,
        ),
    };

    let (di, dt) = split(&s_basis, &d.s, &fit.beta_s);
    let (sd_plus, unique_x) = split(&x_basis, &d.x, &fit.beta_x);
    let (sd_minus_mixed, unique_w) = split(&w_basis, &wb, &beta_wb);

    let report = ComponentReport {
        mode,
        intercept: vec![fit.beta0; n],
        dt,
        di,
        sd_plus,
        sd_minus_mixed,
        unique_x,
        unique_w,
    };
    Ok(report)
}

/// Marginal = direct + indirect split of the legitimate coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefDecomposition {
    pub labels: Vec<String>,
    /// Restricted (S excluded) model coefficients.
    pub marginal: Vec<f64>,
    /// Full model coefficients.
    pub direct: Vec<f64>,
    /// `Λ̂_x β̂_s`, with `Λ̂_x` from regressing S on X.
    pub indirect: Vec<f64>,
    pub lambda_x: Matrix,
}

pub fn decompose_coefficients(
    fit: &TotalModelFit,
    design: &EncodedDesign,
) -> Result<CoefDecomposition> {
    if !fit.beta_suspect().is_empty() {
        return Err(Error::Mode(
            "coefficient decomposition is defined for designs without suspect covariates".into(),
        ));
    }
    if design.labels != fit.labels {
        return Err(Error::Schema(
            "design columns do not match the columns the model was trained on".into(),
        ));
    }
    let indirect = fit.lambda_x_for_s.mul_vec(&fit.beta_s);
    Ok(CoefDecomposition {
        labels: fit.labels.x.clone(),
        marginal: fit.exclude_s_coef.clone(),
        direct: fit.beta_x.clone(),
        indirect,
        lambda_x: fit.lambda_x_for_s.clone(),
    })
}

/// Magnitudes (root mean square over rows) of the redlining-related parts.
#[derive(Debug, Clone, PartialEq)]
pub struct RedliningSummary {
    pub disparate_treatment: f64,
    pub informative_redlining: f64,
    pub sd_minus: f64,
    /// Magnitude of `di + sd⁻` taken row by row.
    pub uninformative_redlining: f64,
}

pub fn redlining_report(report: &ComponentReport) -> Result<RedliningSummary> {
    if report.mode == DecompositionMode::Feo {
        return Err(Error::Mode(
            "FEO decompositions have no sd- component; use fseo or total mode".into(),
        ));
    }
    let combined: Vec<f64> = report
        .di
        .iter()
        .zip(&report.sd_minus_mixed)
        .map(|(a, b)| a + b)
        .collect();
    Ok(RedliningSummary {
        disparate_treatment: rms(&report.dt),
        informative_redlining: rms(&report.di),
        sd_minus: rms(&report.sd_minus_mixed),
        uninformative_redlining: rms(&combined),
    })
}
