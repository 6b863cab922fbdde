//! Impartiality Score: moment conditions on the residual `û = target - Ŷ`.
//!
//! All four conditions are evaluated with sample moments (population
//! denominators). Correlation identities are rewritten through covariances,
//! e.g. `Cor(û,x) - Cor(û,s)Cor(s)⁻¹Cor(s,x) = Cov(û, x - L(x|s)) / (sd(û) sd(x))`,
//! so the only inversion is a least-squares solve against the centered S block.

use std::fmt;
use std::str::FromStr;

use crate::dataset::EncodedDesign;
use crate::error::{Error, Result};
use crate::linalg::{column_center, dot, mean, Matrix, QrFactor};

/// Columns or residuals with variance below this are treated as constant.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpartialityMode {
    /// Every non-sensitive covariate is legitimate.
    Feo,
    /// Declared legitimate columns stay legitimate; suspect and black-box
    /// columns are scored as suspect.
    Seo,
}

impl ImpartialityMode {
    pub fn name(self) -> &'static str {
        match self {
            ImpartialityMode::Feo => "FEO",
            ImpartialityMode::Seo => "SEO",
        }
    }
}

impl fmt::Display for ImpartialityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ImpartialityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "feo" => Ok(ImpartialityMode::Feo),
            "seo" | "fseo" | "total" => Ok(ImpartialityMode::Seo),
            other => Err(Error::Mode(format!("unknown impartiality mode '{other}'"))),
        }
    }
}

/// Per-condition absolute discrepancies, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpartialityBreakdown {
    pub mode: ImpartialityMode,
    pub mean_term: f64,
    pub legitimate: Vec<f64>,
    pub suspect: Vec<f64>,
    pub sensitive: Vec<f64>,
}

impl ImpartialityBreakdown {
    pub fn covariates(&self) -> usize {
        self.legitimate.len() + self.suspect.len() + self.sensitive.len()
    }

    pub fn score(&self) -> f64 {
        let total = self.mean_term
            + self.legitimate.iter().sum::<f64>()
            + self.suspect.iter().sum::<f64>()
            + self.sensitive.iter().sum::<f64>();
        total / (1 + self.covariates()) as f64
    }
}

pub fn impartiality_score(
    predictions: &[f64],
    design: &EncodedDesign,
    residual_target: &[f64],
    mode: ImpartialityMode,
) -> Result<f64> {
    Ok(impartiality_breakdown(predictions, design, residual_target, mode)?.score())
}

pub fn impartiality_breakdown(
    predictions: &[f64],
    design: &EncodedDesign,
    residual_target: &[f64],
    mode: ImpartialityMode,
) -> Result<ImpartialityBreakdown> {
    let n = design.rows();
    if predictions.len() != n {
        return Err(Error::dim("predictions", n, predictions.len()));
    }
    if residual_target.len() != n {
        return Err(Error::dim("residual target", n, residual_target.len()));
    }
    if n == 0 {
        return Err(Error::EmptyDesign("no rows to score".into()));
    }
    if design.s.is_empty() {
        return Err(Error::Mode(
            "the impartiality score needs at least one sensitive column".into(),
        ));
    }
    if predictions.iter().chain(residual_target).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("predictions or residual target".into()));
    }

    let (x, w) = match mode {
        ImpartialityMode::Feo => (
            Matrix::hcat(&[&design.x, &design.w, &design.b])?,
            Matrix::empty(n),
        ),
        ImpartialityMode::Seo => (design.x.clone(), design.suspect_matrix()),
    };

    let resid: Vec<f64> = residual_target
        .iter()
        .zip(predictions)
        .map(|(t, p)| t - p)
        .collect();
    let u_mean = mean(&resid);
    let u_c: Vec<f64> = resid.iter().map(|v| v - u_mean).collect();
    let u_sd = (dot(&u_c, &u_c) / n as f64).sqrt();
    let u_ok = u_sd * u_sd > VARIANCE_FLOOR;

    let s_means: Vec<f64> = design.s.columns().map(mean).collect();
    let (s_c, _) = column_center(&design.s);
    let s_ok: Vec<usize> = (0..s_c.cols())
        .filter(|&j| dot(s_c.col(j), s_c.col(j)) / n as f64 > VARIANCE_FLOOR)
        .collect();
    let s_used = s_c.select_cols(&s_ok);
    let s_qr = QrFactor::new(&s_used);
    if s_qr.rank() < s_used.cols() {
        let names = s_qr
            .dropped()
            .into_iter()
            .map(|k| design.labels.s[s_ok[k]].clone())
            .collect();
        return Err(Error::SingularSensitive(names));
    }

    // condition 1: û's standardized mean against its projection on s
    let mean_term = if u_ok {
        let gamma = s_qr.solve(&u_c);
        let rhs: f64 = gamma
            .iter()
            .zip(&s_ok)
            .map(|(g, &j)| g * s_means[j])
            .sum::<f64>()
            / u_sd;
        (u_mean / u_sd - rhs).abs()
    } else {
        0.0
    };

    // conditions 2 and 3: partial correlation of û with each column given s
    let partial = |m: &Matrix| -> Vec<f64> {
        let (m_c, _) = column_center(m);
        m_c.columns()
            .map(|col| {
                let sd = (dot(col, col) / n as f64).sqrt();
                if !u_ok || sd * sd <= VARIANCE_FLOOR {
                    return 0.0;
                }
                let fitted = s_qr.project(col);
                let cov: f64 = u_c
                    .iter()
                    .zip(col.iter().zip(&fitted))
                    .map(|(u, (c, f))| u * (c - f))
                    .sum::<f64>()
                    / n as f64;
                (cov / (u_sd * sd)).abs()
            })
            .collect()
    };
    let legitimate = partial(&x);
    let suspect = partial(&w);

    // condition 4: prediction variation beyond x must not track s
    let p_mean = mean(predictions);
    let mut eta: Vec<f64> = predictions.iter().map(|p| p - p_mean).collect();
    if !x.is_empty() {
        let (x_c, _) = column_center(&x);
        let fitted = QrFactor::new(&x_c).project(&eta);
        for (e, f) in eta.iter_mut().zip(&fitted) {
            *e -= f;
        }
    }
    let eta_sd = (dot(&eta, &eta) / n as f64).sqrt();
    let sensitive = s_c
        .columns()
        .map(|col| {
            let sd = (dot(col, col) / n as f64).sqrt();
            if eta_sd * eta_sd <= VARIANCE_FLOOR || sd * sd <= VARIANCE_FLOOR {
                return 0.0;
            }
            (dot(&eta, col) / n as f64 / (eta_sd * sd)).abs()
        })
        .collect();

    Ok(ImpartialityBreakdown {
        mode,
        mean_term,
        legitimate,
        suspect,
        sensitive,
    })
}
