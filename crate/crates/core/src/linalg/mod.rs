//! Dense least squares, column-space projection and centering.
//!
//! Everything here is a pure function of its inputs. Projections go through a
//! pivoted QR factorization; the n x n hat matrix is never formed.

mod matrix;
mod qr;

pub use matrix::{dot, mean, norm2, sum, Matrix};
pub use qr::QrFactor;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    /// One entry per design column; aliased columns carry 0.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rank: usize,
    pub dropped_columns: Vec<usize>,
}

/// `projected = H_basis · target`, `orthogonal = (I - H_basis) · target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    pub projected: Matrix,
    pub orthogonal: Matrix,
}

pub fn solve_least_squares(design: &Matrix, response: &[f64]) -> Result<LeastSquaresFit> {
    if design.rows() != response.len() {
        return Err(Error::dim("least squares response", design.rows(), response.len()));
    }
    if design.rows() == 0 {
        return Err(Error::EmptyDesign("least squares with zero rows".into()));
    }
    if !design.all_finite() {
        return Err(Error::NonFinite("least squares design".into()));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("least squares response".into()));
    }
    let qr = QrFactor::new(design);
    Ok(fit_with(&qr, response))
}

/// Least squares against an existing factorization (for repeated responses).
pub fn fit_with(qr: &QrFactor, response: &[f64]) -> LeastSquaresFit {
    let coefficients = qr.solve(response);
    let fitted = qr.project(response);
    let residuals = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    LeastSquaresFit {
        coefficients,
        fitted,
        residuals,
        rank: qr.rank(),
        dropped_columns: qr.dropped(),
    }
}

pub fn project(basis: &Matrix, target: &Matrix) -> Result<ProjectionPair> {
    if basis.rows() != target.rows() {
        return Err(Error::dim("projection rows", basis.rows(), target.rows()));
    }
    if !basis.all_finite() || !target.all_finite() {
        return Err(Error::NonFinite("projection input".into()));
    }
    let qr = QrFactor::new(basis);
    Ok(project_with(&qr, target))
}

pub fn project_with(qr: &QrFactor, target: &Matrix) -> ProjectionPair {
    let mut projected = Matrix::zeros(target.rows(), target.cols());
    let mut orthogonal = Matrix::zeros(target.rows(), target.cols());
    for j in 0..target.cols() {
        let v = target.col(j);
        let h = qr.project(v);
        for (i, (&vi, hi)) in v.iter().zip(h).enumerate() {
            projected.set(i, j, hi);
            orthogonal.set(i, j, vi - hi);
        }
    }
    ProjectionPair {
        projected,
        orthogonal,
    }
}

/// Subtract each column's mean. Constant columns become exact zeros.
pub fn column_center(m: &Matrix) -> (Matrix, Vec<f64>) {
    let means: Vec<f64> = m
        .columns()
        .map(|c| {
            if c.iter().all(|&v| v == c[0]) {
                c[0]
            } else {
                mean(c)
            }
        })
        .collect();
    (center_with(m, &means), means)
}

/// Subtract externally supplied column means (e.g. training means at
/// prediction time).
pub fn center_with(m: &Matrix, means: &[f64]) -> Matrix {
    assert_eq!(means.len(), m.cols(), "center_with: means length");
    let mut out = m.clone();
    for (j, &mu) in means.iter().enumerate() {
        let col = out.col_mut(j);
        let constant = col.iter().all(|&v| v == col[0]);
        if constant && col[0] == mu {
            col.iter_mut().for_each(|v| *v = 0.0);
        } else {
            col.iter_mut().for_each(|v| *v -= mu);
        }
    }
    out
}
