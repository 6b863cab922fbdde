use crate::error::{Error, Result};

/// Dense column-major matrix of `f64`.
///
/// Columns are the unit of work everywhere in this crate (design blocks,
/// projections, centering), so each column is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// An `rows x 0` matrix: an empty covariate block.
    pub fn empty(rows: usize) -> Self {
        Matrix::zeros(rows, 0)
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix storage", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from columns; all columns must share one length.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::dim("matrix column", rows, c.len()));
            }
            data.extend_from_slice(c);
        }
        Ok(Matrix {
            rows,
            cols: columns.len(),
            data,
        })
    }

    /// Build from row-major nested slices (handy in tests).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        let mut m = Matrix::zeros(n, p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::dim("matrix row", p, r.len()));
            }
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn column_vector(values: Vec<f64>) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.cols).map(move |j| self.col(j))
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * v` for a coefficient vector of length `cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec: coefficient length");
        let mut out = vec![0.0; self.rows];
        for (j, &c) in v.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.col(j)) {
                *o += x * c;
            }
        }
        out
    }

    /// `self * other`.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "mul: inner dimension");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for k in 0..other.cols {
            let col = self.mul_vec(other.col(k));
            out.col_mut(k).copy_from_slice(&col);
        }
        out
    }

    /// `selfᵀ * other`, i.e. all pairwise column dot products.
    pub fn tr_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "tr_mul: row count");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for i in 0..self.cols {
            for j in 0..other.cols {
                out.set(i, j, dot(self.col(i), other.col(j)));
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Horizontal concatenation `[a | b | ...]`; every part needs the same row count.
    pub fn hcat(parts: &[&Matrix]) -> Result<Matrix> {
        let rows = match parts.first() {
            Some(m) => m.rows,
            None => return Err(Error::EmptyDesign("hcat of zero blocks".into())),
        };
        let mut data = Vec::new();
        let mut cols = 0;
        for m in parts {
            if m.rows != rows {
                return Err(Error::dim("hcat rows", rows, m.rows));
            }
            data.extend_from_slice(&m.data);
            cols += m.cols;
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for j in 0..self.cols {
            let src = self.col(j);
            for (dst, &i) in out.col_mut(j).iter_mut().zip(idx) {
                *dst = src[i];
            }
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// Largest absolute entry; 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    // scaled to avoid overflow on large columns
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let ss: f64 = a.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}

/// Compensated (Neumaier) sum.
pub fn sum(a: &[f64]) -> f64 {
    let mut s = 0.0_f64;
    let mut c = 0.0_f64;
    for &v in a {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    sum(a) / a.len() as f64
}
