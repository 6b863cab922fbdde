use super::matrix::{dot, norm2, Matrix};

/// Householder QR with column pivoting, `A P = Q R`.
///
/// R sits in the upper triangle of `packed`; the Householder vectors sit
/// below the diagonal with an implicit leading 1. Columns whose pivot falls
/// under `max(rows, cols) * eps * |R[0,0]|` are treated as aliased.
#[derive(Debug, Clone)]
pub struct QrFactor {
    packed: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl QrFactor {
    pub fn new(a: &Matrix) -> Self {
        let (n, p) = (a.rows(), a.cols());
        let mut packed = a.clone();
        let steps = n.min(p);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..p).collect();

        for k in 0..steps {
            // pivot: remaining column with the largest trailing norm, lowest index on ties
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..p {
                let nj = norm2(&packed.col(j)[k..]);
                if nj > best_norm {
                    best_norm = nj;
                    best = j;
                }
            }
            if best != k {
                swap_cols(&mut packed, k, best);
                perm.swap(k, best);
            }

            let (beta, t) = householder(&mut packed.col_mut(k)[k..]);
            tau[k] = t;
            if t != 0.0 {
                let v: Vec<f64> = {
                    let mut v = packed.col(k)[k..].to_vec();
                    v[0] = 1.0;
                    v
                };
                for j in k + 1..p {
                    let c = &mut packed.col_mut(j)[k..];
                    let w = dot(&v, c) * t;
                    for (ci, vi) in c.iter_mut().zip(&v) {
                        *ci -= w * vi;
                    }
                }
            }
            packed.set(k, k, beta);
        }

        let r00 = if steps > 0 { packed.get(0, 0).abs() } else { 0.0 };
        let tol = n.max(p) as f64 * f64::EPSILON * r00;
        let rank = (0..steps)
            .take_while(|&k| packed.get(k, k).abs() > tol)
            .count();

        QrFactor {
            packed,
            tau,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rows(&self) -> usize {
        self.packed.rows()
    }

    pub fn cols(&self) -> usize {
        self.packed.cols()
    }

    /// Original indices of columns judged aliased, ascending.
    pub fn dropped(&self) -> Vec<usize> {
        let mut d = self.perm[self.rank..].to_vec();
        d.sort_unstable();
        d
    }

    /// Original indices of the retained columns, ascending.
    pub fn retained(&self) -> Vec<usize> {
        let mut r = self.perm[..self.rank].to_vec();
        r.sort_unstable();
        r
    }

    fn reflector(&self, k: usize) -> (&[f64], f64) {
        (&self.packed.col(k)[k..], self.tau[k])
    }

    fn apply_reflector(&self, k: usize, x: &mut [f64]) {
        let (v, t) = self.reflector(k);
        if t == 0.0 {
            return;
        }
        let x = &mut x[k..];
        // v[0] is implicitly 1
        let w = t * (x[0] + dot(&v[1..], &x[1..]));
        x[0] -= w;
        for (xi, vi) in x[1..].iter_mut().zip(&v[1..]) {
            *xi -= w * vi;
        }
    }

    /// In place `x <- Qᵀ x`.
    pub fn apply_qt(&self, x: &mut [f64]) {
        for k in 0..self.tau.len() {
            self.apply_reflector(k, x);
        }
    }

    /// In place `x <- Q x`.
    pub fn apply_q(&self, x: &mut [f64]) {
        for k in (0..self.tau.len()).rev() {
            self.apply_reflector(k, x);
        }
    }

    /// Orthogonal projection of `v` onto the span of the retained columns.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut x = v.to_vec();
        self.apply_qt(&mut x);
        for xi in x.iter_mut().skip(self.rank) {
            *xi = 0.0;
        }
        self.apply_q(&mut x);
        x
    }

    /// Least-squares coefficients, zero on aliased columns.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let r = self.rank;
        let mut z = vec![0.0; r];
        for i in (0..r).rev() {
            let mut acc = qty[i];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                acc -= self.packed.get(i, j) * zj;
            }
            z[i] = acc / self.packed.get(i, i);
        }
        let mut coef = vec![0.0; self.cols()];
        for (i, zi) in z.into_iter().enumerate() {
            coef[self.perm[i]] = zi;
        }
        coef
    }
}

fn swap_cols(m: &mut Matrix, a: usize, b: usize) {
    for i in 0..m.rows() {
        let t = m.get(i, a);
        m.set(i, a, m.get(i, b));
        m.set(i, b, t);
    }
}

/// Turns `x` into a Householder vector in place (x[0] untouched, caller
/// overwrites it with beta). Returns `(beta, tau)`.
fn householder(x: &mut [f64]) -> (f64, f64) {
    let x0 = x[0];
    let tail = norm2(&x[1..]);
    if tail == 0.0 {
        return (x0, 0.0);
    }
    let norm = x0.hypot(tail);
    let beta = if x0 >= 0.0 { -norm } else { norm };
    let t = (beta - x0) / beta;
    let scale = 1.0 / (x0 - beta);
    for xi in x[1..].iter_mut() {
        *xi *= scale;
    }
    (beta, t)
}
