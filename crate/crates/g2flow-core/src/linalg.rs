//! Small dense real matrices: LU, Cholesky, Householder least squares.
//!
//! Sizes here never exceed 70×70 (the largest exterior power for n ≤ 8),
//! so everything is row-major `Vec<f64>` with no blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::math::{abs, sqrt};

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    NotSquare { rows: usize, cols: usize },
    Singular,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimensionMismatch { left, right } => write!(
                f,
                "dimension mismatch: {}x{} against {}x{}",
                left.0, left.1, right.0, right.1
            ),
            LinalgError::NotSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, expected square")
            }
            LinalgError::Singular => write!(f, "matrix is singular"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Builds a matrix from row-major data; panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max(abs(a - b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(abs(*a)))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0.0))
    }

    fn require_square(&self) -> Result<usize, LinalgError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols })
        }
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Result<Lu, LinalgError> {
        let n = self.require_square()?;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = abs(a[(k, k)]);
            for i in k + 1..n {
                if abs(a[(i, k)]) > best {
                    best = abs(a[(i, k)]);
                    p = i;
                }
            }
            if best == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        let akj = a[(k, j)];
                        a[(i, j)] -= factor * akj;
                    }
                }
            }
        }
        Ok(Lu { lu: a, perm, sign, singular })
    }

    pub fn det(&self) -> Result<f64, LinalgError> {
        let n = self.require_square()?;
        Ok(match n {
            0 => 1.0,
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            3 => {
                let m = &self.data;
                m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                    + m[2] * (m[3] * m[7] - m[4] * m[6])
            }
            _ => self.lu()?.det(),
        })
    }

    pub fn inverse(&self) -> Result<Mat, LinalgError> {
        let n = self.require_square()?;
        let lu = self.lu()?;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.lu()?.solve(b)
    }

    /// Lower-triangular Cholesky factor, or `None` when the matrix is not
    /// (numerically) positive definite.
    pub fn cholesky(&self) -> Option<Mat> {
        let n = self.rows;
        if !self.is_square() {
            return None;
        }
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return None;
            }
            let djj = sqrt(d);
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// Numerical rank by Householder QR with column pivoting.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let qr = HouseholderQr::new(self, true);
        let diag: Vec<f64> = (0..self.rows.min(self.cols)).map(|k| abs(qr.r[(k, k)])).collect();
        let top = diag.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        diag.iter().take_while(|&&d| d > rel_tol * top).count()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        (0..self.lu.rows).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch { left: (n, n), right: (b.len(), 1) });
        }
        if self.singular {
            return Err(LinalgError::Singular);
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Householder QR of an m×n matrix (m ≥ n for least squares).
struct HouseholderQr {
    r: Mat,
    vs: Vec<Vec<f64>>,
    betas: Vec<f64>,
    perm: Vec<usize>,
}

impl HouseholderQr {
    fn new(a: &Mat, pivot: bool) -> Self {
        let (m, n) = (a.rows, a.cols);
        let mut r = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut vs = Vec::new();
        let mut betas = Vec::new();
        for k in 0..m.min(n) {
            if pivot {
                let norm_of = |r: &Mat, j: usize| (k..m).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>();
                let mut best = k;
                let mut best_norm = norm_of(&r, k);
                for j in k + 1..n {
                    let nj = norm_of(&r, j);
                    if nj > best_norm {
                        best = j;
                        best_norm = nj;
                    }
                }
                if best != k {
                    for i in 0..m {
                        r.data.swap(i * n + k, i * n + best);
                    }
                    perm.swap(k, best);
                }
            }
            let norm = sqrt((k..m).map(|i| r[(i, k)] * r[(i, k)]).sum());
            let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
            if norm == 0.0 {
                vs.push(v);
                betas.push(0.0);
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            let beta = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
            for j in k..n {
                let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                let s = beta * dot;
                for i in k..m {
                    r[(i, j)] -= s * v[i - k];
                }
            }
            vs.push(v);
            betas.push(beta);
        }
        HouseholderQr { r, vs, betas, perm }
    }

    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.r.rows;
        for (k, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate() {
            let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
            let s = beta * dot;
            for i in k..m {
                b[i] -= s * v[i - k];
            }
        }
    }
}

/// Least-squares solution of `a x ≈ b` with the Euclidean residual norm.
///
/// Columns of `a` must be linearly independent.
pub fn least_squares(a: &Mat, b: &[f64]) -> Result<(Vec<f64>, f64), LinalgError> {
    let (m, n) = (a.rows, a.cols);
    if b.len() != m || m < n {
        return Err(LinalgError::DimensionMismatch { left: (m, n), right: (b.len(), 1) });
    }
    if n == 0 {
        return Ok((Vec::new(), sqrt(b.iter().map(|x| x * x).sum())));
    }
    let qr = HouseholderQr::new(a, false);
    let mut qtb = b.to_vec();
    qr.apply_qt(&mut qtb);
    let scale = (0..n).fold(0.0f64, |s, k| s.max(abs(qr.r[(k, k)])));
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = qtb[i];
        for k in i + 1..n {
            s -= qr.r[(i, k)] * y[k];
        }
        let d = qr.r[(i, i)];
        if abs(d) <= 1e-14 * scale {
            return Err(LinalgError::Singular);
        }
        y[i] = s / d;
    }
    let mut x = vec![0.0; n];
    for (k, &p) in qr.perm.iter().enumerate() {
        x[p] = y[k];
    }
    let resid = sqrt(qtb[n..].iter().map(|v| v * v).sum());
    Ok((x, resid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_of_permutation_and_triangular() {
        let p = Mat::from_row_major(3, 3, vec![0., 1., 0., 0., 0., 1., 1., 0., 0.]);
        assert_eq!(p.det().unwrap(), 1.0);
        let t = Mat::from_fn(5, 5, |i, j| if j >= i { (i + j + 1) as f64 } else { 0.0 });
        let expected: f64 = (0..5).map(|i| (2 * i + 1) as f64).product();
        assert!((t.det().unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn inverse_round_trip() {
        let a = Mat::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 2.0 } else { 0.0 });
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv).unwrap();
        assert!(id.max_abs_diff(&Mat::identity(6)) < 1e-12);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        assert!(Mat::diagonal(&[1.0, 2.0, 3.0]).is_positive_definite());
        assert!(!Mat::diagonal(&[1.0, -2.0, 3.0]).is_positive_definite());
        let split = Mat::diagonal(&[-1.0, -1.0, 1.0, 1.0]);
        assert!(split.det().unwrap() > 0.0);
        assert!(!split.is_positive_definite());
    }

    #[test]
    fn least_squares_recovers_consistent_system() {
        let a = Mat::from_fn(8, 3, |i, j| ((i + 1) as f64).powi(j as i32));
        let x_true = [0.5, -1.25, 2.0];
        let b = a.matvec(&x_true).unwrap();
        let (x, r) = least_squares(&a, &b).unwrap();
        assert!(r < 1e-10);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_of_outer_product() {
        let u = [1.0, 2.0, 3.0, 4.0];
        let a = Mat::from_fn(4, 4, |i, j| u[i] * u[j]);
        assert_eq!(a.rank(1e-12), 1);
        assert_eq!(Mat::identity(5).rank(1e-12), 5);
    }
}
