//! Small dense matrices over any [`Real`] scalar.
//!
//! Every matrix in this problem is at most max(R, T) per side, so the
//! routines below are plain O(n³) dense algorithms: Gaussian elimination
//! with partial pivoting for general solves, Cholesky for symmetric
//! positive definite log-determinants. Pivoting decisions read the
//! numeric `value()` of entries, which keeps them valid when the scalar
//! type is a tape variable.

use alloc::vec;
use alloc::vec::Vec;

use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Mat<R> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<R>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match dimensions");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| R::lit(0.0))
    }

    pub fn filled(rows: usize, cols: usize, v: R) -> Self {
        Self::from_fn(rows, cols, |_, _| v)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| R::lit(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn t(&self) -> Mat<R> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat<R>) -> Mat<R> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        Mat::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = R::lit(0.0);
            for k in 0..self.cols {
                acc = acc + self[(i, k)] * rhs[(k, j)];
            }
            acc
        })
    }

    pub fn add(&self, rhs: &Mat<R>) -> Mat<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Mat<R>) -> Mat<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, k: R) -> Mat<R> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * k)
    }

    /// Adds `k` to each diagonal entry.
    pub fn add_diag(&self, k: R) -> Mat<R> {
        assert_eq!(self.rows, self.cols);
        Mat::from_fn(self.rows, self.cols, |i, j| {
            if i == j {
                self[(i, j)] + k
            } else {
                self[(i, j)]
            }
        })
    }

    pub fn trace(&self) -> R {
        assert_eq!(self.rows, self.cols);
        let mut acc = R::lit(0.0);
        for i in 0..self.rows {
            acc = acc + self[(i, i)];
        }
        acc
    }

    /// Squared Frobenius norm.
    pub fn fro_sq(&self) -> R {
        let mut acc = R::lit(0.0);
        for &x in &self.data {
            acc = acc + x * x;
        }
        acc
    }

    fn max_abs_value(&self) -> f64 {
        let mut m: f64 = 0.0;
        for x in &self.data {
            m = m.max(x.value().abs());
        }
        m
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial
    /// pivoting. Returns `None` when a pivot is negligible relative to
    /// the matrix scale.
    pub fn solve(&self, rhs: &Mat<R>) -> Option<Mat<R>> {
        assert_eq!(self.rows, self.cols, "coefficient matrix must be square");
        assert_eq!(self.rows, rhs.rows, "right-hand side row count must match");
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let tol = f64::MIN_POSITIVE.max(self.max_abs_value() * 1e-14);

        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].value().abs();
            for r in k + 1..n {
                let c = a[r * n + k].value().abs();
                if c > best {
                    best = c;
                    piv = r;
                }
            }
            if best < tol {
                return None;
            }
            if piv != k {
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
                for c in 0..m {
                    b.swap(k * m + c, piv * m + c);
                }
            }
            for r in k + 1..n {
                let factor = a[r * n + k] / a[k * n + k];
                for c in k + 1..n {
                    a[r * n + c] = a[r * n + c] - factor * a[k * n + c];
                }
                for c in 0..m {
                    b[r * m + c] = b[r * m + c] - factor * b[k * m + c];
                }
            }
        }

        let mut x = vec![R::lit(0.0); n * m];
        for k in (0..n).rev() {
            for c in 0..m {
                let mut acc = b[k * m + c];
                for j in k + 1..n {
                    acc = acc - a[k * n + j] * x[j * m + c];
                }
                x[k * m + c] = acc / a[k * n + k];
            }
        }
        Some(Mat::from_vec(n, m, x))
    }

    pub fn inverse(&self) -> Option<Mat<R>> {
        self.solve(&Mat::identity(self.rows))
    }

    /// Lower-triangular Cholesky factor of a symmetric positive definite
    /// matrix. `None` when a diagonal pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Mat<R>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = self[(i, j)];
                for k in 0..j {
                    acc = acc - l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if acc.value() <= 0.0 {
                        return None;
                    }
                    l[(i, j)] = acc.sqrt();
                } else {
                    l[(i, j)] = acc / l[(j, j)];
                }
            }
        }
        Some(l)
    }

    /// log det of a symmetric positive definite matrix via Cholesky.
    pub fn logdet_spd(&self) -> Option<R> {
        let l = self.cholesky()?;
        let mut acc = R::lit(0.0);
        for i in 0..self.rows {
            acc = acc + l[(i, i)].ln();
        }
        Some(acc + acc)
    }

    /// log det of a general square matrix via LU with partial pivoting.
    /// `None` when the matrix is singular or the determinant is not
    /// strictly positive, since the logarithm would be undefined.
    pub fn logdet_lu(&self) -> Option<R> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let tol = f64::MIN_POSITIVE.max(self.max_abs_value() * 1e-14);
        let mut sign = 1.0;
        let mut acc = R::lit(0.0);

        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].value().abs();
            for r in k + 1..n {
                let c = a[r * n + k].value().abs();
                if c > best {
                    best = c;
                    piv = r;
                }
            }
            if best < tol {
                return None;
            }
            if piv != k {
                sign = -sign;
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
            }
            let pivot = a[k * n + k];
            if pivot.value() < 0.0 {
                sign = -sign;
            }
            acc = acc + pivot.abs().ln();
            for r in k + 1..n {
                let factor = a[r * n + k] / pivot;
                for c in k + 1..n {
                    a[r * n + c] = a[r * n + c] - factor * a[k * n + c];
                }
            }
        }
        if sign < 0.0 {
            return None;
        }
        Some(acc)
    }
}

impl<R> core::ops::Index<(usize, usize)> for Mat<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R> core::ops::IndexMut<(usize, usize)> for Mat<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = a.t();
        let p = a.matmul(&b);
        assert_eq!(p.rows(), 2);
        assert_eq!(p.cols(), 2);
        approx(p[(0, 0)], 14.0, 1e-12);
        approx(p[(0, 1)], 32.0, 1e-12);
        approx(p[(1, 0)], 32.0, 1e-12);
        approx(p[(1, 1)], 77.0, 1e-12);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = Mat::from_vec(3, 3, vec![4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let x_true = Mat::from_vec(3, 2, vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.25]);
        let b = a.matmul(&x_true);
        let x = a.solve(&b).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                approx(x[(i, j)], x_true[(i, j)], 1e-12);
            }
        }
    }

    #[test]
    fn inverse_times_original_is_identity() {
        let a = Mat::from_vec(2, 2, vec![2.0, 1.0, 7.0, 6.0]);
        let inv = a.inverse().unwrap();
        let p = a.matmul(&inv);
        approx(p[(0, 0)], 1.0, 1e-12);
        approx(p[(0, 1)], 0.0, 1e-12);
        approx(p[(1, 0)], 0.0, 1e-12);
        approx(p[(1, 1)], 1.0, 1e-12);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = Mat::from_vec(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(a.solve(&Mat::identity(2)).is_none());
        assert!(a.logdet_lu().is_none());
    }

    #[test]
    fn tiny_but_well_conditioned_matrix_solves() {
        // Entries around 1e-9: small absolute pivots must not trip the
        // relative singularity threshold.
        let a = Mat::from_vec(2, 2, vec![3e-9, 1e-9, 1e-9, 2e-9]);
        let x = a.solve(&Mat::identity(2)).unwrap();
        let p = a.matmul(&x);
        approx(p[(0, 0)], 1.0, 1e-9);
        approx(p[(1, 1)], 1.0, 1e-9);
    }

    #[test]
    fn cholesky_logdet_matches_lu() {
        let b = Mat::from_vec(3, 3, vec![2.0, 1.0, 0.5, 0.0, 1.5, -0.3, 0.0, 0.0, 0.9]);
        let spd = b.matmul(&b.t()).add_diag(0.1);
        let via_chol = spd.logdet_spd().unwrap();
        let via_lu = spd.logdet_lu().unwrap();
        approx(via_chol, via_lu, 1e-12);
    }

    #[test]
    fn logdet_rejects_negative_determinant() {
        let a = Mat::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        assert!(a.logdet_lu().is_none());
        assert!(a.logdet_spd().is_none());
    }

    #[test]
    fn trace_and_frobenius() {
        let a = Mat::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        approx(a.trace(), 5.0, 1e-15);
        approx(a.fro_sq(), 30.0, 1e-15);
    }
}
