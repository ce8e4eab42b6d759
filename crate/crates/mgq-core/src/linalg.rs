//! Small dense matrices (row-major, dynamic size). The dimensions here are
//! tiny (n or 2n with n = 1..3), so partial-pivot LU is all that is needed.

use crate::error::{GeomError, Result};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
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
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// v^T M, returned as a vector of length `cols`.
    pub fn tmatvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += self[(i, j)] * v[i];
            }
            out[j] = s;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Mat::from_flat(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Mat::from_flat(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat::from_flat(self.rows, self.cols, self.data.iter().map(|a| a * s).collect())
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }

    fn lu(&self) -> Result<(Vec<f64>, Vec<usize>, f64)> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut piv = (0..n).collect::<Vec<_>>();
        let mut sign = 1.0;
        for k in 0..n {
            let mut pmax = a[k * n + k].abs();
            let mut prow = k;
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > pmax {
                    pmax = v;
                    prow = i;
                }
            }
            if pmax == 0.0 {
                return Err(GeomError::SingularJacobian("lu factorization"));
            }
            if prow != k {
                for j in 0..n {
                    a.swap(k * n + j, prow * n + j);
                }
                piv.swap(k, prow);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in (k + 1)..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Ok((a, piv, sign))
    }

    pub fn det(&self) -> f64 {
        match self.lu() {
            Ok((a, _, sign)) => {
                let n = self.rows;
                let mut d = sign;
                for k in 0..n {
                    d *= a[k * n + k];
                }
                d
            }
            Err(_) => 0.0,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.rows;
        let (a, piv, _) = self.lu()?;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = b[piv[i]];
        }
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - a[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] = x[i] - a[i * n + j] * x[j];
            }
            x[i] /= a[i * n + i];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Mat> {
        let n = self.rows;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Complex square matrix with just enough operations for Gaussian integrals:
/// LU determinant (with continuous branch bookkeeping left to the caller) and
/// linear solves.
#[derive(Debug, Clone)]
pub struct CMat {
    pub n: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    fn lu(&self) -> Result<(Vec<C64>, Vec<usize>, f64)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut piv = (0..n).collect::<Vec<_>>();
        let mut sign = 1.0;
        for k in 0..n {
            let mut pmax = a[k * n + k].norm();
            let mut prow = k;
            for i in (k + 1)..n {
                let v = a[i * n + k].norm();
                if v > pmax {
                    pmax = v;
                    prow = i;
                }
            }
            if pmax == 0.0 {
                return Err(GeomError::SingularJacobian("complex lu"));
            }
            if prow != k {
                for j in 0..n {
                    a.swap(k * n + j, prow * n + j);
                }
                piv.swap(k, prow);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                for j in (k + 1)..n {
                    let sub = f * a[k * n + j];
                    a[i * n + j] -= sub;
                }
            }
        }
        Ok((a, piv, sign))
    }

    pub fn det(&self) -> C64 {
        match self.lu() {
            Ok((a, _, sign)) => {
                let mut d = C64::new(sign, 0.0);
                for k in 0..self.n {
                    d *= a[k * self.n + k];
                }
                d
            }
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.n;
        let (a, piv, _) = self.lu()?;
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            x[i] = b[piv[i]];
        }
        for i in 0..n {
            for j in 0..i {
                let sub = a[i * n + j] * x[j];
                x[i] -= sub;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let sub = a[i * n + j] * x[j];
                x[i] -= sub;
            }
            x[i] /= a[i * n + i];
        }
        Ok(x)
    }
}
