//! Dense matrices and a column-greedy Householder QR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        DenseMatrix { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_nested(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// Replaces the matrix with `(A + Aᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self.get(i, j) + self.get(j, i)) * half;
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.data {
            *v *= factor;
        }
    }
}

/// Householder QR that visits columns left to right and keeps a column only
/// if its component orthogonal to the kept columns has norm above
/// `rel_tol` times its own norm. Earlier columns win ties in collinear sets.
#[derive(Debug, Clone)]
pub struct GreedyQr<T> {
    /// Upper-triangular factor for the retained columns.
    pub r: DenseMatrix<T>,
    pub retained: Vec<usize>,
    pub dropped: Vec<usize>,
    reflectors: Vec<(Vec<T>, T)>,
    rows: usize,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    // Scaled to avoid overflow on large entries.
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let ss: T = v.iter().map(|x| (*x / scale) * (*x / scale)).sum();
    scale * ss.sqrt()
}

impl<T: Scalar> GreedyQr<T> {
    /// Factorizes the matrix given as a list of columns of equal length.
    pub fn factor(columns: &[Vec<T>], rel_tol: T) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        let mut reflectors: Vec<(Vec<T>, T)> = Vec::new();
        let mut r_cols: Vec<Vec<T>> = Vec::new();
        let mut retained = Vec::new();
        let mut dropped = Vec::new();
        for (j, col) in columns.iter().enumerate() {
            let original = norm(col);
            let mut x = col.clone();
            for (k, (v, beta)) in reflectors.iter().enumerate() {
                apply_reflector(v, *beta, &mut x[k..]);
            }
            let rank = reflectors.len();
            let below = if rank < rows { norm(&x[rank..]) } else { T::zero() };
            if original == T::zero() || below <= rel_tol * original {
                dropped.push(j);
                continue;
            }
            let alpha = if x[rank] >= T::zero() { -below } else { below };
            let mut v = x[rank..].to_vec();
            v[0] -= alpha;
            let vv: T = v.iter().map(|e| *e * *e).sum();
            let beta = T::lit(2.0) / vv;
            let mut rc = x[..rank].to_vec();
            rc.push(alpha);
            r_cols.push(rc);
            reflectors.push((v, beta));
            retained.push(j);
        }
        let k = retained.len();
        let mut r = DenseMatrix::zeros(k, k);
        for (j, rc) in r_cols.iter().enumerate() {
            for (i, v) in rc.iter().enumerate() {
                r.set(i, j, *v);
            }
        }
        GreedyQr { r, retained, dropped, reflectors, rows }
    }

    pub fn rank(&self) -> usize {
        self.retained.len()
    }

    /// Least-squares coefficients for the retained columns.
    pub fn solve(&self, y: &[T]) -> Result<Vec<T>> {
        assert_eq!(y.len(), self.rows, "right-hand side length");
        let mut qty = y.to_vec();
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            apply_reflector(v, *beta, &mut qty[k..]);
        }
        let k = self.rank();
        let mut b = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut s = qty[i];
            for j in (i + 1)..k {
                s -= self.r.get(i, j) * b[j];
            }
            let d = self.r.get(i, i);
            if d == T::zero() {
                return Err(Error::Singular);
            }
            b[i] = s / d;
        }
        Ok(b)
    }

    /// `(RᵀR)⁻¹ = R⁻¹ R⁻ᵀ`, the inverse cross-product of the retained columns.
    pub fn inverse_gram(&self) -> Result<DenseMatrix<T>> {
        let rinv = upper_triangular_inverse(&self.r)?;
        let mut g = rinv.matmul(&rinv.transpose());
        g.symmetrize();
        Ok(g)
    }
}

fn apply_reflector<T: Scalar>(v: &[T], beta: T, x: &mut [T]) {
    let dot: T = v.iter().zip(x.iter()).map(|(a, b)| *a * *b).sum();
    let s = beta * dot;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * *vi;
    }
}

pub fn upper_triangular_inverse<T: Scalar>(r: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let k = r.rows();
    let mut inv = DenseMatrix::zeros(k, k);
    for col in 0..k {
        for i in (0..=col).rev() {
            let mut s = if i == col { T::one() } else { T::zero() };
            for j in (i + 1)..=col {
                s -= r.get(i, j) * inv.get(j, col);
            }
            let d = r.get(i, i);
            if d == T::zero() {
                return Err(Error::Singular);
            }
            inv.set(i, col, s / d);
        }
    }
    Ok(inv)
}
