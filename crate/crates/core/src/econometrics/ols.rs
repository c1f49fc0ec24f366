//! Weighted least squares on a compressed design.

use super::design::Design;
use super::linalg::{DenseMatrix, GreedyQr};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative residual norm below which a column counts as collinear.
pub const COLLINEARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct OlsFit<T> {
    /// Design column indices kept by the factorization, in design order.
    pub retained: Vec<usize>,
    pub dropped: Vec<usize>,
    /// Coefficients of the retained columns.
    pub coefficients: Vec<T>,
    /// `(X'WX)^{-1}` over the retained columns.
    pub bread: DenseMatrix<T>,
    /// Observation-level residuals `y - Xb`.
    pub residuals: Vec<T>,
    pub rss: T,
    pub tss: T,
    /// Largest `|x_j' W e| / (||x_j|| ||e||)` over retained columns.
    pub orthogonality: T,
    /// Observations with positive weight.
    pub n_obs: usize,
}

impl<T: Scalar> OlsFit<T> {
    pub fn r_squared(&self) -> T {
        if self.tss > T::zero() {
            T::one() - self.rss / self.tss
        } else {
            T::zero()
        }
    }

    pub fn rank(&self) -> usize {
        self.retained.len()
    }
}

/// Fits `outcome` on the design columns by weighted least squares.
/// Collinear columns are dropped greedily, later columns first.
pub fn ols<T: Scalar>(design: &Design<T>, outcome: &[T], weights: Option<&[T]>) -> Result<OlsFit<T>> {
    let n = design.n_obs();
    if outcome.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::DataValidation("outcome or weight length disagrees with the design".into()));
    }
    let w = |i: usize| weights.map_or(T::one(), |w| w[i]);
    let g = design.rows.rows();
    let k = design.n_columns();

    let mut total_w = vec![T::zero(); g];
    let mut total_wy = vec![T::zero(); g];
    let mut n_pos = 0usize;
    for i in 0..n {
        let wi = w(i);
        if !(wi.is_finite() && wi >= T::zero()) || !outcome[i].is_finite() {
            return Err(Error::DataValidation(format!("observation {i} has a bad weight or outcome")));
        }
        if wi > T::zero() {
            n_pos += 1;
        }
        let r = design.row_of_obs[i] as usize;
        total_w[r] += wi;
        total_wy[r] += wi * outcome[i];
    }
    let active: Vec<usize> = (0..g).filter(|&r| total_w[r] > T::zero()).collect();
    if active.is_empty() {
        return Err(Error::DataValidation("all weights are zero".into()));
    }
    let sqrt_w: Vec<T> = active.iter().map(|&r| total_w[r].sqrt()).collect();
    let columns: Vec<Vec<T>> = (0..k)
        .map(|j| active.iter().zip(&sqrt_w).map(|(&r, s)| *s * design.rows.get(r, j)).collect())
        .collect();
    let rhs: Vec<T> = active.iter().zip(&sqrt_w).map(|(&r, s)| *s * (total_wy[r] / total_w[r])).collect();

    let qr = GreedyQr::factor(&columns, T::lit(COLLINEARITY_TOL));
    if qr.rank() == 0 {
        return Err(Error::RankDeficient(design.names.clone()));
    }
    if n_pos <= qr.rank() {
        return Err(Error::DataValidation(format!(
            "{n_pos} weighted observations cannot identify {} coefficients",
            qr.rank()
        )));
    }
    let coefficients = qr.solve(&rhs)?;
    let bread = qr.inverse_gram()?;

    let fitted_row: Vec<T> = (0..g)
        .map(|r| qr.retained.iter().zip(&coefficients).map(|(&j, b)| design.rows.get(r, j) * *b).sum())
        .collect();
    let residuals: Vec<T> = (0..n).map(|i| outcome[i] - fitted_row[design.row_of_obs[i] as usize]).collect();

    let sw: T = (0..n).map(w).sum();
    let mean = (0..n).map(|i| w(i) * outcome[i]).sum::<T>() / sw;
    let tss: T = (0..n).map(|i| w(i) * (outcome[i] - mean) * (outcome[i] - mean)).sum();
    let rss: T = (0..n).map(|i| w(i) * residuals[i] * residuals[i]).sum();

    // x_j' W e computed from per-row residual sums.
    let mut row_we = vec![T::zero(); g];
    for i in 0..n {
        row_we[design.row_of_obs[i] as usize] += w(i) * residuals[i];
    }
    let e_norm = rss.sqrt();
    let mut orthogonality = T::zero();
    if e_norm > T::zero() {
        for &j in &qr.retained {
            let dot: T = (0..g).map(|r| design.rows.get(r, j) * row_we[r]).sum();
            let x_norm: T = (0..g).map(|r| total_w[r] * design.rows.get(r, j).powi(2)).sum::<T>().sqrt();
            orthogonality = orthogonality.max(dot.abs() / (x_norm * e_norm));
        }
    }

    Ok(OlsFit {
        retained: qr.retained.clone(),
        dropped: qr.dropped.clone(),
        coefficients,
        bread,
        residuals,
        rss,
        tss,
        orthogonality,
        n_obs: n_pos,
    })
}
