//! Cluster-robust sandwich covariance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::design::Design;
use super::linalg::DenseMatrix;
use super::ols::OlsFit;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Finite-sample scaling of the cluster sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Adjustment {
    /// No scaling.
    CR0,
    /// `C/(C-1) * (N-1)/(N-K)`.
    #[default]
    CR1,
}

impl Adjustment {
    pub fn factor<T: Scalar>(self, n_clusters: usize, n_obs: usize, n_params: usize) -> T {
        match self {
            Adjustment::CR0 => T::one(),
            Adjustment::CR1 => {
                let c = T::from_usize_lossy(n_clusters);
                let n = T::from_usize_lossy(n_obs);
                let k = T::from_usize_lossy(n_params);
                c / (c - T::one()) * (n - T::one()) / (n - k)
            }
        }
    }
}

/// `bread * (sum_c s_c s_c') * bread * adjustment`, where `s_c` sums
/// `w_i e_i x_i` over the retained columns within cluster `c`.
pub fn cluster_vcov<T: Scalar>(
    design: &Design<T>,
    fit: &OlsFit<T>,
    weights: Option<&[T]>,
    clusters: &[u32],
    adjustment: Adjustment,
) -> Result<DenseMatrix<T>> {
    let n = design.n_obs();
    if clusters.len() != n || fit.residuals.len() != n {
        return Err(Error::DataValidation("cluster or residual length disagrees with the design".into()));
    }
    let mut ids: Vec<u32> = clusters.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let n_clusters = ids.len();
    if n_clusters < 2 {
        return Err(Error::DataValidation(format!("need at least 2 clusters, found {n_clusters}")));
    }
    let k = fit.rank();
    if fit.n_obs <= k {
        return Err(Error::DataValidation("no residual degrees of freedom".into()));
    }

    // Sum w e within each (cluster, distinct row) pair, then expand.
    let mut pair_sum: HashMap<(u32, u32), T> = HashMap::new();
    for i in 0..n {
        let w = weights.map_or(T::one(), |w| w[i]);
        *pair_sum.entry((clusters[i], design.row_of_obs[i])).or_insert_with(T::zero) += w * fit.residuals[i];
    }
    let mut pairs: Vec<((u32, u32), T)> = pair_sum.into_iter().collect();
    pairs.sort_unstable_by_key(|(key, _)| *key);
    let mut scores = DenseMatrix::zeros(n_clusters, k);
    for ((c, r), we) in pairs {
        let slot = ids.binary_search(&c).expect("cluster listed");
        for (a, &j) in fit.retained.iter().enumerate() {
            let v = scores.get(slot, a) + we * design.rows.get(r as usize, j);
            scores.set(slot, a, v);
        }
    }
    let meat = scores.transpose().matmul(&scores);
    let mut v = fit.bread.matmul(&meat).matmul(&fit.bread);
    v.symmetrize();
    v.scale(adjustment.factor(n_clusters, fit.n_obs, k));
    Ok(v)
}
