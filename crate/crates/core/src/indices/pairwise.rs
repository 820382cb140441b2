use alloc::vec::Vec;

use super::{require_k_at_least_two, IndexId, IndexValue};
use crate::data::{EmbeddingMatrix, Partition};
use crate::error::{Error, Result};
use crate::linalg::euclidean;

/// Smallest between-cluster distance over the largest cluster diameter.
pub fn dunn(z: &EmbeddingMatrix, rho: &Partition) -> Result<IndexValue> {
    require_k_at_least_two(rho)?;
    let n = z.rows();
    let labels = rho.labels();
    let mut d_min = f64::INFINITY;
    let mut d_max = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = euclidean(z.row(i), z.row(j));
            if labels[i] == labels[j] {
                d_max = d_max.max(dij);
            } else {
                d_min = d_min.min(dij);
            }
        }
    }
    if d_max == 0.0 {
        return Err(Error::ZeroDiameter);
    }
    Ok(IndexId::Dunn.value(d_min / d_max))
}

/// `(S_W - S_min) / (S_max - S_min)` over the `N_W` within-cluster pairs.
pub fn cindex(z: &EmbeddingMatrix, rho: &Partition) -> Result<IndexValue> {
    require_k_at_least_two(rho)?;
    let n = z.rows();
    let labels = rho.labels();
    let mut all = Vec::with_capacity(n * (n - 1) / 2);
    let mut s_w = 0.0;
    let mut n_w = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = euclidean(z.row(i), z.row(j));
            if labels[i] == labels[j] {
                s_w += dij;
                n_w += 1;
            }
            all.push(dij);
        }
    }
    all.sort_unstable_by(f64::total_cmp);
    let s_min: f64 = all[..n_w].iter().sum();
    let s_max: f64 = all[all.len() - n_w..].iter().sum();
    if s_max <= s_min {
        return Err(Error::DegenerateDistances);
    }
    let raw = ((s_w - s_min) / (s_max - s_min)).clamp(0.0, 1.0);
    Ok(IndexId::Cindex.value(raw))
}
