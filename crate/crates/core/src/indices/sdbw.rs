use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{centroids, require_k_at_least_two, IndexId, IndexValue};
use crate::data::{EmbeddingMatrix, Partition};
use crate::error::Result;
use crate::linalg::{covariance, euclidean};

/// S_Dbw: average scattering `S` plus between-cluster density `G`.
///
/// Densities count points of the two clusters strictly closer than `sigma`
/// to the probe point. A singleton cluster has a zero variance vector.
pub fn sdbw(z: &EmbeddingMatrix, rho: &Partition) -> Result<IndexValue> {
    require_k_at_least_two(rho)?;
    let (n, d, k) = (z.rows(), z.cols(), rho.k());
    let members = rho.members();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let (cov, _) = covariance(z.values(), n, d);
    let total_var: Vec<f64> = (0..d).map(|j| cov[j * d + j]).collect();
    let cluster_var_norms: Vec<f64> = members
        .iter()
        .map(|m| {
            if m.len() < 2 {
                return 0.0;
            }
            let rows: Vec<f64> = m.iter().flat_map(|&i| z.row(i).iter().copied()).collect();
            let (c, _) = covariance(&rows, m.len(), d);
            norm(&(0..d).map(|j| c[j * d + j]).collect::<Vec<_>>())
        })
        .collect();

    let total_norm = norm(&total_var);
    let scatter = if total_norm > 0.0 {
        cluster_var_norms.iter().sum::<f64>() / k as f64 / total_norm
    } else {
        0.0
    };
    let sigma = cluster_var_norms.iter().sum::<f64>().sqrt() / k as f64;

    let mu = centroids(z, rho);
    let center = |c: usize| &mu[c * d..(c + 1) * d];
    let density = |probe: &[f64], a: usize, b: usize| -> usize {
        members[a]
            .iter()
            .chain(&members[b])
            .filter(|&&i| euclidean(z.row(i), probe) < sigma)
            .count()
    };

    let mut ratio_sum = 0.0;
    let mut midpoint = vec![0.0; d];
    for a in 0..k {
        for b in (a + 1)..k {
            for ((m, x), y) in midpoint.iter_mut().zip(center(a)).zip(center(b)) {
                *m = 0.5 * (x + y);
            }
            let mid = density(&midpoint, a, b);
            let peak = density(center(a), a, b).max(density(center(b), a, b));
            // an empty neighborhood around both barycenters leaves 0/0 when the
            // midpoint is empty too; count the midpoint alone otherwise
            ratio_sum += match (mid, peak) {
                (0, _) => 0.0,
                (m, 0) => m as f64,
                (m, p) => m as f64 / p as f64,
            };
        }
    }
    let between = 2.0 * ratio_sum / (k * (k - 1)) as f64;
    Ok(IndexId::Sdbw.value(scatter + between))
}
