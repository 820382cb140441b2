use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{require_k_proper, IndexId, IndexValue};
use crate::data::{EmbeddingMatrix, Partition};
use crate::error::{Error, Result};
use crate::linalg::euclidean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SilhouetteMetric {
    Euclidean,
    /// `1 - cos(angle)` between rows.
    Cosine,
}

/// Mean over clusters of the mean silhouette width of each cluster.
///
/// Points in singleton clusters get `s(i) = 0`.
pub fn silhouette(
    z: &EmbeddingMatrix,
    rho: &Partition,
    metric: SilhouetteMetric,
) -> Result<IndexValue> {
    require_k_proper(rho)?;
    let n = z.rows();
    let k = rho.k();
    let labels = rho.labels();

    let unit_rows: Option<Vec<f64>> = match metric {
        SilhouetteMetric::Euclidean => None,
        SilhouetteMetric::Cosine => {
            let mut v = Vec::with_capacity(z.values().len());
            for (i, row) in z.iter_rows().enumerate() {
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::NonFiniteValue(format!(
                        "row {i} is a zero vector under the cosine metric"
                    )));
                }
                v.extend(row.iter().map(|x| x / norm));
            }
            Some(v)
        }
    };
    let d = z.cols();
    let dist = |i: usize, j: usize| -> f64 {
        match &unit_rows {
            None => euclidean(z.row(i), z.row(j)),
            Some(u) => {
                let dot: f64 = u[i * d..(i + 1) * d]
                    .iter()
                    .zip(&u[j * d..(j + 1) * d])
                    .map(|(a, b)| a * b)
                    .sum();
                (1.0 - dot).max(0.0)
            }
        }
    };

    // sums[i * k + c] = sum of distances from i to members of cluster c
    let mut sums = vec![0.0; n * k];
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = dist(i, j);
            sums[i * k + labels[j]] += dij;
            sums[j * k + labels[i]] += dij;
        }
    }

    let sizes = rho.sizes();
    let mut cluster_sum = vec![0.0; k];
    for i in 0..n {
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[i * k + own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[i * k + c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        let s = if denom > 0.0 { (b - a) / denom } else { 0.0 };
        cluster_sum[own] += s;
    }
    let raw = cluster_sum
        .iter()
        .zip(&sizes)
        .map(|(s, &size)| s / size as f64)
        .sum::<f64>()
        / k as f64;

    let id = match metric {
        SilhouetteMetric::Euclidean => IndexId::SilhouetteEuclidean,
        SilhouetteMetric::Cosine => IndexId::SilhouetteCosine,
    };
    Ok(id.value(raw))
}
