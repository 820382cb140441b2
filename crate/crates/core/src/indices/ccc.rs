use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{centroids, require_k_at_least_two, IndexId, IndexValue};
use crate::data::{EmbeddingMatrix, Partition};
use crate::error::{Error, Result};
use crate::linalg::{covariance, sq_euclidean, symmetric_eigenvalues};

/// Cubic clustering criterion.
///
/// Compares the observed `R^2 = 1 - tr(W)/tr(T)` with its expectation under a
/// uniform hyperbox whose edge lengths are the square roots of the
/// eigenvalues of `T / (n - 1)`.
pub fn ccc(z: &EmbeddingMatrix, rho: &Partition) -> Result<IndexValue> {
    require_k_at_least_two(rho)?;
    let (n, p, q) = (z.rows(), z.cols(), rho.k());
    let nf = n as f64;

    let (cov, mean) = covariance(z.values(), n, p);
    let trace_t: f64 = z.iter_rows().map(|r| sq_euclidean(r, &mean)).sum();
    if trace_t <= 0.0 || n < 2 {
        return Err(Error::SingularTotalScatter);
    }
    let mu_k = centroids(z, rho);
    let trace_w: f64 = z
        .iter_rows()
        .zip(rho.labels())
        .map(|(row, &l)| sq_euclidean(row, &mu_k[l * p..(l + 1) * p]))
        .sum();
    let r2 = 1.0 - trace_w / trace_t;
    if r2 >= 1.0 {
        return Err(Error::ZeroWithinDispersion);
    }

    let edges: Vec<f64> = symmetric_eigenvalues(&cov, p)?
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    let (p_star, c) = hyperbox_split(&edges, q).ok_or(Error::SingularTotalScatter)?;
    let u: Vec<f64> = edges.iter().map(|s| s / c).collect();

    let head: f64 = u[..p_star].iter().map(|uj| 1.0 / (nf + uj)).sum();
    let tail: f64 = u[p_star..].iter().map(|uj| uj * uj / (nf + uj)).sum();
    let norm: f64 = u.iter().map(|uj| uj * uj).sum();
    let qf = q as f64;
    let expected_r2 =
        1.0 - ((head + tail) / norm) * ((nf - qf) * (nf - qf) / nf) * (1.0 + 4.0 / nf);
    if 1.0 - expected_r2 <= 0.0 || 0.001 + expected_r2 <= 0.0 {
        return Err(Error::SingularTotalScatter);
    }

    let raw = ((1.0 - expected_r2) / (1.0 - r2)).ln() * (nf * p_star as f64 / 2.0).sqrt()
        / (0.001 + expected_r2).powf(1.2);
    Ok(IndexId::Ccc.value(raw))
}

/// Largest `p* < q` (and `<= p`) for which the hyperbox cut into `q` cubes
/// still has at least one cube along dimension `p*`. Returns `p*` and the cube
/// edge `c`.
fn hyperbox_split(edges: &[f64], q: usize) -> Option<(usize, f64)> {
    let upper = edges.len().min(q.saturating_sub(1)).max(1);
    for p_star in (1..=upper).rev() {
        let log_volume: f64 = edges[..p_star].iter().map(|s| s.ln()).sum();
        let c = ((log_volume - (q as f64).ln()) / p_star as f64).exp();
        if c.is_finite() && c > 0.0 && edges[p_star - 1] / c >= 1.0 {
            return Some((p_star, c));
        }
    }
    None
}
