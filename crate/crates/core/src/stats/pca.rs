use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg::covariance;

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 10_000;

/// Scores of the mean-centered rows on the leading principal axis.
///
/// The axis comes from power iteration on the sample covariance, started at
/// its largest column; the sign makes the largest-magnitude loading positive.
pub fn pca_first_component(z: &EmbeddingMatrix) -> Result<Vec<f64>> {
    let (n, d) = (z.rows(), z.cols());
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let (cov, mean) = covariance(z.values(), n, d);
    let column_norm = |j: usize| (0..d).map(|i| cov[i * d + j] * cov[i * d + j]).sum::<f64>();
    let start = (0..d).fold(0, |best, j| {
        if column_norm(j) > column_norm(best) {
            j
        } else {
            best
        }
    });
    if column_norm(start) == 0.0 {
        return Err(Error::ZeroVariance);
    }

    let mut v: Vec<f64> = (0..d).map(|i| cov[i * d + start]).collect();
    normalize(&mut v);
    let mut next = vec![0.0; d];
    for _ in 0..MAX_ITER {
        for i in 0..d {
            next[i] = (0..d).map(|j| cov[i * d + j] * v[j]).sum();
        }
        if normalize(&mut next) == 0.0 {
            return Err(Error::ZeroVariance);
        }
        let change = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        core::mem::swap(&mut v, &mut next);
        if change < TOL {
            break;
        }
    }

    let lead = (0..d).fold(
        0,
        |best, j| if v[j].abs() > v[best].abs() { j } else { best },
    );
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(z.iter_rows()
        .map(|r| {
            r.iter()
                .zip(&mean)
                .zip(&v)
                .map(|((x, m), w)| (x - m) * w)
                .sum()
        })
        .collect())
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}
