use alloc::vec;

use super::{centroids, require_k_at_least_two, require_k_proper, IndexId, IndexValue};
use crate::data::{EmbeddingMatrix, Partition};
use crate::error::{Error, Result};
use crate::linalg::{euclidean, sq_euclidean};

/// `(BGSS / (K - 1)) / (WGSS / (N - K))`.
pub fn calinski_harabasz(z: &EmbeddingMatrix, rho: &Partition) -> Result<IndexValue> {
    require_k_proper(rho)?;
    let (n, d, k) = (z.rows(), z.cols(), rho.k());
    let mu_k = centroids(z, rho);
    let mut mu = vec![0.0; d];
    for row in z.iter_rows() {
        mu.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mu.iter_mut().for_each(|m| *m /= n as f64);

    let wgss: f64 = z
        .iter_rows()
        .zip(rho.labels())
        .map(|(row, &l)| sq_euclidean(row, &mu_k[l * d..(l + 1) * d]))
        .sum();
    if wgss == 0.0 {
        return Err(Error::ZeroWithinDispersion);
    }
    let bgss: f64 = rho
        .sizes()
        .iter()
        .enumerate()
        .map(|(c, &size)| size as f64 * sq_euclidean(&mu_k[c * d..(c + 1) * d], &mu))
        .sum();
    let raw = (bgss / (k - 1) as f64) / (wgss / (n - k) as f64);
    Ok(IndexId::CalinskiHarabasz.value(raw))
}

/// Mean over clusters of the worst `(delta_k + delta_k') / Delta_kk'` ratio.
pub fn davies_bouldin(z: &EmbeddingMatrix, rho: &Partition) -> Result<IndexValue> {
    require_k_at_least_two(rho)?;
    let (d, k) = (z.cols(), rho.k());
    let mu_k = centroids(z, rho);
    let sizes = rho.sizes();
    let mut delta = vec![0.0; k];
    for (row, &l) in z.iter_rows().zip(rho.labels()) {
        delta[l] += euclidean(row, &mu_k[l * d..(l + 1) * d]);
    }
    delta
        .iter_mut()
        .zip(&sizes)
        .for_each(|(s, &size)| *s /= size as f64);

    let mut total = 0.0;
    for a in 0..k {
        let mut worst = 0.0f64;
        for b in (0..k).filter(|&b| b != a) {
            let sep = euclidean(&mu_k[a * d..(a + 1) * d], &mu_k[b * d..(b + 1) * d]);
            if sep == 0.0 {
                return Err(Error::CoincidentCentroids);
            }
            worst = worst.max((delta[a] + delta[b]) / sep);
        }
        total += worst;
    }
    Ok(IndexId::DaviesBouldin.value(total / k as f64))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{blobs, line4, shuffled};
    use super::*;

    #[test]
    fn line_fixture() {
        let (z, rho) = line4();
        // WGSS = 4 * 0.25 = 1, BGSS = 2*25 + 2*25 = 100
        let ch = calinski_harabasz(&z, &rho).unwrap();
        assert!((ch.raw - 200.0).abs() < 1e-9);
        // delta = 0.5 for both, Delta = 10
        let db = davies_bouldin(&z, &rho).unwrap();
        assert!((db.raw - 0.1).abs() < 1e-12);
        assert_eq!(db.oriented, -db.raw);
    }

    #[test]
    fn compact_clusters() {
        let z = EmbeddingMatrix::new(4, 1, vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        let rho = Partition::canonicalize(&[0, 0, 1, 1]).unwrap();
        assert_eq!(
            calinski_harabasz(&z, &rho),
            Err(Error::ZeroWithinDispersion)
        );
        assert_eq!(davies_bouldin(&z, &rho).unwrap().raw, 0.0);
    }

    #[test]
    fn coincident_barycenters() {
        let z = EmbeddingMatrix::new(4, 1, vec![-1.0, 1.0, -2.0, 2.0]).unwrap();
        let rho = Partition::canonicalize(&[0, 0, 1, 1]).unwrap();
        assert_eq!(davies_bouldin(&z, &rho), Err(Error::CoincidentCentroids));
    }

    #[test]
    fn random_labels_are_non_negative() {
        let (z, rho) = blobs(4, 50, 3, 0.0, 9);
        let rho = shuffled(&rho, 10);
        assert!(calinski_harabasz(&z, &rho).unwrap().raw > 0.0);
    }
}
