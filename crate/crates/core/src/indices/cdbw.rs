use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{centroids, require_k_at_least_two, IndexId, IndexValue};
use crate::data::{EmbeddingMatrix, Partition};
use crate::error::{Error, Result};
use crate::linalg::{euclidean, sq_euclidean};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdbwOptions {
    /// Representatives per cluster (fewer when the cluster is smaller).
    pub reps: usize,
    /// Factors by which representatives are shrunk towards their barycenter.
    pub shrink_factors: Vec<f64>,
}

impl Default for CdbwOptions {
    fn default() -> Self {
        Self {
            reps: 10,
            shrink_factors: (1..=8).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

/// Farthest-first traversal started from the member nearest the barycenter.
fn representatives(
    z: &EmbeddingMatrix,
    members: &[usize],
    center: &[f64],
    reps: usize,
) -> Vec<usize> {
    let count = reps.min(members.len());
    let start = *members
        .iter()
        .min_by(|&&a, &&b| {
            sq_euclidean(z.row(a), center).total_cmp(&sq_euclidean(z.row(b), center))
        })
        .expect("cluster has members");
    let mut chosen = vec![start];
    let mut nearest: Vec<f64> = members
        .iter()
        .map(|&i| euclidean(z.row(i), z.row(start)))
        .collect();
    while chosen.len() < count {
        let (pos, _) = nearest
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        let next = members[pos];
        chosen.push(next);
        for (d, &i) in nearest.iter_mut().zip(members) {
            *d = d.min(euclidean(z.row(i), z.row(next)));
        }
    }
    chosen
}

/// Mutually closest representative pairs between two clusters. When no pair
/// is mutual the single globally closest pair is used.
fn respective_closest(z: &EmbeddingMatrix, a: &[usize], b: &[usize]) -> Vec<(usize, usize)> {
    let closest = |from: usize, pool: &[usize]| -> usize {
        *pool
            .iter()
            .min_by(|&&x, &&y| {
                sq_euclidean(z.row(from), z.row(x)).total_cmp(&sq_euclidean(z.row(from), z.row(y)))
            })
            .expect("non-empty")
    };
    let mut pairs: Vec<(usize, usize)> = a
        .iter()
        .filter_map(|&va| {
            let vb = closest(va, b);
            (closest(vb, a) == va).then_some((va, vb))
        })
        .collect();
    if pairs.is_empty() {
        let best = a
            .iter()
            .flat_map(|&va| b.iter().map(move |&vb| (va, vb)))
            .min_by(|x, y| {
                sq_euclidean(z.row(x.0), z.row(x.1))
                    .total_cmp(&sq_euclidean(z.row(y.0), z.row(y.1)))
            })
            .expect("non-empty");
        pairs.push(best);
    }
    pairs
}

/// CDbw: cohesion times separation-with-respect-to-compactness.
///
/// `stdev` is the root mean over clusters of each cluster's total variance;
/// a singleton cluster has zero variance. Neighborhoods are closed balls of
/// radius `stdev`. When `stdev` is zero (every cluster a single repeated
/// point) no density is defined and the index is 0.
pub fn cdbw(z: &EmbeddingMatrix, rho: &Partition, opts: &CdbwOptions) -> Result<IndexValue> {
    require_k_at_least_two(rho)?;
    if opts.reps == 0 {
        return Err(Error::InvalidParams(
            "CDbw needs at least one representative".into(),
        ));
    }
    if opts.shrink_factors.is_empty() || opts.shrink_factors.iter().any(|&s| !(s > 0.0 && s < 1.0))
    {
        return Err(Error::InvalidParams(
            "CDbw shrink factors must lie in (0, 1)".into(),
        ));
    }
    let (d, k) = (z.cols(), rho.k());
    let members = rho.members();
    if let Some(empty) = members.iter().position(|m| m.is_empty()) {
        return Err(Error::EmptyCluster(empty));
    }
    let mu = centroids(z, rho);
    let center = |c: usize| &mu[c * d..(c + 1) * d];

    let variance_total = |c: usize| -> f64 {
        let m = &members[c];
        if m.len() < 2 {
            return 0.0;
        }
        m.iter()
            .map(|&i| sq_euclidean(z.row(i), center(c)))
            .sum::<f64>()
            / (m.len() - 1) as f64
    };
    let stdev = ((0..k).map(variance_total).sum::<f64>() / k as f64).sqrt();
    if stdev == 0.0 {
        return Ok(IndexId::Cdbw.value(0.0));
    }

    let reps: Vec<Vec<usize>> = (0..k)
        .map(|c| representatives(z, &members[c], center(c), opts.reps))
        .collect();
    let within = |probe: &[f64], pool: &[usize]| -> usize {
        pool.iter()
            .filter(|&&i| euclidean(z.row(i), probe) <= stdev)
            .count()
    };

    // densities and distances between every cluster pair
    let mut dens = vec![0.0; k * k];
    let mut dist = vec![0.0; k * k];
    let mut midpoint = vec![0.0; d];
    for a in 0..k {
        for b in (a + 1)..k {
            let pairs = respective_closest(z, &reps[a], &reps[b]);
            let pool_size = (members[a].len() + members[b].len()) as f64;
            let mut dens_sum = 0.0;
            let mut dist_sum = 0.0;
            for &(va, vb) in &pairs {
                let gap = euclidean(z.row(va), z.row(vb));
                for ((m, x), y) in midpoint.iter_mut().zip(z.row(va)).zip(z.row(vb)) {
                    *m = 0.5 * (x + y);
                }
                let card = (within(&midpoint, &members[a]) + within(&midpoint, &members[b])) as f64
                    / pool_size;
                dens_sum += gap / (2.0 * stdev) * card;
                dist_sum += gap;
            }
            let count = pairs.len() as f64;
            dens[a * k + b] = dens_sum / count;
            dens[b * k + a] = dens_sum / count;
            dist[a * k + b] = dist_sum / count;
            dist[b * k + a] = dist_sum / count;
        }
    }
    let kf = k as f64;
    let inter_dens = (0..k)
        .map(|a| {
            (0..k)
                .filter(|&b| b != a)
                .map(|b| dens[a * k + b])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / kf;
    let mean_min_dist = (0..k)
        .map(|a| {
            (0..k)
                .filter(|&b| b != a)
                .map(|b| dist[a * k + b])
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / kf;
    let sep = mean_min_dist / (1.0 + inter_dens);

    let mut shrunk = vec![0.0; d];
    let intra: Vec<f64> = opts
        .shrink_factors
        .iter()
        .map(|&s| {
            let dens_cl: f64 = (0..k)
                .map(|c| {
                    let per_rep: f64 = reps[c]
                        .iter()
                        .map(|&v| {
                            for ((o, x), m) in shrunk.iter_mut().zip(z.row(v)).zip(center(c)) {
                                *o = x + s * (m - x);
                            }
                            within(&shrunk, &members[c]) as f64 / members[c].len() as f64
                        })
                        .sum();
                    per_rep / reps[c].len() as f64
                })
                .sum();
            dens_cl / (kf * stdev)
        })
        .collect();
    let ns = intra.len() as f64;
    let compactness = intra.iter().sum::<f64>() / ns;
    let intra_change = if intra.len() > 1 {
        intra.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (ns - 1.0)
    } else {
        0.0
    };
    let cohesion = compactness / (1.0 + intra_change);
    let sc = sep * compactness;
    Ok(IndexId::Cdbw.value(cohesion * sc))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{blobs, shuffled};
    use super::*;

    #[test]
    fn separated_blobs_beat_relabeling() {
        let (z, rho) = blobs(2, 40, 2, 8.0, 11);
        let opts = CdbwOptions::default();
        let good = cdbw(&z, &rho, &opts).unwrap().raw;
        let bad = cdbw(&z, &shuffled(&rho, 11), &opts).unwrap().raw;
        assert!(good > bad, "{good} vs {bad}");
        assert!(good > 0.0);
    }

    #[test]
    fn one_representative_still_defined() {
        let (z, rho) = blobs(3, 10, 2, 5.0, 3);
        let opts = CdbwOptions {
            reps: 1,
            ..CdbwOptions::default()
        };
        let v = cdbw(&z, &rho, &opts).unwrap().raw;
        assert!(v.is_finite() && v >= 0.0);
    }

    #[test]
    fn all_singletons_complete() {
        let z = EmbeddingMatrix::new(4, 1, vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        let rho = Partition::canonicalize(&[0, 1, 2, 3]).unwrap();
        let v = cdbw(&z, &rho, &CdbwOptions::default()).unwrap();
        assert_eq!(v.raw, 0.0);
    }

    #[test]
    fn representatives_are_farthest_first() {
        let z = EmbeddingMatrix::new(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let reps = representatives(&z, &[0, 1, 2, 3, 4], &[2.0], 3);
        assert_eq!(reps, vec![2, 0, 4]);
    }

    #[test]
    fn closest_pair_is_always_mutual() {
        let z = EmbeddingMatrix::new(4, 1, vec![0.0, 1.0, 5.0, 9.0]).unwrap();
        let pairs = respective_closest(&z, &[0, 1], &[2, 3]);
        assert_eq!(pairs, vec![(1, 2)]);
    }

    #[test]
    fn rejects_bad_options() {
        let (z, rho) = blobs(2, 5, 2, 5.0, 3);
        let opts = CdbwOptions {
            reps: 2,
            shrink_factors: vec![1.5],
        };
        assert!(matches!(
            cdbw(&z, &rho, &opts),
            Err(Error::InvalidParams(_))
        ));
    }
}
