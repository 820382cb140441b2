//! Internal clustering validity indices.
//!
//! Every index reports its raw value plus an *oriented* value that is larger
//! for better partitions, so lower-is-better indices (Davies-Bouldin, C-index,
//! S_Dbw) are negated before they reach the pipeline.

mod ccc;
mod cdbw;
mod centroid;
mod matrix;
mod pairwise;
mod sdbw;
mod silhouette;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingMatrix, Partition};
use crate::error::{Error, Result};

pub use ccc::ccc;
pub use cdbw::{cdbw, CdbwOptions};
pub use centroid::{calinski_harabasz, davies_bouldin};
pub use matrix::{compute_score_matrix, compute_score_matrix_with, CellFailure, ScoreMatrix};
pub use pairwise::{cindex, dunn};
pub use sdbw::sdbw;
pub use silhouette::{silhouette, SilhouetteMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexId {
    SilhouetteEuclidean,
    SilhouetteCosine,
    CalinskiHarabasz,
    DaviesBouldin,
    Dunn,
    Cindex,
    Ccc,
    Sdbw,
    Cdbw,
}

impl IndexId {
    pub const ALL: [IndexId; 9] = [
        IndexId::SilhouetteEuclidean,
        IndexId::SilhouetteCosine,
        IndexId::CalinskiHarabasz,
        IndexId::DaviesBouldin,
        IndexId::Dunn,
        IndexId::Cindex,
        IndexId::Ccc,
        IndexId::Sdbw,
        IndexId::Cdbw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndexId::SilhouetteEuclidean => "silhouette_euclidean",
            IndexId::SilhouetteCosine => "silhouette_cosine",
            IndexId::CalinskiHarabasz => "calinski_harabasz",
            IndexId::DaviesBouldin => "davies_bouldin",
            IndexId::Dunn => "dunn",
            IndexId::Cindex => "cindex",
            IndexId::Ccc => "ccc",
            IndexId::Sdbw => "sdbw",
            IndexId::Cdbw => "cdbw",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(
            self,
            IndexId::DaviesBouldin | IndexId::Cindex | IndexId::Sdbw
        )
    }

    /// Wraps a raw value with this index's orientation.
    pub fn value(self, raw: f64) -> IndexValue {
        let oriented = if self.higher_is_better() { raw } else { -raw };
        IndexValue { raw, oriented }
    }

    /// Evaluates the index with its default options.
    pub fn evaluate(self, z: &EmbeddingMatrix, rho: &Partition) -> Result<IndexValue> {
        if z.rows() != rho.len() {
            return Err(Error::LengthMismatch {
                left: z.rows(),
                right: rho.len(),
            });
        }
        match self {
            IndexId::SilhouetteEuclidean => silhouette(z, rho, SilhouetteMetric::Euclidean),
            IndexId::SilhouetteCosine => silhouette(z, rho, SilhouetteMetric::Cosine),
            IndexId::CalinskiHarabasz => calinski_harabasz(z, rho),
            IndexId::DaviesBouldin => davies_bouldin(z, rho),
            IndexId::Dunn => dunn(z, rho),
            IndexId::Cindex => cindex(z, rho),
            IndexId::Ccc => ccc(z, rho),
            IndexId::Sdbw => sdbw(z, rho),
            IndexId::Cdbw => cdbw(z, rho, &CdbwOptions::default()),
        }
    }
}

impl fmt::Display for IndexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Returned when parsing an unknown index name; lists the valid ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownIndex(pub String);

impl fmt::Display for UnknownIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown index `{}`; valid ids are:", self.0)?;
        for id in IndexId::ALL {
            write!(f, " {id}")?;
        }
        Ok(())
    }
}

impl core::error::Error for UnknownIndex {}

impl FromStr for IndexId {
    type Err = UnknownIndex;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        IndexId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| UnknownIndex(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexValue {
    pub raw: f64,
    pub oriented: f64,
}

/// Fails with `DegenerateK` unless `2 <= K <= n - 1`.
pub(crate) fn require_k_proper(rho: &Partition) -> Result<()> {
    let (k, n) = (rho.k(), rho.len());
    if k < 2 || k + 1 > n {
        return Err(Error::DegenerateK { k, n });
    }
    Ok(())
}

pub(crate) fn require_k_at_least_two(rho: &Partition) -> Result<()> {
    if rho.k() < 2 {
        return Err(Error::DegenerateK {
            k: rho.k(),
            n: rho.len(),
        });
    }
    Ok(())
}

/// Barycenters of every cluster, `K x d` row-major.
pub(crate) fn centroids(z: &EmbeddingMatrix, rho: &Partition) -> Vec<f64> {
    let d = z.cols();
    let mut c = alloc::vec![0.0; rho.k() * d];
    let sizes = rho.sizes();
    for (row, &l) in z.iter_rows().zip(rho.labels()) {
        for (acc, v) in c[l * d..(l + 1) * d].iter_mut().zip(row) {
            *acc += v;
        }
    }
    for (k, &size) in sizes.iter().enumerate() {
        if size > 0 {
            c[k * d..(k + 1) * d]
                .iter_mut()
                .for_each(|v| *v /= size as f64);
        }
    }
    c
}
