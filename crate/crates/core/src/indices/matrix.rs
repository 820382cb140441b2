use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{IndexId, IndexValue};
use crate::data::TrialBundle;
use crate::exec::{Executor, Sequential};

/// A cell that could not be computed, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub space: usize,
    pub partition: usize,
    pub reason: String,
}

/// `M x M` grid of index values: row `m` evaluates every partition in space
/// `Z_m`, column `j` is partition `rho_j`. Failed cells are missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub index: IndexId,
    pub size: usize,
    pub cells: Vec<Option<IndexValue>>,
    pub failures: Vec<CellFailure>,
}

impl ScoreMatrix {
    pub fn get(&self, space: usize, partition: usize) -> Option<IndexValue> {
        self.cells[space * self.size + partition]
    }

    pub fn oriented(&self, space: usize, partition: usize) -> Option<f64> {
        self.get(space, partition).map(|v| v.oriented)
    }

    /// Oriented scores assigned by space `space` to every partition.
    pub fn oriented_row(&self, space: usize) -> Vec<Option<f64>> {
        (0..self.size).map(|j| self.oriented(space, j)).collect()
    }

    /// Paired scores: each partition evaluated in its own space.
    pub fn diagonal(&self) -> Vec<Option<f64>> {
        (0..self.size).map(|m| self.oriented(m, m)).collect()
    }
}

pub fn compute_score_matrix(bundle: &TrialBundle, index: IndexId) -> ScoreMatrix {
    compute_score_matrix_with(bundle, index, &Sequential)
}

/// Fills the matrix one cell per job; the result does not depend on the
/// executor.
pub fn compute_score_matrix_with<E: Executor>(
    bundle: &TrialBundle,
    index: IndexId,
    exec: &E,
) -> ScoreMatrix {
    let size = bundle.len();
    let trials = bundle.trials();
    let results = exec.map(size * size, |cell| {
        let (space, partition) = (cell / size, cell % size);
        index.evaluate(&trials[space].embedding, &trials[partition].partition)
    });
    let mut cells = Vec::with_capacity(size * size);
    let mut failures = Vec::new();
    for (cell, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => cells.push(Some(v)),
            Err(e) => {
                cells.push(None);
                failures.push(CellFailure {
                    space: cell / size,
                    partition: cell % size,
                    reason: format!("{e}"),
                });
            }
        }
    }
    ScoreMatrix {
        index,
        size,
        cells,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{blobs, shuffled};
    use super::super::{silhouette, SilhouetteMetric};
    use super::*;
    use crate::data::{Partition, Trial};
    use alloc::vec;

    #[test]
    fn identical_trials_give_equal_rows() {
        let (z, rho) = blobs(2, 10, 2, 5.0, 1);
        let t = |id: &str| Trial::new(id, z.clone(), rho.clone()).unwrap();
        let b = TrialBundle::new(vec![t("a"), t("b")], None, None).unwrap();
        let s = compute_score_matrix(&b, IndexId::SilhouetteEuclidean);
        assert_eq!(s.oriented_row(0), s.oriented_row(1));
        assert_eq!(s.get(0, 1), s.get(1, 0));
    }

    #[test]
    fn diagonal_matches_single_trial_calls() {
        let mut trials = Vec::new();
        for m in 0..3u64 {
            let (z, rho) = blobs(3, 8, 2, 2.0 + m as f64, 40 + m);
            let rho = if m == 1 { shuffled(&rho, 3) } else { rho };
            trials.push(Trial::new(alloc::format!("t{m}"), z, rho).unwrap());
        }
        let b = TrialBundle::new(trials, None, None).unwrap();
        let s = compute_score_matrix(&b, IndexId::SilhouetteEuclidean);
        for (m, t) in b.trials().iter().enumerate() {
            let direct =
                silhouette(&t.embedding, &t.partition, SilhouetteMetric::Euclidean).unwrap();
            assert_eq!(s.diagonal()[m], Some(direct.oriented));
        }
        assert!(s.failures.is_empty());
    }

    #[test]
    fn failed_cells_are_missing() {
        let (z, rho) = blobs(2, 5, 2, 5.0, 1);
        let one = Partition::canonicalize(&[0; 10]).unwrap();
        let b = TrialBundle::new(
            vec![
                Trial::new("good", z.clone(), rho).unwrap(),
                Trial::new("one", z, one).unwrap(),
            ],
            None,
            None,
        )
        .unwrap();
        let s = compute_score_matrix(&b, IndexId::SilhouetteEuclidean);
        assert!(s.get(0, 0).is_some());
        assert!(s.get(0, 1).is_none() && s.get(1, 1).is_none());
        assert_eq!(s.failures.len(), 2);
        assert_eq!(s.failures[0].partition, 1);
    }
}
