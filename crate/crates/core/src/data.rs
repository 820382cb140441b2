//! Trials, partitions and embedding matrices.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `rows x cols` matrix of finite values, one row per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput);
        }
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(format!(
                "row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Cluster labels for `n` observations, remapped to `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels arbitrary integer labels by order of first occurrence.
    pub fn canonicalize<L: Copy + Ord>(labels: &[L]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut seen: Vec<(L, usize)> = Vec::new();
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            let id = match seen.binary_search_by(|(v, _)| v.cmp(&l)) {
                Ok(pos) => seen[pos].1,
                Err(pos) => {
                    let id = seen.len();
                    seen.insert(pos, (l, id));
                    id
                }
            };
            out.push(id);
        }
        Ok(Self {
            k: seen.len(),
            labels: out,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Observation indices of every cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = alloc::vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
    }
}

/// One clustering run: its embedding space and the partition found there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: String,
    pub embedding: EmbeddingMatrix,
    pub partition: Partition,
}

impl Trial {
    pub fn new(
        id: impl Into<String>,
        embedding: EmbeddingMatrix,
        partition: Partition,
    ) -> Result<Self> {
        let id = id.into();
        if embedding.rows() != partition.len() {
            return Err(Error::ShapeMismatch(format!(
                "trial `{id}`: {} labels for {} embedding rows",
                partition.len(),
                embedding.rows()
            )));
        }
        Ok(Self {
            id,
            embedding,
            partition,
        })
    }
}

/// All trials run on the same task, plus the optional shared raw input and
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBundle {
    trials: Vec<Trial>,
    raw_input: Option<EmbeddingMatrix>,
    truth: Option<Partition>,
}

impl TrialBundle {
    pub fn new(
        trials: Vec<Trial>,
        raw_input: Option<EmbeddingMatrix>,
        truth: Option<Partition>,
    ) -> Result<Self> {
        let first = trials.first().ok_or(Error::EmptyInput)?;
        let n = first.embedding.rows();
        let mut ids = BTreeSet::new();
        for t in &trials {
            if t.embedding.rows() != n {
                return Err(Error::ShapeMismatch(format!(
                    "trial `{}` has {} observations, trial `{}` has {n}",
                    t.id,
                    t.embedding.rows(),
                    first.id
                )));
            }
            if !ids.insert(t.id.as_str()) {
                return Err(Error::DuplicateId(t.id.clone()));
            }
        }
        if let Some(x) = &raw_input {
            if x.rows() != n {
                return Err(Error::ShapeMismatch(format!(
                    "raw input has {} rows, trials have {n}",
                    x.rows()
                )));
            }
        }
        if let Some(y) = &truth {
            if y.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "truth has {} labels, trials have {n}",
                    y.len()
                )));
            }
        }
        Ok(Self {
            trials,
            raw_input,
            truth,
        })
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Observations per trial.
    pub fn n(&self) -> usize {
        self.trials[0].embedding.rows()
    }

    pub fn raw_input(&self) -> Option<&EmbeddingMatrix> {
        self.raw_input.as_ref()
    }

    pub fn truth(&self) -> Option<&Partition> {
        self.truth.as_ref()
    }

    pub fn ids(&self) -> Vec<String> {
        self.trials.iter().map(|t| t.id.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn canonicalize_by_first_occurrence() {
        let p = Partition::canonicalize(&[5, 5, 9, 9]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 1]);
        assert_eq!(p.k(), 2);

        let p = Partition::canonicalize(&[0, 1, 2]).unwrap();
        assert_eq!(p.labels(), &[0, 1, 2]);
        assert_eq!(p.k(), 3);

        let p = Partition::canonicalize(&[2, 0, 2, 1]).unwrap();
        assert_eq!(p.labels(), &[0, 1, 0, 2]);
        assert_eq!(p.k(), 3);
    }

    #[test]
    fn canonicalize_rejects_empty() {
        assert_eq!(Partition::canonicalize::<i64>(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn matrix_rejects_nan_and_bad_shape() {
        assert!(matches!(
            EmbeddingMatrix::new(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFiniteValue(_))
        ));
        assert!(matches!(
            EmbeddingMatrix::new(2, 2, vec![0.0; 3]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn bundle_validates_shapes_and_ids() {
        let z = EmbeddingMatrix::new(4, 2, vec![0.0; 8]).unwrap();
        let p = Partition::canonicalize(&[0, 0, 1, 1]).unwrap();
        let t = Trial::new("a", z.clone(), p.clone()).unwrap();
        assert!(matches!(
            TrialBundle::new(vec![t.clone(), t.clone()], None, None),
            Err(Error::DuplicateId(_))
        ));
        let short = EmbeddingMatrix::new(3, 2, vec![0.0; 6]).unwrap();
        let p3 = Partition::canonicalize(&[0, 1, 1]).unwrap();
        let t3 = Trial::new("b", short, p3).unwrap();
        assert!(matches!(
            TrialBundle::new(vec![t.clone(), t3], None, None),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            Trial::new("c", z, Partition::canonicalize(&[0, 1, 1]).unwrap()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent_and_preserves_comembership(
            labels in proptest::collection::vec(-5i64..5, 1..40)
        ) {
            let p = Partition::canonicalize(&labels).unwrap();
            let again = Partition::canonicalize(p.labels()).unwrap();
            prop_assert_eq!(&again, &p);
            for i in 0..labels.len() {
                for j in 0..labels.len() {
                    prop_assert_eq!(labels[i] == labels[j], p.labels()[i] == p.labels()[j]);
                }
            }
            prop_assert!(p.labels().iter().all(|&l| l < p.k()));
        }
    }
}
