//! External measures comparing an estimated partition with ground truth.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::Partition;
use crate::error::{Error, Result};

/// Joint label counts of two partitions of the same observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<usize>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn new(a: &Partition, b: &Partition) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let (rows, cols) = (a.k(), b.k());
        let mut counts = vec![0usize; rows * cols];
        for (&i, &j) in a.labels().iter().zip(b.labels()) {
            counts[i * cols + j] += 1;
        }
        Ok(Self {
            rows,
            cols,
            counts,
            n: a.len(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// True when every row and every column has exactly one nonzero cell, i.e.
    /// the partitions agree up to relabeling.
    fn is_bijective(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let nonzero = |it: &mut dyn Iterator<Item = usize>| it.filter(|&c| c > 0).count() == 1;
        (0..self.rows).all(|i| nonzero(&mut (0..self.cols).map(|j| self.get(i, j))))
            && (0..self.cols).all(|j| nonzero(&mut (0..self.rows).map(|i| self.get(i, j))))
    }
}

fn entropy(sums: &[usize], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

/// Normalized mutual information `2 I(A;B) / (H(A) + H(B))`.
///
/// When both entropies vanish the value is 1 if the partitions agree up to
/// relabeling and 0 otherwise.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    if table.n == 0 {
        return Err(Error::EmptyInput);
    }
    let n = table.n as f64;
    let (ra, cb) = (table.row_sums(), table.col_sums());
    let (ha, hb) = (entropy(&ra, n), entropy(&cb, n));
    if ha + hb <= 0.0 {
        return Ok(if table.is_bijective() { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (i, &ri) in ra.iter().enumerate() {
        for (j, &cj) in cb.iter().enumerate() {
            let c = table.get(i, j);
            if c > 0 {
                let c = c as f64;
                mi += c / n * libm::log(c * n / (ri as f64 * cj as f64));
            }
        }
    }
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// Minimum-cost perfect assignment on a square `size x size` cost matrix.
/// Returns `assign[row] = col`.
pub fn hungarian(cost: &[f64], size: usize) -> Vec<usize> {
    // Shortest augmenting path with potentials; 1-based with a virtual column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut owner = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for row in 1..=size {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = inf;
            let mut col1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost[(i0 - 1) * size + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = col0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        col1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; size];
    for j in 1..=size {
        if owner[j] > 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    assign
}

/// Fraction of observations matched under the best one-to-one mapping of
/// predicted labels onto true labels.
pub fn clustering_accuracy(truth: &Partition, pred: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Err(Error::EmptyInput);
    }
    let size = table.rows.max(table.cols);
    let mut cost = vec![0.0; size * size];
    for i in 0..table.rows {
        for j in 0..table.cols {
            cost[i * size + j] = -(table.get(i, j) as f64);
        }
    }
    let assign = hungarian(&cost, size);
    let matched: usize = (0..table.rows)
        .filter(|&i| assign[i] < table.cols)
        .map(|i| table.get(i, assign[i]))
        .sum();
    Ok(matched as f64 / table.n as f64)
}
