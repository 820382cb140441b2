//! Significance-filtered correlation graphs and link-analysis ratings.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::ScoreMatrix;
use crate::stats::{holm_bonferroni, spearman_onesided_pvalue};

pub const MAX_ITER: usize = 10_000;

/// A kept edge between two spaces, with its correlation and raw p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub p_value: f64,
}

/// Undirected graph over the spaces of one subgroup. `weights` is the dense
/// `k x k` adjacency in vertex order; edges use the ids in `vertices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGraph {
    pub vertices: Vec<usize>,
    pub weights: Vec<f64>,
    pub edges: Vec<Edge>,
}

impl CorrelationGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.len() + b]
    }

    /// Graph from a dense symmetric adjacency, without significance filtering.
    pub fn from_weights(vertices: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let k = vertices.len();
        if weights.len() != k * k {
            return Err(Error::ShapeMismatch(format!(
                "{k} vertices need {} weights",
                k * k
            )));
        }
        let mut edges = Vec::new();
        for a in 0..k {
            for b in 0..k {
                let w = weights[a * k + b];
                if !w.is_finite() || w < 0.0 || w != weights[b * k + a] || (a == b && w != 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "bad adjacency entry ({a}, {b}) = {w}"
                    )));
                }
                if a < b && w > 0.0 {
                    edges.push(Edge {
                        i: vertices[a],
                        j: vertices[b],
                        weight: w,
                        p_value: 0.0,
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            weights,
            edges,
        })
    }
}

/// Keeps the edge between two spaces when their correlation is significantly
/// positive: one-sided Spearman p-values over all pairs, Holm at `alpha`.
/// `corr` is the `k x k` correlation block of `vertices`, computed from
/// `n_samples` partitions.
pub fn build_graph(
    vertices: &[usize],
    corr: &[f64],
    n_samples: usize,
    alpha: f64,
) -> Result<CorrelationGraph> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let k = vertices.len();
    if corr.len() != k * k {
        return Err(Error::ShapeMismatch(format!(
            "{k} vertices need a {k}x{k} correlation block"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .collect();
    let pvals = pairs
        .iter()
        .map(|&(a, b)| spearman_onesided_pvalue(corr[a * k + b], n_samples))
        .collect::<Result<Vec<f64>>>()?;
    let reject = holm_bonferroni(&pvals, alpha)?;
    let mut weights = vec![0.0; k * k];
    let mut edges = Vec::new();
    for (t, &(a, b)) in pairs.iter().enumerate() {
        let r = corr[a * k + b];
        if reject[t] && r > 0.0 {
            weights[a * k + b] = r;
            weights[b * k + a] = r;
            edges.push(Edge {
                i: vertices[a],
                j: vertices[b],
                weight: r,
                p_value: pvals[t],
            });
        }
    }
    Ok(CorrelationGraph {
        vertices: vertices.to_vec(),
        weights,
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinkMethod {
    #[default]
    Pagerank,
    Hits,
}

impl core::str::FromStr for LinkMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pagerank" => Ok(Self::Pagerank),
            "hits" => Ok(Self::Hits),
            other => Err(Error::InvalidParams(format!(
                "unknown link method {other:?}; expected pagerank or hits"
            ))),
        }
    }
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn l1_normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    s
}

/// Stationary distribution of the damped random walk on the weighted graph.
/// Vertices without edges jump uniformly.
pub fn pagerank(g: &CorrelationGraph, damping: f64, tol: f64) -> Result<Vec<f64>> {
    let k = g.len();
    if k == 0 {
        return Err(Error::EmptySubgroup);
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParams(format!(
            "damping must lie in (0, 1), got {damping}"
        )));
    }
    let out: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| g.weight(a, b)).sum())
        .collect();
    let uniform = 1.0 / k as f64;
    let mut x = vec![uniform; k];
    let mut next = vec![0.0; k];
    for _ in 0..MAX_ITER {
        let dangling: f64 = (0..k).filter(|&a| out[a] == 0.0).map(|a| x[a]).sum();
        for (b, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = (0..k)
                .filter(|&a| out[a] > 0.0)
                .map(|a| x[a] * g.weight(a, b) / out[a])
                .sum();
            *slot = damping * (inflow + dangling * uniform) + (1.0 - damping) * uniform;
        }
        l1_normalize(&mut next);
        let change = max_change(&x, &next);
        core::mem::swap(&mut x, &mut next);
        if change < tol {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence(MAX_ITER))
}

/// HITS authority scores, L1-normalized. Uniform when the graph has no edges
/// or the iteration does not settle.
pub fn hits_authority(g: &CorrelationGraph, tol: f64) -> Vec<f64> {
    let k = g.len();
    if k == 0 {
        return Vec::new();
    }
    let uniform = vec![1.0 / k as f64; k];
    if g.weights.iter().all(|&w| w == 0.0) {
        return uniform;
    }
    let mut hub = uniform.clone();
    let mut auth = uniform.clone();
    for _ in 0..MAX_ITER {
        let mut next: Vec<f64> = (0..k)
            .map(|b| (0..k).map(|a| g.weight(a, b) * hub[a]).sum())
            .collect();
        l1_normalize(&mut next);
        hub = (0..k)
            .map(|a| (0..k).map(|b| g.weight(a, b) * next[b]).sum())
            .collect();
        l1_normalize(&mut hub);
        let change = max_change(&auth, &next);
        auth = next;
        if change < tol {
            return auth;
        }
    }
    uniform
}

/// Weighted combination of the subgroup's score rows. Each column uses the
/// members with a value there, with their weights renormalized; if those
/// weights are all zero the plain mean is used.
pub fn aggregate_scores(
    scores: &ScoreMatrix,
    members: &[usize],
    weights: &[f64],
) -> Result<Vec<Option<f64>>> {
    if members.is_empty() {
        return Err(Error::EmptySubgroup);
    }
    if members.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: members.len(),
            right: weights.len(),
        });
    }
    Ok((0..scores.size)
        .map(|j| {
            let present: Vec<(f64, f64)> = members
                .iter()
                .zip(weights)
                .filter_map(|(&m, &w)| Some((scores.oriented(m, j)?, w)))
                .collect();
            if present.is_empty() {
                return None;
            }
            let total: f64 = present.iter().map(|p| p.1).sum();
            Some(if total > 0.0 {
                present.iter().map(|(v, w)| v * w).sum::<f64>() / total
            } else {
                present.iter().map(|p| p.0).sum::<f64>() / present.len() as f64
            })
        })
        .collect())
}
