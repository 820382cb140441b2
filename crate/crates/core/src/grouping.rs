//! Density-based grouping of spaces and the two-phase stage-wise grouping.
//!
//! Phase 1 clusters spaces on `1 - corr`; phase 2 splits every phase-1 group
//! by the RMS distance between score rows so that spaces ranking partitions
//! alike but on different scales end up apart. Outliers of either phase are
//! kept as singleton subgroups.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric, non-negative, zero-diagonal distances between spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::ShapeMismatch(format!(
                "distance matrix of size {size} needs {} entries, got {}",
                size * size,
                values.len()
            )));
        }
        for i in 0..size {
            if values[i * size + i] != 0.0 {
                return Err(Error::InvalidParams(format!("nonzero diagonal at {i}")));
            }
            for j in 0..size {
                let v = values[i * size + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonFiniteValue(format!("distance ({i}, {j}) = {v}")));
                }
                if v != values[j * size + i] {
                    return Err(Error::InvalidParams(format!(
                        "asymmetric distance at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { size, values })
    }

    /// Builds the matrix from a symmetric distance function over `i < j`.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; size * size];
        for i in 0..size {
            for j in i + 1..size {
                let v = f(i, j);
                values[i * size + j] = v;
                values[j * size + i] = v;
            }
        }
        Self::new(size, values)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Cluster label per space (`None` for outliers) and the member lists,
/// ordered by lowest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    pub assignment: Vec<Option<usize>>,
    pub groups: Vec<Vec<usize>>,
}

impl Grouping {
    fn from_labels(labels: &[Option<usize>]) -> Self {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut ids: Vec<(usize, usize)> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            if let Some(l) = *l {
                match ids.iter().find(|(raw, _)| *raw == l) {
                    Some(&(_, g)) => groups[g].push(i),
                    None => {
                        ids.push((l, groups.len()));
                        groups.push(vec![i]);
                    }
                }
            }
        }
        let mut assignment = vec![None; labels.len()];
        for (g, members) in groups.iter().enumerate() {
            for &m in members {
                assignment[m] = Some(g);
            }
        }
        Self { assignment, groups }
    }

    pub fn outliers(&self) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i].is_none())
            .collect()
    }
}

/// DBSCAN on a precomputed matrix. A space is core when at least `min_pts`
/// spaces, itself included, lie within `eps`.
pub fn dbscan(d: &DistanceMatrix, eps: f64, min_pts: usize) -> Result<Grouping> {
    if eps.is_nan() || eps <= 0.0 || min_pts == 0 {
        return Err(Error::InvalidParams(format!(
            "dbscan needs eps > 0 and min_pts >= 1, got {eps}, {min_pts}"
        )));
    }
    let m = d.size();
    let neighbors: Vec<Vec<usize>> = (0..m)
        .map(|i| (0..m).filter(|&j| d.get(i, j) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut labels: Vec<Option<usize>> = vec![None; m];
    let mut next = 0;
    for start in 0..m {
        if labels[start].is_some() || !core[start] {
            continue;
        }
        labels[start] = Some(next);
        let mut queue: VecDeque<usize> = neighbors[start].iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            if labels[q].is_some() {
                continue;
            }
            labels[q] = Some(next);
            if core[q] {
                queue.extend(
                    neighbors[q]
                        .iter()
                        .copied()
                        .filter(|&r| labels[r].is_none()),
                );
            }
        }
        next += 1;
    }
    Ok(Grouping::from_labels(&labels))
}

const MIN_DISTANCE: f64 = 1e-12;
/// Levels closer than this (relative) count as ties.
const LAMBDA_RTOL: f64 = 1e-9;

struct CondensedEdge {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

/// HDBSCAN on a precomputed matrix with excess-of-mass selection. The root
/// may be selected as the only cluster; in that case spaces that leave it
/// before its last split level are outliers.
pub fn hdbscan(
    d: &DistanceMatrix,
    min_cluster_size: usize,
    min_samples: usize,
) -> Result<Grouping> {
    let m = d.size();
    if min_cluster_size < 2 || min_samples == 0 {
        return Err(Error::InvalidParams(format!(
            "hdbscan needs min_cluster_size >= 2 and min_samples >= 1, got {min_cluster_size}, {min_samples}"
        )));
    }
    if m < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: m });
    }

    // core distance: distance to the min_samples-th nearest space, self included
    let core: Vec<f64> = (0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m).map(|j| d.get(i, j)).collect();
            row.sort_by(f64::total_cmp);
            row[min_samples.min(m) - 1]
        })
        .collect();
    let reach = |i: usize, j: usize| d.get(i, j).max(core[i]).max(core[j]);

    // Prim's minimum spanning tree on mutual reachability
    let mut in_tree = vec![false; m];
    let mut key = vec![f64::INFINITY; m];
    let mut from = vec![0usize; m];
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(m - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        for j in 0..m {
            if !in_tree[j] {
                let r = reach(current, j);
                if r < key[j] {
                    key[j] = r;
                    from[j] = current;
                }
            }
        }
        let next = (0..m)
            .filter(|&j| !in_tree[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if key[b] <= key[j] => Some(b),
                _ => Some(j),
            })
            .expect("a vertex outside the tree");
        in_tree[next] = true;
        edges.push((from[next], next, key[next]));
        current = next;
    }
    edges.sort_by(|a, b| a.2.total_cmp(&b.2));

    // single-linkage dendrogram: node m + t merges the two roots joined by edge t
    let total = 2 * m - 1;
    let mut parent_of: Vec<usize> = (0..total).collect();
    let find = |parent_of: &mut Vec<usize>, mut x: usize| {
        while parent_of[x] != x {
            parent_of[x] = parent_of[parent_of[x]];
            x = parent_of[x];
        }
        x
    };
    let mut children = vec![(0usize, 0usize); total];
    let mut height = vec![0.0; total];
    let mut size = vec![1usize; total];
    for (t, &(a, b, w)) in edges.iter().enumerate() {
        let node = m + t;
        let (ra, rb) = (find(&mut parent_of, a), find(&mut parent_of, b));
        children[node] = (ra, rb);
        height[node] = w;
        size[node] = size[ra] + size[rb];
        parent_of[ra] = node;
        parent_of[rb] = node;
    }
    let root = total - 1;

    // condensed tree; cluster ids start at m, the root cluster is m
    let leaves_under = |node: usize| {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < m {
                out.push(x);
            } else {
                stack.push(children[x].0);
                stack.push(children[x].1);
            }
        }
        out
    };
    let mut condensed: Vec<CondensedEdge> = Vec::new();
    let mut cluster_of = vec![0usize; total];
    cluster_of[root] = m;
    let mut next_cluster = m + 1;
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node < m {
            continue;
        }
        let cluster = cluster_of[node];
        let lambda = 1.0 / height[node].max(MIN_DISTANCE);
        let (left, right) = children[node];
        let big = |c: usize| size[c] >= min_cluster_size;
        match (big(left), big(right)) {
            (true, true) => {
                for c in [left, right] {
                    cluster_of[c] = next_cluster;
                    condensed.push(CondensedEdge {
                        parent: cluster,
                        child: next_cluster,
                        lambda,
                        size: size[c],
                    });
                    next_cluster += 1;
                    stack.push(c);
                }
            }
            (l, r) => {
                for (c, keep) in [(left, l), (right, r)] {
                    if keep {
                        cluster_of[c] = cluster;
                        stack.push(c);
                    } else {
                        for leaf in leaves_under(c) {
                            condensed.push(CondensedEdge {
                                parent: cluster,
                                child: leaf,
                                lambda,
                                size: 1,
                            });
                        }
                    }
                }
            }
        }
    }

    // stability and excess-of-mass selection
    let clusters = next_cluster - m;
    let mut birth = vec![0.0; clusters];
    for e in condensed.iter().filter(|e| e.child >= m) {
        birth[e.child - m] = e.lambda;
    }
    let mut stability = vec![0.0; clusters];
    for e in &condensed {
        stability[e.parent - m] += (e.lambda - birth[e.parent - m]) * e.size as f64;
    }
    let child_clusters: Vec<Vec<usize>> = (0..clusters)
        .map(|c| {
            condensed
                .iter()
                .filter(|e| e.parent - m == c && e.child >= m)
                .map(|e| e.child - m)
                .collect()
        })
        .collect();
    let mut selected = vec![true; clusters];
    for c in (0..clusters).rev() {
        let subtree: f64 = child_clusters[c].iter().map(|&k| stability[k]).sum();
        if subtree > stability[c] {
            selected[c] = false;
            stability[c] = subtree;
        } else {
            let mut stack = child_clusters[c].clone();
            while let Some(k) = stack.pop() {
                selected[k] = false;
                stack.extend_from_slice(&child_clusters[k]);
            }
        }
    }

    let mut parent_cluster = vec![usize::MAX; clusters];
    for e in condensed.iter().filter(|e| e.child >= m) {
        parent_cluster[e.child - m] = e.parent - m;
    }
    let root_split = condensed
        .iter()
        .filter(|e| e.parent == m)
        .map(|e| e.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut labels = vec![None; m];
    for e in condensed.iter().filter(|e| e.child < m) {
        let mut c = e.parent - m;
        while !selected[c] && c != 0 {
            c = parent_cluster[c];
        }
        if selected[c] && (c != 0 || e.lambda >= root_split * (1.0 - LAMBDA_RTOL)) {
            labels[e.child] = Some(c);
        }
    }
    Ok(Grouping::from_labels(&labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMethod {
    #[default]
    Hdbscan,
    Dbscan,
}

impl core::str::FromStr for GroupingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hdbscan" => Ok(Self::Hdbscan),
            "dbscan" => Ok(Self::Dbscan),
            other => Err(Error::InvalidParams(format!(
                "unknown grouping method {other:?}; expected hdbscan or dbscan"
            ))),
        }
    }
}

/// Phase-1 clustering parameters. Phase 2 derives its own from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingParams {
    pub method: GroupingMethod,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub hdbscan_min_cluster_size: usize,
    pub hdbscan_min_samples: usize,
}

impl Default for GroupingParams {
    fn default() -> Self {
        Self {
            method: GroupingMethod::Hdbscan,
            dbscan_eps: 0.1,
            dbscan_min_pts: 2,
            hdbscan_min_cluster_size: 2,
            hdbscan_min_samples: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupOrigin {
    Cluster,
    Phase1Outlier,
    Phase2Outlier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub members: Vec<usize>,
    pub origin: SubgroupOrigin,
}

/// Final subgroups with the phase-1 grouping they came from. Indices refer
/// to rows of the inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagewiseGrouping {
    pub phase1: Grouping,
    pub subgroups: Vec<Subgroup>,
}

/// RMS difference of two score rows over the cells both have.
pub fn score_row_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    let (sum, count) = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).powi(2)))
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| (sum / count as f64).sqrt())
}

fn cluster(
    d: &DistanceMatrix,
    method: GroupingMethod,
    eps: f64,
    min: usize,
    min_samples: usize,
) -> Result<Grouping> {
    match method {
        GroupingMethod::Dbscan => dbscan(d, eps, min),
        GroupingMethod::Hdbscan => hdbscan(d, min, min_samples),
    }
}

/// Two-phase grouping of `M` spaces from their `M x M` rank-correlation
/// matrix (row-major) and oriented score rows.
pub fn stagewise_group(
    corr: &[f64],
    rows: &[Vec<Option<f64>>],
    params: &GroupingParams,
) -> Result<StagewiseGrouping> {
    let m = rows.len();
    if corr.len() != m * m {
        return Err(Error::ShapeMismatch(format!(
            "correlation matrix has {} entries for {m} score rows",
            corr.len()
        )));
    }
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    if m == 1 {
        return Ok(StagewiseGrouping {
            phase1: Grouping {
                assignment: vec![Some(0)],
                groups: vec![vec![0]],
            },
            subgroups: vec![Subgroup {
                members: vec![0],
                origin: SubgroupOrigin::Cluster,
            }],
        });
    }

    let d1 = DistanceMatrix::from_fn(m, |i, j| {
        (1.0 - 0.5 * (corr[i * m + j] + corr[j * m + i])).max(0.0)
    })?;
    let mut phase1 = cluster(
        &d1,
        params.method,
        params.dbscan_eps,
        match params.method {
            GroupingMethod::Dbscan => params.dbscan_min_pts,
            GroupingMethod::Hdbscan => params.hdbscan_min_cluster_size,
        },
        params.hdbscan_min_samples,
    )?;
    // a space with no positive correlation to any group mate is not rank correlated with the group
    let labels: Vec<Option<usize>> = (0..m)
        .map(|i| {
            let g = phase1.assignment[i]?;
            let mates = &phase1.groups[g];
            (mates.len() == 1 || mates.iter().any(|&j| j != i && corr[i * m + j] > 0.0))
                .then_some(g)
        })
        .collect();
    phase1 = Grouping::from_labels(&labels);

    let mut subgroups: Vec<Subgroup> = phase1
        .outliers()
        .into_iter()
        .map(|i| Subgroup {
            members: vec![i],
            origin: SubgroupOrigin::Phase1Outlier,
        })
        .collect();
    for group in &phase1.groups {
        if group.len() == 1 {
            subgroups.push(Subgroup {
                members: group.clone(),
                origin: SubgroupOrigin::Cluster,
            });
            continue;
        }
        let k = group.len();
        let pair: Vec<Option<f64>> = (0..k * k)
            .map(|c| score_row_distance(&rows[group[c / k]], &rows[group[c % k]]))
            .collect();
        let largest = pair.iter().flatten().copied().fold(0.0, f64::max);
        let fill = if largest > 0.0 { 2.0 * largest } else { 1.0 };
        let d2 = DistanceMatrix::from_fn(k, |a, b| pair[a * k + b].unwrap_or(fill))?;
        if d2.max() == 0.0 {
            subgroups.push(Subgroup {
                members: group.clone(),
                origin: SubgroupOrigin::Cluster,
            });
            continue;
        }
        let phase2 = cluster(
            &d2,
            params.method,
            0.25 * d2.max(),
            2,
            params.hdbscan_min_samples,
        )?;
        for members in &phase2.groups {
            subgroups.push(Subgroup {
                members: members.iter().map(|&a| group[a]).collect(),
                origin: SubgroupOrigin::Cluster,
            });
        }
        for a in phase2.outliers() {
            subgroups.push(Subgroup {
                members: vec![group[a]],
                origin: SubgroupOrigin::Phase2Outlier,
            });
        }
    }
    subgroups.sort_by_key(|s| s.members[0]);
    Ok(StagewiseGrouping { phase1, subgroups })
}
