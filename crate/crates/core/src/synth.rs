//! Seeded synthetic bundles and small experiments on distance concentration
//! and on paired scores across spaces with different scales.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingMatrix, Partition, Trial, TrialBundle};
use crate::error::{Error, Result};
use crate::indices::{silhouette, SilhouetteMetric};
use crate::linalg::euclidean;
use crate::rng::{derive_seed, substream, StreamRng};

const TRUTH: u64 = 1;
const TRIAL: u64 = 2;
const NOISE: u64 = 3;
const RAW: u64 = 4;
const DEFAULTS: u64 = 5;
const DEMO: u64 = 6;

/// Recipe for a synthetic bundle. Trial `i` embeds a `k`-component Gaussian
/// mixture (unit variance, centers `separations[i]` apart) and carries the
/// true labels with a `label_noise[i]` fraction reassigned. Corrupted trials
/// keep their labels but embed plain Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub separations: Vec<f64>,
    pub corrupt: Vec<usize>,
    pub label_noise: Vec<f64>,
    /// Dimension of an optional raw input holding the true mixture.
    pub raw_dim: Option<usize>,
    pub seed: u64,
}

impl SynthSpec {
    /// Separations drawn from `[6, 12)` and label noise graded linearly from 0
    /// to 0.4 over the trials, no corruption.
    pub fn with_defaults(m: usize, n: usize, d: usize, k: usize, seed: u64) -> Self {
        let mut rng = substream(derive_seed(seed, DEFAULTS), 0);
        Self {
            m,
            n,
            d,
            k,
            separations: (0..m).map(|_| 6.0 + 6.0 * rng.random::<f64>()).collect(),
            corrupt: Vec::new(),
            label_noise: (0..m)
                .map(|i| {
                    if m > 1 {
                        0.4 * i as f64 / (m - 1) as f64
                    } else {
                        0.0
                    }
                })
                .collect(),
            raw_dim: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidSpec(msg));
        if self.m == 0 || self.n == 0 || self.d == 0 {
            return bad(format!(
                "m, n and d must be positive (got {}, {}, {})",
                self.m, self.n, self.d
            ));
        }
        if self.k < 2 || self.k > self.n {
            return bad(format!("k must lie in [2, n], got {}", self.k));
        }
        if self.d < self.k {
            return bad(format!(
                "d = {} cannot hold {} equidistant centers",
                self.d, self.k
            ));
        }
        if self.separations.len() != self.m || self.label_noise.len() != self.m {
            return bad(format!(
                "separations and label_noise need {} entries",
                self.m
            ));
        }
        if let Some(s) = self
            .separations
            .iter()
            .find(|s| !(**s > 0.0 && s.is_finite()))
        {
            return bad(format!("separation {s} is not positive"));
        }
        if let Some(f) = self.label_noise.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return bad(format!("label noise {f} outside [0, 1)"));
        }
        if let Some(c) = self.corrupt.iter().find(|&&c| c >= self.m) {
            return bad(format!(
                "corrupt index {c} out of range for {} trials",
                self.m
            ));
        }
        if self.raw_dim.is_some_and(|p| p < self.k) {
            return bad(format!("raw_dim must be at least k = {}", self.k));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Balanced labels in random order.
fn balanced_labels(n: usize, k: usize, rng: &mut StreamRng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

/// Mixture draw: component `c` is centered at `sep / sqrt(2) * e_c`, so every
/// pair of centers is `sep` apart.
fn mixture(labels: &[usize], d: usize, sep: f64, rng: &mut StreamRng) -> EmbeddingMatrix {
    let scale = sep / core::f64::consts::SQRT_2;
    let mut values = Vec::with_capacity(labels.len() * d);
    for &c in labels {
        for j in 0..d {
            values.push(if j == c { scale } else { 0.0 } + gaussian(rng));
        }
    }
    EmbeddingMatrix::new(labels.len(), d, values).expect("finite mixture")
}

/// Reassigns exactly `round(fraction * n)` labels, each to a different class.
fn flip_labels(truth: &[usize], k: usize, fraction: f64, rng: &mut StreamRng) -> Vec<usize> {
    let n = truth.len();
    let count = libm::round(fraction * n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = truth.to_vec();
    for &i in &order[..count.min(n)] {
        let shift = rng.random_range(1..k);
        labels[i] = (truth[i] + shift) % k;
    }
    labels
}

pub fn generate_bundle(spec: &SynthSpec) -> Result<TrialBundle> {
    spec.validate()?;
    let truth_labels = balanced_labels(
        spec.n,
        spec.k,
        &mut substream(derive_seed(spec.seed, TRUTH), 0),
    );
    let mut trials = Vec::with_capacity(spec.m);
    for t in 0..spec.m {
        let mut noise_rng = substream(derive_seed(spec.seed, NOISE), t as u64);
        let labels = flip_labels(&truth_labels, spec.k, spec.label_noise[t], &mut noise_rng);
        let mut rng = substream(derive_seed(spec.seed, TRIAL), t as u64);
        let embedding = if spec.corrupt.contains(&t) {
            let values = (0..spec.n * spec.d).map(|_| gaussian(&mut rng)).collect();
            EmbeddingMatrix::new(spec.n, spec.d, values)?
        } else {
            mixture(&truth_labels, spec.d, spec.separations[t], &mut rng)
        };
        trials.push(Trial::new(
            format!("trial{t:02}"),
            embedding,
            Partition::canonicalize(&labels)?,
        )?);
    }
    let raw = spec.raw_dim.map(|p| {
        mixture(
            &truth_labels,
            p,
            4.0,
            &mut substream(derive_seed(spec.seed, RAW), 0),
        )
    });
    TrialBundle::new(trials, raw, Some(Partition::canonicalize(&truth_labels)?))
}

/// Medians per dimension of the nearest/farthest distance ratio from a
/// random query and of |silhouette| for a random balanced 2-partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationStats {
    pub dims: Vec<usize>,
    pub ratio_median: Vec<f64>,
    pub index_abs_median: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}

pub fn concentration_demo(
    n: usize,
    dims: &[usize],
    reps: usize,
    seed: u64,
) -> Result<ConcentrationStats> {
    if n < 4 || reps == 0 || dims.is_empty() {
        return Err(Error::InvalidParams(format!(
            "need n >= 4, reps >= 1 and at least one dimension (got n = {n}, reps = {reps})"
        )));
    }
    if dims.windows(2).any(|w| w[1] <= w[0]) || dims[0] == 0 {
        return Err(Error::InvalidParams(
            "dims must be positive and strictly ascending".into(),
        ));
    }
    let base = derive_seed(seed, DEMO);
    let mut ratio_median = Vec::with_capacity(dims.len());
    let mut index_abs_median = Vec::with_capacity(dims.len());
    for &p in dims {
        let mut ratios = Vec::with_capacity(reps);
        let mut indices = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = substream(derive_seed(base, p as u64), r as u64);
            let values: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
            let query: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let z = EmbeddingMatrix::new(n, p, values)?;
            let (lo, hi) = z
                .iter_rows()
                .map(|row| euclidean(row, &query))
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                    (lo.min(d), hi.max(d))
                });
            ratios.push(hi / lo);
            let rho = Partition::canonicalize(&balanced_labels(n, 2, &mut rng))?;
            indices.push(
                silhouette(&z, &rho, SilhouetteMetric::Euclidean)?
                    .oriented
                    .abs(),
            );
        }
        ratio_median.push(median(ratios));
        index_abs_median.push(median(indices));
    }
    Ok(ConcentrationStats {
        dims: dims.to_vec(),
        ratio_median,
        index_abs_median,
    })
}

const PAIR_PER_CLUSTER: usize = 30;
const PAIR_DISTANCE: f64 = 10.0;
const PAIR_SHRINK: f64 = 0.5;
const PAIR_ERRORS_PER_CLUSTER: usize = 2;

/// Two trials over the same three 2-D blobs. Trial A keeps the blobs far
/// apart but gives the two points of each blob nearest the next blob the
/// label of the remaining blob; trial B pulls the blob centers halfway
/// together and labels every point correctly. A scores higher in its own
/// space although B is the better partition in either space.
pub fn make_scale_mismatch_pair(seed: u64) -> TrialBundle {
    let mut rng = substream(derive_seed(seed, TRIAL), 0);
    let centers: [[f64; 2]; 3] = {
        let r = PAIR_DISTANCE / libm::sqrt(3.0);
        core::array::from_fn(|c| {
            let a = 2.0 * core::f64::consts::PI * c as f64 / 3.0;
            [r * libm::cos(a), r * libm::sin(a)]
        })
    };
    let truth: Vec<usize> = (0..3 * PAIR_PER_CLUSTER)
        .map(|i| i / PAIR_PER_CLUSTER)
        .collect();
    let residual: Vec<[f64; 2]> = truth
        .iter()
        .map(|_| [gaussian(&mut rng), gaussian(&mut rng)])
        .collect();

    let place = |scale: f64| {
        let values = truth
            .iter()
            .zip(&residual)
            .flat_map(|(&c, e)| [scale * centers[c][0] + e[0], scale * centers[c][1] + e[1]])
            .collect();
        EmbeddingMatrix::new(truth.len(), 2, values).expect("finite blobs")
    };
    let (za, zb) = (place(1.0), place(PAIR_SHRINK));

    let mut noisy = truth.clone();
    for c in 0..3 {
        let (target, wrong) = ((c + 1) % 3, (c + 2) % 3);
        let mut members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == c).collect();
        members.sort_by(|&a, &b| {
            euclidean(za.row(a), &centers[target])
                .total_cmp(&euclidean(za.row(b), &centers[target]))
        });
        for &i in &members[..PAIR_ERRORS_PER_CLUSTER] {
            noisy[i] = wrong;
        }
    }
    let part = |labels: &[usize]| Partition::canonicalize(labels).expect("labels");
    TrialBundle::new(
        vec![
            Trial::new("A", za, part(&noisy)).expect("trial A"),
            Trial::new("B", zb, part(&truth)).expect("trial B"),
        ],
        None,
        Some(part(&truth)),
    )
    .expect("pair bundle")
}
