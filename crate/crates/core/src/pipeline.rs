//! The adaptive evaluation pipeline and the raw, paired and pooled baselines.
//!
//! [`ace`] runs three steps:
//!
//! 1. dip-test every space on its first principal component and keep the
//!    spaces whose unimodality is rejected under Holm's procedure;
//! 2. correlate the score rows of the kept spaces and group them in two
//!    phases (rank correlation, then score scale);
//! 3. weight the spaces of every subgroup by link analysis on the graph of
//!    significantly correlated pairs, aggregate their scores and select the
//!    subgroup with the highest mean.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::data::{Partition, TrialBundle};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::external::{clustering_accuracy, nmi};
use crate::grouping::{stagewise_group, GroupingMethod, GroupingParams, SubgroupOrigin};
use crate::indices::{compute_score_matrix_with, CellFailure, IndexId, ScoreMatrix};
use crate::link::{aggregate_scores, build_graph, hits_authority, pagerank, Edge, LinkMethod};
use crate::rng::derive_seed;
use crate::stats::{
    holm_bonferroni, kendall_tau_b_missing, paired_t_test_onesided, pca_first_component,
    spearman_missing, DipNull,
};

const DIP_DOMAIN: u64 = 0x6469_7074_6573_7473;
const RESCUE_ALPHA: f64 = 0.05;
const LINK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AceConfig {
    pub index: IndexId,
    pub dip_alpha: f64,
    pub dip_replicates: usize,
    pub edge_alpha: f64,
    pub grouping_method: GroupingMethod,
    pub dbscan_eps: f64,
    pub hdbscan_min_cluster_size: usize,
    pub hdbscan_min_samples: usize,
    pub link_method: LinkMethod,
    pub damping: f64,
    pub seed: u64,
    pub include_outlier_rescue: bool,
    pub pool_without_dip: bool,
}

impl Default for AceConfig {
    fn default() -> Self {
        let g = GroupingParams::default();
        Self {
            index: IndexId::SilhouetteEuclidean,
            dip_alpha: 0.05,
            dip_replicates: 1000,
            edge_alpha: 0.1,
            grouping_method: g.method,
            dbscan_eps: g.dbscan_eps,
            hdbscan_min_cluster_size: g.hdbscan_min_cluster_size,
            hdbscan_min_samples: g.hdbscan_min_samples,
            link_method: LinkMethod::Pagerank,
            damping: 0.85,
            seed: 0,
            include_outlier_rescue: false,
            pool_without_dip: false,
        }
    }
}

impl AceConfig {
    pub fn validate(&self) -> Result<()> {
        for alpha in [self.dip_alpha, self.edge_alpha] {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidAlpha(alpha));
            }
        }
        if self.dip_replicates == 0 {
            return Err(Error::InvalidParams(
                "dip_replicates must be at least 1".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParams(alloc::format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        Ok(())
    }

    fn grouping(&self) -> GroupingParams {
        GroupingParams {
            method: self.grouping_method,
            dbscan_eps: self.dbscan_eps,
            dbscan_min_pts: 2,
            hdbscan_min_cluster_size: self.hdbscan_min_cluster_size,
            hdbscan_min_samples: self.hdbscan_min_samples,
        }
    }
}

/// Dip test outcome of one space. `dip` is absent when the projection has
/// no variance; such a space counts as unimodal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipDiagnostic {
    pub space: usize,
    pub dip: Option<f64>,
    pub p_value: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupReport {
    pub members: Vec<usize>,
    pub origin: SubgroupOrigin,
    pub weights: Vec<f64>,
    pub edges: Vec<Edge>,
    pub scores: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescueReport {
    pub candidate: usize,
    pub candidate_mean: Option<f64>,
    pub p_value: Option<f64>,
    pub replaced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceReport {
    pub index: IndexId,
    pub config: AceConfig,
    pub trial_ids: Vec<String>,
    pub raw: Option<Vec<Option<f64>>>,
    pub paired: Vec<Option<f64>>,
    pub pooled: Vec<Option<f64>>,
    pub ace: Vec<Option<f64>>,
    pub selected: usize,
    pub selected_members: Vec<usize>,
    pub dip: Vec<DipDiagnostic>,
    pub retained: Vec<usize>,
    /// Spearman correlations between retained spaces, in `retained` order;
    /// `None` where undefined (treated as 0 downstream).
    pub correlation: Vec<Vec<Option<f64>>>,
    pub phase1_groups: Vec<Vec<usize>>,
    pub subgroups: Vec<SubgroupReport>,
    pub rescue: Option<RescueReport>,
    pub scores: ScoreMatrix,
    pub missing: Vec<CellFailure>,
}

impl AceReport {
    pub fn regime(&self, regime: Regime) -> Option<&[Option<f64>]> {
        match regime {
            Regime::Raw => self.raw.as_deref(),
            Regime::Paired => Some(&self.paired),
            Regime::Pooled => Some(&self.pooled),
            Regime::Ace => Some(&self.ace),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Raw,
    Paired,
    Pooled,
    Ace,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Raw, Regime::Paired, Regime::Pooled, Regime::Ace];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Raw => "raw",
            Regime::Paired => "paired",
            Regime::Pooled => "pooled",
            Regime::Ace => "ace",
        }
    }
}

/// Oriented index of every partition evaluated on the raw input.
pub fn raw_score(bundle: &TrialBundle, index: IndexId) -> Result<Vec<Option<f64>>> {
    let raw = bundle.raw_input().ok_or(Error::MissingRawInput)?;
    Ok(bundle
        .trials()
        .iter()
        .map(|t| index.evaluate(raw, &t.partition).ok().map(|v| v.oriented))
        .collect())
}

/// Every partition scored in its own space.
pub fn paired_score(bundle: &TrialBundle, index: IndexId) -> Vec<Option<f64>> {
    bundle
        .trials()
        .iter()
        .map(|t| {
            index
                .evaluate(&t.embedding, &t.partition)
                .ok()
                .map(|v| v.oriented)
        })
        .collect()
}

/// Column means over the given rows, skipping missing cells.
pub fn mean_rows(scores: &ScoreMatrix, rows: &[usize]) -> Vec<Option<f64>> {
    (0..scores.size)
        .map(|j| {
            let vals: Vec<f64> = rows.iter().filter_map(|&m| scores.oriented(m, j)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

/// Dip screening of every space; one null distribution serves all spaces.
pub fn dip_screen<E: Executor>(
    bundle: &TrialBundle,
    cfg: &AceConfig,
    exec: &E,
) -> Result<Vec<DipDiagnostic>> {
    let null = DipNull::simulate_with(
        bundle.n(),
        cfg.dip_replicates,
        derive_seed(cfg.seed, DIP_DOMAIN),
        exec,
    )?;
    let trials = bundle.trials();
    let tested = exec.map(trials.len(), |m| {
        match pca_first_component(&trials[m].embedding) {
            Ok(projection) => null.test(&projection).map(Some),
            Err(Error::ZeroVariance) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let tested = tested.into_iter().collect::<Result<Vec<_>>>()?;
    let pvals: Vec<f64> = tested
        .iter()
        .map(|r| r.map_or(1.0, |r| r.p_value))
        .collect();
    let reject = holm_bonferroni(&pvals, cfg.dip_alpha)?;
    Ok(tested
        .iter()
        .enumerate()
        .map(|(space, r)| DipDiagnostic {
            space,
            dip: r.map(|r| r.dip),
            p_value: pvals[space],
            retained: reject[space],
        })
        .collect())
}

fn pooled_from(
    scores: &ScoreMatrix,
    retained: &[usize],
    cfg: &AceConfig,
) -> Result<Vec<Option<f64>>> {
    if cfg.pool_without_dip {
        let all: Vec<usize> = (0..scores.size).collect();
        return Ok(mean_rows(scores, &all));
    }
    if retained.is_empty() {
        return Err(Error::NoRetainedSpaces);
    }
    Ok(mean_rows(scores, retained))
}

/// Baselines without grouping: raw (if available), paired and pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub trial_ids: Vec<String>,
    pub raw: Option<Vec<Option<f64>>>,
    pub paired: Vec<Option<f64>>,
    pub pooled: Vec<Option<f64>>,
    pub retained: Vec<usize>,
}

pub fn baselines<E: Executor>(
    bundle: &TrialBundle,
    cfg: &AceConfig,
    exec: &E,
) -> Result<Baselines> {
    cfg.validate()?;
    let scores = compute_score_matrix_with(bundle, cfg.index, exec);
    let retained: Vec<usize> = if cfg.pool_without_dip {
        (0..bundle.len()).collect()
    } else {
        dip_screen(bundle, cfg, exec)
            .map_err(|e| e.at("dip"))?
            .iter()
            .filter(|d| d.retained)
            .map(|d| d.space)
            .collect()
    };
    Ok(Baselines {
        trial_ids: bundle.ids(),
        raw: bundle
            .raw_input()
            .map(|_| raw_score(bundle, cfg.index))
            .transpose()?,
        paired: scores.diagonal(),
        pooled: pooled_from(&scores, &retained, cfg)?,
        retained,
    })
}

pub fn ace(bundle: &TrialBundle, cfg: &AceConfig) -> Result<AceReport> {
    ace_with(bundle, cfg, &Sequential)
}

/// Runs the pipeline, spreading dip replicates and score cells over `exec`.
/// The report does not depend on the executor.
pub fn ace_with<E: Executor>(bundle: &TrialBundle, cfg: &AceConfig, exec: &E) -> Result<AceReport> {
    cfg.validate()?;
    if bundle.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: bundle.len(),
        });
    }
    let dip = dip_screen(bundle, cfg, exec).map_err(|e| e.at("dip"))?;
    let retained: Vec<usize> = dip.iter().filter(|d| d.retained).map(|d| d.space).collect();
    if retained.is_empty() && !cfg.pool_without_dip {
        return Err(Error::NoRetainedSpaces);
    }
    let scores = compute_score_matrix_with(bundle, cfg.index, exec);
    let pooled = pooled_from(&scores, &retained, cfg)?;
    if retained.is_empty() {
        return direct_pooling(bundle, cfg, dip, scores, pooled);
    }

    let r = retained.len();
    let rows: Vec<Vec<Option<f64>>> = retained.iter().map(|&m| scores.oriented_row(m)).collect();
    let mut correlation = vec![vec![Some(1.0); r]; r];
    for a in 0..r {
        for b in a + 1..r {
            let c = spearman_missing(&rows[a], &rows[b]).ok();
            correlation[a][b] = c;
            correlation[b][a] = c;
        }
    }
    let corr: Vec<f64> = correlation
        .iter()
        .flatten()
        .map(|c| c.unwrap_or(0.0))
        .collect();
    let grouping = stagewise_group(&corr, &rows, &cfg.grouping()).map_err(|e| e.at("grouping"))?;

    let mut subgroups = Vec::with_capacity(grouping.subgroups.len());
    for sg in &grouping.subgroups {
        let members: Vec<usize> = sg.members.iter().map(|&a| retained[a]).collect();
        let (weights, edges) = if members.len() == 1 {
            (vec![1.0], Vec::new())
        } else {
            let k = sg.members.len();
            let block: Vec<f64> = (0..k * k)
                .map(|c| corr[sg.members[c / k] * r + sg.members[c % k]])
                .collect();
            let graph = build_graph(&members, &block, scores.size, cfg.edge_alpha)
                .map_err(|e| e.at("link"))?;
            let weights = match cfg.link_method {
                LinkMethod::Pagerank => {
                    pagerank(&graph, cfg.damping, LINK_TOL).map_err(|e| e.at("link"))?
                }
                LinkMethod::Hits => hits_authority(&graph, LINK_TOL),
            };
            (weights, graph.edges)
        };
        let aggregated = aggregate_scores(&scores, &members, &weights).map_err(|e| e.at("link"))?;
        subgroups.push(SubgroupReport {
            mean: mean_present(&aggregated),
            members,
            origin: sg.origin,
            weights,
            edges,
            scores: aggregated,
        });
    }

    let eligible: Vec<usize> = {
        let clustered: Vec<usize> = (0..subgroups.len())
            .filter(|&s| subgroups[s].origin != SubgroupOrigin::Phase1Outlier)
            .collect();
        if clustered.is_empty() {
            (0..subgroups.len()).collect()
        } else {
            clustered
        }
    };
    let selected = best_subgroup(&subgroups, &eligible);
    let mut report = AceReport {
        index: cfg.index,
        config: cfg.clone(),
        trial_ids: bundle.ids(),
        raw: bundle
            .raw_input()
            .map(|_| raw_score(bundle, cfg.index))
            .transpose()?,
        paired: scores.diagonal(),
        pooled,
        ace: subgroups[selected].scores.clone(),
        selected,
        selected_members: subgroups[selected].members.clone(),
        dip,
        correlation,
        phase1_groups: grouping
            .phase1
            .groups
            .iter()
            .map(|g| g.iter().map(|&a| retained[a]).collect())
            .collect(),
        retained,
        subgroups,
        rescue: None,
        missing: scores.failures.clone(),
        scores,
    };
    if cfg.include_outlier_rescue {
        rescue(&mut report);
    }
    Ok(report)
}

/// Nothing passed the dip screen but direct pooling was requested: every
/// space forms one subgroup with uniform weights, so ACE equals pooled.
fn direct_pooling(
    bundle: &TrialBundle,
    cfg: &AceConfig,
    dip: Vec<DipDiagnostic>,
    scores: ScoreMatrix,
    pooled: Vec<Option<f64>>,
) -> Result<AceReport> {
    let m = bundle.len();
    let members: Vec<usize> = (0..m).collect();
    let sg = SubgroupReport {
        mean: mean_present(&pooled),
        members: members.clone(),
        origin: SubgroupOrigin::Cluster,
        weights: vec![1.0 / m as f64; m],
        edges: Vec::new(),
        scores: pooled.clone(),
    };
    Ok(AceReport {
        index: cfg.index,
        config: cfg.clone(),
        trial_ids: bundle.ids(),
        raw: bundle
            .raw_input()
            .map(|_| raw_score(bundle, cfg.index))
            .transpose()?,
        paired: scores.diagonal(),
        ace: pooled.clone(),
        pooled,
        selected: 0,
        selected_members: members.clone(),
        dip,
        retained: Vec::new(),
        correlation: Vec::new(),
        phase1_groups: vec![members],
        subgroups: vec![sg],
        rescue: None,
        missing: scores.failures.clone(),
        scores,
    })
}

fn mean_present(v: &[Option<f64>]) -> Option<f64> {
    let vals: Vec<f64> = v.iter().flatten().copied().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Highest mean wins; ties go to the larger subgroup, then the lowest member.
fn best_subgroup(subgroups: &[SubgroupReport], candidates: &[usize]) -> usize {
    let key = |s: usize| subgroups[s].mean.unwrap_or(f64::NEG_INFINITY);
    let mut best = candidates[0];
    for &s in &candidates[1..] {
        let (a, b) = (&subgroups[s], &subgroups[best]);
        let better = key(s) > key(best)
            || (key(s) == key(best)
                && (a.members.len() > b.members.len()
                    || (a.members.len() == b.members.len() && a.members[0] < b.members[0])));
        if better {
            best = s;
        }
    }
    best
}

/// Replaces the selection with the best phase-1 outlier when its mean is
/// higher and a one-sided paired t-test over shared columns favors it.
fn rescue(report: &mut AceReport) {
    let outliers: Vec<usize> = (0..report.subgroups.len())
        .filter(|&s| {
            report.subgroups[s].origin == SubgroupOrigin::Phase1Outlier && s != report.selected
        })
        .collect();
    if outliers.is_empty() {
        return;
    }
    let candidate = best_subgroup(&report.subgroups, &outliers);
    let (cand, chosen) = (
        &report.subgroups[candidate],
        &report.subgroups[report.selected],
    );
    let mut outcome = RescueReport {
        candidate,
        candidate_mean: cand.mean,
        p_value: None,
        replaced: false,
    };
    let higher = matches!((cand.mean, chosen.mean), (Some(a), Some(b)) if a > b);
    if higher {
        let (a, b): (Vec<f64>, Vec<f64>) = cand
            .scores
            .iter()
            .zip(&chosen.scores)
            .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
            .unzip();
        outcome.p_value = paired_t_test_onesided(&a, &b).ok();
        outcome.replaced = outcome.p_value.is_some_and(|p| p < RESCUE_ALPHA);
    }
    if outcome.replaced {
        report.selected = candidate;
        report.selected_members = report.subgroups[candidate].members.clone();
        report.ace = report.subgroups[candidate].scores.clone();
    }
    report.rescue = Some(outcome);
}

/// Runs [`ace_with`] and then the outlier rescue step regardless of
/// `include_outlier_rescue`.
pub fn ace_with_outlier_rescue<E: Executor>(
    bundle: &TrialBundle,
    cfg: &AceConfig,
    exec: &E,
) -> Result<AceReport> {
    let cfg = AceConfig {
        include_outlier_rescue: true,
        ..cfg.clone()
    };
    ace_with(bundle, &cfg, exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum External {
    Nmi,
    Acc,
}

impl External {
    pub fn name(self) -> &'static str {
        match self {
            External::Nmi => "nmi",
            External::Acc => "acc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub regime: Regime,
    pub external: External,
    pub r_s: Option<f64>,
    pub tau_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTable {
    pub nmi: Vec<f64>,
    pub acc: Vec<f64>,
    pub rows: Vec<RegimeRow>,
}

/// Rank agreement of every available regime with the external measures.
pub fn regime_table(report: &AceReport, nmi: &[f64], acc: &[f64]) -> Result<RegimeTable> {
    let m = report.paired.len();
    for ext in [nmi, acc] {
        if ext.len() != m {
            return Err(Error::LengthMismatch {
                left: ext.len(),
                right: m,
            });
        }
    }
    let mut rows = Vec::new();
    for regime in Regime::ALL {
        let Some(scores) = report.regime(regime) else {
            continue;
        };
        for (external, values) in [(External::Nmi, nmi), (External::Acc, acc)] {
            let values: Vec<Option<f64>> = values.iter().map(|&v| Some(v)).collect();
            rows.push(RegimeRow {
                regime,
                external,
                r_s: spearman_missing(scores, &values).ok(),
                tau_b: kendall_tau_b_missing(scores, &values).ok(),
            });
        }
    }
    Ok(RegimeTable {
        nmi: nmi.to_vec(),
        acc: acc.to_vec(),
        rows,
    })
}

/// NMI and accuracy of every trial partition against `truth`.
pub fn external_scores(bundle: &TrialBundle, truth: &Partition) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nmis = Vec::with_capacity(bundle.len());
    let mut accs = Vec::with_capacity(bundle.len());
    for t in bundle.trials() {
        nmis.push(nmi(&t.partition, truth)?);
        accs.push(clustering_accuracy(truth, &t.partition)?);
    }
    Ok((nmis, accs))
}

/// Regime table against `truth`, or the bundle's own truth when `None`.
pub fn evaluate_regimes(
    report: &AceReport,
    truth: Option<&Partition>,
    bundle: &TrialBundle,
) -> Result<RegimeTable> {
    let truth = truth.or(bundle.truth()).ok_or(Error::MissingTruth)?;
    let (nmis, accs) = external_scores(bundle, truth)?;
    regime_table(report, &nmis, &accs)
}
