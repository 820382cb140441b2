//! Statistical machinery: the dip test of unimodality, PCA projection, rank
//! correlations and the tests used to prune correlation graphs and rescue
//! outlier spaces.

mod dip;
mod hypothesis;
mod pca;
mod rank;
mod tdist;

pub use dip::{dip_pvalue, dip_statistic, DipNull, DipResult};
pub use hypothesis::{holm_bonferroni, paired_t_test_onesided, spearman_onesided_pvalue};
pub use pca::pca_first_component;
pub use rank::{
    complete_pairs, kendall_tau_b, kendall_tau_b_missing, rank_correlation, spearman,
    spearman_missing, RankCorrelation,
};
pub use tdist::{regularized_incomplete_beta, student_t_upper_tail};
