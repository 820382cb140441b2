use alloc::vec;
use alloc::vec::Vec;

use super::tdist::student_t_upper_tail;
use crate::error::{Error, Result};

/// One-sided p-value for a positive Spearman correlation, using the t
/// approximation with `n - 2` degrees of freedom. Perfect correlations are
/// decided directly: `rs = 1` gives 0, `rs = -1` gives 1.
pub fn spearman_onesided_pvalue(rs: f64, n: usize) -> Result<f64> {
    if !rs.is_finite() {
        return Err(Error::NonFiniteValue("correlation".into()));
    }
    if rs >= 1.0 {
        return Ok(0.0);
    }
    if rs <= -1.0 {
        return Ok(1.0);
    }
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let df = (n - 2) as f64;
    let t = rs * libm::sqrt(df / (1.0 - rs * rs));
    Ok(student_t_upper_tail(t, df))
}

/// Holm's step-down procedure; returns a reject flag per hypothesis.
pub fn holm_bonferroni(pvals: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParams(alloc::format!(
            "p-value {p} outside [0, 1]"
        )));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut reject = vec![false; m];
    for (rank, &i) in order.iter().enumerate() {
        if pvals[i] > alpha / (m - rank) as f64 {
            break;
        }
        reject[i] = true;
    }
    Ok(reject)
}

/// Upper-tail p-value of the paired t-test for `mean(a - b) > 0`.
///
/// Differences that are constant up to rounding have no t statistic: a
/// positive constant gives 0, a negative one gives 1, and all-zero
/// differences are [`Error::ZeroVariance`].
pub fn paired_t_test_onesided(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diff.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFiniteValue("paired differences".into()));
    }
    let mean = diff.iter().sum::<f64>() / n as f64;
    let var = diff.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    let scale = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if libm::sqrt(var) <= 1e-12 * scale || var == 0.0 {
        return if mean > 0.0 {
            Ok(0.0)
        } else if mean < 0.0 {
            Ok(1.0)
        } else {
            Err(Error::ZeroVariance)
        };
    }
    let t = mean / libm::sqrt(var / n as f64);
    Ok(student_t_upper_tail(t, (n - 1) as f64))
}
