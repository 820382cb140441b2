use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::rng::{derive_seed, substream};

const NULL_DOMAIN: u64 = 0x6469_705f_6e75_6c6c;

/// Dip statistic and its Monte-Carlo p-value under the uniform null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipResult {
    pub dip: f64,
    pub p_value: f64,
    pub replicates: usize,
}

/// Hartigan's dip of a sorted sample: the distance from the empirical CDF to
/// the closest unimodal CDF, computed by the taut-string GCM/LCM iteration.
///
/// The result lies in `[1/(2n), 1/4]`.
pub fn dip_statistic(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue("dip sample".into()));
    }
    if sample.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Unsorted);
    }
    Ok(taut_string(sample) / (2 * n) as f64)
}

/// Returns `2n * dip`. Arrays are 1-based to follow the published algorithm.
fn taut_string(sample: &[f64]) -> f64 {
    let n = sample.len();
    let mut x = Vec::with_capacity(n + 1);
    x.push(0.0);
    x.extend_from_slice(sample);

    let mut dip = 1.0;
    if x[n] == x[1] {
        return dip;
    }

    // index chains for the greatest convex minorant and least concave majorant
    let mut mn = vec![0usize; n + 1];
    mn[1] = 1;
    for j in 2..=n {
        mn[j] = j - 1;
        loop {
            let mnj = mn[j];
            let mnmnj = mn[mnj];
            if mnj == 1
                || (x[j] - x[mnj]) * ((mnj - mnmnj) as f64)
                    < (x[mnj] - x[mnmnj]) * ((j - mnj) as f64)
            {
                break;
            }
            mn[j] = mnmnj;
        }
    }
    let mut mj = vec![0usize; n + 1];
    mj[n] = n;
    for k in (1..n).rev() {
        mj[k] = k + 1;
        loop {
            let mjk = mj[k];
            let mjmjk = mj[mjk];
            if mjk == n
                || (x[k] - x[mjk]) * (mjk as f64 - mjmjk as f64)
                    < (x[mjk] - x[mjmjk]) * (k as f64 - (mjk as f64))
            {
                break;
            }
            mj[k] = mjmjk;
        }
    }

    let mut gcm = vec![0usize; n + 2];
    let mut lcm = vec![0usize; n + 2];
    let (mut low, mut high) = (1usize, n);
    loop {
        gcm[1] = high;
        let mut l_gcm = 1;
        while gcm[l_gcm] > low {
            gcm[l_gcm + 1] = mn[gcm[l_gcm]];
            l_gcm += 1;
        }
        lcm[1] = low;
        let mut l_lcm = 1;
        while lcm[l_lcm] < high {
            lcm[l_lcm + 1] = mj[lcm[l_lcm]];
            l_lcm += 1;
        }

        let mut ig = l_gcm;
        let mut ih = l_lcm;
        let mut ix = l_gcm - 1;
        let mut iv = 2;
        let mut d = 0.0;
        if l_gcm != 2 || l_lcm != 2 {
            loop {
                let (gcmix, lcmiv) = (gcm[ix], lcm[iv]);
                if gcmix > lcmiv {
                    let gcmi1 = gcm[ix + 1];
                    let dx = (lcmiv as f64 - gcmi1 as f64 + 1.0)
                        - (x[lcmiv] - x[gcmi1]) * (gcmix - gcmi1) as f64 / (x[gcmix] - x[gcmi1]);
                    iv += 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv - 1;
                    }
                } else {
                    let lcmiv1 = lcm[iv - 1];
                    let dx = (x[gcmix] - x[lcmiv1]) * (lcmiv - lcmiv1) as f64
                        / (x[lcmiv] - x[lcmiv1])
                        - (gcmix as f64 - lcmiv1 as f64 - 1.0);
                    ix -= 1;
                    if dx >= d {
                        d = dx;
                        ig = ix + 1;
                        ih = iv;
                    }
                }
                ix = ix.max(1);
                iv = iv.min(l_lcm);
                if gcm[ix] == lcm[iv] {
                    break;
                }
            }
        } else {
            d = 1.0;
        }
        if d < dip {
            break;
        }

        let mut dip_l: f64 = 0.0;
        for j in ig..l_gcm {
            let (jb, je) = (gcm[j + 1], gcm[j]);
            let mut max_t: f64 = 1.0;
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    max_t = max_t.max((jj - jb + 1) as f64 - (x[jj] - x[jb]) * c);
                }
            }
            dip_l = dip_l.max(max_t);
        }
        let mut dip_u: f64 = 0.0;
        for j in ih..l_lcm {
            let (jb, je) = (lcm[j], lcm[j + 1]);
            let mut max_t: f64 = 1.0;
            if je - jb > 1 && x[je] != x[jb] {
                let c = (je - jb) as f64 / (x[je] - x[jb]);
                for jj in jb..=je {
                    max_t = max_t.max((x[jj] - x[jb]) * c - (jj as f64 - jb as f64 - 1.0));
                }
            }
            dip_u = dip_u.max(max_t);
        }
        dip = dip.max(dip_u.max(dip_l));

        if low == gcm[ig] && high == lcm[ih] {
            break;
        }
        low = gcm[ig];
        high = lcm[ih];
    }
    dip
}

/// Sorted dips of `B` uniform samples of one size, reusable across every
/// sample of that size.
#[derive(Debug, Clone, PartialEq)]
pub struct DipNull {
    n: usize,
    dips: Vec<f64>,
}

impl DipNull {
    pub fn simulate(n: usize, replicates: usize, seed: u64) -> Result<Self> {
        Self::simulate_with(n, replicates, seed, &Sequential)
    }

    /// Replicate `b` draws from its own substream, so the null does not
    /// depend on how replicates are scheduled.
    pub fn simulate_with<E: Executor>(
        n: usize,
        replicates: usize,
        seed: u64,
        exec: &E,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        if replicates == 0 {
            return Err(Error::InvalidParams(
                "dip replicates must be at least 1".into(),
            ));
        }
        let base = derive_seed(seed, NULL_DOMAIN);
        let mut dips = exec.map(replicates, |b| {
            let mut rng = substream(base, b as u64);
            let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            u.sort_by(f64::total_cmp);
            taut_string(&u) / (2 * n) as f64
        });
        dips.sort_by(f64::total_cmp);
        Ok(Self { n, dips })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn replicates(&self) -> usize {
        self.dips.len()
    }

    pub fn dips(&self) -> &[f64] {
        &self.dips
    }

    /// Add-one estimate `(1 + #{D_b >= dip}) / (B + 1)`.
    pub fn p_value(&self, dip: f64) -> f64 {
        let below = self.dips.partition_point(|&d| d < dip);
        let at_least = self.dips.len() - below;
        (1 + at_least) as f64 / (self.dips.len() + 1) as f64
    }

    /// Dip and p-value of an unsorted sample of size `n`.
    pub fn test(&self, sample: &[f64]) -> Result<DipResult> {
        if sample.len() != self.n {
            return Err(Error::LengthMismatch {
                left: sample.len(),
                right: self.n,
            });
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let dip = dip_statistic(&sorted)?;
        Ok(DipResult {
            dip,
            p_value: self.p_value(dip),
            replicates: self.dips.len(),
        })
    }
}

/// Dip test of an unsorted sample with `replicates` uniform null draws.
pub fn dip_pvalue(sample: &[f64], replicates: usize, seed: u64) -> Result<DipResult> {
    DipNull::simulate(sample.len(), replicates, seed)?.test(sample)
}
