//! Run summaries and the one-sided Wilcoxon signed-rank test.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Largest number of non-zero differences for which the null distribution is
/// enumerated exactly; above it a normal approximation is used.
pub const EXACT_LIMIT: usize = 20;

/// Sample mean and sample standard deviation (n - 1 denominator, 0 for a
/// single value). `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((mean, math::sqrt(ss / (n - 1.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs with a non-zero difference.
    pub n: usize,
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    /// `P(W+ >= observed)` under the null.
    pub p_value: f64,
    pub exact: bool,
}

impl WilcoxonResult {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

/// Average ranks of `|d|` (1-based), ties sharing the mean of their ranks.
pub fn signed_ranks(diffs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = alloc::vec![0.0; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// One-sided paired test of `a > b`. Zero differences are dropped.
pub fn wilcoxon_greater(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(CoreError::LengthMismatch {
            what: "paired sample",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(CoreError::NonFinite("paired sample"));
    }
    if diffs.is_empty() {
        return Err(CoreError::AllDifferencesZero);
    }
    let ranks = signed_ranks(&diffs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let n = diffs.len();
    if n <= EXACT_LIMIT {
        Ok(WilcoxonResult {
            n,
            w_plus,
            p_value: exact_upper_tail(&ranks, w_plus),
            exact: true,
        })
    } else {
        Ok(WilcoxonResult {
            n,
            w_plus,
            p_value: normal_upper_tail(&ranks, w_plus),
            exact: false,
        })
    }
}

/// Exact `P(W+ >= w)` over all sign patterns. Ranks are half-integers at
/// worst, so doubled ranks index a subset-sum count table.
fn exact_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r) as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = alloc::vec![0u64; max + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let target = (2.0 * w_plus) as usize;
    let tail: u64 = counts[target..].iter().sum();
    tail as f64 / (1u64 << ranks.len()) as f64
}

fn normal_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let var = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    let z = (w_plus - mean - 0.5) / math::sqrt(var);
    0.5 * math::erfc(z / core::f64::consts::SQRT_2)
}
