//! Group fairness (statistical parity, equal opportunity, equalized odds)
//! and performance (accuracy, F1) of thresholded predictions.
//!
//! Fairness values are ratios folded into `[0, 1]` with `min/max`, so 1 is
//! ideal regardless of which group is favoured. A metric whose required
//! groups are empty is `None`.

use alloc::vec::Vec;
use core::ops::Add;

use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{CoreError, Result};
use crate::nn;
use crate::params::ModelParams;

/// Probabilities at or above this value are predicted positive.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn actual_positives(&self) -> u64 {
        self.true_pos + self.false_neg
    }

    pub fn actual_negatives(&self) -> u64 {
        self.false_pos + self.true_neg
    }

    pub fn positive_rate(&self) -> Option<f64> {
        ratio(self.true_pos + self.false_pos, self.total())
    }

    pub fn true_positive_rate(&self) -> Option<f64> {
        ratio(self.true_pos, self.actual_positives())
    }

    pub fn false_positive_rate(&self) -> Option<f64> {
        ratio(self.false_pos, self.actual_negatives())
    }

    fn record(&mut self, y: bool, y_hat: bool) {
        match (y, y_hat) {
            (true, true) => self.true_pos += 1,
            (false, true) => self.false_pos += 1,
            (false, false) => self.true_neg += 1,
            (true, false) => self.false_neg += 1,
        }
    }
}

impl Add for Confusion {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            true_pos: self.true_pos + rhs.true_pos,
            false_pos: self.false_pos + rhs.false_pos,
            true_neg: self.true_neg + rhs.true_neg,
            false_neg: self.false_neg + rhs.false_neg,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Confusion counts split by sensitive group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub unprivileged: Confusion,
    pub privileged: Confusion,
}

impl GroupConfusion {
    pub fn group(&self, privileged: bool) -> &Confusion {
        if privileged {
            &self.privileged
        } else {
            &self.unprivileged
        }
    }

    pub fn overall(&self) -> Confusion {
        self.unprivileged + self.privileged
    }

    /// The same counts with the group labels swapped.
    pub fn swapped(&self) -> Self {
        Self {
            unprivileged: self.privileged,
            privileged: self.unprivileged,
        }
    }
}

impl Add for GroupConfusion {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            unprivileged: self.unprivileged + rhs.unprivileged,
            privileged: self.privileged + rhs.privileged,
        }
    }
}

pub fn confusion_by_group(y: &[bool], y_hat: &[bool], s: &[bool]) -> Result<GroupConfusion> {
    if y_hat.len() != y.len() {
        return Err(CoreError::LengthMismatch {
            what: "predictions",
            expected: y.len(),
            actual: y_hat.len(),
        });
    }
    if s.len() != y.len() {
        return Err(CoreError::LengthMismatch {
            what: "sensitive attribute",
            expected: y.len(),
            actual: s.len(),
        });
    }
    let mut conf = GroupConfusion::default();
    for ((&yi, &pi), &si) in y.iter().zip(y_hat).zip(s) {
        if si {
            conf.privileged.record(yi, pi);
        } else {
            conf.unprivileged.record(yi, pi);
        }
    }
    Ok(conf)
}

/// `min(a, b) / max(a, b)`, with `0/0 = 1` and `x/0 = 0`.
pub fn bounded_ratio(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi == 0.0 {
        1.0
    } else {
        lo / hi
    }
}

pub fn statistical_parity(conf: &GroupConfusion) -> Option<f64> {
    Some(bounded_ratio(
        conf.unprivileged.positive_rate()?,
        conf.privileged.positive_rate()?,
    ))
}

pub fn equal_opportunity(conf: &GroupConfusion) -> Option<f64> {
    Some(bounded_ratio(
        conf.unprivileged.true_positive_rate()?,
        conf.privileged.true_positive_rate()?,
    ))
}

pub fn equalized_odds(conf: &GroupConfusion) -> Option<f64> {
    let tpr = equal_opportunity(conf)?;
    let fpr = bounded_ratio(
        conf.unprivileged.false_positive_rate()?,
        conf.privileged.false_positive_rate()?,
    );
    Some((tpr + fpr) / 2.0)
}

/// Accuracy over all rows and F1 of the positive class (0 when precision and
/// recall are both 0).
pub fn performance_metrics(conf: &GroupConfusion) -> Result<(f64, f64)> {
    let all = conf.overall();
    let n = all.total();
    if n == 0 {
        return Err(CoreError::EmptyDataset);
    }
    let accuracy = (all.true_pos + all.true_neg) as f64 / n as f64;
    // F1 = 2TP / (2TP + FP + FN); the denominator is zero only when there are
    // no positive labels and no positive predictions.
    let den = 2 * all.true_pos + all.false_pos + all.false_neg;
    let f1 = if all.true_pos == 0 {
        0.0
    } else {
        (2 * all.true_pos) as f64 / den as f64
    };
    Ok((accuracy, f1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessMetric {
    Sp,
    Eo,
    Eqo,
}

impl FairnessMetric {
    pub const ALL: [FairnessMetric; 3] = [Self::Sp, Self::Eo, Self::Eqo];

    pub fn evaluate(self, conf: &GroupConfusion) -> Option<f64> {
        match self {
            Self::Sp => statistical_parity(conf),
            Self::Eo => equal_opportunity(conf),
            Self::Eqo => equalized_odds(conf),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sp => "sp",
            Self::Eo => "eo",
            Self::Eqo => "eqo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Some(Self::Sp),
            "eo" => Some(Self::Eo),
            "eqo" => Some(Self::Eqo),
            _ => None,
        }
    }
}

impl core::fmt::Display for FairnessMetric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub f1: f64,
    pub sp: Option<f64>,
    pub eo: Option<f64>,
    pub eqo: Option<f64>,
}

impl FairnessReport {
    pub fn from_confusion(conf: &GroupConfusion) -> Result<Self> {
        let (accuracy, f1) = performance_metrics(conf)?;
        Ok(Self {
            accuracy,
            f1,
            sp: statistical_parity(conf),
            eo: equal_opportunity(conf),
            eqo: equalized_odds(conf),
        })
    }

    pub fn fairness(&self, metric: FairnessMetric) -> Option<f64> {
        match metric {
            FairnessMetric::Sp => self.sp,
            FairnessMetric::Eo => self.eo,
            FairnessMetric::Eqo => self.eqo,
        }
    }
}

pub fn threshold(probabilities: &[f64]) -> Vec<bool> {
    probabilities
        .iter()
        .map(|&p| p >= DECISION_THRESHOLD)
        .collect()
}

pub fn model_confusion(params: &ModelParams, ds: &TabularDataset) -> Result<GroupConfusion> {
    let y_hat = threshold(&nn::predict_proba(params, ds.features())?);
    confusion_by_group(ds.labels(), &y_hat, ds.sensitive())
}

/// Thresholds the model's probabilities on `ds` and reports every metric.
pub fn evaluate_model(params: &ModelParams, ds: &TabularDataset) -> Result<FairnessReport> {
    FairnessReport::from_confusion(&model_confusion(params, ds)?)
}

/// A single fairness metric of the model on `ds`.
pub fn model_fairness(
    params: &ModelParams,
    ds: &TabularDataset,
    metric: FairnessMetric,
) -> Result<Option<f64>> {
    Ok(metric.evaluate(&model_confusion(params, ds)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn conf(u: [u64; 4], p: [u64; 4]) -> GroupConfusion {
        let c = |v: [u64; 4]| Confusion {
            true_pos: v[0],
            false_pos: v[1],
            true_neg: v[2],
            false_neg: v[3],
        };
        GroupConfusion {
            unprivileged: c(u),
            privileged: c(p),
        }
    }

    #[test]
    fn direct_counts() {
        let c = confusion_by_group(&[true, false], &[true, false], &[false, true]).unwrap();
        assert_eq!(c, conf([1, 0, 0, 0], [0, 0, 1, 0]));
        let c =
            confusion_by_group(&[true, false, true], &[false; 3], &[false, true, true]).unwrap();
        assert_eq!(c.unprivileged.true_pos + c.unprivileged.false_pos, 0);
        assert_eq!(c.privileged.true_pos + c.privileged.false_pos, 0);
        assert!(confusion_by_group(&[true], &[true, true], &[true]).is_err());
    }

    #[test]
    fn bounded_ratio_cases() {
        assert_eq!(bounded_ratio(0.3, 0.6), 0.5);
        assert_eq!(bounded_ratio(0.6, 0.3), 0.5);
        assert_eq!(bounded_ratio(0.0, 0.0), 1.0);
        assert_eq!(bounded_ratio(0.0, 0.4), 0.0);
        assert_eq!(bounded_ratio(0.4, 0.0), 0.0);
    }

    #[test]
    fn statistical_parity_of_rates() {
        // rates 3/10 vs 6/10
        let c = conf([2, 1, 5, 2], [4, 2, 3, 1]);
        assert!((statistical_parity(&c).unwrap() - 0.5).abs() < 1e-15);
        let c = conf([2, 1, 5, 2], [2, 1, 5, 2]);
        assert_eq!(statistical_parity(&c), Some(1.0));
        assert_eq!(statistical_parity(&conf([0; 4], [1, 0, 0, 0])), None);
    }

    #[test]
    fn equal_opportunity_of_tprs() {
        assert_eq!(
            equal_opportunity(&conf([4, 0, 0, 1], [8, 0, 0, 2])),
            Some(1.0)
        );
        assert_eq!(
            equal_opportunity(&conf([2, 0, 0, 3], [4, 0, 0, 1])),
            Some(0.5)
        );
        assert_eq!(equal_opportunity(&conf([0, 3, 3, 0], [4, 0, 0, 1])), None);
    }

    #[test]
    fn equalized_odds_averages_ratios() {
        let c = conf([1, 1, 1, 1], [1, 1, 1, 1]);
        assert_eq!(equalized_odds(&c), Some(1.0));
        // TPR 0.4 vs 0.8, FPR 0.5 vs 0.5
        let c = conf([2, 1, 1, 3], [4, 2, 2, 1]);
        assert_eq!(equalized_odds(&c), Some(0.75));
        assert_eq!(equalized_odds(&conf([1, 0, 0, 1], [1, 1, 1, 1])), None);
    }

    #[test]
    fn performance_conventions() {
        let perfect = confusion_by_group(
            &[true, false, true],
            &[true, false, true],
            &[true, false, false],
        )
        .unwrap();
        assert_eq!(performance_metrics(&perfect).unwrap(), (1.0, 1.0));
        let all_neg = confusion_by_group(&[true, false], &[false, false], &[true, false]).unwrap();
        assert_eq!(performance_metrics(&all_neg).unwrap(), (0.5, 0.0));
        assert!(performance_metrics(&GroupConfusion::default()).is_err());
    }

    #[test]
    fn metric_parsing() {
        assert_eq!(FairnessMetric::parse("EQO"), Some(FairnessMetric::Eqo));
        assert_eq!(FairnessMetric::parse("x"), None);
        assert_eq!(
            vec!["sp", "eo", "eqo"],
            FairnessMetric::ALL.map(|m| m.name()).to_vec()
        );
    }
}
