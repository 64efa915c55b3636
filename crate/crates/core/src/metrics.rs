//! ROC analysis for scored binary predictions.
//!
//! The curve is built on tie groups: all samples sharing a score flip from
//! negative to positive prediction together. Areas are accumulated in integer
//! counts so the trapezoidal AUC is exactly the Mann-Whitney statistic with
//! ties counted as one half.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    scores: Vec<f64>,
    labels: Vec<u8>,
    positives: u64,
    negatives: u64,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("score".into()));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::ShapeMismatch("labels must be 0 or 1".into()));
        }
        let positives = labels.iter().filter(|&&l| l == 1).count() as u64;
        let negatives = labels.len() as u64 - positives;
        if positives == 0 || negatives == 0 {
            return Err(Error::SingleClassDataset {
                positives: positives as usize,
                negatives: negatives as usize,
            });
        }
        Ok(Self {
            scores,
            labels,
            positives,
            negatives,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positives(&self) -> u64 {
        self.positives
    }

    pub fn negatives(&self) -> u64 {
        self.negatives
    }

    /// Cumulative `(true positives, false positives, threshold)` per tie
    /// group, by descending score, preceded by `(0, 0, +inf)`.
    fn counts(&self) -> Vec<(u64, u64, f64)> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        let mut out = vec![(0, 0, f64::INFINITY)];
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut i = 0;
        while i < order.len() {
            let s = self.scores[order[i]];
            while i < order.len() && self.scores[order[i]] == s {
                if self.labels[order[i]] == 1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            out.push((tp, fp, s));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Predict positive when `score >= threshold`; `+inf` for the origin.
    pub threshold: f64,
}

pub fn roc_curve(set: &ScoredSet) -> Vec<RocPoint> {
    let (p, n) = (set.positives as f64, set.negatives as f64);
    set.counts()
        .into_iter()
        .map(|(tp, fp, threshold)| RocPoint {
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
            threshold,
        })
        .collect()
}

/// Trapezoidal area under the tie-grouped ROC curve.
pub fn auc(set: &ScoredSet) -> f64 {
    let counts = set.counts();
    let twice_area: u128 = counts
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) as u128 * (w[1].0 + w[0].0) as u128)
        .sum();
    twice_area as f64 / (2 * set.positives as u128 * set.negatives as u128) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub balanced_accuracy: f64,
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Best true-positive rate among thresholds whose false-positive rate stays
/// within `max_fpr`; ties go to the lower false-positive rate, then the
/// higher threshold.
pub fn balanced_accuracy_at_fpr(set: &ScoredSet, max_fpr: f64) -> Result<OperatingPoint> {
    if !(0.0..1.0).contains(&max_fpr) {
        return Err(Error::InvalidConfig(format!(
            "max_fpr {max_fpr} outside [0, 1)"
        )));
    }
    let (p, n) = (set.positives as f64, set.negatives as f64);
    let mut best: Option<(u64, u64, f64)> = None;
    for (tp, fp, thr) in set.counts() {
        if fp as f64 / n > max_fpr {
            continue;
        }
        let better = match best {
            None => true,
            Some((btp, bfp, _)) => tp > btp || (tp == btp && fp < bfp),
        };
        if better {
            best = Some((tp, fp, thr));
        }
    }
    // the origin is always feasible
    let (tp, fp, threshold) = best.expect("origin point");
    let tpr = tp as f64 / p;
    let fpr = fp as f64 / n;
    Ok(OperatingPoint {
        balanced_accuracy: (tpr + (1.0 - fpr)) / 2.0,
        threshold,
        fpr,
        tpr,
    })
}

/// Balanced accuracy of hard predictions at a fixed threshold.
pub fn balanced_accuracy_at_threshold(set: &ScoredSet, threshold: f64) -> OperatingPoint {
    let (mut tp, mut fp) = (0u64, 0u64);
    for (&s, &l) in set.scores.iter().zip(&set.labels) {
        if s >= threshold {
            if l == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let tpr = tp as f64 / set.positives as f64;
    let fpr = fp as f64 / set.negatives as f64;
    OperatingPoint {
        balanced_accuracy: (tpr + (1.0 - fpr)) / 2.0,
        threshold,
        fpr,
        tpr,
    }
}
