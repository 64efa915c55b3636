//! Epoch loop: seeded shuffling, per-sample or bucketed mini-batch Adam
//! updates, ICE projection after each step, and early stopping on
//! validation AUC.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{bce, weighted_bce};
use super::network::Model;
use crate::error::{Error, Result};
use crate::labeling::LabeledSample;
use crate::metrics::{auc, balanced_accuracy_at_fpr, ScoredSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Stop after this many epochs without a validation AUC improvement.
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Group samples of equal length into the same batch.
    #[serde(default)]
    pub bucket_by_length: bool,
    #[serde(default = "default_max_fpr")]
    pub max_fpr: f64,
}

fn default_epochs() -> usize {
    20
}

fn default_batch() -> usize {
    1
}

pub(crate) fn default_max_fpr() -> f64 {
    0.05
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            patience: None,
            batch_size: default_batch(),
            bucket_by_length: false,
            max_fpr: default_max_fpr(),
        }
    }
}

/// Flattened model input with its target and (renormalized) weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub steps: Vec<Vec<u32>>,
    pub target: u8,
    pub weight: f64,
}

impl From<&LabeledSample> for TrainSample {
    fn from(s: &LabeledSample) -> Self {
        Self {
            steps: s.steps(),
            target: s.target,
            weight: s.weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: Option<f64>,
    pub val_balacc: Option<f64>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best model on validation AUC, or the last one without validation data.
    pub model: Model,
    pub log: Vec<EpochRecord>,
    /// 1-based epoch the returned model comes from.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Predictions for `samples`, computed in parallel.
pub fn score(model: &Model, samples: &[TrainSample]) -> Result<Vec<f64>> {
    samples.par_iter().map(|s| model.predict(&s.steps)).collect()
}

pub fn train(
    mut model: Model,
    samples: &[TrainSample],
    validation: &[TrainSample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
    }
    if samples.iter().any(|s| !(s.weight.is_finite() && s.weight >= 0.0)) {
        return Err(Error::NonFinite("sample weight".into()));
    }
    let mean_weight = samples.iter().map(|s| s.weight).sum::<f64>() / samples.len() as f64;
    if !(mean_weight > 0.0) {
        return Err(Error::InvalidConfig("total sample weight must be positive".into()));
    }
    let targets: Vec<f64> = samples.iter().map(|s| f64::from(s.target)).collect();
    let weights: Vec<f64> = samples.iter().map(|s| s.weight).collect();
    let val_labels: Vec<u8> = validation.iter().map(|s| s.target).collect();
    let use_val = val_labels.contains(&0) && val_labels.contains(&1);

    let mut rng = ChaCha8Rng::seed_from_u64(model.config().seed);
    rng.set_stream(1);
    let mut adam = Adam::new(model.config().optimizer);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Model)> = None;
    let mut predictions = vec![0.0; samples.len()];

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        for batch in batches(samples, cfg, &mut rng) {
            let mut grads = model.zero_grads();
            let norm = mean_weight * batch.len() as f64;
            for &i in &batch {
                let s = &samples[i];
                let (p, _) =
                    model.accumulate_sample(&s.steps, targets[i], s.weight, norm, &mut grads)?;
                let loss = s.weight * bce(targets[i], p) / mean_weight;
                if !p.is_finite() || !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, sample: i });
                }
                predictions[i] = p;
            }
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    sample: batch[0],
                });
            }
            adam.step(model.params_mut(), &grads);
            model.project();
        }
        let train_loss = weighted_bce(&targets, &predictions, &weights)?;

        let (val_auc, val_balacc) = if use_val {
            let set = ScoredSet::new(score(&model, validation)?, val_labels.clone())?;
            let op = balanced_accuracy_at_fpr(&set, cfg.max_fpr)?;
            (Some(auc(&set)), Some(op.balanced_accuracy))
        } else {
            (None, None)
        };
        log.push(EpochRecord {
            epoch,
            train_loss,
            val_auc,
            val_balacc,
            wall_ms: started.elapsed().as_millis() as u64,
        });

        if let Some(a) = val_auc {
            if best.as_ref().is_none_or(|(b, _, _)| a > *b) {
                best = Some((a, epoch, model.clone()));
            }
            let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
            if cfg.patience.is_some_and(|p| epoch - best_epoch >= p) {
                break;
            }
        }
    }

    let epochs_run = log.len();
    let final_loss = log.last().map_or(f64::NAN, |r| r.train_loss);
    let (model, best_epoch) = match best {
        Some((_, e, m)) => (m, e),
        None => (model, epochs_run),
    };
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
        epochs_run,
        final_loss,
    })
}

/// Sample indices per update, in update order.
fn batches(samples: &[TrainSample], cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    if !cfg.bucket_by_length {
        return order.chunks(cfg.batch_size).map(<[usize]>::to_vec).collect();
    }
    order.sort_by_key(|&i| samples[i].steps.len());
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match out.last_mut() {
            Some(b)
                if b.len() < cfg.batch_size
                    && samples[b[0]].steps.len() == samples[i].steps.len() =>
            {
                b.push(i)
            }
            _ => out.push(vec![i]),
        }
    }
    out.shuffle(rng);
    out
}
