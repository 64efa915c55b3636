//! Event labels to weighted binary samples.
//!
//! A clip at position `t` is positive when an event occurs in one of the next
//! `horizon` clips. Positive samples are weighted by how close, and how many,
//! upcoming events are: an event `j` steps ahead contributes `horizon - j + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observation window as an `m x N` matrix of symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolizedClip {
    pub entity_id: String,
    pub clip_index: i64,
    pub event_label: u8,
    /// `symbols[variable][step]`
    pub symbols: Vec<Vec<u32>>,
    /// First and last CSV line the clip was read from.
    #[serde(default)]
    pub source_lines: (u64, u64),
}

impl SymbolizedClip {
    pub fn n_vars(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_steps(&self) -> usize {
        self.symbols.first().map_or(0, Vec::len)
    }

    /// The symbol tuple observed at `step`, in variable order.
    pub fn step(&self, step: usize) -> Vec<u32> {
        self.symbols.iter().map(|row| row[step]).collect()
    }

    pub fn steps(&self) -> impl Iterator<Item = Vec<u32>> + '_ {
        (0..self.n_steps()).map(|n| self.step(n))
    }
}

/// Time-ordered clips of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipSequence {
    pub entity_id: String,
    pub clips: Vec<SymbolizedClip>,
}

impl ClipSequence {
    pub fn event_labels(&self) -> Vec<u8> {
        self.clips.iter().map(|c| c.event_label).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingConfig {
    pub horizon: usize,
    pub history: usize,
    #[serde(default = "default_true")]
    pub use_temporal_weights: bool,
    /// Keep negatives whose horizon runs past the end of the sequence.
    #[serde(default)]
    pub include_truncated: bool,
}

fn default_true() -> bool {
    true
}

impl LabelingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub y: u8,
    /// Negative whose look-ahead window extends past the last clip.
    pub truncated: bool,
}

/// Model input plus target and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub entity_id: String,
    /// Position of the current clip within its sequence.
    pub position: usize,
    /// `clip_index` of the current clip.
    pub clip_index: i64,
    /// `history + 1` clips ending at the current one.
    pub inputs: Vec<SymbolizedClip>,
    pub target: u8,
    pub weight: f64,
    pub truncated: bool,
}

impl LabeledSample {
    /// All steps of all input clips, concatenated in time order.
    pub fn steps(&self) -> Vec<Vec<u32>> {
        self.inputs.iter().flat_map(|c| c.steps()).collect()
    }
}

pub fn derive_targets(event_labels: &[u8], horizon: usize) -> Vec<Target> {
    let n = event_labels.len();
    (0..n)
        .map(|t| {
            let end = (t + horizon).min(n - 1);
            let hit = (t + 1..=end).any(|j| event_labels[j] > 0);
            let y = u8::from(hit);
            Target {
                y,
                truncated: y == 0 && t + horizon >= n,
            }
        })
        .collect()
}

pub fn temporal_weights(event_labels: &[u8], targets: &[Target], horizon: usize) -> Vec<f64> {
    targets
        .iter()
        .enumerate()
        .map(|(t, target)| {
            if target.y == 0 {
                return 1.0;
            }
            (1..=horizon)
                .filter_map(|j| event_labels.get(t + j))
                .zip(1..)
                .map(|(&l, j)| ((horizon - j + 1) as u64 * l as u64) as f64)
                .sum()
        })
        .collect()
}

/// Scales positive weights so both classes carry the same total weight.
pub fn renormalize_weights(samples: &mut [LabeledSample]) -> Result<()> {
    let (mut pos, mut neg) = (0.0, 0.0);
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for s in samples.iter() {
        if s.target == 1 {
            pos += s.weight;
            n_pos += 1;
        } else {
            neg += s.weight;
            n_neg += 1;
        }
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassDataset {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let scale = neg / pos;
    for s in samples.iter_mut().filter(|s| s.target == 1) {
        s.weight *= scale;
    }
    Ok(())
}

/// One sample per clip that has a full history window. Weights are not
/// renormalized here.
pub fn window_samples(seq: &ClipSequence, cfg: &LabelingConfig) -> Vec<LabeledSample> {
    if seq.clips.is_empty() {
        return Vec::new();
    }
    let labels = seq.event_labels();
    let targets = derive_targets(&labels, cfg.horizon);
    let weights = temporal_weights(&labels, &targets, cfg.horizon);
    (cfg.history..seq.clips.len())
        .filter(|&t| cfg.include_truncated || !targets[t].truncated)
        .map(|t| {
            let target = targets[t];
            let weight = if target.y == 1 && !cfg.use_temporal_weights {
                1.0
            } else {
                weights[t]
            };
            LabeledSample {
                entity_id: seq.entity_id.clone(),
                position: t,
                clip_index: seq.clips[t].clip_index,
                inputs: seq.clips[t - cfg.history..=t].to_vec(),
                target: target.y,
                weight,
                truncated: target.truncated,
            }
        })
        .collect()
}
