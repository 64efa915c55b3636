//! Planted-motif dataset for demos and end-to-end tests.
//!
//! Entities are sequences of equal-length clips over three continuous and
//! two categorical channels. A failing entity has its event on its last
//! clip. During the `horizon` clips before it, each step of channel `z0`
//! jumps to a high mode with probability 0.6 and `c0` reads `WARN` more
//! often. Healthy clips show the same symptoms rarely. Everything else is
//! noise, plus a sprinkle of missing cells.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Schema, SplitConfig};
use crate::embedding::{EmbeddingVariant, VocabThreshold};
use crate::labeling::LabelingConfig;
use crate::nn::{AdamConfig, EmbeddingConfig, NetworkConfig, TrainConfig};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub entities: usize,
    pub clips_per_entity: usize,
    pub steps_per_clip: usize,
    /// Share of entities that end in an event.
    pub failing_fraction: f64,
    pub horizon: usize,
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            entities: 40,
            clips_per_entity: 50,
            steps_per_clip: 4,
            failing_fraction: 0.75,
            horizon: 3,
            missing_rate: 0.02,
            seed: 0,
        }
    }
}

/// Long-format CSV text for the planted dataset.
pub fn generate_csv(cfg: &SyntheticConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let background = Normal::new(2.0, 1.0).expect("valid normal");
    let motif = Normal::new(7.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let colors = ["red", "blue"];
    let n_failing = (cfg.entities as f64 * cfg.failing_fraction).round() as usize;

    let mut out = String::from("entity_id,clip_index,step_index,z0,z1,z2,c0,c1,event_label\n");
    for e in 0..cfg.entities {
        let failing = e < n_failing;
        let last = cfg.clips_per_entity - 1;
        for clip in 0..cfg.clips_per_entity {
            let event = failing && clip == last;
            let abnormal = failing && clip + cfg.horizon >= last;
            for step in 0..cfg.steps_per_clip {
                let spike_p = if abnormal { 0.6 } else { 0.03 };
                let z0 = if rng.random_bool(spike_p) {
                    motif.sample(&mut rng)
                } else {
                    background.sample(&mut rng)
                };
                let z1 = noise.sample(&mut rng);
                let z2 = rng.random_range(0.0..10.0);
                let warn_p = if abnormal { 0.5 } else { 0.05 };
                let c0 = if rng.random_bool(warn_p) {
                    "WARN"
                } else if rng.random_bool(0.1) {
                    "IDLE"
                } else {
                    "OK"
                };
                let c1 = colors[rng.random_range(0..colors.len())];
                let mut cell = |v: String| {
                    if rng.random_bool(cfg.missing_rate) {
                        String::new()
                    } else {
                        v
                    }
                };
                let cells = [
                    cell(format!("{z0:.4}")),
                    cell(format!("{z1:.4}")),
                    cell(format!("{z2:.4}")),
                    cell(c0.to_string()),
                    cell(c1.to_string()),
                ];
                writeln!(
                    out,
                    "e{e:03},{clip},{step},{},{},{},{},{},{}",
                    cells[0],
                    cells[1],
                    cells[2],
                    cells[3],
                    cells[4],
                    u8::from(event)
                )
                .expect("writing to a String");
            }
        }
    }
    out
}

pub fn schema() -> Schema {
    serde_json::from_value(serde_json::json!({
        "variables": [
            {"name": "z0", "kind": "continuous", "alphabet_size": 3, "method": "jenks"},
            {"name": "z1", "kind": "continuous", "alphabet_size": 2, "method": "max_entropy"},
            {"name": "z2", "kind": "continuous", "alphabet_size": 2, "method": "uniform"},
            {"name": "c0", "kind": "categorical"},
            {"name": "c1", "kind": "categorical"}
        ]
    }))
    .expect("static schema")
}

/// Embedding, one LSTM with 8 units, and a sigmoid unit.
pub fn network(variant: EmbeddingVariant) -> NetworkConfig {
    let dim = match variant {
        EmbeddingVariant::Wde => 8,
        EmbeddingVariant::Sce => 4,
        EmbeddingVariant::Ice => 0,
    };
    let mut net = NetworkConfig::lstm_classifier(
        EmbeddingConfig {
            variant,
            dim,
            init_scale: 0.05,
            ice_scale: 1.0,
            vocab_threshold: VocabThreshold::MinCount(2),
        },
        8,
    );
    net.optimizer = AdamConfig {
        lr: 0.01,
        ..AdamConfig::default()
    };
    net
}

/// A complete pipeline config for the planted dataset stored at `data`.
pub fn pipeline_config(
    variant: EmbeddingVariant,
    data: impl Into<std::path::PathBuf>,
    out: impl Into<std::path::PathBuf>,
    seed: u64,
) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        data: data.into(),
        schema: schema(),
        labeling: LabelingConfig {
            horizon: 3,
            history: 2,
            use_temporal_weights: true,
            include_truncated: false,
        },
        network: network(variant),
        training: TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        },
        split: SplitConfig::default(),
        seed,
        out: out.into(),
    };
    cfg.set_seed(seed);
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let cfg = SyntheticConfig::default();
        let a = generate_csv(&cfg);
        assert_eq!(a, generate_csv(&cfg));
        assert_eq!(a.lines().count(), 1 + 40 * 50 * 4);
        let events = a.lines().filter(|l| l.ends_with(",1")).count();
        assert_eq!(events, 30 * 4);
        let other = generate_csv(&SyntheticConfig { seed: 1, ..cfg });
        assert_ne!(a, other);
    }
}
