//! The end-to-end driver behind the command-line tool:
//! partition, symbolize, train, evaluate, predict.
//!
//! Every artifact lands in the configured output directory and carries the
//! config digest and seed. Paths in a config file are resolved relative to
//! that file; the digest covers everything except those paths, so the same
//! experiment run from two places yields identical artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::checkpoint::{partition_digest, schema_digest, Checkpoint, TrainingMetadata};
use crate::data::{
    histograms, impute, learn_partition, read_csv, read_symbolized, sequences_by_role,
    split_entities, symbolize_entity, write_symbolized, ImputedEntity, Labels, Role, Schema,
    SplitConfig, SymbolizedHeader, SymbolizedRecord,
};
use crate::embedding::{EmbeddingVariant, Vocabulary};
use crate::error::{Error, Result};
use crate::labeling::{renormalize_weights, window_samples, ClipSequence, LabeledSample, LabelingConfig};
use crate::metrics::{
    auc, balanced_accuracy_at_fpr, balanced_accuracy_at_threshold, roc_curve, ScoredSet,
};
use crate::nn::{score, train, EpochRecord, Model, NetworkConfig, TrainConfig, TrainSample};
use crate::partition::{Histogram, SymbolizeMode, VariableSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Training CSV.
    pub data: PathBuf,
    pub schema: Schema,
    pub labeling: LabelingConfig,
    pub network: NetworkConfig,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// The digested part of a config: everything but file locations.
#[derive(Serialize)]
struct DigestView<'a> {
    schema: &'a Schema,
    labeling: &'a LabelingConfig,
    network: &'a NetworkConfig,
    training: &'a TrainConfig,
    split: &'a SplitConfig,
    seed: u64,
}

impl PipelineConfig {
    /// Reads a JSON config; relative paths are taken from the config's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = artifact::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.data.is_relative() {
            cfg.data = base.join(&cfg.data);
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        cfg.set_seed(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    /// The one seed drives the entity split, initialization, and shuffling.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.network.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        self.labeling.validate()?;
        let emb = &self.network.embedding;
        if matches!(emb.variant, EmbeddingVariant::Wde | EmbeddingVariant::Sce) && emb.dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "embedding variant {} needs a positive dim",
                emb.variant
            )));
        }
        if self.network.chop_count == 0 {
            return Err(Error::InvalidConfig("chop_count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.training.max_fpr) {
            return Err(Error::InvalidConfig("max_fpr must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn digest(&self) -> Result<String> {
        artifact::digest_json(&DigestView {
            schema: &self.schema,
            labeling: &self.labeling,
            network: &self.network,
            training: &self.training,
            split: &self.split,
            seed: self.seed,
        })
    }

    pub fn paths(&self) -> OutputPaths {
        OutputPaths::new(&self.out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub partition: PathBuf,
    pub histograms: PathBuf,
    pub symbolized: PathBuf,
    pub checkpoint: PathBuf,
    pub train_log: PathBuf,
    pub manifest: PathBuf,
    pub metrics: PathBuf,
    pub predictions: PathBuf,
}

impl OutputPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            partition: dir.join("partition.json"),
            histograms: dir.join("histograms.json"),
            symbolized: dir.join("symbolized.jsonl"),
            checkpoint: dir.join("checkpoint.bin"),
            train_log: dir.join("train_log.jsonl"),
            manifest: dir.join("manifest.json"),
            metrics: dir.join("metrics.json"),
            predictions: dir.join("predictions.jsonl"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub variables: Vec<VariableSpec>,
    pub partition_digest: String,
    pub schema_digest: String,
    pub config_digest: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramFile {
    pub variables: BTreeMap<String, Histogram>,
    pub config_digest: String,
    pub seed: u64,
}

fn read_entities(schema: &Schema, path: &Path, labels: Labels) -> Result<Vec<ImputedEntity>> {
    let raw = read_csv(path, schema, labels)?;
    let name = path.display().to_string();
    raw.entities
        .par_iter()
        .map(|e| impute(e, schema))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Csv { line, message, .. } => Error::Csv {
                path: name.clone(),
                line,
                message,
            },
            other => other,
        })
}

fn roles(cfg: &PipelineConfig, entities: &[ImputedEntity]) -> Result<BTreeMap<String, Role>> {
    let ids: Vec<&str> = entities.iter().map(|e| e.id.as_str()).collect();
    split_entities(&ids, &cfg.split, cfg.seed)
}

/// Learns the partition from the training entities and writes the partition
/// and histogram files.
pub fn cmd_partition(cfg: &PipelineConfig) -> Result<PartitionFile> {
    let entities = read_entities(&cfg.schema, &cfg.data, Labels::Required)?;
    let roles = roles(cfg, &entities)?;
    let training: Vec<ImputedEntity> = entities
        .into_iter()
        .filter(|e| roles[&e.id] == Role::Train)
        .collect();
    let variables = learn_partition(&cfg.schema, &training)?;
    let config_digest = cfg.digest()?;
    let file = PartitionFile {
        partition_digest: partition_digest(&variables)?,
        schema_digest: schema_digest(&cfg.schema)?,
        variables,
        config_digest: config_digest.clone(),
        seed: cfg.seed,
    };
    let paths = cfg.paths();
    artifact::write_json(&paths.partition, &file)?;
    artifact::write_json(
        &paths.histograms,
        &HistogramFile {
            variables: histograms(&cfg.schema, &training),
            config_digest,
            seed: cfg.seed,
        },
    )?;
    Ok(file)
}

/// Reads the partition file and checks it belongs to this schema.
pub fn load_partition(cfg: &PipelineConfig) -> Result<PartitionFile> {
    let file: PartitionFile = artifact::read_json(&cfg.paths().partition)?;
    let found = partition_digest(&file.variables)?;
    if found != file.partition_digest {
        return Err(Error::DigestMismatch {
            expected: file.partition_digest,
            found,
        });
    }
    let schema = schema_digest(&cfg.schema)?;
    if schema != file.schema_digest {
        return Err(Error::DigestMismatch {
            expected: file.schema_digest,
            found: schema,
        });
    }
    Ok(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolizeSummary {
    pub entities: BTreeMap<Role, usize>,
    pub clips: usize,
}

/// Symbolizes the whole CSV with the stored partition. Validation and test
/// entities use inference rules, so unknown categories may fall back to a
/// reserved slot.
pub fn cmd_symbolize(cfg: &PipelineConfig) -> Result<SymbolizeSummary> {
    let partition = load_partition(cfg)?;
    let entities = read_entities(&cfg.schema, &cfg.data, Labels::Required)?;
    let roles = roles(cfg, &entities)?;
    let sequences = entities
        .par_iter()
        .map(|e| {
            let role = roles[&e.id];
            let mode = if role == Role::Train {
                SymbolizeMode::Training
            } else {
                SymbolizeMode::Inference
            };
            Ok((role, symbolize_entity(e, &partition.variables, mode)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = SymbolizeSummary {
        entities: BTreeMap::new(),
        clips: 0,
    };
    let mut records = Vec::new();
    for (role, seq) in sequences {
        *summary.entities.entry(role).or_insert(0) += 1;
        summary.clips += seq.clips.len();
        records.extend(seq.clips.into_iter().map(|clip| SymbolizedRecord { role, clip }));
    }
    let header = SymbolizedHeader {
        partition_digest: partition.partition_digest,
        config_digest: cfg.digest()?,
        seed: cfg.seed,
    };
    write_symbolized(&cfg.paths().symbolized, &header, &records)?;
    Ok(summary)
}

/// Labeled samples per role from a symbolized dataset.
#[derive(Debug, Clone, Default)]
pub struct Splits {
    pub train: Vec<LabeledSample>,
    pub validation: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    /// Training clips, for vocabulary building.
    pub train_sequences: Vec<ClipSequence>,
}

pub fn build_splits(sequences: Vec<(Role, ClipSequence)>, labeling: &LabelingConfig) -> Splits {
    let mut out = Splits::default();
    for (role, seq) in sequences {
        let samples = window_samples(&seq, labeling);
        match role {
            Role::Train => {
                out.train.extend(samples);
                out.train_sequences.push(seq);
            }
            Role::Validation => out.validation.extend(samples),
            Role::Test => out.test.extend(samples),
        }
    }
    out
}

fn load_symbolized(path: &Path, expected_partition: &str) -> Result<Vec<(Role, ClipSequence)>> {
    let (header, records) = read_symbolized(path)?;
    if header.partition_digest != expected_partition {
        return Err(Error::DigestMismatch {
            expected: expected_partition.to_string(),
            found: header.partition_digest,
        });
    }
    sequences_by_role(&records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_digest: String,
    pub partition_digest: String,
    pub schema_digest: String,
    pub checkpoint_digest: String,
    pub seed: u64,
    pub variant: EmbeddingVariant,
    pub parameters: usize,
    pub embedding_parameters: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_loss: Option<f64>,
    pub train_samples: usize,
    pub validation_samples: usize,
    pub test_samples: usize,
    pub train_positive_weight: f64,
    pub train_negative_weight: f64,
}

#[derive(Serialize)]
struct LogLine<'a> {
    #[serde(flatten)]
    record: &'a EpochRecord,
    seed: u64,
    config_digest: &'a str,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub manifest: Manifest,
    pub log: Vec<EpochRecord>,
    pub checkpoint: Checkpoint,
}

/// Labels, weights, and trains on the symbolized dataset, then writes the
/// checkpoint, the epoch log, and the manifest.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainReport> {
    let partition = load_partition(cfg)?;
    let paths = cfg.paths();
    let sequences = load_symbolized(&paths.symbolized, &partition.partition_digest)?;
    let mut splits = build_splits(sequences, &cfg.labeling);
    if splits.train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    renormalize_weights(&mut splits.train)?;

    let vocab = match cfg.network.embedding.variant {
        EmbeddingVariant::Wde => Some(Vocabulary::build(
            splits
                .train_sequences
                .iter()
                .flat_map(|s| s.clips.iter().flat_map(|c| c.steps())),
            cfg.network.embedding.vocab_threshold,
        )?),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = Model::new(cfg.network.clone(), &partition.variables, vocab, &mut rng)?;
    let train_set: Vec<TrainSample> = splits.train.iter().map(TrainSample::from).collect();
    let val_set: Vec<TrainSample> = splits.validation.iter().map(TrainSample::from).collect();
    let outcome = train(model, &train_set, &val_set, &cfg.training)?;

    let config_digest = cfg.digest()?;
    let checkpoint = Checkpoint {
        model: outcome.model,
        schema: cfg.schema.clone(),
        variables: partition.variables,
        labeling: cfg.labeling,
        metadata: TrainingMetadata {
            epochs: outcome.epochs_run,
            best_epoch: outcome.best_epoch,
            final_loss: Some(outcome.final_loss).filter(|l| l.is_finite()),
            seed: cfg.seed,
            config_digest: config_digest.clone(),
        },
    };
    let bytes = checkpoint.to_bytes()?;
    artifact::write_atomic(&paths.checkpoint, &bytes)?;
    let log_lines = outcome.log.iter().map(|record| LogLine {
        record,
        seed: cfg.seed,
        config_digest: &config_digest,
    });
    artifact::write_atomic(&paths.train_log, &artifact::to_json_lines(log_lines)?)?;

    let class_sum = |y: u8| -> f64 {
        splits
            .train
            .iter()
            .filter(|s| s.target == y)
            .map(|s| s.weight)
            .sum()
    };
    let manifest = Manifest {
        config_digest,
        partition_digest: checkpoint.partition_digest()?,
        schema_digest: checkpoint.schema_digest()?,
        checkpoint_digest: artifact::digest_bytes(&bytes),
        seed: cfg.seed,
        variant: cfg.network.embedding.variant,
        parameters: checkpoint.model.param_count(),
        embedding_parameters: checkpoint.model.embedding().param_count(),
        epochs_run: outcome.epochs_run,
        best_epoch: outcome.best_epoch,
        final_loss: checkpoint.metadata.final_loss,
        train_samples: splits.train.len(),
        validation_samples: splits.validation.len(),
        test_samples: splits.test.len(),
        train_positive_weight: class_sum(1),
        train_negative_weight: class_sum(0),
    };
    artifact::write_json(&paths.manifest, &manifest)?;
    Ok(TrainReport {
        manifest,
        log: outcome.log,
        checkpoint,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub balanced_accuracy: f64,
    /// Decision threshold; `null` when only the all-negative operating point
    /// satisfies the false-positive cap.
    pub threshold: Option<f64>,
    pub tpr: f64,
    pub fpr: f64,
    pub n_pos: u64,
    pub n_neg: u64,
    pub max_fpr: f64,
    /// The threshold was chosen on the evaluated data itself.
    pub in_sample: bool,
    /// `[fpr, tpr, threshold]` triples.
    pub roc: Vec<(f64, f64, Option<f64>)>,
    pub seed: u64,
    pub config_digest: String,
    pub partition_digest: String,
}

fn scored_set(model: &Model, samples: &[LabeledSample]) -> Result<ScoredSet> {
    let set: Vec<TrainSample> = samples.iter().map(TrainSample::from).collect();
    ScoredSet::new(score(model, &set)?, samples.iter().map(|s| s.target).collect())
}

/// Scores `test` and reports AUC plus balanced accuracy at a threshold picked
/// on `validation` under the false-positive cap (on `test` itself when the
/// validation set lacks a class).
pub fn evaluate_samples(
    checkpoint: &Checkpoint,
    validation: &[LabeledSample],
    test: &[LabeledSample],
    max_fpr: f64,
) -> Result<MetricsReport> {
    let model = &checkpoint.model;
    let test_set = scored_set(model, test)?;
    let val_set = if validation.is_empty() {
        None
    } else {
        scored_set(model, validation).ok()
    };
    let (op, in_sample) = match &val_set {
        Some(v) => {
            let chosen = balanced_accuracy_at_fpr(v, max_fpr)?;
            (balanced_accuracy_at_threshold(&test_set, chosen.threshold), false)
        }
        None => (balanced_accuracy_at_fpr(&test_set, max_fpr)?, true),
    };
    let finite = |t: f64| Some(t).filter(|t| t.is_finite());
    Ok(MetricsReport {
        auc: auc(&test_set),
        balanced_accuracy: op.balanced_accuracy,
        threshold: finite(op.threshold),
        tpr: op.tpr,
        fpr: op.fpr,
        n_pos: test_set.positives(),
        n_neg: test_set.negatives(),
        max_fpr,
        in_sample,
        roc: roc_curve(&test_set)
            .into_iter()
            .map(|p| (p.fpr, p.tpr, finite(p.threshold)))
            .collect(),
        seed: checkpoint.metadata.seed,
        config_digest: checkpoint.metadata.config_digest.clone(),
        partition_digest: checkpoint.partition_digest()?,
    })
}

/// Evaluates a checkpoint on the test entities of the symbolized dataset,
/// or, with `data`, on every entity of that CSV.
pub fn cmd_evaluate(
    cfg: &PipelineConfig,
    checkpoint_path: &Path,
    data: Option<&Path>,
) -> Result<MetricsReport> {
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    let report = match data {
        Some(csv) => {
            let sequences = symbolize_for_inference(&checkpoint, csv, Labels::Required)?;
            let test: Vec<LabeledSample> = sequences
                .iter()
                .flat_map(|s| window_samples(s, &checkpoint.labeling))
                .collect();
            evaluate_samples(&checkpoint, &[], &test, cfg.training.max_fpr)?
        }
        None => {
            let sequences =
                load_symbolized(&cfg.paths().symbolized, &checkpoint.partition_digest()?)?;
            let splits = build_splits(sequences, &checkpoint.labeling);
            evaluate_samples(&checkpoint, &splits.validation, &splits.test, cfg.training.max_fpr)?
        }
    };
    artifact::write_json(&cfg.paths().metrics, &report)?;
    Ok(report)
}

fn symbolize_for_inference(checkpoint: &Checkpoint, csv: &Path, labels: Labels) -> Result<Vec<ClipSequence>> {
    let entities = read_entities(&checkpoint.schema, csv, labels)?;
    entities
        .par_iter()
        .map(|e| symbolize_entity(e, &checkpoint.variables, SymbolizeMode::Inference))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub entity_id: String,
    /// Clip index of the current clip.
    pub t: i64,
    pub score: f64,
}

/// Scores every clip of `csv` that has a full history window.
pub fn predict_csv(checkpoint: &Checkpoint, csv: &Path) -> Result<Vec<Prediction>> {
    let labeling = LabelingConfig {
        include_truncated: true,
        ..checkpoint.labeling
    };
    let samples: Vec<LabeledSample> = symbolize_for_inference(checkpoint, csv, Labels::Optional)?
        .iter()
        .flat_map(|s| window_samples(s, &labeling))
        .collect();
    samples
        .par_iter()
        .map(|s| {
            Ok(Prediction {
                entity_id: s.entity_id.clone(),
                t: s.clip_index,
                score: checkpoint.model.predict(&s.steps())?,
            })
        })
        .collect()
}

/// Writes JSON-lines predictions to `out`. With `schema`, the checkpoint must
/// have been trained on that schema.
pub fn cmd_predict(
    checkpoint_path: &Path,
    csv: &Path,
    schema: Option<&Schema>,
    out: &Path,
) -> Result<Vec<Prediction>> {
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    if let Some(s) = schema {
        let found = schema_digest(s)?;
        let expected = checkpoint.schema_digest()?;
        if found != expected {
            return Err(Error::DigestMismatch { expected, found });
        }
    }
    let predictions = predict_csv(&checkpoint, csv)?;
    artifact::write_atomic(out, &artifact::to_json_lines(&predictions)?)?;
    Ok(predictions)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub partition: PartitionFile,
    pub symbolize: SymbolizeSummary,
    pub train: TrainReport,
    pub metrics: MetricsReport,
}

/// Partition, symbolize, train, and evaluate in one go.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<RunReport> {
    let partition = cmd_partition(cfg)?;
    let symbolize = cmd_symbolize(cfg)?;
    let train = cmd_train(cfg)?;
    let metrics = cmd_evaluate(cfg, &cfg.paths().checkpoint, None)?;
    Ok(RunReport {
        partition,
        symbolize,
        train,
        metrics,
    })
}
