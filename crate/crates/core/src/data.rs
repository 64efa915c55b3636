//! Long-format CSV ingestion and the steps between raw rows and symbol
//! sequences: gap filling per entity, derived channels, optional
//! downsampling, partition learning, symbolization, and the entity split.
//!
//! Each CSV row is one step of one clip:
//! `entity_id, clip_index, step_index, <variables...>, event_label`, with the
//! event label repeated on every row of a clip. Empty cells and `NA` are
//! missing values.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::error::{Error, Result};
use crate::labeling::{ClipSequence, SymbolizedClip};
use crate::partition::{
    categorical_histogram, continuous_histogram, fill_categorical, interpolate_continuous,
    jenks_splits, max_entropy_splits, uniform_splits, Histogram, RawValue, SplitMethod,
    SymbolizeMode, VariableKind, VariableSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Columns {
    #[serde(default = "default_entity")]
    pub entity: String,
    #[serde(default = "default_clip")]
    pub clip: String,
    /// Without a step column, rows keep their file order within a clip.
    #[serde(default = "default_step")]
    pub step: Option<String>,
    #[serde(default = "default_event")]
    pub event: String,
}

fn default_entity() -> String {
    "entity_id".into()
}
fn default_clip() -> String {
    "clip_index".into()
}
fn default_step() -> Option<String> {
    Some("step_index".into())
}
fn default_event() -> String {
    "event_label".into()
}

impl Default for Columns {
    fn default() -> Self {
        Self {
            entity: default_entity(),
            clip: default_clip(),
            step: default_step(),
            event: default_event(),
        }
    }
}

/// Declared channel; split points and category lists may be left for
/// [`learn_partition`] to fill in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSchema {
    pub name: String,
    pub kind: VariableKind,
    /// CSV column; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet_size: Option<usize>,
    #[serde(default)]
    pub method: SplitMethod,
    /// Fixed split points instead of learned ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    /// Categorical only; continuous variables are always ordered.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ordered: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unknown_slot: bool,
    /// Derived channel: absolute difference between consecutive values of
    /// this (continuous) column along the entity's timeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_diff_of: Option<String>,
}

impl VariableSchema {
    pub fn source_column(&self) -> &str {
        self.abs_diff_of
            .as_deref()
            .or(self.column.as_deref())
            .unwrap_or(&self.name)
    }

    fn reads_numbers(&self) -> bool {
        self.kind == VariableKind::Continuous
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownsampleMethod {
    /// Keep every `factor`-th step.
    Stride,
    /// Average continuous values over blocks of `factor` steps; categorical
    /// channels keep the first value of each block.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Downsample {
    pub method: DownsampleMethod,
    pub factor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub columns: Columns,
    pub variables: Vec<VariableSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downsample: Option<Downsample>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_bins() -> usize {
    20
}

impl Schema {
    pub fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::InvalidConfig("schema declares no variables".into()));
        }
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate variable {:?}", v.name)));
            }
            let bad = |msg: &str| Err(Error::InvalidConfig(format!("variable {}: {msg}", v.name)));
            match v.kind {
                VariableKind::Continuous => {
                    if v.categories.is_some() || v.unknown_slot {
                        return bad("categories given for a continuous variable");
                    }
                    match (&v.splits, v.alphabet_size) {
                        (None, None) => return bad("needs alphabet_size or splits"),
                        (Some(s), Some(a)) if s.len() + 1 != a => {
                            return bad("alphabet_size disagrees with splits")
                        }
                        (None, Some(a)) if a < 2 => return Err(Error::InvalidAlphabet(a)),
                        _ => {}
                    }
                }
                VariableKind::Categorical => {
                    if v.splits.is_some() {
                        return bad("splits given for a categorical variable");
                    }
                    if v.abs_diff_of.is_some() {
                        return bad("derived channels must be continuous");
                    }
                }
            }
        }
        if let Some(d) = self.downsample {
            if d.factor == 0 {
                return Err(Error::InvalidConfig("downsample factor must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawClip {
    pub clip_index: i64,
    pub event_label: u8,
    /// First and last CSV line of the clip.
    pub lines: (u64, u64),
    /// `steps[step][variable]`, holding the source column for derived
    /// variables.
    pub steps: Vec<Vec<RawValue>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawEntity {
    pub id: String,
    pub clips: Vec<RawClip>,
}

/// Entities sorted by id, clips by clip index, steps by step index.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub entities: Vec<RawEntity>,
}

impl RawDataset {
    pub fn n_clips(&self) -> usize {
        self.entities.iter().map(|e| e.clips.len()).sum()
    }
}

/// Whether the event-label column must be present.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labels {
    Required,
    /// A missing event column reads as all zeros (scoring unlabeled data).
    Optional,
}

pub fn read_csv(path: &Path, schema: &Schema, labels: Labels) -> Result<RawDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, &path.display().to_string(), schema, labels)
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "N/A" | "NaN" | "nan" | "null")
}

struct PendingClip {
    event_label: u8,
    rows: Vec<(i64, u64, Vec<RawValue>)>,
}

/// Reads long-format CSV rows; `name` labels error messages.
pub fn read_csv_from<R: Read>(
    reader: R,
    name: &str,
    schema: &Schema,
    labels: Labels,
) -> Result<RawDataset> {
    schema.validate()?;
    let csv_err = |line: u64, message: String| Error::Csv {
        path: name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    let col = |c: &str| {
        headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| csv_err(1, format!("missing column {c:?}")))
    };
    let entity_col = col(&schema.columns.entity)?;
    let clip_col = col(&schema.columns.clip)?;
    let event_col = match labels {
        Labels::Required => Some(col(&schema.columns.event)?),
        Labels::Optional => headers.iter().position(|h| h == schema.columns.event),
    };
    let step_col = match &schema.columns.step {
        Some(s) => headers.iter().position(|h| h == s),
        None => None,
    };
    let var_cols = schema
        .variables
        .iter()
        .map(|v| col(v.source_column()))
        .collect::<Result<Vec<_>>>()?;

    let mut entities: BTreeMap<String, BTreeMap<i64, PendingClip>> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    let mut row_no = 0i64;
    loop {
        let more = rdr
            .read_record(&mut record)
            .map_err(|e| csv_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(i).unwrap_or("");
        let entity = cell(entity_col);
        if entity.is_empty() {
            return Err(csv_err(line, "empty entity id".into()));
        }
        let clip: i64 = cell(clip_col)
            .parse()
            .map_err(|_| csv_err(line, format!("bad clip index {:?}", cell(clip_col))))?;
        let event: u8 = match event_col.map(cell) {
            None | Some("0") => 0,
            Some("1") => 1,
            Some(other) => {
                return Err(csv_err(line, format!("event label must be 0 or 1, got {other:?}")))
            }
        };
        let step = match step_col {
            Some(c) => cell(c)
                .parse()
                .map_err(|_| csv_err(line, format!("bad step index {:?}", cell(c))))?,
            None => row_no,
        };
        row_no += 1;
        let mut values = Vec::with_capacity(var_cols.len());
        for (v, &c) in schema.variables.iter().zip(&var_cols) {
            let raw = cell(c);
            values.push(if is_missing(raw) {
                RawValue::Missing
            } else if v.reads_numbers() {
                let x: f64 = raw.parse().map_err(|_| {
                    csv_err(line, format!("non-numeric value {raw:?} in column {:?}", v.source_column()))
                })?;
                if !x.is_finite() {
                    return Err(csv_err(line, format!("non-finite value in column {:?}", v.source_column())));
                }
                RawValue::Number(x)
            } else {
                RawValue::Category(raw.to_string())
            });
        }
        let pending = entities
            .entry(entity.to_string())
            .or_default()
            .entry(clip)
            .or_insert(PendingClip {
                event_label: event,
                rows: Vec::new(),
            });
        if pending.event_label != event {
            return Err(csv_err(line, format!("event label changes within clip {clip} of {entity:?}")));
        }
        pending.rows.push((step, line, values));
    }
    if entities.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut out = Vec::with_capacity(entities.len());
    for (id, clips) in entities {
        let mut raw_clips = Vec::with_capacity(clips.len());
        for (clip_index, mut pending) in clips {
            pending.rows.sort_by_key(|r| r.0);
            if let Some(w) = pending.rows.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(csv_err(w[1].1, format!("duplicate step {} in clip {clip_index}", w[1].0)));
            }
            let first = pending.rows.iter().map(|r| r.1).min().unwrap_or(0);
            let last = pending.rows.iter().map(|r| r.1).max().unwrap_or(0);
            raw_clips.push(RawClip {
                clip_index,
                event_label: pending.event_label,
                lines: (first, last),
                steps: pending.rows.into_iter().map(|r| r.2).collect(),
            });
        }
        out.push(RawEntity { id, clips: raw_clips });
    }
    Ok(RawDataset { entities: out })
}

/// One channel over an entity's whole timeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipMeta {
    pub clip_index: i64,
    pub event_label: u8,
    pub lines: (u64, u64),
    pub len: usize,
}

/// Gap-free channels of one entity, concatenated over its clips.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedEntity {
    pub id: String,
    pub clips: Vec<ClipMeta>,
    pub columns: Vec<Column>,
}

/// Fills gaps along the entity's timeline, computes derived channels, then
/// downsamples each clip.
pub fn impute(entity: &RawEntity, schema: &Schema) -> Result<ImputedEntity> {
    let mut columns = Vec::with_capacity(schema.variables.len());
    let first_line = entity.clips.first().map_or(0, |c| c.lines.0);
    for (vi, v) in schema.variables.iter().enumerate() {
        let timeline = entity.clips.iter().flat_map(|c| c.steps.iter().map(move |s| &s[vi]));
        let no_values = || Error::Csv {
            path: String::new(),
            line: first_line,
            message: format!("entity {:?}: column {:?} has no observed values", entity.id, v.source_column()),
        };
        let column = match v.kind {
            VariableKind::Continuous => {
                let raw: Vec<Option<f64>> = timeline
                    .map(|x| match x {
                        RawValue::Number(n) => Some(*n),
                        _ => None,
                    })
                    .collect();
                let mut filled = interpolate_continuous(&raw).map_err(|_| no_values())?;
                if v.abs_diff_of.is_some() {
                    filled = abs_diff(&filled);
                }
                Column::Numeric(filled)
            }
            VariableKind::Categorical => {
                let raw: Vec<Option<String>> = timeline
                    .map(|x| match x {
                        RawValue::Category(c) => Some(c.clone()),
                        _ => None,
                    })
                    .collect();
                Column::Categorical(fill_categorical(&raw).map_err(|_| no_values())?)
            }
        };
        columns.push(column);
    }
    let mut clips: Vec<ClipMeta> = entity
        .clips
        .iter()
        .map(|c| ClipMeta {
            clip_index: c.clip_index,
            event_label: c.event_label,
            lines: c.lines,
            len: c.steps.len(),
        })
        .collect();
    if let Some(d) = schema.downsample {
        columns = columns.iter().map(|c| downsample(c, &clips, d)).collect();
        for c in &mut clips {
            c.len = c.len.div_ceil(d.factor);
        }
    }
    Ok(ImputedEntity {
        id: entity.id.clone(),
        clips,
        columns,
    })
}

/// `|x[n] - x[n-1]|`, with 0 for the first position.
pub fn abs_diff(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev = values.first().copied();
    for &v in values {
        out.push((v - prev.unwrap_or(v)).abs());
        prev = Some(v);
    }
    out
}

fn downsample(column: &Column, clips: &[ClipMeta], d: Downsample) -> Column {
    let mut offset = 0;
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    for c in clips {
        let mut s = 0;
        while s < c.len {
            let e = (s + d.factor).min(c.len);
            blocks.push((offset + s, offset + e));
            s = e;
        }
        offset += c.len;
    }
    match column {
        Column::Numeric(v) => Column::Numeric(
            blocks
                .iter()
                .map(|&(a, b)| match d.method {
                    DownsampleMethod::Stride => v[a],
                    DownsampleMethod::Mean => v[a..b].iter().sum::<f64>() / (b - a) as f64,
                })
                .collect(),
        ),
        Column::Categorical(v) => Column::Categorical(blocks.iter().map(|&(a, _)| v[a].clone()).collect()),
    }
}

/// Learns split points and category lists from training entities.
pub fn learn_partition(schema: &Schema, entities: &[ImputedEntity]) -> Result<Vec<VariableSpec>> {
    schema.validate()?;
    if entities.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut specs = Vec::with_capacity(schema.variables.len());
    for (vi, v) in schema.variables.iter().enumerate() {
        let spec = match v.kind {
            VariableKind::Continuous => {
                let splits = match &v.splits {
                    Some(s) => s.clone(),
                    None => {
                        let values = numeric_values(entities, vi);
                        let a = v.alphabet_size.unwrap_or(2);
                        match v.method {
                            SplitMethod::Uniform => uniform_splits(&values, a),
                            SplitMethod::MaxEntropy => max_entropy_splits(&values, a),
                            SplitMethod::Jenks => jenks_splits(&values, a),
                        }
                        .map_err(|e| Error::InvalidConfig(format!("variable {}: {e}", v.name)))?
                    }
                };
                VariableSpec::continuous(v.name.clone(), splits)?
            }
            VariableKind::Categorical => {
                let categories = match &v.categories {
                    Some(c) => c.clone(),
                    None => {
                        let seen: BTreeSet<&str> = entities
                            .iter()
                            .flat_map(|e| match &e.columns[vi] {
                                Column::Categorical(c) => c.iter().map(String::as_str).collect(),
                                Column::Numeric(_) => Vec::new(),
                            })
                            .collect();
                        seen.into_iter().map(str::to_string).collect()
                    }
                };
                let spec = VariableSpec::categorical(v.name.clone(), categories, v.ordered, v.unknown_slot)?;
                if v.alphabet_size.is_some_and(|a| a != spec.alphabet_size) {
                    return Err(Error::InvalidConfig(format!(
                        "variable {}: alphabet_size {} but {} categories found",
                        v.name,
                        v.alphabet_size.unwrap_or(0),
                        spec.alphabet_size
                    )));
                }
                spec
            }
        };
        specs.push(spec);
    }
    Ok(specs)
}

fn numeric_values(entities: &[ImputedEntity], vi: usize) -> Vec<f64> {
    entities
        .iter()
        .flat_map(|e| match &e.columns[vi] {
            Column::Numeric(v) => v.clone(),
            Column::Categorical(_) => Vec::new(),
        })
        .collect()
}

/// Per-variable histograms of the training values, keyed by variable name.
pub fn histograms(schema: &Schema, entities: &[ImputedEntity]) -> BTreeMap<String, Histogram> {
    schema
        .variables
        .iter()
        .enumerate()
        .map(|(vi, v)| {
            let h = match v.kind {
                VariableKind::Continuous => {
                    continuous_histogram(&numeric_values(entities, vi), schema.histogram_bins)
                }
                VariableKind::Categorical => categorical_histogram(entities.iter().flat_map(|e| {
                    match &e.columns[vi] {
                        Column::Categorical(c) => c.iter().map(String::as_str).collect(),
                        Column::Numeric(_) => Vec::new(),
                    }
                })),
            };
            (v.name.clone(), h)
        })
        .collect()
}

pub fn symbolize_entity(
    entity: &ImputedEntity,
    specs: &[VariableSpec],
    mode: SymbolizeMode,
) -> Result<ClipSequence> {
    if specs.len() != entity.columns.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} variable specs for {} columns",
            specs.len(),
            entity.columns.len()
        )));
    }
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(specs.len());
    for (spec, column) in specs.iter().zip(&entity.columns) {
        let row = match column {
            Column::Numeric(v) => v
                .iter()
                .map(|&x| spec.symbolize(&RawValue::Number(x), mode))
                .collect::<Result<Vec<_>>>()?,
            Column::Categorical(v) => v
                .iter()
                .map(|x| spec.symbolize(&RawValue::Category(x.clone()), mode))
                .collect::<Result<Vec<_>>>()?,
        };
        rows.push(row);
    }
    let mut offset = 0;
    let clips = entity
        .clips
        .iter()
        .map(|c| {
            let symbols = rows.iter().map(|r| r[offset..offset + c.len].to_vec()).collect();
            offset += c.len;
            SymbolizedClip {
                entity_id: entity.id.clone(),
                clip_index: c.clip_index,
                event_label: c.event_label,
                symbols,
                source_lines: c.lines,
            }
        })
        .collect();
    debug_assert!(entity.columns.iter().all(|c| c.len() == offset));
    Ok(ClipSequence {
        entity_id: entity.id.clone(),
        clips,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Validation,
    Test,
}

/// Fractions of entities held out for validation and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default = "default_val")]
    pub validation: f64,
    #[serde(default = "default_test")]
    pub test: f64,
}

fn default_val() -> f64 {
    0.15
}
fn default_test() -> f64 {
    0.25
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            validation: default_val(),
            test: default_test(),
        }
    }
}

/// Assigns every entity to exactly one role by a seeded shuffle of the
/// sorted ids.
pub fn split_entities<S: AsRef<str>>(ids: &[S], cfg: &SplitConfig, seed: u64) -> Result<BTreeMap<String, Role>> {
    let ok = |f: f64| (0.0..1.0).contains(&f);
    if !ok(cfg.validation) || !ok(cfg.test) || cfg.validation + cfg.test >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "split fractions validation {} test {} must be in [0, 1) and sum below 1",
            cfg.validation, cfg.test
        )));
    }
    let mut sorted: Vec<&str> = ids.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let n = sorted.len();
    let n_test = (n as f64 * cfg.test).round() as usize;
    let n_val = (n as f64 * cfg.validation).round() as usize;
    if n_test + n_val >= n {
        return Err(Error::InvalidConfig(format!("{n} entities leave none for training")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    sorted.shuffle(&mut rng);
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let role = if i < n_test {
                Role::Test
            } else if i < n_test + n_val {
                Role::Validation
            } else {
                Role::Train
            };
            (id.to_string(), role)
        })
        .collect())
}

/// First line of a symbolized dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolizedHeader {
    pub partition_digest: String,
    pub config_digest: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolizedRecord {
    pub role: Role,
    #[serde(flatten)]
    pub clip: SymbolizedClip,
}

pub fn write_symbolized(path: &Path, header: &SymbolizedHeader, records: &[SymbolizedRecord]) -> Result<()> {
    let mut bytes = artifact::to_json_lines([header])?;
    bytes.extend(artifact::to_json_lines(records)?);
    artifact::write_atomic(path, &bytes)
}

pub fn read_symbolized(path: &Path) -> Result<(SymbolizedHeader, Vec<SymbolizedRecord>)> {
    let text = String::from_utf8(artifact::read_bytes(path)?).map_err(|_| Error::Csv {
        path: path.display().to_string(),
        line: 0,
        message: "not UTF-8".into(),
    })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, e: serde_json::Error| Error::Csv {
        path: path.display().to_string(),
        line: line as u64 + 1,
        message: e.to_string(),
    };
    let (i, first) = lines.next().ok_or(Error::EmptyDataset)?;
    let header: SymbolizedHeader = serde_json::from_str(first).map_err(|e| parse_err(i, e))?;
    let records = lines
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(i, e)))
        .collect::<Result<Vec<SymbolizedRecord>>>()?;
    Ok((header, records))
}

/// Groups consecutive records of the same entity into sequences.
pub fn sequences_by_role(records: &[SymbolizedRecord]) -> Result<Vec<(Role, ClipSequence)>> {
    let mut out: Vec<(Role, ClipSequence)> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some((role, seq)) if seq.entity_id == r.clip.entity_id => {
                if *role != r.role {
                    return Err(Error::InvalidConfig(format!("entity {:?} has two roles", seq.entity_id)));
                }
                if seq.clips.last().is_some_and(|c| c.clip_index >= r.clip.clip_index) {
                    return Err(Error::InvalidConfig(format!(
                        "clips of {:?} out of order",
                        seq.entity_id
                    )));
                }
                seq.clips.push(r.clip.clone());
            }
            _ => out.push((
                r.role,
                ClipSequence {
                    entity_id: r.clip.entity_id.clone(),
                    clips: vec![r.clip.clone()],
                },
            )),
        }
    }
    let mut ids = BTreeSet::new();
    for (_, s) in &out {
        if !ids.insert(s.entity_id.as_str()) {
            return Err(Error::InvalidConfig(format!("entity {:?} is not contiguous", s.entity_id)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        serde_json::from_str(
            r#"{
                "variables": [
                    {"name": "z", "kind": "continuous", "alphabet_size": 2},
                    {"name": "c", "kind": "categorical"},
                    {"name": "dz", "kind": "continuous", "splits": [0.5], "abs_diff_of": "z"}
                ]
            }"#,
        )
        .unwrap()
    }

    const CSV: &str = "\
entity_id,clip_index,step_index,z,c,event_label
b,0,1,4,x,0
b,0,0,2,x,0
b,1,0,,y,1
b,1,1,8,,1
a,3,0,1,y,0
";

    #[test]
    fn reads_sorts_and_imputes() {
        let s = schema();
        let ds = read_csv_from(CSV.as_bytes(), "t.csv", &s, Labels::Required).unwrap();
        assert_eq!(ds.entities.len(), 2);
        assert_eq!(ds.entities[0].id, "a");
        let b = &ds.entities[1];
        assert_eq!(b.clips[0].lines, (2, 3));
        assert_eq!(b.clips[0].steps[0][0], RawValue::Number(2.0));
        let imp = impute(b, &s).unwrap();
        assert_eq!(imp.columns[0], Column::Numeric(vec![2.0, 4.0, 6.0, 8.0]));
        assert_eq!(
            imp.columns[1],
            Column::Categorical(vec!["x".into(), "x".into(), "y".into(), "y".into()])
        );
        assert_eq!(imp.columns[2], Column::Numeric(vec![0.0, 2.0, 2.0, 2.0]));

        let entities: Vec<_> = ds.entities.iter().map(|e| impute(e, &s).unwrap()).collect();
        let specs = learn_partition(&s, &entities).unwrap();
        assert_eq!(specs[1].categories.as_deref().unwrap(), ["x", "y"]);
        let seq = symbolize_entity(&entities[1], &specs, SymbolizeMode::Training).unwrap();
        assert_eq!(seq.clips.len(), 2);
        assert_eq!(seq.clips[1].event_label, 1);
        assert_eq!(seq.clips[0].symbols[1], vec![0, 0]);
        assert_eq!(seq.clips[1].symbols[2], vec![1, 1]);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let s = schema();
        let bad = "entity_id,clip_index,step_index,z,c,event_label\na,0,0,1,x,0\na,0,1,oops,x,0\n";
        match read_csv_from(bad.as_bytes(), "t.csv", &s, Labels::Required) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let flip = "entity_id,clip_index,step_index,z,c,event_label\na,0,0,1,x,0\na,0,1,2,x,1\n";
        assert!(matches!(
            read_csv_from(flip.as_bytes(), "t.csv", &s, Labels::Required),
            Err(Error::Csv { line: 3, .. })
        ));
        let dup = "entity_id,clip_index,step_index,z,c,event_label\na,0,0,1,x,0\na,0,0,2,x,0\n";
        assert!(matches!(
            read_csv_from(dup.as_bytes(), "t.csv", &s, Labels::Required),
            Err(Error::Csv { line: 3, .. })
        ));
        let missing_col = "entity_id,clip_index,z,event_label\n";
        assert!(matches!(
            read_csv_from(missing_col.as_bytes(), "t.csv", &s, Labels::Required),
            Err(Error::Csv { line: 1, .. })
        ));
        let unlabeled = "entity_id,clip_index,step_index,z,c\na,0,0,1,x\n";
        assert!(read_csv_from(unlabeled.as_bytes(), "t.csv", &s, Labels::Required).is_err());
        let ds = read_csv_from(unlabeled.as_bytes(), "t.csv", &s, Labels::Optional).unwrap();
        assert_eq!(ds.entities[0].clips[0].event_label, 0);
        let empty = "entity_id,clip_index,step_index,z,c,event_label\n";
        assert!(matches!(
            read_csv_from(empty.as_bytes(), "t.csv", &s, Labels::Required),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn all_missing_channel_is_a_data_error() {
        let s = schema();
        let csv = "entity_id,clip_index,step_index,z,c,event_label\na,0,0,,x,0\n";
        let ds = read_csv_from(csv.as_bytes(), "t.csv", &s, Labels::Required).unwrap();
        assert!(matches!(impute(&ds.entities[0], &s), Err(Error::Csv { .. })));
    }

    #[test]
    fn downsampling() {
        let clips = vec![
            ClipMeta {
                clip_index: 0,
                event_label: 0,
                lines: (0, 0),
                len: 5,
            },
            ClipMeta {
                clip_index: 1,
                event_label: 0,
                lines: (0, 0),
                len: 2,
            },
        ];
        let col = Column::Numeric(vec![1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0]);
        let mean = downsample(&col, &clips, Downsample { method: DownsampleMethod::Mean, factor: 2 });
        assert_eq!(mean, Column::Numeric(vec![1.5, 3.5, 5.0, 15.0]));
        let stride = downsample(&col, &clips, Downsample { method: DownsampleMethod::Stride, factor: 2 });
        assert_eq!(stride, Column::Numeric(vec![1.0, 3.0, 5.0, 10.0]));
    }

    #[test]
    fn split_is_disjoint_and_deterministic() {
        let ids: Vec<String> = (0..40).map(|i| format!("e{i}")).collect();
        let cfg = SplitConfig::default();
        let a = split_entities(&ids, &cfg, 3).unwrap();
        assert_eq!(a, split_entities(&ids, &cfg, 3).unwrap());
        assert_eq!(a.len(), 40);
        let count = |r| a.values().filter(|&&x| x == r).count();
        assert_eq!((count(Role::Test), count(Role::Validation), count(Role::Train)), (10, 6, 24));
        assert_ne!(a, split_entities(&ids, &cfg, 4).unwrap());
        assert!(split_entities(&ids[..1], &cfg, 0).is_ok());
        let bad = SplitConfig { validation: 0.5, test: 0.5 };
        assert!(split_entities(&ids, &bad, 0).is_err());
    }

    #[test]
    fn symbolized_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let header = SymbolizedHeader {
            partition_digest: "p".into(),
            config_digest: "c".into(),
            seed: 1,
        };
        let clip = |e: &str, i| SymbolizedClip {
            entity_id: e.into(),
            clip_index: i,
            event_label: 0,
            symbols: vec![vec![0, 1]],
            source_lines: (2, 3),
        };
        let records = vec![
            SymbolizedRecord { role: Role::Train, clip: clip("a", 0) },
            SymbolizedRecord { role: Role::Train, clip: clip("a", 1) },
            SymbolizedRecord { role: Role::Test, clip: clip("b", 0) },
        ];
        write_symbolized(&p, &header, &records).unwrap();
        let (h, r) = read_symbolized(&p).unwrap();
        assert_eq!((h, &r), (header, &records));
        let seqs = sequences_by_role(&r).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].1.clips.len(), 2);
        let mut shuffled = records.clone();
        shuffled.swap(0, 1);
        assert!(sequences_by_role(&shuffled).is_err());
    }
}
