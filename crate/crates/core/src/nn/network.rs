//! Embedding + sequence encoder + classification head.
//!
//! A layer stack is read in three phases: sequence layers (`lstm`, `irnn`,
//! `conv1d`, `maxpool1d`), a reduction to one feature vector (the last step,
//! or the per-channel maximum when a `global_maxpool` layer is present), and
//! vector layers (`dense`, `sigmoid`) ending in a single sigmoid output.
//!
//! With `chop_count > 1` the embedded sequence is cut into contiguous chunks
//! of `ceil(T / chop_count)` steps; each chunk goes through the sequence
//! layers and reduction on its own and the chunk features are max-pooled.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use super::conv::{global_max_pool, route_max_grad, Conv1d, Conv1dCache, MaxPool1d, PoolCache};
use super::dense::{Activation, Dense, DenseCache};
use super::loss::{bce, bce_grad};
use super::recurrent::{sigmoid, Irnn, IrnnCache, Lstm, LstmCache};
use crate::embedding::{EmbeddingTable, EmbeddingVariant, Tokens, VocabThreshold, Vocabulary};
use crate::error::{Error, Result};
use crate::partition::VariableSpec;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Lstm {
        hidden: usize,
    },
    Irnn {
        hidden: usize,
    },
    Conv1d {
        filters: usize,
        kernel: usize,
        #[serde(default = "one")]
        stride: usize,
    },
    Maxpool1d {
        size: usize,
        stride: usize,
    },
    GlobalMaxpool,
    Dense {
        units: usize,
        #[serde(default)]
        activation: Activation,
    },
    Sigmoid,
}

fn one() -> usize {
    1
}

fn default_init_scale() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub variant: EmbeddingVariant,
    /// Vector size for word and shared-character embeddings.
    #[serde(default)]
    pub dim: usize,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    /// Half-width of the initial independent-character grid.
    #[serde(default = "default_ice_scale")]
    pub ice_scale: f64,
    #[serde(default)]
    pub vocab_threshold: VocabThreshold,
}

fn default_ice_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub embedding: EmbeddingConfig,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default = "one")]
    pub chop_count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkConfig {
    /// Embedding, one LSTM, and a sigmoid unit.
    pub fn lstm_classifier(embedding: EmbeddingConfig, hidden: usize) -> Self {
        Self {
            embedding,
            layers: vec![
                LayerSpec::Lstm { hidden },
                LayerSpec::Dense {
                    units: 1,
                    activation: Activation::Linear,
                },
                LayerSpec::Sigmoid,
            ],
            optimizer: AdamConfig::default(),
            chop_count: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SeqLayer {
    Lstm(Lstm),
    Irnn(Irnn),
    Conv(Conv1d),
    Pool(MaxPool1d),
}

#[derive(Debug, Clone)]
enum SeqCache {
    Lstm(LstmCache),
    Irnn(IrnnCache),
    Conv(Conv1dCache),
    Pool(PoolCache),
}

impl SeqLayer {
    fn params(&self) -> Vec<&Tensor> {
        match self {
            SeqLayer::Lstm(l) => l.params(),
            SeqLayer::Irnn(l) => l.params(),
            SeqLayer::Conv(l) => l.params(),
            SeqLayer::Pool(_) => vec![],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            SeqLayer::Lstm(l) => l.params_mut(),
            SeqLayer::Irnn(l) => l.params_mut(),
            SeqLayer::Conv(l) => l.params_mut(),
            SeqLayer::Pool(_) => vec![],
        }
    }

    fn forward(&self, xs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, SeqCache)> {
        Ok(match self {
            SeqLayer::Lstm(l) => {
                let (y, c) = l.forward(xs)?;
                (y, SeqCache::Lstm(c))
            }
            SeqLayer::Irnn(l) => {
                let (y, c) = l.forward(xs)?;
                (y, SeqCache::Irnn(c))
            }
            SeqLayer::Conv(l) => {
                let (y, c) = l.forward(xs)?;
                (y, SeqCache::Conv(c))
            }
            SeqLayer::Pool(l) => {
                let (y, c) = l.forward(xs)?;
                (y, SeqCache::Pool(c))
            }
        })
    }

    fn backward(&self, cache: &SeqCache, up: &[Vec<f64>], grads: &mut [Tensor]) -> Vec<Vec<f64>> {
        match (self, cache) {
            (SeqLayer::Lstm(l), SeqCache::Lstm(c)) => l.backward(c, up, grads),
            (SeqLayer::Irnn(l), SeqCache::Irnn(c)) => l.backward(c, up, grads),
            (SeqLayer::Conv(l), SeqCache::Conv(c)) => l.backward(c, up, grads),
            (SeqLayer::Pool(l), SeqCache::Pool(c)) => l.backward(c, up),
            _ => unreachable!("cache built by the same layer"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reduce {
    Last,
    Max,
}

#[derive(Debug, Clone)]
enum ReduceCache {
    Last(usize),
    Max(PoolCache),
}

#[derive(Debug, Clone, PartialEq)]
enum HeadLayer {
    Dense(Dense),
    Sigmoid,
}

#[derive(Debug, Clone)]
enum HeadCache {
    Dense(DenseCache),
    Sigmoid(Vec<f64>),
}

#[derive(Debug, Clone)]
struct ChunkCache {
    layers: Vec<SeqCache>,
    reduce: ReduceCache,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    tokens: Tokens,
    chunk_len: usize,
    total_len: usize,
    chunks: Vec<ChunkCache>,
    /// Winning chunk per feature.
    chunk_argmax: Vec<usize>,
    head: Vec<HeadCache>,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: NetworkConfig,
    vocab: Option<Vocabulary>,
    embedding: EmbeddingTable,
    seq_layers: Vec<SeqLayer>,
    reduce: Reduce,
    head: Vec<HeadLayer>,
}

impl Model {
    /// Builds a freshly initialized model. `vocab` is required for word
    /// embeddings and ignored otherwise.
    pub fn new<R: Rng + ?Sized>(
        config: NetworkConfig,
        specs: &[VariableSpec],
        vocab: Option<Vocabulary>,
        rng: &mut R,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidConfig("no variables".into()));
        }
        if config.chop_count == 0 {
            return Err(Error::InvalidConfig("chop_count must be at least 1".into()));
        }
        let emb = &config.embedding;
        let (embedding, vocab) = match emb.variant {
            EmbeddingVariant::Wde => {
                let vocab = vocab.ok_or_else(|| {
                    Error::InvalidConfig("word embedding needs a vocabulary".into())
                })?;
                require_dim(emb.dim)?;
                (
                    EmbeddingTable::new_word(emb.dim, vocab.len(), emb.init_scale, rng),
                    Some(vocab),
                )
            }
            EmbeddingVariant::Sce => {
                require_dim(emb.dim)?;
                let sizes: Vec<usize> = specs.iter().map(|s| s.alphabet_size).collect();
                (
                    EmbeddingTable::new_shared(emb.dim, &sizes, emb.init_scale, rng),
                    None,
                )
            }
            EmbeddingVariant::Ice => {
                if !(emb.ice_scale > 0.0) {
                    return Err(Error::InvalidConfig("ice_scale must be positive".into()));
                }
                (
                    EmbeddingTable::new_independent(specs, emb.ice_scale, rng),
                    None,
                )
            }
        };

        let mut width = embedding.output_dim();
        let mut seq_layers = Vec::new();
        let mut head = Vec::new();
        let mut reduce = Reduce::Last;
        let mut in_head = false;
        for spec in &config.layers {
            let sequence_layer = matches!(
                spec,
                LayerSpec::Lstm { .. }
                    | LayerSpec::Irnn { .. }
                    | LayerSpec::Conv1d { .. }
                    | LayerSpec::Maxpool1d { .. }
                    | LayerSpec::GlobalMaxpool
            );
            if sequence_layer && in_head {
                return Err(Error::InvalidConfig(format!(
                    "sequence layer {spec:?} after the sequence was reduced"
                )));
            }
            match *spec {
                LayerSpec::Lstm { hidden } => {
                    require_positive("lstm hidden", hidden)?;
                    seq_layers.push(SeqLayer::Lstm(Lstm::new(width, hidden, rng)));
                    width = hidden;
                }
                LayerSpec::Irnn { hidden } => {
                    require_positive("irnn hidden", hidden)?;
                    seq_layers.push(SeqLayer::Irnn(Irnn::new(width, hidden, rng)));
                    width = hidden;
                }
                LayerSpec::Conv1d {
                    filters,
                    kernel,
                    stride,
                } => {
                    require_positive("conv1d filters", filters)?;
                    require_positive("conv1d kernel", kernel)?;
                    require_positive("conv1d stride", stride)?;
                    seq_layers.push(SeqLayer::Conv(Conv1d::new(width, filters, kernel, stride, rng)));
                    width = filters;
                }
                LayerSpec::Maxpool1d { size, stride } => {
                    require_positive("maxpool1d size", size)?;
                    require_positive("maxpool1d stride", stride)?;
                    seq_layers.push(SeqLayer::Pool(MaxPool1d { size, stride }));
                }
                LayerSpec::GlobalMaxpool => {
                    reduce = Reduce::Max;
                    in_head = true;
                }
                LayerSpec::Dense { units, activation } => {
                    require_positive("dense units", units)?;
                    head.push(HeadLayer::Dense(Dense::new(width, units, activation, rng)));
                    width = units;
                    in_head = true;
                }
                LayerSpec::Sigmoid => {
                    head.push(HeadLayer::Sigmoid);
                    in_head = true;
                }
            }
        }
        if head.last() != Some(&HeadLayer::Sigmoid) || width != 1 {
            return Err(Error::InvalidConfig(
                "layer stack must end in a single sigmoid output".into(),
            ));
        }
        Ok(Self {
            config,
            vocab,
            embedding,
            seq_layers,
            reduce,
            head,
        })
    }

    /// Rebuilds a model with the given parameter values (in [`params`](Self::params) order).
    pub fn from_parameters(
        config: NetworkConfig,
        specs: &[VariableSpec],
        vocab: Option<Vocabulary>,
        tensors: Vec<Tensor>,
    ) -> Result<Self> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut model = Self::new(config, specs, vocab, &mut rng)?;
        let mut slots = model.params_mut();
        if slots.len() != tensors.len() {
            return Err(Error::ShapeMismatch(format!(
                "model has {} parameter tensors, got {}",
                slots.len(),
                tensors.len()
            )));
        }
        for (slot, t) in slots.iter_mut().zip(tensors) {
            if slot.shape() != t.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "parameter shape {:?}, got {:?}",
                    slot.shape(),
                    t.shape()
                )));
            }
            **slot = t;
        }
        Ok(model)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        self.vocab.as_ref()
    }

    pub fn embedding(&self) -> &EmbeddingTable {
        &self.embedding
    }

    pub fn embedding_mut(&mut self) -> &mut EmbeddingTable {
        &mut self.embedding
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = self.embedding.params();
        for l in &self.seq_layers {
            out.extend(l.params());
        }
        for l in &self.head {
            if let HeadLayer::Dense(d) = l {
                out.extend(d.params());
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.embedding.params_mut();
        for l in &mut self.seq_layers {
            out.extend(l.params_mut());
        }
        for l in &mut self.head {
            if let HeadLayer::Dense(d) = l {
                out.extend(d.params_mut());
            }
        }
        out
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params().iter().map(|t| t.zeros_like()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Turns step symbol tuples into embedding tokens.
    pub fn tokens(&self, steps: &[Vec<u32>]) -> Tokens {
        match &self.vocab {
            Some(v) => Tokens::Words(steps.iter().map(|s| v.index(s)).collect()),
            None => Tokens::Symbols(steps.to_vec()),
        }
    }

    pub fn embed(&self, steps: &[Vec<u32>]) -> Result<Vec<Vec<f64>>> {
        self.embedding.forward(&self.tokens(steps))
    }

    fn encode_chunk(&self, xs: &[Vec<f64>]) -> Result<(Vec<f64>, ChunkCache)> {
        let mut caches = Vec::with_capacity(self.seq_layers.len());
        let mut cur = xs.to_vec();
        for layer in &self.seq_layers {
            let (next, cache) = layer.forward(&cur)?;
            caches.push(cache);
            cur = next;
        }
        let (feature, reduce) = match self.reduce {
            Reduce::Last => {
                let last = cur.last().ok_or(Error::EmptySequence)?.clone();
                (last, ReduceCache::Last(cur.len()))
            }
            Reduce::Max => {
                let (f, c) = global_max_pool(&cur)?;
                (f, ReduceCache::Max(c))
            }
        };
        Ok((
            feature,
            ChunkCache {
                layers: caches,
                reduce,
            },
        ))
    }

    /// Feature vector of a whole embedded sequence, no chopping.
    pub fn encode(&self, embedded: &[Vec<f64>]) -> Result<Vec<f64>> {
        if embedded.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(self.encode_chunk(embedded)?.0)
    }

    /// Encodes `chop_count` contiguous chunks independently (in parallel)
    /// and takes the per-feature maximum.
    pub fn chop_and_pool(&self, embedded: &[Vec<f64>], chop_count: usize) -> Result<Vec<f64>> {
        if embedded.is_empty() {
            return Err(Error::EmptySequence);
        }
        if chop_count == 0 {
            return Err(Error::InvalidConfig("chop_count must be at least 1".into()));
        }
        let chunk_len = embedded.len().div_ceil(chop_count);
        let features = embedded
            .par_chunks(chunk_len)
            .map(|c| self.encode_chunk(c).map(|(f, _)| f))
            .collect::<Result<Vec<_>>>()?;
        Ok(max_features(features).0)
    }

    pub fn forward_cached(&self, steps: &[Vec<u32>]) -> Result<ForwardCache> {
        if steps.is_empty() {
            return Err(Error::EmptySequence);
        }
        let tokens = self.tokens(steps);
        let embedded = self.embedding.forward(&tokens)?;
        let chunk_len = embedded.len().div_ceil(self.config.chop_count);
        let mut features = Vec::new();
        let mut chunks = Vec::new();
        for chunk in embedded.chunks(chunk_len) {
            let (f, c) = self.encode_chunk(chunk)?;
            features.push(f);
            chunks.push(c);
        }
        let (mut x, chunk_argmax) = max_features(features);
        let mut head = Vec::with_capacity(self.head.len());
        for layer in &self.head {
            match layer {
                HeadLayer::Dense(d) => {
                    let (y, c) = d.forward(&x);
                    head.push(HeadCache::Dense(c));
                    x = y;
                }
                HeadLayer::Sigmoid => {
                    x.iter_mut().for_each(|v| *v = sigmoid(*v));
                    head.push(HeadCache::Sigmoid(x.clone()));
                }
            }
        }
        Ok(ForwardCache {
            total_len: embedded.len(),
            tokens,
            chunk_len,
            chunks,
            chunk_argmax,
            head,
            output: x[0],
        })
    }

    /// Predicted event probability for one input sequence.
    pub fn predict(&self, steps: &[Vec<u32>]) -> Result<f64> {
        Ok(self.forward_cached(steps)?.output)
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: f64, grads: &mut [Tensor]) -> Result<()> {
        let n_emb = self.embedding.params().len();
        let seq_counts: Vec<usize> = self.seq_layers.iter().map(|l| l.params().len()).collect();
        let n_seq: usize = seq_counts.iter().sum();
        let (emb_grads, rest) = grads.split_at_mut(n_emb);
        let (seq_grads, head_grads) = rest.split_at_mut(n_seq);

        let mut g = vec![d_output];
        let mut head_offset = head_grads.len();
        for (layer, cache) in self.head.iter().zip(&cache.head).rev() {
            match (layer, cache) {
                (HeadLayer::Dense(d), HeadCache::Dense(c)) => {
                    head_offset -= 2;
                    g = d.backward(c, &g, &mut head_grads[head_offset..head_offset + 2]);
                }
                (HeadLayer::Sigmoid, HeadCache::Sigmoid(s)) => {
                    for (gi, si) in g.iter_mut().zip(s) {
                        *gi *= si * (1.0 - si);
                    }
                }
                _ => unreachable!("cache built by the same layer"),
            }
        }

        let mut d_embedded = Vec::with_capacity(cache.total_len);
        for (ci, chunk) in cache.chunks.iter().enumerate() {
            let gf: Vec<f64> = g
                .iter()
                .zip(&cache.chunk_argmax)
                .map(|(&gk, &arg)| if arg == ci { gk } else { 0.0 })
                .collect();
            let mut up = match &chunk.reduce {
                ReduceCache::Last(len) => {
                    let mut up = vec![vec![0.0; gf.len()]; *len];
                    up[len - 1] = gf;
                    up
                }
                ReduceCache::Max(pc) => route_max_grad(pc, &[gf]),
            };
            let mut offset = n_seq;
            for ((layer, lc), &count) in self
                .seq_layers
                .iter()
                .zip(&chunk.layers)
                .zip(&seq_counts)
                .rev()
            {
                offset -= count;
                up = layer.backward(lc, &up, &mut seq_grads[offset..offset + count]);
            }
            d_embedded.extend(up);
        }
        debug_assert_eq!(d_embedded.len(), cache.total_len);
        debug_assert!(cache.chunk_len > 0);
        self.embedding.backward(&cache.tokens, &d_embedded, emb_grads)
    }

    /// Forward and backward for one weighted sample. The loss contribution
    /// is `weight * bce / norm`; returns `(prediction, loss)`.
    pub fn accumulate_sample(
        &self,
        steps: &[Vec<u32>],
        target: f64,
        weight: f64,
        norm: f64,
        grads: &mut [Tensor],
    ) -> Result<(f64, f64)> {
        let cache = self.forward_cached(steps)?;
        let p = cache.output;
        let loss = weight * bce(target, p) / norm;
        self.backward(&cache, bce_grad(target, p, weight, norm), grads)?;
        Ok((p, loss))
    }

    /// Re-sorts ordered independent-character rows.
    pub fn project(&mut self) {
        self.embedding.project();
    }
}

fn max_features(features: Vec<Vec<f64>>) -> (Vec<f64>, Vec<usize>) {
    let mut iter = features.into_iter();
    let mut best = iter.next().expect("at least one chunk");
    let mut arg = vec![0; best.len()];
    for (c, f) in iter.enumerate() {
        for k in 0..best.len() {
            if f[k] > best[k] {
                best[k] = f[k];
                arg[k] = c + 1;
            }
        }
    }
    (best, arg)
}

fn require_dim(dim: usize) -> Result<()> {
    require_positive("embedding dim", dim)
}

fn require_positive(what: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::InvalidConfig(format!("{what} must be positive")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn specs() -> Vec<VariableSpec> {
        vec![
            VariableSpec::continuous("a", vec![0.0, 1.0, 2.0]).unwrap(),
            VariableSpec::categorical("b", vec!["x".into(), "y".into()], false, false).unwrap(),
        ]
    }

    fn emb(variant: EmbeddingVariant) -> EmbeddingConfig {
        EmbeddingConfig {
            variant,
            dim: 3,
            init_scale: 0.5,
            ice_scale: 1.0,
            vocab_threshold: VocabThreshold::MinCount(1),
        }
    }

    #[test]
    fn rejects_bad_stacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut cfg = NetworkConfig::lstm_classifier(emb(EmbeddingVariant::Sce), 4);
        cfg.layers.pop();
        assert!(Model::new(cfg, &specs(), None, &mut rng).is_err());

        let mut cfg = NetworkConfig::lstm_classifier(emb(EmbeddingVariant::Sce), 4);
        cfg.layers.push(LayerSpec::Lstm { hidden: 2 });
        assert!(Model::new(cfg, &specs(), None, &mut rng).is_err());

        let cfg = NetworkConfig::lstm_classifier(emb(EmbeddingVariant::Wde), 4);
        assert!(Model::new(cfg, &specs(), None, &mut rng).is_err());

        let mut cfg = NetworkConfig::lstm_classifier(emb(EmbeddingVariant::Ice), 4);
        cfg.chop_count = 0;
        assert!(Model::new(cfg, &specs(), None, &mut rng).is_err());
    }

    #[test]
    fn conv_stack_reports_short_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut cfg = NetworkConfig::lstm_classifier(emb(EmbeddingVariant::Sce), 2);
        cfg.layers.insert(
            0,
            LayerSpec::Conv1d {
                filters: 2,
                kernel: 3,
                stride: 1,
            },
        );
        let model = Model::new(cfg, &specs(), None, &mut rng).unwrap();
        assert!(model.predict(&[vec![0, 1], vec![1, 1], vec![2, 0]]).is_ok());
        assert!(matches!(
            model.predict(&[vec![0, 1], vec![1, 1]]),
            Err(Error::SequenceTooShort { .. })
        ));
        assert!(matches!(model.predict(&[]), Err(Error::EmptySequence)));
    }

    #[test]
    fn from_parameters_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = NetworkConfig::lstm_classifier(emb(EmbeddingVariant::Ice), 3);
        let model = Model::new(cfg.clone(), &specs(), None, &mut rng).unwrap();
        let tensors: Vec<Tensor> = model.params().into_iter().cloned().collect();
        let rebuilt = Model::from_parameters(cfg.clone(), &specs(), None, tensors.clone()).unwrap();
        assert_eq!(model, rebuilt);
        let mut short = tensors;
        short.pop();
        assert!(Model::from_parameters(cfg, &specs(), None, short).is_err());
    }

    #[test]
    fn chopping_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = NetworkConfig::lstm_classifier(emb(EmbeddingVariant::Sce), 3);
        let model = Model::new(cfg, &specs(), None, &mut rng).unwrap();
        let steps: Vec<Vec<u32>> = (0..7).map(|i| vec![i % 4, i % 2]).collect();
        let e = model.embed(&steps).unwrap();
        assert_eq!(model.chop_and_pool(&e, 1).unwrap(), model.encode(&e).unwrap());

        // one chunk per step: max of single-step encodings
        let per_step: Vec<Vec<f64>> = e.iter().map(|s| model.encode(std::slice::from_ref(s)).unwrap()).collect();
        let expect = max_features(per_step).0;
        assert_eq!(model.chop_and_pool(&e, 7).unwrap(), expect);
        assert!(matches!(model.chop_and_pool(&[], 2), Err(Error::EmptySequence)));
    }
}
