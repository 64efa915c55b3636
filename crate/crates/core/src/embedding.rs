//! Trainable symbol embeddings.
//!
//! Three schemes turn a step's symbol tuple into a vector:
//!
//! * **word** (`wde`): the whole tuple is a vocabulary token with its own
//!   `d`-vector; rare and unseen tuples share an out-of-vocabulary column.
//! * **shared character** (`sce`): every symbol of every variable has a
//!   `d`-vector and a step is the sum over variables.
//! * **independent character** (`ice`): every symbol has a scalar and a step
//!   is the `m`-vector of its variables' scalars. Rows of ordered variables are
//!   kept sorted by [`ice_project`] after every optimizer step.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::VariableSpec;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingVariant {
    Wde,
    Sce,
    Ice,
}

impl std::fmt::Display for EmbeddingVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmbeddingVariant::Wde => "wde",
            EmbeddingVariant::Sce => "sce",
            EmbeddingVariant::Ice => "ice",
        })
    }
}

/// Which words make it into the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabThreshold {
    /// Keep words seen at least this many times.
    MinCount(u64),
    /// Keep words whose share of all training steps is at least this.
    MinRelative(f64),
}

impl Default for VocabThreshold {
    fn default() -> Self {
        VocabThreshold::MinCount(2)
    }
}

/// Word (symbol tuple) to column index. Index 0 is the OOV column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VocabularyRecord", try_from = "VocabularyRecord")]
pub struct Vocabulary {
    words: HashMap<Vec<u32>, usize>,
    oov_index: usize,
    threshold: VocabThreshold,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    words: Vec<(Vec<u32>, usize)>,
    oov_index: usize,
    threshold: VocabThreshold,
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        let mut words: Vec<_> = v.words.into_iter().collect();
        words.sort_by_key(|(_, i)| *i);
        Self {
            words,
            oov_index: v.oov_index,
            threshold: v.threshold,
        }
    }
}

impl TryFrom<VocabularyRecord> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRecord) -> Result<Self> {
        let size = r.words.len() + 1;
        let mut seen = vec![false; size];
        seen[r.oov_index.min(size - 1)] = r.oov_index < size;
        for (_, i) in &r.words {
            if *i >= size || seen[*i] {
                return Err(Error::InvalidConfig(format!("bad vocabulary index {i}")));
            }
            seen[*i] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidConfig("vocabulary indices not contiguous".into()));
        }
        Ok(Self {
            words: r.words.into_iter().collect(),
            oov_index: r.oov_index,
            threshold: r.threshold,
        })
    }
}

impl Vocabulary {
    /// Counts every step tuple of the training data and keeps the frequent
    /// ones, indexed in lexicographic order after the OOV column.
    pub fn build<I>(steps: I, threshold: VocabThreshold) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        let mut total = 0u64;
        for w in steps {
            *counts.entry(w).or_insert(0) += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        let keep = |c: u64| match threshold {
            VocabThreshold::MinCount(min) => c >= min,
            VocabThreshold::MinRelative(r) => c as f64 / total as f64 >= r,
        };
        let words = counts
            .into_iter()
            .filter(|&(_, c)| keep(c))
            .enumerate()
            .map(|(i, (w, _))| (w, i + 1))
            .collect();
        Ok(Self {
            words,
            oov_index: 0,
            threshold,
        })
    }

    /// Vocabulary size including the OOV column.
    pub fn len(&self) -> usize {
        self.words.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn oov_index(&self) -> usize {
        self.oov_index
    }

    pub fn threshold(&self) -> VocabThreshold {
        self.threshold
    }

    pub fn index(&self, word: &[u32]) -> usize {
        self.words.get(word).copied().unwrap_or(self.oov_index)
    }

    pub fn contains(&self, word: &[u32]) -> bool {
        self.words.contains_key(word)
    }
}

/// Per-step embedding inputs: vocabulary indices for word embeddings, raw
/// symbol tuples for the character-wise schemes.
#[derive(Debug, Clone, PartialEq)]
pub enum Tokens {
    Words(Vec<usize>),
    Symbols(Vec<Vec<u32>>),
}

impl Tokens {
    pub fn len(&self) -> usize {
        match self {
            Tokens::Words(w) => w.len(),
            Tokens::Symbols(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingTable {
    /// `d x v`
    Word(Tensor),
    /// One `d x s_i` matrix per variable.
    Shared(Vec<Tensor>),
    /// One `1 x s_i` row per variable.
    Independent { rows: Vec<Tensor>, ordered: Vec<bool> },
}

impl EmbeddingTable {
    pub fn new_word<R: Rng + ?Sized>(dim: usize, vocab_size: usize, scale: f64, rng: &mut R) -> Self {
        EmbeddingTable::Word(Tensor::uniform(&[dim, vocab_size], scale, rng))
    }

    pub fn new_shared<R: Rng + ?Sized>(
        dim: usize,
        alphabet_sizes: &[usize],
        scale: f64,
        rng: &mut R,
    ) -> Self {
        EmbeddingTable::Shared(
            alphabet_sizes
                .iter()
                .map(|&s| Tensor::uniform(&[dim, s], scale, rng))
                .collect(),
        )
    }

    pub fn new_independent<R: Rng + ?Sized>(specs: &[VariableSpec], scale: f64, rng: &mut R) -> Self {
        EmbeddingTable::Independent {
            rows: ice_init(specs, scale, rng),
            ordered: specs.iter().map(|s| s.ordered).collect(),
        }
    }

    pub fn variant(&self) -> EmbeddingVariant {
        match self {
            EmbeddingTable::Word(_) => EmbeddingVariant::Wde,
            EmbeddingTable::Shared(_) => EmbeddingVariant::Sce,
            EmbeddingTable::Independent { .. } => EmbeddingVariant::Ice,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            EmbeddingTable::Word(t) => t.shape()[0],
            EmbeddingTable::Shared(ts) => ts.first().map_or(0, |t| t.shape()[0]),
            EmbeddingTable::Independent { rows, .. } => rows.len(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            EmbeddingTable::Word(t) => vec![t],
            EmbeddingTable::Shared(ts) => ts.iter().collect(),
            EmbeddingTable::Independent { rows, .. } => rows.iter().collect(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            EmbeddingTable::Word(t) => vec![t],
            EmbeddingTable::Shared(ts) => ts.iter_mut().collect(),
            EmbeddingTable::Independent { rows, .. } => rows.iter_mut().collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn forward(&self, tokens: &Tokens) -> Result<Vec<Vec<f64>>> {
        match (self, tokens) {
            (EmbeddingTable::Word(t), Tokens::Words(w)) => wde_forward(w, t),
            (EmbeddingTable::Shared(ts), Tokens::Symbols(s)) => sce_forward(s, ts),
            (EmbeddingTable::Independent { rows, .. }, Tokens::Symbols(s)) => ice_forward(s, rows),
            _ => Err(Error::ShapeMismatch(
                "token kind does not match embedding variant".into(),
            )),
        }
    }

    /// Accumulates parameter gradients into `grads` (aligned with
    /// [`params`](Self::params)). Parameters not looked up get nothing.
    pub fn backward(&self, tokens: &Tokens, upstream: &[Vec<f64>], grads: &mut [Tensor]) -> Result<()> {
        if upstream.len() != tokens.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} upstream steps for {} tokens",
                upstream.len(),
                tokens.len()
            )));
        }
        let dim = self.output_dim();
        if let Some(g) = upstream.iter().find(|g| g.len() != dim) {
            return Err(Error::ShapeMismatch(format!(
                "upstream gradient of width {}, expected {dim}",
                g.len()
            )));
        }
        if grads.len() != self.params().len() {
            return Err(Error::ShapeMismatch("gradient buffer count".into()));
        }
        match (self, tokens) {
            (EmbeddingTable::Word(t), Tokens::Words(words)) => {
                let v = t.shape()[1];
                let grad = grads[0].data_mut();
                for (&w, g) in words.iter().zip(upstream) {
                    check_index(w, v)?;
                    for (r, gr) in g.iter().enumerate() {
                        grad[r * v + w] += gr;
                    }
                }
            }
            (EmbeddingTable::Shared(ts), Tokens::Symbols(steps)) => {
                for (step, g) in steps.iter().zip(upstream) {
                    check_arity(step, ts.len())?;
                    for ((&sym, t), grad) in step.iter().zip(ts).zip(grads.iter_mut()) {
                        let s = t.shape()[1];
                        check_index(sym as usize, s)?;
                        let grad = grad.data_mut();
                        for (r, gr) in g.iter().enumerate() {
                            grad[r * s + sym as usize] += gr;
                        }
                    }
                }
            }
            (EmbeddingTable::Independent { rows, .. }, Tokens::Symbols(steps)) => {
                for (step, g) in steps.iter().zip(upstream) {
                    check_arity(step, rows.len())?;
                    for (i, (&sym, row)) in step.iter().zip(rows).enumerate() {
                        check_index(sym as usize, row.len())?;
                        grads[i].data_mut()[sym as usize] += g[i];
                    }
                }
            }
            _ => {
                return Err(Error::ShapeMismatch(
                    "token kind does not match embedding variant".into(),
                ))
            }
        }
        Ok(())
    }

    /// Restores the order constraint on independent-character rows; a no-op
    /// for the other variants.
    pub fn project(&mut self) {
        if let EmbeddingTable::Independent { rows, ordered } = self {
            ice_project(rows, ordered);
        }
    }
}

fn check_index(index: usize, size: usize) -> Result<()> {
    if index >= size {
        Err(Error::IndexOutOfRange { index, size })
    } else {
        Ok(())
    }
}

fn check_arity(step: &[u32], m: usize) -> Result<()> {
    if step.len() != m {
        Err(Error::ShapeMismatch(format!(
            "step has {} symbols, embedding has {m} variables",
            step.len()
        )))
    } else {
        Ok(())
    }
}

/// Column lookup in a `d x v` word table.
pub fn wde_forward(word_indices: &[usize], table: &Tensor) -> Result<Vec<Vec<f64>>> {
    let (d, v) = (table.shape()[0], table.shape()[1]);
    word_indices
        .iter()
        .map(|&w| {
            check_index(w, v)?;
            Ok((0..d).map(|r| table.at(r, w)).collect())
        })
        .collect()
}

/// Sum over variables of each symbol's column.
pub fn sce_forward(steps: &[Vec<u32>], tables: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    let d = tables.first().map_or(0, |t| t.shape()[0]);
    steps
        .iter()
        .map(|step| {
            check_arity(step, tables.len())?;
            let mut out = vec![0.0; d];
            for (&sym, t) in step.iter().zip(tables) {
                check_index(sym as usize, t.shape()[1])?;
                for (r, o) in out.iter_mut().enumerate() {
                    *o += t.at(r, sym as usize);
                }
            }
            Ok(out)
        })
        .collect()
}

/// Per-variable scalars stacked into an `m`-vector.
pub fn ice_forward(steps: &[Vec<u32>], rows: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    steps
        .iter()
        .map(|step| {
            check_arity(step, rows.len())?;
            step.iter()
                .zip(rows)
                .map(|(&sym, row)| {
                    check_index(sym as usize, row.len())?;
                    Ok(row.data()[sym as usize])
                })
                .collect()
        })
        .collect()
}

/// Stable ascending sort of every ordered row.
pub fn ice_project(rows: &mut [Tensor], ordered: &[bool]) {
    for (row, &ord) in rows.iter_mut().zip(ordered) {
        if ord {
            row.data_mut().sort_by(f64::total_cmp);
        }
    }
}

/// Evenly spaced scalars in `[-scale, scale]`; shuffled for unordered rows.
pub fn ice_init<R: Rng + ?Sized>(specs: &[VariableSpec], scale: f64, rng: &mut R) -> Vec<Tensor> {
    specs
        .iter()
        .map(|spec| {
            let s = spec.alphabet_size;
            let mut values: Vec<f64> = (0..s)
                .map(|k| -scale + 2.0 * scale * k as f64 / (s - 1) as f64)
                .collect();
            if !spec.ordered {
                values.shuffle(rng);
            }
            Tensor::from_vec(&[1, s], values).expect("row shape")
        })
        .collect()
}

pub fn count_embedding_params(
    variant: EmbeddingVariant,
    alphabet_sizes: &[usize],
    dim: usize,
    vocab_size: usize,
) -> usize {
    let symbols: usize = alphabet_sizes.iter().sum();
    match variant {
        EmbeddingVariant::Wde => dim * vocab_size,
        EmbeddingVariant::Sce => dim * symbols,
        EmbeddingVariant::Ice => symbols,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::VariableSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn cont(name: &str, s: usize) -> VariableSpec {
        VariableSpec::continuous(name, (1..s).map(|k| k as f64).collect()).unwrap()
    }

    fn cat(name: &str, s: usize, ordered: bool) -> VariableSpec {
        VariableSpec::categorical(name, (0..s).map(|k| format!("c{k}")).collect(), ordered, false)
            .unwrap()
    }

    #[test]
    fn vocabulary_thresholds() {
        let v = Vocabulary::build(vec![vec![0, 4]; 5], VocabThreshold::MinCount(1)).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.index(&[0, 4]), 1);
        assert_eq!(v.index(&[1, 1]), v.oov_index());

        let steps = vec![vec![0], vec![0], vec![1], vec![2], vec![2], vec![2]];
        let v = Vocabulary::build(steps.clone(), VocabThreshold::MinCount(2)).unwrap();
        assert_eq!(v.len(), 3);
        assert!(!v.contains(&[1]));
        assert_eq!(v.index(&[1]), 0);

        let v = Vocabulary::build(steps, VocabThreshold::MinRelative(0.4)).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.contains(&[2]));

        assert!(matches!(
            Vocabulary::build(Vec::<Vec<u32>>::new(), VocabThreshold::MinCount(1)),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn vocabulary_serde_round_trip() {
        let v = Vocabulary::build(
            vec![vec![1, 2], vec![0, 0], vec![1, 2], vec![3, 1]],
            VocabThreshold::MinCount(1),
        )
        .unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(v, back);
        assert_eq!(json, serde_json::to_string(&back).unwrap());
        let bad = r#"{"words":[[[1],1],[[2],1]],"oov_index":0,"threshold":{"min_count":1}}"#;
        assert!(serde_json::from_str::<Vocabulary>(bad).is_err());
    }

    #[test]
    fn wde_lookup() {
        let t = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = wde_forward(&[2, 0, 2], &t).unwrap();
        assert_eq!(out[0], vec![3.0, 6.0]);
        assert_eq!(out[1], vec![1.0, 4.0]);
        assert_eq!(out[0], out[2]);
        assert!(matches!(
            wde_forward(&[3], &t),
            Err(Error::IndexOutOfRange { index: 3, size: 3 })
        ));
    }

    #[test]
    fn sce_sums_columns() {
        let v1 = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 10.0, 20.0]).unwrap();
        let v2 = Tensor::from_vec(&[2, 5], (0..10).map(f64::from).collect()).unwrap();
        // (a, e) -> v^1_a + v^2_e
        let out = sce_forward(&[vec![0, 4]], &[v1.clone(), v2.clone()]).unwrap();
        assert_eq!(out[0], vec![1.0 + 4.0, 10.0 + 9.0]);
        let zero = sce_forward(&[vec![1, 1]], &[v1.zeros_like(), v2.zeros_like()]).unwrap();
        assert_eq!(zero[0], vec![0.0, 0.0]);
        let single = sce_forward(&[vec![1]], std::slice::from_ref(&v1)).unwrap();
        assert_eq!(single[0], vec![2.0, 20.0]);
        assert!(sce_forward(&[vec![2, 0]], &[v1, v2]).is_err());
    }

    #[test]
    fn ice_stacks_scalars() {
        let r1 = Tensor::from_vec(&[1, 2], vec![-1.0, 1.0]).unwrap();
        let r2 = Tensor::from_vec(&[1, 5], vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let r3 = Tensor::from_vec(&[1, 3], vec![7.0, 8.0, 9.0]).unwrap();
        let out = ice_forward(&[vec![0, 4]], &[r1.clone(), r2.clone()]).unwrap();
        assert_eq!(out[0], vec![-1.0, 0.5]);
        let out = ice_forward(&[vec![1, 1, 2], vec![1, 1, 2]], &[r1, r2, r3]).unwrap();
        assert_eq!(out[0].len(), 3);
        assert_eq!(out[0], out[1]);
    }

    #[test]
    fn backward_accumulates_into_looked_up_columns() {
        let table = EmbeddingTable::Word(Tensor::zeros(&[2, 4]));
        let mut grads = vec![Tensor::zeros(&[2, 4])];
        let tokens = Tokens::Words(vec![1]);
        table.backward(&tokens, &[vec![0.5, -1.0]], &mut grads).unwrap();
        assert_eq!(grads[0].data(), &[0.0, 0.5, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);

        let mut grads = vec![Tensor::zeros(&[2, 4])];
        let tokens = Tokens::Words(vec![3, 3]);
        table
            .backward(&tokens, &[vec![1.0, 2.0], vec![1.0, 2.0]], &mut grads)
            .unwrap();
        assert_eq!(grads[0].at(0, 3), 2.0);
        assert_eq!(grads[0].at(1, 3), 4.0);
        assert_eq!(grads[0].data().iter().filter(|&&x| x != 0.0).count(), 2);

        assert!(matches!(
            table.backward(&tokens, &[vec![1.0, 2.0]], &mut grads),
            Err(Error::ShapeMismatch(_))
        ));
    }

    fn fd_check(table: &EmbeddingTable, tokens: &Tokens, upstream: &[Vec<f64>]) {
        // loss = sum of upstream . output, so d loss / d params = backward(upstream)
        let loss = |t: &EmbeddingTable| -> f64 {
            t.forward(tokens)
                .unwrap()
                .iter()
                .zip(upstream)
                .map(|(o, g)| o.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
                .sum()
        };
        let mut grads: Vec<Tensor> = table.params().iter().map(|t| t.zeros_like()).collect();
        table.backward(tokens, upstream, &mut grads).unwrap();
        let h = 1e-5;
        for (p, g) in grads.iter().enumerate() {
            for i in 0..g.len() {
                let mut plus = table.clone();
                plus.params_mut()[p].data_mut()[i] += h;
                let mut minus = table.clone();
                minus.params_mut()[p].data_mut()[i] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let an = g.data()[i];
                let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                assert!(err < 1e-6 || (fd - an).abs() < 1e-10, "param {p}[{i}]: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng();
        let specs = vec![cont("a", 3), cat("b", 4, false), cont("c", 2)];
        let steps: Vec<Vec<u32>> = vec![vec![0, 3, 1], vec![2, 0, 0], vec![0, 3, 1], vec![1, 1, 0]];
        let upstream3: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let sce = EmbeddingTable::new_shared(3, &[3, 4, 2], 0.5, &mut r);
        fd_check(&sce, &Tokens::Symbols(steps.clone()), &upstream3);
        let ice = EmbeddingTable::new_independent(&specs, 1.0, &mut r);
        fd_check(&ice, &Tokens::Symbols(steps), &upstream3);
        let wde = EmbeddingTable::new_word(3, 4, 0.5, &mut r);
        fd_check(&wde, &Tokens::Words(vec![0, 3, 3, 1]), &upstream3);
    }

    #[test]
    fn project_sorts_only_ordered_rows() {
        let mut rows = vec![
            Tensor::from_vec(&[1, 3], vec![0.3, 0.1, 0.2]).unwrap(),
            Tensor::from_vec(&[1, 3], vec![0.3, 0.1, 0.2]).unwrap(),
            Tensor::from_vec(&[1, 3], vec![0.1, 0.2, 0.3]).unwrap(),
        ];
        ice_project(&mut rows, &[true, false, true]);
        assert_eq!(rows[0].data(), &[0.1, 0.2, 0.3]);
        assert_eq!(rows[1].data(), &[0.3, 0.1, 0.2]);
        assert_eq!(rows[2].data(), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn init_is_evenly_spaced() {
        let mut r = rng();
        let rows = ice_init(&[cont("a", 4), cont("b", 2)], 1.0, &mut r);
        let expect = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0];
        for (a, b) in rows[0].data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let rows = ice_init(&[cont("b", 2)], 0.5, &mut r);
        assert_eq!(rows[0].data(), &[-0.5, 0.5]);

        let specs = [cat("u", 6, false)];
        let rows = ice_init(&specs, 1.0, &mut r);
        let mut sorted = rows[0].data().to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, ice_init(&[cat("o", 6, true)], 1.0, &mut r)[0].data());
    }

    #[test]
    fn param_counts() {
        assert_eq!(count_embedding_params(EmbeddingVariant::Wde, &[], 16, 509), 8144);
        assert_eq!(count_embedding_params(EmbeddingVariant::Sce, &[4; 14], 2, 0), 112);
        assert_eq!(count_embedding_params(EmbeddingVariant::Ice, &[4; 14], 0, 0), 56);

        let mut r = rng();
        let sizes = [3, 4, 2];
        let specs = vec![cont("a", 3), cat("b", 4, true), cont("c", 2)];
        let sce = EmbeddingTable::new_shared(5, &sizes, 0.05, &mut r);
        assert_eq!(sce.param_count(), count_embedding_params(EmbeddingVariant::Sce, &sizes, 5, 0));
        let ice = EmbeddingTable::new_independent(&specs, 1.0, &mut r);
        assert_eq!(ice.param_count(), count_embedding_params(EmbeddingVariant::Ice, &sizes, 0, 0));
        let wde = EmbeddingTable::new_word(4, 11, 0.05, &mut r);
        assert_eq!(wde.param_count(), count_embedding_params(EmbeddingVariant::Wde, &sizes, 4, 11));
    }

    #[test]
    fn variable_permutation() {
        let mut r = rng();
        let a = Tensor::uniform(&[2, 3], 1.0, &mut r);
        let b = Tensor::uniform(&[2, 4], 1.0, &mut r);
        let x = sce_forward(&[vec![2, 1]], &[a.clone(), b.clone()]).unwrap();
        let y = sce_forward(&[vec![1, 2]], &[b.clone(), a.clone()]).unwrap();
        for (p, q) in x[0].iter().zip(&y[0]) {
            assert!((p - q).abs() < 1e-15);
        }
        let ra = Tensor::uniform(&[1, 3], 1.0, &mut r);
        let rb = Tensor::uniform(&[1, 4], 1.0, &mut r);
        let x = ice_forward(&[vec![2, 1]], &[ra.clone(), rb.clone()]).unwrap();
        let y = ice_forward(&[vec![1, 2]], &[rb, ra]).unwrap();
        assert_eq!(x[0], vec![y[0][1], y[0][0]]);
    }
}
