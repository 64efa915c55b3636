//! Versioned model container.
//!
//! Layout: the 8-byte magic `SYMBEDCK`, a little-endian `u32` format version,
//! a little-endian `u64` header length, the compact JSON header, then every
//! parameter tensor as little-endian `f64` values in model parameter order.
//! Serialization is canonical, so load followed by save reproduces the
//! original bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::data::Schema;
use crate::embedding::Vocabulary;
use crate::error::{Error, Result};
use crate::labeling::LabelingConfig;
use crate::nn::{Model, NetworkConfig};
use crate::partition::VariableSpec;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"SYMBEDCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub best_epoch: usize,
    pub final_loss: Option<f64>,
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub schema: Schema,
    pub variables: Vec<VariableSpec>,
    pub labeling: LabelingConfig,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct Header {
    network: NetworkConfig,
    schema: Schema,
    schema_digest: String,
    variables: Vec<VariableSpec>,
    partition_digest: String,
    labeling: LabelingConfig,
    vocabulary: Option<Vocabulary>,
    shapes: Vec<Vec<usize>>,
    payload_digest: String,
    metadata: TrainingMetadata,
}

/// Digest identifying a learned partition.
pub fn partition_digest(variables: &[VariableSpec]) -> Result<String> {
    artifact::digest_json(variables)
}

/// Digest identifying a data schema.
pub fn schema_digest(schema: &Schema) -> Result<String> {
    artifact::digest_json(schema)
}

impl Checkpoint {
    pub fn partition_digest(&self) -> Result<String> {
        partition_digest(&self.variables)
    }

    pub fn schema_digest(&self) -> Result<String> {
        schema_digest(&self.schema)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let params = self.model.params();
        let mut payload = Vec::with_capacity(8 * params.iter().map(|t| t.len()).sum::<usize>());
        for t in &params {
            for x in t.data() {
                payload.extend_from_slice(&x.to_le_bytes());
            }
        }
        let header = Header {
            network: self.model.config().clone(),
            schema: self.schema.clone(),
            schema_digest: self.schema_digest()?,
            variables: self.variables.clone(),
            partition_digest: self.partition_digest()?,
            labeling: self.labeling,
            vocabulary: self.model.vocabulary().cloned(),
            shapes: params.iter().map(|t| t.shape().to_vec()).collect(),
            payload_digest: artifact::digest_bytes(&payload),
            metadata: self.metadata.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::json("checkpoint header", e))?;
        let mut out = Vec::with_capacity(20 + json.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("missing magic bytes"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let header_end = usize::try_from(header_len)
            .ok()
            .and_then(|l| l.checked_add(20))
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[20..header_end])
            .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
        let payload = &bytes[header_end..];
        if artifact::digest_bytes(payload) != header.payload_digest {
            return Err(Error::DigestMismatch {
                expected: header.payload_digest,
                found: artifact::digest_bytes(payload),
            });
        }
        let expected_len: usize = header.shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        if payload.len() != expected_len * 8 {
            return Err(bad("payload size does not match tensor shapes"));
        }
        if partition_digest(&header.variables)? != header.partition_digest {
            return Err(Error::DigestMismatch {
                expected: header.partition_digest,
                found: partition_digest(&header.variables)?,
            });
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let tensors = header
            .shapes
            .iter()
            .map(|shape| {
                let n = shape.iter().product();
                Tensor::from_vec(shape, values.by_ref().take(n).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let model = Model::from_parameters(header.network, &header.variables, header.vocabulary, tensors)?;
        Ok(Self {
            model,
            schema: header.schema,
            variables: header.variables,
            labeling: header.labeling,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        artifact::write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&artifact::read_bytes(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingVariant, VocabThreshold};
    use crate::nn::EmbeddingConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn checkpoint(variant: EmbeddingVariant) -> Checkpoint {
        let schema: Schema = serde_json::from_str(
            r#"{"variables": [
                {"name": "a", "kind": "continuous", "alphabet_size": 3},
                {"name": "b", "kind": "categorical"}
            ]}"#,
        )
        .unwrap();
        let variables = vec![
            VariableSpec::continuous("a", vec![0.1, 1.0 / 3.0]).unwrap(),
            VariableSpec::categorical("b", vec!["x".into(), "y".into()], false, false).unwrap(),
        ];
        let vocab = Vocabulary::build(
            vec![vec![0, 1], vec![2, 0], vec![0, 1]],
            VocabThreshold::MinCount(1),
        )
        .unwrap();
        let cfg = NetworkConfig::lstm_classifier(
            EmbeddingConfig {
                variant,
                dim: 2,
                init_scale: 0.05,
                ice_scale: 1.0,
                vocab_threshold: VocabThreshold::MinCount(1),
            },
            3,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = Model::new(cfg, &variables, Some(vocab), &mut rng).unwrap();
        Checkpoint {
            model,
            schema,
            variables,
            labeling: LabelingConfig {
                horizon: 3,
                history: 2,
                use_temporal_weights: true,
                include_truncated: false,
            },
            metadata: TrainingMetadata {
                epochs: 4,
                best_epoch: 3,
                final_loss: Some(0.123456789),
                seed: 11,
                config_digest: "abc".into(),
            },
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        for variant in [EmbeddingVariant::Wde, EmbeddingVariant::Sce, EmbeddingVariant::Ice] {
            let ck = checkpoint(variant);
            let bytes = ck.to_bytes().unwrap();
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.to_bytes().unwrap(), bytes);
            let steps = vec![vec![0, 1], vec![2, 0], vec![1, 1]];
            assert_eq!(
                back.model.predict(&steps).unwrap().to_bits(),
                ck.model.predict(&steps).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn save_and_load_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.ck");
        let ck = checkpoint(EmbeddingVariant::Sce);
        ck.save(&p).unwrap();
        assert_eq!(Checkpoint::load(&p).unwrap(), ck);
    }

    #[test]
    fn detects_corruption() {
        let bytes = checkpoint(EmbeddingVariant::Ice).to_bytes().unwrap();
        assert!(matches!(Checkpoint::from_bytes(&bytes[..10]), Err(Error::Checkpoint(_))));
        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&flipped), Err(Error::DigestMismatch { .. })));
        let mut versioned = bytes;
        versioned[8] = 9;
        assert!(matches!(Checkpoint::from_bytes(&versioned), Err(Error::Checkpoint(_))));
    }
}
