//! Symbolization of heterogeneous multivariate time series and small
//! neural event classifiers trained end-to-end on learned symbol embeddings.
//!
//! The pipeline runs raw CSV rows through [`data`] (gap filling, partition
//! learning, symbolization), [`labeling`] (horizon targets and temporal
//! weights), an [`embedding`] scheme inside an [`nn::Model`], and
//! [`metrics`] for evaluation. [`pipeline`] wires the steps together the way
//! the command-line tool runs them.

pub mod artifact;
pub mod checkpoint;
pub mod data;
pub mod embedding;
pub mod error;
pub mod labeling;
pub mod metrics;
pub mod nn;
pub mod partition;
pub mod pipeline;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, ErrorKind, Result};
