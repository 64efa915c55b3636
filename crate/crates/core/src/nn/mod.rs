//! Small dense neural-network toolkit: layers with hand-written backward
//! passes, a weighted cross-entropy loss, and Adam.

pub mod adam;
pub mod conv;
pub mod dense;
pub mod loss;
pub mod network;
pub mod recurrent;
pub mod train;

pub use adam::{Adam, AdamConfig};
pub use dense::Activation;
pub use network::{EmbeddingConfig, ForwardCache, LayerSpec, Model, NetworkConfig};
pub use train::{score, train, EpochRecord, TrainConfig, TrainOutcome, TrainSample};
