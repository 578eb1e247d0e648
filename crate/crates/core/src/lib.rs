//! Audio-visual egocentric action recognition at desk scale.
//!
//! The crate covers the full pipeline: log-power spectrograms and a dilated
//! convolutional audio network, snippet-sampled visual streams with consensus
//! aggregation, late fusion of the modality scores, dataset partitioning, and
//! the evaluation protocol — all on a small deterministic autodiff engine so
//! every experiment reproduces bit-for-bit from a seed.

pub mod audio;
pub mod data;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod nets;
pub mod tensor;
pub mod video;

pub use error::{Error, Result};
