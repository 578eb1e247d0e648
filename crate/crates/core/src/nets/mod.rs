//! Network definitions: the dilated audio classifier, a compact strided
//! visual backbone, the segment-consensus wrapper around it, and the shared
//! training loop.

pub mod backbone;
pub mod dilated;
pub mod train;
pub mod tsn;

pub use backbone::{VisualBackbone, VisualBackboneConfig};
pub use dilated::{ConvStage, DilatedNet, DilatedNetConfig, SpectrogramBatcher};
pub use train::{
    accuracy_of, train_stream, write_history_csv, EpochStats, StreamBatcher, TrainConfig,
    TrainOutcome,
};
pub use tsn::{TsnBatcher, TsnModel, DEFAULT_TEST_SAMPLES};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

/// Uniform fan-in initialization: values drawn from
/// U(-sqrt(6/fan_in), +sqrt(6/fan_in)), the usual scheme for relu stacks.
pub(crate) fn init_uniform(shape: Vec<usize>, fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor<f32> {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let values = (0..n)
        .map(|_| rng.gen_range(-bound..bound) as f32)
        .collect();
    Tensor::from_vec(shape, values).expect("shape matches count")
}
