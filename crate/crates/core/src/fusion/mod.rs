//! Late fusion of modality streams: weighted score sums with a validation
//! grid search, and a two-layer fully connected head over concatenated
//! penultimate features with the source streams frozen.

mod head;
mod scores;
mod weighted;

pub use head::{
    train_fc_fusion, FcFusionConfig, FcFusionHead, FrozenStreams, FusionBatcher, FusionExample,
};
pub use scores::{concat_penultimate, StreamId, StreamScores, STREAM_ORDER};
pub use weighted::{grid_search_weights, weight_grid, weighted_sum_fuse, FusionWeights};
