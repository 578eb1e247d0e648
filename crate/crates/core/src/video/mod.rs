//! Visual front end: frame sequences, sparse temporal sampling with score
//! consensus, a frame-difference flow surrogate, frame file I/O, and spatial
//! augmentation.

mod augment;
mod flow;
mod io;
mod sampling;

pub use augment::{center_crop, crop, hflip, random_crop};
pub use flow::frame_diff_flow;
pub use io::{frame_file_name, load_frame_sequence, read_frame, write_frame, FRAME_MAGIC};
pub use sampling::{consensus_average, sample_test, sample_train, split_segments, SegmentPlan};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Which visual stream a frame sequence belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    /// 3-channel color frames.
    Rgb,
    /// 2-channel (dx, dy) motion surrogate frames.
    Flow,
}

impl Modality {
    pub fn channels(self) -> usize {
        match self {
            Modality::Rgb => 3,
            Modality::Flow => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Rgb => "rgb",
            Modality::Flow => "flow",
        }
    }
}

/// An ordered, uniformly shaped stack of C×H×W frames for one segment.
#[derive(Clone, Debug)]
pub struct FrameSequence {
    segment_id: String,
    modality: Modality,
    frames: Vec<Tensor<f32>>,
}

impl FrameSequence {
    pub fn new(
        segment_id: impl Into<String>,
        modality: Modality,
        frames: Vec<Tensor<f32>>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("frame sequence must hold at least one frame"));
        }
        let shape = frames[0].shape().to_vec();
        if shape.len() != 3 {
            return Err(Error::shape(format!(
                "frames must be C×H×W, got rank {}",
                shape.len()
            )));
        }
        if shape[0] != modality.channels() {
            return Err(Error::shape(format!(
                "{} frames must have {} channels, got {}",
                modality.as_str(),
                modality.channels(),
                shape[0]
            )));
        }
        if frames.iter().any(|f| f.shape() != shape) {
            return Err(Error::shape("frames differ in shape within one sequence"));
        }
        Ok(FrameSequence {
            segment_id: segment_id.into(),
            modality,
            frames,
        })
    }

    pub fn segment_id(&self) -> &str {
        &self.segment_id
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false // enforced non-empty at construction
    }

    pub fn frame(&self, index: usize) -> &Tensor<f32> {
        &self.frames[index]
    }

    pub fn frames(&self) -> &[Tensor<f32>] {
        &self.frames
    }

    /// (channels, height, width) of every frame.
    pub fn frame_shape(&self) -> (usize, usize, usize) {
        let s = self.frames[0].shape();
        (s[0], s[1], s[2])
    }
}
