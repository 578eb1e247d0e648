//! A cheap 2-channel motion surrogate built from consecutive frame
//! differences, standing in for dense optical flow.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{FrameSequence, Modality};

/// Collapses a C×H×W frame to H×W grayscale by averaging channels.
fn grayscale(frame: &Tensor<f32>) -> Vec<f32> {
    let s = frame.shape();
    let (c, hw) = (s[0], s[1] * s[2]);
    let inv = 1.0 / c as f32;
    let mut gray = vec![0.0f32; hw];
    for ch in 0..c {
        for (g, v) in gray.iter_mut().zip(&frame.values()[ch * hw..(ch + 1) * hw]) {
            *g += v * inv;
        }
    }
    gray
}

/// Spatial gradient along one axis: central differences inside, one-sided at
/// the borders. `stride` selects the axis (1 for x, `w` for y).
fn spatial_gradient(diff: &[f32], h: usize, w: usize, along_x: bool) -> Vec<f32> {
    let mut out = vec![0.0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            let (coord, limit) = if along_x { (x, w) } else { (y, h) };
            let stride = if along_x { 1 } else { w };
            let idx = y * w + x;
            out[idx] = if limit == 1 {
                0.0
            } else if coord == 0 {
                diff[idx + stride] - diff[idx]
            } else if coord == limit - 1 {
                diff[idx] - diff[idx - stride]
            } else {
                (diff[idx + stride] - diff[idx - stride]) * 0.5
            };
        }
    }
    out
}

/// For each consecutive frame pair, the signed grayscale temporal difference
/// expressed through its spatial gradients: channel 0 = d(diff)/dx,
/// channel 1 = d(diff)/dy. Output holds one frame fewer than the input.
pub fn frame_diff_flow(frames: &FrameSequence) -> Result<FrameSequence> {
    if frames.len() < 2 {
        return Err(Error::invalid(
            "flow surrogate needs at least two frames".to_string(),
        ));
    }
    let (_, h, w) = frames.frame_shape();
    let grays: Vec<Vec<f32>> = frames.frames().iter().map(grayscale).collect();
    let mut out = Vec::with_capacity(frames.len() - 1);
    for pair in grays.windows(2) {
        let diff: Vec<f32> = pair[1].iter().zip(&pair[0]).map(|(b, a)| b - a).collect();
        let dx = spatial_gradient(&diff, h, w, true);
        let dy = spatial_gradient(&diff, h, w, false);
        let mut values = dx;
        values.extend(dy);
        out.push(Tensor::from_vec(vec![2, h, w], values)?);
    }
    FrameSequence::new(frames.segment_id(), Modality::Flow, out)
}
