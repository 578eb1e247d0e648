//! Spatial augmentation on C×H×W frames: crops and horizontal flips.
//! Training uses a random crop plus coin-flip mirror; evaluation uses a
//! single centre crop.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Extracts the `ch`×`cw` window whose top-left corner is (top, left).
pub fn crop(frame: &Tensor<f32>, top: usize, left: usize, ch: usize, cw: usize) -> Result<Tensor<f32>> {
    let s = frame.shape();
    if s.len() != 3 {
        return Err(Error::shape(format!("crop expects C×H×W, got {s:?}")));
    }
    let (c, h, w) = (s[0], s[1], s[2]);
    if top + ch > h || left + cw > w || ch == 0 || cw == 0 {
        return Err(Error::invalid(format!(
            "crop {ch}x{cw} at ({top},{left}) exceeds frame {h}x{w}"
        )));
    }
    let mut values = Vec::with_capacity(c * ch * cw);
    for channel in 0..c {
        let base = channel * h * w;
        for y in top..top + ch {
            let row = base + y * w + left;
            values.extend_from_slice(&frame.values()[row..row + cw]);
        }
    }
    Tensor::from_vec(vec![c, ch, cw], values)
}

/// Centre crop to `ch`×`cw`.
pub fn center_crop(frame: &Tensor<f32>, ch: usize, cw: usize) -> Result<Tensor<f32>> {
    let s = frame.shape();
    let (h, w) = (s[1], s[2]);
    if ch > h || cw > w {
        return Err(Error::invalid(format!(
            "centre crop {ch}x{cw} exceeds frame {h}x{w}"
        )));
    }
    crop(frame, (h - ch) / 2, (w - cw) / 2, ch, cw)
}

/// Uniformly random crop position; full-frame when sizes match.
pub fn random_crop<R: Rng>(
    frame: &Tensor<f32>,
    ch: usize,
    cw: usize,
    rng: &mut R,
) -> Result<Tensor<f32>> {
    let s = frame.shape();
    let (h, w) = (s[1], s[2]);
    if ch > h || cw > w {
        return Err(Error::invalid(format!(
            "random crop {ch}x{cw} exceeds frame {h}x{w}"
        )));
    }
    let top = if h == ch { 0 } else { rng.gen_range(0..=h - ch) };
    let left = if w == cw { 0 } else { rng.gen_range(0..=w - cw) };
    crop(frame, top, left, ch, cw)
}

/// Mirrors a frame left-to-right.
pub fn hflip(frame: &Tensor<f32>) -> Tensor<f32> {
    let s = frame.shape();
    let (c, h, w) = (s[0], s[1], s[2]);
    let mut values = Vec::with_capacity(c * h * w);
    for channel in 0..c {
        for y in 0..h {
            let row = channel * h * w + y * w;
            values.extend(frame.values()[row..row + w].iter().rev());
        }
    }
    Tensor::from_vec(vec![c, h, w], values).expect("same element count")
}
