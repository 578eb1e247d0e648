//! Frame storage: binary tensor files (magic "IMG1") for arbitrary channel
//! counts, with frames of a segment living in one directory as
//! `frame_%010d.img1`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{FrameSequence, Modality};

pub const FRAME_MAGIC: &[u8; 4] = b"IMG1";

/// Canonical file name of the `index`-th frame.
pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:010}.img1")
}

/// Writes one C×H×W frame: magic, u32 channels/height/width (little-endian),
/// then row-major f32 values.
pub fn write_frame(path: &Path, frame: &Tensor<f32>) -> Result<()> {
    let s = frame.shape();
    if s.len() != 3 {
        return Err(Error::shape(format!(
            "frame must be C×H×W, got shape {s:?}"
        )));
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(FRAME_MAGIC)?;
    for dim in s {
        w.write_all(&(*dim as u32).to_le_bytes())?;
    }
    for v in frame.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frame(path: &Path) -> Result<Tensor<f32>> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FRAME_MAGIC {
        return Err(Error::Parse(format!(
            "{}: bad frame magic {magic:?}",
            path.display()
        )));
    }
    let mut buf = [0u8; 4];
    let mut shape = Vec::with_capacity(3);
    for _ in 0..3 {
        r.read_exact(&mut buf)?;
        shape.push(u32::from_le_bytes(buf) as usize);
    }
    let numel: usize = shape.iter().product();
    let mut values = Vec::with_capacity(numel);
    for _ in 0..numel {
        r.read_exact(&mut buf)?;
        values.push(f32::from_le_bytes(buf));
    }
    Tensor::from_vec(shape, values)
}

/// Loads every `frame_*.img1` file of a segment directory, ordered by index.
pub fn load_frame_sequence(
    dir: &Path,
    segment_id: impl Into<String>,
    modality: Modality,
) -> Result<FrameSequence> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|name| name.starts_with("frame_") && name.ends_with(".img1"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no frame files found",
            dir.display()
        )));
    }
    let frames = names
        .iter()
        .map(|name| read_frame(&dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(segment_id, modality, frames)
}
