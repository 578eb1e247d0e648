//! Binary checkpoint serialization for parameter sets.
//!
//! Layout: the magic `EGF1`, then one record per parameter in set order —
//! name length (u32), UTF-8 name bytes, rank (u32), each dimension (u32),
//! then the values as IEEE-754 f32. All integers and floats little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{ParamSet, Scalar, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"EGF1";

pub fn write_params<T: Scalar, W: Write>(params: &ParamSet<T>, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    for (name, tensor) in params.iter() {
        let name_bytes = name.as_bytes();
        w.write_all(&(name_bytes.len() as u32).to_le_bytes())?;
        w.write_all(name_bytes)?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for dim in tensor.shape() {
            w.write_all(&(*dim as u32).to_le_bytes())?;
        }
        for v in tensor.values() {
            w.write_all(&(v.to_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_params<T: Scalar, R: Read>(mut r: R) -> Result<ParamSet<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Parse(format!(
            "bad checkpoint magic {magic:?}, expected {CHECKPOINT_MAGIC:?}"
        )));
    }
    let mut params = ParamSet::new();
    loop {
        let mut len_buf = [0u8; 4];
        match r.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let name_len = u32::from_le_bytes(len_buf) as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| Error::Parse(format!("parameter name is not UTF-8: {e}")))?;

        r.read_exact(&mut len_buf)?;
        let rank = u32::from_le_bytes(len_buf) as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut len_buf)?;
            shape.push(u32::from_le_bytes(len_buf) as usize);
        }
        let numel: usize = shape.iter().product();
        let mut values = Vec::with_capacity(numel);
        for _ in 0..numel {
            r.read_exact(&mut len_buf)?;
            values.push(T::from_f64(f32::from_le_bytes(len_buf) as f64));
        }
        params.insert(&name, Tensor::from_vec(shape, values)?)?;
    }
    Ok(params)
}

pub fn save_params<T: Scalar>(params: &ParamSet<T>, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_params(params, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_params<T: Scalar>(path: &Path) -> Result<ParamSet<T>> {
    let file = File::open(path)?;
    read_params(BufReader::new(file))
}
