//! Checkpoint file format: magic bytes, format version, observation-config
//! hash, shape table, then all tensors as little-endian f32.
//!
//! Loads reject files whose config hash does not match the expected value,
//! so a checkpoint can never be driven with incompatible observations.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{init_params, PolicyParams, PolicyShape};

const MAGIC: &[u8; 4] = b"PFPC";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("config hash mismatch: file {file:#018x}, expected {expected:#018x}")]
    ConfigMismatch { file: u64, expected: u64 },
    #[error("malformed shape table: {0}")]
    BadShape(String),
}

fn write_u32(out: &mut impl Write, v: u32) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn write_u64(out: &mut impl Write, v: u64) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn read_u32(input: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(input: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Saves policy parameters. `config_hash` should combine the observation
/// configuration with the network shape.
pub fn checkpoint_save(
    params: &PolicyParams<f32>,
    config_hash: u64,
    path: &Path,
) -> Result<(), CheckpointError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    write_u32(&mut out, VERSION)?;
    write_u64(&mut out, config_hash)?;
    let shape_json = serde_json::to_vec(&params.shape).expect("shape serializes");
    write_u32(&mut out, shape_json.len() as u32)?;
    out.write_all(&shape_json)?;
    let tensors = params.tensors();
    write_u32(&mut out, tensors.len() as u32)?;
    for (data, _) in tensors {
        write_u32(&mut out, data.len() as u32)?;
        for &v in data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Loads policy parameters, verifying magic, version, and config hash.
pub fn checkpoint_load(
    path: &Path,
    expected_config_hash: u64,
) -> Result<PolicyParams<f32>, CheckpointError> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let file_hash = read_u64(&mut input)?;
    if file_hash != expected_config_hash {
        return Err(CheckpointError::ConfigMismatch {
            file: file_hash,
            expected: expected_config_hash,
        });
    }
    let shape_len = read_u32(&mut input)? as usize;
    let mut shape_buf = vec![0u8; shape_len];
    input.read_exact(&mut shape_buf)?;
    let shape: PolicyShape = serde_json::from_slice(&shape_buf)
        .map_err(|e| CheckpointError::BadShape(e.to_string()))?;

    let mut params = init_params::<f32>(&shape, 0);
    let declared = read_u32(&mut input)? as usize;
    let expected_tensors = params.tensors().len();
    if declared != expected_tensors {
        return Err(CheckpointError::BadShape(format!(
            "file declares {declared} tensors, shape implies {expected_tensors}"
        )));
    }
    let mut loaded: Vec<Vec<f32>> = Vec::with_capacity(declared);
    for _ in 0..declared {
        let len = read_u32(&mut input)? as usize;
        let mut data = vec![0f32; len];
        let mut buf = [0u8; 4];
        for v in data.iter_mut() {
            input.read_exact(&mut buf)?;
            *v = f32::from_le_bytes(buf);
        }
        loaded.push(data);
    }
    let mut idx = 0;
    let mut size_ok = true;
    params.for_each_tensor_mut(|t| {
        if loaded[idx].len() != t.len() {
            size_ok = false;
        } else {
            t.copy_from_slice(&loaded[idx]);
        }
        idx += 1;
    });
    if !size_ok {
        return Err(CheckpointError::BadShape("tensor size mismatch".into()));
    }
    Ok(params)
}

/// Loads a checkpoint whose shape is read from the file itself; the stored
/// hash must equal `env_obs_hash` combined with the loaded shape hash.
pub fn checkpoint_load_for_env(
    path: &Path,
    env_obs_hash: u64,
) -> Result<PolicyParams<f32>, CheckpointError> {
    let file_hash = checkpoint_config_hash(path)?;
    // The shape travels in the file; recover it, recompute, compare.
    let params = checkpoint_load(path, file_hash)?;
    let expected = env_obs_hash ^ params.shape.hash().rotate_left(17);
    if file_hash != expected {
        return Err(CheckpointError::ConfigMismatch {
            file: file_hash,
            expected,
        });
    }
    Ok(params)
}

/// Reads only the config hash from a checkpoint header.
pub fn checkpoint_config_hash(path: &Path) -> Result<u64, CheckpointError> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    Ok(read_u64(&mut input)?)
}
