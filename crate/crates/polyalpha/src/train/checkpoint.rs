//! Binary checkpoint files.
//!
//! Layout: magic `CRNN`, one format-version byte, a little-endian u32
//! header length, a UTF-8 JSON header, then each tensor as little-endian
//! IEEE-754 f32 values in header order. The header records the run
//! configuration, counters, and every tensor's name, shape, and CRC32, so
//! loads detect truncation, layout drift, and bit corruption separately
//! from version mismatches.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::{AdamState, ModelParams};

const MAGIC: [u8; 4] = *b"CRNN";
const VERSION: u8 = 1;

/// Everything needed to resume a run from a record boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub params: ModelParams<f32>,
    pub adam: AdamState<f32>,
    pub step: u64,
    pub data_cursor: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    step: u64,
    data_cursor: u64,
    adam_t: u64,
    tensors: Vec<TensorInfo>,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
    crc32: u32,
}

// Tensor payload order: model parameters, then both Adam moment sets.
fn tensor_views<'a>(
    params: &'a ModelParams<f32>,
    adam: &'a AdamState<f32>,
) -> Vec<(String, Vec<usize>, &'a [f32])> {
    let shapes = params.tensor_shapes();
    let mut out = Vec::with_capacity(12);
    for (group, set) in
        [("params", &params.tensors), ("adam_m1", &adam.m1), ("adam_m2", &adam.m2)]
    {
        for ((name, shape), values) in
            ModelParams::<f32>::TENSOR_NAMES.iter().zip(&shapes).zip(set.parts())
        {
            out.push((format!("{group}.{name}"), shape.clone(), values));
        }
    }
    out
}

fn le_bytes(values: &[f32]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Serialize and atomically write a checkpoint (temp file + rename).
pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    ck.config.validate()?;
    let views = tensor_views(&ck.params, &ck.adam);
    let mut payload = Vec::new();
    let mut tensors = Vec::with_capacity(views.len());
    for (name, shape, values) in views {
        let bytes = le_bytes(values);
        tensors.push(TensorInfo { name, shape, crc32: crc32fast::hash(&bytes) });
        payload.extend_from_slice(&bytes);
    }
    let header = Header {
        config: ck.config.clone(),
        step: ck.step,
        data_cursor: ck.data_cursor,
        adam_t: ck.adam.t,
        tensors,
    };
    let header_json = serde_json::to_vec(&header)?;
    let header_len = u32::try_from(header_json.len())
        .map_err(|_| Error::CheckpointFormat("header exceeds u32 length".into()))?;

    let mut file = Vec::with_capacity(9 + header_json.len() + payload.len());
    file.extend_from_slice(&MAGIC);
    file.push(VERSION);
    file.extend_from_slice(&header_len.to_le_bytes());
    file.extend_from_slice(&header_json);
    file.extend_from_slice(&payload);

    let tmp = path.with_extension("ckpt.tmp");
    fs::write(&tmp, &file)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Read and verify a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = fs::read(path)?;
    if file.len() < 9 {
        return Err(Error::CheckpointFormat(format!(
            "file is {} bytes, shorter than any checkpoint",
            file.len()
        )));
    }
    if file[..4] != MAGIC {
        return Err(Error::CheckpointFormat(
            "bad magic bytes; not a version-1 checkpoint file".into(),
        ));
    }
    if file[4] != VERSION {
        return Err(Error::CheckpointFormat(format!(
            "unsupported format version {} (expected {VERSION})",
            file[4]
        )));
    }
    let header_len = u32::from_le_bytes(file[5..9].try_into().unwrap()) as usize;
    let body = &file[9..];
    if body.len() < header_len {
        return Err(Error::CheckpointFormat("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&body[..header_len])
        .map_err(|e| Error::CheckpointFormat(format!("header: {e}")))?;
    header.config.validate()?;

    let n = header.config.hidden_size;
    let d = header.config.gen.input_width();
    let mut params = ModelParams::<f32>::zeros(n, d);
    let mut adam = AdamState::<f32>::new(n, d);
    adam.t = header.adam_t;

    let expected_shapes = params.tensor_shapes();
    let mut payload = &body[header_len..];
    let mut infos = header.tensors.iter();
    for (group, set) in [
        ("params", &mut params.tensors),
        ("adam_m1", &mut adam.m1),
        ("adam_m2", &mut adam.m2),
    ] {
        for ((name, shape), values) in
            ModelParams::<f32>::TENSOR_NAMES.iter().zip(&expected_shapes).zip(set.parts_mut())
        {
            let info = infos.next().ok_or_else(|| {
                Error::CheckpointFormat("header lists too few tensors".into())
            })?;
            let expect_name = format!("{group}.{name}");
            if info.name != expect_name || &info.shape != shape {
                return Err(Error::CheckpointFormat(format!(
                    "tensor {} with shape {:?}; expected {} with shape {:?}",
                    info.name, info.shape, expect_name, shape
                )));
            }
            let len = values.len() * 4;
            if payload.len() < len {
                return Err(Error::CheckpointFormat(format!(
                    "payload truncated in tensor {expect_name}"
                )));
            }
            let (bytes, rest) = payload.split_at(len);
            payload = rest;
            let crc = crc32fast::hash(bytes);
            if crc != info.crc32 {
                return Err(Error::CheckpointIntegrity(format!(
                    "tensor {expect_name}: stored CRC32 {:08x} but payload hashes to {crc:08x}",
                    info.crc32
                )));
            }
            for (dst, chunk) in values.iter_mut().zip(bytes.chunks_exact(4)) {
                *dst = f32::from_le_bytes(chunk.try_into().unwrap());
            }
        }
    }
    if infos.next().is_some() {
        return Err(Error::CheckpointFormat("header lists extra tensors".into()));
    }
    if !payload.is_empty() {
        return Err(Error::CheckpointFormat(format!(
            "{} trailing bytes after final tensor",
            payload.len()
        )));
    }

    Ok(Checkpoint {
        config: header.config,
        params,
        adam,
        step: header.step,
        data_cursor: header.data_cursor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, tag};

    fn sample_checkpoint() -> Checkpoint {
        let config = TrainConfig {
            hidden_size: 8,
            batch_size: 2,
            max_steps: 10,
            eval_every: 5,
            eval_count: 2,
            ..TrainConfig::default()
        };
        let mut rng = substream(3, tag::INIT, 0);
        let params = crate::nn::xavier_init(8, 27, &mut rng);
        let mut adam = AdamState::new(8, 27);
        adam.t = 17;
        for v in adam.m1.w_out.iter_mut() {
            *v = 0.25;
        }
        Checkpoint { config, params, adam, step: 17, data_cursor: 34 }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path_a = dir.path().join("a.ckpt");
        let path_b = dir.path().join("b.ckpt");
        let ck = sample_checkpoint();
        save_checkpoint(&path_a, &ck).unwrap();
        let loaded = load_checkpoint(&path_a).unwrap();
        assert_eq!(loaded, ck);
        save_checkpoint(&path_b, &loaded).unwrap();
        assert_eq!(fs::read(&path_a).unwrap(), fs::read(&path_b).unwrap());
    }

    #[test]
    fn corrupted_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        save_checkpoint(&path, &sample_checkpoint()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        match load_checkpoint(&path) {
            Err(Error::CheckpointFormat(msg)) => assert!(msg.contains("magic"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_version_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        save_checkpoint(&path, &sample_checkpoint()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 9;
        fs::write(&path, &bytes).unwrap();
        match load_checkpoint(&path) {
            Err(Error::CheckpointFormat(msg)) => assert!(msg.contains("version"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn flipped_payload_byte_is_an_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        save_checkpoint(&path, &sample_checkpoint()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x40;
        fs::write(&path, &bytes).unwrap();
        match load_checkpoint(&path) {
            Err(Error::CheckpointIntegrity(msg)) => assert!(msg.contains("CRC32"), "{msg}"),
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        save_checkpoint(&path, &sample_checkpoint()).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::CheckpointFormat(_))));
        fs::write(&path, &bytes[..6]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::CheckpointFormat(_))));
    }
}
