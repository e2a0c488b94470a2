//! Reader and writer for the safetensors container layout: an 8-byte
//! little-endian unsigned header length, a UTF-8 JSON header mapping tensor
//! name to `{dtype, shape, data_offsets}`, then the raw tensor data.

use crate::{ModelIoError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeaderEntry {
    dtype: String,
    shape: Vec<usize>,
    data_offsets: (usize, usize),
}

/// A parsed safetensors file held in memory.
#[derive(Debug)]
pub struct SafeTensors {
    entries: BTreeMap<String, HeaderEntry>,
    data: Vec<u8>,
}

impl SafeTensors {
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| ModelIoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(bytes)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(ModelIoError::CorruptHeader {
                offset: 0,
                reason: format!("file is {} bytes, need at least 8", bytes.len()),
            });
        }
        let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap());
        let body_start = 8u64
            .checked_add(header_len)
            .filter(|&end| end <= bytes.len() as u64)
            .ok_or(ModelIoError::CorruptHeader {
                offset: 8,
                reason: format!(
                    "declared header length {} exceeds file size {}",
                    header_len,
                    bytes.len()
                ),
            })? as usize;
        let header_text =
            std::str::from_utf8(&bytes[8..body_start]).map_err(|e| ModelIoError::CorruptHeader {
                offset: 8 + e.valid_up_to() as u64,
                reason: "header is not UTF-8".into(),
            })?;
        let mut raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(header_text)?;
        raw.remove("__metadata__");
        let mut entries = BTreeMap::new();
        let data_len = bytes.len() - body_start;
        for (name, value) in raw {
            let entry: HeaderEntry = serde_json::from_value(value)?;
            let (begin, end) = entry.data_offsets;
            let nbytes = dtype_size(&entry.dtype).ok_or_else(|| ModelIoError::UnsupportedDtype {
                name: name.clone(),
                dtype: entry.dtype.clone(),
            })? * entry.shape.iter().product::<usize>();
            if begin > end || end > data_len || end - begin != nbytes {
                return Err(ModelIoError::BadOffsets { name, begin, end });
            }
            entries.insert(name, entry);
        }
        Ok(Self {
            entries,
            data: bytes[body_start..].to_vec(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn shape(&self, name: &str) -> Result<&[usize]> {
        self.entries
            .get(name)
            .map(|e| e.shape.as_slice())
            .ok_or_else(|| ModelIoError::MissingTensor { name: name.into() })
    }

    /// Decodes a tensor to `f32` values in row-major order.
    pub fn tensor_f32(&self, name: &str) -> Result<(Vec<usize>, Vec<f32>)> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| ModelIoError::MissingTensor { name: name.into() })?;
        let bytes = &self.data[entry.data_offsets.0..entry.data_offsets.1];
        let values = match entry.dtype.as_str() {
            "F32" => bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            "F64" => bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()) as f32)
                .collect(),
            other => {
                return Err(ModelIoError::UnsupportedDtype {
                    name: name.into(),
                    dtype: other.into(),
                })
            }
        };
        Ok((entry.shape.clone(), values))
    }
}

fn dtype_size(dtype: &str) -> Option<usize> {
    match dtype {
        "F32" => Some(4),
        "F64" => Some(8),
        _ => None,
    }
}

/// Serializes named f32 tensors into the safetensors layout.
pub fn write_safetensors(path: &Path, tensors: &[(&str, Vec<usize>, Vec<f32>)]) -> Result<()> {
    let mut header = BTreeMap::new();
    let mut offset = 0usize;
    for (name, shape, data) in tensors {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "{name}");
        let nbytes = data.len() * 4;
        header.insert(
            (*name).to_string(),
            HeaderEntry {
                dtype: "F32".into(),
                shape: shape.clone(),
                data_offsets: (offset, offset + nbytes),
            },
        );
        offset += nbytes;
    }
    let header_json = serde_json::to_string(&header)?;
    let mut out = Vec::with_capacity(8 + header_json.len() + offset);
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(header_json.as_bytes());
    for (_, _, data) in tensors {
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|source| ModelIoError::Read {
        path: path.to_path_buf(),
        source,
    })
}
