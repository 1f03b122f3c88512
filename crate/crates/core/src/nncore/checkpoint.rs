//! Binary parameter checkpoints.
//!
//! Layout: a UTF-8 manifest terminated by a line `end`, then the payload.
//!
//! ```text
//! BITEXT-CHECKPOINT
//! version 1
//! meta <key> <value>
//! tensor <name> <dim>x<dim>... <offset> <count>
//! end
//! <payload: little-endian f32 values, tensors in manifest order>
//! ```
//!
//! Offsets are in bytes from the start of the payload. Metadata values are
//! escaped so that they fit on one line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ParamSet, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &str = "BITEXT-CHECKPOINT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct StoredTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<StoredTensor>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn escape(v: &str) -> String {
    v.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

fn unescape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

impl Checkpoint {
    pub fn from_params<T: Scalar, P: ParamSet<T> + ?Sized>(
        params: &P,
        meta: BTreeMap<String, String>,
    ) -> Self {
        let tensors = params
            .named()
            .into_iter()
            .map(|(name, t)| StoredTensor {
                name,
                shape: t.shape().to_vec(),
                data: t.data().iter().map(|x| x.as_f64() as f32).collect(),
            })
            .collect();
        Checkpoint { meta, tensors }
    }

    /// Copies stored values into `params`, which must have exactly the same
    /// tensor names and shapes in the same order.
    pub fn restore_into<T: Scalar, P: ParamSet<T> + ?Sized>(&self, params: &mut P) -> Result<()> {
        let mut targets = params.named_mut();
        if targets.len() != self.tensors.len() {
            return Err(corrupt(format!(
                "checkpoint holds {} tensors, model expects {}",
                self.tensors.len(),
                targets.len()
            )));
        }
        for ((name, t), stored) in targets.iter_mut().zip(&self.tensors) {
            if *name != stored.name || t.shape() != stored.shape.as_slice() {
                return Err(corrupt(format!(
                    "tensor {} {:?} does not match model tensor {name} {:?}",
                    stored.name,
                    stored.shape,
                    t.shape()
                )));
            }
            for (dst, &src) in t.data_mut().iter_mut().zip(&stored.data) {
                *dst = T::cast(src as f64);
            }
        }
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Option<Tensor<f32>> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .map(|t| Tensor::from_vec(&t.shape, t.data.clone()).expect("validated on load"))
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "version {FORMAT_VERSION}").unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "meta {} {}", escape(k).replace(' ', "_"), escape(v)).unwrap();
        }
        let mut offset = 0usize;
        for t in &self.tensors {
            let dims: Vec<String> = t.shape.iter().map(usize::to_string).collect();
            writeln!(
                out,
                "tensor {} {} {} {}",
                t.name,
                dims.join("x"),
                offset,
                t.data.len()
            )
            .unwrap();
            offset += t.data.len() * 4;
        }
        writeln!(out, "end").unwrap();
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let nl = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| corrupt("manifest is truncated"))?;
            pos += nl + 1;
            std::str::from_utf8(&rest[..nl]).map_err(|_| corrupt("manifest is not UTF-8"))
        };

        if next_line()? != MAGIC {
            return Err(corrupt("bad magic string"));
        }
        let version = next_line()?;
        let version: u32 = version
            .strip_prefix("version ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| corrupt(format!("bad version line {version:?}")))?;
        if version != FORMAT_VERSION {
            return Err(corrupt(format!(
                "format version {version}, expected {FORMAT_VERSION}"
            )));
        }

        let mut meta = BTreeMap::new();
        let mut layout: Vec<(String, Vec<usize>, usize, usize)> = Vec::new();
        loop {
            let line = next_line()?;
            if line == "end" {
                break;
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                meta.insert(unescape(k), unescape(v));
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let fields: Vec<&str> = rest.split(' ').collect();
                let [name, dims, offset, count] = fields[..] else {
                    return Err(corrupt(format!("bad tensor line {line:?}")));
                };
                let shape = dims
                    .split('x')
                    .map(str::parse)
                    .collect::<std::result::Result<Vec<usize>, _>>()
                    .map_err(|_| corrupt(format!("bad shape {dims:?}")))?;
                let offset: usize = offset.parse().map_err(|_| corrupt("bad offset"))?;
                let count: usize = count.parse().map_err(|_| corrupt("bad count"))?;
                layout.push((name.to_string(), shape, offset, count));
            } else {
                return Err(corrupt(format!("unexpected manifest line {line:?}")));
            }
        }

        let payload = &bytes[pos..];
        let mut expected_offset = 0usize;
        let mut tensors = Vec::with_capacity(layout.len());
        for (name, shape, offset, count) in layout {
            if shape.iter().product::<usize>() != count {
                return Err(corrupt(format!(
                    "tensor {name}: shape {shape:?} disagrees with count {count}"
                )));
            }
            if offset != expected_offset {
                return Err(corrupt(format!("tensor {name}: offset {offset}, expected {expected_offset}")));
            }
            let end = offset + count * 4;
            if end > payload.len() {
                return Err(corrupt(format!("payload truncated inside tensor {name}")));
            }
            let data = payload[offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push(StoredTensor { name, shape, data });
            expected_offset = end;
        }
        if expected_offset != payload.len() {
            return Err(corrupt(format!(
                "payload has {} bytes, manifest describes {expected_offset}",
                payload.len()
            )));
        }
        Ok(Checkpoint { meta, tensors })
    }

    /// Writes to a temporary file beside `path` and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Atomically replaces `path` with `contents`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
