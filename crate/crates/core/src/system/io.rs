//! On-disk formats for coefficient tensors.
//!
//! Binary: one line of compact JSON
//! `{"n":…,"d":…,"m":…,"layout":"row-major","dtype":"f64"}` terminated by
//! `\n`, followed by `m·n^d` little-endian IEEE-754 doubles.
//!
//! JSON: the same header fields plus `"data": [...]`. A whole system is a
//! JSON object `{"rand": <tensor>, "det": <tensor> | null}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoefficientTensor, PolynomialSystem, SystemShape};
use crate::error::{Error, Result};

pub const LAYOUT: &str = "row-major";
pub const DTYPE: &str = "f64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub layout: String,
    pub dtype: String,
}

impl TensorHeader {
    fn for_shape(shape: SystemShape) -> Self {
        Self { n: shape.n(), d: shape.d(), m: shape.m(), layout: LAYOUT.into(), dtype: DTYPE.into() }
    }

    fn shape(&self, path: &Path) -> Result<SystemShape> {
        if self.layout != LAYOUT {
            return Err(Error::format(path, format!("unsupported layout {:?}", self.layout)));
        }
        if self.dtype != DTYPE {
            return Err(Error::format(path, format!("unsupported dtype {:?}", self.dtype)));
        }
        let shape = SystemShape::new(self.n, self.d)?;
        if shape.m() != self.m {
            return Err(Error::format(path, format!("m = {} inconsistent with n = {}", self.m, self.n)));
        }
        Ok(shape)
    }
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    #[serde(flatten)]
    header: TensorHeader,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    rand: TensorJson,
    #[serde(default)]
    det: Option<TensorJson>,
}

pub fn write_binary(t: &CoefficientTensor<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = serde_json::to_string(&TensorHeader::for_shape(t.shape()))?;
    let mut write = || -> std::io::Result<()> {
        w.write_all(header.as_bytes())?;
        w.write_all(b"\n")?;
        for v in t.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<CoefficientTensor<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line).map_err(|e| Error::io(path, e))?;
    if line.last() != Some(&b'\n') {
        return Err(Error::format(path, "missing header line"));
    }
    let header: TensorHeader = serde_json::from_slice(&line[..line.len() - 1])
        .map_err(|e| Error::format(path, format!("bad header: {e}")))?;
    let shape = header.shape(path)?;
    shape.ensure_within(super::DEFAULT_ENTRY_CAP)?;
    let count = shape.entries() as usize;
    let mut bytes = Vec::with_capacity(count * 8);
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != count * 8 {
        return Err(Error::format(
            path,
            format!("expected {} payload bytes, found {}", count * 8, bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    CoefficientTensor::from_data(shape, data)
}

fn to_json(t: &CoefficientTensor<f64>) -> TensorJson {
    TensorJson { header: TensorHeader::for_shape(t.shape()), data: t.as_slice().to_vec() }
}

fn from_json(j: TensorJson, path: &Path) -> Result<CoefficientTensor<f64>> {
    let shape = j.header.shape(path)?;
    CoefficientTensor::from_data(shape, j.data)
}

pub fn write_json(t: &CoefficientTensor<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(BufWriter::new(file), &to_json(t))?;
    Ok(())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<CoefficientTensor<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let j: TensorJson =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    from_json(j, path)
}

pub fn write_system_json(sys: &PolynomialSystem<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let j = SystemJson { rand: to_json(sys.rand()), det: sys.det().map(to_json) };
    serde_json::to_writer(BufWriter::new(file), &j)?;
    Ok(())
}

pub fn read_system_json(path: impl AsRef<Path>) -> Result<PolynomialSystem<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let j: SystemJson =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let rand = from_json(j.rand, path)?;
    let det = j.det.map(|d| from_json(d, path)).transpose()?;
    PolynomialSystem::new(rand, det)
}

/// Loads a tensor, choosing the format by sniffing the first byte after
/// the header: binary files have a header line, JSON files carry `data`.
pub fn read_tensor_auto(path: impl AsRef<Path>) -> Result<CoefficientTensor<f64>> {
    let path = path.as_ref();
    let mut probe = Vec::new();
    File::open(path)
        .map_err(|e| Error::io(path, e))?
        .take(1 << 16)
        .read_to_end(&mut probe)
        .map_err(|e| Error::io(path, e))?;
    let header_end = probe.iter().position(|&b| b == b'\n');
    let is_binary = match header_end {
        Some(end) => serde_json::from_slice::<TensorHeader>(&probe[..end]).is_ok()
            && !probe[..end].windows(6).any(|w| w == b"\"data\""),
        None => false,
    };
    if is_binary {
        read_binary(path)
    } else {
        read_json(path)
    }
}

/// Loads a system: a system JSON object, or a bare tensor (binary or JSON)
/// taken as the random part.
pub fn read_system_auto(path: impl AsRef<Path>) -> Result<PolynomialSystem<f64>> {
    let path = path.as_ref();
    if let Ok(text) = std::fs::read_to_string(path) {
        if let Ok(j) = serde_json::from_str::<SystemJson>(&text) {
            let rand = from_json(j.rand, path)?;
            let det = j.det.map(|d| from_json(d, path)).transpose()?;
            return PolynomialSystem::new(rand, det);
        }
    }
    Ok(PolynomialSystem::homogeneous(read_tensor_auto(path)?))
}
