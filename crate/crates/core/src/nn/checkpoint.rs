//! Flat little-endian checkpoint format:
//!
//! ```text
//! magic    8 bytes  "FACTCKPT"
//! version  u32      1
//! input    u32 ×3   height, width, channels
//! layers   u32      count
//! per layer:
//!   kind   u8       0 = dense, 1 = conv3x3 + relu + avgpool2
//!   act    u8       0 = identity, 1 = relu
//!   dims   u32 ×4   dense: fan_in, fan_out, 0, 0
//!                   conv:  height, width, in_channels, out_channels
//! then, layer by layer, weights followed by biases as f64
//! ```
//!
//! A human-readable `<file>.arch.txt` is written next to each checkpoint.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Activation, Layer, LayerKind, Model};
use crate::error::{FactError, Result};

const MAGIC: &[u8; 8] = b"FACTCKPT";
const VERSION: u32 = 1;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".arch.txt");
    PathBuf::from(s)
}

fn u32_of(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| FactError::Checkpoint(format!("dimension {v} exceeds u32")))
}

pub fn encode(model: &Model) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let (h, w, c) = model.input;
    for d in [h, w, c, model.layers.len()] {
        out.extend_from_slice(&u32_of(d)?.to_le_bytes());
    }
    for l in &model.layers {
        let (kind, dims) = match l.kind {
            LayerKind::Dense { fan_in, fan_out } => (0u8, [fan_in, fan_out, 0, 0]),
            LayerKind::ConvPool {
                height,
                width,
                in_channels,
                out_channels,
            } => (1u8, [height, width, in_channels, out_channels]),
        };
        out.push(kind);
        out.push(match l.activation {
            Activation::Identity => 0,
            Activation::Relu => 1,
        });
        for d in dims {
            out.extend_from_slice(&u32_of(d)?.to_le_bytes());
        }
    }
    for l in &model.layers {
        for v in l.weights.iter().chain(&l.biases) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(FactError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(FactError::Checkpoint("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(FactError::Checkpoint(format!("unsupported version {version}")));
    }
    let input = (r.u32()?, r.u32()?, r.u32()?);
    let count = r.u32()?;
    let mut headers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let kind = r.u8()?;
        let act = match r.u8()? {
            0 => Activation::Identity,
            1 => Activation::Relu,
            a => return Err(FactError::Checkpoint(format!("unknown activation tag {a}"))),
        };
        let d = [r.u32()?, r.u32()?, r.u32()?, r.u32()?];
        let kind = match kind {
            0 => LayerKind::Dense {
                fan_in: d[0],
                fan_out: d[1],
            },
            1 => LayerKind::ConvPool {
                height: d[0],
                width: d[1],
                in_channels: d[2],
                out_channels: d[3],
            },
            k => return Err(FactError::Checkpoint(format!("unknown layer kind {k}"))),
        };
        headers.push((kind, act));
    }
    let mut layers = Vec::with_capacity(headers.len());
    for (kind, act) in headers {
        let mut l = Layer::zeros(kind, act);
        l.weights = r.f64s(l.weights.len())?;
        l.biases = r.f64s(l.biases.len())?;
        layers.push(l);
    }
    if r.pos != bytes.len() {
        return Err(FactError::Checkpoint("trailing bytes after parameters".into()));
    }
    Model::from_layers(input, layers).map_err(|e| FactError::Checkpoint(e.to_string()))
}

fn describe(model: &Model) -> String {
    let (h, w, c) = model.input;
    let mut s = format!(
        "format FACTCKPT v{VERSION}\ninput {h}x{w}x{c}\nlayers {}\n",
        model.layers.len()
    );
    for (i, l) in model.layers.iter().enumerate() {
        let act = match l.activation {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        };
        match l.kind {
            LayerKind::Dense { fan_in, fan_out } => {
                let _ = writeln!(s, "{i} dense {fan_in} -> {fan_out} {act}");
            }
            LayerKind::ConvPool {
                height,
                width,
                in_channels,
                out_channels,
            } => {
                let _ = writeln!(
                    s,
                    "{i} conv3x3+avgpool2 {height}x{width}x{in_channels} -> {}x{}x{out_channels} {act}",
                    height / 2,
                    width / 2
                );
            }
        }
    }
    let _ = writeln!(s, "parameters {}", model.param_count());
    s
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, encode(model)?).map_err(|e| FactError::io(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, describe(model)).map_err(|e| FactError::io(&side, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| FactError::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::super::Architecture;
    use super::*;

    fn model() -> Model {
        let arch = Architecture {
            height: 6,
            width: 6,
            channels: 3,
            conv_channels: vec![4],
            hidden: vec![7],
            classes: 3,
        };
        Model::new(&arch, 11).unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let m = model();
        save_checkpoint(&m, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, m);
        let side = fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(side.contains("conv3x3+avgpool2 6x6x3 -> 3x3x4 relu"), "{side}");
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = encode(&model()).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
    }
}
