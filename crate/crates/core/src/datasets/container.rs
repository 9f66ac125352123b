//! Binary containers.
//!
//! `CCG1`: magic, `u32` rows, `u32` cols, `u32` angle spacing in
//! millidegrees, 16-byte config hash, then `rows·cols` little-endian `f64`
//! in row-major order.
//!
//! `CKP1`: magic, 16-byte config hash, `u32` metadata count with
//! length-prefixed key/value strings, `u32` tensor count, then per tensor a
//! length-prefixed name, `u32` rows, `u32` cols and little-endian `f64` data.

use std::collections::BTreeMap;
use std::path::Path;

use crate::cepstrogram::CCGram;
use crate::contrastive::{EncoderSpec, SimclrModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Activation, Dense, Mlp};
use crate::probe::{ProbeConfig, ProbeModel};

pub const CCG_MAGIC: [u8; 4] = *b"CCG1";
pub const CKP_MAGIC: [u8; 4] = *b"CKP1";
pub const CCG_HEADER_LEN: usize = 32;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(Error::TruncatedPayload {
            expected: self.pos.saturating_add(n),
            found: self.bytes.len(),
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::InvalidConfig("non-UTF-8 string in container".into()))
    }

    fn f64s(&mut self, rows: u32, cols: u32) -> Result<Vec<f64>> {
        let n = payload_len(rows as u64, cols as u64)?;
        Ok(self
            .take(n)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            extra => Err(Error::TrailingBytes(extra)),
        }
    }
}

fn magic(bytes: &[u8], expected: [u8; 4]) -> Result<()> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedPayload {
            expected: 4,
            found: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != expected {
        return Err(Error::CorruptMagic { expected, found });
    }
    Ok(())
}

fn payload_len(rows: u64, cols: u64) -> Result<usize> {
    rows.checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or(Error::DimensionOverflow { rows, cols })
}

fn dims_u32(rows: usize, cols: usize) -> Result<(u32, u32)> {
    match (u32::try_from(rows), u32::try_from(cols)) {
        (Ok(r), Ok(c)) => Ok((r, c)),
        _ => Err(Error::DimensionOverflow {
            rows: rows as u64,
            cols: cols as u64,
        }),
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let n = u32::try_from(s.len()).map_err(|_| Error::InvalidConfig("string too long".into()))?;
    put_u32(out, n);
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

pub fn encode_ccgram(ccgram: &CCGram) -> Result<Vec<u8>> {
    let (rows, cols) = dims_u32(ccgram.rows(), ccgram.cols())?;
    let milli = (ccgram.spacing_deg * 1000.0).round();
    if !(milli >= 0.0 && milli <= u32::MAX as f64) {
        return Err(Error::Domain {
            what: "angle spacing",
            value: ccgram.spacing_deg,
            min: 0.0,
            max: u32::MAX as f64 / 1000.0,
        });
    }
    let mut out = Vec::with_capacity(CCG_HEADER_LEN + payload_len(rows as u64, cols as u64)?);
    out.extend_from_slice(&CCG_MAGIC);
    put_u32(&mut out, rows);
    put_u32(&mut out, cols);
    put_u32(&mut out, milli as u32);
    out.extend_from_slice(&ccgram.config_hash);
    for v in ccgram.values.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_ccgram(bytes: &[u8]) -> Result<CCGram> {
    magic(bytes, CCG_MAGIC)?;
    let mut c = Cursor { bytes, pos: 4 };
    let rows = c.u32()?;
    let cols = c.u32()?;
    let spacing_deg = c.u32()? as f64 / 1000.0;
    let config_hash: [u8; 16] = c.take(16)?.try_into().unwrap();
    let data = c.f64s(rows, cols)?;
    c.finish()?;
    let mut g = CCGram::new(Matrix::from_vec(rows as usize, cols as usize, data)?, spacing_deg);
    g.config_hash = config_hash;
    Ok(g)
}

/// Writes a CCGRAM atomically. The source id is not stored.
pub fn write_ccgram(path: &Path, ccgram: &CCGram) -> Result<()> {
    super::atomic_write(path, &encode_ccgram(ccgram)?)
}

/// Reads a CCGRAM; its source id becomes the file stem.
pub fn read_ccgram(path: &Path) -> Result<CCGram> {
    let mut g = decode_ccgram(&std::fs::read(path)?)?;
    g.source_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Flat named-tensor directory plus string metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub config_hash: [u8; 16],
    pub metadata: BTreeMap<String, String>,
    pub tensors: Vec<Tensor>,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl Checkpoint {
    pub fn new(config_hash: [u8; 16]) -> Self {
        Self {
            config_hash,
            ..Self::default()
        }
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidConfig(format!("checkpoint lacks metadata {key:?}")))
    }

    fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta(key)?;
        raw.parse()
            .map_err(|_| Error::InvalidConfig(format!("bad checkpoint metadata {key}={raw:?}")))
    }

    pub fn push_mlp(&mut self, prefix: &str, mlp: &Mlp) {
        self.metadata.insert(format!("{prefix}.activations"), join(&mlp.activations));
        for (name, rows, cols, data) in mlp.named_tensors(prefix) {
            self.tensors.push(Tensor { name, rows, cols, data });
        }
    }

    pub fn has_mlp(&self, prefix: &str) -> bool {
        self.metadata.contains_key(&format!("{prefix}.activations"))
    }

    pub fn mlp(&self, prefix: &str) -> Result<Mlp> {
        let activations: Vec<Activation> = self
            .meta(&format!("{prefix}.activations"))?
            .split(',')
            .map(str::parse)
            .collect::<Result<_>>()?;
        let mut layers = Vec::with_capacity(activations.len());
        for i in 0..activations.len() {
            let w = self.tensor(&format!("{prefix}.{i}.weight"))?;
            let b = self.tensor(&format!("{prefix}.{i}.bias"))?;
            if b.rows != w.rows || b.cols != 1 || w.data.len() != w.rows * w.cols || b.data.len() != b.rows {
                return Err(Error::DimensionMismatch {
                    context: "checkpoint layer",
                    expected: w.rows,
                    actual: b.rows,
                });
            }
            if let Some(prev) = layers.last().map(|l: &Dense| l.outputs) {
                if prev != w.cols {
                    return Err(Error::DimensionMismatch {
                        context: "checkpoint layer chain",
                        expected: prev,
                        actual: w.cols,
                    });
                }
            }
            layers.push(Dense {
                inputs: w.cols,
                outputs: w.rows,
                weights: w.data.clone(),
                bias: b.data.clone(),
            });
        }
        Ok(Mlp { layers, activations })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(&CKP_MAGIC);
        out.extend_from_slice(&self.config_hash);
        put_u32(&mut out, self.metadata.len() as u32);
        for (k, v) in &self.metadata {
            put_str(&mut out, k)?;
            put_str(&mut out, v)?;
        }
        put_u32(&mut out, self.tensors.len() as u32);
        for t in &self.tensors {
            let (rows, cols) = dims_u32(t.rows, t.cols)?;
            if t.data.len() != t.rows * t.cols {
                return Err(Error::DimensionMismatch {
                    context: "checkpoint tensor",
                    expected: t.rows * t.cols,
                    actual: t.data.len(),
                });
            }
            put_str(&mut out, &t.name)?;
            put_u32(&mut out, rows);
            put_u32(&mut out, cols);
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        magic(bytes, CKP_MAGIC)?;
        let mut c = Cursor { bytes, pos: 4 };
        let config_hash = c.take(16)?.try_into().unwrap();
        let mut metadata = BTreeMap::new();
        for _ in 0..c.u32()? {
            let k = c.string()?;
            let v = c.string()?;
            metadata.insert(k, v);
        }
        let mut tensors = Vec::new();
        for _ in 0..c.u32()? {
            let name = c.string()?;
            let rows = c.u32()?;
            let cols = c.u32()?;
            let data = c.f64s(rows, cols)?;
            tensors.push(Tensor {
                name,
                rows: rows as usize,
                cols: cols as usize,
                data,
            });
        }
        c.finish()?;
        Ok(Self {
            config_hash,
            metadata,
            tensors,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::atomic_write(path, &self.encode()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }

    pub fn kind(&self) -> Result<&str> {
        self.meta("kind")
    }

    pub fn from_simclr(model: &SimclrModel, config_hash: [u8; 16]) -> Self {
        let mut ck = Self::new(config_hash);
        let s = &model.spec;
        for (k, v) in [
            ("kind", "simclr".to_string()),
            ("input_dim", s.input_dim.to_string()),
            ("hidden", join(&s.hidden)),
            ("feature_dim", s.feature_dim.to_string()),
            ("activation", s.activation.to_string()),
            ("projector_hidden", s.projector_hidden.to_string()),
            ("projector_out", s.projector_out.to_string()),
        ] {
            ck.metadata.insert(k.into(), v);
        }
        ck.push_mlp("encoder", &model.encoder);
        ck.push_mlp("projector", &model.projector);
        ck
    }

    pub fn to_simclr(&self) -> Result<SimclrModel> {
        if self.kind()? != "simclr" {
            return Err(Error::InvalidConfig(format!("expected a simclr checkpoint, found {}", self.kind()?)));
        }
        let hidden_raw = self.meta("hidden")?;
        let hidden = if hidden_raw.is_empty() {
            Vec::new()
        } else {
            hidden_raw
                .split(',')
                .map(|h| h.parse().map_err(|_| Error::InvalidConfig(format!("bad hidden widths {hidden_raw:?}"))))
                .collect::<Result<_>>()?
        };
        let spec = EncoderSpec {
            input_dim: self.meta_parse("input_dim")?,
            hidden,
            feature_dim: self.meta_parse("feature_dim")?,
            activation: self.meta("activation")?.parse()?,
            projector_hidden: self.meta_parse("projector_hidden")?,
            projector_out: self.meta_parse("projector_out")?,
        };
        spec.validate()?;
        let model = SimclrModel {
            encoder: self.mlp("encoder")?,
            projector: self.mlp("projector")?,
            spec,
        };
        if model.encoder.input_dim() != model.spec.input_dim || model.encoder.output_dim() != model.spec.feature_dim {
            return Err(Error::DimensionMismatch {
                context: "checkpoint encoder",
                expected: model.spec.feature_dim,
                actual: model.encoder.output_dim(),
            });
        }
        Ok(model)
    }

    /// A probe head, optionally with the (fine-tuned) encoder it sits on.
    pub fn from_probe(probe: &ProbeModel, encoder: Option<&Mlp>, config_hash: [u8; 16]) -> Self {
        let mut ck = Self::new(config_hash);
        let c = &probe.config;
        for (k, v) in [
            ("kind", if encoder.is_some() { "finetuned" } else { "probe" }.to_string()),
            ("learning_rate", c.learning_rate.to_string()),
            ("epochs", c.epochs.to_string()),
            ("batch_size", c.batch_size.to_string()),
            ("weight_decay", c.weight_decay.to_string()),
        ] {
            ck.metadata.insert(k.into(), v);
        }
        if let Some(e) = encoder {
            ck.push_mlp("encoder", e);
        }
        ck.push_mlp("head", &probe.head);
        ck
    }

    pub fn to_probe(&self) -> Result<(ProbeModel, Option<Mlp>)> {
        match self.kind()? {
            "probe" | "finetuned" => {}
            other => return Err(Error::InvalidConfig(format!("expected a probe checkpoint, found {other}"))),
        }
        let config = ProbeConfig {
            learning_rate: self.meta_parse("learning_rate")?,
            epochs: self.meta_parse("epochs")?,
            batch_size: self.meta_parse("batch_size")?,
            weight_decay: self.meta_parse("weight_decay")?,
        };
        let encoder = if self.has_mlp("encoder") {
            Some(self.mlp("encoder")?)
        } else {
            None
        };
        Ok((
            ProbeModel {
                head: self.mlp("head")?,
                config,
            },
            encoder,
        ))
    }
}
