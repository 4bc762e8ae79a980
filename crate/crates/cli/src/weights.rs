//! Binary weight files.
//!
//! Layout (all integers little-endian `u32`, all parameters little-endian `f32`):
//!
//! ```text
//! "CWNN" | version | key_len | genotype key | input_side | head_classes
//!        | meta_len | meta text | layer_count
//!        | per layer: weight_count | weights… | bias_count | biases…
//! ```
//!
//! The meta text holds `key=value` lines: `objective`, `epochs`, `seed` and
//! one `class=<name>:<crop|weed>` line per taxonomy category in index order.
//! Parameters are stored at `f32` precision; models are kept at that precision
//! in memory, so a save/load cycle is exact.

use std::path::Path;

use weednet_core::dataset::{Category, Group, Taxonomy};
use weednet_core::nn::{Genotype, TrainedModel, TrainingMeta};
use weednet_core::objectives::ObjectiveKind;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"CWNN";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum WeightError {
    #[error("not a weight file (bad magic)")]
    BadMagic,
    #[error("unsupported weight file version {found} (expected {VERSION})")]
    VersionMismatch { found: u32 },
    #[error("weight file truncated")]
    Truncated,
    #[error("malformed weight file: {0}")]
    Malformed(String),
}

/// A trained model together with the taxonomy its outputs index into.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: TrainedModel,
    pub taxonomy: Taxonomy,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("length fits in u32").to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u32(out, b.len());
    out.extend_from_slice(b);
}

fn put_f32s(out: &mut Vec<u8>, v: &[f64]) {
    put_u32(out, v.len());
    for &x in v {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
}

pub fn encode(saved: &SavedModel) -> Vec<u8> {
    let m = &saved.model;
    let mut meta = String::new();
    let objective = m.meta.objective.map_or("none".to_string(), |o| o.to_string());
    meta.push_str(&format!("objective={objective}\nepochs={}\nseed={}\n", m.meta.epochs, m.meta.seed));
    for c in saved.taxonomy.categories() {
        meta.push_str(&format!("class={}:{}\n", c.name, c.group.as_str()));
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_bytes(&mut out, m.genotype().key().as_bytes());
    put_u32(&mut out, m.input_side());
    put_u32(&mut out, m.head_classes());
    put_bytes(&mut out, meta.as_bytes());
    put_u32(&mut out, m.weights().len());
    for (w, b) in m.weights().iter().zip(m.biases()) {
        put_f32s(&mut out, w);
        put_f32s(&mut out, b);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WeightError> {
        if self.buf.len() < n {
            return Err(WeightError::Truncated);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, WeightError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn len(&mut self) -> Result<usize, WeightError> {
        Ok(self.u32()? as usize)
    }

    fn text(&mut self) -> Result<&'a str, WeightError> {
        let n = self.len()?;
        std::str::from_utf8(self.take(n)?).map_err(|e| WeightError::Malformed(e.to_string()))
    }

    fn f32s(&mut self) -> Result<Vec<f64>, WeightError> {
        let n = self.len()?;
        let raw = self.take(n.checked_mul(4).ok_or(WeightError::Truncated)?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect())
    }
}

fn parse_meta(text: &str) -> Result<(TrainingMeta, Taxonomy), WeightError> {
    let bad = |m: String| WeightError::Malformed(m);
    let mut meta = TrainingMeta { objective: None, epochs: 0, seed: 0 };
    let mut cats = Vec::new();
    for line in text.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("meta line `{line}`")))?;
        match k {
            "objective" if v == "none" => meta.objective = None,
            "objective" => meta.objective = Some(v.parse::<ObjectiveKind>().map_err(|e| bad(e.to_string()))?),
            "epochs" => meta.epochs = v.parse().map_err(|_| bad(format!("epochs `{v}`")))?,
            "seed" => meta.seed = v.parse().map_err(|_| bad(format!("seed `{v}`")))?,
            "class" => {
                let (name, group) = v.rsplit_once(':').ok_or_else(|| bad(format!("class `{v}`")))?;
                let group: Group = group.parse().map_err(|e: weednet_core::Error| bad(e.to_string()))?;
                cats.push(Category { name: name.to_string(), group });
            }
            _ => return Err(bad(format!("unknown meta key `{k}`"))),
        }
    }
    let tax = Taxonomy::new(cats).map_err(|e| bad(e.to_string()))?;
    Ok((meta, tax))
}

pub fn decode(bytes: &[u8]) -> Result<SavedModel, WeightError> {
    let mut r = Reader { buf: bytes };
    if r.take(4).map_err(|_| WeightError::BadMagic)? != MAGIC {
        return Err(WeightError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(WeightError::VersionMismatch { found: version });
    }
    let genotype: Genotype = r.text()?.parse().map_err(|e: weednet_core::Error| WeightError::Malformed(e.to_string()))?;
    let input_side = r.len()?;
    let head = r.len()?;
    let (meta, taxonomy) = parse_meta(r.text()?)?;
    let layers = r.len()?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for _ in 0..layers {
        weights.push(r.f32s()?);
        biases.push(r.f32s()?);
    }
    if !r.buf.is_empty() {
        return Err(WeightError::Malformed(format!("{} trailing bytes", r.buf.len())));
    }
    let model = TrainedModel::from_parts(genotype, input_side, head, weights, biases, meta)
        .map_err(|e| WeightError::Malformed(e.to_string()))?;
    Ok(SavedModel { model, taxonomy })
}

pub fn save(path: &Path, saved: &SavedModel) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    std::fs::write(path, encode(saved)).map_err(CliError::io(path))
}

pub fn load(path: &Path) -> Result<SavedModel> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    decode(&bytes).map_err(|source| CliError::Weights { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use weednet_core::nn::realize;

    fn sample() -> SavedModel {
        let taxonomy = Taxonomy::from_groups(&["maize"], &["thistle", "dock:x"]).unwrap();
        let g: Genotype = "dilated:8d2-16d3".parse().unwrap();
        let mut model = realize(&g, 4, 16, 3).unwrap();
        model.meta = TrainingMeta { objective: Some(ObjectiveKind::Dm), epochs: 7, seed: 3 };
        SavedModel { model, taxonomy }
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        let bytes = encode(&s);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn predictions_survive_round_trip() {
        let s = sample();
        let back = decode(&encode(&s)).unwrap();
        let x: Vec<f64> = (0..16 * 16 * 3).map(|i| (i % 17) as f64 / 17.0).collect();
        assert_eq!(s.model.predict_proba(&x).unwrap(), back.model.predict_proba(&x).unwrap());
    }

    #[test]
    fn header_errors() {
        let bytes = encode(&sample());
        assert!(matches!(decode(b"NOPE\x01\0\0\0"), Err(WeightError::BadMagic)));
        assert!(matches!(decode(b"CW"), Err(WeightError::BadMagic)));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(decode(&v2), Err(WeightError::VersionMismatch { found: 2 })));
        for cut in [8, 20, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(WeightError::Truncated)), "cut {cut}");
        }
    }
}
