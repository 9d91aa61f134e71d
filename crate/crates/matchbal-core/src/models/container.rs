//! Versioned binary container for trained models.
//!
//! Byte layout (all integers little-endian, f64 as IEEE-754 LE bits):
//!
//! ```text
//! offset field
//! 0      magic "MBM1" (4 bytes)
//! 4      u16  format version (currently 1)
//! 6      u8   model kind tag
//! 7      u64  feature schema hash
//! 15     u8   train-day flag; if 1, followed by u32 start, u32 end
//! ..     mask: u32 dim, ceil(dim/8) bytes of keep bits (LSB first),
//!        u32 provenance byte length, provenance UTF-8 bytes
//! ..     normalizer: u32 dim, dim f64 means, dim f64 deviations
//! ..     parameters, by kind:
//!          Dummy:                f64 mean
//!          AvgSkill | Linear |
//!          Logistic:             u32 d, d f64 coefficients, f64 intercept
//!          RandomForest:         u32 n_features, u32 d, d f64 importance,
//!                                u32 n_trees, per tree: u32 n_nodes,
//!                                nodes as u8 tag (0 = leaf, 1 = split);
//!                                leaf: f64 value; split: u32 feature,
//!                                f64 threshold, u32 left, u32 right
//!          MlpRegressor |
//!          MlpSoftmax:           u8 head (0 regression, 1 softmax),
//!                                u32 n_layers, per layer: u32 out, u32 in,
//!                                out*in f64 weights (row-major), out f64 bias
//! end    u64 FNV-1a checksum of every preceding byte
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::FeatureMask;
use crate::error::{Error, Result};
use crate::features::Normalizer;
use crate::linalg::Matrix;

use super::forest::{Forest, Tree, TreeNode};
use super::linear::LinearParams;
use super::mlp::{DenseLayer, MlpHead, MlpNet};
use super::{ModelKind, ModelParams, TrainedModel};

const MAGIC: &[u8; 4] = b"MBM1";
const VERSION: u16 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::with_capacity(256) }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        self.u32(vs.len() as u32);
        for &v in vs {
            self.f64(v);
        }
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "truncated container: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        if n > self.buf.len() / 8 + 1 {
            return Err(Error::Format(format!("implausible vector length {n}")));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        core::str::from_utf8(bytes)
            .map(String::from)
            .map_err(|_| Error::Format("provenance is not valid UTF-8".into()))
    }
}

/// Encode a trained model to its container bytes.
pub fn serialize(model: &TrainedModel) -> Vec<u8> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u16(VERSION);
    w.u8(model.kind.tag());
    w.u64(model.schema_hash);
    match model.train_days {
        Some((start, end)) => {
            w.u8(1);
            w.u32(start);
            w.u32(end);
        }
        None => w.u8(0),
    }

    // mask
    w.u32(model.mask.dim() as u32);
    let mut packed = vec![0u8; model.mask.dim().div_ceil(8)];
    for (i, &keep) in model.mask.keep.iter().enumerate() {
        if keep {
            packed[i / 8] |= 1 << (i % 8);
        }
    }
    w.buf.extend_from_slice(&packed);
    w.str(&model.mask.provenance);

    // normalizer
    w.u32(model.normalizer.dim() as u32);
    for &m in &model.normalizer.mean {
        w.f64(m);
    }
    for &s in &model.normalizer.std {
        w.f64(s);
    }

    match &model.params {
        ModelParams::Mean(m) => w.f64(*m),
        ModelParams::Linear(p) | ModelParams::Logistic(p) => {
            w.f64s(&p.coef);
            w.f64(p.intercept);
        }
        ModelParams::Forest(f) => {
            w.u32(f.n_features);
            w.f64s(&f.importance);
            w.u32(f.trees.len() as u32);
            for tree in &f.trees {
                w.u32(tree.nodes.len() as u32);
                for node in &tree.nodes {
                    match node {
                        TreeNode::Leaf { value } => {
                            w.u8(0);
                            w.f64(*value);
                        }
                        TreeNode::Split { feature, threshold, left, right } => {
                            w.u8(1);
                            w.u32(*feature);
                            w.f64(*threshold);
                            w.u32(*left);
                            w.u32(*right);
                        }
                    }
                }
            }
        }
        ModelParams::Mlp(net) => {
            w.u8(match net.head {
                MlpHead::Regression => 0,
                MlpHead::Softmax => 1,
            });
            w.u32(net.layers.len() as u32);
            for layer in &net.layers {
                w.u32(layer.weights.rows() as u32);
                w.u32(layer.weights.cols() as u32);
                for &v in layer.weights.data() {
                    w.f64(v);
                }
                for &b in &layer.bias {
                    w.f64(b);
                }
            }
        }
    }

    let checksum = fnv1a(&w.buf);
    w.u64(checksum);
    w.buf
}

/// Decode container bytes back into a trained model. Any mismatch in
/// magic, version, checksum or section lengths is a format error.
pub fn deserialize(bytes: &[u8]) -> Result<TrainedModel> {
    if bytes.len() < MAGIC.len() + 2 + 8 {
        return Err(Error::Format("container too short".into()));
    }
    let (body, checksum_bytes) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(checksum_bytes.try_into().unwrap());
    if fnv1a(body) != stored {
        return Err(Error::Format("checksum mismatch (corrupted container)".into()));
    }

    let mut r = Reader::new(body);
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version} (expected {VERSION})"
        )));
    }
    let kind = ModelKind::from_tag(r.u8()?)?;
    let schema_hash = r.u64()?;
    let train_days = match r.u8()? {
        0 => None,
        1 => Some((r.u32()?, r.u32()?)),
        other => return Err(Error::Format(format!("bad train-day flag {other}"))),
    };

    let mask_dim = r.u32()? as usize;
    let packed = r.take(mask_dim.div_ceil(8))?;
    let keep: Vec<bool> = (0..mask_dim).map(|i| packed[i / 8] & (1 << (i % 8)) != 0).collect();
    let provenance = r.str()?;
    let mask = FeatureMask { keep, provenance };
    mask.validate().map_err(|_| Error::Format("mask keeps no coordinates".into()))?;

    let norm_dim = r.u32()? as usize;
    let mut mean = Vec::with_capacity(norm_dim);
    for _ in 0..norm_dim {
        mean.push(r.f64()?);
    }
    let mut std = Vec::with_capacity(norm_dim);
    for _ in 0..norm_dim {
        std.push(r.f64()?);
    }
    let normalizer = Normalizer { mean, std };
    if normalizer.dim() != mask.dim() {
        return Err(Error::Format("mask and normalizer dimensions disagree".into()));
    }

    let params = match kind {
        ModelKind::Dummy => ModelParams::Mean(r.f64()?),
        ModelKind::AvgSkill | ModelKind::Linear | ModelKind::Logistic => {
            let coef = r.f64s()?;
            let intercept = r.f64()?;
            let p = LinearParams { coef, intercept };
            if kind == ModelKind::Logistic {
                ModelParams::Logistic(p)
            } else {
                ModelParams::Linear(p)
            }
        }
        ModelKind::RandomForest => {
            let n_features = r.u32()?;
            let importance = r.f64s()?;
            let n_trees = r.u32()? as usize;
            let mut trees = Vec::with_capacity(n_trees.min(1 << 20));
            for _ in 0..n_trees {
                let n_nodes = r.u32()? as usize;
                let mut nodes = Vec::with_capacity(n_nodes.min(1 << 24));
                for _ in 0..n_nodes {
                    let node = match r.u8()? {
                        0 => TreeNode::Leaf { value: r.f64()? },
                        1 => TreeNode::Split {
                            feature: r.u32()?,
                            threshold: r.f64()?,
                            left: r.u32()?,
                            right: r.u32()?,
                        },
                        other => {
                            return Err(Error::Format(format!("bad tree node tag {other}")))
                        }
                    };
                    nodes.push(node);
                }
                for node in &nodes {
                    if let TreeNode::Split { left, right, .. } = node {
                        if *left as usize >= nodes.len() || *right as usize >= nodes.len() {
                            return Err(Error::Format("tree child index out of range".into()));
                        }
                    }
                }
                trees.push(Tree { nodes });
            }
            ModelParams::Forest(Forest { trees, n_features, importance })
        }
        ModelKind::MlpRegressor | ModelKind::MlpSoftmax => {
            let head = match r.u8()? {
                0 => MlpHead::Regression,
                1 => MlpHead::Softmax,
                other => return Err(Error::Format(format!("bad MLP head tag {other}"))),
            };
            let n_layers = r.u32()? as usize;
            let mut layers = Vec::with_capacity(n_layers.min(64));
            for _ in 0..n_layers {
                let out = r.u32()? as usize;
                let inp = r.u32()? as usize;
                if out.checked_mul(inp).is_none_or(|n| n > body.len() / 8 + 1) {
                    return Err(Error::Format("implausible layer shape".into()));
                }
                let mut data = Vec::with_capacity(out * inp);
                for _ in 0..out * inp {
                    data.push(r.f64()?);
                }
                let weights = Matrix::from_vec(out, inp, data)
                    .map_err(|_| Error::Format("bad layer shape".into()))?;
                let mut bias = Vec::with_capacity(out);
                for _ in 0..out {
                    bias.push(r.f64()?);
                }
                layers.push(DenseLayer { weights, bias });
            }
            ModelParams::Mlp(MlpNet { layers, head })
        }
    };

    if r.pos != body.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after parameters",
            body.len() - r.pos
        )));
    }

    Ok(TrainedModel { kind, params, normalizer, mask, schema_hash, train_days })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{train_model, TrainOptions};
    use alloc::vec;
    use rand::Rng;

    fn fixture(kind: ModelKind) -> TrainedModel {
        let mut rng = crate::rngx::rng_from_seed(17);
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| (0..6).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| {
                if kind.is_classifier() {
                    f64::from(u8::from(r[0] + r[1] > 0.0))
                } else {
                    2.0 * r[0] - r[3] + 0.1
                }
            })
            .collect();
        let normalizer = Normalizer::fit(&x).unwrap();
        let mask = FeatureMask::from_indices(6, &[0, 1, 3, 4], "test subset").unwrap();
        let opts = TrainOptions {
            forest: crate::models::ForestHyper { n_trees: 12, seed: 5, ..Default::default() },
            mlp: crate::models::MlpConfig {
                hidden: vec![8, 4],
                max_epochs: 5,
                seed: 9,
                ..Default::default()
            },
            ..TrainOptions::default()
        };
        train_model(kind, &x, &y, None, &normalizer, &mask, 0xfeed, Some((0, 9)), &opts).unwrap()
    }

    #[test]
    fn round_trip_is_prediction_identical_for_every_kind() {
        let mut rng = crate::rngx::rng_from_seed(23);
        let probes: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..6).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect())
            .collect();
        for kind in ModelKind::ALL {
            let model = fixture(kind);
            let bytes = serialize(&model);
            let restored = deserialize(&bytes).unwrap();
            assert_eq!(restored.kind, kind);
            assert_eq!(restored.schema_hash, 0xfeed);
            assert_eq!(restored, model);
            for probe in &probes {
                let a = model.predict(probe).unwrap();
                let b = restored.predict(probe).unwrap();
                assert_eq!(a.to_bits(), b.to_bits(), "kind {kind:?}");
            }
        }
    }

    #[test]
    fn corruption_is_detected_not_crashed() {
        let model = fixture(ModelKind::Linear);
        let bytes = serialize(&model);
        for pos in [0usize, 5, 7, 20, bytes.len() / 2, bytes.len() - 9, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[pos] ^= 0x41;
            assert!(
                matches!(deserialize(&bad), Err(Error::Format(_))),
                "flip at {pos} must be a format error"
            );
        }
    }

    #[test]
    fn truncation_is_a_format_error() {
        let model = fixture(ModelKind::RandomForest);
        let bytes = serialize(&model);
        for cut in [3usize, 10, bytes.len() / 3, bytes.len() - 1] {
            assert!(matches!(deserialize(&bytes[..cut]), Err(Error::Format(_))));
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let model = fixture(ModelKind::Dummy);
        let mut bytes = serialize(&model);
        bytes[4] = 9; // bump the version field
        let body_len = bytes.len() - 8;
        let sum = fnv1a(&bytes[..body_len]);
        bytes[body_len..].copy_from_slice(&sum.to_le_bytes());
        let err = deserialize(&bytes).unwrap_err();
        assert!(matches!(err, Error::Format(m) if m.contains("version")));
    }
}
