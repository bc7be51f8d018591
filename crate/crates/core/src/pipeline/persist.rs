//! Binary model files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "RFNE" | version: u32 | payload length: u64 | payload | CRC-32 of payload: u32
//! ```
//!
//! The payload holds the encoding maps, text mode and the trained model
//! (which carries its own [`RefineConfig`]). Floats are stored as raw bits
//! so predictions survive a round trip exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::boost::{BoostClassifier, BoostParams, Stump};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams, Node, RegressionTree, TreeParams};
use crate::preprocess::{EncodingMaps, IdMap, TextFeatureMode};
use crate::refine::{RefineConfig, RefinementModel, Stage, TraceEntry};

pub const MAGIC: &[u8; 4] = b"RFNE";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8;

/// Everything needed to score raw records with a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: RefinementModel,
    pub maps: EncodingMaps,
    pub mode: TextFeatureMode,
}

impl ModelBundle {
    pub fn config(&self) -> &RefineConfig {
        self.model.config()
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn bool(&mut self, v: bool) {
        self.u8(u8::from(v));
    }
    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn opt_usize(&mut self, v: Option<usize>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.usize(x);
            }
            None => self.u8(0),
        }
    }

    fn tree_params(&mut self, p: &TreeParams) {
        self.opt_usize(p.max_depth);
        self.usize(p.min_samples_leaf);
        self.usize(p.features_per_split);
    }
    fn forest_params(&mut self, p: &ForestParams) {
        self.tree_params(&p.tree);
        self.usize(p.tree_count);
        self.bool(p.bootstrap);
    }
    fn config(&mut self, c: &RefineConfig) {
        self.usize(c.k);
        self.f64(c.t_y);
        self.forest_params(&c.base);
        match &c.compensator {
            Some(p) => {
                self.u8(1);
                self.forest_params(p);
            }
            None => self.u8(0),
        }
        self.usize(c.boost.rounds);
        self.u64(c.seed);
    }
    fn tree(&mut self, t: &RegressionTree) {
        self.usize(t.n_features);
        self.usize(t.nodes.len());
        for node in &t.nodes {
            match *node {
                Node::Leaf { value, samples } => {
                    self.u8(0);
                    self.f64(value);
                    self.usize(samples);
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    samples,
                    impurity_decrease,
                } => {
                    self.u8(1);
                    self.usize(feature);
                    self.f64(threshold);
                    self.usize(left);
                    self.usize(right);
                    self.usize(samples);
                    self.f64(impurity_decrease);
                }
            }
        }
    }
    fn forest(&mut self, f: &Forest) {
        self.forest_params(&f.params);
        self.u64(f.seed);
        self.usize(f.trees.len());
        for t in &f.trees {
            self.tree(t);
        }
    }
    fn boost(&mut self, b: &BoostClassifier) {
        self.usize(b.stages.len());
        for (stump, alpha) in &b.stages {
            self.usize(stump.feature);
            self.f64(stump.threshold);
            self.u8(stump.polarity as u8);
            self.f64(*alpha);
        }
    }
    fn id_map(&mut self, m: &IdMap) {
        self.usize(m.len());
        for v in m.values() {
            self.str(v);
        }
    }
    fn bundle(&mut self, b: &ModelBundle) {
        self.id_map(&b.maps.category);
        self.id_map(&b.maps.subcategory);
        self.id_map(&b.maps.concept);
        self.u8(match b.mode {
            TextFeatureMode::WordCount => 0,
            TextFeatureMode::TextLength => 1,
        });
        let m = &b.model;
        self.config(&m.config);
        self.forest(&m.base);
        self.usize(m.stages.len());
        for stage in &m.stages {
            match &stage.gate {
                Some(g) => {
                    self.u8(1);
                    self.boost(g);
                }
                None => self.u8(0),
            }
            match &stage.compensator {
                Some(c) => {
                    self.u8(1);
                    self.forest(c);
                }
                None => self.u8(0),
            }
        }
        self.usize(m.trace.len());
        for e in &m.trace {
            self.usize(e.iteration);
            self.f64(e.train_mse);
            self.f64(e.threshold);
            self.usize(e.extreme_count);
            self.bool(e.degenerate);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptModel(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| corrupt("unexpected end of payload"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("length out of range"))
    }
    /// A count of items that each occupy at least `min_bytes`; guards allocations.
    fn count(&mut self, min_bytes: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(min_bytes) > self.buf.len() - self.pos {
            return Err(corrupt("count exceeds payload"));
        }
        Ok(n)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            t => Err(corrupt(format!("invalid bool tag {t}"))),
        }
    }
    fn flag(&mut self) -> Result<bool> {
        self.bool()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.count(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("invalid UTF-8 string"))
    }
    fn opt_usize(&mut self) -> Result<Option<usize>> {
        Ok(if self.flag()? {
            Some(self.usize()?)
        } else {
            None
        })
    }

    fn tree_params(&mut self) -> Result<TreeParams> {
        Ok(TreeParams {
            max_depth: self.opt_usize()?,
            min_samples_leaf: self.usize()?,
            features_per_split: self.usize()?,
        })
    }
    fn forest_params(&mut self) -> Result<ForestParams> {
        Ok(ForestParams {
            tree: self.tree_params()?,
            tree_count: self.usize()?,
            bootstrap: self.bool()?,
        })
    }
    fn config(&mut self) -> Result<RefineConfig> {
        Ok(RefineConfig {
            k: self.usize()?,
            t_y: self.f64()?,
            base: self.forest_params()?,
            compensator: if self.flag()? {
                Some(self.forest_params()?)
            } else {
                None
            },
            boost: BoostParams {
                rounds: self.usize()?,
            },
            seed: self.u64()?,
        })
    }
    fn tree(&mut self) -> Result<RegressionTree> {
        let n_features = self.usize()?;
        let count = self.count(17)?;
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            nodes.push(match self.u8()? {
                0 => Node::Leaf {
                    value: self.f64()?,
                    samples: self.usize()?,
                },
                1 => Node::Split {
                    feature: self.usize()?,
                    threshold: self.f64()?,
                    left: self.usize()?,
                    right: self.usize()?,
                    samples: self.usize()?,
                    impurity_decrease: self.f64()?,
                },
                t => return Err(corrupt(format!("invalid node tag {t}"))),
            });
        }
        RegressionTree::from_nodes(nodes, n_features).map_err(|e| corrupt(e.to_string()))
    }
    fn forest(&mut self) -> Result<Forest> {
        let params = self.forest_params()?;
        let seed = self.u64()?;
        let count = self.count(8)?;
        let trees = (0..count)
            .map(|_| self.tree())
            .collect::<Result<Vec<_>>>()?;
        Forest::from_parts(trees, params, seed).map_err(|e| corrupt(e.to_string()))
    }
    fn boost(&mut self) -> Result<BoostClassifier> {
        let count = self.count(25)?;
        let mut stages = Vec::with_capacity(count);
        for _ in 0..count {
            let stump = Stump {
                feature: self.usize()?,
                threshold: self.f64()?,
                polarity: self.u8()? as i8,
            };
            stages.push((stump, self.f64()?));
        }
        BoostClassifier::from_stages(stages).map_err(|e| corrupt(e.to_string()))
    }
    fn id_map(&mut self) -> Result<IdMap> {
        let count = self.count(8)?;
        let values = (0..count).map(|_| self.str()).collect::<Result<Vec<_>>>()?;
        IdMap::from_values(values).map_err(|e| corrupt(e.to_string()))
    }
    fn bundle(&mut self) -> Result<ModelBundle> {
        let maps = EncodingMaps {
            category: self.id_map()?,
            subcategory: self.id_map()?,
            concept: self.id_map()?,
        };
        let mode = match self.u8()? {
            0 => TextFeatureMode::WordCount,
            1 => TextFeatureMode::TextLength,
            t => return Err(corrupt(format!("invalid text mode tag {t}"))),
        };
        let config = self.config()?;
        let base = self.forest()?;
        let count = self.count(2)?;
        let mut stages = Vec::with_capacity(count);
        for _ in 0..count {
            let gate = if self.flag()? {
                Some(self.boost()?)
            } else {
                None
            };
            let compensator = if self.flag()? {
                Some(self.forest()?)
            } else {
                None
            };
            stages.push(Stage { gate, compensator });
        }
        let count = self.count(33)?;
        let mut trace = Vec::with_capacity(count);
        for _ in 0..count {
            trace.push(TraceEntry {
                iteration: self.usize()?,
                train_mse: self.f64()?,
                threshold: self.f64()?,
                extreme_count: self.usize()?,
                degenerate: self.bool()?,
            });
        }
        if self.pos != self.buf.len() {
            return Err(corrupt("trailing bytes after model"));
        }
        let model = RefinementModel::from_parts(base, stages, config, trace)?;
        Ok(ModelBundle { model, maps, mode })
    }
}

pub fn encode_model(bundle: &ModelBundle) -> Vec<u8> {
    let mut payload = Writer { buf: Vec::new() };
    payload.bundle(bundle);
    let payload = payload.buf;

    let mut out = Writer {
        buf: Vec::with_capacity(HEADER_LEN + payload.len() + 4),
    };
    out.buf.extend_from_slice(MAGIC);
    out.u32(FORMAT_VERSION);
    out.usize(payload.len());
    out.buf.extend_from_slice(&payload);
    out.u32(crc32fast::hash(&payload));
    out.buf
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelBundle> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(corrupt("truncated header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if len != (bytes.len() - HEADER_LEN - 4) as u64 {
        return Err(corrupt(format!(
            "payload length {len} does not match file size {}",
            bytes.len()
        )));
    }
    let payload = &bytes[HEADER_LEN..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }
    Reader {
        buf: payload,
        pos: 0,
    }
    .bundle()
}

pub fn save_model(bundle: &ModelBundle, path: &Path) -> Result<()> {
    let bytes = encode_model(bundle);
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelBundle> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode_model(&bytes)
}

#[derive(Serialize)]
struct Summary<'a> {
    text_mode: &'static str,
    config: &'a RefineConfig,
    training_trace: &'a [TraceEntry],
}

/// Human-readable JSON with the training configuration and trace.
pub fn summary_json(bundle: &ModelBundle) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Summary {
        text_mode: bundle.mode.as_str(),
        config: bundle.model.config(),
        training_trace: bundle.model.training_trace(),
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::preprocess::{fit_encoding_maps, RawRecord};
    use crate::refine::train_refinement;
    use rand::{Rng, SeedableRng};

    fn bundle(t_y: f64) -> ModelBundle {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| (0..15).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0] * 3.0 + if r[1] > 0.8 { 10.0 } else { 0.0 })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let config = RefineConfig {
            k: 2,
            t_y,
            base: ForestParams {
                tree_count: 8,
                ..Default::default()
            },
            boost: BoostParams { rounds: 10 },
            seed: 4,
            ..Default::default()
        };
        let records = vec![
            RawRecord {
                category: "Food".into(),
                concept: "東京".into(),
                ..Default::default()
            },
            RawRecord {
                category: "Pets".into(),
                ..Default::default()
            },
        ];
        ModelBundle {
            model: train_refinement(&x, &y, &config).unwrap(),
            maps: fit_encoding_maps(&records).unwrap(),
            mode: TextFeatureMode::WordCount,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for t_y in [0.0, 0.3] {
            let b = bundle(t_y);
            let decoded = decode_model(&encode_model(&b)).unwrap();
            assert_eq!(decoded, b);
        }
    }

    #[test]
    fn header_checks() {
        let bytes = encode_model(&bundle(0.3));

        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_model(&bad), Err(Error::BadMagic)));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            decode_model(&bad),
            Err(Error::VersionUnsupported(9))
        ));

        let mut bad = bytes.clone();
        bad[HEADER_LEN + 10] ^= 0x40;
        assert!(matches!(
            decode_model(&bad),
            Err(Error::ChecksumMismatch { .. })
        ));

        assert!(matches!(
            decode_model(&bytes[..bytes.len() - 1]),
            Err(Error::CorruptModel(_))
        ));
        assert!(matches!(decode_model(b""), Err(Error::BadMagic)));
    }

    #[test]
    fn every_payload_byte_is_covered() {
        let bytes = encode_model(&bundle(0.0));
        for i in (HEADER_LEN..bytes.len() - 4).step_by(97) {
            let mut bad = bytes.clone();
            bad[i] ^= 1;
            assert!(
                matches!(decode_model(&bad), Err(Error::ChecksumMismatch { .. })),
                "byte {i}"
            );
        }
    }

    #[test]
    fn file_round_trip_and_summary() {
        let b = bundle(0.3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.rfne");
        save_model(&b, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), b);
        assert!(matches!(
            load_model(&dir.path().join("none")),
            Err(Error::FileNotFound(_))
        ));

        let json: serde_json::Value = serde_json::from_str(&summary_json(&b).unwrap()).unwrap();
        assert_eq!(json["config"]["k"], 2);
        assert_eq!(json["training_trace"].as_array().unwrap().len(), 3);
        assert_eq!(json["text_mode"], "wordcount");
    }
}
