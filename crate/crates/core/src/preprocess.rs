//! Digitization of raw post metadata into fixed-length numeric vectors.
//!
//! Free text becomes a length (or word count), booleans become `0/1`, and the
//! three categorical descriptors are mapped to dense integer ids assigned in
//! first-occurrence order over the fitting corpus.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Number of metadata fields, and hence of feature components.
pub const N_FEATURES: usize = 15;

/// Feature names in schema order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "uid",
    "pid",
    "category",
    "subcategory",
    "concept",
    "alias",
    "ispublic",
    "status",
    "title",
    "type",
    "tags",
    "date",
    "lat",
    "acc",
    "lon",
];

pub type FeatureVector = [f64; N_FEATURES];

/// One post's metadata. Absent numeric values are `None`; absent text is
/// the empty string.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub uid: Option<i64>,
    pub pid: Option<i64>,
    pub category: String,
    pub subcategory: String,
    pub concept: String,
    pub path_alias: String,
    pub is_public: bool,
    pub media_status: String,
    pub title: String,
    pub media_type: String,
    pub all_tags: String,
    /// Seconds since the epoch; never negative.
    pub post_date: Option<i64>,
    pub latitude: Option<f64>,
    pub geo_accuracy: Option<f64>,
    pub longitude: Option<f64>,
    pub label: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TextFeatureMode {
    /// Number of whitespace-delimited tokens.
    WordCount,
    /// Number of Unicode scalar values.
    #[default]
    TextLength,
}

impl TextFeatureMode {
    pub fn measure(self, text: &str) -> f64 {
        match self {
            TextFeatureMode::WordCount => text.split_whitespace().count() as f64,
            TextFeatureMode::TextLength => text_len(text),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TextFeatureMode::WordCount => "wordcount",
            TextFeatureMode::TextLength => "textlen",
        }
    }
}

impl FromStr for TextFeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wordcount" | "words" => Ok(TextFeatureMode::WordCount),
            "textlen" | "textlength" | "length" => Ok(TextFeatureMode::TextLength),
            other => Err(Error::InvalidConfig(format!("unknown text mode `{other}`"))),
        }
    }
}

fn text_len(text: &str) -> f64 {
    text.chars().count() as f64
}

/// Assigns each distinct value the index of its first occurrence among the
/// distinct values, e.g. `["a", "b", "a", "c"] -> [0, 1, 0, 2]`.
pub fn unique_id_convert<S: AsRef<str>>(values: &[S]) -> Vec<usize> {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    values
        .iter()
        .map(|v| {
            let next = ids.len();
            *ids.entry(v.as_ref()).or_insert(next)
        })
        .collect()
}

/// First-occurrence dictionary for one categorical field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    values: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn fit<'a, I: IntoIterator<Item = &'a str>>(values: I) -> Self {
        let mut map = IdMap::default();
        for v in values {
            map.insert(v);
        }
        map
    }

    /// Rebuilds a map from its values in id order.
    pub fn from_values(values: Vec<String>) -> Result<Self> {
        let mut map = IdMap::default();
        for v in &values {
            if map.index.contains_key(v) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate encoding value `{v}`"
                )));
            }
            map.insert(v);
        }
        Ok(map)
    }

    fn insert(&mut self, v: &str) -> usize {
        if let Some(&id) = self.index.get(v) {
            return id;
        }
        let id = self.values.len();
        self.values.push(v.to_owned());
        self.index.insert(v.to_owned(), id);
        id
    }

    pub fn get(&self, v: &str) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// Id of `v`, or the unseen sentinel `len()`.
    pub fn encode(&self, v: &str) -> usize {
        self.get(v).unwrap_or(self.values.len())
    }

    /// Number of distinct fitted values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fitted values in id order.
    pub fn values(&self) -> &[String] {
        &self.values
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncodingMaps {
    pub category: IdMap,
    pub subcategory: IdMap,
    pub concept: IdMap,
}

pub fn fit_encoding_maps(records: &[RawRecord]) -> Result<EncodingMaps> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(EncodingMaps {
        category: IdMap::fit(records.iter().map(|r| r.category.as_str())),
        subcategory: IdMap::fit(records.iter().map(|r| r.subcategory.as_str())),
        concept: IdMap::fit(records.iter().map(|r| r.concept.as_str())),
    })
}

pub fn digitize(record: &RawRecord, maps: &EncodingMaps, mode: TextFeatureMode) -> FeatureVector {
    let opt = |v: Option<f64>| v.filter(|x| x.is_finite()).unwrap_or(0.0);
    [
        record.uid.map_or(0.0, |v| v as f64),
        record.pid.map_or(0.0, |v| v as f64),
        maps.category.encode(&record.category) as f64,
        maps.subcategory.encode(&record.subcategory) as f64,
        maps.concept.encode(&record.concept) as f64,
        text_len(&record.path_alias),
        if record.is_public { 1.0 } else { 0.0 },
        text_len(&record.media_status),
        mode.measure(&record.title),
        text_len(&record.media_type),
        mode.measure(&record.all_tags),
        record.post_date.map_or(0.0, |v| v as f64),
        opt(record.latitude),
        opt(record.geo_accuracy),
        opt(record.longitude),
    ]
}

/// Digitizes every record into an `N x 15` matrix.
pub fn digitize_all(records: &[RawRecord], maps: &EncodingMaps, mode: TextFeatureMode) -> Matrix {
    let mut data = Vec::with_capacity(records.len() * N_FEATURES);
    for r in records {
        data.extend_from_slice(&digitize(r, maps, mode));
    }
    Matrix::new(records.len(), N_FEATURES, data).expect("row length is fixed")
}
