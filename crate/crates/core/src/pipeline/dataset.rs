//! Reading and writing post metadata as TSV or JSON Lines.
//!
//! Both formats use the column names in [`COLUMNS`], plus an optional
//! `label`. Numeric fields that fail to parse are loaded as absent and
//! counted in [`LoadWarnings`] rather than rejecting the row.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::preprocess::RawRecord;

/// Metadata columns in schema order.
pub const COLUMNS: [&str; 15] = [
    "uid",
    "pid",
    "category",
    "subcategory",
    "concept",
    "pathalias",
    "ispublic",
    "mediastatus",
    "title",
    "mediatype",
    "alltags",
    "postdate",
    "latitude",
    "geoaccuracy",
    "longitude",
];

pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Tsv,
    Jsonl,
}

impl DataFormat {
    /// Guess from the file extension; defaults to TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => DataFormat::Jsonl,
            _ => DataFormat::Tsv,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(DataFormat::Tsv),
            "jsonl" => Ok(DataFormat::Jsonl),
            other => Err(Error::InvalidConfig(format!(
                "unknown data format `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<RawRecord>,
    /// Source path or generator description.
    pub provenance: String,
}

impl Dataset {
    pub fn new(records: Vec<RawRecord>, provenance: impl Into<String>) -> Self {
        Dataset {
            records,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_labels(&self) -> bool {
        self.records.iter().all(|r| r.label.is_some())
    }

    /// Labels aligned with the records; fails if any record lacks one.
    pub fn labels(&self) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| r.label.ok_or(Error::MissingLabels))
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Per-column count of values that could not be parsed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadWarnings {
    counts: BTreeMap<&'static str, usize>,
}

impl LoadWarnings {
    fn bump(&mut self, column: &'static str) {
        *self.counts.entry(column).or_insert(0) += 1;
    }

    pub fn get(&self, column: &str) -> usize {
        self.counts.get(column).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, usize)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }
}

impl fmt::Display for LoadWarnings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Renames file columns to schema columns, for files whose headers use
/// different names.
///
/// Text form: one `schema_name = file_column` pair per line; blank lines
/// and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnMapping {
    file_to_schema: HashMap<String, String>,
}

impl ColumnMapping {
    pub fn parse(text: &str) -> Result<Self> {
        let mut file_to_schema = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (schema, file) = line.split_once('=').ok_or_else(|| Error::MalformedRecord {
                line: n + 1,
                reason: "expected `schema_name = file_column`".into(),
            })?;
            let schema = schema.trim();
            if !COLUMNS.contains(&schema) && schema != LABEL_COLUMN {
                return Err(Error::SchemaMismatch(format!(
                    "unknown schema column `{schema}` in mapping"
                )));
            }
            file_to_schema.insert(file.trim().to_owned(), schema.to_owned());
        }
        Ok(ColumnMapping { file_to_schema })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?)
    }

    fn resolve<'a>(&'a self, file_column: &'a str) -> &'a str {
        self.file_to_schema
            .get(file_column)
            .map(String::as_str)
            .unwrap_or(file_column)
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<(Dataset, LoadWarnings)> {
    load_dataset_mapped(path, format, &ColumnMapping::default())
}

pub fn load_dataset_mapped(
    path: &Path,
    format: DataFormat,
    mapping: &ColumnMapping,
) -> Result<(Dataset, LoadWarnings)> {
    let text = read_file(path)?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let (records, warnings) = match format {
        DataFormat::Tsv => parse_tsv(&text, mapping)?,
        DataFormat::Jsonl => parse_jsonl(&text, mapping)?,
    };
    Ok((Dataset::new(records, path.display().to_string()), warnings))
}

/// Field-level parsing shared by both formats.
struct FieldParser<'w> {
    warnings: &'w mut LoadWarnings,
}

impl FieldParser<'_> {
    fn int(&mut self, column: &'static str, raw: &str) -> Option<i64> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        let parsed = raw.parse::<i64>().ok().or_else(|| {
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15)
                .map(|v| v as i64)
        });
        if parsed.is_none() {
            self.warnings.bump(column);
        }
        parsed
    }

    fn date(&mut self, column: &'static str, raw: &str) -> Option<i64> {
        match self.int(column, raw) {
            Some(v) if v < 0 => {
                self.warnings.bump(column);
                None
            }
            other => other,
        }
    }

    fn real(&mut self, column: &'static str, raw: &str) -> Option<f64> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        let parsed = raw.parse::<f64>().ok().filter(|v| v.is_finite());
        if parsed.is_none() {
            self.warnings.bump(column);
        }
        parsed
    }

    fn boolean(&mut self, column: &'static str, raw: &str) -> bool {
        match raw.trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "t" | "yes" => true,
            "" | "0" | "false" | "f" | "no" => false,
            _ => {
                self.warnings.bump(column);
                false
            }
        }
    }
}

/// Builds a record from schema-ordered raw strings (16th = label, optional).
fn record_from_fields(fields: [&str; 16], p: &mut FieldParser<'_>) -> RawRecord {
    RawRecord {
        uid: p.int("uid", fields[0]),
        pid: p.int("pid", fields[1]),
        category: fields[2].to_owned(),
        subcategory: fields[3].to_owned(),
        concept: fields[4].to_owned(),
        path_alias: fields[5].to_owned(),
        is_public: p.boolean("ispublic", fields[6]),
        media_status: fields[7].to_owned(),
        title: fields[8].to_owned(),
        media_type: fields[9].to_owned(),
        all_tags: fields[10].to_owned(),
        post_date: p.date("postdate", fields[11]),
        latitude: p.real("latitude", fields[12]),
        geo_accuracy: p.real("geoaccuracy", fields[13]),
        longitude: p.real("longitude", fields[14]),
        label: p.real("label", fields[15]),
    }
}

fn schema_positions<'a, I>(
    names: I,
    mapping: &ColumnMapping,
) -> Result<([Option<usize>; 16], usize)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut positions = [None; 16];
    let mut width = 0;
    for (i, name) in names.into_iter().enumerate() {
        width = i + 1;
        let name = mapping.resolve(name.trim());
        if let Some(slot) = COLUMNS.iter().position(|c| *c == name) {
            positions[slot] = Some(i);
        } else if name == LABEL_COLUMN {
            positions[15] = Some(i);
        }
    }
    let missing: Vec<&str> = COLUMNS
        .iter()
        .zip(&positions)
        .filter(|(_, p)| p.is_none())
        .map(|(c, _)| *c)
        .collect();
    if !missing.is_empty() {
        return Err(Error::SchemaMismatch(format!(
            "missing column(s): {}",
            missing.join(", ")
        )));
    }
    Ok((positions, width))
}

fn escape_tsv(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_tsv(s: &str) -> String {
    if !s.contains('\\') {
        return s.to_owned();
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn parse_tsv(text: &str, mapping: &ColumnMapping) -> Result<(Vec<RawRecord>, LoadWarnings)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_end_matches('\r').is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::SchemaMismatch("missing header row".into()))?;
    let (positions, width) = schema_positions(header.trim_end_matches('\r').split('\t'), mapping)?;

    let mut warnings = LoadWarnings::default();
    let mut records = Vec::new();
    for (n, line) in lines {
        let cells: Vec<String> = line
            .trim_end_matches('\r')
            .split('\t')
            .map(unescape_tsv)
            .collect();
        if cells.len() != width {
            return Err(Error::MalformedRecord {
                line: n + 1,
                reason: format!(
                    "expected {width} tab-separated fields, found {}",
                    cells.len()
                ),
            });
        }
        let fields: [&str; 16] =
            std::array::from_fn(|slot| positions[slot].map_or("", |i| cells[i].as_str()));
        records.push(record_from_fields(
            fields,
            &mut FieldParser {
                warnings: &mut warnings,
            },
        ));
    }
    Ok((records, warnings))
}

fn json_scalar_to_string(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

fn parse_jsonl(text: &str, mapping: &ColumnMapping) -> Result<(Vec<RawRecord>, LoadWarnings)> {
    let mut warnings = LoadWarnings::default();
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let object: Map<String, Value> =
            serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                line: n + 1,
                reason: e.to_string(),
            })?;
        let (positions, _) = schema_positions(object.keys().map(String::as_str), mapping)
            .map_err(|e| Error::SchemaMismatch(format!("line {}: {e}", n + 1)))?;
        let values: Vec<String> = object.values().map(json_scalar_to_string).collect();
        let fields: [&str; 16] =
            std::array::from_fn(|slot| positions[slot].map_or("", |i| values[i].as_str()));
        records.push(record_from_fields(
            fields,
            &mut FieldParser {
                warnings: &mut warnings,
            },
        ));
    }
    if records.is_empty() {
        return Err(Error::SchemaMismatch("no records".into()));
    }
    Ok((records, warnings))
}

fn opt_to_string<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record_cells(r: &RawRecord) -> [String; 16] {
    [
        opt_to_string(r.uid),
        opt_to_string(r.pid),
        r.category.clone(),
        r.subcategory.clone(),
        r.concept.clone(),
        r.path_alias.clone(),
        (if r.is_public { "1" } else { "0" }).to_owned(),
        r.media_status.clone(),
        r.title.clone(),
        r.media_type.clone(),
        r.all_tags.clone(),
        opt_to_string(r.post_date),
        opt_to_string(r.latitude),
        opt_to_string(r.geo_accuracy),
        opt_to_string(r.longitude),
        opt_to_string(r.label),
    ]
}

pub fn write_tsv<W: Write>(records: &[RawRecord], mut w: W) -> Result<()> {
    writeln!(w, "{}\t{}", COLUMNS.join("\t"), LABEL_COLUMN)?;
    for r in records {
        let cells = record_cells(r);
        let escaped: Vec<String> = cells.iter().map(|c| escape_tsv(c)).collect();
        writeln!(w, "{}", escaped.join("\t"))?;
    }
    Ok(())
}

pub fn write_jsonl<W: Write>(records: &[RawRecord], mut w: W) -> Result<()> {
    for r in records {
        let num = |v: Option<f64>| v.map_or(Value::Null, Value::from);
        let int = |v: Option<i64>| v.map_or(Value::Null, Value::from);
        let mut m = Map::new();
        m.insert("uid".into(), int(r.uid));
        m.insert("pid".into(), int(r.pid));
        m.insert("category".into(), r.category.clone().into());
        m.insert("subcategory".into(), r.subcategory.clone().into());
        m.insert("concept".into(), r.concept.clone().into());
        m.insert("pathalias".into(), r.path_alias.clone().into());
        m.insert("ispublic".into(), r.is_public.into());
        m.insert("mediastatus".into(), r.media_status.clone().into());
        m.insert("title".into(), r.title.clone().into());
        m.insert("mediatype".into(), r.media_type.clone().into());
        m.insert("alltags".into(), r.all_tags.clone().into());
        m.insert("postdate".into(), int(r.post_date));
        m.insert("latitude".into(), num(r.latitude));
        m.insert("geoaccuracy".into(), num(r.geo_accuracy));
        m.insert("longitude".into(), num(r.longitude));
        m.insert(LABEL_COLUMN.into(), num(r.label));
        serde_json::to_writer(&mut w, &m)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    match format {
        DataFormat::Tsv => write_tsv(&dataset.records, &mut w)?,
        DataFormat::Jsonl => write_jsonl(&dataset.records, &mut w)?,
    }
    w.flush()?;
    Ok(())
}
