//! Sample model and line-delimited JSON datasets.
//!
//! One record per line with the keys `id, old_code, new_code, old_comment,
//! new_comment, split, meta`. Keys outside that set are folded into `meta`
//! so upstream provenance survives a clean. Lines that cannot be turned
//! into a [`Sample`] are collected as [`Reject`]s instead of being dropped.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

const TEXT_FIELDS: [&str; 4] = ["old_code", "new_code", "old_comment", "new_comment"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "validation" | "dev" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One comment-updating instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub old_code: String,
    pub new_code: String,
    pub old_comment: String,
    pub new_comment: String,
    pub split: Split,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

/// A line that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub source_path: String,
    pub rejects: Vec<Reject>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count_split(&self, split: Split) -> usize {
        self.samples.iter().filter(|s| s.split == split).count()
    }
}

/// Parses one record line.
///
/// `line_no` is 1-based and only used to name records without an id.
/// `split_override` replaces whatever split the record carries; records with
/// neither an override nor a `split` key default to `train`.
pub fn parse_record(line: &str, line_no: usize, split_override: Option<Split>) -> Result<Sample, String> {
    if line.trim().is_empty() {
        return Err("blank line".into());
    }
    let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    let Value::Object(mut record) = value else {
        return Err("record is not a JSON object".into());
    };

    let id = match record.remove("id") {
        None | Some(Value::Null) => format!("line-{line_no}"),
        Some(Value::String(s)) if s.is_empty() => format!("line-{line_no}"),
        Some(Value::String(s)) => s,
        Some(Value::Number(n)) => n.to_string(),
        Some(other) => return Err(format!("id must be a string, got {}", type_name(&other))),
    };

    let mut texts = Vec::with_capacity(TEXT_FIELDS.len());
    for key in TEXT_FIELDS {
        match record.remove(key) {
            Some(Value::String(s)) => texts.push(s),
            Some(other) => return Err(format!("{key} must be a string, got {}", type_name(&other))),
            None => return Err(format!("missing field {key}")),
        }
    }

    let split = match (split_override, record.remove("split")) {
        (Some(split), _) => split,
        (None, None | Some(Value::Null)) => Split::Train,
        (None, Some(Value::String(s))) => s.parse()?,
        (None, Some(other)) => return Err(format!("split must be a string, got {}", type_name(&other))),
    };

    let mut meta = BTreeMap::new();
    match record.remove("meta") {
        None | Some(Value::Null) => {}
        Some(Value::Object(fields)) => fold_into(&mut meta, fields),
        Some(other) => return Err(format!("meta must be an object, got {}", type_name(&other))),
    }
    // unknown keys never override an explicit meta entry
    for (key, value) in record {
        meta.entry(key).or_insert_with(|| meta_string(value));
    }

    let [old_code, new_code, old_comment, new_comment]: [String; 4] = texts.try_into().expect("four text fields");
    Ok(Sample {
        id,
        old_code,
        new_code,
        old_comment,
        new_comment,
        split,
        meta,
    })
}

fn fold_into(meta: &mut BTreeMap<String, String>, fields: Map<String, Value>) {
    for (key, value) in fields {
        meta.insert(key, meta_string(value));
    }
}

fn meta_string(value: Value) -> String {
    match value {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn type_name(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Parses a whole JSONL buffer. Duplicate ids are rejected after the first.
pub fn parse_dataset(bytes: &[u8], split_override: Option<Split>) -> (Vec<Sample>, Vec<Reject>) {
    let mut samples = Vec::new();
    let mut rejects = Vec::new();
    let mut seen = HashSet::new();

    if bytes.is_empty() {
        return (samples, rejects);
    }
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    for (idx, raw) in body.split(|b| *b == b'\n').enumerate() {
        let line_no = idx + 1;
        let parsed = std::str::from_utf8(raw)
            .map_err(|e| format!("invalid UTF-8: {e}"))
            .and_then(|line| parse_record(line, line_no, split_override));
        match parsed {
            Ok(sample) if !seen.insert(sample.id.clone()) => rejects.push(Reject {
                line_no,
                reason: format!("duplicate id {:?}", sample.id),
            }),
            Ok(sample) => samples.push(sample),
            Err(reason) => rejects.push(Reject { line_no, reason }),
        }
    }
    (samples, rejects)
}

pub fn load_dataset(path: &Path, split_override: Option<Split>) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (samples, rejects) = parse_dataset(&bytes, split_override);
    if !rejects.is_empty() {
        log::warn!("{}: {} malformed line(s) rejected", path.display(), rejects.len());
    }
    Ok(Dataset {
        samples,
        source_path: path.display().to_string(),
        rejects,
    })
}

/// Writes any serializable records, one JSON object per line. Returns the record count.
pub fn write_records<T: Serialize>(records: impl IntoIterator<Item = T>, path: &Path) -> Result<usize> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut count = 0;
    for record in records {
        serde_json::to_writer(&mut out, &record).map_err(|e| Error::io(path, e.into()))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        count += 1;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(count)
}

pub fn write_dataset(samples: &[Sample], path: &Path) -> Result<usize> {
    write_records(samples, path)
}

/// A sample written to a noisy split, tagged with why it was removed.
#[derive(Debug, Serialize)]
pub struct NoisyRecord<'a> {
    #[serde(flatten)]
    pub sample: &'a Sample,
    pub reason: &'a str,
}

/// One line of `rejects.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub source: String,
    pub line_no: usize,
    pub reason: String,
}

pub fn default_output_name(split: Split, cleaned: bool) -> PathBuf {
    let kind = if cleaned { "cleaned" } else { "noisy" };
    PathBuf::from(format!("{split}.{kind}.jsonl"))
}
