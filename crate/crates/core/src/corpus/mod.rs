//! Labeled message datasets: schema, JSONL/CSV ingestion, validation, and
//! descriptive statistics.

mod describe;

pub use describe::{describe, DescriptiveStats, SummaryStats, WordFrequency};

use std::collections::BTreeSet;
use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::CategorySet;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("invariant violation for message `{id}` ({field}): {rule}")]
    Invariant { id: String, field: &'static str, rule: String },
    #[error("duplicate message id `{id}`")]
    DuplicateId { id: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("top_k must be at least 1")]
    InvalidTopK,
}

/// Ground-truth verdict for a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Crisis,
    NonCrisis,
}

/// How risk is expressed in a crisis message. `Direct` and `Ambiguous` are
/// mutually exclusive; `Masked` (slang or coded language) may co-occur with
/// either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expression {
    Direct,
    Ambiguous,
    Masked,
}

/// Language-mechanics phenomena present in the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanic {
    MechanicsErrors,
    Textese,
    Emoji,
}

/// One labeled text sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub text: String,
    pub label: Label,
    #[serde(default)]
    pub categories: CategorySet,
    #[serde(default)]
    pub expression: BTreeSet<Expression>,
    #[serde(default)]
    pub mechanics: BTreeSet<Mechanic>,
    #[serde(default)]
    pub topic: Option<String>,
}

impl Message {
    /// Check this message's own invariants (id uniqueness is dataset-level).
    fn check(&self) -> Result<(), CorpusError> {
        let fail = |field: &'static str, rule: &str| {
            Err(CorpusError::Invariant { id: self.id.clone(), field, rule: rule.to_string() })
        };
        if self.id.is_empty() {
            return fail("id", "id must be non-empty");
        }
        if self.text.is_empty() {
            return fail("text", "text must be non-empty");
        }
        match self.label {
            Label::Crisis if self.categories.is_empty() => {
                return fail("categories", "crisis messages must carry at least one category");
            }
            Label::NonCrisis if !self.categories.is_empty() => {
                return fail("categories", "non-crisis messages must carry no categories");
            }
            Label::NonCrisis if !self.expression.is_empty() => {
                return fail("expression", "non-crisis messages carry no expression annotations");
            }
            _ => {}
        }
        if self.expression.contains(&Expression::Direct)
            && self.expression.contains(&Expression::Ambiguous)
        {
            return fail("expression", "direct and ambiguous are mutually exclusive");
        }
        Ok(())
    }
}

/// A validated collection of messages with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    messages: Vec<Message>,
}

impl Dataset {
    /// Build a dataset, enforcing every message invariant and id uniqueness.
    pub fn from_messages(messages: Vec<Message>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(messages.len());
        for message in &messages {
            message.check()?;
            if !seen.insert(message.id.clone()) {
                return Err(CorpusError::DuplicateId { id: message.id.clone() });
            }
        }
        Ok(Self { messages })
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Message> {
        self.messages.iter()
    }
}

/// On-disk dataset encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Jsonl,
    Csv,
}

impl FileFormat {
    /// Infer the format from a path extension; defaults to JSONL.
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => FileFormat::Csv,
            _ => FileFormat::Jsonl,
        }
    }
}

impl fmt::Display for FileFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FileFormat::Jsonl => "jsonl",
            FileFormat::Csv => "csv",
        })
    }
}

/// Load and validate a dataset file. Every row must parse and satisfy the
/// schema invariants; errors carry the offending row or message id.
pub fn load_dataset(path: &Path, format: FileFormat) -> Result<Dataset, CorpusError> {
    let messages = match format {
        FileFormat::Jsonl => read_jsonl(path)?,
        FileFormat::Csv => read_csv(path)?,
    };
    Dataset::from_messages(messages)
}

fn open(path: &Path) -> Result<fs::File, CorpusError> {
    fs::File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })
}

fn read_jsonl(path: &Path) -> Result<Vec<Message>, CorpusError> {
    let reader = BufReader::new(open(path)?);
    let mut messages = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let row = index + 1;
        let line = line.map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let message: Message = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Parse { row, message: e.to_string() })?;
        messages.push(message);
    }
    Ok(messages)
}

const CSV_HEADER: [&str; 7] = ["id", "text", "label", "categories", "expression", "mechanics", "topic"];
const MULTI_VALUE_SEPARATOR: &str = "|";

fn read_csv(path: &Path) -> Result<Vec<Message>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    {
        let headers = reader
            .headers()
            .map_err(|e| CorpusError::Parse { row: 1, message: e.to_string() })?;
        let got: Vec<&str> = headers.iter().collect();
        if got != CSV_HEADER {
            return Err(CorpusError::Parse {
                row: 1,
                message: format!("expected header {CSV_HEADER:?}, got {got:?}"),
            });
        }
    }
    let mut messages = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 2; // header is row 1
        let record = record.map_err(|e| CorpusError::Parse { row, message: e.to_string() })?;
        if record.len() != CSV_HEADER.len() {
            return Err(CorpusError::Parse {
                row,
                message: format!("expected {} fields, got {}", CSV_HEADER.len(), record.len()),
            });
        }
        let field = |i: usize| record.get(i).unwrap_or_default().to_string();
        let multi = |i: usize| -> Vec<String> {
            let raw = record.get(i).unwrap_or_default();
            if raw.is_empty() {
                Vec::new()
            } else {
                raw.split(MULTI_VALUE_SEPARATOR).map(str::to_string).collect()
            }
        };
        let label: Label = serde_json::from_value(serde_json::Value::String(field(2)))
            .map_err(|e| CorpusError::Parse { row, message: format!("label: {e}") })?;
        let categories: CategorySet =
            serde_json::from_value(serde_json::Value::from(multi(3)))
                .map_err(|e| CorpusError::Parse { row, message: format!("categories: {e}") })?;
        let expression: BTreeSet<Expression> =
            serde_json::from_value(serde_json::Value::from(multi(4)))
                .map_err(|e| CorpusError::Parse { row, message: format!("expression: {e}") })?;
        let mechanics: BTreeSet<Mechanic> =
            serde_json::from_value(serde_json::Value::from(multi(5)))
                .map_err(|e| CorpusError::Parse { row, message: format!("mechanics: {e}") })?;
        let topic_raw = field(6);
        messages.push(Message {
            id: field(0),
            text: field(1),
            label,
            categories,
            expression,
            mechanics,
            topic: if topic_raw.is_empty() { None } else { Some(topic_raw) },
        });
    }
    Ok(messages)
}

/// Serialize a dataset as one JSON object per line.
pub fn write_jsonl(dataset: &Dataset, writer: &mut impl Write) -> std::io::Result<()> {
    for message in dataset.iter() {
        let line = serde_json::to_string(message).expect("message serializes");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

impl Label {
    fn token(self) -> &'static str {
        match self {
            Label::Crisis => "crisis",
            Label::NonCrisis => "non_crisis",
        }
    }
}

impl Expression {
    fn token(self) -> &'static str {
        match self {
            Expression::Direct => "direct",
            Expression::Ambiguous => "ambiguous",
            Expression::Masked => "masked",
        }
    }
}

impl Mechanic {
    fn token(self) -> &'static str {
        match self {
            Mechanic::MechanicsErrors => "mechanics_errors",
            Mechanic::Textese => "textese",
            Mechanic::Emoji => "emoji",
        }
    }
}

/// Serialize a dataset as CSV with `|`-joined multi-value cells.
pub fn write_csv(dataset: &Dataset, writer: &mut impl Write) -> std::io::Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record(CSV_HEADER)?;
    for message in dataset.iter() {
        let categories: Vec<&str> = message.categories.iter().map(|c| c.as_str()).collect();
        let expression: Vec<&str> = message.expression.iter().map(|e| e.token()).collect();
        let mechanics: Vec<&str> = message.mechanics.iter().map(|m| m.token()).collect();
        csv_writer.write_record([
            message.id.as_str(),
            message.text.as_str(),
            message.label.token(),
            categories.join(MULTI_VALUE_SEPARATOR).as_str(),
            expression.join(MULTI_VALUE_SEPARATOR).as_str(),
            mechanics.join(MULTI_VALUE_SEPARATOR).as_str(),
            message.topic.as_deref().unwrap_or(""),
        ])?;
    }
    csv_writer.flush()
}

/// A single schema violation, reported as data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub id: String,
    pub field: &'static str,
    pub rule: String,
}

/// Every violation found in a dataset; an empty list means the dataset is
/// schema-clean.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Collect all violations in a set of messages without failing. Unlike
/// [`load_dataset`], this treats violations as data.
pub fn validate(messages: &[Message]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for message in messages {
        if let Err(CorpusError::Invariant { id, field, rule }) = message.check() {
            violations.push(Violation { id, field, rule });
        }
        if !seen.insert(message.id.clone()) {
            violations.push(Violation {
                id: message.id.clone(),
                field: "id",
                rule: "duplicate id".to_string(),
            });
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::CrisisCategory;

    fn crisis_message(id: &str, text: &str, category: CrisisCategory) -> Message {
        Message {
            id: id.to_string(),
            text: text.to_string(),
            label: Label::Crisis,
            categories: CategorySet::new().with(category),
            expression: BTreeSet::from([Expression::Direct]),
            mechanics: BTreeSet::new(),
            topic: None,
        }
    }

    fn non_crisis_message(id: &str, text: &str) -> Message {
        Message {
            id: id.to_string(),
            text: text.to_string(),
            label: Label::NonCrisis,
            categories: CategorySet::EMPTY,
            expression: BTreeSet::new(),
            mechanics: BTreeSet::new(),
            topic: Some("appointment_logistics".to_string()),
        }
    }

    #[test]
    fn non_crisis_with_categories_is_rejected() {
        let mut message = non_crisis_message("m1", "see you tuesday");
        message.categories = CategorySet::new().with(CrisisCategory::Suicide);
        let err = Dataset::from_messages(vec![message]).unwrap_err();
        assert!(matches!(err, CorpusError::Invariant { field: "categories", .. }));
    }

    #[test]
    fn direct_and_ambiguous_are_mutually_exclusive() {
        let mut message = crisis_message("m1", "text", CrisisCategory::Abuse);
        message.expression = BTreeSet::from([Expression::Direct, Expression::Ambiguous]);
        let report = validate(&[message]);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].rule.contains("mutually exclusive"));
    }

    #[test]
    fn direct_with_masked_is_allowed() {
        let mut message = crisis_message("m1", "text", CrisisCategory::Suicide);
        message.expression = BTreeSet::from([Expression::Direct, Expression::Masked]);
        assert!(validate(&[message]).is_clean());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let messages = vec![
            non_crisis_message("m1", "a"),
            non_crisis_message("m1", "b"),
        ];
        assert!(matches!(
            Dataset::from_messages(messages),
            Err(CorpusError::DuplicateId { .. })
        ));
    }

    #[test]
    fn empty_file_is_a_valid_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "").unwrap();
        let dataset = load_dataset(&path, FileFormat::Jsonl).unwrap();
        assert!(dataset.is_empty());
    }

    #[test]
    fn jsonl_parse_error_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(&path, "{\"id\": \"m1\"").unwrap();
        let err = load_dataset(&path, FileFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { row: 1, .. }));
    }

    #[test]
    fn jsonl_round_trip_is_identity() {
        let dataset = Dataset::from_messages(vec![
            crisis_message("m1", "I want to kill myself", CrisisCategory::Suicide),
            non_crisis_message("m2", "can i reschedule my appointment?"),
        ])
        .unwrap();
        let mut buffer = Vec::new();
        write_jsonl(&dataset, &mut buffer).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.jsonl");
        fs::write(&path, &buffer).unwrap();
        let reloaded = load_dataset(&path, FileFormat::Jsonl).unwrap();
        assert_eq!(reloaded, dataset);
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let mut tricky = crisis_message("m1", "line with, comma and \"quotes\"", CrisisCategory::Abuse);
        tricky.categories = tricky.categories.with(CrisisCategory::Neglect);
        tricky.mechanics = BTreeSet::from([Mechanic::Textese, Mechanic::Emoji]);
        let dataset =
            Dataset::from_messages(vec![tricky, non_crisis_message("m2", "plain text")]).unwrap();
        let mut buffer = Vec::new();
        write_csv(&dataset, &mut buffer).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.csv");
        fs::write(&path, &buffer).unwrap();
        let reloaded = load_dataset(&path, FileFormat::Csv).unwrap();
        assert_eq!(reloaded, dataset);
    }

    #[test]
    fn csv_rejects_unknown_category() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(
            &path,
            "id,text,label,categories,expression,mechanics,topic\nm1,text,crisis,mixed,direct,,\n",
        )
        .unwrap();
        let err = load_dataset(&path, FileFormat::Csv).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { row: 2, .. }));
    }
}
