//! Snapshot ingestion (CSV and ALM-style JSON), result documents and run
//! configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ahp::{ConsistencyReport, PairwiseMatrix, ValidationReport, WeightVector};
use crate::dynamics::{BumpChart, ClassifiedTrend, MetricTotalsSeries, RankTrajectory};
use crate::factor::FactorReport;
use crate::scoring::{ArticleMetrics, MetricKind, PhaseSchedule, ScoredRanking, ScoringError, Snapshot, YearMonth};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Columns every snapshot row carries before its metric columns.
pub const REQUIRED_COLUMNS: [&str; 4] = ["doi", "publication_month", "subject", "snapshot_date"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing required column \"{0}\"")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Value { row: usize, message: String },
    #[error("row {row}: duplicate doi {doi}")]
    DuplicateDoi { row: usize, doi: String },
    #[error("rows disagree on snapshot_date: {first} vs {other}")]
    MixedSnapshotDates { first: NaiveDate, other: NaiveDate },
    #[error("cannot infer snapshot format from {0:?}; use .csv or .json")]
    UnknownFormat(PathBuf),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

impl PipelineError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    Csv,
    AlmJson,
}

impl SnapshotFormat {
    pub fn infer(path: &Path) -> Result<Self, PipelineError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => Ok(Self::Csv),
            Some("json") => Ok(Self::AlmJson),
            _ => Err(PipelineError::UnknownFormat(path.to_path_buf())),
        }
    }
}

/// A parsed snapshot with the file it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub path: PathBuf,
    pub format: SnapshotFormat,
    pub digest: String,
    pub snapshot: Snapshot,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|e| PipelineError::io(path, e))
}

pub fn parse_snapshot(path: &Path, format: Option<SnapshotFormat>) -> Result<Snapshot, PipelineError> {
    load_snapshot(path, format).map(|f| f.snapshot)
}

pub fn load_snapshot(path: &Path, format: Option<SnapshotFormat>) -> Result<SnapshotFile, PipelineError> {
    let format = match format {
        Some(f) => f,
        None => SnapshotFormat::infer(path)?,
    };
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| PipelineError::Malformed(format!("{}: {e}", path.display())))?;
    let snapshot = parse_snapshot_str(&text, format)?;
    Ok(SnapshotFile {
        path: path.to_path_buf(),
        format,
        digest: digest_bytes(&bytes),
        snapshot,
    })
}

pub fn parse_snapshot_str(text: &str, format: SnapshotFormat) -> Result<Snapshot, PipelineError> {
    match format {
        SnapshotFormat::Csv => parse_csv(text),
        SnapshotFormat::AlmJson => parse_alm_json(text),
    }
}

fn parse_metric(row: usize, column: &str, text: &str) -> Result<f64, PipelineError> {
    let value: f64 = text.trim().parse().map_err(|_| PipelineError::Value {
        row,
        message: format!("{column} = {text:?} is not a number"),
    })?;
    if !value.is_finite() || value < 0.0 {
        return Err(PipelineError::Value {
            row,
            message: format!("{column} = {text} must be a non-negative number"),
        });
    }
    Ok(value)
}

fn parse_date(row: usize, text: &str) -> Result<NaiveDate, PipelineError> {
    text.trim().parse().map_err(|_| PipelineError::Value {
        row,
        message: format!("snapshot_date {text:?} is not YYYY-MM-DD"),
    })
}

fn parse_month(row: usize, text: &str) -> Result<YearMonth, PipelineError> {
    text.parse().map_err(|_| PipelineError::Value {
        row,
        message: format!("publication_month {text:?} is not YYYY-MM"),
    })
}

/// Collects rows into a snapshot, enforcing one date and unique DOIs.
struct SnapshotBuilder {
    profile: Vec<MetricKind>,
    date: Option<NaiveDate>,
    seen: BTreeSet<String>,
    articles: Vec<ArticleMetrics>,
}

impl SnapshotBuilder {
    fn new(profile: Vec<MetricKind>) -> Self {
        Self {
            profile,
            date: None,
            seen: BTreeSet::new(),
            articles: Vec::new(),
        }
    }

    fn push(&mut self, row: usize, date: NaiveDate, article: ArticleMetrics) -> Result<(), PipelineError> {
        match self.date {
            None => self.date = Some(date),
            Some(first) if first != date => {
                return Err(PipelineError::MixedSnapshotDates { first, other: date })
            }
            Some(_) => {}
        }
        if article.doi.trim().is_empty() {
            return Err(PipelineError::Value {
                row,
                message: "empty doi".into(),
            });
        }
        if !self.seen.insert(article.doi.clone()) {
            return Err(PipelineError::DuplicateDoi { row, doi: article.doi });
        }
        self.articles.push(article);
        Ok(())
    }

    fn finish(self) -> Result<Snapshot, PipelineError> {
        let date = self.date.ok_or(ScoringError::EmptySnapshot)?;
        Ok(Snapshot::new(date, self.profile, self.articles)?)
    }
}

fn parse_csv(text: &str) -> Result<Snapshot, PipelineError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| PipelineError::Malformed(e.to_string()))?
        .clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::MissingColumn(name.to_string()))
    };
    let [doi_i, month_i, subject_i, date_i] = [
        index("doi")?,
        index("publication_month")?,
        index("subject")?,
        index("snapshot_date")?,
    ];
    let metric_cols: Vec<(usize, MetricKind)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !REQUIRED_COLUMNS.contains(h))
        .map(|(i, h)| (i, MetricKind::from(h)))
        .collect();
    let mut names = BTreeSet::new();
    for (_, m) in &metric_cols {
        if m.as_str().is_empty() || !names.insert(m.as_str()) {
            return Err(PipelineError::Malformed(format!("bad or repeated metric column {m:?}")));
        }
    }

    let mut builder = SnapshotBuilder::new(metric_cols.iter().map(|(_, m)| m.clone()).collect());
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| PipelineError::Value {
            row,
            message: e.to_string(),
        })?;
        let field = |k: usize| record.get(k).unwrap_or("");
        let mut values = BTreeMap::new();
        for (col, metric) in &metric_cols {
            values.insert(metric.clone(), parse_metric(row, metric.as_str(), field(*col))?);
        }
        let article = ArticleMetrics {
            doi: field(doi_i).to_string(),
            publication_month: parse_month(row, field(month_i))?,
            subject: field(subject_i).to_string(),
            values,
        };
        builder.push(row, parse_date(row, field(date_i))?, article)?;
    }
    builder.finish()
}

fn parse_alm_json(text: &str) -> Result<Snapshot, PipelineError> {
    let value: Value = serde_json::from_str(text).map_err(|e| PipelineError::Malformed(e.to_string()))?;
    let items = value
        .as_array()
        .ok_or_else(|| PipelineError::Malformed("expected a JSON array of articles".into()))?;
    let mut builder: Option<SnapshotBuilder> = None;
    for (i, item) in items.iter().enumerate() {
        let row = i + 1;
        let obj = item.as_object().ok_or_else(|| PipelineError::Value {
            row,
            message: "expected an object".into(),
        })?;
        let text_field = |name: &str| -> Result<String, PipelineError> {
            match obj.get(name) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(other) => Err(PipelineError::Value {
                    row,
                    message: format!("{name} must be a string, found {other}"),
                }),
                None => Err(PipelineError::MissingColumn(name.to_string())),
            }
        };
        let doi = text_field("doi")?;
        let month = parse_month(row, &text_field("publication_month")?)?;
        let subject = text_field("subject")?;
        let date = parse_date(row, &text_field("snapshot_date")?)?;

        let mut values = BTreeMap::new();
        let mut order = Vec::new();
        for (key, v) in obj.iter().filter(|(k, _)| !REQUIRED_COLUMNS.contains(&k.as_str())) {
            let parsed = match v {
                Value::Number(n) => parse_metric(row, key, &n.to_string())?,
                Value::String(s) => parse_metric(row, key, s)?,
                other => {
                    return Err(PipelineError::Value {
                        row,
                        message: format!("{key} = {other} is not a number"),
                    })
                }
            };
            order.push(MetricKind::from(key.as_str()));
            values.insert(MetricKind::from(key.as_str()), parsed);
        }
        let b = builder.get_or_insert_with(|| SnapshotBuilder::new(order.clone()));
        if let Some(extra) = order.iter().find(|m| !b.profile.contains(m)) {
            return Err(PipelineError::Value {
                row,
                message: format!("metric {extra} is not present in the first article"),
            });
        }
        b.push(
            row,
            date,
            ArticleMetrics {
                doi,
                publication_month: month,
                subject,
                values,
            },
        )?;
    }
    builder.ok_or(ScoringError::EmptySnapshot)?.finish()
}

/// Serializes a snapshot; parsing the output yields an equal snapshot.
pub fn write_snapshot_str(snapshot: &Snapshot, format: SnapshotFormat) -> Result<String, PipelineError> {
    match format {
        SnapshotFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
            header.extend(snapshot.profile().iter().map(MetricKind::as_str));
            w.write_record(&header).map_err(|e| PipelineError::Malformed(e.to_string()))?;
            let date = snapshot.snapshot_date().to_string();
            for a in snapshot.articles() {
                let mut record = vec![a.doi.clone(), a.publication_month.to_string(), a.subject.clone(), date.clone()];
                record.extend(snapshot.profile().iter().map(|m| a.value(m).unwrap_or(0.0).to_string()));
                w.write_record(&record).map_err(|e| PipelineError::Malformed(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| PipelineError::Malformed(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
        }
        SnapshotFormat::AlmJson => {
            let items: Vec<Value> = snapshot
                .articles()
                .iter()
                .map(|a| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("doi".into(), a.doi.clone().into());
                    obj.insert("publication_month".into(), a.publication_month.to_string().into());
                    obj.insert("subject".into(), a.subject.clone().into());
                    obj.insert("snapshot_date".into(), snapshot.snapshot_date().to_string().into());
                    for m in snapshot.profile() {
                        obj.insert(m.to_string(), a.value(m).unwrap_or(0.0).into());
                    }
                    Value::Object(obj)
                })
                .collect();
            Ok(serde_json::to_string_pretty(&items).expect("json values serialize") + "\n")
        }
    }
}

pub fn write_snapshot(snapshot: &Snapshot, path: &Path, format: SnapshotFormat) -> Result<(), PipelineError> {
    let text = write_snapshot_str(snapshot, format)?;
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<(PairwiseMatrix, String), PipelineError> {
    let bytes = read_file(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let matrix = text
        .parse::<PairwiseMatrix>()
        .map_err(|e| PipelineError::Malformed(format!("{}: {e}", path.display())))?;
    Ok((matrix, digest_bytes(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsPayload {
    pub weights: WeightVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<u8>,
    /// Largest absolute difference from the published row for `phase`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset_max_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsPayload {
    pub trajectories: Vec<RankTrajectory>,
    pub trends: Vec<ClassifiedTrend>,
    pub trend_counts: BTreeMap<String, usize>,
    pub bump_chart: BumpChart,
    pub metric_totals: MetricTotalsSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum ResultPayload {
    Weights(WeightsPayload),
    Ranking(ScoredRanking),
    Dynamics(DynamicsPayload),
    FactorReport(FactorReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub engine_version: String,
    /// Input name to content digest.
    pub input_digests: BTreeMap<String, String>,
    pub result: ResultPayload,
}

impl ResultDocument {
    pub fn new(result: ResultPayload) -> Self {
        Self {
            engine_version: ENGINE_VERSION.to_string(),
            input_digests: BTreeMap::new(),
            result,
        }
    }

    pub fn with_input(mut self, name: impl Into<String>, digest: impl Into<String>) -> Self {
        self.input_digests.insert(name.into(), digest.into());
        self
    }

    pub fn kind(&self) -> &'static str {
        match self.result {
            ResultPayload::Weights(_) => "weights",
            ResultPayload::Ranking(_) => "ranking",
            ResultPayload::Dynamics(_) => "dynamics",
            ResultPayload::FactorReport(_) => "factor-report",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result documents serialize") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Malformed(e.to_string()))
    }
}

pub fn write_result(doc: &ResultDocument, path: &Path) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    fs::write(path, doc.to_json()).map_err(|e| PipelineError::io(path, e))
}

pub fn read_result(path: &Path) -> Result<ResultDocument, PipelineError> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|e| PipelineError::Malformed(format!("{}: {e}", path.display())))?;
    ResultDocument::from_json(&text).map_err(|e| match e {
        PipelineError::Malformed(m) => PipelineError::Malformed(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Settings for a scoring run, read from a TOML file.
///
/// ```toml
/// as_of = "2012-10-10"
/// output_dir = "out"
/// profile = ["citeulike", "mendeley", "html_views", "pdf_downloads", "citations", "facebook", "twitter"]
///
/// [schedule]
/// boundaries = [6, 24, 60]
/// selection_fractions = [0.8, 0.7, 0.5, 0.3]
///
/// [matrices]
/// 1 = "phase1.matrix"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schedule: Option<PhaseSchedule>,
    #[serde(default)]
    pub profile: Option<Vec<MetricKind>>,
    /// Phase number to judgment-matrix path.
    #[serde(default)]
    pub matrices: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub as_of: Option<NaiveDate>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Reads and validates a config. Relative paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let bytes = read_file(path)?;
        let text = String::from_utf8_lossy(&bytes);
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in config.matrices.values_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(dir) = config.output_dir.as_mut().filter(|d| d.is_relative()) {
            *dir = base.join(&*dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for (phase, p) in &self.matrices {
            let n: u8 = phase
                .parse()
                .map_err(|_| PipelineError::Config(format!("matrix key {phase:?} is not a phase number")))?;
            if n == 0 || n > self.schedule().phase_count() {
                return Err(PipelineError::Config(format!("phase {n} is outside the schedule")));
            }
            if !p.is_file() {
                return Err(PipelineError::Config(format!("matrix file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> PhaseSchedule {
        self.schedule.clone().unwrap_or_default()
    }

    pub fn matrix_for(&self, phase: u8) -> Option<&Path> {
        self.matrices.get(&phase.to_string()).map(PathBuf::as_path)
    }
}
