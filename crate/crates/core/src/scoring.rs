//! Min-max normalization, weighted composite scores and deterministic ranks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ahp::{self, AhpError, PairwiseMatrix, WeightVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("cannot normalize an empty column")]
    EmptyColumn,
    #[error("metric value {value} at position {index} is negative or not finite")]
    NegativeValue { index: usize, value: f64 },
    #[error("snapshot has no articles")]
    EmptySnapshot,
    #[error("duplicate doi {0}")]
    DuplicateDoi(String),
    #[error("empty doi")]
    EmptyDoi,
    #[error("article {doi} is missing metric {metric}")]
    MissingMetric { doi: String, metric: String },
    #[error("metric {0} listed twice in profile")]
    DuplicateMetric(String),
    #[error("article {doi} carries metric {metric} outside the profile")]
    UnexpectedMetric { doi: String, metric: String },
    #[error("article {doi} has invalid value {value} for metric {metric}")]
    InvalidValue {
        doi: String,
        metric: String,
        value: f64,
    },
    #[error("weights {weights:?} do not match metric profile {profile:?}")]
    ProfileMismatch {
        weights: Vec<String>,
        profile: Vec<String>,
    },
    #[error("as-of date {as_of} precedes publication month {month}")]
    BeforePublication { as_of: NaiveDate, month: YearMonth },
    #[error("selection fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("invalid phase schedule: {0}")]
    BadSchedule(String),
    #[error("articles span several publication months ({0}); supply a cohort month")]
    MixedCohort(String),
    #[error("invalid year-month {0:?}; expected YYYY-MM")]
    BadYearMonth(String),
    #[error(transparent)]
    Ahp(#[from] AhpError),
}

/// Calendar year and month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, ScoringError> {
        if (1..=12).contains(&month) && (0..=9999).contains(&year) {
            Ok(Self { year, month })
        } else {
            Err(ScoringError::BadYearMonth(format!("{year}-{month}")))
        }
    }

    pub fn of(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("validated year-month")
    }

    /// Whole calendar months from `self` to `later` (negative if earlier).
    pub fn months_until(&self, later: YearMonth) -> i64 {
        (later.year as i64 * 12 + later.month as i64) - (self.year as i64 * 12 + self.month as i64)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = ScoringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScoringError::BadYearMonth(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Self::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Name of a metric column, e.g. `pdf_downloads`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricKind(String);

impl MetricKind {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MetricKind {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// The seven metrics of the shipped weighting presets, in column order.
pub fn default_profile() -> Vec<MetricKind> {
    ahp::DEFAULT_LABELS.iter().map(|&s| MetricKind::from(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleMetrics {
    pub doi: String,
    pub publication_month: YearMonth,
    pub subject: String,
    pub values: BTreeMap<MetricKind, f64>,
}

impl ArticleMetrics {
    pub fn value(&self, metric: &MetricKind) -> Option<f64> {
        self.values.get(metric).copied()
    }
}

/// One observation date's metrics for a corpus of articles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    snapshot_date: NaiveDate,
    profile: Vec<MetricKind>,
    articles: Vec<ArticleMetrics>,
}

impl Snapshot {
    /// `profile` fixes the metric order; every article must carry every
    /// profile metric with a finite, non-negative value.
    pub fn new(
        snapshot_date: NaiveDate,
        profile: Vec<MetricKind>,
        articles: Vec<ArticleMetrics>,
    ) -> Result<Self, ScoringError> {
        if articles.is_empty() {
            return Err(ScoringError::EmptySnapshot);
        }
        let mut seen = BTreeSet::new();
        for a in &articles {
            if a.doi.trim().is_empty() {
                return Err(ScoringError::EmptyDoi);
            }
            if !seen.insert(a.doi.as_str()) {
                return Err(ScoringError::DuplicateDoi(a.doi.clone()));
            }
            for metric in &profile {
                match a.value(metric) {
                    None => {
                        return Err(ScoringError::MissingMetric {
                            doi: a.doi.clone(),
                            metric: metric.to_string(),
                        })
                    }
                    Some(v) if !(v.is_finite() && v >= 0.0) => {
                        return Err(ScoringError::InvalidValue {
                            doi: a.doi.clone(),
                            metric: metric.to_string(),
                            value: v,
                        })
                    }
                    Some(_) => {}
                }
            }
            if let Some(extra) = a.values.keys().find(|k| !profile.contains(k)) {
                return Err(ScoringError::UnexpectedMetric {
                    doi: a.doi.clone(),
                    metric: extra.to_string(),
                });
            }
        }
        let mut names = BTreeSet::new();
        if let Some(m) = profile.iter().find(|m| !names.insert(*m)) {
            return Err(ScoringError::DuplicateMetric(m.to_string()));
        }
        Ok(Self {
            snapshot_date,
            profile,
            articles,
        })
    }

    pub fn snapshot_date(&self) -> NaiveDate {
        self.snapshot_date
    }

    pub fn profile(&self) -> &[MetricKind] {
        &self.profile
    }

    pub fn articles(&self) -> &[ArticleMetrics] {
        &self.articles
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    /// Copy keeping only `metrics`, in that order.
    pub fn restrict(&self, metrics: &[MetricKind]) -> Result<Snapshot, ScoringError> {
        let articles = self
            .articles
            .iter()
            .map(|a| ArticleMetrics {
                values: metrics
                    .iter()
                    .filter_map(|m| a.value(m).map(|v| (m.clone(), v)))
                    .collect(),
                ..a.clone()
            })
            .collect();
        Snapshot::new(self.snapshot_date, metrics.to_vec(), articles)
    }

    pub fn column(&self, metric: &MetricKind) -> Vec<f64> {
        self.articles
            .iter()
            .map(|a| a.value(metric).unwrap_or(0.0))
            .collect()
    }

    /// The single publication month shared by all articles, if there is one.
    pub fn cohort_month(&self) -> Result<YearMonth, ScoringError> {
        let months: BTreeSet<YearMonth> = self.articles.iter().map(|a| a.publication_month).collect();
        if months.len() == 1 {
            Ok(*months.iter().next().expect("non-empty"))
        } else {
            let listed: Vec<String> = months.iter().map(ToString::to_string).collect();
            Err(ScoringError::MixedCohort(listed.join(", ")))
        }
    }
}

impl<'de> Deserialize<'de> for Snapshot {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            snapshot_date: NaiveDate,
            profile: Vec<MetricKind>,
            articles: Vec<ArticleMetrics>,
        }
        let raw = Raw::deserialize(d)?;
        Snapshot::new(raw.snapshot_date, raw.profile, raw.articles).map_err(serde::de::Error::custom)
    }
}

/// Min-max scales a column to [0, 1]. A constant column maps to all zeros.
pub fn normalize_column(values: &[f64]) -> Result<Vec<f64>, ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::EmptyColumn);
    }
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(ScoringError::NegativeValue { index, value });
    }
    let (lo, hi) = bounds(values);
    if hi == lo {
        return Ok(vec![0.0; values.len()]);
    }
    let span = hi - lo;
    Ok(values.iter().map(|v| (v - lo) / span).collect())
}

fn bounds(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedArticle {
    pub doi: String,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub score: f64,
    pub rank: usize,
}

/// Scores and ranks for one snapshot under one weight vector.
///
/// `rows` are in rank order; `raw` and `normalized` follow `metrics`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRanking {
    pub snapshot_date: NaiveDate,
    pub phase: Option<u8>,
    pub metrics: Vec<MetricKind>,
    pub weights: WeightVector,
    pub normalization_bounds: Vec<Bounds>,
    pub rows: Vec<RankedArticle>,
}

impl ScoredRanking {
    pub fn rank_of(&self, doi: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.doi == doi).map(|r| r.rank)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Weighted sum of normalized metric values per article.
///
/// Ranks run 1..=n by descending score; equal scores are ordered by
/// ascending doi.
pub fn composite_scores(snapshot: &Snapshot, weights: &WeightVector) -> Result<ScoredRanking, ScoringError> {
    let profile = snapshot.profile();
    let weight_labels: BTreeSet<&str> = weights.labels().iter().map(String::as_str).collect();
    let profile_labels: BTreeSet<&str> = profile.iter().map(MetricKind::as_str).collect();
    if weight_labels != profile_labels || weights.len() != profile.len() {
        return Err(ScoringError::ProfileMismatch {
            weights: weights.labels().to_vec(),
            profile: profile.iter().map(ToString::to_string).collect(),
        });
    }

    let n = snapshot.len();
    let mut normalized_cols = Vec::with_capacity(profile.len());
    let mut normalization_bounds = Vec::with_capacity(profile.len());
    let mut metric_weights = Vec::with_capacity(profile.len());
    for metric in profile {
        let col = snapshot.column(metric);
        let (min, max) = bounds(&col);
        normalization_bounds.push(Bounds { min, max });
        normalized_cols.push(normalize_column(&col)?);
        metric_weights.push(weights.get(metric.as_str()).expect("label sets match"));
    }

    let mut rows: Vec<RankedArticle> = snapshot
        .articles()
        .iter()
        .enumerate()
        .map(|(i, article)| {
            let raw: Vec<f64> = profile.iter().map(|m| article.value(m).unwrap_or(0.0)).collect();
            let normalized: Vec<f64> = normalized_cols.iter().map(|c| c[i]).collect();
            let score = normalized
                .iter()
                .zip(&metric_weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
                .clamp(0.0, 1.0);
            RankedArticle {
                doi: article.doi.clone(),
                raw,
                normalized,
                score,
                rank: 0,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doi.cmp(&b.doi)));
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    debug_assert_eq!(rows.len(), n);

    Ok(ScoredRanking {
        snapshot_date: snapshot.snapshot_date(),
        phase: None,
        metrics: profile.to_vec(),
        weights: weights.clone(),
        normalization_bounds,
        rows,
    })
}

/// Age bands (in months since publication) and per-band retention fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleFields")]
pub struct PhaseSchedule {
    boundaries: Vec<u32>,
    selection_fractions: Vec<f64>,
}

#[derive(Deserialize)]
struct ScheduleFields {
    boundaries: Vec<u32>,
    selection_fractions: Vec<f64>,
}

impl TryFrom<ScheduleFields> for PhaseSchedule {
    type Error = ScoringError;

    fn try_from(f: ScheduleFields) -> Result<Self, Self::Error> {
        Self::new(f.boundaries, f.selection_fractions)
    }
}

impl Default for PhaseSchedule {
    fn default() -> Self {
        Self {
            boundaries: vec![6, 24, 60],
            selection_fractions: vec![0.8, 0.7, 0.5, 0.3],
        }
    }
}

impl PhaseSchedule {
    pub fn new(boundaries: Vec<u32>, selection_fractions: Vec<f64>) -> Result<Self, ScoringError> {
        if boundaries.first() == Some(&0) || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ScoringError::BadSchedule(
                "boundaries must be positive and strictly increasing".into(),
            ));
        }
        if selection_fractions.len() != boundaries.len() + 1 {
            return Err(ScoringError::BadSchedule(format!(
                "{} boundaries need {} fractions, found {}",
                boundaries.len(),
                boundaries.len() + 1,
                selection_fractions.len()
            )));
        }
        if let Some(&f) = selection_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(ScoringError::BadFraction(f));
        }
        if boundaries.len() >= u8::MAX as usize {
            return Err(ScoringError::BadSchedule("too many phases".into()));
        }
        Ok(Self {
            boundaries,
            selection_fractions,
        })
    }

    pub fn boundaries(&self) -> &[u32] {
        &self.boundaries
    }

    pub fn phase_count(&self) -> u8 {
        self.boundaries.len() as u8 + 1
    }

    pub fn selection_fractions(&self) -> &[f64] {
        &self.selection_fractions
    }

    pub fn selection_fraction(&self, phase: u8) -> Option<f64> {
        self.selection_fractions.get((phase as usize).checked_sub(1)?).copied()
    }
}

/// Phase for an article cohort at `as_of`. Age is counted in whole calendar
/// months; an age equal to a boundary falls in the later phase.
pub fn determine_phase(
    publication_month: YearMonth,
    as_of: NaiveDate,
    schedule: &PhaseSchedule,
) -> Result<u8, ScoringError> {
    if as_of < publication_month.first_day() {
        return Err(ScoringError::BeforePublication {
            as_of,
            month: publication_month,
        });
    }
    let age = publication_month.months_until(YearMonth::of(as_of));
    let earlier = schedule.boundaries.iter().filter(|&&b| age >= b as i64).count();
    Ok(earlier as u8 + 1)
}

/// Number of rows kept when retaining `fraction` of `n`, rounding up.
pub fn retained_count(n: usize, fraction: f64) -> Result<usize, ScoringError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ScoringError::BadFraction(fraction));
    }
    // 0.7 * 10 evaluates to 7.000000000000001; strip that before ceil.
    let exact = fraction * n as f64;
    Ok(((exact - 1e-9 * exact.max(1.0)).ceil() as usize).clamp(1, n))
}

/// DOIs of the top `ceil(fraction * n)` rows in rank order.
pub fn select_cohort_top(ranking: &ScoredRanking, fraction: f64) -> Result<Vec<String>, ScoringError> {
    if ranking.is_empty() {
        return Err(ScoringError::EmptySnapshot);
    }
    let keep = retained_count(ranking.len(), fraction)?;
    Ok(ranking.rows.iter().take(keep).map(|r| r.doi.clone()).collect())
}

/// Inputs to [`score_pipeline`] beyond the snapshot itself.
#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub schedule: PhaseSchedule,
    pub matrix_override: Option<PairwiseMatrix>,
    /// Publication month used for phase resolution when articles span several.
    pub cohort_month: Option<YearMonth>,
}

/// Resolves the phase, picks preset or override weights and scores the snapshot.
pub fn score_pipeline(
    snapshot: &Snapshot,
    as_of: NaiveDate,
    options: &PipelineOptions,
) -> Result<ScoredRanking, ScoringError> {
    let cohort = match options.cohort_month {
        Some(month) => month,
        None => snapshot.cohort_month()?,
    };
    let phase = determine_phase(cohort, as_of, &options.schedule)?;
    let weights = match &options.matrix_override {
        Some(matrix) => ahp::principal_weights(matrix)?,
        None => ahp::preset_weights(phase)?,
    };
    score_with_phase(snapshot, phase, &weights)
}

/// Scores under explicit weights and tags the result with `phase`.
pub fn score_with_phase(
    snapshot: &Snapshot,
    phase: u8,
    weights: &WeightVector,
) -> Result<ScoredRanking, ScoringError> {
    let mut ranking = composite_scores(snapshot, weights)?;
    ranking.phase = Some(phase);
    Ok(ranking)
}
