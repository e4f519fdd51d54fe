//! Rank trajectories across snapshots, trend classes and metric totals.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{MetricKind, ScoredRanking, Snapshot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("need at least {needed} rankings, got {got}")]
    TooFewRankings { needed: usize, got: usize },
    #[error("rankings cover different articles; symmetric difference: {0:?}")]
    Misaligned(Vec<String>),
    #[error("snapshot dates must be strictly increasing: {earlier} then {later}")]
    DatesNotIncreasing { earlier: NaiveDate, later: NaiveDate },
    #[error("trajectory for {doi} has {len} points; at least 2 are needed")]
    ShortTrajectory { doi: String, len: usize },
    #[error("no snapshots given")]
    NoSnapshots,
    #[error("no trajectories given")]
    NoTrajectories,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub snapshot_date: NaiveDate,
    pub phase: Option<u8>,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTrajectory {
    pub doi: String,
    pub points: Vec<TrajectoryPoint>,
}

impl RankTrajectory {
    pub fn ranks(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.rank).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Upward,
    Downward,
    Flat,
}

impl Trend {
    pub fn color(&self) -> &'static str {
        match self {
            Trend::Upward => "red",
            Trend::Downward => "green",
            Trend::Flat => "yellow",
        }
    }
}

fn doi_set(r: &ScoredRanking) -> BTreeSet<&str> {
    r.rows.iter().map(|row| row.doi.as_str()).collect()
}

/// One trajectory per article, ordered by rank in the earliest ranking.
pub fn trajectories(rankings: &[ScoredRanking]) -> Result<Vec<RankTrajectory>, DynamicsError> {
    if rankings.len() < 2 {
        return Err(DynamicsError::TooFewRankings {
            needed: 2,
            got: rankings.len(),
        });
    }
    for pair in rankings.windows(2) {
        if pair[1].snapshot_date <= pair[0].snapshot_date {
            return Err(DynamicsError::DatesNotIncreasing {
                earlier: pair[0].snapshot_date,
                later: pair[1].snapshot_date,
            });
        }
    }
    let first = doi_set(&rankings[0]);
    for other in &rankings[1..] {
        let set = doi_set(other);
        if set != first {
            let diff = first.symmetric_difference(&set).map(|s| s.to_string()).collect();
            return Err(DynamicsError::Misaligned(diff));
        }
    }

    let lookups: Vec<BTreeMap<&str, (f64, usize)>> = rankings
        .iter()
        .map(|r| r.rows.iter().map(|row| (row.doi.as_str(), (row.score, row.rank))).collect())
        .collect();
    Ok(rankings[0]
        .rows
        .iter()
        .map(|row| RankTrajectory {
            doi: row.doi.clone(),
            points: rankings
                .iter()
                .zip(&lookups)
                .map(|(ranking, lookup)| {
                    let (score, rank) = lookup[row.doi.as_str()];
                    TrajectoryPoint {
                        snapshot_date: ranking.snapshot_date,
                        phase: ranking.phase,
                        score,
                        rank,
                    }
                })
                .collect(),
        })
        .collect())
}

/// Compares the last rank with the first; intermediate points are ignored.
pub fn classify_trend(t: &RankTrajectory) -> Result<Trend, DynamicsError> {
    match (t.points.first(), t.points.last()) {
        (Some(first), Some(last)) if t.points.len() >= 2 => {
            Ok(match last.rank.cmp(&first.rank) {
                std::cmp::Ordering::Less => Trend::Upward,
                std::cmp::Ordering::Greater => Trend::Downward,
                std::cmp::Ordering::Equal => Trend::Flat,
            })
        }
        _ => Err(DynamicsError::ShortTrajectory {
            doi: t.doi.clone(),
            len: t.points.len(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedTrend {
    pub doi: String,
    pub trend: Trend,
}

pub fn classify_all(ts: &[RankTrajectory]) -> Result<Vec<ClassifiedTrend>, DynamicsError> {
    ts.iter()
        .map(|t| {
            Ok(ClassifiedTrend {
                doi: t.doi.clone(),
                trend: classify_trend(t)?,
            })
        })
        .collect()
}

/// Count of articles per trend class.
pub fn trend_counts(trends: &[ClassifiedTrend]) -> BTreeMap<&'static str, usize> {
    let mut counts = BTreeMap::from([("upward", 0), ("downward", 0), ("flat", 0)]);
    for t in trends {
        let key = match t.trend {
            Trend::Upward => "upward",
            Trend::Downward => "downward",
            Trend::Flat => "flat",
        };
        *counts.get_mut(key).expect("seeded") += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalPoint {
    pub snapshot_date: NaiveDate,
    pub total: f64,
}

/// Per-metric corpus sums, one point per snapshot in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTotalsSeries {
    pub series: BTreeMap<MetricKind, Vec<TotalPoint>>,
}

impl MetricTotalsSeries {
    pub fn totals(&self, metric: &str) -> Option<Vec<f64>> {
        self.series
            .get(&MetricKind::from(metric))
            .map(|pts| pts.iter().map(|p| p.total).collect())
    }
}

/// Sums every metric over the articles of each snapshot. A metric missing
/// from a snapshot's profile totals 0 there.
pub fn metric_totals(snapshots: &[Snapshot]) -> Result<MetricTotalsSeries, DynamicsError> {
    if snapshots.is_empty() {
        return Err(DynamicsError::NoSnapshots);
    }
    let metrics: BTreeSet<&MetricKind> = snapshots.iter().flat_map(|s| s.profile()).collect();
    let series = metrics
        .into_iter()
        .map(|metric| {
            let points = snapshots
                .iter()
                .map(|s| TotalPoint {
                    snapshot_date: s.snapshot_date(),
                    total: s.articles().iter().filter_map(|a| a.value(metric)).sum(),
                })
                .collect();
            (metric.clone(), points)
        })
        .collect();
    Ok(MetricTotalsSeries { series })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpPoint {
    pub phase_index: usize,
    pub phase: Option<u8>,
    pub snapshot_date: NaiveDate,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSeries {
    pub doi: String,
    pub trend: Trend,
    pub color: String,
    pub points: Vec<BumpPoint>,
}

/// Chart data for a rank-over-time plot; series are in first-column rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpChart {
    pub snapshot_dates: Vec<NaiveDate>,
    pub phases: Vec<Option<u8>>,
    pub series: Vec<BumpSeries>,
}

pub fn export_bumpchart(
    trajectories: &[RankTrajectory],
    trends: &[ClassifiedTrend],
) -> Result<BumpChart, DynamicsError> {
    let first = trajectories.first().ok_or(DynamicsError::NoTrajectories)?;
    let by_doi: BTreeMap<&str, Trend> = trends.iter().map(|t| (t.doi.as_str(), t.trend)).collect();
    let traj_dois: BTreeSet<&str> = trajectories.iter().map(|t| t.doi.as_str()).collect();
    let trend_dois: BTreeSet<&str> = by_doi.keys().copied().collect();
    if traj_dois != trend_dois || trends.len() != trajectories.len() {
        let diff = traj_dois
            .symmetric_difference(&trend_dois)
            .map(|s| s.to_string())
            .collect();
        return Err(DynamicsError::Misaligned(diff));
    }
    for t in trajectories {
        if t.points.len() != first.points.len() {
            return Err(DynamicsError::ShortTrajectory {
                doi: t.doi.clone(),
                len: t.points.len(),
            });
        }
    }

    let mut ordered: Vec<&RankTrajectory> = trajectories.iter().collect();
    ordered.sort_by(|a, b| {
        let ra = a.points.first().map_or(usize::MAX, |p| p.rank);
        let rb = b.points.first().map_or(usize::MAX, |p| p.rank);
        ra.cmp(&rb).then_with(|| a.doi.cmp(&b.doi))
    });
    let series = ordered
        .into_iter()
        .map(|t| {
            let trend = by_doi[t.doi.as_str()];
            BumpSeries {
                doi: t.doi.clone(),
                trend,
                color: trend.color().to_string(),
                points: t
                    .points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| BumpPoint {
                        phase_index: i,
                        phase: p.phase,
                        snapshot_date: p.snapshot_date,
                        rank: p.rank,
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(BumpChart {
        snapshot_dates: first.points.iter().map(|p| p.snapshot_date).collect(),
        phases: first.points.iter().map(|p| p.phase).collect(),
        series,
    })
}
