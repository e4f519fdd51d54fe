//! End-to-end operations shared by the command line, the HTTP service and
//! the C bindings, so all three produce identical results.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ahp::{self, PairwiseMatrix};
use crate::dynamics;
use crate::io::{DynamicsPayload, WeightsPayload};
use crate::scoring::{self, PhaseSchedule, PipelineOptions, ScoredRanking, Snapshot, YearMonth};
use crate::Error;

/// Weights from a judgment matrix, a preset phase, or both (then the matrix
/// weights are compared against the published row for that phase).
pub fn weights_report(matrix: Option<&PairwiseMatrix>, phase: Option<u8>) -> Result<WeightsPayload, Error> {
    let published = phase.map(ahp::published_weights).transpose()?;
    match (matrix, phase) {
        (Some(m), _) => {
            let validation = ahp::validate_matrix(m)?;
            if !validation.ok {
                return Err(ahp::AhpError::Invalid(validation).into());
            }
            let (weights, consistency) = ahp::evaluate(m)?;
            let preset_max_deviation = match published {
                Some(row) if weights.labels() == ahp::DEFAULT_LABELS => Some(
                    weights
                        .values()
                        .iter()
                        .zip(row)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max),
                ),
                _ => None,
            };
            Ok(WeightsPayload {
                weights,
                consistency: Some(consistency),
                validation: Some(validation),
                phase,
                preset_max_deviation,
            })
        }
        (None, Some(p)) => {
            let weights = ahp::preset_weights(p)?;
            let consistency = match ahp::preset_matrix(p)? {
                Some(m) => Some(ahp::evaluate(&m)?.1),
                None => None,
            };
            Ok(WeightsPayload {
                weights,
                consistency,
                validation: None,
                phase,
                preset_max_deviation: None,
            })
        }
        (None, None) => Err(Error::Request("either a matrix or a phase is required".into())),
    }
}

/// How to pick the phase and weights for one scoring run.
#[derive(Debug, Clone, Default)]
pub struct ScoreRequest {
    /// Defaults to the snapshot date when neither this nor `phase` is set.
    pub as_of: Option<NaiveDate>,
    pub phase: Option<u8>,
    pub cohort_month: Option<YearMonth>,
    pub schedule: PhaseSchedule,
    pub matrix_override: Option<PairwiseMatrix>,
}

pub fn score(snapshot: &Snapshot, request: &ScoreRequest) -> Result<ScoredRanking, Error> {
    if let Some(phase) = request.phase {
        if request.as_of.is_some() {
            return Err(Error::Request("give either an as-of date or a phase, not both".into()));
        }
        let weights = match &request.matrix_override {
            Some(m) => ahp::principal_weights(m)?,
            None => ahp::preset_weights(phase)?,
        };
        return Ok(scoring::score_with_phase(snapshot, phase, &weights)?);
    }
    let as_of = request.as_of.unwrap_or_else(|| snapshot.snapshot_date());
    let options = PipelineOptions {
        schedule: request.schedule.clone(),
        matrix_override: request.matrix_override.clone(),
        cohort_month: request.cohort_month,
    };
    Ok(scoring::score_pipeline(snapshot, as_of, &options)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDelta {
    pub doi: String,
    pub baseline_rank: usize,
    pub candidate_rank: usize,
    /// Baseline rank minus candidate rank; positive means the article moved up.
    pub delta: i64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub baseline: ScoredRanking,
    pub candidate: ScoredRanking,
    /// In baseline rank order.
    pub deltas: Vec<RankDelta>,
}

/// Ranks the snapshot under preset weights and under the candidate matrix.
pub fn whatif(snapshot: &Snapshot, candidate: &PairwiseMatrix, request: &ScoreRequest) -> Result<WhatIfReport, Error> {
    let baseline_request = ScoreRequest {
        matrix_override: None,
        ..request.clone()
    };
    let baseline = score(snapshot, &baseline_request)?;
    let candidate_request = ScoreRequest {
        matrix_override: Some(candidate.clone()),
        ..request.clone()
    };
    let candidate = score(snapshot, &candidate_request)?;
    let deltas = baseline
        .rows
        .iter()
        .map(|row| {
            let candidate_rank = candidate.rank_of(&row.doi).expect("same snapshot");
            let delta = row.rank as i64 - candidate_rank as i64;
            RankDelta {
                doi: row.doi.clone(),
                baseline_rank: row.rank,
                candidate_rank,
                delta,
                direction: match delta.signum() {
                    1 => Direction::Up,
                    -1 => Direction::Down,
                    _ => Direction::Flat,
                },
            }
        })
        .collect();
    Ok(WhatIfReport {
        baseline,
        candidate,
        deltas,
    })
}

/// Scores each snapshot at its own date and tracks ranks across them.
///
/// Snapshots are taken in date order regardless of input order.
pub fn dynamics_report(
    snapshots: &[Snapshot],
    schedule: &PhaseSchedule,
    cohort_month: Option<YearMonth>,
) -> Result<DynamicsPayload, Error> {
    let mut ordered: Vec<&Snapshot> = snapshots.iter().collect();
    ordered.sort_by_key(|s| s.snapshot_date());
    let rankings = ordered
        .iter()
        .map(|s| {
            score(
                s,
                &ScoreRequest {
                    cohort_month,
                    schedule: schedule.clone(),
                    ..Default::default()
                },
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let trajectories = dynamics::trajectories(&rankings)?;
    let trends = dynamics::classify_all(&trajectories)?;
    let bump_chart = dynamics::export_bumpchart(&trajectories, &trends)?;
    let trend_counts = dynamics::trend_counts(&trends)
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let metric_totals = dynamics::metric_totals(&ordered.into_iter().cloned().collect::<Vec<_>>())?;
    Ok(DynamicsPayload {
        trajectories,
        trends,
        trend_counts,
        bump_chart,
        metric_totals,
    })
}
