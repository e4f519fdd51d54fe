//! Article-level evaluation engine.
//!
//! Raw per-article metrics (views, downloads, bookmarks, social mentions,
//! citations) are min-max normalized within a snapshot and combined with
//! weights derived from pairwise-comparison matrices. The weights depend on
//! article age, so a corpus is re-ranked as it matures and each article's
//! rank trajectory can be tracked across snapshots.
//!
//! Modules:
//! - [`ahp`]: judgment matrices, principal-eigenvector weights, consistency
//! - [`scoring`]: normalization, composite scores, phases, cohort selection
//! - [`factor`]: correlation, principal components, varimax
//! - [`dynamics`]: rank trajectories, trends, metric totals, bump charts
//! - [`io`]: snapshot files, result documents, run configuration
//! - [`pipeline`]: operations shared by the CLI, service and C bindings
//! - [`service`]: JSON-over-HTTP API
//! - [`cli`]: the `ale` command

pub mod ahp;
pub mod cli;
pub mod dynamics;
pub mod factor;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod scoring;
pub mod service;

use thiserror::Error;

pub use ahp::{PairwiseMatrix, WeightVector};
pub use io::ENGINE_VERSION;
pub use scoring::{ScoredRanking, Snapshot};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ahp(#[from] ahp::AhpError),
    #[error(transparent)]
    Scoring(#[from] scoring::ScoringError),
    #[error(transparent)]
    Factor(#[from] factor::FactorError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Pipeline(#[from] io::PipelineError),
    #[error("{0}")]
    Request(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
