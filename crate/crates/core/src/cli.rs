//! The `ale` command.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::factor::{self, DataMatrix, Retention};
use crate::io::{self, ResultDocument, ResultPayload, RunConfig, SnapshotFormat};
use crate::pipeline::{self, ScoreRequest};
use crate::scoring::{PhaseSchedule, YearMonth};
use crate::service;

#[derive(Debug, Parser)]
#[command(name = "ale", version, about = "Article-level evaluation: weights, scores, rank dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive weights and consistency from a judgment matrix or a preset phase.
    Weights(WeightsArgs),
    /// Score and rank one snapshot.
    Score(ScoreArgs),
    /// Track ranks across several snapshots.
    Dynamics(DynamicsArgs),
    /// Principal components with varimax rotation over a snapshot's metrics.
    Fa(FaArgs),
    /// Serve the JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).multiple(true).args(["matrix", "phase"])))]
pub struct WeightsArgs {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub phase: Option<u8>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub format: Option<SnapshotFormat>,
    /// Required unless a config supplies it.
    #[arg(long)]
    pub as_of: Option<NaiveDate>,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Publication month for phase resolution when articles span several.
    #[arg(long)]
    pub cohort: Option<YearMonth>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[arg(long, num_args = 2.., required = true)]
    pub snapshots: Vec<PathBuf>,
    #[arg(long)]
    pub cohort: Option<YearMonth>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FaArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Fixed factor count; defaults to the eigenvalue > 1 rule.
    #[arg(long)]
    pub factors: Option<usize>,
    #[arg(long, default_value_t = factor::DEFAULT_SUPPRESSION)]
    pub threshold: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
    #[arg(long, env = "ALE_CORPUS_DIR")]
    pub corpus: PathBuf,
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn emit(doc: &ResultDocument, output: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<()> {
    out.write_all(doc.to_json().as_bytes())?;
    if let Some(path) = output {
        io::write_result(doc, path)?;
    }
    Ok(())
}

fn run_weights(args: &WeightsArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut doc_inputs = Vec::new();
    let matrix = match &args.matrix {
        Some(path) => {
            let (m, digest) = io::load_matrix(path)?;
            doc_inputs.push((format!("matrix:{}", file_label(path)), digest));
            Some(m)
        }
        None => None,
    };
    let payload = pipeline::weights_report(matrix.as_ref(), args.phase)?;
    let mut doc = ResultDocument::new(ResultPayload::Weights(payload));
    for (k, v) in doc_inputs {
        doc = doc.with_input(k, v);
    }
    emit(&doc, args.output.as_deref(), out)
}

fn run_score(args: &ScoreArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let config = args.config.as_deref().map(RunConfig::load).transpose()?.unwrap_or_default();
    let file = io::load_snapshot(&args.snapshot, args.format)?;
    let mut doc_inputs = vec![(format!("snapshot:{}", file_label(&args.snapshot)), file.digest.clone())];
    let snapshot = match &config.profile {
        Some(profile) => file.snapshot.restrict(profile)?,
        None => file.snapshot,
    };
    let Some(as_of) = args.as_of.or(config.as_of) else {
        bail!("--as-of is required (or set as_of in --config)");
    };
    let schedule = config.schedule();
    let cohort = match args.cohort {
        Some(c) => c,
        None => snapshot.cohort_month()?,
    };
    let phase = crate::scoring::determine_phase(cohort, as_of, &schedule)?;
    let matrix_path = args.matrix.clone().or_else(|| config.matrix_for(phase).map(Path::to_path_buf));
    let matrix_override = match &matrix_path {
        Some(path) => {
            let (m, digest) = io::load_matrix(path)?;
            doc_inputs.push((format!("matrix:{}", file_label(path)), digest));
            Some(m)
        }
        None => None,
    };
    let request = ScoreRequest {
        as_of: Some(as_of),
        phase: None,
        cohort_month: Some(cohort),
        schedule,
        matrix_override,
    };
    let ranking = pipeline::score(&snapshot, &request)?;
    let mut doc = ResultDocument::new(ResultPayload::Ranking(ranking));
    for (k, v) in doc_inputs {
        doc = doc.with_input(k, v);
    }
    let output = args
        .output
        .clone()
        .or_else(|| config.output_dir.as_ref().map(|d| d.join("ranking.json")));
    emit(&doc, output.as_deref(), out)
}

fn run_dynamics(args: &DynamicsArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut snapshots = Vec::new();
    let mut doc_inputs = Vec::new();
    for (i, path) in args.snapshots.iter().enumerate() {
        let file = io::load_snapshot(path, None)?;
        doc_inputs.push((format!("snapshot[{i}]:{}", file_label(path)), file.digest));
        snapshots.push(file.snapshot);
    }
    let payload = pipeline::dynamics_report(&snapshots, &PhaseSchedule::default(), args.cohort)?;
    let mut doc = ResultDocument::new(ResultPayload::Dynamics(payload));
    for (k, v) in doc_inputs {
        doc = doc.with_input(k, v);
    }
    emit(&doc, args.output.as_deref(), out)
}

fn run_fa(args: &FaArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let file = io::load_snapshot(&args.snapshot, None)?;
    let data = DataMatrix::from_snapshot(&file.snapshot)?;
    let retention = args.factors.map_or(Retention::Kaiser, Retention::Fixed);
    let report = factor::fit_factors(&data, retention, args.threshold).map_err(crate::Error::from)?;
    let doc = ResultDocument::new(ResultPayload::FactorReport(report))
        .with_input(format!("snapshot:{}", file_label(&args.snapshot)), file.digest);
    emit(&doc, args.output.as_deref(), out)
}

fn run_serve(args: &ServeArgs) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    runtime.block_on(service::serve(service::ServeConfig {
        addr: SocketAddr::new(args.bind, args.port),
        corpus: args.corpus.clone(),
    }))
}

/// Parses `argv` (including the program name) and runs the command.
///
/// Returns the process exit code: 0 on success, 2 for usage errors, 1 for
/// everything else (with a single-line diagnostic on `err`).
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Weights(a) => run_weights(a, out),
        Command::Score(a) => run_score(a, out),
        Command::Dynamics(a) => run_dynamics(a, out),
        Command::Fa(a) => run_fa(a, out),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let line = format!("{e:#}").replace('\n', " ");
            let _ = writeln!(err, "error: {line}");
            1
        }
    }
}
