//! Pairwise-comparison weighting.
//!
//! A [`PairwiseMatrix`] holds reciprocal judgments on the 1..9 scale. Weights
//! are the principal right eigenvector found by power iteration, and the
//! consistency report compares the principal eigenvalue against the matrix
//! order using the classic random-index table.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper end of the judgment scale; the lower end is its reciprocal.
pub const SCALE_MAX: f64 = 9.0;
/// Relative tolerance for reciprocity and scale-bound checks.
pub const RECIPROCITY_TOL: f64 = 1e-9;
/// Power iteration stops once no component moves by more than this.
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 10_000;
/// Consistency ratios above this are reported with a warning.
pub const CR_WARNING_THRESHOLD: f64 = 0.1;

/// Metric labels of the shipped seven-metric profile, in matrix order.
pub const DEFAULT_LABELS: [&str; 7] = [
    "citeulike",
    "mendeley",
    "html_views",
    "pdf_downloads",
    "citations",
    "facebook",
    "twitter",
];

const PRESET_WEIGHTS: [[f64; 7]; 4] = [
    [0.0477, 0.0477, 0.1996, 0.3901, 0.0234, 0.1109, 0.1806],
    [0.1723, 0.1723, 0.1182, 0.2108, 0.1321, 0.0828, 0.1116],
    [0.1514, 0.1514, 0.0481, 0.0921, 0.3979, 0.0644, 0.0947],
    [0.1269, 0.1269, 0.0455, 0.0809, 0.4819, 0.0570, 0.0810],
];

// Upper triangles, row-major, of the shipped early and late judgment matrices.
const PHASE1_UPPER: [&str; 21] = [
    "1", "1/4", "1/6", "4", "1/4", "1/6", //
    "1/4", "1/6", "4", "1/4", "1/6", //
    "1/4", "6", "3", "2", //
    "9", "4", "3", //
    "1/4", "1/7", //
    "1/2",
];
const PHASE4_UPPER: [&str; 21] = [
    "1", "3", "2", "1/7", "3", "2", //
    "3", "2", "1/7", "3", "2", //
    "1/4", "1/9", "1", "1", //
    "1/6", "1", "1", //
    "4", "3", //
    "1/2",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AhpError {
    #[error("matrix must be square: row {row} has {found} entries, expected {expected}")]
    NotSquare {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("matrix order {0} is too small; at least 2 criteria are required")]
    TooSmall(usize),
    #[error("expected {expected} labels, found {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("entry ({row},{col}) = {value} is not a positive finite number")]
    NonPositive { row: usize, col: usize, value: f64 },
    #[error("expected {expected} upper-triangle entries for n = {n}, found {found}")]
    UpperLength {
        n: usize,
        expected: usize,
        found: usize,
    },
    #[error("cannot parse judgment {0:?}")]
    BadJudgment(String),
    #[error("matrix document must provide exactly one of \"upper\" or \"full\"")]
    AmbiguousForm,
    #[error("invalid pairwise matrix: {0}")]
    Invalid(ValidationReport),
    #[error("power iteration did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        last: Vec<f64>,
    },
    #[error("no random index available for matrix order {0}")]
    MissingRandomIndex(usize),
    #[error("unknown phase {0}; expected 1..=4")]
    UnknownPhase(u8),
    #[error("weight vector is invalid: {0}")]
    BadWeights(String),
}

/// Parses a single judgment written as `3`, `1/3` or `0.3333`.
pub fn parse_judgment(text: &str) -> Result<f64, AhpError> {
    let text = text.trim();
    let bad = || AhpError::BadJudgment(text.to_string());
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            num / den
        }
        None => text.parse().map_err(|_| bad())?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Square matrix of pairwise judgments with one label per criterion.
///
/// Construction checks structure only (square, positive, labelled); the
/// scale and reciprocity rules are checked by [`validate_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    labels: Vec<String>,
    entries: Vec<f64>,
    n: usize,
}

impl PairwiseMatrix {
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let n = rows.len();
        if n < 2 {
            return Err(AhpError::TooSmall(n));
        }
        if labels.len() != n {
            return Err(AhpError::LabelCount {
                expected: n,
                found: labels.len(),
            });
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(AhpError::NotSquare {
                    row: i,
                    found: row.len(),
                    expected: n,
                });
            }
            for (j, value) in row.into_iter().enumerate() {
                if !(value.is_finite() && value > 0.0) {
                    return Err(AhpError::NonPositive {
                        row: i,
                        col: j,
                        value,
                    });
                }
                entries.push(value);
            }
        }
        Ok(Self { labels, entries, n })
    }

    /// Builds a matrix from the entries above the diagonal (row-major),
    /// filling the diagonal with 1 and the lower triangle with reciprocals.
    pub fn from_upper(labels: Vec<String>, upper: &[f64]) -> Result<Self, AhpError> {
        let n = labels.len();
        if n < 2 {
            return Err(AhpError::TooSmall(n));
        }
        let expected = n * (n - 1) / 2;
        if upper.len() != expected {
            return Err(AhpError::UpperLength {
                n,
                expected,
                found: upper.len(),
            });
        }
        let mut entries = vec![1.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let value = upper[k];
                if !(value.is_finite() && value > 0.0) {
                    return Err(AhpError::NonPositive {
                        row: i,
                        col: j,
                        value,
                    });
                }
                entries[i * n + j] = value;
                entries[j * n + i] = 1.0 / value;
                k += 1;
            }
        }
        Ok(Self { labels, entries, n })
    }

    /// Matrix whose every judgment is the ratio of the generator's components.
    pub fn consistent_from(labels: Vec<String>, generator: &[f64]) -> Result<Self, AhpError> {
        let rows = generator
            .iter()
            .map(|vi| generator.iter().map(|vj| vi / vj).collect())
            .collect();
        Self::from_rows(labels, rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Reorders criteria so that new index `k` holds old criterion `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self {
            labels: perm.iter().map(|&p| self.labels[p].clone()).collect(),
            entries,
            n,
        }
    }

    fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// On-disk and over-the-wire form of a judgment matrix.
///
/// Entries may be JSON numbers or strings such as `"1/3"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<Judgment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<Vec<Vec<Judgment>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Judgment {
    Number(f64),
    Text(String),
}

impl Judgment {
    pub fn value(&self) -> Result<f64, AhpError> {
        match self {
            Judgment::Number(v) if v.is_finite() && *v > 0.0 => Ok(*v),
            Judgment::Number(v) => Err(AhpError::BadJudgment(v.to_string())),
            Judgment::Text(s) => parse_judgment(s),
        }
    }
}

impl MatrixDocument {
    pub fn to_matrix(&self) -> Result<PairwiseMatrix, AhpError> {
        if let Some(n) = self.n {
            if n != self.labels.len() {
                return Err(AhpError::LabelCount {
                    expected: n,
                    found: self.labels.len(),
                });
            }
        }
        match (&self.upper, &self.full) {
            (Some(upper), None) => {
                let values = upper
                    .iter()
                    .map(Judgment::value)
                    .collect::<Result<Vec<_>, _>>()?;
                PairwiseMatrix::from_upper(self.labels.clone(), &values)
            }
            (None, Some(full)) => {
                let rows = full
                    .iter()
                    .map(|row| row.iter().map(Judgment::value).collect())
                    .collect::<Result<Vec<Vec<f64>>, _>>()?;
                PairwiseMatrix::from_rows(self.labels.clone(), rows)
            }
            _ => Err(AhpError::AmbiguousForm),
        }
    }

    pub fn from_matrix(m: &PairwiseMatrix) -> Self {
        Self {
            n: Some(m.n()),
            labels: m.labels().to_vec(),
            upper: None,
            full: Some(
                m.rows()
                    .into_iter()
                    .map(|r| r.into_iter().map(Judgment::Number).collect())
                    .collect(),
            ),
        }
    }
}

impl FromStr for PairwiseMatrix {
    type Err = AhpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let doc: MatrixDocument =
            serde_json::from_str(s).map_err(|e| AhpError::BadJudgment(e.to_string()))?;
        doc.to_matrix()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Diagonal,
    Reciprocity,
    Scale,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Diagonal => "diagonal",
            ViolationKind::Reciprocity => "reciprocity",
            ViolationKind::Scale => "scale",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} at ({},{}) = {}", v.kind, v.row, v.col, v.value)?;
        }
        Ok(())
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= RECIPROCITY_TOL * a.abs().max(b.abs())
}

/// Checks the diagonal, scale and reciprocity rules cell by cell.
///
/// Reciprocity failures are reported on the lower-triangle cell.
pub fn validate_matrix(m: &PairwiseMatrix) -> Result<ValidationReport, AhpError> {
    let n = m.n();
    if n < 2 {
        return Err(AhpError::TooSmall(n));
    }
    let mut violations = Vec::new();
    let lo = 1.0 / SCALE_MAX;
    for i in 0..n {
        for j in 0..n {
            let value = m.get(i, j);
            if i == j {
                if value != 1.0 {
                    violations.push(Violation {
                        kind: ViolationKind::Diagonal,
                        row: i,
                        col: j,
                        value,
                    });
                }
                continue;
            }
            let in_scale = (value >= lo || rel_close(value, lo))
                && (value <= SCALE_MAX || rel_close(value, SCALE_MAX));
            if !in_scale {
                violations.push(Violation {
                    kind: ViolationKind::Scale,
                    row: i,
                    col: j,
                    value,
                });
            }
            if i > j && !rel_close(value, 1.0 / m.get(j, i)) {
                violations.push(Violation {
                    kind: ViolationKind::Reciprocity,
                    row: i,
                    col: j,
                    value,
                });
            }
        }
    }
    Ok(ValidationReport {
        ok: violations.is_empty(),
        violations,
    })
}

/// Positive weights summing to one, labelled by criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    labels: Vec<String>,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self, AhpError> {
        if labels.len() != weights.len() {
            return Err(AhpError::LabelCount {
                expected: weights.len(),
                found: labels.len(),
            });
        }
        if weights.is_empty() {
            return Err(AhpError::BadWeights("empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(AhpError::BadWeights(format!("non-positive weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(AhpError::BadWeights(format!("weights sum to {sum}")));
        }
        Ok(Self { labels, weights })
    }

    /// Equal weight for every label.
    pub fn uniform(labels: Vec<String>) -> Result<Self, AhpError> {
        let n = labels.len();
        Self::new(labels, vec![1.0 / n as f64; n])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.weights.iter().copied())
    }
}

/// Output of the power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalEigen {
    pub weights: WeightVector,
    pub iterations: usize,
}

/// Runs power iteration from the uniform vector, sum-normalizing each step.
pub fn power_iteration(m: &PairwiseMatrix) -> Result<PrincipalEigen, AhpError> {
    let report = validate_matrix(m)?;
    if !report.ok {
        return Err(AhpError::Invalid(report));
    }
    let n = m.n();
    let mut w = vec![1.0 / n as f64; n];
    for iteration in 1..=POWER_MAX_ITERATIONS {
        let mut next = m.mul_vec(&w);
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= sum);
        let delta = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        if delta < POWER_TOL {
            // Final renormalization keeps the sum within rounding of 1.
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= sum);
            return Ok(PrincipalEigen {
                weights: WeightVector::new(m.labels().to_vec(), w)?,
                iterations: iteration,
            });
        }
    }
    Err(AhpError::NotConverged {
        iterations: POWER_MAX_ITERATIONS,
        last: w,
    })
}

/// Principal right eigenvector of `m`, normalized to sum 1.
pub fn principal_weights(m: &PairwiseMatrix) -> Result<WeightVector, AhpError> {
    power_iteration(m).map(|p| p.weights)
}

/// Random consistency index by matrix order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomIndexTable {
    values: BTreeMap<usize, f64>,
}

impl Default for RandomIndexTable {
    fn default() -> Self {
        const SAATY: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];
        Self {
            values: SAATY.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect(),
        }
    }
}

impl RandomIndexTable {
    /// Adds or replaces the index for order `n`.
    pub fn with_override(mut self, n: usize, ri: f64) -> Self {
        self.values.insert(n, ri);
        self
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.values.get(&n).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub lambda_max: f64,
    pub ci: f64,
    pub cr: f64,
    pub ri: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl ConsistencyReport {
    pub fn is_acceptable(&self) -> bool {
        self.cr <= CR_WARNING_THRESHOLD
    }
}

pub fn consistency(m: &PairwiseMatrix, eigen: &PrincipalEigen) -> Result<ConsistencyReport, AhpError> {
    consistency_with(m, eigen, &RandomIndexTable::default())
}

/// λ_max = Σ (A·w)_i for sum-normalized w; CI = (λ_max − n)/(n − 1); CR = CI/RI.
pub fn consistency_with(
    m: &PairwiseMatrix,
    eigen: &PrincipalEigen,
    table: &RandomIndexTable,
) -> Result<ConsistencyReport, AhpError> {
    let n = m.n();
    let w = eigen.weights.values();
    if w.len() != n {
        return Err(AhpError::LabelCount {
            expected: n,
            found: w.len(),
        });
    }
    let lambda_max: f64 = m.mul_vec(w).iter().sum();
    let ri = table.get(n).ok_or(AhpError::MissingRandomIndex(n))?;
    let (ci, cr) = if n <= 2 {
        (0.0, 0.0)
    } else {
        let ci = (lambda_max - n as f64) / (n as f64 - 1.0);
        (ci, ci / ri)
    };
    let warning = (cr > CR_WARNING_THRESHOLD)
        .then(|| format!("consistency ratio {cr:.4} exceeds {CR_WARNING_THRESHOLD}"));
    Ok(ConsistencyReport {
        lambda_max,
        ci,
        cr,
        ri,
        iterations: eigen.iterations,
        converged: true,
        warning,
    })
}

/// Weights and consistency in one call.
pub fn evaluate(m: &PairwiseMatrix) -> Result<(WeightVector, ConsistencyReport), AhpError> {
    let eigen = power_iteration(m)?;
    let report = consistency(m, &eigen)?;
    Ok((eigen.weights, report))
}

fn default_labels() -> Vec<String> {
    DEFAULT_LABELS.iter().map(|s| s.to_string()).collect()
}

/// Shipped weight row for an article-age phase (1..=4).
///
/// The rows are published to four decimals and some sum to 1.0001, so they
/// are rescaled to sum to exactly 1; no component moves by more than 5e-5.
pub fn preset_weights(phase: u8) -> Result<WeightVector, AhpError> {
    let row = match phase {
        1..=4 => PRESET_WEIGHTS[phase as usize - 1],
        _ => return Err(AhpError::UnknownPhase(phase)),
    };
    let sum: f64 = row.iter().sum();
    WeightVector::new(default_labels(), row.iter().map(|w| w / sum).collect())
}

/// The published four-decimal row, without rescaling.
pub fn published_weights(phase: u8) -> Result<[f64; 7], AhpError> {
    match phase {
        1..=4 => Ok(PRESET_WEIGHTS[phase as usize - 1]),
        _ => Err(AhpError::UnknownPhase(phase)),
    }
}

/// Shipped judgment matrix for a phase, where one exists (phases 1 and 4).
pub fn preset_matrix(phase: u8) -> Result<Option<PairwiseMatrix>, AhpError> {
    let upper = match phase {
        1 => &PHASE1_UPPER,
        4 => &PHASE4_UPPER,
        2 | 3 => return Ok(None),
        _ => return Err(AhpError::UnknownPhase(phase)),
    };
    let values = upper
        .iter()
        .map(|s| parse_judgment(s))
        .collect::<Result<Vec<_>, _>>()?;
    PairwiseMatrix::from_upper(default_labels(), &values).map(Some)
}
