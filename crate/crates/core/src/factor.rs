//! Principal-component extraction with varimax rotation.
//!
//! Components are extracted from the Pearson correlation matrix, retained by
//! the Kaiser rule (eigenvalue > 1) or a fixed count, and rotated toward
//! simple structure. Loadings below the suppression threshold are flagged
//! for display but kept in every computation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::scoring::Snapshot;

pub const DEFAULT_SUPPRESSION: f64 = 0.5;
pub const VARIMAX_TOL: f64 = 1e-8;
pub const VARIMAX_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("need at least 3 observations and 2 variables, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("expected {expected} variable labels, found {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("non-finite value at row {row}, variable {variable}")]
    NonFinite { row: usize, variable: String },
    #[error("variable {0} has zero variance")]
    DegenerateVariable(String),
    #[error("retention rule kept no factors")]
    NoFactors,
    #[error("requested {requested} factors but only {available} variables")]
    TooManyFactors { requested: usize, available: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Observations (rows) by variables (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    labels: Vec<String>,
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, FactorError> {
        let cols = labels.len();
        if rows.len() < 3 || cols < 2 {
            return Err(FactorError::TooSmall {
                rows: rows.len(),
                cols,
            });
        }
        let mut values = DMatrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(FactorError::Ragged {
                    row: i,
                    found: row.len(),
                    expected: cols,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(FactorError::NonFinite {
                        row: i,
                        variable: labels[j].clone(),
                    });
                }
                values[(i, j)] = v;
            }
        }
        Ok(Self { labels, values })
    }

    /// One row per article, one column per profile metric.
    pub fn from_snapshot(snapshot: &Snapshot) -> Result<Self, FactorError> {
        let labels: Vec<String> = snapshot.profile().iter().map(ToString::to_string).collect();
        let rows: Vec<Vec<f64>> = snapshot
            .articles()
            .iter()
            .map(|a| {
                snapshot
                    .profile()
                    .iter()
                    .map(|m| a.value(m).unwrap_or(0.0))
                    .collect()
            })
            .collect();
        Self::new(labels, &rows)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

pub fn correlation_matrix(data: &DataMatrix) -> Result<DMatrix<f64>, FactorError> {
    let x = &data.values;
    let (n, p) = x.shape();
    let mut centered = x.clone();
    let mut norms = Vec::with_capacity(p);
    for j in 0..p {
        let mean = x.column(j).mean();
        let mut col = centered.column_mut(j);
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        // A column equal to its mean up to rounding has no variance.
        if norm <= 1e-12 * mean.abs().max(1.0) * (n as f64).sqrt() {
            return Err(FactorError::DegenerateVariable(data.labels[j].clone()));
        }
        norms.push(norm);
    }
    let mut r = DMatrix::identity(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let c = centered.column(i).dot(&centered.column(j)) / (norms[i] * norms[j]);
            let c = c.clamp(-1.0, 1.0);
            r[(i, j)] = c;
            r[(j, i)] = c;
        }
    }
    Ok(r)
}

/// Variables by factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingMatrix {
    pub variable_labels: Vec<String>,
    pub factor_labels: Vec<String>,
    /// `loadings[v][f]`.
    pub loadings: Vec<Vec<f64>>,
}

impl LoadingMatrix {
    pub fn from_matrix(variable_labels: Vec<String>, m: &DMatrix<f64>) -> Self {
        let factor_labels = (1..=m.ncols()).map(|f| format!("Factor {f}")).collect();
        Self {
            variable_labels,
            factor_labels,
            loadings: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let rows = self.loadings.len();
        let cols = self.factor_count();
        DMatrix::from_fn(rows, cols, |i, j| self.loadings[i][j])
    }

    pub fn factor_count(&self) -> usize {
        self.loadings.first().map_or(0, Vec::len)
    }

    pub fn variable_count(&self) -> usize {
        self.loadings.len()
    }

    /// Σ_f loading² per variable.
    pub fn communalities(&self) -> Vec<f64> {
        self.loadings
            .iter()
            .map(|row| row.iter().map(|l| l * l).sum())
            .collect()
    }

    /// Percentage of total variance carried by each factor.
    pub fn variance_explained(&self) -> Vec<f64> {
        let p = self.variable_count() as f64;
        (0..self.factor_count())
            .map(|f| self.loadings.iter().map(|r| r[f] * r[f]).sum::<f64>() / p * 100.0)
            .collect()
    }
}

/// Sum over factors of the variance of squared loadings.
///
/// With `kaiser_normalized`, each row is first scaled to unit communality,
/// which is the quantity the rotation maximizes.
pub fn varimax_criterion(loadings: &DMatrix<f64>, kaiser_normalized: bool) -> f64 {
    let a = if kaiser_normalized {
        kaiser_normalize(loadings).0
    } else {
        loadings.clone()
    };
    let p = a.nrows() as f64;
    a.column_iter()
        .map(|col| {
            let sq: f64 = col.iter().map(|x| x * x).sum::<f64>() / p;
            let quad: f64 = col.iter().map(|x| x.powi(4)).sum::<f64>() / p;
            quad - sq * sq
        })
        .sum()
}

fn kaiser_normalize(l: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let mut a = l.clone();
    let mut h = Vec::with_capacity(l.nrows());
    for i in 0..l.nrows() {
        let norm = l.row(i).norm();
        let scale = if norm > 0.0 { norm } else { 1.0 };
        a.row_mut(i).unscale_mut(scale);
        h.push(scale);
    }
    (a, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarimaxResult {
    pub loadings: LoadingMatrix,
    /// Orthogonal matrix with `rotated = input × rotation`.
    pub rotation: DMatrix<f64>,
    pub iterations: usize,
}

pub fn varimax(loadings: &LoadingMatrix) -> LoadingMatrix {
    varimax_rotation(loadings).loadings
}

/// Kaiser-normalized varimax by successive planar rotations of factor pairs.
///
/// Output columns are sign-flipped so each column's largest-magnitude loading
/// is positive, then ordered by variance explained. A single factor passes
/// through with only the sign convention applied.
pub fn varimax_rotation(loadings: &LoadingMatrix) -> VarimaxResult {
    let l = loadings.to_matrix();
    let k = l.ncols();
    let p = l.nrows() as f64;
    let mut rotation = DMatrix::<f64>::identity(k, k);
    let mut iterations = 0;

    if k >= 2 {
        let (mut a, _) = kaiser_normalize(&l);
        let mut previous = varimax_criterion(&a, false);
        while iterations < VARIMAX_MAX_ITERATIONS {
            iterations += 1;
            for f in 0..k {
                for g in (f + 1)..k {
                    let (mut sum_u, mut sum_v, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
                    for i in 0..a.nrows() {
                        let (x, y) = (a[(i, f)], a[(i, g)]);
                        let u = x * x - y * y;
                        let v = 2.0 * x * y;
                        sum_u += u;
                        sum_v += v;
                        c += u * u - v * v;
                        d += 2.0 * u * v;
                    }
                    let num = d - 2.0 * sum_u * sum_v / p;
                    let den = c - (sum_u * sum_u - sum_v * sum_v) / p;
                    let phi = 0.25 * num.atan2(den);
                    let (sin, cos) = phi.sin_cos();
                    rotate_columns(&mut a, f, g, cos, sin);
                    rotate_columns(&mut rotation, f, g, cos, sin);
                }
            }
            let current = varimax_criterion(&a, false);
            if current - previous < VARIMAX_TOL {
                break;
            }
            previous = current;
        }
    }

    let mut rotated = &l * &rotation;
    for f in 0..k {
        let col = rotated.column(f);
        let peak = col.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if peak < 0.0 {
            rotated.column_mut(f).neg_mut();
            rotation.column_mut(f).neg_mut();
        }
    }
    let ss: Vec<f64> = rotated.column_iter().map(|c| c.norm_squared()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| ss[j].total_cmp(&ss[i]));
    let rotated = rotated.select_columns(&order);
    let rotation = rotation.select_columns(&order);

    VarimaxResult {
        loadings: LoadingMatrix::from_matrix(loadings.variable_labels.clone(), &rotated),
        rotation,
        iterations,
    }
}

fn rotate_columns(m: &mut DMatrix<f64>, f: usize, g: usize, cos: f64, sin: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, f)], m[(i, g)]);
        m[(i, f)] = x * cos + y * sin;
        m[(i, g)] = -x * sin + y * cos;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "factors")]
pub enum Retention {
    /// Keep components whose eigenvalue exceeds 1.
    Kaiser,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub loadings: LoadingMatrix,
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    pub variance_explained: Vec<f64>,
    pub total_variance: f64,
    pub suppression_threshold: f64,
    /// `suppressed[v][f]` is true when |loading| < threshold.
    pub suppressed: Vec<Vec<bool>>,
    pub retention: Retention,
    pub rotated: bool,
}

impl FactorReport {
    /// Loadings with suppressed cells blanked, as printed in a rotated
    /// component table.
    pub fn display_loadings(&self) -> Vec<Vec<Option<f64>>> {
        self.loadings
            .loadings
            .iter()
            .zip(&self.suppressed)
            .map(|(row, mask)| {
                row.iter()
                    .zip(mask)
                    .map(|(&l, &s)| (!s).then_some(l))
                    .collect()
            })
            .collect()
    }
}

pub fn fit_factors(
    data: &DataMatrix,
    retention: Retention,
    suppression_threshold: f64,
) -> Result<FactorReport, FactorError> {
    let r = correlation_matrix(data)?;
    let eigen = linalg::eigen_sym(&r)?;
    let p = r.nrows();
    let k = match retention {
        Retention::Kaiser => eigen.values.iter().filter(|&&v| v > 1.0).count(),
        Retention::Fixed(k) if k > p => {
            return Err(FactorError::TooManyFactors {
                requested: k,
                available: p,
            })
        }
        Retention::Fixed(k) => k,
    };
    if k == 0 {
        return Err(FactorError::NoFactors);
    }

    let mut unrotated = DMatrix::zeros(p, k);
    for f in 0..k {
        let scale = eigen.values[f].max(0.0).sqrt();
        unrotated.set_column(f, &(eigen.vectors.column(f) * scale));
    }
    let unrotated = LoadingMatrix::from_matrix(data.labels.clone(), &unrotated);
    // varimax_rotation with one factor only applies the sign convention.
    let loadings = varimax_rotation(&unrotated).loadings;

    let variance_explained = loadings.variance_explained();
    let total_variance = variance_explained.iter().sum();
    let suppressed = loadings
        .loadings
        .iter()
        .map(|row| row.iter().map(|l| l.abs() < suppression_threshold).collect())
        .collect();
    Ok(FactorReport {
        loadings,
        eigenvalues: eigen.values.iter().copied().collect(),
        variance_explained,
        total_variance,
        suppression_threshold,
        suppressed,
        retention,
        rotated: k >= 2,
    })
}
