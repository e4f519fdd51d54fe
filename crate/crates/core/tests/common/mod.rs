#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use ale_core::ahp::{PairwiseMatrix, WeightVector};
use ale_core::factor::DataMatrix;
use ale_core::scoring::{ArticleMetrics, MetricKind, Snapshot, YearMonth};
use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const SAATY: [f64; 17] = [
    1.0 / 9.0,
    1.0 / 8.0,
    1.0 / 7.0,
    1.0 / 6.0,
    1.0 / 5.0,
    1.0 / 4.0,
    1.0 / 3.0,
    1.0 / 2.0,
    1.0,
    2.0,
    3.0,
    4.0,
    5.0,
    6.0,
    7.0,
    8.0,
    9.0,
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Largest spread whose pairwise ratios stay on the 1/9..9 scale.
pub const GENERATOR_RANGE: std::ops::Range<f64> = 1.0 / 3.0..3.0;

pub fn generator(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(GENERATOR_RANGE)).collect()
}

pub fn random_saaty_matrix(rng: &mut impl Rng, n: usize) -> PairwiseMatrix {
    let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| *SAATY.choose(rng).unwrap()).collect();
    PairwiseMatrix::from_upper(labels(n), &upper).unwrap()
}

/// Perron vector from a dense eigensolver: the real eigenvalue of largest
/// modulus, then the null space of `A - λI` from an SVD.
pub fn dense_perron(m: &PairwiseMatrix) -> (f64, Vec<f64>) {
    let n = m.n();
    let a = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let lambda = a
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-9)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted = &a - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .unwrap()
        .0;
    let v: Vec<f64> = v_t.row(k).iter().copied().collect();
    let s: f64 = v.iter().sum();
    (lambda, v.iter().map(|x| x / s).collect())
}

pub fn metric_names(k: usize) -> Vec<MetricKind> {
    (0..k).map(|i| MetricKind::new(format!("m{i}"))).collect()
}

/// Corpus with integer-heavy values, frequent ties and the occasional
/// constant column.
pub fn random_corpus(rng: &mut impl Rng, n: usize, k: usize) -> Snapshot {
    let profile = metric_names(k);
    let constant: Vec<bool> = (0..k).map(|_| rng.random_bool(0.1)).collect();
    let articles = (0..n)
        .map(|i| {
            let values: BTreeMap<MetricKind, f64> = profile
                .iter()
                .zip(&constant)
                .map(|(m, &c)| {
                    let v = if c {
                        7.0
                    } else {
                        match rng.random_range(0..3) {
                            0 => rng.random_range(0..5) as f64,
                            1 => rng.random_range(0..20_000) as f64,
                            _ => (rng.random_range(0.0..1000.0_f64) * 1000.0).round() / 1000.0,
                        }
                    };
                    (m.clone(), v)
                })
                .collect();
            ArticleMetrics {
                doi: format!("10.1000/a{:03}.{}", rng.random_range(0..1000), i),
                publication_month: YearMonth::new(2012, rng.random_range(1..=12)).unwrap(),
                subject: ["biology", "physics", "medicine"].choose(rng).unwrap().to_string(),
                values,
            }
        })
        .collect();
    let date = format!("2014-{:02}-{:02}", rng.random_range(1..=12), rng.random_range(1..=28));
    Snapshot::new(date.parse().unwrap(), profile, articles).unwrap()
}

pub fn random_weights(rng: &mut impl Rng, labels: Vec<String>) -> WeightVector {
    let raw: Vec<f64> = labels.iter().map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    WeightVector::new(labels, raw.iter().map(|x| x / s).collect()).unwrap()
}

/// Straight weighted sum over min-max normalized columns, ranked by
/// descending score then DOI.
pub fn brute_force_ranking(snapshot: &Snapshot, weights: &WeightVector) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for a in snapshot.articles() {
        let mut score = 0.0;
        for (label, w) in weights.iter() {
            let metric = MetricKind::from(label);
            let col: Vec<f64> = snapshot.articles().iter().map(|b| b.value(&metric).unwrap()).collect();
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let x = a.value(&metric).unwrap();
            let norm = if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };
            score += w * norm;
        }
        out.push((a.doi.clone(), score));
    }
    out.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    out
}

pub const FACTOR_LOADING: f64 = 0.8;
pub const FACTOR_NOISE: f64 = 0.1;
/// Variables 0..5 load on the first factor, 5..7 on the second.
pub const FACTOR_GROUPS: [usize; 7] = [0, 0, 0, 0, 0, 1, 1];

/// Two orthonormal factors, seven indicators.
pub fn synthetic_two_factor(seed: u64, n: usize) -> DataMatrix {
    let mut rng = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut f = DMatrix::from_fn(n, 2, |_, _| normal.sample(&mut rng));
    // Center, then Gram-Schmidt so the sample factors are uncorrelated with unit variance.
    for c in 0..2 {
        let mean = f.column(c).mean();
        f.column_mut(c).add_scalar_mut(-mean);
    }
    let scale = (n as f64).sqrt();
    let c0 = f.column(0).normalize();
    let c1 = f.column(1) - &c0 * c0.dot(&f.column(1));
    let c1 = c1.normalize();
    f.set_column(0, &(c0 * scale));
    f.set_column(1, &(c1 * scale));
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            FACTOR_GROUPS
                .iter()
                .map(|&g| FACTOR_LOADING * f[(i, g)] + FACTOR_NOISE * normal.sample(&mut rng))
                .collect()
        })
        .collect();
    DataMatrix::new(labels(7), &rows).unwrap()
}

/// Generator loadings on the correlation scale.
pub fn expected_two_factor_loadings() -> Vec<[f64; 2]> {
    let l = FACTOR_LOADING / (FACTOR_LOADING.powi(2) + FACTOR_NOISE.powi(2)).sqrt();
    FACTOR_GROUPS
        .iter()
        .map(|&g| if g == 0 { [l, 0.0] } else { [0.0, l] })
        .collect()
}

/// Largest loading error after matching factors by the better permutation,
/// with per-column sign freedom.
pub fn loading_error(actual: &[Vec<f64>], expected: &[[f64; 2]]) -> f64 {
    let err = |perm: [usize; 2]| {
        (0..2)
            .map(|f| {
                let col = |sign: f64| {
                    actual
                        .iter()
                        .zip(expected)
                        .map(|(a, e)| (sign * a[perm[f]] - e[f]).abs())
                        .fold(0.0, f64::max)
                };
                col(1.0).min(col(-1.0))
            })
            .fold(0.0, f64::max)
    };
    err([0, 1]).min(err([1, 0]))
}

/// Roots of the characteristic polynomial of a symmetric 3×3 matrix,
/// descending, by the trigonometric cubic formula.
pub fn char_poly_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let c2 = a[0][0] + a[1][1] + a[2][2];
    let c1 = a[0][0] * a[1][1] + a[0][0] * a[2][2] + a[1][1] * a[2][2]
        - a[0][1] * a[1][0]
        - a[0][2] * a[2][0]
        - a[1][2] * a[2][1];
    let c0 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    // λ³ - c2 λ² + c1 λ - c0 = 0; substitute λ = t + c2/3.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -2.0 * c2.powi(3) / 27.0 + c2 * c1 / 3.0 - c0;
    if p.abs() < 1e-300 {
        return [shift; 3];
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let mut roots = [0.0; 3];
    for (k, r) in roots.iter_mut().enumerate() {
        *r = shift + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
    }
    roots.sort_by(|x, y| y.total_cmp(x));
    roots
}
