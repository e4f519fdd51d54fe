mod common;

use ale_core::ahp::{self, PairwiseMatrix};
use common::*;
use proptest::prelude::*;

fn generator_strategy() -> impl Strategy<Value = Vec<f64>> {
    (3usize..=9).prop_flat_map(|n| prop::collection::vec(GENERATOR_RANGE, n))
}

fn saaty_matrix_strategy() -> impl Strategy<Value = PairwiseMatrix> {
    (2usize..=9).prop_flat_map(|n| {
        prop::collection::vec(prop::sample::select(SAATY.to_vec()), n * (n - 1) / 2)
            .prop_map(move |upper| PairwiseMatrix::from_upper(labels(n), &upper).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn consistent_matrices_recover_their_generator(v in generator_strategy()) {
        let m = PairwiseMatrix::consistent_from(labels(v.len()), &v).unwrap();
        let (w, report) = ahp::evaluate(&m).unwrap();
        let s: f64 = v.iter().sum();
        for (a, b) in w.values().iter().zip(&v) {
            prop_assert!((a - b / s).abs() < 1e-9);
        }
        prop_assert!(report.cr.abs() < 1e-9);
    }

    #[test]
    fn generator_scale_does_not_matter(v in generator_strategy(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        let a = ahp::principal_weights(&PairwiseMatrix::consistent_from(labels(v.len()), &v).unwrap()).unwrap();
        let b = ahp::principal_weights(&PairwiseMatrix::consistent_from(labels(v.len()), &scaled).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_are_positive_and_sum_to_one(m in saaty_matrix_strategy()) {
        let w = ahp::principal_weights(&m).unwrap();
        prop_assert!(w.values().iter().all(|&x| x > 0.0));
        prop_assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_max_at_least_n(m in saaty_matrix_strategy()) {
        let (_, report) = ahp::evaluate(&m).unwrap();
        prop_assert!(report.lambda_max >= m.n() as f64 - 1e-9);
    }

    #[test]
    fn permuting_criteria_permutes_weights(m in saaty_matrix_strategy(), seed in any::<u64>()) {
        let n = m.n();
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng(seed));
        let w = ahp::principal_weights(&m).unwrap();
        let wp = ahp::principal_weights(&m.permuted(&perm)).unwrap();
        for (new_i, &old_i) in perm.iter().enumerate() {
            prop_assert!((wp.values()[new_i] - w.values()[old_i]).abs() < 1e-9);
            prop_assert_eq!(&wp.labels()[new_i], &w.labels()[old_i]);
        }
    }

    #[test]
    fn matches_dense_eigensolver(m in saaty_matrix_strategy()) {
        let w = ahp::principal_weights(&m).unwrap();
        let (lambda, oracle) = dense_perron(&m);
        for (a, b) in w.values().iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let (_, report) = ahp::evaluate(&m).unwrap();
        prop_assert!((report.lambda_max - lambda).abs() < 1e-8);
    }
}

#[test]
fn lambda_equals_n_only_when_consistent() {
    let mut r = rng(7);
    for _ in 0..200 {
        let m = random_saaty_matrix(&mut r, 4);
        let (_, report) = ahp::evaluate(&m).unwrap();
        let rows = m.rows();
        let consistent = (0..4).all(|i| (0..4).all(|j| (0..4).all(|k| (rows[i][j] * rows[j][k] - rows[i][k]).abs() < 1e-9)));
        assert_eq!(consistent, (report.lambda_max - 4.0).abs() < 1e-9, "{rows:?}");
    }
}

#[test]
fn published_matrices_reproduce_their_weight_rows() {
    for phase in [1, 4] {
        let m = ahp::preset_matrix(phase).unwrap().unwrap();
        let w = ahp::principal_weights(&m).unwrap();
        let row = ahp::published_weights(phase).unwrap();
        for (a, b) in w.values().iter().zip(row) {
            assert!((a - b).abs() <= 0.005, "phase {phase}: {a} vs {b}");
        }
    }
}

#[test]
fn consistency_baselines_hold() {
    // Frozen from an independent dense eigendecomposition.
    let cases = [(1, 7.580539379269874, 0.07330042667548915), (4, 7.518575977793786, 0.06547676487295273)];
    for (phase, lambda, cr) in cases {
        let m = ahp::preset_matrix(phase).unwrap().unwrap();
        let (_, report) = ahp::evaluate(&m).unwrap();
        assert!((report.lambda_max - lambda).abs() < 1e-9, "{}", report.lambda_max);
        assert!((report.cr - cr).abs() < 1e-9, "{}", report.cr);
        assert!(report.is_acceptable());
        let (dense_lambda, _) = dense_perron(&m);
        assert!((dense_lambda - lambda).abs() < 1e-9);
    }
}

#[test]
fn matrix_files_match_the_builtin_presets() {
    for phase in [1, 4] {
        let text = std::fs::read_to_string(fixture(&format!("phase{phase}.matrix"))).unwrap();
        let m: PairwiseMatrix = text.parse().unwrap();
        assert_eq!(m, ahp::preset_matrix(phase).unwrap().unwrap());
    }
}

#[test]
fn inconsistent_judgments_warn_but_still_produce_weights() {
    // Every Saaty-scale 3-cycle of 9s is badly intransitive.
    let m = PairwiseMatrix::from_upper(labels(3), &[9.0, 1.0 / 9.0, 9.0]).unwrap();
    let (w, report) = ahp::evaluate(&m).unwrap();
    assert!(report.cr > 0.1);
    assert!(report.warning.as_deref().unwrap().contains("0.1"));
    assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
