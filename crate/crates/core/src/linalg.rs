//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub const SYMMETRY_TOL: f64 = 1e-9;
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row},{col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("Jacobi iteration did not converge in {0} sweeps")]
    NotConverged(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: DVector<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

pub fn eigen_sym(m: &DMatrix<f64>) -> Result<SymmetricEigen, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = m[(i, j)].abs().max(m[(j, i)].abs()).max(1.0);
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(LinalgError::NotSymmetric { row: i, col: j });
            }
        }
    }

    let mut a = m.clone();
    // Symmetrize within tolerance so rotations act on an exactly symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut sweeps = 0;
    // Rounding leaves off-diagonal residue proportional to the matrix norm.
    let threshold = OFF_DIAGONAL_TOL * a.norm().max(1.0);
    while off_diagonal_norm(&a) >= threshold {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NotConverged(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &v.column(i));
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

// Applies the rotation Jᵀ A J in the (p, q) plane and accumulates V J.
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruction_error(m: &DMatrix<f64>, e: &SymmetricEigen) -> f64 {
        let lambda = DMatrix::from_diagonal(&e.values);
        (m - &e.vectors * lambda * e.vectors.transpose()).norm()
    }

    #[test]
    fn identity() {
        let m = DMatrix::<f64>::identity(7, 7);
        let e = eigen_sym(&m).unwrap();
        assert!(e.values.iter().all(|&x| x == 1.0));
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn diagonal_is_sorted() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let e = eigen_sym(&m).unwrap();
        assert_eq!(e.values.as_slice(), &[3.0, 2.0, 1.0]);
        assert_eq!(e.vectors.column(0).abs().as_slice(), &[0.0, 1.0, 0.0]);
        for k in 0..3 {
            assert!((e.vectors.column(k).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dense_reconstruction() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[4.0, 1.0, -2.0, 2.0, 1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 3.0, -2.0, 2.0, 1.0, -2.0, -1.0],
        );
        let e = eigen_sym(&m).unwrap();
        assert!(reconstruction_error(&m, &e) < 1e-8);
        let vtv = e.vectors.transpose() * &e.vectors;
        assert!((vtv - DMatrix::<f64>::identity(4, 4)).norm() < 1e-12);
        assert!((e.values.sum() - m.trace()).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        assert_eq!(eigen_sym(&m), Err(LinalgError::NotSymmetric { row: 0, col: 1 }));
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(eigen_sym(&m), Err(LinalgError::NotSquare { .. })));
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert_eq!(eigen_sym(&m), Err(LinalgError::NonFinite));
    }
}
