//! Dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Iterate / vector type used throughout the crate.
pub type Point = DVector<f64>;

/// Maximum absolute row sum.
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖A − Aᵀ‖_∞ / ‖A‖_∞`, zero for the zero matrix.
pub fn symmetry_defect(a: &DMatrix<f64>) -> f64 {
    let scale = inf_norm(a);
    if scale == 0.0 {
        return 0.0;
    }
    inf_norm(&(a - a.transpose())) / scale
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn lambda_min(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm_sym(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().amax()
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solves `(A + ρI) d = rhs`.
///
/// Cholesky is tried first; an LU factorization with partial pivoting covers
/// the indefinite case. The result is accepted only when the relative residual
/// `‖(A + ρI)d − rhs‖ ≤ 1e-10 ‖rhs‖`, after at most one refinement sweep.
pub fn solve_shifted(a: &DMatrix<f64>, rho: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] += rho;
    }
    let rhs_norm = rhs.norm();
    let tol = 1e-10 * rhs_norm;

    let solve = |b: &DVector<f64>| -> Option<DVector<f64>> {
        if let Some(chol) = m.clone().cholesky() {
            return Some(chol.solve(b));
        }
        m.clone().lu().solve(b)
    };

    let mut d = solve(rhs).ok_or(Error::SingularSystem { residual: f64::INFINITY })?;
    if !all_finite(&d) {
        return Err(Error::SingularSystem { residual: f64::INFINITY });
    }
    let mut residual = &m * &d - rhs;
    if residual.norm() > tol {
        if let Some(correction) = solve(&residual) {
            d -= correction;
            residual = &m * &d - rhs;
        }
    }
    let res = residual.norm();
    if !(res <= tol) {
        let rel = if rhs_norm > 0.0 { res / rhs_norm } else { res };
        return Err(Error::SingularSystem { residual: rel });
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_defect_of_symmetric_matrix_is_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 3.0]);
        assert_eq!(symmetry_defect(&a), 0.0);
        let b = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 1.0, 3.0]);
        assert!(symmetry_defect(&b) > 0.1);
    }

    #[test]
    fn eigen_helpers() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        assert!((lambda_min(&a) + 3.0).abs() < 1e-14);
        assert!((spectral_norm_sym(&a) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_system_falls_back_to_lu() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let rhs = DVector::from_vec(vec![1.0, 1.0]);
        let d = solve_shifted(&a, 0.0, &rhs).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15 && (d[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_system_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let rhs = DVector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(solve_shifted(&a, 0.0, &rhs), Err(Error::SingularSystem { .. })));
    }
}
