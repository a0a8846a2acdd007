use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest condition number accepted for an unregularized system.
pub const MAX_CONDITION: f64 = 1e12;

/// Solves `(V + λI) θ = h` for symmetric positive semidefinite `V`.
pub(crate) fn solve_regularized(v: &DMatrix<f64>, lambda: f64, h: &DVector<f64>) -> Result<DVector<f64>> {
    let b = v.nrows();
    let mut a = v.clone();
    for i in 0..b {
        a[(i, i)] += lambda;
    }
    if lambda == 0.0 {
        let eig = SymmetricEigen::new(a.clone());
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::SingularSystem { condition });
        }
    }
    let chol = a.clone().cholesky().ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    let mut theta = chol.solve(h);
    // one step of iterative refinement
    let r = h - &a * &theta;
    theta += chol.solve(&r);
    Ok(theta)
}

/// Solves `A Θ Bᵀ + λ Θ = H` for symmetric `A`, `B` through their
/// eigendecompositions, never forming `B ⊗ A`.
pub(crate) fn solve_sylvester(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: f64,
    h: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let ea = SymmetricEigen::new(a.clone());
    let eb = SymmetricEigen::new(b.clone());
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for &da in ea.eigenvalues.iter() {
        for &db in eb.eigenvalues.iter() {
            let d = da * db + lambda;
            lo = lo.min(d);
            hi = hi.max(d.abs());
        }
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if lo <= 0.0 || (lambda == 0.0 && condition > MAX_CONDITION) {
        return Err(Error::SingularSystem { condition });
    }
    let ua = &ea.eigenvectors;
    let ub = &eb.eigenvectors;
    let mut t = ua.transpose() * h * ub;
    for j in 0..t.ncols() {
        for i in 0..t.nrows() {
            t[(i, j)] /= ea.eigenvalues[i] * eb.eigenvalues[j] + lambda;
        }
    }
    Ok(ua * t * ub.transpose())
}

/// Column-major vectorization.
pub fn vec_col_major(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}
