//! Small dense helpers shared by the statistics, solver and ICA code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// `(a + aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    symmetrize_in_place(&mut out);
    out
}

pub fn symmetrize_in_place(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Adds `shift` to the diagonal.
pub fn shifted(a: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let mut out = a.clone();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] += shift;
    }
    out
}

/// Cholesky factor of the symmetrized matrix. `what` names the matrix in the error.
pub fn cholesky(a: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    let sym = symmetrize(a);
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(what));
    }
    let chol = Cholesky::new(sym).ok_or(Error::NotPositiveDefinite(what))?;
    if chol.l_dirty().diagonal().iter().any(|&d| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite(what));
    }
    Ok(chol)
}

/// `log det` from a Cholesky factor.
pub fn chol_logdet(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|&d| libm::log(d)).sum::<f64>()
}

/// `log det a` for a symmetric positive definite `a`.
pub fn logdet_spd(a: &DMatrix<f64>, what: &'static str) -> Result<f64> {
    Ok(chol_logdet(&cholesky(a, what)?))
}

/// Row means of a `rows × cols` matrix.
pub fn row_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.ncols() as f64;
    DVector::from_iterator(x.nrows(), x.row_iter().map(|r| r.sum() / n))
}

/// Subtracts the row mean from every row, i.e. right-multiplies by `I - 11ᵀ/N`
/// without forming the `N × N` centering matrix.
pub fn center_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    center_rows_in_place(&mut out);
    out
}

pub fn center_rows_in_place(x: &mut DMatrix<f64>) {
    let means = row_means(x);
    for mut col in x.column_iter_mut() {
        col -= &means;
    }
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

pub fn frobenius_sq(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Numerical rank from singular values, relative threshold `rel_tol`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

pub fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    for (j, col) in x.column_iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}
