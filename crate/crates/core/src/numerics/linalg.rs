use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::NumericsError;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    a.clone().svd(false, false).singular_values
}

fn rank_from_singular_values(sv: &DVector<f64>) -> usize {
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * largest).count()
}

pub fn numeric_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    rank_from_singular_values(&singular_values(a))
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn column_space_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let rank = rank_from_singular_values(&svd.singular_values);
    let u = svd.u.expect("left singular vectors requested");
    // nalgebra does not sort singular values
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let cols: Vec<_> = order[..rank].iter().map(|&i| u.column(i).into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Solve `a x = b` for square `a`.
pub fn solve_linear(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    if b.len() != a.nrows() {
        return Err(NumericsError::DimensionMismatch { expected: a.nrows(), found: b.len() });
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if numeric_rank(a) < a.nrows() {
        return Err(NumericsError::SingularMatrix);
    }
    let rhs = DVector::from_column_slice(b);
    let x = a.clone().lu().solve(&rhs).ok_or(NumericsError::SingularMatrix)?;
    Ok(x.iter().copied().collect())
}

/// `[I - Cᵀ(CCᵀ)⁻¹C] beta`: projection of `beta` onto the null space of `c`.
pub fn project_constrained(beta: &[f64], c: &DMatrix<f64>) -> Result<Vec<f64>, NumericsError> {
    if c.nrows() == 0 {
        return Ok(beta.to_vec());
    }
    if c.ncols() != beta.len() {
        return Err(NumericsError::DimensionMismatch { expected: c.ncols(), found: beta.len() });
    }
    if numeric_rank(c) < c.nrows() {
        return Err(NumericsError::RankDeficientConstraints);
    }
    let b = DVector::from_column_slice(beta);
    let cct = c * c.transpose();
    let cb = c * &b;
    let w = cct
        .cholesky()
        .ok_or(NumericsError::RankDeficientConstraints)?
        .solve(&cb);
    let out = b - c.transpose() * w;
    Ok(out.iter().copied().collect())
}
