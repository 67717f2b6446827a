//! Periodic continuation across the bridge between the right and left braces.
//!
//! The two brace blocks sit on a circle of circumference
//! `2d + c_fc + 2z + e` sample spacings:
//!
//! ```text
//!   | right block (d) | bridge (c_fc) | left block (d) | free padding (2z + e) |
//! ```
//!
//! Each block is interpolated (degree `d - 1` Lagrange through its samples)
//! onto an abscissa grid `n_over` times finer than the sample spacing. A
//! trigonometric polynomial of `2d` terms is fitted to both oversampled blocks
//! in the least-squares sense with a truncated-SVD pseudo-inverse, and its
//! values at the `c_fc` bridge positions are the continuation.
//!
//! The whole map from the `2d` block samples to the bridge is linear, so it is
//! assembled once as a `c_fc x 2d` matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::FcParams;
use crate::error::{BfcrError, Result};

/// Singular values below this fraction of the largest are discarded.
pub const SVD_RELATIVE_CUTOFF: f64 = 1e-10;

/// Linear map `[right block; left block] -> bridge values`.
#[derive(Debug, Clone)]
pub struct ContinuationOperator {
    d: usize,
    c_fc: usize,
    matrix: DMatrix<f64>,
}

impl ContinuationOperator {
    pub fn new(params: &FcParams) -> Result<Self> {
        params.validate()?;
        let d = params.d;
        let c_fc = params.c_fc;
        let period = (2 * d + c_fc + 2 * params.z + params.e) as f64;
        let n_terms = 2 * d;

        let interp = oversampling_matrix(d, params.n_over);
        let m = interp.nrows();
        let left_offset = (d + c_fc) as f64;

        let mut design = DMatrix::<f64>::zeros(2 * m, n_terms);
        for k in 0..m {
            let t = k as f64 / params.n_over as f64;
            fill_basis_row(&mut design, k, t, period);
            fill_basis_row(&mut design, m + k, t + left_offset, period);
        }

        let mut block_map = DMatrix::<f64>::zeros(2 * m, 2 * d);
        block_map.view_mut((0, 0), (m, d)).copy_from(&interp);
        block_map.view_mut((m, d), (m, d)).copy_from(&interp);

        let mut eval = DMatrix::<f64>::zeros(c_fc, n_terms);
        for j in 0..c_fc {
            fill_basis_row(&mut eval, j, (d + j) as f64, period);
        }

        let pinv = truncated_pseudo_inverse(design)?;
        let matrix = eval * pinv * block_map;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(BfcrError::NumericalFailure(
                "continuation operator has non-finite entries".into(),
            ));
        }
        Ok(Self { d, c_fc, matrix })
    }

    /// Bridge values for the given right-brace and left-brace blocks.
    pub fn apply(&self, right: &[f64], left: &[f64]) -> Result<Vec<f64>> {
        for block in [right, left] {
            if block.len() != self.d {
                return Err(BfcrError::ShapeError {
                    expected: self.d,
                    got: block.len(),
                });
            }
        }
        let input: Vec<f64> = right.iter().chain(left).copied().collect();
        // rows carry large entries that cancel, so accumulate in doubled precision
        Ok((0..self.c_fc)
            .map(|j| compensated_dot(self.matrix.row(j).iter().copied(), &input))
            .collect())
    }
}

/// Dot product with error-free transforms: as accurate as if computed in
/// twice the working precision, then rounded.
fn compensated_dot(a: impl Iterator<Item = f64>, b: &[f64]) -> f64 {
    let (mut sum, mut err) = (0.0_f64, 0.0_f64);
    for (x, &y) in a.zip(b) {
        let p = x * y;
        let p_err = x.mul_add(y, -p);
        let t = sum + p;
        let z = t - sum;
        err += (sum - (t - z)) + (p - z) + p_err;
        sum = t;
    }
    sum + err
}

/// Continuation response of the bridge to one pair of brace blocks.
pub fn continuation_response(params: &FcParams, right: &[f64], left: &[f64]) -> Result<Vec<f64>> {
    ContinuationOperator::new(params)?.apply(right, left)
}

// Columns: 1, cos(wt), sin(wt), cos(2wt), sin(2wt), ...
fn fill_basis_row(matrix: &mut DMatrix<f64>, row: usize, t: f64, period: f64) {
    let n_terms = matrix.ncols();
    matrix[(row, 0)] = 1.0;
    let mut col = 1;
    let mut harmonic = 1;
    while col < n_terms {
        let phase = 2.0 * PI * harmonic as f64 * t / period;
        matrix[(row, col)] = phase.cos();
        col += 1;
        if col < n_terms {
            matrix[(row, col)] = phase.sin();
            col += 1;
        }
        harmonic += 1;
    }
}

/// Barycentric Lagrange interpolation from nodes `0..d` onto `k / n_over`,
/// `k = 0..=(d-1) n_over`.
fn oversampling_matrix(d: usize, n_over: usize) -> DMatrix<f64> {
    let m = (d - 1) * n_over + 1;
    // Equispaced barycentric weights (-1)^i C(d-1, i).
    let mut weights = vec![1.0f64; d];
    for i in 1..d {
        weights[i] = -weights[i - 1] * (d - i) as f64 / i as f64;
    }

    let mut out = DMatrix::<f64>::zeros(m, d);
    for k in 0..m {
        if k % n_over == 0 {
            out[(k, k / n_over)] = 1.0;
            continue;
        }
        let t = k as f64 / n_over as f64;
        let terms: Vec<f64> = (0..d).map(|i| weights[i] / (t - i as f64)).collect();
        let denom: f64 = terms.iter().sum();
        for (i, term) in terms.iter().enumerate() {
            out[(k, i)] = term / denom;
        }
    }
    out
}

fn truncated_pseudo_inverse(matrix: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = matrix.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(BfcrError::NumericalFailure(
                "singular value decomposition did not produce factors".into(),
            ))
        }
    };
    let sigma = svd.singular_values;
    let largest = sigma.iter().cloned().fold(0.0, f64::max);
    if largest.is_nan() || largest <= 0.0 {
        return Err(BfcrError::NumericalFailure("design matrix is zero".into()));
    }

    let cutoff = largest * SVD_RELATIVE_CUTOFF;
    let mut pinv = DMatrix::<f64>::zeros(v_t.ncols(), u.nrows());
    for (i, &s) in sigma.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        pinv += (v_t.row(i).transpose() / s) * u.column(i).transpose();
    }
    Ok(pinv)
}
