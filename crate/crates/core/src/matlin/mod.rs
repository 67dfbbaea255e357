//! Dense real/complex matrix kernel.
//!
//! Everything above this module works with `nalgebra` dynamic matrices via the
//! [`Mat`] and [`CMat`] aliases. Symmetric outputs are symmetrised explicitly
//! so that drift cannot accumulate through long recurrences.

mod eig;
mod expm;
mod herm;
mod lyapunov;

pub use eig::{eig_general, is_hurwitz, spectral_abscissa, sym_eig_extremes};
pub use expm::expm;
pub use herm::{herm_function, herm_trace_function, psd_sqrt_factor, HermitianMatrix};
pub use lyapunov::{solve_lyapunov, Lyapunov};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Frobenius inner product `⟨X, Y⟩_F = Tr(XᵀY)`.
pub fn inner(x: &Mat, y: &Mat) -> f64 {
    x.dot(y)
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// `‖M - Mᵀ‖_F / max(1e-300, ‖M‖_F)`.
pub fn asymmetry(m: &Mat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

pub(crate) fn require_square(context: &'static str, m: &Mat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.nrows())
}

pub(crate) fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Spectral (operator 2-) norm of a real matrix.
pub fn op_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Largest singular value of a complex matrix.
pub fn op_norm_complex(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Numerical rank with singular values below `rel_tol * σ_max` discarded.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Solve `M X = R` for symmetric positive definite `M` by Cholesky.
pub(crate) fn spd_solve(context: &'static str, m: &Mat, rhs: &Mat) -> Result<Mat> {
    let chol = nalgebra::Cholesky::new(symmetrize(m)).ok_or(Error::NotPsd {
        context,
        eigenvalue: sym_eig_extremes(m).0,
    })?;
    Ok(chol.solve(rhs))
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}
