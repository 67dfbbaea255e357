//! Continuous algebraic Lyapunov equation `A V + V Aᵀ + U = 0`.
//!
//! For Hurwitz `A` the solution is `𝓛_A(U) = ∫₀^∞ e^{tA} U e^{tAᵀ} dt`.
//! [`Lyapunov`] factors `A` once and then serves many right-hand sides,
//! which is how the cascade recurrences use it.

use nalgebra::LU;

use super::eig::{diagonal_blocks, schur_factor};
use super::{require_square, symmetrize, Mat};
use crate::error::{Error, Result};
use crate::settings::{LyapunovMethod, NumericSettings};

enum Factor {
    Kronecker(LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Schur { q: Mat, t: Mat, blocks: Vec<(usize, usize)> },
}

/// Prepared solver for a fixed Hurwitz matrix `A`.
pub struct Lyapunov {
    a: Mat,
    factor: Factor,
    residual_tol: f64,
    symmetry_tol: f64,
}

impl std::fmt::Debug for Lyapunov {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.factor {
            Factor::Kronecker(_) => "kronecker",
            Factor::Schur { .. } => "schur",
        };
        f.debug_struct("Lyapunov")
            .field("order", &self.a.nrows())
            .field("method", &kind)
            .finish()
    }
}

impl Lyapunov {
    pub fn new(a: &Mat, cfg: &NumericSettings) -> Result<Self> {
        let n = require_square("solve_lyapunov", a)?;
        let abscissa = super::spectral_abscissa(a)?;
        if n > 0 && abscissa >= 0.0 {
            return Err(Error::NotHurwitz {
                context: "solve_lyapunov",
                max_real: abscissa,
            });
        }
        let use_kron = match cfg.lyapunov_method {
            LyapunovMethod::Kronecker => true,
            LyapunovMethod::Schur => false,
            LyapunovMethod::Auto => n <= cfg.kronecker_max_order,
        };
        let factor = if use_kron {
            Factor::Kronecker(kronecker_operator(a).lu())
        } else {
            let (q, t) = schur_factor(a).ok_or(Error::Convergence {
                stage: "solve_lyapunov: real Schur of A",
            })?;
            let blocks = diagonal_blocks(&t);
            Factor::Schur { q, t, blocks }
        };
        Ok(Self {
            a: a.clone(),
            factor,
            residual_tol: cfg.lyapunov_residual_tol,
            symmetry_tol: cfg.symmetry_tol,
        })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.a
    }

    /// `‖A V + V Aᵀ + U‖_F`.
    pub fn residual(&self, v: &Mat, u: &Mat) -> f64 {
        (&self.a * v + v * self.a.transpose() + u).norm()
    }

    /// Solve for an arbitrary (not necessarily symmetric) right-hand side.
    pub fn solve_general(&self, u: &Mat) -> Result<Mat> {
        let n = self.order();
        if u.shape() != (n, n) {
            return Err(Error::dims(
                "solve_lyapunov: right-hand side",
                format!("{n}x{n}"),
                format!("{}x{}", u.nrows(), u.ncols()),
            ));
        }
        if n == 0 {
            return Ok(Mat::zeros(0, 0));
        }
        let v = match &self.factor {
            Factor::Kronecker(lu) => {
                let rhs = nalgebra::DVector::from_iterator(n * n, u.iter().map(|x| -x));
                let sol = lu.solve(&rhs).ok_or(Error::Convergence {
                    stage: "solve_lyapunov: singular Kronecker operator",
                })?;
                Mat::from_column_slice(n, n, sol.as_slice())
            }
            Factor::Schur { q, t, blocks } => {
                let c = -(q.transpose() * u * q);
                let y = quasi_triangular_solve(t, blocks, &c)?;
                q * y * q.transpose()
            }
        };
        // Normwise backward error: the residual is measured against the size
        // of the terms that produced it, so non-normal A is not penalized.
        let res = self.residual(&v, u);
        let scale = u.norm().max(2.0 * self.a.norm() * v.norm()).max(f64::MIN_POSITIVE);
        let tol = self.residual_tol * scale;
        if !res.is_finite() || res > tol {
            return Err(Error::Residual {
                what: "solve_lyapunov",
                residual: res,
                tolerance: tol,
            });
        }
        Ok(v)
    }

    /// Solve for symmetric `U`; the result is symmetrised.
    pub fn solve(&self, u: &Mat) -> Result<Mat> {
        let asym = super::asymmetry(u);
        if asym > self.symmetry_tol {
            return Err(Error::NotSymmetric {
                context: "solve_lyapunov: right-hand side",
                asymmetry: asym,
            });
        }
        Ok(symmetrize(&self.solve_general(&symmetrize(u))?))
    }
}

/// One-shot `𝓛_A(U)` for symmetric `U`.
pub fn solve_lyapunov(a: &Mat, u: &Mat, cfg: &NumericSettings) -> Result<Mat> {
    Lyapunov::new(a, cfg)?.solve(u)
}

/// `I ⊗ A + A ⊗ I` acting on column-major `vec V`.
fn kronecker_operator(a: &Mat) -> Mat {
    let n = a.nrows();
    let mut k = Mat::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            for l in 0..n {
                k[(row, l + n * j)] += a[(i, l)];
                k[(row, i + n * l)] += a[(j, l)];
            }
        }
    }
    k
}

/// Solve `T Y + Y Tᵀ = C` with `T` quasi-upper-triangular, sweeping the
/// block grid from the bottom-right corner.
fn quasi_triangular_solve(t: &Mat, blocks: &[(usize, usize)], c: &Mat) -> Result<Mat> {
    let n = t.nrows();
    let mut y = Mat::zeros(n, n);
    for &(j0, rj) in blocks.iter().rev() {
        let j1 = j0 + rj;
        for &(i0, ri) in blocks.iter().rev() {
            let i1 = i0 + ri;
            let mut rhs: Mat = c.view((i0, j0), (ri, rj)).into_owned();
            if i1 < n {
                rhs -= t.view((i0, i1), (ri, n - i1)) * y.view((i1, j0), (n - i1, rj));
            }
            if j1 < n {
                rhs -= y.view((i0, j1), (ri, n - j1)) * t.view((j0, j1), (rj, n - j1)).transpose();
            }
            let tii = t.view((i0, i0), (ri, ri));
            let tjj = t.view((j0, j0), (rj, rj));
            // vec(T_ii Y) = (I ⊗ T_ii) vec Y, vec(Y T_jjᵀ) = (T_jj ⊗ I) vec Y
            let m = ri * rj;
            let mut op = Mat::zeros(m, m);
            for b in 0..rj {
                for a in 0..ri {
                    let row = a + ri * b;
                    for k in 0..ri {
                        op[(row, k + ri * b)] += tii[(a, k)];
                    }
                    for l in 0..rj {
                        op[(row, a + ri * l)] += tjj[(b, l)];
                    }
                }
            }
            let rhs_vec = nalgebra::DVector::from_column_slice(rhs.as_slice());
            let sol = op.lu().solve(&rhs_vec).ok_or(Error::Convergence {
                stage: "solve_lyapunov: singular Schur block (λ_i + λ_j = 0)",
            })?;
            y.view_mut((i0, j0), (ri, rj))
                .copy_from(&Mat::from_column_slice(ri, rj, sol.as_slice()));
        }
    }
    Ok(y)
}
