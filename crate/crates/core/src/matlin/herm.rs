use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{require_square, symmetrize, CMat, Mat};
use crate::error::{Error, Result};
use crate::settings::NumericSettings;

const EIG_MAX_ITER: usize = 10_000;

/// Complex Hermitian matrix, e.g. a spectral density value `S(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Accepts `m` if `‖M - M*‖_F ≤ tol · ‖M‖_F`, then stores the Hermitian part.
    pub fn new(m: CMat, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dims(
                "HermitianMatrix",
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let norm = m.norm();
        let gap = (&m - m.adjoint()).norm();
        if gap > tol * norm {
            return Err(Error::NotSymmetric {
                context: "HermitianMatrix",
                asymmetry: if norm > 0.0 { gap / norm } else { gap },
            });
        }
        Ok(Self::hermitian_part(m))
    }

    /// `F F*`, Hermitian PSD by construction.
    pub fn gram(f: &CMat) -> Self {
        Self::hermitian_part(f * f.adjoint())
    }

    fn hermitian_part(m: CMat) -> Self {
        let adj = m.adjoint();
        Self((m + adj).map(|z| z * 0.5))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.0.is_empty() {
            return Ok(Vec::new());
        }
        let eig = SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(
            Error::Convergence {
                stage: "Hermitian eigendecomposition",
            },
        )?;
        let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    fn eigen(&self) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>> {
        SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(
            Error::Convergence {
                stage: "Hermitian eigendecomposition",
            },
        )
    }
}

fn clip_psd(lambda: f64, lambda_max: f64, tol: f64) -> Result<f64> {
    if lambda >= 0.0 {
        Ok(lambda)
    } else if lambda >= -tol * lambda_max.abs().max(f64::MIN_POSITIVE) {
        Ok(0.0)
    } else {
        Err(Error::NotPsd {
            context: "herm_function",
            eigenvalue: lambda,
        })
    }
}

fn apply(f: &dyn Fn(f64) -> f64, lambda: f64) -> Result<f64> {
    let v = f(lambda);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain {
            what: "herm_function: scalar function at eigenvalue",
            value: lambda,
            domain: "points where the function is finite".into(),
        })
    }
}

/// `f(H) = U f(Λ) U*` for a Hermitian PSD matrix.
pub fn herm_function(
    h: &HermitianMatrix,
    f: impl Fn(f64) -> f64,
    cfg: &NumericSettings,
) -> Result<HermitianMatrix> {
    if h.order() == 0 {
        return Ok(h.clone());
    }
    let eig = h.eigen()?;
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut mapped = Vec::with_capacity(h.order());
    for &l in eig.eigenvalues.iter() {
        mapped.push(apply(&f, clip_psd(l, lmax, cfg.psd_negative_tol)?)?);
    }
    let u = &eig.eigenvectors;
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        mapped.len(),
        mapped.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    Ok(HermitianMatrix::hermitian_part(u * d * u.adjoint()))
}

/// `Tr f(H)` without forming the matrix function.
pub fn herm_trace_function(
    h: &HermitianMatrix,
    f: impl Fn(f64) -> f64,
    cfg: &NumericSettings,
) -> Result<f64> {
    let ev = h.eigenvalues()?;
    let lmax = ev.last().cloned().unwrap_or(0.0).max(0.0);
    let mut acc = 0.0;
    for l in ev {
        acc += apply(&f, clip_psd(l, lmax, cfg.psd_negative_tol)?)?;
    }
    Ok(acc)
}

/// Factor `ρ` (n×r) with `ρρᵀ = M` for symmetric PSD `M`, `r` the numerical rank.
pub fn psd_sqrt_factor(m: &Mat, cfg: &NumericSettings) -> Result<Mat> {
    let n = require_square("psd_sqrt_factor", m)?;
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let norm = m.norm();
    if super::asymmetry(m) > cfg.symmetry_tol {
        return Err(Error::NotSymmetric {
            context: "psd_sqrt_factor",
            asymmetry: super::asymmetry(m),
        });
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin < -cfg.psd_negative_tol * norm {
        return Err(Error::NotPsd {
            context: "psd_sqrt_factor",
            eigenvalue: lmin,
        });
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| lmax > 0.0 && eig.eigenvalues[i] > cfg.psd_rank_tol * lmax)
        .collect();
    let mut rho = Mat::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        rho.set_column(c, &(eig.eigenvectors.column(i) * s));
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn real_herm(m: Mat) -> HermitianMatrix {
        HermitianMatrix::new(super::super::to_complex(&m), 1e-12).unwrap()
    }

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn identity_function_roundtrip() {
        let h = HermitianMatrix::new(
            nalgebra::dmatrix![
                Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.3);
                Complex64::new(0.5, -0.3), Complex64::new(1.0, 0.0)
            ],
            1e-12,
        )
        .unwrap();
        let out = herm_function(&h, |x| x, &cfg()).unwrap();
        assert!((out.as_matrix() - h.as_matrix()).norm() < 1e-14);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let out = herm_function(&real_herm(Mat::from_diagonal(&dvector![1.0, 4.0])), f64::sqrt, &cfg()).unwrap();
        let expected = super::super::to_complex(&Mat::from_diagonal(&dvector![1.0, 2.0]));
        assert!((out.as_matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn log_shape_in_eigenbasis() {
        // [[2,1],[1,2]] has eigenpairs 1 ↦ (1,-1)/√2 and 3 ↦ (1,1)/√2.
        let f = |z: f64| -0.5 * (1.0 - z / 4.0).ln();
        let out = herm_function(&real_herm(dmatrix![2.0, 1.0; 1.0, 2.0]), f, &cfg()).unwrap();
        let (f1, f3) = (f(1.0), f(3.0));
        let expected = dmatrix![(f1 + f3) / 2.0, (f3 - f1) / 2.0; (f3 - f1) / 2.0, (f1 + f3) / 2.0];
        assert!((out.as_matrix() - super::super::to_complex(&expected)).norm() < 1e-14);
    }

    #[test]
    fn domain_error_names_eigenvalue() {
        let err = herm_function(&real_herm(Mat::from_diagonal(&dvector![1.0, 5.0])), |z| -(1.0 - z / 4.0).ln(), &cfg())
            .unwrap_err();
        match err {
            Error::Domain { value, .. } => assert!((value - 5.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = nalgebra::dmatrix![
            Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0);
            Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)
        ];
        assert!(HermitianMatrix::new(m, 1e-12).is_err());
    }

    #[test]
    fn sqrt_factors() {
        let rho = psd_sqrt_factor(&Mat::identity(3, 3), &cfg()).unwrap();
        assert!((&rho * rho.transpose() - Mat::identity(3, 3)).norm() < 1e-14);

        let rho = psd_sqrt_factor(&Mat::zeros(3, 3), &cfg()).unwrap();
        assert_eq!(rho.ncols(), 0);

        let m = Mat::from_diagonal(&dvector![4.0, 1.0, 0.0]);
        let rho = psd_sqrt_factor(&m, &cfg()).unwrap();
        assert_eq!(rho.shape(), (3, 2));
        assert!((&rho * rho.transpose() - m).norm() < 1e-14);
    }

    #[test]
    fn sqrt_factor_rejects_indefinite() {
        let m = Mat::from_diagonal(&dvector![1.0, -0.5]);
        assert!(matches!(psd_sqrt_factor(&m, &cfg()), Err(Error::NotPsd { .. })));
    }
}
