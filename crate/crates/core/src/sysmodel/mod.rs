//! State-space systems `dX = AX dt + B dW, Z = CX` and their frequency and
//! time-domain artifacts.

mod freq;
mod hinf;
mod io;
mod report;

pub use freq::{
    conjugate_realization, covariance_kernel, spectral_density, spectral_density_realization,
    transfer, CovarianceKernel,
};
pub use hinf::{hinf_grid_max, hinf_norm, HinfBracket};
pub use io::{load_system, parse_system, save_system, system_to_json, SystemFile};
pub use report::{NormMethod, NormReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matlin::{self, inner, numerical_rank, Lyapunov, Mat};
use crate::settings::NumericSettings;

/// Strictly proper LTI system `(A, B, C)` with `n` states, `m` inputs and `p` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    a: Mat,
    b: Mat,
    c: Mat,
}

impl StateSpaceSystem {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims("StateSpaceSystem: A", "square", format!("{}x{}", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::dims("StateSpaceSystem: B rows", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(Error::dims("StateSpaceSystem: C columns", n, c.ncols()));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Input("StateSpaceSystem: non-finite entry".into()));
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// `BBᵀ`, the state noise intensity.
    pub fn bbt(&self) -> Mat {
        &self.b * self.b.transpose()
    }

    /// `CᵀC`, the output energy weight.
    pub fn ctc(&self) -> Mat {
        self.c.transpose() * &self.c
    }

    /// True when the transfer function vanishes identically because `B` or `C` is zero.
    pub fn is_trivially_zero(&self) -> bool {
        self.b.iter().all(|&x| x == 0.0) || self.c.iter().all(|&x| x == 0.0)
    }

    /// Series connection `F Γ` with an input filter `Γ` (m inputs to m outputs).
    pub fn series(&self, filter: &StateSpaceSystem) -> Result<StateSpaceSystem> {
        if filter.p() != self.m() {
            return Err(Error::dims("series: filter outputs", self.m(), filter.p()));
        }
        let (n, nf) = (self.n(), filter.n());
        let mut a = Mat::zeros(n + nf, n + nf);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a.view_mut((0, n), (n, nf)).copy_from(&(&self.b * filter.c()));
        a.view_mut((n, n), (nf, nf)).copy_from(filter.a());
        let mut b = Mat::zeros(n + nf, filter.m());
        b.view_mut((n, 0), (nf, filter.m())).copy_from(filter.b());
        let mut c = Mat::zeros(self.p(), n + nf);
        c.view_mut((0, 0), (self.p(), n)).copy_from(&self.c);
        StateSpaceSystem::new(a, b, c)
    }
}

/// Structural properties that gate the cascade construction.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
    pub controllable: bool,
    /// Controllability of `(A, PCᵀ)`; `None` when `A` is not Hurwitz.
    pub controllable_pct: Option<bool>,
    pub observable: bool,
}

impl ValidationReport {
    /// All assumptions of the Wick cascade at its first two levels.
    pub fn cascade_ready(&self) -> bool {
        self.hurwitz && self.controllable && self.controllable_pct == Some(true)
    }
}

/// Rank test on `[B, AB, …, A^{n-1}B]`.
pub fn is_controllable(a: &Mat, b: &Mat, cfg: &NumericSettings) -> bool {
    let n = a.nrows();
    if n == 0 {
        return true;
    }
    let k = b.ncols();
    let mut ctrb = Mat::zeros(n, n * k);
    let mut block = b.clone();
    for i in 0..n {
        ctrb.view_mut((0, i * k), (n, k)).copy_from(&block);
        block = a * block;
    }
    numerical_rank(&ctrb, cfg.controllability_tol) == n
}

pub fn validate(sys: &StateSpaceSystem, cfg: &NumericSettings) -> ValidationReport {
    let abscissa = matlin::spectral_abscissa(sys.a()).unwrap_or(f64::NAN);
    let hurwitz = abscissa < 0.0 || sys.n() == 0;
    let controllable = is_controllable(sys.a(), sys.b(), cfg);
    let observable = is_controllable(&sys.a().transpose(), &sys.c().transpose(), cfg);
    let controllable_pct = if hurwitz {
        controllability_gramian(sys, cfg)
            .ok()
            .map(|p| is_controllable(sys.a(), &(p * sys.c().transpose()), cfg))
    } else {
        None
    };
    ValidationReport {
        hurwitz,
        spectral_abscissa: abscissa,
        controllable,
        controllable_pct,
        observable,
    }
}

/// Radix-2 diagonal balancing `Ã = D⁻¹AD`. The scaling is exact in floating
/// point and trivial (`D = I`) for well-scaled matrices, but it restores the
/// accuracy of Lyapunov solves on graded realizations such as long cascades.
fn balanced(a: &Mat) -> (Mat, Vec<f64>) {
    let mut ab = a.clone();
    let d = nalgebra::linalg::balancing::balance_parlett_reinsch(&mut ab);
    (ab, d.iter().copied().collect())
}

/// `D M D` for diagonal `D = diag(d)`.
fn congruence(m: &Mat, d: &[f64]) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] * d[j])
}

/// `P = 𝓛_A(BBᵀ)`.
pub fn controllability_gramian(sys: &StateSpaceSystem, cfg: &NumericSettings) -> Result<Mat> {
    let (ab, d) = balanced(sys.a());
    let inv: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
    let p = Lyapunov::new(&ab, cfg)?.solve(&congruence(&sys.bbt(), &inv))?;
    Ok(congruence(&p, &d))
}

/// `Q = 𝓛_{Aᵀ}(CᵀC)`.
pub fn observability_gramian(sys: &StateSpaceSystem, cfg: &NumericSettings) -> Result<Mat> {
    let (ab, d) = balanced(sys.a());
    let inv: Vec<f64> = d.iter().map(|x| 1.0 / x).collect();
    let q = Lyapunov::new(&ab.transpose(), cfg)?.solve(&congruence(&sys.ctc(), &d))?;
    Ok(congruence(&q, &inv))
}

/// `‖F‖₂ = √⟨CᵀC, P⟩_F`.
pub fn h2_norm(sys: &StateSpaceSystem, cfg: &NumericSettings) -> Result<f64> {
    let p = controllability_gramian(sys, cfg)?;
    Ok(inner(&sys.ctc(), &p).max(0.0).sqrt())
}

/// Output scaling `C ← factor · C`, so that `F ↦ factor · F` while `BBᵀ` and `P` are unchanged.
pub fn scale_output(sys: &StateSpaceSystem, factor: f64) -> Result<StateSpaceSystem> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Domain {
            what: "scale_output: factor",
            value: factor,
            domain: "(0, ∞)".into(),
        });
    }
    StateSpaceSystem::new(sys.a.clone(), sys.b.clone(), &sys.c * factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use nalgebra::{dmatrix, dvector};

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn validate_mimo4_is_hurwitz() {
        let r = validate(&fixtures::mimo4(), &cfg());
        assert!(r.hurwitz);
        assert!(r.cascade_ready());
    }

    #[test]
    fn validate_zero_input() {
        let sys = StateSpaceSystem::new(
            Mat::from_diagonal(&dvector![-1.0, -2.0]),
            Mat::zeros(2, 1),
            dmatrix![1.0, 1.0],
        )
        .unwrap();
        let r = validate(&sys, &cfg());
        assert!(r.hurwitz);
        assert!(!r.controllable);
        assert_eq!(r.controllable_pct, Some(false));
    }

    #[test]
    fn validate_scalar_all_true() {
        let r = validate(&fixtures::scalar(), &cfg());
        assert!(r.hurwitz && r.controllable && r.observable);
        assert_eq!(r.controllable_pct, Some(true));
    }

    #[test]
    fn gramians_scalar_and_zero_input() {
        let sys = fixtures::scalar();
        assert!((controllability_gramian(&sys, &cfg()).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((observability_gramian(&sys, &cfg()).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((h2_norm(&sys, &cfg()).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);

        let zero = fixtures::zero_input();
        assert_eq!(controllability_gramian(&zero, &cfg()).unwrap().norm(), 0.0);
        assert_eq!(h2_norm(&zero, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn gramian_duality_on_mimo4() {
        let sys = fixtures::mimo4();
        let p = controllability_gramian(&sys, &cfg()).unwrap();
        let q = observability_gramian(&sys, &cfg()).unwrap();
        let lhs = inner(&sys.ctc(), &p);
        let rhs = inner(&sys.bbt(), &q);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs());
    }

    #[test]
    fn dimension_errors() {
        assert!(StateSpaceSystem::new(Mat::zeros(2, 3), Mat::zeros(2, 1), Mat::zeros(1, 2)).is_err());
        assert!(StateSpaceSystem::new(Mat::zeros(2, 2), Mat::zeros(3, 1), Mat::zeros(1, 2)).is_err());
        assert!(StateSpaceSystem::new(Mat::zeros(2, 2), Mat::zeros(2, 1), Mat::zeros(1, 3)).is_err());
    }

    #[test]
    fn scale_output_identity_and_rejects_nonpositive() {
        let sys = fixtures::mimo4();
        assert_eq!(scale_output(&sys, 1.0).unwrap(), sys);
        assert!(scale_output(&sys, 0.0).is_err());
    }
}
