use num_complex::Complex64;

use super::{controllability_gramian, StateSpaceSystem};
use crate::error::{Error, Result};
use crate::matlin::{block_diag, expm, to_complex, CMat, HermitianMatrix, Mat};
use crate::settings::NumericSettings;

/// `F(s) = C (sI − A)⁻¹ B`.
pub fn transfer(sys: &StateSpaceSystem, s: Complex64) -> Result<CMat> {
    let n = sys.n();
    if n == 0 {
        return Ok(CMat::zeros(sys.p(), sys.m()));
    }
    let mut resolvent = to_complex(sys.a()).map(|x| -x);
    for i in 0..n {
        resolvent[(i, i)] += s;
    }
    let lu = resolvent.lu();
    let x = lu.solve(&to_complex(sys.b())).ok_or(Error::Pole { s })?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Pole { s });
    }
    Ok(to_complex(sys.c()) * x)
}

/// `S(ω) = F(iω) F(iω)*`.
pub fn spectral_density(sys: &StateSpaceSystem, omega: f64) -> Result<HermitianMatrix> {
    let f = transfer(sys, Complex64::new(0.0, omega))?;
    Ok(HermitianMatrix::gram(&f))
}

/// Output covariance `K(t) = C e^{tA} P Cᵀ` for `t ≥ 0`, `K(−t) = K(t)ᵀ`.
#[derive(Debug, Clone)]
pub struct CovarianceKernel {
    a: Mat,
    c: Mat,
    pct: Mat,
}

impl CovarianceKernel {
    pub fn new(sys: &StateSpaceSystem, cfg: &NumericSettings) -> Result<Self> {
        let p = controllability_gramian(sys, cfg)?;
        Ok(Self {
            a: sys.a().clone(),
            c: sys.c().clone(),
            pct: p * sys.c().transpose(),
        })
    }

    pub fn at(&self, t: f64) -> Result<Mat> {
        let k = &self.c * expm(&(&self.a * t.abs()))? * &self.pct;
        Ok(if t < 0.0 { k.transpose() } else { k })
    }

    /// `K(jh)` for `j = 0, …, count − 1`, built from powers of `e^{hA}`.
    pub fn lags(&self, h: f64, count: usize) -> Result<Vec<Mat>> {
        let step = expm(&(&self.a * h))?;
        let mut state = self.pct.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(&self.c * &state);
            state = &step * state;
        }
        Ok(out)
    }
}

pub fn covariance_kernel(sys: &StateSpaceSystem, t: f64, cfg: &NumericSettings) -> Result<Mat> {
    CovarianceKernel::new(sys, cfg)?.at(t)
}

/// Realization of `F∼(s) = F(−s)ᵀ`: `(−Aᵀ, Cᵀ, −Bᵀ)`.
pub fn conjugate_realization(sys: &StateSpaceSystem) -> StateSpaceSystem {
    StateSpaceSystem::new(
        -sys.a().transpose(),
        sys.c().transpose(),
        -sys.b().transpose(),
    )
    .expect("conjugate of a valid realization is valid")
}

/// Realization of `S = F F∼` in the additive (causal plus anticausal) form
/// `(diag(−Aᵀ, A), [Cᵀ; PCᵀ], [−CP, C])`.
pub fn spectral_density_realization(
    sys: &StateSpaceSystem,
    cfg: &NumericSettings,
) -> Result<StateSpaceSystem> {
    let n = sys.n();
    let p = controllability_gramian(sys, cfg)?;
    let a = block_diag(&[&(-sys.a().transpose()), sys.a()]);
    let mut b = Mat::zeros(2 * n, sys.p());
    b.view_mut((0, 0), (n, sys.p())).copy_from(&sys.c().transpose());
    b.view_mut((n, 0), (n, sys.p())).copy_from(&(&p * sys.c().transpose()));
    let mut c = Mat::zeros(sys.p(), 2 * n);
    c.view_mut((0, 0), (sys.p(), n)).copy_from(&(-(sys.c() * &p)));
    c.view_mut((0, n), (sys.p(), n)).copy_from(sys.c());
    StateSpaceSystem::new(a, b, c)
}
