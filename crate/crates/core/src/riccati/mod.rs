//! Risk-sensitive Riccati equation `AᵀΨ + ΨA + θΩ + Ψ℧Ψ = 0` and the Taylor
//! coefficients of its stabilising solution in `θ`.

mod schattenian;

pub use schattenian::{
    controllability_schattenians, hs_norms_riccati, observability_schattenians, risk_sensitive_series,
    RiskSeries, SchattenianSequence, Side,
};

use nalgebra::{Dyn, LU};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matlin::{inner, spectral_abscissa, symmetrize, Lyapunov, Mat};
use crate::settings::NumericSettings;
use crate::sysmodel::{hinf_norm, StateSpaceSystem};

/// Stabilising solution `Ψ(θ)` with closed-loop matrix `Υ = A + ℧Ψ`.
#[derive(Debug, Clone, Serialize)]
pub struct RiccatiSolution {
    pub theta: f64,
    #[serde(skip)]
    pub psi: Mat,
    #[serde(skip)]
    pub closed_loop: Mat,
    /// `‖AᵀΨ + ΨA + θΩ + Ψ℧Ψ‖_F` relative to the largest term.
    pub residual: f64,
    /// Spectral abscissa of `Υ`.
    pub closed_loop_abscissa: f64,
}

fn are_residual(a: &Mat, bbt: &Mat, ctc: &Mat, theta: f64, psi: &Mat) -> (Mat, f64) {
    let atp = a.transpose() * psi;
    let quad = psi * bbt * psi;
    let r = &atp + atp.transpose() + ctc * theta + &quad;
    let scale = (2.0 * atp.norm()).max(theta * ctc.norm()).max(quad.norm()).max(f64::MIN_POSITIVE);
    let rel = r.norm() / scale;
    (r, rel)
}

/// Matrix sign function by the scaled Newton iteration.
fn matrix_sign(h: &Mat) -> Result<Mat> {
    let dim = h.nrows();
    let mut z = h.clone();
    for _ in 0..100 {
        let lu: LU<f64, Dyn, Dyn> = z.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::Convergence { stage: "riccati: sign iteration hit a singular iterate" })?;
        let det = z.clone().lu().determinant().abs();
        let c = if det > 0.0 && det.is_finite() { det.powf(-1.0 / dim as f64) } else { 1.0 };
        let next = (&z * c + inv / c) * 0.5;
        let change = (&next - &z).norm();
        let size = next.norm();
        z = next;
        if change <= 1e-13 * size {
            return Ok(z);
        }
    }
    Err(Error::Convergence { stage: "riccati: matrix sign iteration" })
}

/// Stabilising solution of the risk-sensitive ARE for `0 ≤ θ < 1/‖F‖∞²`.
///
/// The stable invariant subspace `[I; Ψ]` of `[[A, ℧], [−θΩ, −Aᵀ]]` is read
/// off the matrix sign function and polished by Newton–Kleinman steps.
/// Conditioning degrades as `θ` approaches `1/‖F‖∞²`; values up to
/// `0.95/‖F‖∞²` are the practical range.
pub fn stabilizing_are(sys: &StateSpaceSystem, theta: f64, cfg: &NumericSettings) -> Result<RiccatiSolution> {
    let hinf = hinf_norm(sys, cfg.hinf_tol, cfg)?;
    let limit = if hinf.hi > 0.0 { 1.0 / (hinf.hi * hinf.hi) } else { f64::INFINITY };
    if !(theta >= 0.0 && theta < limit) {
        return Err(Error::Domain {
            what: "risk sensitivity θ (must satisfy 0 ≤ θ < 1/‖F‖∞²)",
            value: theta,
            domain: format!("[0, {limit})"),
        });
    }
    solve_are(sys, theta, cfg)
}

pub(crate) fn solve_are(sys: &StateSpaceSystem, theta: f64, cfg: &NumericSettings) -> Result<RiccatiSolution> {
    let n = sys.n();
    let a = sys.a();
    let (bbt, ctc) = (sys.bbt(), sys.ctc());
    if theta == 0.0 {
        return Ok(RiccatiSolution {
            theta,
            psi: Mat::zeros(n, n),
            closed_loop: a.clone(),
            residual: 0.0,
            closed_loop_abscissa: spectral_abscissa(a)?,
        });
    }
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&bbt);
    h.view_mut((n, 0), (n, n)).copy_from(&(&ctc * -theta));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let w = matrix_sign(&h)? + Mat::identity(2 * n, 2 * n);
    let mut lhs = Mat::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&w.view((n, n), (n, n)));
    let mut rhs = Mat::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-w.view((0, 0), (n, n))));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let psi0 = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| Error::Convergence { stage: "riccati: stable subspace extraction" })?;
    let mut psi = symmetrize(&psi0);

    let (_, mut rel) = are_residual(a, &bbt, &ctc, theta, &psi);
    for _ in 0..8 {
        let ups = a + &bbt * &psi;
        if spectral_abscissa(&ups)? >= 0.0 {
            break;
        }
        let (r, _) = are_residual(a, &bbt, &ctc, theta, &psi);
        let step = Lyapunov::new(&ups.transpose(), cfg)?.solve(&symmetrize(&r))?;
        let candidate = symmetrize(&(&psi + step));
        let (_, cand_rel) = are_residual(a, &bbt, &ctc, theta, &candidate);
        if !(cand_rel < rel) {
            break;
        }
        psi = candidate;
        let done = cand_rel <= 1e-15 || rel / cand_rel < 2.0;
        rel = cand_rel;
        if done {
            break;
        }
    }
    let closed_loop = a + &bbt * &psi;
    let abscissa = spectral_abscissa(&closed_loop)?;
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz { context: "riccati: closed loop A + ℧Ψ", max_real: abscissa });
    }
    if rel > cfg.riccati_residual_tol {
        return Err(Error::Residual { what: "riccati: ARE", residual: rel, tolerance: cfg.riccati_residual_tol });
    }
    Ok(RiccatiSolution { theta, psi, closed_loop, residual: rel, closed_loop_abscissa: abscissa })
}

/// `Ξ(θ) = ½⟨℧, Ψ(θ)⟩_F`.
pub fn risk_sensitive_cost(sys: &StateSpaceSystem, theta: f64, cfg: &NumericSettings) -> Result<f64> {
    let sol = stabilizing_are(sys, theta, cfg)?;
    Ok(0.5 * inner(&sys.bbt(), &sol.psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matlin::sym_eig_extremes;

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn theta_zero_is_zero() {
        let sol = stabilizing_are(&fixtures::mimo4(), 0.0, &cfg()).unwrap();
        assert_eq!(sol.psi.norm(), 0.0);
        assert_eq!(risk_sensitive_cost(&fixtures::mimo4(), 0.0, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn scalar_closed_form() {
        for &theta in &[0.1, 0.5, 0.75, 0.9] {
            let sol = stabilizing_are(&fixtures::scalar(), theta, &cfg()).unwrap();
            let expect = 1.0 - (1.0f64 - theta).sqrt();
            assert!((sol.psi[(0, 0)] - expect).abs() < 1e-13, "θ={theta}");
            assert!((sol.closed_loop[(0, 0)] + (1.0f64 - theta).sqrt()).abs() < 1e-13);
        }
        let xi = risk_sensitive_cost(&fixtures::scalar(), 0.75, &cfg()).unwrap();
        assert!((xi - 0.25).abs() < 1e-13);
    }

    #[test]
    fn theta_out_of_range() {
        assert!(matches!(stabilizing_are(&fixtures::scalar(), 1.0, &cfg()), Err(Error::Domain { .. })));
        assert!(matches!(stabilizing_are(&fixtures::scalar(), -0.1, &cfg()), Err(Error::Domain { .. })));
    }

    #[test]
    fn mimo4_half_range() {
        let sys = fixtures::mimo4();
        let h = hinf_norm(&sys, 1e-10, &cfg()).unwrap().hi;
        let sol = stabilizing_are(&sys, 0.5 / (h * h), &cfg()).unwrap();
        assert!(sol.residual <= 1e-8);
        assert!(sol.closed_loop_abscissa < 0.0);
    }

    #[test]
    fn monotone_in_theta() {
        let sys = fixtures::mimo4();
        let h = hinf_norm(&sys, 1e-10, &cfg()).unwrap().hi;
        let thetas: Vec<f64> = [0.1, 0.3, 0.6, 0.9].iter().map(|t| t / (h * h)).collect();
        let sols: Vec<_> = thetas.iter().map(|&t| stabilizing_are(&sys, t, &cfg()).unwrap()).collect();
        for w in sols.windows(2) {
            let diff = &w[1].psi - &w[0].psi;
            assert!(sym_eig_extremes(&diff).0 >= -1e-9 * w[1].psi.norm());
        }
    }

    #[test]
    fn zero_input_has_zero_cost() {
        let xi = risk_sensitive_cost(&fixtures::zero_input(), 0.5, &cfg()).unwrap();
        assert_eq!(xi, 0.0);
    }
}
