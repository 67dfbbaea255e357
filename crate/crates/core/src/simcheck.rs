//! Stochastic cross-checks: exact-discretisation simulation of the output
//! energy `𝓔_T = ∫₀ᵀ|Z|²dt`, cumulant growth rates, and the trace of a
//! cost shape applied to the discretised covariance operator `K_T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::costshape::CostShape;
use crate::error::{Error, Result};
use crate::matlin::{expm, op_norm, psd_sqrt_factor, symmetrize, Mat};
use crate::riccati::hs_norms_riccati;
use crate::settings::NumericSettings;
use crate::sysmodel::{controllability_gramian, CovarianceKernel, StateSpaceSystem};

/// Largest order handled by the cumulant estimators.
pub const MAX_CUMULANT_ORDER: usize = 3;

/// Largest side of the dense kernel matrix in [`toeplitz_trace`].
pub const TOEPLITZ_MAX_SIZE: usize = 6000;

/// Eigenvalues of the discretised kernel below this are clipped to zero.
pub const TOEPLITZ_CLIP: f64 = -1e-10;

/// Tolerance of the stationarity identity `P = A_d P A_dᵀ + Q_d`.
const STATIONARITY_TOL: f64 = 1e-9;

/// Batches used for the batch-means standard error.
const BATCHES: usize = 20;

/// Exact sampled-data model `x_{j+1} = A_d x_j + w_j`, `w_j ~ N(0, Q_d)`.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub step: f64,
    pub ad: Mat,
    pub qd: Mat,
}

/// Discretises `dX = AX dt + B dW` exactly over a step `h`.
///
/// `Q_d = ∫₀ʰ e^{sA} BBᵀ e^{sAᵀ} ds` is read off the exponential of
/// `h·[[−A, BBᵀ], [0, Aᵀ]]`.
pub fn discretize(sys: &StateSpaceSystem, h: f64, cfg: &NumericSettings) -> Result<DiscreteModel> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain { what: "discretisation step", value: h, domain: "(0, ∞)".into() });
    }
    let n = sys.n();
    let a = sys.a();
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-a));
    m.view_mut((0, n), (n, n)).copy_from(&sys.bbt());
    m.view_mut((n, n), (n, n)).copy_from(&a.transpose());
    let e = expm(&(m * h))?;
    let ad = e.view((n, n), (n, n)).transpose();
    let qd = symmetrize(&(&ad * e.view((0, n), (n, n))));

    let p = controllability_gramian(sys, cfg)?;
    let gap = (&p - &ad * &p * ad.transpose() - &qd).norm();
    if gap > STATIONARITY_TOL * p.norm().max(1.0) {
        return Err(Error::Residual { what: "discrete stationarity identity", residual: gap, tolerance: STATIONARITY_TOL });
    }
    Ok(DiscreteModel { step: h, ad, qd })
}

/// 64-bit finaliser used to derive independent per-path seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d4_9bb4_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of path `index` under master seed `seed`.
pub fn path_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index))
}

fn steps_for(horizon: f64, h: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain { what: "horizon", value: horizon, domain: "(0, ∞)".into() });
    }
    let steps = (horizon / h).round();
    if steps < 1.0 || ((steps * h - horizon) / horizon).abs() > 1e-9 {
        return Err(Error::Input(format!("horizon {horizon} is not a whole number of steps {h}")));
    }
    Ok(steps as usize)
}

/// Row-major dense copy used by the inner loops.
fn flat(m: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter());
    }
    out
}

fn mat_vec(m: &[f64], cols: usize, x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = m[i * cols..(i + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// Samples of `𝓔_T` over `paths` independent stationary trajectories.
///
/// The state is propagated exactly; `h` only enters through the trapezoidal
/// rule for the energy integral. Path `i` draws from ChaCha8 seeded with
/// [`path_seed`]`(seed, i)`, so results do not depend on thread scheduling.
pub fn simulate_energy(
    sys: &StateSpaceSystem,
    horizon: f64,
    h: f64,
    paths: usize,
    seed: u64,
    cfg: &NumericSettings,
) -> Result<Vec<f64>> {
    let limit = 0.02 / op_norm(sys.a()).max(f64::MIN_POSITIVE);
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::Domain { what: "simulation step", value: h, domain: format!("(0, {limit:e}]") });
    }
    let steps = steps_for(horizon, h)?;
    let model = discretize(sys, h, cfg)?;
    let p = controllability_gramian(sys, cfg)?;
    let init = psd_sqrt_factor(&p, cfg)?;
    let noise = psd_sqrt_factor(&model.qd, cfg)?;
    let (n, ri, rq) = (sys.n(), init.ncols(), noise.ncols());
    let (ad, c, init, noise) = (flat(&model.ad), flat(sys.c()), flat(&init), flat(&noise));
    let pdim = sys.p();

    let run = |index: usize| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(path_seed(seed, index as u64));
        let mut xi = vec![0.0; ri.max(rq)];
        let mut x = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut z = vec![0.0; pdim];
        for v in xi.iter_mut().take(ri) {
            *v = rng.sample(StandardNormal);
        }
        mat_vec(&init, ri, &xi[..ri], &mut x);
        let energy = |x: &[f64], z: &mut [f64]| {
            mat_vec(&c, n, x, z);
            z.iter().map(|v| v * v).sum::<f64>()
        };
        let mut acc = 0.5 * energy(&x, &mut z);
        for j in 1..=steps {
            for v in xi.iter_mut().take(rq) {
                *v = rng.sample(StandardNormal);
            }
            mat_vec(&ad, n, &x, &mut next);
            for (i, nx) in next.iter_mut().enumerate() {
                *nx += noise[i * rq..(i + 1) * rq].iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>();
            }
            std::mem::swap(&mut x, &mut next);
            let e = energy(&x, &mut z);
            acc += if j == steps { 0.5 * e } else { e };
        }
        acc * h
    };
    Ok((0..paths).into_par_iter().map(run).collect())
}

/// Cumulants from raw moments `μ₁, …, μ_k` for `k ≤ 3`.
pub fn cumulants_from_moments(moments: &[f64]) -> Result<Vec<f64>> {
    if moments.is_empty() {
        return Err(Error::Input("at least one moment is required".into()));
    }
    if moments.len() > MAX_CUMULANT_ORDER {
        return Err(Error::UnsupportedOrder { order: moments.len() });
    }
    let m1 = moments[0];
    let mut out = vec![m1];
    if let Some(&m2) = moments.get(1) {
        out.push(m2 - m1 * m1);
    }
    if let Some(&m3) = moments.get(2) {
        out.push(m3 - 3.0 * m1 * moments[1] + 2.0 * m1.powi(3));
    }
    Ok(out)
}

/// Estimate of the rate `C_{k,T}/T` with its batch-means standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantEstimate {
    pub order: usize,
    pub horizon: f64,
    pub rate: f64,
    pub std_error: f64,
}

/// Unbiased sample cumulants (k-statistics) of orders `1..=max_order`.
///
/// The samples are centred before the moment polynomials are applied, which
/// leaves cumulants of order two and above unchanged and avoids cancellation.
fn sample_cumulants(x: &[f64], max_order: usize) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    if x.len() <= max_order {
        return Err(Error::Input(format!("need more than {max_order} samples, got {}", x.len())));
    }
    let mean = x.iter().sum::<f64>() / n;
    let moments: Vec<f64> = (1..=max_order)
        .map(|k| x.iter().map(|v| (v - mean).powi(k as i32)).sum::<f64>() / n)
        .collect();
    let mut c = cumulants_from_moments(&moments)?;
    c[0] += mean;
    if max_order >= 2 {
        c[1] *= n / (n - 1.0);
    }
    if max_order >= 3 {
        c[2] *= n * n / ((n - 1.0) * (n - 2.0));
    }
    Ok(c)
}

/// Cumulant rates of `𝓔_T` from energy samples, orders `1..=max_order`.
pub fn estimate_cumulant_rates(samples: &[f64], horizon: f64, max_order: usize) -> Result<Vec<CumulantEstimate>> {
    if max_order == 0 || max_order > MAX_CUMULANT_ORDER {
        return Err(Error::UnsupportedOrder { order: max_order });
    }
    let point = sample_cumulants(samples, max_order)?;
    let size = samples.len() / BATCHES;
    let batches: Vec<Vec<f64>> = if size > max_order {
        samples.chunks_exact(size).take(BATCHES).map(|b| sample_cumulants(b, max_order)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let nb = batches.len() as f64;
    Ok((0..max_order)
        .map(|i| {
            let std_error = if batches.len() > 1 {
                let mean = batches.iter().map(|b| b[i]).sum::<f64>() / nb;
                let var = batches.iter().map(|b| (b[i] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
                (var / nb).sqrt() / horizon
            } else {
                f64::INFINITY
            };
            CumulantEstimate { order: i + 1, horizon, rate: point[i] / horizon, std_error }
        })
        .collect())
}

/// `(2k − 2)!!`.
pub fn double_factorial_even(k: usize) -> f64 {
    (1..k).map(|j| 2.0 * j as f64).product()
}

/// Monte-Carlo cumulant rate against its limit `(2k−2)!!‖F‖₂ₖ^{2k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCheck {
    pub estimate: CumulantEstimate,
    pub target: f64,
    pub z_score: f64,
    pub relative_error: f64,
}

/// Simulates once and compares the rates of orders `1..=max_order`.
#[allow(clippy::too_many_arguments)]
pub fn cumulant_rate_check(
    sys: &StateSpaceSystem,
    max_order: usize,
    horizon: f64,
    h: f64,
    paths: usize,
    seed: u64,
    cfg: &NumericSettings,
) -> Result<Vec<RateCheck>> {
    if max_order == 0 || max_order > MAX_CUMULANT_ORDER {
        return Err(Error::UnsupportedOrder { order: max_order });
    }
    let samples = simulate_energy(sys, horizon, h, paths, seed, cfg)?;
    compare_cumulant_rates(sys, &samples, horizon, max_order, cfg)
}

/// Rates estimated from given energy samples against their limits.
pub fn compare_cumulant_rates(
    sys: &StateSpaceSystem,
    samples: &[f64],
    horizon: f64,
    max_order: usize,
    cfg: &NumericSettings,
) -> Result<Vec<RateCheck>> {
    let estimates = estimate_cumulant_rates(samples, horizon, max_order)?;
    let norms = hs_norms_riccati(sys, max_order, cfg)?;
    Ok(estimates
        .into_iter()
        .map(|estimate| {
            let k = estimate.order;
            let target = double_factorial_even(k) * norms.power(k).unwrap_or(0.0);
            let diff = estimate.rate - target;
            RateCheck {
                z_score: diff / estimate.std_error,
                relative_error: if target != 0.0 { diff.abs() / target.abs() } else { diff.abs() },
                target,
                estimate,
            }
        })
        .collect())
}

/// Eigenvalues of the midpoint discretisation `[h K(t_i − t_j)]` of `K_T`.
pub fn toeplitz_spectrum(sys: &StateSpaceSystem, horizon: f64, h: f64, cfg: &NumericSettings) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain { what: "kernel grid step", value: h, domain: "(0, ∞)".into() });
    }
    let steps = steps_for(horizon, h)?;
    let p = sys.p();
    let size = p * steps;
    if size > TOEPLITZ_MAX_SIZE {
        return Err(Error::Resource(format!(
            "kernel matrix of order {size} exceeds {TOEPLITZ_MAX_SIZE}; increase the step or shorten the horizon"
        )));
    }
    let lags = CovarianceKernel::new(sys, cfg)?.lags(h, steps)?;
    let mut k = Mat::zeros(size, size);
    for i in 0..steps {
        for j in 0..=i {
            let block = &lags[i - j] * h;
            k.view_mut((i * p, j * p), (p, p)).copy_from(&block);
            if i != j {
                k.view_mut((j * p, i * p), (p, p)).copy_from(&block.transpose());
            }
        }
    }
    Ok(symmetrize(&k).symmetric_eigenvalues().iter().copied().collect())
}

/// `(1/T) Tr φ(K_T)` on a uniform grid of step `h`.
pub fn toeplitz_trace(
    sys: &StateSpaceSystem,
    shape: &CostShape,
    horizon: f64,
    h: f64,
    cfg: &NumericSettings,
) -> Result<f64> {
    if !shape.has_closed_form() {
        return Err(Error::Input(format!("shape {} has no closed-form evaluator", shape.name())));
    }
    let total = toeplitz_spectrum(sys, horizon, h, cfg)?
        .into_iter()
        .map(|l| shape.eval(if l < TOEPLITZ_CLIP { 0.0 } else { l }))
        .sum::<Result<f64>>()?;
    Ok(total / horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sysmodel::h2_norm;

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn scalar_discretisation() {
        let d = discretize(&fixtures::scalar(), 0.1, &cfg()).unwrap();
        assert!((d.ad[(0, 0)] - (-0.1f64).exp()).abs() < 1e-15);
        assert!((d.qd[(0, 0)] - (1.0 - (-0.2f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_input_has_no_noise() {
        let d = discretize(&fixtures::zero_input(), 0.05, &cfg()).unwrap();
        assert_eq!(d.qd.norm(), 0.0);
        let e = simulate_energy(&fixtures::zero_input(), 1.0, 0.005, 4, 1, &cfg()).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mimo4_stationarity() {
        let sys = fixtures::mimo4();
        let d = discretize(&sys, 0.01, &cfg()).unwrap();
        let p = controllability_gramian(&sys, &cfg()).unwrap();
        assert!((&p - &d.ad * &p * d.ad.transpose() - &d.qd).norm() <= 1e-9 * p.norm());
    }

    #[test]
    fn step_limit_enforced() {
        assert!(simulate_energy(&fixtures::scalar(), 1.0, 0.1, 2, 0, &cfg()).is_err());
    }

    #[test]
    fn moment_polynomials() {
        assert_eq!(cumulants_from_moments(&[1.0, 3.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(cumulants_from_moments(&[1.0, 3.0, 10.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let m = 1.7f64;
        let c = cumulants_from_moments(&[m, m * m, m.powi(3)]).unwrap();
        assert!(c[1].abs() < 1e-15 && c[2].abs() < 1e-14);
        assert!(matches!(cumulants_from_moments(&[1.0; 4]), Err(Error::UnsupportedOrder { order: 4 })));
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_even(1), 1.0);
        assert_eq!(double_factorial_even(2), 2.0);
        assert_eq!(double_factorial_even(3), 8.0);
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let sys = fixtures::mimo4();
        let h = 0.02 / op_norm(sys.a());
        let t = 200.0 * h;
        let a = simulate_energy(&sys, t, h, 8, 42, &cfg()).unwrap();
        let b = simulate_energy(&sys, t, h, 8, 42, &cfg()).unwrap();
        let c = simulate_energy(&sys, t, h, 8, 43, &cfg()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn scalar_mean_rate() {
        let sys = fixtures::scalar();
        let e = simulate_energy(&sys, 50.0, 0.01, 400, 5, &cfg()).unwrap();
        let est = estimate_cumulant_rates(&e, 50.0, 1).unwrap();
        let h2 = h2_norm(&sys, &cfg()).unwrap().powi(2);
        assert!((est[0].rate - h2).abs() <= 3.0 * est[0].std_error, "{:?}", est[0]);
    }

    #[test]
    fn trace_identity_at_linear_shape() {
        let sys = fixtures::scalar();
        let lin = CostShape::power(1).unwrap();
        let v = toeplitz_trace(&sys, &lin, 10.0, 0.05, &cfg()).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        assert_eq!(toeplitz_trace(&fixtures::zero_input(), &lin, 5.0, 0.05, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn kernel_grid_limit() {
        let lin = CostShape::power(1).unwrap();
        let err = toeplitz_trace(&fixtures::scalar(), &lin, 100.0, 0.01, &cfg()).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
