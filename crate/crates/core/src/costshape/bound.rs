use rayon::prelude::*;
use serde::Serialize;

use super::{trace_integral, ConvexShape};
use crate::error::{Error, Result};
use crate::settings::NumericSettings;
use crate::sysmodel::{hinf_norm, StateSpaceSystem};

/// Guaranteed upper bound on the output variance over spectral densities
/// within divergence budget `d`.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceBound {
    pub value: f64,
    /// Minimizing `σ`.
    pub sigma: f64,
    /// Search interval for `σ`.
    pub bracket: (f64, f64),
    /// Set when the coarse scan found more than one local minimum.
    pub warning: Option<String>,
}

const SCAN_POINTS: usize = 64;

/// `inf_σ (J_{ψ*}(√σ F) + d)/σ` over `σ` with `σ‖F‖∞²` inside the domain of `ψ_*`.
///
/// A 64-point log-spaced scan over `[1e-6, 0.95·σ_sup]` locates the best
/// cell, which is then refined by golden-section search in `ln σ`.
pub fn worst_case_variance_bound(
    sys: &StateSpaceSystem,
    shape: &ConvexShape,
    d: f64,
    cfg: &NumericSettings,
) -> Result<VarianceBound> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Domain { what: "variance bound: budget d", value: d, domain: "[0, ∞)".into() });
    }
    let (lo_range, hi_range) = shape.derivative_range();
    if !(lo_range < 0.0 && hi_range > 0.0) {
        return Err(Error::Infeasible(format!(
            "ψ_* of {} is not defined around 0 (ψ′ range ({lo_range}, {hi_range}))",
            shape.name()
        )));
    }
    let at_zero = shape.conjugate_value(0.0)?;
    if at_zero.abs() > 1e-10 {
        return Err(Error::Infeasible(format!("ψ_*(0) = {at_zero} ≠ 0 for {}", shape.name())));
    }

    let hinf = hinf_norm(sys, cfg.hinf_tol, cfg)?.hi;
    let hsq = hinf * hinf;
    let sigma_sup = if hsq > 0.0 { hi_range / hsq } else { f64::INFINITY };
    let sigma_hi = if sigma_sup.is_finite() { 0.95 * sigma_sup } else { 1e6 };
    let sigma_lo = if sigma_hi > 1e-3 { 1e-6 } else { 1e-3 * sigma_hi };
    if !(sigma_hi > sigma_lo) {
        return Err(Error::Infeasible(format!("empty σ bracket [{sigma_lo}, {sigma_hi}]")));
    }

    let objective = |log_sigma: f64| -> Result<f64> {
        let sigma = log_sigma.exp();
        let per_sigma = trace_integral(
            sys,
            |z| shape.conjugate_value(sigma * z).unwrap_or(f64::NAN) / sigma,
            cfg,
        )?;
        Ok(per_sigma.value + d / sigma)
    };

    let (a, b) = (sigma_lo.ln(), sigma_hi.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| a + (b - a) * i as f64 / (SCAN_POINTS - 1) as f64).collect();
    let values = grid.par_iter().map(|&x| objective(x)).collect::<Result<Vec<f64>>>()?;
    let best = (0..SCAN_POINTS).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap_or(0);
    let local_minima = (0..SCAN_POINTS)
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i + 1 == SCAN_POINTS || values[i] <= values[i + 1];
            left && right
        })
        .count();
    let warning = (local_minima > 1).then(|| {
        format!("σ-objective has {local_minima} local minima on the scan; refined around the smallest")
    });

    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(SCAN_POINTS - 1)];
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (objective(x1)?, objective(x2)?);
    let (mut best_x, mut best_f) = (grid[best], values[best]);
    for _ in 0..100 {
        if hi - lo < 1e-7 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < best_f {
            best_x = x;
            best_f = f;
        }
    }
    Ok(VarianceBound { value: best_f, sigma: best_x.exp(), bracket: (sigma_lo, sigma_hi), warning })
}
