use num_complex::Complex64;

use super::grid::{cascade_input, cascade_matrix};
use super::WickSequences;
use crate::costshape::CostShape;
use crate::error::{Error, Result};
use crate::matlin::{CMat, Mat};
use crate::settings::NumericSettings;
use crate::sysmodel::{h2_norm, spectral_density, transfer, StateSpaceSystem};

/// Factors `G_k = ρ_kᵀ (E α_k) ⋯ (E α_1) Cᵀ` with `E(s) = (sI − A)⁻¹`, so that
/// `Sᵏ = G_k∼ G_k`, together with the stacked system `𝒢_N` whose output
/// blocks are `ρ_kᵀ`.
#[derive(Debug, Clone)]
pub struct Cascade {
    pub factors: Vec<StateSpaceSystem>,
    pub stacked: StateSpaceSystem,
}

fn check_order(seqs: &WickSequences, order: usize) -> Result<()> {
    if order == 0 || order > seqs.order() {
        return Err(Error::UnsupportedOrder { order });
    }
    Ok(())
}

fn output_block(sys: &StateSpaceSystem, seqs: &WickSequences, k: usize, order: usize) -> Mat {
    let n = sys.n();
    let rho_t = seqs.cascade_rho(k).transpose();
    let mut c = Mat::zeros(rho_t.nrows(), n * order);
    c.view_mut((0, (k - 1) * n), (rho_t.nrows(), n)).copy_from(&rho_t);
    c
}

fn factor(sys: &StateSpaceSystem, seqs: &WickSequences, k: usize) -> Result<StateSpaceSystem> {
    StateSpaceSystem::new(
        cascade_matrix(sys.a(), seqs, k),
        cascade_input(sys, seqs, k),
        output_block(sys, seqs, k, k),
    )
}

pub fn build_cascade_g(sys: &StateSpaceSystem, seqs: &WickSequences, order: usize) -> Result<Cascade> {
    check_order(seqs, order)?;
    let factors = (1..=order).map(|k| factor(sys, seqs, k)).collect::<Result<Vec<_>>>()?;
    let blocks: Vec<Mat> = (1..=order).map(|k| output_block(sys, seqs, k, order)).collect();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut c = Mat::zeros(rows, sys.n() * order);
    let mut r = 0;
    for b in &blocks {
        c.view_mut((r, 0), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
    }
    let stacked = StateSpaceSystem::new(cascade_matrix(sys.a(), seqs, order), cascade_input(sys, seqs, order), c)?;
    Ok(Cascade { factors, stacked })
}

/// `‖S(ω)ᵏ − G_k(iω)* G_k(iω)‖_F / max(1, ‖S(ω)ᵏ‖_F)`.
pub fn verify_factorization(sys: &StateSpaceSystem, seqs: &WickSequences, k: usize, omega: f64) -> Result<f64> {
    check_order(seqs, k)?;
    let s = spectral_density(sys, omega)?.into_matrix();
    let mut power = s.clone();
    for _ in 1..k {
        power = &power * &s;
    }
    let g = transfer(&factor(sys, seqs, k)?, Complex64::new(0.0, omega))?;
    let gg: CMat = g.adjoint() * g;
    Ok((&power - gg).norm() / power.norm().max(1.0))
}

/// Weighted cascade `H` with output blocks `√φ_k ρ_kᵀ` and `‖H‖₂² = Σ_{k≤N} φ_k ‖F‖₂ₖ^{2k}`.
#[derive(Debug, Clone)]
pub struct WeightedCascade {
    pub realization: StateSpaceSystem,
    /// `‖H‖₂²` from the Gramian of `H` itself.
    pub h2_squared: f64,
}

pub fn build_weighted_cascade_h(
    sys: &StateSpaceSystem,
    seqs: &WickSequences,
    shape: &CostShape,
    order: usize,
    cfg: &NumericSettings,
) -> Result<WeightedCascade> {
    check_order(seqs, order)?;
    let weights = (1..=order)
        .map(|k| {
            let phi = shape.coefficient(k);
            if phi < 0.0 {
                Err(Error::ShapeNotSos { order: k, value: phi })
            } else {
                Ok(phi.sqrt())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let blocks: Vec<Mat> = (1..=order).map(|k| output_block(sys, seqs, k, order) * weights[k - 1]).collect();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut c = Mat::zeros(rows, sys.n() * order);
    let mut r = 0;
    for b in &blocks {
        c.view_mut((r, 0), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
    }
    let realization = StateSpaceSystem::new(cascade_matrix(sys.a(), seqs, order), cascade_input(sys, seqs, order), c)?;
    let h2 = h2_norm(&realization, cfg)?;
    Ok(WeightedCascade { realization, h2_squared: h2 * h2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::wick::hs_norms_wick;

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn factor_dimensions_and_norms() {
        let sys = fixtures::mimo4();
        let seqs = WickSequences::build(&sys, 5, &cfg()).unwrap();
        let cascade = build_cascade_g(&sys, &seqs, 5).unwrap();
        let norms = hs_norms_wick(&sys, 5, &cfg()).unwrap();
        for (i, g) in cascade.factors.iter().enumerate() {
            let k = i + 1;
            assert_eq!(g.n(), k * sys.n());
            let h2 = h2_norm(g, &cfg()).unwrap();
            let p = norms.power(k).unwrap();
            assert!((h2 * h2 - p).abs() <= 1e-8 * p, "k={k}");
        }
        assert_eq!(cascade.stacked.n(), 5 * sys.n());
    }

    #[test]
    fn scalar_g2_and_factorization() {
        let sys = fixtures::scalar();
        let seqs = WickSequences::build(&sys, 3, &cfg()).unwrap();
        let cascade = build_cascade_g(&sys, &seqs, 2).unwrap();
        let h2 = h2_norm(&cascade.factors[1], &cfg()).unwrap();
        assert!((h2 * h2 - 0.25).abs() < 1e-14);
        assert!(verify_factorization(&sys, &seqs, 3, 0.0).unwrap() < 1e-13);
        for &w in &[0.1, 1.0, 10.0] {
            for k in 1..=3 {
                assert!(verify_factorization(&sys, &seqs, k, w).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn factorization_on_mimo4() {
        let sys = fixtures::mimo4();
        let seqs = WickSequences::build(&sys, 5, &cfg()).unwrap();
        for i in 0..20 {
            let w = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
            for k in 1..=5 {
                let r = verify_factorization(&sys, &seqs, k, w).unwrap();
                assert!(r <= 1e-8, "k={k} ω={w} residual {r}");
            }
        }
    }

    #[test]
    fn weighted_cascade_linear_shape() {
        let sys = fixtures::mimo4();
        let seqs = WickSequences::build(&sys, 3, &cfg()).unwrap();
        let shape = CostShape::power(1).unwrap();
        let h = build_weighted_cascade_h(&sys, &seqs, &shape, 3, &cfg()).unwrap();
        let h2 = h2_norm(&sys, &cfg()).unwrap();
        assert!((h.h2_squared - h2 * h2).abs() <= 1e-10 * h2 * h2);
    }

    #[test]
    fn weighted_cascade_rejects_negative_coefficients() {
        let sys = fixtures::scalar();
        let seqs = WickSequences::build(&sys, 3, &cfg()).unwrap();
        let shape = CostShape::polynomial(vec![1.0, -0.5], None).unwrap();
        assert!(matches!(
            build_weighted_cascade_h(&sys, &seqs, &shape, 3, &cfg()),
            Err(Error::ShapeNotSos { order: 2, .. })
        ));
    }

    #[test]
    fn balancing_leaves_factor_norms_unchanged() {
        let sys = fixtures::mimo4();
        let seqs = WickSequences::build(&sys, 6, &cfg()).unwrap();
        let sigmas = [0.7, 1.9, 0.5, 1.3, 2.0, 0.8];
        let scaled = seqs.rescaled(&sigmas).unwrap();
        // Through the block recurrence of each cascade.
        let ga = crate::wick::gramian_blocks(&sys, &seqs, &cfg()).unwrap();
        let gb = crate::wick::gramian_blocks(&sys, &scaled, &cfg()).unwrap();
        for k in 1..=6 {
            let na = crate::matlin::inner(&seqs.cascade_beta(k), ga.block(k, k));
            let nb = crate::matlin::inner(&scaled.cascade_beta(k), gb.block(k, k));
            assert!((na - nb).abs() <= 1e-10 * na, "k={k}");
        }
        // Through the Gramians of the realizations themselves.
        let a = build_cascade_g(&sys, &seqs, 6).unwrap();
        let b = build_cascade_g(&sys, &scaled, 6).unwrap();
        for (ga, gb) in a.factors.iter().zip(&b.factors) {
            let (na, nb) = (h2_norm(ga, &cfg()).unwrap(), h2_norm(gb, &cfg()).unwrap());
            assert!((na - nb).abs() <= 1e-8 * na);
        }
    }
}
