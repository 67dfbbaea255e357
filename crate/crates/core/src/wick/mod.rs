//! Cascade rearrangement of `Sᵏ` into the Gramian of a lower block-bidiagonal
//! system driven by `C⊤`.
//!
//! The sequences
//! `α_{j+1} = γ_j β_j`,
//! `β_{j+1} = γ_j⁻¹ α_j Ω^{δ_{j1}} γ_{j−1} γ_j⁻¹`,
//! `γ_j = 𝓛_A(α_j Ω^{δ_{j1}} γ_{j−1})`,
//! started from `α₁ = γ₀ = P`, `β₀ = I`, `β₁ = P⁻¹℧P⁻¹`, give
//! `‖F‖₂ₖ^{2k} = ⟨β_k, P_kk⟩` where `P_kk` is a diagonal block of the
//! cascade Gramian.

mod cascade;
mod grid;

pub use cascade::{
    build_cascade_g, build_weighted_cascade_h, verify_factorization, Cascade, WeightedCascade,
};
pub use grid::{gramian_blocks, GramianGrid};

use crate::error::{Error, Result};
use crate::matlin::{inner, spd_solve, sym_eig_extremes, symmetrize, Lyapunov, Mat};
use crate::settings::NumericSettings;
use crate::sysmodel::{controllability_gramian, NormMethod, NormReport, StateSpaceSystem};

/// The sequences `α_j, β_j, γ_j, ρ_j` up to a fixed order.
///
/// Indexing follows the recurrences: `alpha(j)` and `rho(j)` for `j ≥ 1`,
/// `beta(j)` and `gamma(j)` for `j ≥ 0`.
#[derive(Debug, Clone)]
pub struct WickSequences {
    order: usize,
    alpha: Vec<Mat>,
    beta: Vec<Mat>,
    gamma: Vec<Mat>,
    rho: Vec<Mat>,
    gamma_condition: Vec<f64>,
    scales: Vec<f64>,
    /// Order requested before any truncation.
    requested: usize,
}

struct Chain<'a> {
    lyap: &'a Lyapunov,
    tol: f64,
}

impl Chain<'_> {
    /// Condition number of a symmetric positive definite link, or the
    /// controllability-chain error for index `j`.
    fn condition(&self, j: usize, g: &Mat) -> Result<f64> {
        let (lo, hi) = sym_eig_extremes(g);
        if !(hi > 0.0) || lo <= self.tol * hi {
            return Err(Error::ControllabilityChain { index: j, ratio: if hi > 0.0 { lo / hi } else { 0.0 } });
        }
        Ok(hi / lo)
    }

    fn link(&self, rhs: &Mat) -> Result<Mat> {
        self.lyap.solve(&symmetrize(rhs))
    }
}

/// `γ⁻¹ M γ⁻¹` for symmetric `M`.
fn sandwich(context: &'static str, g: &Mat, m: &Mat) -> Result<Mat> {
    let left = spd_solve(context, g, m)?;
    Ok(symmetrize(&spd_solve(context, g, &left.transpose())?))
}

impl WickSequences {
    /// Sequences up to `order`, failing if any `γ_j` (`j ≤ order`) is numerically singular.
    pub fn build(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<Self> {
        Self::construct(sys, order, cfg, false)
    }

    /// As [`WickSequences::build`], but stops at the last order whose
    /// quantities are well defined when a `γ_j` becomes singular.
    pub fn build_truncating(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<Self> {
        Self::construct(sys, order, cfg, true)
    }

    fn construct(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings, truncate: bool) -> Result<Self> {
        if order == 0 {
            return Err(Error::UnsupportedOrder { order });
        }
        let lyap = Lyapunov::new(sys.a(), cfg)?;
        let chain = Chain { lyap: &lyap, tol: cfg.gamma_singular_tol };
        let (bbt, ctc) = (sys.bbt(), sys.ctc());
        let n = sys.n();

        let p = controllability_gramian(sys, cfg)?;
        let cond0 = chain.condition(0, &p)?;
        let beta1 = sandwich("wick: P⁻¹℧P⁻¹", &p, &bbt)?;
        let rho1 = spd_solve("wick: P⁻¹B", &p, sys.b())?;
        let gamma1 = chain.link(&(&p * &ctc * &p))?;

        let mut seqs = Self {
            order: 1,
            alpha: vec![p.clone()],
            beta: vec![Mat::identity(n, n), beta1],
            gamma: vec![p.clone(), gamma1],
            rho: vec![rho1],
            gamma_condition: vec![cond0],
            scales: vec![1.0],
            requested: order,
        };

        for j in 1..=order {
            let gj = seqs.gamma[j].clone();
            match chain.condition(j, &gj) {
                Ok(c) => seqs.gamma_condition.push(c),
                Err(_) if truncate => {
                    seqs.gamma_condition.push(f64::INFINITY);
                    break;
                }
                Err(e) => return Err(e),
            }
            if j == order {
                break;
            }
            let alpha_next = &gj * &seqs.beta[j];
            let (beta_next, rho_next) = if j == 1 {
                let pcp = &p * &ctc * &p;
                let rho2 = spd_solve("wick: γ₁⁻¹PCᵀ", &gj, &(&p * sys.c().transpose()))?;
                (sandwich("wick: β₂", &gj, &pcp)?, rho2)
            } else {
                let m = &seqs.alpha[j - 1] * &seqs.gamma[j - 1];
                let r = spd_solve("wick: ρ", &gj, &(&seqs.gamma[j - 1] * &seqs.rho[j - 2]))?;
                (sandwich("wick: β", &gj, &m)?, r)
            };
            let gamma_next = chain.link(&(&alpha_next * &gj))?;
            seqs.alpha.push(alpha_next);
            seqs.beta.push(beta_next);
            seqs.rho.push(rho_next);
            seqs.gamma.push(gamma_next);
            seqs.scales.push(1.0);
            seqs.order = j + 1;
        }
        if cfg.balance {
            let sigmas: Vec<f64> = seqs.alpha.iter().map(|a| a.norm()).collect();
            seqs = seqs.rescaled(&sigmas)?;
        }
        Ok(seqs)
    }

    /// Same sequences with cascade scaling `α_k ↦ α_k/σ_k`, `ρ_k ↦ ρ_k ∏_{j≤k} σ_j`.
    /// The factors `G_k` are unchanged as transfer functions.
    pub fn rescaled(&self, sigmas: &[f64]) -> Result<Self> {
        if sigmas.len() != self.order {
            return Err(Error::dims("WickSequences::rescaled", self.order, sigmas.len()));
        }
        if let Some(&bad) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::Domain { what: "cascade scale", value: bad, domain: "(0, ∞)".into() });
        }
        let mut out = self.clone();
        out.scales = sigmas.to_vec();
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Order asked for; larger than [`order`](Self::order) after truncation.
    pub fn requested_order(&self) -> usize {
        self.requested
    }

    pub fn alpha(&self, j: usize) -> &Mat {
        &self.alpha[j - 1]
    }
    pub fn beta(&self, j: usize) -> &Mat {
        &self.beta[j]
    }
    pub fn gamma(&self, j: usize) -> &Mat {
        &self.gamma[j]
    }
    pub fn rho(&self, j: usize) -> &Mat {
        &self.rho[j - 1]
    }

    /// `λ_max/λ_min` of `γ_j`; infinite for the link that ended a truncated chain.
    pub fn gamma_condition(&self, j: usize) -> f64 {
        self.gamma_condition[j]
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    fn scale_product(&self, k: usize) -> f64 {
        self.scales[..k].iter().product()
    }

    /// `α_j` as it enters the (possibly rescaled) cascade.
    pub fn cascade_alpha(&self, j: usize) -> Mat {
        self.alpha(j) / self.scales[j - 1]
    }

    /// `ρ_k` as it enters the (possibly rescaled) cascade output.
    pub fn cascade_rho(&self, k: usize) -> Mat {
        self.rho(k) * self.scale_product(k)
    }

    /// `ρ̃_k ρ̃_kᵀ` for the rescaled cascade.
    pub fn cascade_beta(&self, k: usize) -> Mat {
        let s = self.scale_product(k);
        self.beta(k) * (s * s)
    }
}

/// [`WickSequences::build`] as a free function.
pub fn wick_sequences(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<WickSequences> {
    WickSequences::build(sys, order, cfg)
}

/// `‖F‖₂ₖ = ⟨β_k, P_kk⟩^{1/(2k)}` for `k = 1..=order`.
///
/// A singular link `γ_j` truncates the report (with a note) instead of failing.
/// The diagnostic is the relative gap between the recurrence block `P_kk`
/// and the full cascade Gramian, for the orders where that check runs.
pub fn hs_norms_wick(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<NormReport> {
    if order == 0 {
        return Err(Error::UnsupportedOrder { order });
    }
    if sys.is_trivially_zero() {
        let mut report = NormReport::from_powers(NormMethod::Wick, vec![0.0; order], vec![None; order]);
        report.notes.push("transfer function is identically zero".into());
        return Ok(report);
    }
    let seqs = WickSequences::build_truncating(sys, order, cfg)?;
    let grid = gramian_blocks(sys, &seqs, cfg)?;
    let mut powers = Vec::with_capacity(seqs.order());
    for k in 1..=seqs.order() {
        let beta = seqs.cascade_beta(k);
        let pkk = grid.block(k, k);
        let value = inner(&beta, pkk);
        let scale = beta.norm() * pkk.norm();
        if value < -1e-10 * scale {
            return Err(Error::Residual { what: "wick: ⟨β_k, P_kk⟩ negative", residual: value, tolerance: 1e-10 * scale });
        }
        powers.push(value.max(0.0));
    }
    let h2sq = inner(&sys.ctc(), &controllability_gramian(sys, cfg)?);
    let gap = (powers[0] - h2sq).abs() / h2sq.abs().max(f64::MIN_POSITIVE);
    if gap > 1e-8 {
        return Err(Error::InternalConsistency { what: "wick: order-1 norm differs from ‖F‖₂²", gap });
    }
    let diagnostics = (1..=seqs.order()).map(|k| grid.check_gap(k)).collect();
    let mut report = NormReport::from_powers(NormMethod::Wick, powers, diagnostics);
    if seqs.order() < order {
        report.notes.push(format!(
            "cascade truncated at order {}: γ_{} is numerically singular",
            seqs.order(),
            seqs.order()
        ));
    }
    Ok(report)
}
