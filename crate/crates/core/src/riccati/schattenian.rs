use serde::Serialize;

use crate::error::{Error, Result};
use crate::matlin::{inner, symmetrize, Lyapunov, Mat};
use crate::settings::NumericSettings;
use crate::sysmodel::{hinf_norm, NormMethod, NormReport, StateSpaceSystem};

/// Which of the dual recurrences a sequence comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `Ψ_k = 𝓛_{Aᵀ}(Ω_k)`, the `θ`-derivatives of the Riccati solution.
    Observability,
    /// `Φ_k = 𝓛_A(℧_k)`, the dual sequence.
    Controllability,
}

/// `Ψ_k` (or `Φ_k`) for `k = 1..=N`, stored as `Ψ_k/k!`.
///
/// With `T_k = Ψ_k/k!` the bilinear recurrence loses its binomial weights,
/// `T_k = 𝓛(δ_{k1}Ω + Σ_{j=1}^{k−1} T_j ℧ T_{k−j})`, and `T_k` stays bounded
/// by `‖F‖∞^{2k}`-sized quantities, so no factorial is ever formed.
#[derive(Debug, Clone)]
pub struct SchattenianSequence {
    side: Side,
    normalized: Vec<Mat>,
}

impl SchattenianSequence {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn order(&self) -> usize {
        self.normalized.len()
    }

    /// `Ψ_k/k!`.
    pub fn normalized(&self, k: usize) -> &Mat {
        &self.normalized[k - 1]
    }

    /// `Ψ_k` itself; overflows for very large `k`.
    pub fn matrix(&self, k: usize) -> Mat {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.normalized(k) * fact
    }

    /// `Σ_{k≤N} θᵏ Ψ_k/k!`, the Taylor polynomial of `Ψ(θ)`.
    pub fn taylor(&self, theta: f64) -> Mat {
        let n = self.normalized[0].nrows();
        self.normalized.iter().rev().fold(Mat::zeros(n, n), |acc, t| (acc + t) * theta)
    }
}

fn sequence(
    side: Side,
    lyap: &Lyapunov,
    seed: &Mat,
    middle: &Mat,
    order: usize,
) -> Result<SchattenianSequence> {
    let mut normalized: Vec<Mat> = Vec::with_capacity(order);
    for k in 1..=order {
        let mut rhs = if k == 1 { seed.clone() } else { Mat::zeros(seed.nrows(), seed.ncols()) };
        // Pair j with k − j so the sum is symmetric term by term.
        for j in 1..=(k - 1) / 2 {
            let x = &normalized[j - 1] * middle * &normalized[k - j - 1];
            rhs += &x + x.transpose();
        }
        if k % 2 == 0 && k > 1 {
            let h = &normalized[k / 2 - 1];
            rhs += h * middle * h;
        }
        normalized.push(lyap.solve(&symmetrize(&rhs))?);
    }
    Ok(SchattenianSequence { side, normalized })
}

/// `Ψ_k = 𝓛_{Aᵀ}(δ_{k1}Ω + Σ_j C(k,j) Ψ_j℧Ψ_{k−j})`; `Ψ₁ = Q`.
pub fn observability_schattenians(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<SchattenianSequence> {
    if order == 0 {
        return Err(Error::UnsupportedOrder { order });
    }
    let lyap = Lyapunov::new(&sys.a().transpose(), cfg)?;
    sequence(Side::Observability, &lyap, &sys.ctc(), &sys.bbt(), order)
}

/// `Φ_k = 𝓛_A(δ_{k1}℧ + Σ_j C(k,j) Φ_jΩΦ_{k−j})`; `Φ₁ = P`.
pub fn controllability_schattenians(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<SchattenianSequence> {
    if order == 0 {
        return Err(Error::UnsupportedOrder { order });
    }
    let lyap = Lyapunov::new(sys.a(), cfg)?;
    sequence(Side::Controllability, &lyap, &sys.bbt(), &sys.ctc(), order)
}

/// `‖F‖₂ₖ^{2k} = ⟨℧, Ψ_k⟩/(k−1)! = ⟨Ω, Φ_k⟩/(k−1)!`.
///
/// Both sides are computed; the report carries their mean and, as the
/// diagnostic, their relative gap.
pub fn hs_norms_riccati(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<NormReport> {
    let psi = observability_schattenians(sys, order, cfg)?;
    let phi = controllability_schattenians(sys, order, cfg)?;
    let (bbt, ctc) = (sys.bbt(), sys.ctc());
    let mut powers = Vec::with_capacity(order);
    let mut gaps = Vec::with_capacity(order);
    for k in 1..=order {
        let primal = k as f64 * inner(&bbt, psi.normalized(k));
        let dual = k as f64 * inner(&ctc, phi.normalized(k));
        let scale = primal.abs().max(dual.abs());
        let gap = if scale > 0.0 { (primal - dual).abs() / scale } else { 0.0 };
        if gap > 1e-6 {
            return Err(Error::InternalConsistency { what: "riccati: primal and dual Schattenian norms differ", gap });
        }
        powers.push((0.5 * (primal + dual)).max(0.0));
        gaps.push(Some(gap));
    }
    Ok(NormReport::from_powers(NormMethod::Riccati, powers, gaps))
}

/// Partial sums of `Ξ(θ) = ½ Σ_k θᵏ/k ‖F‖₂ₖ^{2k}` with the geometric tail bound
/// `½(‖F‖₂/‖F‖∞)² Σ_{k>N} (θ‖F‖∞²)ᵏ/k`.
#[derive(Debug, Clone, Serialize)]
pub struct RiskSeries {
    pub theta: f64,
    /// `partial_sums[i]` is the sum over `k ≤ i + 1`.
    pub partial_sums: Vec<f64>,
    pub tail_bound: f64,
}

impl RiskSeries {
    pub fn value(&self) -> f64 {
        *self.partial_sums.last().expect("order ≥ 1")
    }
}

pub fn risk_sensitive_series(sys: &StateSpaceSystem, theta: f64, order: usize, cfg: &NumericSettings) -> Result<RiskSeries> {
    let hinf = hinf_norm(sys, cfg.hinf_tol, cfg)?.hi;
    let q = theta * hinf * hinf;
    if !(theta >= 0.0 && q < 1.0) {
        return Err(Error::Domain {
            what: "risk sensitivity θ (must satisfy 0 ≤ θ < 1/‖F‖∞²)",
            value: theta,
            domain: format!("[0, {})", if hinf > 0.0 { 1.0 / (hinf * hinf) } else { f64::INFINITY }),
        });
    }
    let norms = hs_norms_riccati(sys, order, cfg)?;
    let mut acc = 0.0;
    let partial_sums = (1..=order)
        .map(|k| {
            acc += 0.5 * theta.powi(k as i32) / k as f64 * norms.powers[k - 1];
            acc
        })
        .collect();
    let tail_bound = if hinf > 0.0 {
        let ratio = norms.powers[0] / (hinf * hinf);
        0.5 * ratio * q.powi(order as i32 + 1) / ((order + 1) as f64 * (1.0 - q))
    } else {
        0.0
    };
    Ok(RiskSeries { theta, partial_sums, tail_bound })
}
