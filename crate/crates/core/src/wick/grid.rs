use super::WickSequences;
use crate::error::{Error, Result};
use crate::matlin::{symmetrize, Lyapunov, Mat};
use crate::settings::{LyapunovMethod, NumericSettings};
use crate::sysmodel::StateSpaceSystem;

/// Blocks `P_jk`, `1 ≤ j ≤ k ≤ N`, of the cascade Gramian.
#[derive(Debug, Clone)]
pub struct GramianGrid {
    order: usize,
    /// `blocks[k-1][j-1] = P_jk`.
    blocks: Vec<Vec<Mat>>,
    /// Relative gap of the diagonal blocks against the full Gramian, where checked.
    check_gaps: Vec<Option<f64>>,
}

impl GramianGrid {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `P_jk` for `j ≤ k`.
    pub fn block(&self, j: usize, k: usize) -> &Mat {
        assert!(1 <= j && j <= k && k <= self.order, "block ({j}, {k}) outside grid of order {}", self.order);
        &self.blocks[k - 1][j - 1]
    }

    /// Largest relative gap, over blocks in block-column `k`, between the
    /// recurrence and the full cascade Gramian; `None` beyond the check depth.
    pub fn check_gap(&self, k: usize) -> Option<f64> {
        self.check_gaps.get(k - 1).copied().flatten()
    }
}

/// Block-bidiagonal cascade matrix `𝒜_N` with `A` on the diagonal and `α_j` at block `(j, j−1)`.
pub(crate) fn cascade_matrix(a: &Mat, seqs: &WickSequences, order: usize) -> Mat {
    let n = a.nrows();
    let mut big = Mat::zeros(n * order, n * order);
    for j in 0..order {
        big.view_mut((j * n, j * n), (n, n)).copy_from(a);
        if j > 0 {
            big.view_mut((j * n, (j - 1) * n), (n, n)).copy_from(&seqs.cascade_alpha(j + 1));
        }
    }
    big
}

/// Input matrix `ℬ_N = [α₁Cᵀ; 0; …; 0]`.
pub(crate) fn cascade_input(sys: &StateSpaceSystem, seqs: &WickSequences, order: usize) -> Mat {
    let n = sys.n();
    let mut b = Mat::zeros(n * order, sys.p());
    b.view_mut((0, 0), (n, sys.p())).copy_from(&(seqs.cascade_alpha(1) * sys.c().transpose()));
    b
}

/// Recurrence `P₁₁ = 𝓛(α₁Ωα₁ᵀ)`, `P_1k = 𝓛(P_{1,k−1}α_kᵀ)`,
/// `P_jk = 𝓛(α_j P_{j−1,k} + P_{j,k−1} α_kᵀ)` for `1 < j < k` and
/// `P_kk = 𝓛(α_k P_{k−1,k} + P_{k−1,k}ᵀ α_kᵀ)`, cross-checked against the full Lyapunov equation of `(𝒜_N, ℬ_N)` for
/// the first `n_check` orders.
pub fn gramian_blocks(sys: &StateSpaceSystem, seqs: &WickSequences, cfg: &NumericSettings) -> Result<GramianGrid> {
    let order = seqs.order();
    let lyap = Lyapunov::new(sys.a(), cfg)?;
    let alphas: Vec<Mat> = (1..=order).map(|j| seqs.cascade_alpha(j)).collect();
    let mut blocks: Vec<Vec<Mat>> = Vec::with_capacity(order);

    let a1c = &alphas[0] * sys.c().transpose();
    blocks.push(vec![lyap.solve(&(&a1c * a1c.transpose()))?]);
    for k in 2..=order {
        let ak_t = alphas[k - 1].transpose();
        let mut column: Vec<Mat> = Vec::with_capacity(k);
        for j in 1..=k {
            let block = if j == 1 {
                lyap.solve_general(&(&blocks[k - 2][0] * &ak_t))?
            } else if j < k {
                let rhs = &alphas[j - 1] * &column[j - 2] + &blocks[k - 2][j - 1] * &ak_t;
                lyap.solve_general(&rhs)?
            } else {
                let x = &alphas[k - 1] * &column[k - 2];
                lyap.solve(&symmetrize(&(&x + x.transpose())))?
            };
            column.push(block);
        }
        blocks.push(column);
    }

    let depth = order.min(cfg.n_check);
    let mut check_gaps = vec![None; order];
    if depth > 0 {
        let gaps = full_check(sys, seqs, &blocks, depth, cfg)?;
        for (slot, g) in check_gaps.iter_mut().zip(gaps) {
            *slot = Some(g);
        }
    }
    Ok(GramianGrid { order, blocks, check_gaps })
}

/// Solves the full `nN × nN` Lyapunov equation of `(𝒜_N, ℬ_N)` and compares
/// it block by block with the recurrence.
///
/// Unbalanced cascades have diagonal blocks spanning many orders of
/// magnitude, so the full equation is solved for the block-diagonally
/// rescaled state `x̃_j = x_j/d_j` with `d_j = √‖P_jj‖`. The similarity is
/// exact; it only keeps the reference solve from losing the small blocks.
fn full_check(
    sys: &StateSpaceSystem,
    seqs: &WickSequences,
    blocks: &[Vec<Mat>],
    depth: usize,
    cfg: &NumericSettings,
) -> Result<Vec<f64>> {
    let n = sys.n();
    let d: Vec<f64> = (0..depth)
        .map(|j| {
            let norm = blocks[j][j].norm().sqrt();
            if norm > 0.0 && norm.is_finite() { norm } else { 1.0 }
        })
        .collect();
    let mut big_a = cascade_matrix(sys.a(), seqs, depth);
    let mut big_b = cascade_input(sys, seqs, depth);
    for j in 1..depth {
        let mut sub = big_a.view_mut((j * n, (j - 1) * n), (n, n));
        sub *= d[j - 1] / d[j];
    }
    {
        let mut top = big_b.view_mut((0, 0), (n, sys.p()));
        top /= d[0];
    }
    let mut check_cfg = cfg.clone();
    check_cfg.lyapunov_method = if n * depth <= 32 { LyapunovMethod::Kronecker } else { LyapunovMethod::Schur };
    let full = Lyapunov::new(&big_a, &check_cfg)?.solve(&(&big_b * big_b.transpose()))?;
    let floor = 1e-14 * full.norm();
    let mut gaps = Vec::with_capacity(depth);
    for k in 1..=depth {
        let mut worst: f64 = 0.0;
        for j in 1..=k {
            let reference = full.view(((j - 1) * n, (k - 1) * n), (n, n));
            let scaled = &blocks[k - 1][j - 1] / (d[j - 1] * d[k - 1]);
            let gap = (scaled - reference).norm() / (reference.norm() + floor).max(f64::MIN_POSITIVE);
            worst = worst.max(gap);
        }
        if worst > 1e-8 {
            return Err(Error::InternalConsistency { what: "wick: Gramian recurrence differs from full cascade Gramian", gap: worst });
        }
        gaps.push(worst);
    }
    Ok(gaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn scalar_blocks_by_hand() {
        let sys = fixtures::scalar();
        let seqs = WickSequences::build(&sys, 3, &cfg()).unwrap();
        let g = gramian_blocks(&sys, &seqs, &cfg()).unwrap();
        let v = |j, k| g.block(j, k)[(0, 0)];
        let expect = [
            ((1, 1), 1.0 / 8.0),
            ((1, 2), 1.0 / 32.0),
            ((2, 2), 1.0 / 64.0),
            ((1, 3), 1.0 / 128.0),
            ((2, 3), 3.0 / 512.0),
            ((3, 3), 3.0 / 1024.0),
        ];
        for ((j, k), e) in expect {
            assert!((v(j, k) - e).abs() <= 1e-14 * e, "P_{j}{k} = {} vs {e}", v(j, k));
        }
    }

    #[test]
    fn p11_is_gamma1() {
        let sys = fixtures::mimo4();
        let seqs = WickSequences::build(&sys, 2, &cfg()).unwrap();
        let g = gramian_blocks(&sys, &seqs, &cfg()).unwrap();
        assert!((g.block(1, 1) - seqs.gamma(1)).norm() <= 1e-12 * seqs.gamma(1).norm());
    }

    #[test]
    fn full_check_runs_to_depth() {
        let sys = fixtures::mimo4();
        let seqs = WickSequences::build(&sys, 8, &cfg()).unwrap();
        let g = gramian_blocks(&sys, &seqs, &cfg()).unwrap();
        for k in 1..=6 {
            assert!(g.check_gap(k).unwrap() <= 1e-8);
        }
        assert!(g.check_gap(7).is_none());
    }
}
