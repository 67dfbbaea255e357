use serde::{Deserialize, Serialize};

/// Which algorithm backs the continuous Lyapunov solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapunovMethod {
    /// Kronecker-vectorised dense solve, `(I⊗A + A⊗I) vec V = -vec U`.
    Kronecker,
    /// Real Schur reduction followed by block back substitution.
    Schur,
    /// Kronecker up to `kronecker_max_order`, Schur beyond.
    Auto,
}

/// Numerical tolerances shared by every module.
///
/// The defaults are the contract values; callers override individual
/// fields when probing sensitivity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericSettings {
    /// Relative symmetry tolerance for inputs that must be symmetric.
    pub symmetry_tol: f64,
    /// Relative Hermitian tolerance for `HermitianMatrix` construction.
    pub hermitian_tol: f64,
    /// Lyapunov residual bound, relative to `max(1, ‖U‖_F)`.
    pub lyapunov_residual_tol: f64,
    pub lyapunov_method: LyapunovMethod,
    pub kronecker_max_order: usize,
    /// Eigenvalues below `psd_rank_tol * λ_max` are dropped from square-root factors.
    pub psd_rank_tol: f64,
    /// Allowed negative eigenvalue of a PSD input, relative to its norm.
    pub psd_negative_tol: f64,
    /// Singular values below `controllability_tol * σ_max` count as zero.
    pub controllability_tol: f64,
    /// `γ_j` is singular once `λ_min/λ_max` drops to this ratio.
    pub gamma_singular_tol: f64,
    /// Largest cascade order cross-checked against the full Gramian.
    pub n_check: usize,
    /// Relative tolerance of the recurrence/full Gramian agreement.
    pub gramian_grid_tol: f64,
    /// Apply the `σ_k = ‖α_k‖_F` balancing to the Wick sequences.
    pub balance: bool,
    /// Relative width of the H∞ bracket.
    pub hinf_tol: f64,
    /// Points of the logarithmic grid used to cross-check the H∞ bisection.
    pub hinf_grid_points: usize,
    /// Riccati residual bound, relative to `max(1, θ‖Ω‖_F)`.
    pub riccati_residual_tol: f64,
    /// Relative and absolute targets of the frequency-domain quadrature.
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    pub quad_max_subdivisions: usize,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self {
            symmetry_tol: 1e-10,
            hermitian_tol: 1e-12,
            lyapunov_residual_tol: 1e-8,
            lyapunov_method: LyapunovMethod::Auto,
            kronecker_max_order: 16,
            psd_rank_tol: 1e-10,
            psd_negative_tol: 1e-10,
            controllability_tol: 1e-8,
            gamma_singular_tol: 1e-10,
            n_check: 6,
            gramian_grid_tol: 1e-8,
            balance: false,
            hinf_tol: 1e-10,
            hinf_grid_points: 10_000,
            riccati_residual_tol: 1e-8,
            quad_rel_tol: 1e-10,
            quad_abs_tol: 1e-15,
            quad_max_subdivisions: 4000,
        }
    }
}
