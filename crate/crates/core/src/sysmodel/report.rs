use serde::Serialize;

/// Route used to evaluate Hardy–Schatten norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMethod {
    Wick,
    Riccati,
    Quadrature,
}

impl NormMethod {
    pub fn name(self) -> &'static str {
        match self {
            NormMethod::Wick => "wick",
            NormMethod::Riccati => "riccati",
            NormMethod::Quadrature => "quadrature",
        }
    }
}

/// Norms `‖F‖₂ₖ` for `k = 1..=orders.len()` with one diagnostic per order.
///
/// The diagnostic is method specific: the realization cross-check gap for
/// Wick, the primal/dual gap for Riccati and the error estimate for quadrature.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub method: NormMethod,
    pub orders: Vec<usize>,
    /// `‖F‖₂ₖ`.
    pub values: Vec<f64>,
    /// `‖F‖₂ₖ^{2k}`.
    pub powers: Vec<f64>,
    /// `None` where the method has no diagnostic for that order.
    pub diagnostics: Vec<Option<f64>>,
    pub notes: Vec<String>,
}

impl NormReport {
    pub(crate) fn from_powers(
        method: NormMethod,
        powers: Vec<f64>,
        diagnostics: Vec<Option<f64>>,
    ) -> Self {
        let orders: Vec<usize> = (1..=powers.len()).collect();
        let values = powers
            .iter()
            .zip(&orders)
            .map(|(&p, &k)| p.max(0.0).powf(1.0 / (2 * k) as f64))
            .collect();
        Self { method, orders, values, powers, diagnostics, notes: Vec::new() }
    }

    pub fn max_order(&self) -> usize {
        self.orders.len()
    }

    /// `‖F‖₂ₖ^{2k}` for a given `k ≥ 1`.
    pub fn power(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.powers.get(i)).copied()
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }
}
