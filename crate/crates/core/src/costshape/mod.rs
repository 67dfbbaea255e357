//! Cost-shaping functions `φ(z) = Σ φ_k zᵏ` and the covariance-analytic cost
//! `J_φ(F) = (1/2π)∫Tr φ(S(ω)) dω = Σ φ_k ‖F‖₂ₖ^{2k}`.

mod bound;
mod convex;

pub use bound::{worst_case_variance_bound, VarianceBound};
pub use convex::{kl_shape, legendre_conjugate, ConvexShape};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matlin::herm_trace_function;
use crate::quadrature::{integrate_half_line, QuadOptions};
use crate::settings::NumericSettings;
use crate::sysmodel::{hinf_norm, spectral_density, NormMethod, NormReport, StateSpaceSystem};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
struct ClosedForm {
    f: ScalarFn,
    /// Half-open interval `[lo, hi)` on which `f` equals the series.
    valid: (f64, f64),
}

/// Power series `φ(z) = Σ_{k≥1} φ_k zᵏ` with radius of convergence `R`.
#[derive(Clone)]
pub struct CostShape {
    name: String,
    coefficients: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    /// Highest nonzero order for polynomial shapes.
    degree: Option<usize>,
    radius: f64,
    /// `q` with `|φ_{k+1}| ≤ q |φ_k|` for all `k ≥ 1`; used for tail bounds of infinite series.
    ratio_bound: Option<f64>,
    closed_form: Option<ClosedForm>,
}

impl fmt::Debug for CostShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostShape")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .field("degree", &self.degree)
            .finish()
    }
}

impl CostShape {
    /// `φ_θ(z) = −½ ln(1 − θz)`, `φ_k = θᵏ/(2k)`, `R = 1/θ`.
    pub fn risk_sensitive(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Domain { what: "risk-sensitive θ", value: theta, domain: "(0, ∞)".into() });
        }
        Ok(Self {
            name: format!("risk-sensitive:{theta}"),
            coefficients: Arc::new(move |k| theta.powi(k as i32) / (2 * k) as f64),
            degree: None,
            radius: 1.0 / theta,
            ratio_bound: Some(theta),
            closed_form: Some(ClosedForm {
                f: Arc::new(move |z| -0.5 * (-theta * z).ln_1p()),
                valid: (0.0, 1.0 / theta),
            }),
        })
    }

    /// `φ(z) = zᵏ`, giving `J_φ(F) = ‖F‖₂ₖ^{2k}`.
    pub fn power(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::UnsupportedOrder { order: 0 });
        }
        let mut coeffs = vec![0.0; k];
        coeffs[k - 1] = 1.0;
        let mut shape = Self::polynomial(coeffs, None)?;
        shape.name = format!("power:{k}");
        Ok(shape)
    }

    /// `φ(z) = Σ_{k=1}^{K} c_k zᵏ` from `coeffs = [c_1, …, c_K]`. The optional
    /// radius records the analyticity domain of a function these coefficients
    /// were truncated from; without it the radius is infinite.
    pub fn polynomial(coeffs: Vec<f64>, radius: Option<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("coefficient list must be nonempty and finite".into()));
        }
        let radius = radius.unwrap_or(f64::INFINITY);
        if !(radius > 0.0) {
            return Err(Error::Domain { what: "radius of convergence", value: radius, domain: "(0, ∞]".into() });
        }
        let name = format!(
            "coeffs:{}",
            coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        let degree = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        let stored = Arc::new(coeffs);
        let for_eval = Arc::clone(&stored);
        Ok(Self {
            name,
            coefficients: Arc::new(move |k| if k >= 1 && k <= stored.len() { stored[k - 1] } else { 0.0 }),
            degree: Some(degree),
            radius,
            ratio_bound: None,
            closed_form: Some(ClosedForm {
                f: Arc::new(move |z| for_eval.iter().rev().fold(0.0, |acc, c| (acc + c) * z)),
                valid: (0.0, radius),
            }),
        })
    }

    /// Parses `risk-sensitive:θ`, `power:k` or `coeffs:c1,c2,…[@R]`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
        let number = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Input(format!("shape '{text}': '{s}' is not a number")))
        };
        match kind.trim() {
            "risk-sensitive" | "rs" => Self::risk_sensitive(number(arg)?),
            "power" => {
                let k = arg.trim().parse::<usize>().map_err(|_| Error::Input(format!("shape '{text}': bad order")))?;
                Self::power(k)
            }
            "coeffs" => {
                let (list, radius) = match arg.split_once('@') {
                    Some((l, r)) => (l, Some(number(r)?)),
                    None => (arg, None),
                };
                let coeffs = list.split(',').map(number).collect::<Result<Vec<_>>>()?;
                Self::polynomial(coeffs, radius)
            }
            other => Err(Error::Input(format!(
                "unknown shape '{other}' (expected risk-sensitive:θ, power:k or coeffs:c1,c2,…[@R])"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `φ_k`; zero for `k = 0` since `φ(0) = 0`.
    pub fn coefficient(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            (self.coefficients)(k)
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    /// Closed-form value `φ(z)` inside its validity interval.
    pub fn eval(&self, z: f64) -> Result<f64> {
        let cf = self
            .closed_form
            .as_ref()
            .ok_or_else(|| Error::Input(format!("shape {} has no closed form", self.name)))?;
        if !(z >= cf.valid.0 && z < cf.valid.1) {
            return Err(Error::Domain {
                what: "cost shape argument",
                value: z,
                domain: format!("[{}, {})", cf.valid.0, cf.valid.1),
            });
        }
        Ok((cf.f)(z))
    }

    /// `Σ_{k≤order} φ_k zᵏ`.
    pub fn partial_sum(&self, z: f64, order: usize) -> f64 {
        (1..=order).rev().fold(0.0, |acc, k| (acc + self.coefficient(k)) * z)
    }

    /// Bound on `Σ_{k>order} |φ_k| h^{2k−2} ‖F‖₂²` for `h = hinf`, `h2sq = ‖F‖₂²`.
    pub fn tail_bound(&self, order: usize, hinf: f64, h2sq: f64) -> f64 {
        let hsq = hinf * hinf;
        if let Some(deg) = self.degree {
            return (order + 1..=deg).map(|k| self.coefficient(k).abs() * hsq.powi(k as i32 - 1) * h2sq).sum();
        }
        let q = self.ratio_bound.unwrap_or(1.0 / self.radius) * hsq;
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let first = self.coefficient(order + 1).abs() * hsq.powi(order as i32) * h2sq;
        first / (1.0 - q)
    }
}

/// [`CostShape::risk_sensitive`] as a free function.
pub fn risk_sensitive_shape(theta: f64) -> Result<CostShape> {
    CostShape::risk_sensitive(theta)
}

/// Truncated series value with a certified tail bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub order: usize,
}

/// `J_φ(F) ≈ Σ_{k≤order} φ_k ‖F‖₂ₖ^{2k}` from precomputed norms, with tail
/// bound `Σ_{k>order} |φ_k| ‖F‖∞^{2k−2} ‖F‖₂²`.
pub fn cost_series(shape: &CostShape, norms: &NormReport, order: usize, hinf_upper: f64) -> Result<SeriesValue> {
    if order == 0 || order > norms.max_order() {
        return Err(Error::UnsupportedOrder { order });
    }
    let hsq = hinf_upper * hinf_upper;
    if !(hsq < shape.radius()) {
        return Err(Error::Domain {
            what: "cost_series: ‖F‖∞² must lie inside the radius of convergence",
            value: hsq,
            domain: format!("[0, {})", shape.radius()),
        });
    }
    let value = (1..=order).map(|k| shape.coefficient(k) * norms.powers[k - 1]).sum();
    let tail_bound = shape.tail_bound(order, hinf_upper, norms.powers[0]);
    Ok(SeriesValue { value, tail_bound, order })
}

/// Quadrature result for `J_φ(F)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureValue {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

pub(crate) fn quad_options(cfg: &NumericSettings) -> QuadOptions {
    QuadOptions {
        rel_tol: cfg.quad_rel_tol,
        abs_tol: cfg.quad_abs_tol,
        max_subdivisions: cfg.quad_max_subdivisions,
        initial_panels: 16,
    }
}

/// Frequency scale for the half-line map: root mean square of the mode magnitudes.
pub(crate) fn frequency_scale(sys: &StateSpaceSystem) -> Result<f64> {
    let eig = crate::matlin::eig_general(sys.a())?;
    if eig.is_empty() {
        return Ok(1.0);
    }
    let ms = eig.iter().map(|l| l.norm_sqr()).sum::<f64>() / eig.len() as f64;
    Ok(if ms > 0.0 { ms.sqrt() } else { 1.0 })
}

/// `(1/π)∫₀^∞ Tr f(S(ω)) dω`, which equals `(1/2π)∫_ℝ` because `S(−ω) = S(ω)ᵀ`.
pub(crate) fn trace_integral(
    sys: &StateSpaceSystem,
    f: impl Fn(f64) -> f64,
    cfg: &NumericSettings,
) -> Result<QuadratureValue> {
    if sys.is_trivially_zero() {
        return Ok(QuadratureValue { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let integrand = |w: f64| herm_trace_function(&spectral_density(sys, w)?, &f, cfg);
    let r = integrate_half_line(integrand, frequency_scale(sys)?, &quad_options(cfg))?;
    let pi = std::f64::consts::PI;
    Ok(QuadratureValue { value: r.value / pi, error: r.error / pi, evaluations: r.evaluations })
}

/// `J_φ(F) = (1/2π)∫Tr φ(S(ω)) dω` by adaptive quadrature of the closed form.
pub fn cost_quadrature(sys: &StateSpaceSystem, shape: &CostShape, cfg: &NumericSettings) -> Result<QuadratureValue> {
    let cf = shape
        .closed_form
        .as_ref()
        .ok_or_else(|| Error::Input(format!("shape {} has no closed form", shape.name)))?;
    let hinf = hinf_norm(sys, cfg.hinf_tol, cfg)?;
    let hsq = hinf.hi * hinf.hi;
    if !(hsq < cf.valid.1) {
        return Err(Error::Domain {
            what: "cost_quadrature: ‖F‖∞² outside the closed form's validity interval",
            value: hsq,
            domain: format!("[{}, {})", cf.valid.0, cf.valid.1),
        });
    }
    let f = Arc::clone(&cf.f);
    trace_integral(sys, move |z| f(z), cfg)
}

/// `‖F‖₂ₖ` for `k = 1..=order` by quadrature of `Tr S(ω)ᵏ`; the diagnostic is
/// the relative error estimate.
pub fn hs_norms_quadrature(sys: &StateSpaceSystem, order: usize, cfg: &NumericSettings) -> Result<NormReport> {
    if order == 0 {
        return Err(Error::UnsupportedOrder { order });
    }
    let mut powers = Vec::with_capacity(order);
    let mut diagnostics = Vec::with_capacity(order);
    for k in 1..=order {
        let r = trace_integral(sys, |z| z.powi(k as i32), cfg)?;
        powers.push(r.value);
        diagnostics.push(Some(if r.value > 0.0 { r.error / r.value } else { r.error }));
    }
    Ok(NormReport::from_powers(NormMethod::Quadrature, powers, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sysmodel::h2_norm;
    use crate::wick::hs_norms_wick;

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn risk_sensitive_coefficients() {
        let s = CostShape::risk_sensitive(1.0).unwrap();
        assert_eq!(s.coefficient(0), 0.0);
        assert!((s.coefficient(1) - 0.5).abs() < 1e-16);
        assert!((s.coefficient(2) - 0.25).abs() < 1e-16);
        assert!((s.coefficient(3) - 1.0 / 6.0).abs() < 1e-16);
        assert!((s.eval(0.3).unwrap() + 0.5 * 0.7f64.ln()).abs() < 1e-15);
        assert!(s.eval(1.0).is_err());
    }

    #[test]
    fn closed_forms_match_series() {
        let shapes = [
            CostShape::risk_sensitive(0.8).unwrap(),
            CostShape::power(3).unwrap(),
            CostShape::polynomial(vec![1.0, -0.5, 0.25], None).unwrap(),
        ];
        for s in &shapes {
            let r = if s.radius().is_finite() { s.radius() } else { 2.0 };
            for i in 0..10 {
                let z = 0.5 * r * i as f64 / 9.0;
                let series = s.partial_sum(z, 200);
                assert!((series - s.eval(z).unwrap()).abs() <= 1e-10 * series.abs().max(1.0), "{s:?} at {z}");
            }
        }
    }

    #[test]
    fn parse_shapes() {
        assert_eq!(CostShape::parse("risk-sensitive:0.5").unwrap().radius(), 2.0);
        assert_eq!(CostShape::parse("power:2").unwrap().coefficient(2), 1.0);
        let c = CostShape::parse("coeffs:1,0.5@3").unwrap();
        assert_eq!((c.coefficient(1), c.coefficient(2), c.coefficient(3)), (1.0, 0.5, 0.0));
        assert_eq!(c.radius(), 3.0);
        assert!(CostShape::parse("cosh").is_err());
        assert!(CostShape::parse("power:x").is_err());
    }

    #[test]
    fn series_linear_and_quadratic() {
        let sys = fixtures::scalar();
        let norms = hs_norms_wick(&sys, 4, &cfg()).unwrap();
        let lin = cost_series(&CostShape::power(1).unwrap(), &norms, 4, 1.0).unwrap();
        assert!((lin.value - 0.5).abs() < 1e-14 && lin.tail_bound == 0.0);
        let quad = cost_series(&CostShape::power(2).unwrap(), &norms, 4, 1.0).unwrap();
        assert!((quad.value - 0.25).abs() < 1e-14);
    }

    #[test]
    fn series_radius_violation() {
        let norms = hs_norms_wick(&fixtures::scalar(), 4, &cfg()).unwrap();
        let shape = CostShape::risk_sensitive(1.5).unwrap();
        assert!(matches!(cost_series(&shape, &norms, 4, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn quadrature_linear() {
        let r = cost_quadrature(&fixtures::scalar(), &CostShape::power(1).unwrap(), &cfg()).unwrap();
        assert!((r.value - 0.5).abs() < 1e-10);
        let sys = fixtures::mimo4();
        let h2 = h2_norm(&sys, &cfg()).unwrap();
        let r = cost_quadrature(&sys, &CostShape::power(1).unwrap(), &cfg()).unwrap();
        assert!((r.value - h2 * h2).abs() <= 1e-6 * h2 * h2);
    }

    #[test]
    fn scalar_risk_sensitive_three_quarters() {
        // Ξ(3/4) = 1/4 for F(s) = 1/(s+1).
        let shape = CostShape::risk_sensitive(0.75).unwrap();
        let r = cost_quadrature(&fixtures::scalar(), &shape, &cfg()).unwrap();
        assert!((r.value - 0.25).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn quadrature_norms_scalar() {
        let r = hs_norms_quadrature(&fixtures::scalar(), 3, &cfg()).unwrap();
        for (k, e) in [(1, 0.5), (2, 0.25), (3, 3.0 / 16.0)] {
            assert!((r.power(k).unwrap() - e).abs() < 1e-10 * e);
        }
    }

    #[test]
    fn zero_system_costs_nothing() {
        let r = cost_quadrature(&fixtures::zero_input(), &CostShape::risk_sensitive(0.5).unwrap(), &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
