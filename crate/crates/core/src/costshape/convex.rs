use std::fmt;
use std::sync::{Arc, OnceLock};

use super::ScalarFn;
use crate::error::{Error, Result};

/// Strictly convex `ψ` on an open interval `(a, b)` with its first two derivatives.
#[derive(Clone)]
pub struct ConvexShape {
    name: String,
    domain: (f64, f64),
    psi: ScalarFn,
    dpsi: ScalarFn,
    d2psi: ScalarFn,
    conjugate: Option<ScalarFn>,
    range: OnceLock<(f64, f64)>,
}

impl fmt::Debug for ConvexShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexShape")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Interior sample points of `(a, b)`, pulled towards any infinite end geometrically.
fn interior_samples(a: f64, b: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| {
            let t = i as f64 / (count + 1) as f64;
            match (a.is_finite(), b.is_finite()) {
                (true, true) => a + (b - a) * t,
                (true, false) => a + (t / (1.0 - t)) * (1.0 + a.abs()),
                (false, true) => b - ((1.0 - t) / t) * (1.0 + b.abs()),
                (false, false) => (t / (1.0 - t)).ln() * 4.0,
            }
        })
        .collect()
}

impl ConvexShape {
    /// Checks `ψ″ > 0` on a sampled grid of the domain.
    pub fn new(
        name: impl Into<String>,
        domain: (f64, f64),
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dpsi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        if !(domain.0 < domain.1) {
            return Err(Error::Input(format!("convex shape {name}: empty domain")));
        }
        for z in interior_samples(domain.0, domain.1, 64) {
            let c = d2psi(z);
            if !(c > 0.0) {
                return Err(Error::Domain {
                    what: "convex shape: ψ″ must be positive",
                    value: z,
                    domain: format!("({}, {})", domain.0, domain.1),
                });
            }
        }
        Ok(Self { name, domain, psi: Arc::new(psi), dpsi: Arc::new(dpsi), d2psi: Arc::new(d2psi), conjugate: None, range: OnceLock::new() })
    }

    /// Attaches a closed form for `ψ_*`, used in place of the numerical transform.
    pub fn with_conjugate(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.conjugate = Some(Arc::new(f));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }
    pub fn psi(&self, z: f64) -> f64 {
        (self.psi)(z)
    }
    pub fn dpsi(&self, z: f64) -> f64 {
        (self.dpsi)(z)
    }
    pub fn d2psi(&self, z: f64) -> f64 {
        (self.d2psi)(z)
    }

    fn end_limit(&self, right: bool) -> f64 {
        let (a, b) = self.domain;
        let end = if right { b } else { a };
        if !end.is_finite() {
            let mut last = f64::NAN;
            for j in 1..=60 {
                let probe = 10f64.powi(5 * j);
                let v = self.dpsi(if right { probe } else { -probe });
                if v.is_finite() {
                    last = v;
                }
            }
            return if last.is_finite() && last.abs() <= 1e12 { last } else { end };
        }
        // Approach the finite end geometrically and keep the last finite value.
        let width = if (b - a).is_finite() { b - a } else { 1.0 + end.abs() };
        let mut last = f64::NAN;
        for j in 1..=16 {
            let off = width * 10f64.powi(-j);
            let z = if right { end - off } else { end + off };
            let v = self.dpsi(z);
            if v.is_finite() {
                last = v;
            }
        }
        if !last.is_finite() || last.abs() > 1e12 {
            if right {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            last
        }
    }

    /// `(ψ′(a+), ψ′(b−))`, the domain of `ψ_*`, probed numerically.
    pub fn derivative_range(&self) -> (f64, f64) {
        *self.range.get_or_init(|| (self.end_limit(false), self.end_limit(true)))
    }

    /// `v(z) = (ψ′)⁻¹(z)` by safeguarded Newton iteration with bisection fallback.
    pub fn inverse_derivative(&self, z: f64) -> Result<f64> {
        let (lo_range, hi_range) = self.derivative_range();
        if !(z > lo_range && z < hi_range) {
            return Err(Error::Domain {
                what: "Legendre transform argument outside ψ′ range",
                value: z,
                domain: format!("({lo_range}, {hi_range})"),
            });
        }
        let (a, b) = self.domain;
        let start = match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (true, false) => a + 1.0 + a.abs(),
            (false, true) => b - 1.0 - b.abs(),
            (false, false) => 0.0,
        };
        let g = |v: f64| self.dpsi(v) - z;
        // Bracket [lo, hi] with g(lo) < 0 < g(hi).
        let (mut lo, mut hi) = (start, start);
        if g(start) < 0.0 {
            let mut step = 1.0 + start.abs();
            for _ in 0..400 {
                hi = if b.is_finite() { hi + 0.5 * (b - hi) } else { hi + step };
                step *= 2.0;
                if g(hi) >= 0.0 {
                    break;
                }
                lo = hi;
            }
        } else {
            let mut step = 1.0 + start.abs();
            for _ in 0..400 {
                lo = if a.is_finite() { lo - 0.5 * (lo - a) } else { lo - step };
                step *= 2.0;
                if g(lo) <= 0.0 {
                    break;
                }
                hi = lo;
            }
        }
        if !(g(lo) <= 0.0 && g(hi) >= 0.0) {
            return Err(Error::Convergence { stage: "Legendre transform: bracketing ψ′(v) = z" });
        }
        let mut v = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gv = g(v);
            if gv == 0.0 {
                return Ok(v);
            }
            if gv < 0.0 {
                lo = v;
            } else {
                hi = v;
            }
            let newton = v - gv / self.d2psi(v);
            let next = if newton >= lo && newton <= hi && newton.is_finite() { newton } else { 0.5 * (lo + hi) };
            if (next - v).abs() <= 1e-14 * v.abs().max(1e-300) || hi - lo <= 1e-15 * v.abs().max(1e-300) {
                return Ok(next);
            }
            v = next;
        }
        // A numerically evaluated ψ′ (as in a double conjugate) is noisy at the
        // rounding level, so the step test may never fire; accept a small residual.
        if g(v).abs() <= 1e-12 * (1.0 + z.abs()) {
            return Ok(v);
        }
        Err(Error::Convergence { stage: "Legendre transform: solving ψ′(v) = z" })
    }

    /// `ψ_*(z) = z v(z) − ψ(v(z))`, or the attached closed form.
    pub fn conjugate_value(&self, z: f64) -> Result<f64> {
        if let Some(f) = &self.conjugate {
            let (lo, hi) = self.derivative_range();
            if !(z > lo && z < hi) {
                return Err(Error::Domain {
                    what: "Legendre transform argument outside ψ′ range",
                    value: z,
                    domain: format!("({lo}, {hi})"),
                });
            }
            return Ok(f(z));
        }
        self.numeric_conjugate_value(z)
    }

    /// `ψ_*(z)` through the inverse derivative, ignoring any closed form.
    pub fn numeric_conjugate_value(&self, z: f64) -> Result<f64> {
        let v = self.inverse_derivative(z)?;
        Ok(z * v - self.psi(v))
    }

    /// The Legendre conjugate `ψ_*` as a convex shape on `(ψ′(a+), ψ′(b−))`,
    /// with `ψ_*′ = v` and `ψ_*″ = 1/ψ″(v)`.
    pub fn conjugate(&self) -> Result<ConvexShape> {
        let domain = self.derivative_range();
        let (s1, s2, s3) = (self.clone(), self.clone(), self.clone());
        let nan_on_err = |r: Result<f64>| r.unwrap_or(f64::NAN);
        ConvexShape::new(
            format!("{}*", self.name),
            domain,
            move |z| nan_on_err(s1.conjugate_value(z)),
            move |z| nan_on_err(s2.inverse_derivative(z)),
            move |z| nan_on_err(s3.inverse_derivative(z).map(|v| 1.0 / s3.d2psi(v))),
        )
    }
}

/// `ψ_*(z)` for a convex shape, always by the numerical transform.
pub fn legendre_conjugate(shape: &ConvexShape, z: f64) -> Result<f64> {
    shape.numeric_conjugate_value(z)
}

/// `ψ(z) = ½(z − 1 − ln z)` on `(0, ∞)`, minimal at `ψ(1) = 0`, with
/// conjugate `ψ_*(z) = −½ ln(1 − 2z)` for `z < ½`.
pub fn kl_shape() -> ConvexShape {
    ConvexShape::new(
        "kl",
        (0.0, f64::INFINITY),
        |z| 0.5 * ((z - 1.0) - (z - 1.0).ln_1p()),
        |z| 0.5 * (1.0 - 1.0 / z),
        |z| 0.5 / (z * z),
    )
    .expect("ψ″ > 0 on (0, ∞)")
    .with_conjugate(|z| -0.5 * (-2.0 * z).ln_1p())
}
