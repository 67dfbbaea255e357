use num_complex::Complex64;
use serde::Serialize;

use super::{transfer, StateSpaceSystem};
use crate::error::{Error, Result};
use crate::matlin::{eig_general, op_norm_complex, spectral_abscissa, Mat};
use crate::settings::NumericSettings;

/// Certified bracket `lo ≤ ‖F‖∞ ≤ hi` with `hi − lo ≤ tol·hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HinfBracket {
    pub lo: f64,
    pub hi: f64,
    /// Frequency at which `lo` was attained.
    pub peak_frequency: f64,
    /// Maximum over the dense log grid after local refinement.
    pub grid_max: f64,
}

impl HinfBracket {
    pub fn upper(&self) -> f64 {
        self.hi
    }
}

fn gain(sys: &StateSpaceSystem, omega: f64) -> Result<f64> {
    Ok(op_norm_complex(&transfer(sys, Complex64::new(0.0, omega))?))
}

fn eigen_magnitudes(sys: &StateSpaceSystem) -> Result<Vec<f64>> {
    Ok(eig_general(sys.a())?.iter().map(|l| l.norm()).collect())
}

/// Default search window: at least `[10⁻³, 10³]`, widened by three decades around the modes of `A`.
fn grid_window(sys: &StateSpaceSystem) -> Result<(f64, f64)> {
    let mags = eigen_magnitudes(sys)?;
    let lo = mags.iter().copied().filter(|&x| x > 0.0).fold(1.0, f64::min);
    let hi = mags.iter().copied().fold(1.0, f64::max);
    Ok((1e-3 * lo, 1e3 * hi))
}

fn golden_max(f: &mut dyn FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..200 {
        if (b - a) <= 1e-13 * b.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (f1, x1) } else { (f2, x2) })
}

/// Maximum of `‖F(iω)‖` over `ω = 0` and `points` log-spaced frequencies on `[w_lo, w_hi]`.
/// With `refine`, the best grid cells are polished by golden-section search.
/// Returns `(value, frequency)`.
pub fn hinf_grid_max(
    sys: &StateSpaceSystem,
    w_lo: f64,
    w_hi: f64,
    points: usize,
    refine: bool,
) -> Result<(f64, f64)> {
    let points = points.max(2);
    let ratio = (w_hi / w_lo).ln() / (points - 1) as f64;
    let omegas: Vec<f64> = (0..points).map(|i| w_lo * (ratio * i as f64).exp()).collect();
    let values = omegas
        .iter()
        .map(|&w| gain(sys, w))
        .collect::<Result<Vec<_>>>()?;
    let mut best = (gain(sys, 0.0)?, 0.0);
    for (&w, &v) in omegas.iter().zip(&values) {
        if v > best.0 {
            best = (v, w);
        }
    }
    if !refine {
        return Ok(best);
    }
    let mut peaks: Vec<usize> = (0..points)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
            let right = if i + 1 == points { f64::NEG_INFINITY } else { values[i + 1] };
            values[i] >= left && values[i] >= right
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    peaks.truncate(5);
    let mut f = |w: f64| gain(sys, w);
    for i in peaks {
        let a = if i == 0 { 0.0 } else { omegas[i - 1] };
        let b = if i + 1 == points { omegas[i] } else { omegas[i + 1] };
        let (v, w) = golden_max(&mut f, a, b)?;
        if v > best.0 {
            best = (v, w);
        }
    }
    Ok(best)
}

fn hamiltonian(a: &Mat, bbt: &Mat, ctc: &Mat, gamma: f64) -> Mat {
    let n = a.nrows();
    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(bbt / (gamma * gamma)));
    h.view_mut((n, 0), (n, n)).copy_from(&(-ctc));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    h
}

/// `‖F‖∞` by the level-set iteration on imaginary-axis eigenvalues of the
/// Hamiltonian `[[A, BBᵀ/γ²], [−CᵀC, −Aᵀ]]`, followed by a dense grid cross-check.
///
/// Every lower bound is an actual gain evaluation; the upper bound is the first
/// level `γ` whose Hamiltonian has no imaginary eigenvalues.
pub fn hinf_norm(sys: &StateSpaceSystem, tol: f64, cfg: &NumericSettings) -> Result<HinfBracket> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain {
            what: "hinf_norm: tol",
            value: tol,
            domain: "(0, 1)".into(),
        });
    }
    let abscissa = spectral_abscissa(sys.a())?;
    if sys.n() > 0 && abscissa >= 0.0 {
        return Err(Error::NotHurwitz { context: "hinf_norm", max_real: abscissa });
    }
    if sys.n() == 0 || sys.is_trivially_zero() {
        return Ok(HinfBracket { lo: 0.0, hi: 0.0, peak_frequency: 0.0, grid_max: 0.0 });
    }

    let (w_lo, w_hi) = grid_window(sys)?;
    let mut best = hinf_grid_max(sys, w_lo, w_hi, 64, false)?;
    for l in eig_general(sys.a())? {
        for w in [l.im.abs(), l.norm()] {
            let v = gain(sys, w)?;
            if v > best.0 {
                best = (v, w);
            }
        }
    }
    if best.0 == 0.0 {
        return Ok(HinfBracket { lo: 0.0, hi: 0.0, peak_frequency: 0.0, grid_max: 0.0 });
    }

    let (bbt, ctc) = (sys.bbt(), sys.ctc());
    let mut hi = None;
    for _ in 0..200 {
        let gamma = best.0 * (1.0 + tol);
        let h = hamiltonian(sys.a(), &bbt, &ctc, gamma);
        let threshold = 1e-8 * h.norm();
        let mut crossings: Vec<f64> = eig_general(&h)?
            .into_iter()
            .filter(|l| l.re.abs() <= threshold && l.im >= 0.0)
            .map(|l| l.im)
            .collect();
        if crossings.is_empty() {
            hi = Some(gamma);
            break;
        }
        crossings.sort_by(f64::total_cmp);
        let mut probes = crossings.clone();
        probes.extend(crossings.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        let previous = best.0;
        for w in probes {
            let v = gain(sys, w)?;
            if v > best.0 {
                best = (v, w);
            }
        }
        if best.0 <= previous * (1.0 + 0.25 * tol) {
            // Crossings persist without raising the level: they are
            // indistinguishable from a tangency at the current resolution.
            hi = Some(gamma.max(best.0 * (1.0 + tol)));
            break;
        }
    }
    let hi = hi.ok_or(Error::Convergence { stage: "hinf_norm level-set iteration" })?;
    let lo = best.0;

    let (grid_max, grid_w) = hinf_grid_max(sys, w_lo, w_hi, cfg.hinf_grid_points, true)?;
    if grid_max > hi * (1.0 + 1e-9) {
        return Err(Error::InternalConsistency {
            what: "hinf_norm: grid maximum above certified upper bound",
            gap: grid_max / hi - 1.0,
        });
    }
    let (lo, peak_frequency) = if grid_max > lo { (grid_max.min(hi), grid_w) } else { (lo, best.1) };
    Ok(HinfBracket { lo, hi, peak_frequency, grid_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sysmodel::scale_output;

    fn cfg() -> NumericSettings {
        NumericSettings::default()
    }

    #[test]
    fn scalar_is_one_at_dc() {
        let b = hinf_norm(&fixtures::scalar(), 1e-10, &cfg()).unwrap();
        assert!(b.lo <= 1.0 + 1e-14 && 1.0 <= b.hi, "{b:?}");
        assert!(b.hi - b.lo <= 1e-10 * b.hi);
        assert!(b.peak_frequency.abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn homogeneity() {
        let sys = fixtures::mimo4();
        let one = hinf_norm(&sys, 1e-10, &cfg()).unwrap();
        let two = hinf_norm(&scale_output(&sys, 2.0).unwrap(), 1e-10, &cfg()).unwrap();
        assert!((two.hi / one.hi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mimo4_bracket_against_grid() {
        let sys = fixtures::mimo4();
        let b = hinf_norm(&sys, 1e-10, &cfg()).unwrap();
        assert!(b.hi - b.lo <= 1e-10 * b.hi);
        let (raw, _) = hinf_grid_max(&sys, 1e-3, 1e3, 10_000, false).unwrap();
        assert!(raw <= b.hi * (1.0 + 1e-12));
        assert!(raw >= b.lo * (1.0 - 1e-5));
        let (refined, _) = hinf_grid_max(&sys, 1e-3, 1e3, 10_000, true).unwrap();
        assert!(refined >= b.lo * (1.0 - 1e-12) && refined <= b.hi * (1.0 + 1e-12));
    }

    #[test]
    fn zero_system_is_zero() {
        let b = hinf_norm(&fixtures::zero_input(), 1e-10, &cfg()).unwrap();
        assert_eq!((b.lo, b.hi), (0.0, 0.0));
    }

    #[test]
    fn lightly_damped_peak() {
        // Resonance at ω ≈ 1 with damping 0.01: ‖F‖∞ = 1/(2ζ√(1−ζ²)).
        let zeta: f64 = 0.01;
        let sys = StateSpaceSystem::new(
            nalgebra::dmatrix![0.0, 1.0; -1.0, -2.0 * zeta],
            nalgebra::dmatrix![0.0; 1.0],
            nalgebra::dmatrix![1.0, 0.0],
        )
        .unwrap();
        let exact = 1.0 / (2.0 * zeta * (1.0 - zeta * zeta).sqrt());
        let b = hinf_norm(&sys, 1e-10, &cfg()).unwrap();
        assert!(b.lo <= exact * (1.0 + 1e-12) && exact <= b.hi * (1.0 + 1e-12), "{b:?} vs {exact}");
    }

    #[test]
    fn unstable_rejected() {
        let sys = StateSpaceSystem::new(
            nalgebra::dmatrix![0.5],
            nalgebra::dmatrix![1.0],
            nalgebra::dmatrix![1.0],
        )
        .unwrap();
        assert!(matches!(hinf_norm(&sys, 1e-10, &cfg()), Err(Error::NotHurwitz { .. })));
    }
}
