use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{require_square, Mat};
use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// Orthogonal Schur factorization `m = Q T Qᵀ`.
///
/// On the rare stall of the QR shift strategy the sweep is retried after a
/// few fixed random orthogonal similarities `RᵀmR`, which change the iteration
/// path; the returned `Q` folds the rotation back in.
pub(crate) fn schur_factor(m: &Mat) -> Option<(Mat, Mat)> {
    if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
        return Some(s.unpack());
    }
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4);
    (0..4).find_map(|_| {
        let r = Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
        let (q, t) = Schur::try_new(r.transpose() * m * &r, 4.0 * f64::EPSILON, SCHUR_MAX_ITER)?.unpack();
        Some((r * q, t))
    })
}

/// Diagonal blocks (start, size) of a quasi-upper-triangular Schur factor.
pub(crate) fn diagonal_blocks(t: &Mat) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n {
            let sub = t[(i + 1, i)].abs();
            let scale = t[(i, i)].abs() + t[(i + 1, i + 1)].abs();
            if sub > f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                blocks.push((i, 2));
                i += 2;
                continue;
            }
        }
        blocks.push((i, 1));
        i += 1;
    }
    blocks
}

/// Eigenvalues of the 1×1 and 2×2 diagonal blocks of a real Schur factor.
fn quasi_triangular_eigenvalues(t: &Mat) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(t.nrows());
    for (i, size) in diagonal_blocks(t) {
        if size == 1 {
            out.push(Complex64::new(t[(i, i)], 0.0));
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
        let mean = 0.5 * (a + d);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc >= 0.0 {
            let r = disc.sqrt();
            out.push(Complex64::new(mean - r, 0.0));
            out.push(Complex64::new(mean + r, 0.0));
        } else {
            let r = (-disc).sqrt();
            out.push(Complex64::new(mean, -r));
            out.push(Complex64::new(mean, r));
        }
    }
    out
}

/// All eigenvalues of a real square matrix, with multiplicity, sorted by
/// real part then imaginary part.
pub fn eig_general(m: &Mat) -> Result<Vec<Complex64>> {
    require_square("eig_general", m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("eig_general: non-finite matrix entry".into()));
    }
    // Balancing leaves the spectrum unchanged and helps the QR sweep.
    let mut balanced = m.clone();
    balance_parlett_reinsch(&mut balanced);
    let (_, t) = schur_factor(&balanced).ok_or(Error::Convergence {
        stage: "eig_general: real Schur (Francis double-shift QR)",
    })?;
    let mut eigs = quasi_triangular_eigenvalues(&t);
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eigs)
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(m: &Mat) -> Result<f64> {
    Ok(eig_general(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// True iff every eigenvalue has real part below `-margin`.
pub fn is_hurwitz(m: &Mat, margin: f64) -> Result<bool> {
    Ok(eig_general(m)?.iter().all(|z| z.re < -margin))
}

/// `(λ_min, λ_max)` of the symmetric part of `m`.
pub fn sym_eig_extremes(m: &Mat) -> (f64, f64) {
    if m.is_empty() {
        return (0.0, 0.0);
    }
    let eig = SymmetricEigen::new(super::symmetrize(m)).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let eigs = eig_general(&Mat::identity(3, 3)).unwrap();
        assert!(eigs.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-14));

        let eigs = eig_general(&Mat::from_diagonal(&nalgebra::dvector![-1.0, -2.0])).unwrap();
        assert!((eigs[0].re + 2.0).abs() < 1e-14);
        assert!((eigs[1].re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_rectangular() {
        assert!(matches!(
            eig_general(&Mat::zeros(2, 3)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rotation_has_conjugate_pair_sorted_by_imaginary_part() {
        let m = nalgebra::dmatrix![-1.0, 2.0; -2.0, -1.0];
        let eigs = eig_general(&m).unwrap();
        assert!((eigs[0] - Complex64::new(-1.0, -2.0)).norm() < 1e-12);
        assert!((eigs[1] - Complex64::new(-1.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn hurwitz_boundary() {
        let d = |a: f64, b: f64| Mat::from_diagonal(&nalgebra::dvector![a, b]);
        assert!(is_hurwitz(&d(-1.0, -2.0), 0.0).unwrap());
        assert!(!is_hurwitz(&d(-1.0, 0.0), 0.0).unwrap());
        assert!(!is_hurwitz(&d(-1.0, -2.0), 1.5).unwrap());
    }

    #[test]
    fn hamiltonian_that_stalls_balanced_qr() {
        // Column-major 8×8 Hamiltonian on which the sweep stalls even after balancing.
        let h = Mat::from_column_slice(
            8,
            8,
            &[
                -2.594293736311122, -0.23178154620613614, -0.4805188974054033, 0.22345384690179318,
                -1.7887685817431298, 0.13664097756224175, 1.5480253299421673, -2.259112225270113,
                -0.3639987970701717, -2.5298636262076424, 0.3085013331053609, -0.16840241493767377,
                0.13664097756224175, -0.010437770955799472, -0.11825101163633069, 0.17256972535983836,
                -0.6368512121403148, 0.29524266375964403, -1.8639566859824992, -0.22922787706693176,
                1.5480253299421673, -0.11825101163633069, -1.3396827552769934, 1.955067292434337,
                0.5367246990834331, 0.6163886484333824, -0.24065145923795758, -2.680510601121969,
                -2.259112225270113, 0.17256972535983836, 1.955067292434337, -2.8531292971344033,
                1.2227459751051217, -0.34023624310035844, 0.46632268756238177, -0.6287282724884121,
                2.594293736311122, 0.3639987970701717, 0.6368512121403148, -0.5367246990834331,
                -0.34023624310035844, 0.5506071217019891, 0.11563018571623157, -0.061785606333766306,
                0.23178154620613614, 2.5298636262076424, -0.29524266375964403, -0.6163886484333824,
                0.46632268756238177, 0.11563018571623157, 0.363418397986332, -0.4225843868027504,
                0.4805188974054033, -0.3085013331053609, 1.8639566859824992, 0.24065145923795758,
                -0.6287282724884121, -0.061785606333766306, -0.4225843868027504, 0.503551939565734,
                -0.22345384690179318, 0.16840241493767377, 0.22922787706693176, 2.680510601121969,
            ],
        );
        let eigs = eig_general(&h).unwrap();
        assert_eq!(eigs.len(), 8);
        let trace: f64 = (0..8).map(|i| h[(i, i)]).sum();
        let sum: Complex64 = eigs.iter().sum();
        assert!((sum.re - trace).abs() < 1e-10 && sum.im.abs() < 1e-10);
        for z in &eigs {
            assert!(eigs.iter().any(|w| (w + z.conj()).norm() < 1e-6), "spectrum not Hamiltonian-symmetric at {z}");
        }
    }
}
