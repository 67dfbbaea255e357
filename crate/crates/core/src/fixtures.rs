//! Test systems shipped with the crate.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matlin::{spectral_abscissa, Mat};
use crate::sysmodel::{parse_system, StateSpaceSystem};

pub const MIMO4_JSON: &str = include_str!("../../../fixtures/mimo4.json");
pub const SCALAR_JSON: &str = include_str!("../../../fixtures/scalar.json");
pub const ZERO_INPUT_JSON: &str = include_str!("../../../fixtures/zero_input.json");
pub const RANDOM8_JSON: &str = include_str!("../../../fixtures/random8.json");

/// Seed of the shipped 8-state system.
pub const RANDOM8_SEED: u64 = 8;

/// Four-state, two-input, three-output example with spectrum
/// `{−0.5409 ± 1.2631i, −1.9875, −0.6748}`.
pub fn mimo4() -> StateSpaceSystem {
    parse_system(MIMO4_JSON).expect("shipped fixture parses")
}

/// `A = −1, B = 1, C = 1`, i.e. `F(s) = 1/(s + 1)`.
pub fn scalar() -> StateSpaceSystem {
    parse_system(SCALAR_JSON).expect("shipped fixture parses")
}

/// `A = diag(−1, −2)`, `B = 0`, `C = [1 1]`.
pub fn zero_input() -> StateSpaceSystem {
    parse_system(ZERO_INPUT_JSON).expect("shipped fixture parses")
}

/// Random stable 8-state system with eight inputs and eight outputs.
pub fn random8() -> StateSpaceSystem {
    parse_system(RANDOM8_JSON).expect("shipped fixture parses")
}

/// All shipped fixtures by name.
pub fn all() -> Vec<(&'static str, StateSpaceSystem)> {
    vec![
        ("mimo4", mimo4()),
        ("scalar", scalar()),
        ("zero_input", zero_input()),
        ("random8", random8()),
    ]
}

/// Random stable system: Gaussian entries, with `A` shifted so that its
/// spectral abscissa equals `-margin`.
pub fn random_stable(n: usize, m: usize, p: usize, margin: f64, seed: u64) -> StateSpaceSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |r: usize, c: usize| -> Mat {
        DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
    };
    let g = gauss(n, n) / (n as f64).sqrt();
    let b = gauss(n, m);
    let c = gauss(p, n);
    let shift = spectral_abscissa(&g).expect("finite Gaussian matrix") + margin;
    let a = g - Mat::identity(n, n) * shift;
    StateSpaceSystem::new(a, b, c).expect("consistent dimensions")
}

/// Generator of the shipped 8-state fixture.
///
/// Square `B` and `C` with a unit stability margin keep the cascade links
/// `γ_j` well conditioned (`λ_max/λ_min ≲ 10⁶` through order 6); random
/// systems with only two or three channels typically exceed `10¹⁰` by order 4.
pub fn generate_random8() -> StateSpaceSystem {
    random_stable(8, 8, 8, 1.0, RANDOM8_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::eig_general;
    use crate::sysmodel::system_to_json;

    #[test]
    fn shipped_random8_matches_generator() {
        assert_eq!(random8(), generate_random8());
        let back = parse_system(&system_to_json(&generate_random8())).unwrap();
        assert_eq!(back, generate_random8());
    }

    #[test]
    fn mimo4_dimensions_and_spectrum() {
        let sys = mimo4();
        assert_eq!((sys.n(), sys.m(), sys.p()), (4, 2, 3));
        let eig = eig_general(sys.a()).unwrap();
        let expected = [(-1.9875, 0.0), (-0.6748, 0.0), (-0.5409, -1.2631), (-0.5409, 1.2631)];
        for (l, (re, im)) in eig.iter().zip(expected) {
            assert!((l.re - re).abs() <= 2e-3 && (l.im - im).abs() <= 2e-3, "{l}");
        }
    }

    /// Rewrites `fixtures/random8.json` from the generator.
    #[test]
    #[ignore]
    fn regenerate_random8() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/random8.json");
        crate::sysmodel::save_system(&generate_random8(), path).unwrap();
    }

    #[test]
    fn random8_is_stable() {
        let a = spectral_abscissa(random8().a()).unwrap();
        assert!((a + 1.0).abs() < 1e-9);
    }
}
