//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13, selected from the 1-norm.

use super::{require_square, Mat};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(m: &Mat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^M` for a real square matrix.
pub fn expm(m: &Mat) -> Result<Mat> {
    let n = require_square("expm", m)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("expm: non-finite matrix entry".into()));
    }
    let ident = Mat::identity(n, n);
    let norm = one_norm(m);

    for &(deg, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(m, coeffs, &ident);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(Error::Domain {
            what: "expm: matrix norm",
            value: norm,
            domain: "finite exponential in double precision".into(),
        });
    }
    let scaled = m * 2f64.powi(-s);
    let mut r = pade13(&scaled, &ident)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain {
            what: "expm: matrix norm",
            value: norm,
            domain: "finite exponential in double precision".into(),
        });
    }
    Ok(r)
}

fn solve_pade(u: &Mat, v: &Mat) -> Result<Mat> {
    // (V - U)^{-1} (V + U)
    let den = v - u;
    let num = v + u;
    den.lu().solve(&num).ok_or(Error::Convergence {
        stage: "expm: singular Padé denominator",
    })
}

fn pade_low(a: &Mat, b: &[f64], ident: &Mat) -> Result<Mat> {
    let a2 = a * a;
    let mut even = ident * b[0];
    let mut odd = ident * b[1];
    let mut power = ident.clone();
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        even += &power * b[2 * k];
        odd += &power * b[2 * k + 1];
    }
    let u = a * odd;
    solve_pade(&u, &even)
}

fn pade13(a: &Mat, ident: &Mat) -> Result<Mat> {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    solve_pade(&u, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn rel(a: &Mat, b: &Mat) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn zero_gives_identity() {
        assert_eq!(expm(&Mat::zeros(2, 2)).unwrap(), Mat::identity(2, 2));
    }

    #[test]
    fn diagonal() {
        let e = expm(&Mat::from_diagonal(&dvector![1.0, -1.0])).unwrap();
        let expected = Mat::from_diagonal(&dvector![1f64.exp(), (-1f64).exp()]);
        assert!(rel(&e, &expected) < 1e-14);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let e = expm(&dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap();
        assert!(rel(&e, &dmatrix![1.0, 1.0; 0.0, 1.0]) < 1e-15);
    }

    #[test]
    fn rotation_generator_all_degrees() {
        // e^{t[[0,1],[-1,0]]} = [[cos t, sin t], [-sin t, cos t]] for every Padé branch.
        for &t in &[1e-3, 0.2, 0.9, 2.0, 5.0, 40.0] {
            let e = expm(&(dmatrix![0.0, 1.0; -1.0, 0.0] * t)).unwrap();
            let expected = dmatrix![t.cos(), t.sin(); -t.sin(), t.cos()];
            assert!((e - expected).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn overflow_reported() {
        let m = Mat::from_diagonal(&dvector![1e4, 0.0]);
        assert!(matches!(expm(&m), Err(Error::Domain { .. })));
    }
}
