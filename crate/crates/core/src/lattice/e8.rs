//! The Gosset lattice E8 in its standard real coordinates and as a
//! rank-4 Z[i]-lattice.
//!
//! Real E8 is `D8 u (D8 + (1/2)^8)`: vectors whose coordinates are all
//! integers or all half-integers, with even coordinate sum. Multiplication by
//! `i` on consecutive coordinate pairs preserves it, so it is a Z[i]-module.

use super::lex_cmp;
use num_complex::Complex64;

const TIE_EPS: f64 = 1e-12;

/// Z[i]-basis whose real image spans exactly E8 (determinant 1).
pub fn complex_generator() -> Vec<Vec<Complex64>> {
    let c = Complex64::new;
    let h = c(0.5, 0.5);
    let z = c(0.0, 0.0);
    vec![
        vec![c(1.0, 1.0), z, z, z],
        vec![c(1.0, 0.0), c(1.0, 0.0), z, z],
        vec![c(1.0, 0.0), z, c(1.0, 0.0), z],
        vec![h, h, h, h],
    ]
}

/// Membership test on the real image: integer-or-half-integer coordinates
/// with even sum.
pub fn is_member(x: &[f64]) -> bool {
    const TOL: f64 = 1e-9;
    if x.len() != 8 {
        return false;
    }
    let all_int = x.iter().all(|v| (v - v.round()).abs() < TOL);
    let all_half = x.iter().all(|v| (v - 0.5 - (v - 0.5).round()).abs() < TOL);
    if !(all_int || all_half) {
        return false;
    }
    let s: f64 = x.iter().sum();
    (s - 2.0 * (s / 2.0).round()).abs() < TOL
}

/// Nearest point of `D8` (integer vectors with even sum); among equally
/// near points the lexicographically smallest.
pub fn decode_d8(x: &[f64; 8]) -> [f64; 8] {
    let mut f = [0.0; 8];
    let mut err = [0.0; 8];
    let mut last_tie = None;
    let mut sum = 0i64;
    for i in 0..8 {
        let fl = x[i].floor();
        let e = x[i] - fl;
        if (e - 0.5).abs() <= TIE_EPS {
            // both neighbours are nearest: take the smaller one for now
            f[i] = fl;
            err[i] = 0.5;
            last_tie = Some(i);
        } else if e < 0.5 {
            f[i] = fl;
            err[i] = e;
        } else {
            f[i] = fl + 1.0;
            err[i] = 1.0 - e;
        }
        sum += f[i] as i64;
    }
    if sum.rem_euclid(2) == 0 {
        return f;
    }
    if let Some(i) = last_tie {
        // raising the last free coordinate keeps every earlier one minimal
        f[i] += 1.0;
        return f;
    }
    // move one coordinate with the largest error to its other neighbour;
    // any move downward beats every move upward, and earlier beats later
    let worst = err.iter().cloned().fold(0.0, f64::max);
    let near = |i: usize| err[i] >= worst - TIE_EPS;
    if let Some(i) = (0..8).find(|&i| near(i) && x[i] <= f[i]) {
        f[i] -= 1.0;
    } else {
        let i = (0..8).rev().find(|&i| near(i)).unwrap();
        f[i] += 1.0;
    }
    f
}

/// Nearest point of E8: the better of the `D8` and `D8 + 1/2` candidates,
/// lexicographically smaller on an exact tie.
pub fn decode(x: &[f64; 8]) -> [f64; 8] {
    let a = decode_d8(x);
    let mut shifted = [0.0; 8];
    for i in 0..8 {
        shifted[i] = x[i] - 0.5;
    }
    let mut b = decode_d8(&shifted);
    for v in &mut b {
        *v += 0.5;
    }
    let da = dist2(x, &a);
    let db = dist2(x, &b);
    if da < db - TIE_EPS || ((da - db).abs() <= TIE_EPS && lex_cmp(&a, &b).is_le()) {
        a
    } else {
        b
    }
}

fn dist2(x: &[f64; 8], y: &[f64; 8]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}
