//! Gaussian integers and small complex-vector helpers.

use num_complex::{Complex, Complex64};

/// An element of Z[i].
pub type GaussInt = Complex<i64>;

/// The four units of Z[i], in the order 1, i, -1, -i.
pub const UNITS: [GaussInt; 4] = [
    GaussInt::new(1, 0),
    GaussInt::new(0, 1),
    GaussInt::new(-1, 0),
    GaussInt::new(0, -1),
];

#[inline]
pub fn to_c64(z: GaussInt) -> Complex64 {
    Complex64::new(z.re as f64, z.im as f64)
}

pub fn vec_to_c64(a: &[GaussInt]) -> Vec<Complex64> {
    a.iter().copied().map(to_c64).collect()
}

#[inline]
pub fn norm_sqr_int(z: GaussInt) -> i64 {
    z.re * z.re + z.im * z.im
}

pub fn vec_norm_sqr_int(a: &[GaussInt]) -> i64 {
    a.iter().copied().map(norm_sqr_int).sum()
}

pub fn vec_norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Hermitian product `<a, b> = a b^H`, conjugating the second argument.
pub fn hermitian(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// True when `arg(z)` lies in the closed sector `[-pi/4, pi/4]`, i.e. `|Im z| <= Re z`.
#[inline]
pub fn in_principal_sector(z: GaussInt) -> bool {
    z.re > 0 && z.im.abs() <= z.re
}

/// Interleaves real and imaginary parts: `(z_1, .., z_n) -> (Re z_1, Im z_1, .., Re z_n, Im z_n)`.
pub fn real_image(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn from_real_image(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

/// A transversal of Z[i]/aZ[i]: `{x + yi : 0 <= x < N/g, 0 <= y < g}` with
/// `N = |a|^2` and `g = gcd(Re a, Im a)`.
pub fn residue_transversal(a: GaussInt) -> Vec<GaussInt> {
    let n = norm_sqr_int(a);
    let g = gcd(a.re.abs(), a.im.abs());
    let (nx, ny) = (n / g, g);
    let mut out = Vec::with_capacity(n as usize);
    for y in 0..ny {
        for x in 0..nx {
            out.push(GaussInt::new(x, y));
        }
    }
    out
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
