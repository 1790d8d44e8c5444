//! Compute-and-forward at a single relay: effective noise, the MMSE
//! equalizer, computation rates and the lattice decoder.

use crate::error::{Error, Result};
use crate::gaussian::{hermitian, to_c64, vec_norm_sqr, vec_to_c64, GaussInt};
use crate::lattice::VoronoiCodebook;
use num_complex::Complex64;

/// Fading vector seen by one relay together with the SNR (linear).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    h: Vec<Complex64>,
    snr: f64,
}

impl ChannelState {
    pub fn new(h: Vec<Complex64>, snr: f64) -> Result<Self> {
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(Error::Config(format!("snr must be positive, got {snr}")));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("channel coefficients must be finite".into()));
        }
        Ok(Self { h, snr })
    }

    pub fn h(&self) -> &[Complex64] {
        &self.h
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        vec_norm_sqr(&self.h)
    }

    /// `1 + rho |h|^2`: coefficient vectors longer than this can only reach rate 0.
    pub fn norm_bound(&self) -> f64 {
        1.0 + self.snr * self.norm_sqr()
    }

    pub(crate) fn with_h(&self, h: Vec<Complex64>) -> Self {
        Self { h, snr: self.snr }
    }
}

/// A Gaussian-integer equation with its equalizer and achieved rate (bits).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEquation {
    pub coeffs: Vec<GaussInt>,
    pub alpha: Complex64,
    pub rate: f64,
}

impl NetworkEquation {
    /// The equation for `a` at the MMSE equalizer.
    pub fn mmse(cs: &ChannelState, a: Vec<GaussInt>) -> Self {
        let alpha = mmse_alpha(cs, &a);
        let rate = computation_rate(cs, &a);
        Self {
            coeffs: a,
            alpha,
            rate,
        }
    }
}

/// `rho |alpha h - a|^2 + |alpha|^2`.
pub fn effective_noise_energy(cs: &ChannelState, a: &[GaussInt], alpha: Complex64) -> f64 {
    let mis: f64 = cs
        .h
        .iter()
        .zip(a)
        .map(|(h, a)| (alpha * h - to_c64(*a)).norm_sqr())
        .sum();
    cs.snr * mis + alpha.norm_sqr()
}

/// The equalizer minimizing [`effective_noise_energy`] for a fixed `a`:
/// `rho <a, h> / (1 + rho |h|^2)`, so that `alpha h` points along `a`.
pub fn mmse_alpha(cs: &ChannelState, a: &[GaussInt]) -> Complex64 {
    let a = vec_to_c64(a);
    hermitian(&a, &cs.h) * cs.snr / cs.norm_bound()
}

/// Hermitian `L x L` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    entries: Vec<Complex64>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.size + j]
    }

    /// `a M a^H`.
    pub fn quadratic(&self, a: &[Complex64]) -> f64 {
        let l = self.size;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..l {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..l {
                row += self.entries[i * l + j] * a[j].conj();
            }
            acc += a[i] * row;
        }
        acc.re
    }

    pub fn quadratic_int(&self, a: &[GaussInt]) -> f64 {
        self.quadratic(&vec_to_c64(a))
    }

    /// `Phi^H M Phi` for `Phi = diag(e^{i phi})`.
    pub fn precoded(&self, phases: &[f64]) -> Self {
        let l = self.size;
        let rot: Vec<Complex64> = phases.iter().map(|p| Complex64::from_polar(1.0, *p)).collect();
        let mut entries = self.entries.clone();
        for i in 0..l {
            for j in 0..l {
                entries[i * l + j] = rot[i].conj() * self.entries[i * l + j] * rot[j];
            }
        }
        Self { size: l, entries }
    }

    /// The real `2L x 2L` matrix `A` with `a M a^H = v A v^T`, where `v`
    /// interleaves real and imaginary parts of `a`.
    pub fn real_form(&self) -> Vec<f64> {
        let l = self.size;
        let d = 2 * l;
        let mut a = vec![0.0; d * d];
        for j in 0..l {
            for k in 0..l {
                let m = self.entries[j * l + k];
                let (p, q) = (m.re, m.im);
                a[(2 * j) * d + 2 * k] = p;
                a[(2 * j + 1) * d + 2 * k + 1] = p;
                a[(2 * j) * d + 2 * k + 1] = q;
                a[(2 * j + 1) * d + 2 * k] = -q;
            }
        }
        a
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_row_slice(self.size, self.size, &self.entries);
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

/// `M = I - rho/(1 + rho |h|^2) h^H h`.
pub fn gram_matrix(cs: &ChannelState) -> GramMatrix {
    let l = cs.users();
    let c = cs.snr / cs.norm_bound();
    let mut entries = vec![Complex64::new(0.0, 0.0); l * l];
    for i in 0..l {
        for j in 0..l {
            let id = if i == j { 1.0 } else { 0.0 };
            entries[i * l + j] = Complex64::new(id, 0.0) - cs.h[i].conj() * cs.h[j] * c;
        }
    }
    GramMatrix { size: l, entries }
}

/// `log2+(x)`.
#[inline]
pub fn log2_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.log2()
    } else {
        0.0
    }
}

/// Rate from the value of `a M a^H`.
#[inline]
pub fn rate_from_quadratic(q: f64) -> f64 {
    if q > 0.0 {
        log2_plus(1.0 / q)
    } else {
        0.0
    }
}

/// Rate reached with a given equalizer, `log2+(rho / (rho |alpha h - a|^2 + |alpha|^2))`.
pub fn rate_at_alpha(cs: &ChannelState, a: &[GaussInt], alpha: Complex64) -> f64 {
    log2_plus(cs.snr / effective_noise_energy(cs, a, alpha))
}

/// Computation rate in bits, `log2+(1 / a M a^H)`.
pub fn computation_rate(cs: &ChannelState, a: &[GaussInt]) -> f64 {
    rate_from_quadratic(gram_matrix(cs).quadratic_int(a))
}

/// `Q_L(alpha y / gamma) mod aL`: the relay's estimate of the combination.
///
/// `y` is the received block for transmit symbols scaled by the codebook's
/// energy scale at `cs.snr()`.
pub fn relay_decode(
    cs: &ChannelState,
    y: &[Complex64],
    eq: &NetworkEquation,
    cb: &VoronoiCodebook,
) -> Vec<Complex64> {
    let gamma = cb.energy_scale_at(cs.snr());
    let scaled: Vec<Complex64> = y.iter().map(|z| eq.alpha * z / gamma).collect();
    let q = cb.base().quantize_coords(&scaled);
    cb.reduce(&q)
}

/// `(sum_l a_l x_l) mod aL`.
pub fn true_combination(
    a: &[GaussInt],
    codewords: &[&[Complex64]],
    cb: &VoronoiCodebook,
) -> Result<Vec<Complex64>> {
    if a.len() != codewords.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: codewords.len(),
        });
    }
    let n = cb.base().dim();
    let mut sum = vec![Complex64::new(0.0, 0.0); n];
    for (al, x) in a.iter().zip(codewords) {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let al = to_c64(*al);
        for (s, xi) in sum.iter_mut().zip(x.iter()) {
            *s += al * xi;
        }
    }
    Ok(cb.reduce(&sum))
}
