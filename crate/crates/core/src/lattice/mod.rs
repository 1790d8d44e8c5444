//! Complex lattices over Z[i]: generators, encoding, nearest-point
//! quantization and reduction modulo the lattice.
//!
//! A lattice is stored by its complex generator rows `g_j` in `C^n`; its
//! points are `u G` with `u` in `Z[i]^k`. Internally every quantizer works on
//! the real image (real and imaginary parts interleaved), where the lattice
//! has the `2k` real basis vectors `g_j` and `i g_j`.

mod codebook;
mod deep_hole;
pub mod e8;

pub use codebook::{LatticeDescription, VoronoiCodebook, DEFAULT_CODEBOOK_LIMIT};
pub use deep_hole::deep_hole_phases;

use crate::enumeration::QuadraticForm;
use crate::error::{Error, Result};
use crate::gaussian::{real_image, to_c64, GaussInt};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::cmp::Ordering;

/// Which nearest-point procedure backs [`ComplexLattice::quantize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerKind {
    /// Coordinate-wise rounding; only valid for `scale * I`.
    Rounding,
    /// Glue decoding of E8 as `D8 u (D8 + 1/2)`.
    E8Fast,
    /// Sphere-decoding enumeration started from Babai rounding.
    GenericEnumeration,
}

/// A point of `C^n`, optionally tagged with the message residues it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<Complex64>,
    pub message: Option<Vec<GaussInt>>,
}

impl LatticePoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self {
            coords,
            message: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComplexLattice {
    name: String,
    k: usize,
    n: usize,
    generator: Vec<Vec<Complex64>>,
    kind: QuantizerKind,
    /// Real multiple of the standard generator for `Rounding` and `E8Fast`.
    scale: f64,
    enumerator: Enumerator,
}

/// Precomputed data for the generic closest-point search.
#[derive(Debug, Clone)]
struct Enumerator {
    /// `2k x 2n` real basis, row-major.
    basis: Vec<f64>,
    /// `2n x 2k`, maps a real target to its real coordinates: `B^T (B B^T)^-1`.
    projector: Vec<f64>,
    form: QuadraticForm,
}

impl Enumerator {
    fn new(generator: &[Vec<Complex64>], n: usize) -> Result<Self> {
        let k = generator.len();
        let (rows, cols) = (2 * k, 2 * n);
        let mut basis = Vec::with_capacity(rows * cols);
        for g in generator {
            basis.extend(real_image(g));
            let ig: Vec<Complex64> = g.iter().map(|z| z * Complex64::i()).collect();
            basis.extend(real_image(&ig));
        }
        let b = DMatrix::from_row_slice(rows, cols, &basis);
        let gram = &b * b.transpose();
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidLattice("generator rows are dependent".into()))?;
        let proj = b.transpose() * gram_inv;
        let mut projector = Vec::with_capacity(cols * rows);
        for i in 0..cols {
            for j in 0..rows {
                projector.push(proj[(i, j)]);
            }
        }
        let gram_rows: Vec<f64> = (0..rows)
            .flat_map(|i| (0..rows).map(move |j| (i, j)))
            .map(|(i, j)| gram[(i, j)])
            .collect();
        let form = QuadraticForm::new(&gram_rows, rows)
            .ok_or_else(|| Error::InvalidLattice("Gram matrix is not positive definite".into()))?;
        Ok(Self {
            basis,
            projector,
            form,
        })
    }

    fn point_of(&self, u: &[i64], cols: usize) -> Vec<f64> {
        let mut p = vec![0.0; cols];
        for (r, &ui) in u.iter().enumerate() {
            if ui != 0 {
                let row = &self.basis[r * cols..(r + 1) * cols];
                for (pj, bj) in p.iter_mut().zip(row) {
                    *pj += ui as f64 * bj;
                }
            }
        }
        p
    }

    /// Exact closest point by enumeration; ties resolve to the
    /// lexicographically smallest real coordinate vector.
    fn closest(&self, y: &[f64]) -> Vec<f64> {
        let cols = y.len();
        let rows = self.form.dim();
        let center: Vec<f64> = (0..rows)
            .map(|j| (0..cols).map(|i| y[i] * self.projector[i * rows + j]).sum())
            .collect();
        let babai: Vec<i64> = center.iter().map(|c| c.round() as i64).collect();
        let start = self.form.eval(&babai, &center);
        let tol = 1e-9 * (1.0 + start);
        let mut best_val = start;
        let mut best_pts: Vec<Vec<f64>> = Vec::new();
        self.form
            .enumerate(&center, start + tol, None, |u, val| {
                if val < best_val - tol {
                    best_val = val;
                    best_pts.clear();
                }
                if val <= best_val + tol {
                    best_pts.push(self.point_of(u, cols));
                }
                best_val + tol
            });
        if best_pts.is_empty() {
            return self.point_of(&babai, cols);
        }
        // drop stragglers admitted before the final incumbent settled
        let dist = |p: &[f64]| -> f64 { p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum() };
        let min_d = best_pts.iter().map(|p| dist(p)).fold(f64::INFINITY, f64::min);
        best_pts
            .into_iter()
            .filter(|p| dist(p) <= min_d + tol)
            .min_by(|a, b| lex_cmp(a, b))
            .unwrap()
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Rounds half toward negative infinity.
#[inline]
pub(crate) fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}

impl ComplexLattice {
    /// A lattice from arbitrary generator rows, decoded by enumeration.
    pub fn from_generator(name: impl Into<String>, generator: Vec<Vec<Complex64>>) -> Result<Self> {
        let k = generator.len();
        if k == 0 {
            return Err(Error::InvalidLattice("empty generator".into()));
        }
        let n = generator[0].len();
        if let Some(bad) = generator.iter().find(|g| g.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        if k > n {
            return Err(Error::InvalidLattice(format!(
                "rank {k} exceeds ambient dimension {n}"
            )));
        }
        if generator.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidLattice("non-finite generator entry".into()));
        }
        let enumerator = Enumerator::new(&generator, n)?;
        Ok(Self {
            name: name.into(),
            k,
            n,
            generator,
            kind: QuantizerKind::GenericEnumeration,
            scale: 1.0,
            enumerator,
        })
    }

    /// `scale * Z[i]^n`, quantized by rounding.
    pub fn cubic(n: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidLattice("scale must be positive".into()));
        }
        let generator = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Complex64::new(if i == j { scale } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        let mut lat = Self::from_generator(format!("cubic_gaussian{n}"), generator)?;
        lat.kind = QuantizerKind::Rounding;
        lat.scale = scale;
        Ok(lat)
    }

    /// The Gosset lattice as a rank-4 Z[i]-lattice in `C^4` whose real image
    /// is the standard E8 (integer or half-integer coordinates, even sum),
    /// multiplied by `scale`.
    pub fn e8(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidLattice("scale must be positive".into()));
        }
        let generator = e8::complex_generator()
            .into_iter()
            .map(|row| row.into_iter().map(|z| z * scale).collect())
            .collect();
        let mut lat = Self::from_generator("e8", generator)?;
        lat.kind = QuantizerKind::E8Fast;
        lat.scale = scale;
        Ok(lat)
    }

    /// Same generator, decoded by the generic enumeration path.
    pub fn with_generic_quantizer(&self) -> Self {
        let mut lat = self.clone();
        lat.kind = QuantizerKind::GenericEnumeration;
        lat
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Complex rank.
    pub fn rank(&self) -> usize {
        self.k
    }

    /// Ambient complex dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generator(&self) -> &[Vec<Complex64>] {
        &self.generator
    }

    pub fn quantizer_kind(&self) -> QuantizerKind {
        self.kind
    }

    pub fn is_full_rank(&self) -> bool {
        self.k == self.n
    }

    /// `u G`, computed exactly.
    pub fn encode(&self, u: &[GaussInt]) -> Result<LatticePoint> {
        if u.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: u.len(),
            });
        }
        let mut x = vec![Complex64::new(0.0, 0.0); self.n];
        for (uj, g) in u.iter().zip(&self.generator) {
            let uj = to_c64(*uj);
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi += uj * gi;
            }
        }
        Ok(LatticePoint::new(x))
    }

    /// Nearest lattice point to `y`.
    pub fn quantize(&self, y: &[Complex64]) -> LatticePoint {
        LatticePoint::new(self.quantize_coords(y))
    }

    pub fn quantize_coords(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.n, "quantize: dimension mismatch");
        match self.kind {
            QuantizerKind::Rounding => {
                let s = self.scale;
                y.iter()
                    .map(|z| {
                        Complex64::new(
                            s * round_half_down(z.re / s),
                            s * round_half_down(z.im / s),
                        )
                    })
                    .collect()
            }
            QuantizerKind::E8Fast => {
                let s = self.scale;
                let mut x = [0.0f64; 8];
                for (i, z) in y.iter().enumerate() {
                    x[2 * i] = z.re / s;
                    x[2 * i + 1] = z.im / s;
                }
                let p = e8::decode(&x);
                (0..4)
                    .map(|i| Complex64::new(s * p[2 * i], s * p[2 * i + 1]))
                    .collect()
            }
            QuantizerKind::GenericEnumeration => {
                let p = self.enumerator.closest(&real_image(y));
                crate::gaussian::from_real_image(&p)
            }
        }
    }

    /// `y - Q(y)`: the representative of `y` in the Voronoi cell of the origin.
    pub fn mod_lattice(&self, y: &[Complex64]) -> Vec<Complex64> {
        let q = self.quantize_coords(y);
        y.iter().zip(&q).map(|(a, b)| a - b).collect()
    }

    /// Nearest point of the scaled lattice `a * self`.
    pub fn quantize_scaled(&self, a: Complex64, y: &[Complex64]) -> Vec<Complex64> {
        let shrunk: Vec<Complex64> = y.iter().map(|z| z / a).collect();
        self.quantize_coords(&shrunk)
            .into_iter()
            .map(|z| z * a)
            .collect()
    }

    /// `y mod a*self`.
    pub fn mod_scaled(&self, a: Complex64, y: &[Complex64]) -> Vec<Complex64> {
        let q = self.quantize_scaled(a, y);
        y.iter().zip(&q).map(|(p, r)| p - r).collect()
    }

    /// True when `y` is (numerically) a lattice point.
    pub fn contains(&self, y: &[Complex64], tol: f64) -> bool {
        self.mod_lattice(y).iter().all(|z| z.norm() <= tol)
    }

    pub fn describe(&self) -> LatticeDescription {
        LatticeDescription::from_lattice(self, None)
    }
}
