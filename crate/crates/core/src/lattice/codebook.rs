use super::{ComplexLattice, LatticePoint, QuantizerKind};
use crate::error::{Error, Result};
use crate::gaussian::{norm_sqr_int, residue_transversal, to_c64, vec_norm_sqr, GaussInt};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest codebook `build` will enumerate unless told otherwise.
pub const DEFAULT_CODEBOOK_LIMIT: u128 = 1 << 22;

/// The Voronoi constellation `L / aL`, with an energy scale that maps it onto
/// the power constraint.
///
/// Codeword `m` encodes the message whose residues are the base-`N` digits of
/// `m` (first coordinate least significant), `N = |a|^2`.
#[derive(Debug, Clone)]
pub struct VoronoiCodebook {
    base: ComplexLattice,
    scale: GaussInt,
    residues: Vec<GaussInt>,
    codewords: Vec<Vec<Complex64>>,
    avg_energy: f64,
    snr: f64,
    energy_scale: f64,
}

impl VoronoiCodebook {
    pub fn build(base: ComplexLattice, a: GaussInt, snr: f64) -> Result<Self> {
        Self::build_with_limit(base, a, snr, DEFAULT_CODEBOOK_LIMIT)
    }

    pub fn build_with_limit(
        base: ComplexLattice,
        a: GaussInt,
        snr: f64,
        limit: u128,
    ) -> Result<Self> {
        if norm_sqr_int(a) <= 1 {
            return Err(Error::InvalidScale(format!("{a}")));
        }
        if !base.is_full_rank() {
            return Err(Error::InvalidLattice(
                "Voronoi codebooks need a full-rank base lattice".into(),
            ));
        }
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(Error::Config(format!("snr must be positive, got {snr}")));
        }
        let radix = norm_sqr_int(a) as u128;
        let k = base.rank();
        let cardinality = radix
            .checked_pow(k as u32)
            .ok_or(Error::CodebookTooLarge {
                cardinality: u128::MAX,
                limit,
            })?;
        if cardinality > limit {
            return Err(Error::CodebookTooLarge { cardinality, limit });
        }
        let residues = residue_transversal(a);
        let af = to_c64(a);
        let mut codewords = Vec::with_capacity(cardinality as usize);
        let mut u = vec![GaussInt::new(0, 0); k];
        for m in 0..cardinality as usize {
            let mut rest = m;
            for uj in u.iter_mut() {
                *uj = residues[rest % residues.len()];
                rest /= residues.len();
            }
            let x = base.encode(&u)?.coords;
            codewords.push(base.mod_scaled(af, &x));
        }
        let avg_energy =
            codewords.iter().map(|x| vec_norm_sqr(x)).sum::<f64>() / codewords.len() as f64;
        let mut cb = Self {
            base,
            scale: a,
            residues,
            codewords,
            avg_energy,
            snr,
            energy_scale: 0.0,
        };
        cb.energy_scale = cb.energy_scale_at(snr);
        Ok(cb)
    }

    pub fn base(&self) -> &ComplexLattice {
        &self.base
    }

    /// The Gaussian integer `a` with `L' = aL`.
    pub fn scale(&self) -> GaussInt {
        self.scale
    }

    /// `|Z[i]/aZ[i]|`.
    pub fn message_radix(&self) -> usize {
        self.residues.len()
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// Mean of `|x|^2` over the unscaled representatives.
    pub fn average_energy(&self) -> f64 {
        self.avg_energy
    }

    /// `gamma` with `gamma^2 * E_avg = n * rho` at the build SNR.
    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    pub fn energy_scale_at(&self, snr: f64) -> f64 {
        (self.base.dim() as f64 * snr / self.avg_energy).sqrt()
    }

    pub fn codewords(&self) -> &[Vec<Complex64>] {
        &self.codewords
    }

    /// Unscaled representative of message `m`.
    pub fn codeword(&self, m: usize) -> &[Complex64] {
        &self.codewords[m]
    }

    /// Representative together with its message residues.
    pub fn point(&self, m: usize) -> LatticePoint {
        LatticePoint {
            coords: self.codewords[m].clone(),
            message: Some(self.message(m)),
        }
    }

    pub fn message(&self, m: usize) -> Vec<GaussInt> {
        let mut rest = m;
        (0..self.base.rank())
            .map(|_| {
                let r = self.residues[rest % self.residues.len()];
                rest /= self.residues.len();
                r
            })
            .collect()
    }

    /// `y mod aL`.
    pub fn reduce(&self, y: &[Complex64]) -> Vec<Complex64> {
        self.base.mod_scaled(to_c64(self.scale), y)
    }

    /// True when `x - y` lies in `aL`, i.e. both name the same codeword.
    pub fn same_coset(&self, x: &[Complex64], y: &[Complex64]) -> bool {
        let d: Vec<Complex64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        vec_norm_sqr(&self.reduce(&d)) < 1e-12
    }

    /// Information bits per complex channel use.
    pub fn bits_per_complex_use(&self) -> f64 {
        (self.len() as f64).log2() / self.base.dim() as f64
    }

    pub fn describe(&self) -> LatticeDescription {
        LatticeDescription::from_lattice(&self.base, Some(self))
    }
}

/// JSON form of a lattice (and optionally its Voronoi codebook).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LatticeDescription {
    pub name: String,
    pub k: usize,
    pub n: usize,
    pub quantizer: QuantizerKind,
    /// Rows of `G`, each entry as `[re, im]`.
    pub generator: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_a: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits_per_complex_use: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits_per_real_dimension: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_energy: Option<f64>,
}

impl LatticeDescription {
    pub(crate) fn from_lattice(lat: &ComplexLattice, cb: Option<&VoronoiCodebook>) -> Self {
        Self {
            name: lat.name().to_string(),
            k: lat.rank(),
            n: lat.dim(),
            quantizer: lat.quantizer_kind(),
            generator: lat
                .generator()
                .iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            scale_a: cb.map(|c| [c.scale().re, c.scale().im]),
            cardinality: cb.map(|c| c.len()),
            bits_per_complex_use: cb.map(|c| c.bits_per_complex_use()),
            bits_per_real_dimension: cb.map(|c| c.bits_per_complex_use() / 2.0),
            average_energy: cb.map(|c| c.average_energy()),
        }
    }

    /// Rebuilds the lattice. Fast quantizers are only restored when the
    /// generator really is the corresponding scaled standard one.
    pub fn to_lattice(&self) -> Result<ComplexLattice> {
        let g: Vec<Vec<Complex64>> = self
            .generator
            .iter()
            .map(|row| row.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
            .collect();
        if g.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: g.len(),
            });
        }
        let candidate = match self.quantizer {
            QuantizerKind::Rounding if self.k == self.n && self.k > 0 => {
                Some(ComplexLattice::cubic(self.n, g[0][0].re)?)
            }
            QuantizerKind::E8Fast if self.k == 4 && self.n == 4 => {
                Some(ComplexLattice::e8(g[1][0].re)?)
            }
            QuantizerKind::GenericEnumeration => None,
            _ => {
                return Err(Error::InvalidLattice(format!(
                    "quantizer {:?} does not fit a {}x{} generator",
                    self.quantizer, self.k, self.n
                )))
            }
        };
        match candidate {
            Some(lat) => {
                let same = lat
                    .generator()
                    .iter()
                    .flatten()
                    .zip(g.iter().flatten())
                    .all(|(a, b)| (a - b).norm() < 1e-12);
                if !same {
                    return Err(Error::InvalidLattice(format!(
                        "generator does not match the {:?} quantizer",
                        self.quantizer
                    )));
                }
                let mut lat = lat;
                lat.name = self.name.clone();
                Ok(lat)
            }
            None => ComplexLattice::from_generator(self.name.clone(), g),
        }
    }

    pub fn scale(&self) -> Option<GaussInt> {
        self.scale_a.map(|[re, im]| GaussInt::new(re, im))
    }
}
