//! Phase precoding: per-user rotations `e^{i phi_l}` applied before
//! transmission, the precoded computation rate, the aligned optimum for a
//! fixed equation, and selection from a finite phase codebook whose indices
//! are fed back to the transmitters.

use crate::coeff_search::{best_below, best_coefficients, Coefficients, SearchProblem};
use crate::cof::{gram_matrix, log2_plus, rate_from_quadratic, ChannelState, NetworkEquation};
use crate::error::{Error, Result};
use crate::gaussian::{norm_sqr_int, vec_norm_sqr_int, GaussInt, UNITS};
use crate::lattice::deep_hole_phases;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

const PHASE_TOL: f64 = 1e-12;
const RATE_TOL: f64 = 1e-12;

/// `diag(e^{i phi_1}, .., e^{i phi_L})` with every `phi_l` in `[-pi/4, pi/4]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePrecoder {
    phases: Vec<f64>,
}

impl PhasePrecoder {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if let Some(p) = phases
            .iter()
            .find(|p| !p.is_finite() || p.abs() > FRAC_PI_4 + PHASE_TOL)
        {
            return Err(Error::InvalidPhaseCodebook(format!(
                "phase {p} outside [-pi/4, pi/4]"
            )));
        }
        Ok(Self { phases })
    }

    pub fn identity(users: usize) -> Self {
        Self {
            phases: vec![0.0; users],
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn users(&self) -> usize {
        self.phases.len()
    }

    pub fn rotations(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|p| Complex64::from_polar(1.0, *p))
            .collect()
    }

    /// `sum |phi_l|`, the secondary key when precoders tie on rate.
    pub fn total_rotation(&self) -> f64 {
        self.phases.iter().map(|p| p.abs()).sum()
    }
}

/// `h' = h Phi`; the SNR is unchanged.
pub fn apply_precoder(cs: &ChannelState, p: &PhasePrecoder) -> ChannelState {
    assert_eq!(cs.users(), p.users(), "precoder size must match the channel");
    let h = cs
        .h()
        .iter()
        .zip(p.rotations())
        .map(|(h, r)| h * r)
        .collect();
    cs.with_h(h)
}

/// `log2+(1 / (a Phi^H M Phi a^H))`.
pub fn pp_rate(cs: &ChannelState, p: &PhasePrecoder, a: &[GaussInt]) -> f64 {
    rate_from_quadratic(gram_matrix(cs).precoded(p.phases()).quadratic_int(a))
}

/// Phases that align every `h_l` with its `a_l`, together with the
/// unit-adjusted coefficients that keep each phase in `[-pi/4, pi/4]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPrecoder {
    pub precoder: PhasePrecoder,
    pub coeffs: Vec<GaussInt>,
}

/// Per user, `phi_l = arg(a_l) - arg(h_l)` reduced by quarter turns into
/// `[-pi/4, pi/4]`; each quarter turn is moved onto `a_l` as a power of `i`.
/// Users with `a_l = 0` or `h_l = 0` get `phi_l = 0`.
pub fn optimal_phases_given_a(cs: &ChannelState, a: &[GaussInt]) -> AlignedPrecoder {
    assert_eq!(cs.users(), a.len());
    let mut phases = Vec::with_capacity(a.len());
    let mut coeffs = Vec::with_capacity(a.len());
    for (h, &al) in cs.h().iter().zip(a) {
        if norm_sqr_int(al) == 0 || h.norm_sqr() == 0.0 {
            phases.push(0.0);
            coeffs.push(al);
            continue;
        }
        let psi = (al.im as f64).atan2(al.re as f64);
        let d = psi - h.arg();
        let k = (-d / FRAC_PI_2).round();
        let phi = (d + k * FRAC_PI_2).clamp(-FRAC_PI_4, FRAC_PI_4);
        let turns = (k as i64).rem_euclid(4) as usize;
        phases.push(phi);
        coeffs.push(al * UNITS[turns]);
    }
    AlignedPrecoder {
        precoder: PhasePrecoder { phases },
        coeffs,
    }
}

/// Precoded rate at the aligned phases:
/// `log2+((1 + rho|h|^2) / (|a|^2 + rho(|h|^2 |a|^2 - (sum_l |h_l||a_l|)^2)))`.
pub fn pp_rate_closed_form(cs: &ChannelState, a: &[GaussInt]) -> f64 {
    let h2 = cs.norm_sqr();
    let a2 = vec_norm_sqr_int(a) as f64;
    let s: f64 = cs
        .h()
        .iter()
        .zip(a)
        .map(|(h, al)| h.norm() * (norm_sqr_int(*al) as f64).sqrt())
        .sum();
    let slack = (h2 * a2 - s * s).max(0.0);
    log2_plus((1.0 + cs.snr() * h2) / (a2 + cs.snr() * slack))
}

/// The finite phase set `S` (sorted, containing 0) shared by `users`
/// transmitters; the codebook is `S^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCodebook {
    phases: Vec<f64>,
    users: usize,
}

impl PhaseCodebook {
    pub fn new(mut phases: Vec<f64>, users: usize) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidPhaseCodebook("need at least one user".into()));
        }
        if let Some(p) = phases
            .iter()
            .find(|p| !p.is_finite() || p.abs() > FRAC_PI_4 + PHASE_TOL)
        {
            return Err(Error::InvalidPhaseCodebook(format!(
                "phase {p} outside [-pi/4, pi/4]"
            )));
        }
        phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
        phases.dedup_by(|a, b| (*a - *b).abs() <= PHASE_TOL);
        if !phases.iter().any(|p| *p == 0.0) {
            return Err(Error::InvalidPhaseCodebook(
                "the phase set must contain 0".into(),
            ));
        }
        Ok(Self { phases, users })
    }

    pub fn deep_hole(max_odd: u32, users: usize) -> Result<Self> {
        Self::new(deep_hole_phases(max_odd)?, users)
    }

    pub fn identity_only(users: usize) -> Self {
        Self {
            phases: vec![0.0],
            users,
        }
    }

    /// Reads a JSON array of phases in radians.
    pub fn from_json(text: &str, users: usize) -> Result<Self> {
        let phases: Vec<f64> = serde_json::from_str(text)?;
        Self::new(phases, users)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.phases).expect("phases serialize")
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// `|S|`.
    pub fn set_size(&self) -> usize {
        self.phases.len()
    }

    /// `|S|^L`.
    pub fn size(&self) -> usize {
        self.phases.len().pow(self.users as u32)
    }

    /// `ceil(log2 |S|)`.
    pub fn bits_per_user(&self) -> u32 {
        let s = self.phases.len();
        if s <= 1 {
            0
        } else {
            usize::BITS - (s - 1).leading_zeros()
        }
    }

    pub fn payload_bits(&self) -> u32 {
        self.bits_per_user() * self.users as u32
    }

    pub fn precoder(&self, indices: &[usize]) -> Result<PhasePrecoder> {
        if indices.len() != self.users {
            return Err(Error::DimensionMismatch {
                expected: self.users,
                got: indices.len(),
            });
        }
        let phases = indices
            .iter()
            .map(|&i| {
                self.phases.get(i).copied().ok_or(Error::IndexOutOfRange {
                    index: i,
                    size: self.phases.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PhasePrecoder { phases })
    }

    /// Index tuples in lexicographic order (last user fastest).
    pub fn index_tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let s = self.phases.len();
        (0..self.size()).map(move |mut c| {
            let mut idx = vec![0; self.users];
            for slot in idx.iter_mut().rev() {
                *slot = c % s;
                c /= s;
            }
            idx
        })
    }
}

/// The precoder chosen at the relay, its equation, and the per-user indices
/// sent back over the feedback link.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSelection {
    pub precoder: PhasePrecoder,
    pub equation: NetworkEquation,
    pub rate: f64,
    pub feedback_indices: Vec<usize>,
    /// Whether any inner coefficient search hit its per-coordinate cap.
    pub truncated: bool,
}

/// Picks the codebook entry with the highest precoded rate, re-optimizing the
/// equation for every entry. Ties go to the smaller `sum |phi_l|`, then to the
/// lexicographically first index tuple.
pub fn select_precoder(cs: &ChannelState, cb: &PhaseCodebook) -> PrecoderSelection {
    select_precoder_with_limit(cs, cb, crate::coeff_search::DEFAULT_ENUM_LIMIT)
}

pub fn select_precoder_with_limit(
    cs: &ChannelState,
    cb: &PhaseCodebook,
    enum_limit: i64,
) -> PrecoderSelection {
    assert_eq!(cs.users(), cb.users(), "codebook size must match the channel");
    let m = gram_matrix(cs);
    let bound = cs.norm_bound();
    let mut best: Option<(Coefficients, PhasePrecoder, Vec<usize>)> = None;
    let mut truncated = false;
    for idx in cb.index_tuples() {
        let p = cb.precoder(&idx).expect("tuple indices are in range");
        let problem = SearchProblem::new(m.precoded(p.phases()), bound).with_enum_limit(enum_limit);
        let found = match &best {
            // only entries reaching the incumbent value (or tying it) matter
            Some((c, _, _)) if c.value < 1.0 => {
                let (f, t) = best_below(&problem, c.value);
                truncated |= t;
                f
            }
            _ => {
                let c = best_coefficients(&problem);
                truncated |= c.truncated;
                Some(c)
            }
        };
        let Some(c) = found else { continue };
        let replace = match &best {
            None => true,
            Some((bc, bp, _)) => {
                let (r, br) = (c.rate(), bc.rate());
                if r > br + RATE_TOL {
                    true
                } else if r >= br - RATE_TOL {
                    // earlier tuples win exact ties on total rotation
                    p.total_rotation() < bp.total_rotation() - PHASE_TOL
                } else {
                    false
                }
            }
        };
        if replace {
            best = Some((c, p, idx));
        }
    }
    let (c, precoder, feedback_indices) = best.expect("codebook is never empty");
    let precoded = apply_precoder(cs, &precoder);
    let equation = NetworkEquation::mmse(&precoded, c.coeffs);
    PrecoderSelection {
        rate: equation.rate,
        precoder,
        equation,
        feedback_indices,
        truncated,
    }
}

/// Rebuilds the precoder a transmitter applies from the fed-back indices.
pub fn feedback_roundtrip(sel: &PrecoderSelection, cb: &PhaseCodebook) -> Result<PhasePrecoder> {
    cb.precoder(&sel.feedback_indices)
}

/// Packs indices LSB-first, `bits` bits each, into little-endian bytes.
pub fn pack_feedback(indices: &[usize], bits: u32) -> Vec<u8> {
    let total = indices.len() * bits as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    for (i, &idx) in indices.iter().enumerate() {
        for b in 0..bits as usize {
            if (idx >> b) & 1 == 1 {
                let pos = i * bits as usize + b;
                out[pos / 8] |= 1 << (pos % 8);
            }
        }
    }
    out
}

pub fn unpack_feedback(payload: &[u8], users: usize, bits: u32) -> Result<Vec<usize>> {
    let need = (users * bits as usize).div_ceil(8);
    if payload.len() < need {
        return Err(Error::DimensionMismatch {
            expected: need,
            got: payload.len(),
        });
    }
    Ok((0..users)
        .map(|i| {
            (0..bits as usize).fold(0usize, |acc, b| {
                let pos = i * bits as usize + b;
                acc | ((((payload[pos / 8] >> (pos % 8)) & 1) as usize) << b)
            })
        })
        .collect())
}
