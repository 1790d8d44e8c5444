//! Search for the Gaussian-integer vector `a != 0` minimizing `a M' a^H`.
//!
//! The Hermitian form is rewritten as a real form on the interleaved
//! coordinates and searched with radius-pruned enumeration. Only vectors
//! whose first nonzero entry has argument in `[-pi/4, pi/4]` are reported;
//! every other vector is a unit multiple of one of those with the same value.

use crate::cof::{gram_matrix, rate_from_quadratic, ChannelState, GramMatrix, NetworkEquation};
use crate::enumeration::QuadraticForm;
use crate::gaussian::{in_principal_sector, norm_sqr_int, vec_norm_sqr_int, GaussInt};
use std::cmp::Ordering;

/// Default cap on `|a_l|`.
pub const DEFAULT_ENUM_LIMIT: i64 = 8;

/// A per-coordinate cap that never cuts the ball `|a|^2 <= norm_bound`.
pub fn ball_limit(norm_bound: f64) -> i64 {
    (norm_bound.sqrt().ceil() as i64).max(1)
}

/// Values closer than this are treated as ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SearchProblem {
    gram: GramMatrix,
    form: QuadraticForm,
    norm_bound: f64,
    enum_limit: i64,
}

impl SearchProblem {
    /// `gram` must be Hermitian positive definite; `norm_bound` is `1 + rho |h'|^2`.
    pub fn new(gram: GramMatrix, norm_bound: f64) -> Self {
        let d = 2 * gram.size();
        let form = QuadraticForm::new(&gram.real_form(), d)
            .expect("coefficient search needs a positive-definite Gram matrix");
        Self {
            gram,
            form,
            norm_bound,
            enum_limit: DEFAULT_ENUM_LIMIT,
        }
    }

    pub fn for_channel(cs: &ChannelState) -> Self {
        Self::new(gram_matrix(cs), cs.norm_bound())
    }

    pub fn with_enum_limit(mut self, limit: i64) -> Self {
        self.enum_limit = limit.max(1);
        self
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn enum_limit(&self) -> i64 {
        self.enum_limit
    }

    pub fn users(&self) -> usize {
        self.gram.size()
    }

    fn admissible(&self, a: &[GaussInt]) -> bool {
        let Some(first) = a.iter().find(|z| z.re != 0 || z.im != 0) else {
            return false;
        };
        in_principal_sector(*first)
            && (vec_norm_sqr_int(a) as f64) <= self.norm_bound
            && a.iter().all(|z| norm_sqr_int(*z) <= self.enum_limit * self.enum_limit)
    }
}

/// Result of a coefficient search.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub coeffs: Vec<GaussInt>,
    /// `a M' a^H`.
    pub value: f64,
    /// Set when the per-coordinate cap may have hidden better vectors.
    pub truncated: bool,
}

impl Coefficients {
    pub fn rate(&self) -> f64 {
        rate_from_quadratic(self.value)
    }
}

/// Total order used to pick among equal-value minimizers: shorter first,
/// then lexicographic on `(Re a_1, Im a_1, Re a_2, ..)`.
pub fn tie_order(a: &[GaussInt], b: &[GaussInt]) -> Ordering {
    vec_norm_sqr_int(a).cmp(&vec_norm_sqr_int(b)).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x.re, x.im).cmp(&(y.re, y.im)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn better(value: f64, a: &[GaussInt], best_value: f64, best: &[GaussInt]) -> bool {
    if value < best_value - TIE_TOL {
        true
    } else if value <= best_value + TIE_TOL {
        tie_order(a, best).is_lt()
    } else {
        false
    }
}

/// Best admissible vector with value at most `threshold` (ties included),
/// or `None` when there is none.
pub fn best_below(p: &SearchProblem, threshold: f64) -> (Option<Coefficients>, bool) {
    let l = p.users();
    let center = vec![0.0; 2 * l];
    let mut best: Option<(f64, Vec<GaussInt>)> = None;
    let mut a = vec![GaussInt::new(0, 0); l];
    let mut filtered_by_cap = false;
    let stats = p
        .form
        .enumerate(&center, threshold + TIE_TOL, Some(p.enum_limit), |u, value| {
            for (j, z) in a.iter_mut().enumerate() {
                *z = GaussInt::new(u[2 * j], u[2 * j + 1]);
            }
            if a.iter().any(|z| norm_sqr_int(*z) > p.enum_limit * p.enum_limit) {
                filtered_by_cap = true;
            } else if p.admissible(&a) {
                let take = match &best {
                    None => true,
                    Some((bv, ba)) => better(value, &a, *bv, ba),
                };
                if take {
                    best = Some((value, a.clone()));
                }
            }
            match &best {
                Some((bv, _)) => bv + TIE_TOL,
                None => threshold + TIE_TOL,
            }
        });
    let truncated = stats.truncated || filtered_by_cap;
    let found = best.map(|(_, coeffs)| {
        // recompute from the Hermitian form so values are path independent
        let value = p.gram.quadratic_int(&coeffs);
        Coefficients {
            coeffs,
            value,
            truncated,
        }
    });
    (found, truncated)
}

/// The minimizer of `a M' a^H` over admissible `a`. When no vector reaches a
/// positive rate the unit vector `e_1` is returned.
pub fn best_coefficients(p: &SearchProblem) -> Coefficients {
    let l = p.users();
    // every unit vector has value M'_jj <= 1, so the search always starts bounded
    let start = (0..l)
        .map(|j| p.gram.get(j, j).re)
        .fold(1.0f64, f64::min);
    let (found, truncated) = best_below(p, start);
    match found {
        Some(c) if c.value < 1.0 => c,
        _ => {
            let mut e1 = vec![GaussInt::new(0, 0); l];
            e1[0] = GaussInt::new(1, 0);
            let value = p.gram.quadratic_int(&e1);
            Coefficients {
                coeffs: e1,
                value,
                truncated,
            }
        }
    }
}

/// Best equation for an (already precoded) channel, with its MMSE equalizer.
pub fn best_equation(cs: &ChannelState) -> (NetworkEquation, bool) {
    let c = best_coefficients(&SearchProblem::for_channel(cs));
    let truncated = c.truncated;
    (NetworkEquation::mmse(cs, c.coeffs), truncated)
}

/// All admissible vectors, in odometer order over `(Re, Im)` of each
/// coordinate. The flag is set when the cap `|a_l| <= enum_limit` cuts the
/// norm ball.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub vectors: Vec<Vec<GaussInt>>,
    pub truncated: bool,
}

pub fn enumerate_candidates(p: &SearchProblem) -> Candidates {
    let l = p.users();
    let lim = p.enum_limit;
    let b = p.norm_bound;
    let r = (b.sqrt().floor() as i64).min(lim);
    let truncated = b >= (lim * lim + 1) as f64;
    let mut vectors = Vec::new();
    let side = (2 * r + 1) as usize;
    let total = side.pow(2 * l as u32);
    let mut a = vec![GaussInt::new(0, 0); l];
    for idx in 0..total {
        let mut rest = idx;
        for z in a.iter_mut() {
            let re = (rest % side) as i64 - r;
            rest /= side;
            let im = (rest % side) as i64 - r;
            rest /= side;
            *z = GaussInt::new(re, im);
        }
        if p.admissible(&a) {
            vectors.push(a.clone());
        }
    }
    Candidates { vectors, truncated }
}
