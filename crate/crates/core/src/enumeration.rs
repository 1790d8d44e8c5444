//! Integer-point enumeration inside an ellipsoid.
//!
//! Both the generic closest-point quantizer and the network-coefficient
//! search reduce to the same problem: list the integer vectors `u` with
//! `(u - c) A (u - c)^T <= r^2` for a positive-definite real matrix `A`.
//! `A` is factored once as `R^T R` (upper triangular `R`) and the levels are
//! visited last coordinate first in Schnorr-Euchner zig-zag order, so the
//! radius can shrink as better points are found.

/// A positive-definite quadratic form stored by its Cholesky factor.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    dim: usize,
    /// `R[i][j]` for `j > i`, already divided by `R[i][i]`.
    mu: Vec<f64>,
    /// `R[i][i]^2`.
    diag: Vec<f64>,
}

/// Outcome flags of one enumeration pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub nodes: u64,
    /// Set when a per-coordinate bound cut off part of the ellipsoid.
    pub truncated: bool,
}

impl QuadraticForm {
    /// Factors the row-major `dim x dim` symmetric matrix `a`. Returns `None`
    /// when `a` is not numerically positive definite.
    pub fn new(a: &[f64], dim: usize) -> Option<Self> {
        assert_eq!(a.len(), dim * dim);
        let mut r = vec![0.0; dim * dim];
        for i in 0..dim {
            let mut s = a[i * dim + i];
            for k in 0..i {
                s -= r[k * dim + i] * r[k * dim + i];
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let rii = s.sqrt();
            r[i * dim + i] = rii;
            for j in i + 1..dim {
                let mut t = a[i * dim + j];
                for k in 0..i {
                    t -= r[k * dim + i] * r[k * dim + j];
                }
                r[i * dim + j] = t / rii;
            }
        }
        let mut mu = vec![0.0; dim * dim];
        let mut diag = vec![0.0; dim];
        for i in 0..dim {
            let rii = r[i * dim + i];
            diag[i] = rii * rii;
            for j in i + 1..dim {
                mu[i * dim + j] = r[i * dim + j] / rii;
            }
        }
        Some(Self { dim, mu, diag })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(u - c) A (u - c)^T` evaluated through the factor.
    pub fn eval(&self, u: &[i64], center: &[f64]) -> f64 {
        let d = self.dim;
        let mut total = 0.0;
        for i in 0..d {
            let mut t = u[i] as f64 - center[i];
            for j in i + 1..d {
                t += self.mu[i * d + j] * (u[j] as f64 - center[j]);
            }
            total += self.diag[i] * t * t;
        }
        total
    }

    /// Visits every integer vector with `q(u) <= radius_sq` (and `|u_i| <= bound`
    /// when a bound is given). The visitor receives each point with its value
    /// and returns the radius to continue with, which lets callers shrink the
    /// search as they improve their incumbent.
    pub fn enumerate<F>(
        &self,
        center: &[f64],
        mut radius_sq: f64,
        bound: Option<i64>,
        mut visit: F,
    ) -> EnumStats
    where
        F: FnMut(&[i64], f64) -> f64,
    {
        let d = self.dim;
        assert_eq!(center.len(), d);
        let mut stats = EnumStats::default();
        if d == 0 {
            return stats;
        }
        let mut u = vec![0i64; d];
        let mut partial = vec![0.0f64; d + 1];
        let mut centers = vec![0.0f64; d];
        // zig-zag state per level
        let mut step = vec![0i64; d];
        let mut dir = vec![0i64; d];
        let mut lo = vec![i64::MIN; d];
        let mut hi = vec![i64::MAX; d];
        let mut level = d - 1;

        let level_center = |level: usize, u: &[i64]| -> f64 {
            let mut c = center[level];
            for j in level + 1..d {
                c -= self.mu[level * d + j] * (u[j] as f64 - center[j]);
            }
            c
        };

        centers[level] = level_center(level, &u);
        self.start_level(level, &centers, &mut u, &mut step, &mut dir);
        if let Some(b) = bound {
            lo[level] = -b;
            hi[level] = b;
        }

        loop {
            stats.nodes += 1;
            let diff = u[level] as f64 - centers[level];
            let dist = partial[level + 1] + self.diag[level] * diff * diff;
            let in_box = u[level] >= lo[level] && u[level] <= hi[level];
            if dist <= radius_sq {
                if !in_box {
                    stats.truncated = true;
                    self.next_sibling(level, &centers, &mut u, &mut step, &mut dir);
                    continue;
                }
                if level == 0 {
                    radius_sq = visit(&u, dist);
                    self.next_sibling(level, &centers, &mut u, &mut step, &mut dir);
                } else {
                    partial[level] = dist;
                    level -= 1;
                    centers[level] = level_center(level, &u);
                    self.start_level(level, &centers, &mut u, &mut step, &mut dir);
                    if let Some(b) = bound {
                        lo[level] = -b;
                        hi[level] = b;
                    }
                }
            } else {
                // zig-zag values only grow from here; climb
                if level + 1 >= d {
                    break;
                }
                level += 1;
                self.next_sibling(level, &centers, &mut u, &mut step, &mut dir);
            }
        }
        stats
    }

    fn start_level(
        &self,
        level: usize,
        centers: &[f64],
        u: &mut [i64],
        step: &mut [i64],
        dir: &mut [i64],
    ) {
        let c = centers[level];
        let r = c.round();
        u[level] = r as i64;
        step[level] = 0;
        dir[level] = if c >= r { 1 } else { -1 };
    }

    fn next_sibling(
        &self,
        level: usize,
        centers: &[f64],
        u: &mut [i64],
        step: &mut [i64],
        dir: &mut [i64],
    ) {
        let base = centers[level].round() as i64;
        step[level] += 1;
        let k = step[level];
        // base, base+dir, base-dir, base+2dir, ...
        let offset = if k % 2 == 1 { (k + 1) / 2 } else { -(k / 2) };
        u[level] = base + dir[level] * offset;
    }
}
