//! Self-checks run by `phasecof verify`: each module result is compared with
//! a brute-force or closed-form oracle on random instances.

use crate::coeff_search::{best_coefficients, SearchProblem};
use crate::cof::{computation_rate, gram_matrix, mmse_alpha, rate_at_alpha, ChannelState};
use crate::gaussian::{hermitian, real_image, vec_norm_sqr_int, vec_to_c64, GaussInt};
use crate::lattice::{e8, ComplexLattice};
use crate::precoding::{optimal_phases_given_a, pp_rate_closed_form};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    fn instances(self) -> usize {
        match self {
            Level::Fast => 1_000,
            Level::Full => 10_000,
        }
    }

    fn phase_grid(self) -> usize {
        match self {
            Level::Fast => 41,
            Level::Full => 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// First failing instance, if any.
    pub example: Option<String>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            instances: 0,
            failures: 0,
            example: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.failures += 1;
            if self.example.is_none() {
                self.example = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            write!(f, "{tag} {:<28} {:>6} instances, {} failures", c.name, c.instances, c.failures)?;
            if let Some(e) = &c.example {
                write!(f, " (first: {e})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn verify(level: Level, seed: u64) -> Report {
    let n = level.instances();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Report {
        checks: vec![
            check_e8_quantizer(&e8::complex_generator(), n, &mut rng),
            check_cubic_quantizer(n, &mut rng),
            check_rate_forms(n, &mut rng),
            check_aligned_phases(n.min(2_000), level.phase_grid(), &mut rng),
            check_precoding_inequality(n, &mut rng),
            check_coefficient_search(n, &mut rng),
        ],
    }
}

fn random_channel(rng: &mut impl Rng, l: usize, log_snr: (f64, f64)) -> ChannelState {
    let h = crate::sim::draw_channel(rng, l);
    ChannelState::new(h, 10f64.powf(rng.gen_range(log_snr.0..log_snr.1))).unwrap()
}

fn random_coeffs(rng: &mut impl Rng, l: usize, r: i64) -> Vec<GaussInt> {
    loop {
        let a: Vec<GaussInt> = (0..l)
            .map(|_| GaussInt::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r)))
            .collect();
        if vec_norm_sqr_int(&a) > 0 {
            return a;
        }
    }
}

/// Fast E8 decoding against generic enumeration over the lattice spanned by
/// `generator`; any mismatch in distance counts as a failure.
pub fn check_e8_quantizer(
    generator: &[Vec<Complex64>],
    n: usize,
    rng: &mut impl Rng,
) -> CheckResult {
    let mut res = CheckResult::new("e8 quantizer");
    let oracle = match ComplexLattice::from_generator("oracle", generator.to_vec()) {
        Ok(l) => l.with_generic_quantizer(),
        Err(e) => {
            res.record(false, || format!("generator rejected: {e}"));
            return res;
        }
    };
    for _ in 0..n {
        let y: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)))
            .collect();
        let yr = real_image(&y);
        let mut arr = [0.0; 8];
        arr.copy_from_slice(&yr);
        let fast = e8::decode(&arr);
        let slow = real_image(&oracle.quantize_coords(&y));
        let d_fast: f64 = fast.iter().zip(&yr).map(|(a, b)| (a - b).powi(2)).sum();
        let d_slow: f64 = slow.iter().zip(&yr).map(|(a, b)| (a - b).powi(2)).sum();
        res.record((d_fast - d_slow).abs() < 1e-9, || {
            format!("y={yr:?} fast={d_fast} enum={d_slow}")
        });
    }
    res
}

fn check_cubic_quantizer(n: usize, rng: &mut impl Rng) -> CheckResult {
    let mut res = CheckResult::new("cubic quantizer");
    let lat = ComplexLattice::cubic(3, 1.0).unwrap();
    let oracle = lat.with_generic_quantizer();
    for _ in 0..n {
        let y: Vec<Complex64> = (0..3)
            .map(|_| Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
            .collect();
        let a = lat.quantize_coords(&y);
        let b = oracle.quantize_coords(&y);
        let da: f64 = a.iter().zip(&y).map(|(p, q)| (p - q).norm_sqr()).sum();
        let db: f64 = b.iter().zip(&y).map(|(p, q)| (p - q).norm_sqr()).sum();
        res.record((da - db).abs() < 1e-9, || format!("y={y:?}"));
    }
    res
}

/// The Gram-matrix rate equals the rate at the MMSE equalizer, and random
/// equalizers never do better.
fn check_rate_forms(n: usize, rng: &mut impl Rng) -> CheckResult {
    let mut res = CheckResult::new("rate forms and mmse");
    for _ in 0..n {
        let l = rng.gen_range(2..=4);
        let cs = random_channel(rng, l, (-1.0, 3.0));
        let a = random_coeffs(rng, l, 3);
        let alpha = mmse_alpha(&cs, &a);
        let gram = computation_rate(&cs, &a);
        let at_mmse = rate_at_alpha(&cs, &a, alpha);
        let mut ok = (gram - at_mmse).abs() < 1e-9;
        for _ in 0..16 {
            let d = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                * alpha.norm().max(1e-3);
            ok &= rate_at_alpha(&cs, &a, alpha + d) <= at_mmse + 1e-12;
        }
        res.record(ok, || format!("h={:?} rho={} a={a:?}", cs.h(), cs.snr()));
    }
    res
}

/// No point of a `grid x grid` phase grid beats the closed-form aligned rate
/// (two users).
fn check_aligned_phases(n: usize, grid: usize, rng: &mut impl Rng) -> CheckResult {
    let mut res = CheckResult::new("aligned phases (grid)");
    let step = 2.0 * FRAC_PI_4 / (grid - 1) as f64;
    for _ in 0..n {
        let cs = random_channel(rng, 2, (-1.0, 3.0));
        let a = random_coeffs(rng, 2, 3);
        let ac = vec_to_c64(&a);
        let best = pp_rate_closed_form(&cs, &a);
        let aligned = optimal_phases_given_a(&cs, &a);
        let at_aligned = crate::precoding::pp_rate(&cs, &aligned.precoder, &aligned.coeffs);
        let mut ok = (at_aligned - best).abs() < 1e-9;
        let rho = cs.snr();
        let bound = cs.norm_bound();
        let a2 = vec_norm_sqr_int(&a) as f64;
        'grid: for i in 0..grid {
            let r0 = Complex64::from_polar(1.0, -FRAC_PI_4 + i as f64 * step);
            for j in 0..grid {
                let r1 = Complex64::from_polar(1.0, -FRAC_PI_4 + j as f64 * step);
                let hp = [cs.h()[0] * r0, cs.h()[1] * r1];
                let q = a2 - rho * hermitian(&hp, &ac).norm_sqr() / bound;
                let rate = if q > 0.0 { (1.0 / q).log2().max(0.0) } else { 0.0 };
                if rate > best + 1e-3 {
                    ok = false;
                    break 'grid;
                }
            }
        }
        res.record(ok, || format!("h={:?} rho={rho} a={a:?}", cs.h()));
    }
    res
}

fn check_precoding_inequality(n: usize, rng: &mut impl Rng) -> CheckResult {
    let mut res = CheckResult::new("precoded rate >= plain");
    for _ in 0..n {
        let l = rng.gen_range(2..=4);
        let cs = random_channel(rng, l, (-1.0, 3.0));
        let a = random_coeffs(rng, l, 3);
        let pp = pp_rate_closed_form(&cs, &a);
        let plain = computation_rate(&cs, &a);
        res.record(pp >= plain - 1e-12, || {
            format!("h={:?} rho={} a={a:?} pp={pp} plain={plain}", cs.h(), cs.snr())
        });
    }
    res
}

/// Pruned search against a full scan of the ball `|a|^2 <= v B`, which holds
/// every vector with value at most `v` because `M` has smallest eigenvalue `1/B`.
fn check_coefficient_search(n: usize, rng: &mut impl Rng) -> CheckResult {
    let mut res = CheckResult::new("coefficient search");
    for _ in 0..n {
        let l = rng.gen_range(2..=3);
        let cs = random_channel(rng, l, (-1.0, 2.5));
        // lift the per-coordinate cap so the whole ball is searched
        let cap = cs.norm_bound().sqrt().ceil() as i64;
        let problem = SearchProblem::for_channel(&cs).with_enum_limit(cap);
        let found = best_coefficients(&problem);
        let m = gram_matrix(&cs);
        let radius_sq = (found.value.min(1.0) * cs.norm_bound() + 1e-9).min(cs.norm_bound());
        let mut brute = f64::INFINITY;
        scan_ball(l, radius_sq, &mut |a| {
            brute = brute.min(m.quadratic_int(a));
        });
        let ok = if brute < 1.0 {
            (found.value - brute).abs() < 1e-9
        } else {
            found.value >= 1.0 - 1e-12
        };
        res.record(ok, || {
            format!("h={:?} rho={} got={} brute={brute}", cs.h(), cs.snr(), found.value)
        });
    }
    res
}

/// Calls `f` on every nonzero `a` in `Z[i]^l` with `|a|^2 <= radius_sq`.
pub fn scan_ball(l: usize, radius_sq: f64, f: &mut impl FnMut(&[GaussInt])) {
    let mut a = vec![GaussInt::new(0, 0); l];
    fn rec(
        a: &mut Vec<GaussInt>,
        k: usize,
        left: f64,
        f: &mut impl FnMut(&[GaussInt]),
    ) {
        if k == a.len() {
            if a.iter().any(|z| z.re != 0 || z.im != 0) {
                f(a);
            }
            return;
        }
        let r = left.max(0.0).sqrt().floor() as i64;
        for x in -r..=r {
            let rest = left - (x * x) as f64;
            let s = rest.max(0.0).sqrt().floor() as i64;
            for y in -s..=s {
                a[k] = GaussInt::new(x, y);
                rec(a, k + 1, rest - (y * y) as f64, f);
            }
        }
        a[k] = GaussInt::new(0, 0);
    }
    rec(&mut a, 0, radius_sq, f);
}
