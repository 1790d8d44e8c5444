//! Monte-Carlo equation-error simulation over i.i.d. Rayleigh channels.

use crate::coeff_search::{ball_limit, best_coefficients, SearchProblem};
use crate::cof::{relay_decode, true_combination, ChannelState, NetworkEquation};
use crate::error::{Error, Result};
use crate::gaussian::GaussInt;
use crate::lattice::{ComplexLattice, VoronoiCodebook};
use crate::precoding::{
    apply_precoder, select_precoder_with_limit, PhaseCodebook, PhasePrecoder,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeSpec {
    /// `Z[i]^n`.
    CubicGaussian(usize),
    E8,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<ComplexLattice> {
        match self {
            LatticeSpec::CubicGaussian(n) => ComplexLattice::cubic(*n, 1.0),
            LatticeSpec::E8 => ComplexLattice::e8(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderMode {
    #[default]
    None,
    DeepHole(u32),
    /// JSON file holding a list of phases in radians.
    CodebookFile(PathBuf),
    Codebook(Vec<f64>),
}

impl PrecoderMode {
    /// `none`, `deephole:MAXODD` or `file:PATH`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Self::None);
        }
        if let Some(m) = s.strip_prefix("deephole:") {
            let m = m
                .parse()
                .map_err(|_| Error::Config(format!("bad deephole order '{m}'")))?;
            return Ok(Self::DeepHole(m));
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(Self::CodebookFile(p.into()));
        }
        Err(Error::Config(format!(
            "precoder must be none, deephole:MAXODD or file:PATH, got '{s}'"
        )))
    }

    pub fn codebook(&self, users: usize) -> Result<Option<PhaseCodebook>> {
        Ok(match self {
            PrecoderMode::None => None,
            PrecoderMode::DeepHole(m) => Some(PhaseCodebook::deep_hole(*m, users)?),
            PrecoderMode::CodebookFile(p) => {
                let text = std::fs::read_to_string(p)?;
                Some(PhaseCodebook::from_json(&text, users)?)
            }
            PrecoderMode::Codebook(v) => Some(PhaseCodebook::new(v.clone(), users)?),
        })
    }
}

/// Gaussian integer written either as `4` or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSpec {
    Real(i64),
    Complex([i64; 2]),
}

impl ScaleSpec {
    pub fn value(&self) -> GaussInt {
        match *self {
            ScaleSpec::Real(r) => GaussInt::new(r, 0),
            ScaleSpec::Complex([r, i]) => GaussInt::new(r, i),
        }
    }
}

impl Default for ScaleSpec {
    fn default() -> Self {
        ScaleSpec::Real(4)
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "L", alias = "users")]
    pub users: usize,
    #[serde(rename = "M", alias = "relays", default = "one")]
    pub relays: usize,
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub scale_a: ScaleSpec,
    #[serde(default)]
    pub precoder_mode: PrecoderMode,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    /// Per-coordinate cap of the coefficient search; unset searches the whole ball.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_limit: Option<i64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if self.relays == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("snr_grid_db must not be empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_grid_db must be finite".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.snr_grid_db.len() as u64 >= 1 << 24 || self.trials >= 1 << 40 {
            return Err(Error::Config("sweep too large for per-trial seeding".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `h_l ~ CN(0, 1)`.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, users: usize) -> Vec<Complex64> {
    (0..users).map(|_| complex_normal(rng)).collect()
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// The generator for one trial: independent of every other trial.
pub fn trial_rng(master_seed: u64, snr_index: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((snr_index as u64) << 40) | trial);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Error flag of each relay's equation.
    pub equation_errors: Vec<bool>,
    /// Rate of the first relay's equation.
    pub selected_rate: f64,
    /// Rate the first relay would get without precoding.
    pub plain_rate: f64,
    pub selected_precoder_indices: Vec<usize>,
    pub truncated: bool,
}

impl TrialOutcome {
    /// Error flag of the first relay.
    pub fn equation_error(&self) -> bool {
        self.equation_errors[0]
    }
}

/// Immutable per-sweep state shared by all workers.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    codebook: VoronoiCodebook,
    phases: Option<PhaseCodebook>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let base = cfg.lattice.build()?;
        let codebook = VoronoiCodebook::build(base, cfg.scale_a.value(), 1.0)?;
        let phases = cfg.precoder_mode.codebook(cfg.users)?;
        Ok(Self {
            cfg,
            codebook,
            phases,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn codebook(&self) -> &VoronoiCodebook {
        &self.codebook
    }

    pub fn phase_codebook(&self) -> Option<&PhaseCodebook> {
        self.phases.as_ref()
    }

    /// One trial with freshly drawn channels and unit-variance noise.
    pub fn trial<R: Rng + ?Sized>(&self, snr: f64, rng: &mut R) -> Result<TrialOutcome> {
        let channels: Vec<Vec<Complex64>> = (0..self.cfg.relays)
            .map(|_| draw_channel(rng, self.cfg.users))
            .collect();
        self.trial_with_channels(snr, &channels, 1.0, rng)
    }

    /// One trial over given channels (one row per relay); noise is scaled
    /// by `noise_scale` in amplitude.
    pub fn trial_with_channels<R: Rng + ?Sized>(
        &self,
        snr: f64,
        channels: &[Vec<Complex64>],
        noise_scale: f64,
        rng: &mut R,
    ) -> Result<TrialOutcome> {
        let l = self.cfg.users;
        if channels.len() != self.cfg.relays {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.relays,
                got: channels.len(),
            });
        }
        let messages: Vec<usize> = (0..l)
            .map(|_| rng.gen_range(0..self.codebook.len()))
            .collect();
        let x: Vec<&[Complex64]> = messages.iter().map(|&m| self.codebook.codeword(m)).collect();
        let states = channels
            .iter()
            .map(|h| ChannelState::new(h.clone(), snr))
            .collect::<Result<Vec<_>>>()?;

        let limit = |cs: &ChannelState| {
            self.cfg
                .enum_limit
                .unwrap_or_else(|| ball_limit(cs.norm_bound()))
        };
        let first_plain = best_coefficients(
            &SearchProblem::for_channel(&states[0]).with_enum_limit(limit(&states[0])),
        );
        let (precoder, first, indices, mut truncated) = match &self.phases {
            None => (
                PhasePrecoder::identity(l),
                NetworkEquation::mmse(&states[0], first_plain.coeffs.clone()),
                vec![0; l],
                first_plain.truncated,
            ),
            Some(pcb) => {
                let sel = select_precoder_with_limit(&states[0], pcb, limit(&states[0]));
                (
                    sel.precoder,
                    sel.equation,
                    sel.feedback_indices,
                    sel.truncated || first_plain.truncated,
                )
            }
        };

        let gamma = self.codebook.energy_scale_at(snr);
        let n = self.codebook.base().dim();
        let mut errors = Vec::with_capacity(states.len());
        for (m, cs) in states.iter().enumerate() {
            let eff = apply_precoder(cs, &precoder);
            let eq = if m == 0 {
                first.clone()
            } else {
                let c = best_coefficients(
                    &SearchProblem::for_channel(&eff).with_enum_limit(limit(&eff)),
                );
                truncated |= c.truncated;
                NetworkEquation::mmse(&eff, c.coeffs)
            };
            let mut y = vec![Complex64::new(0.0, 0.0); n];
            for (hl, xl) in eff.h().iter().zip(&x) {
                for (yi, xi) in y.iter_mut().zip(xl.iter()) {
                    *yi += hl * gamma * xi;
                }
            }
            for yi in y.iter_mut() {
                *yi += complex_normal(rng) * noise_scale;
            }
            let decoded = relay_decode(&eff, &y, &eq, &self.codebook);
            let truth = true_combination(&eq.coeffs, &x, &self.codebook)?;
            errors.push(!self.codebook.same_coset(&decoded, &truth));
        }
        Ok(TrialOutcome {
            equation_errors: errors,
            selected_rate: first.rate,
            plain_rate: first_plain.rate(),
            selected_precoder_indices: indices,
            truncated,
        })
    }

    /// Runs every SNR point of the configuration on its own worker pool.
    pub fn run_sweep(&self) -> Result<Vec<EERPoint>> {
        with_workers(self.cfg.workers, || {
            self.cfg
                .snr_grid_db
                .iter()
                .enumerate()
                .map(|(i, &db)| self.run_point(i, db))
                .collect()
        })?
    }

    fn run_point(&self, snr_index: usize, snr_db: f64) -> Result<EERPoint> {
        let snr = db_to_linear(snr_db);
        let seed = self.cfg.master_seed;
        let tally = map_reduce(
            self.cfg.trials,
            |t| {
                let mut rng = trial_rng(seed, snr_index, t);
                self.trial(snr, &mut rng).map(|o| Tally::from_outcome(&o))
            },
            Tally::default,
            Tally::merge,
        )?;
        if tally.rate_zero > 0 {
            log::info!(
                "snr {snr_db} dB: {} of {} trials had a rate-0 best equation",
                tally.rate_zero,
                tally.trials
            );
        }
        if tally.truncated > 0 {
            log::warn!(
                "snr {snr_db} dB: coefficient search hit the enumeration cap in {} trials",
                tally.truncated
            );
        }
        Ok(EERPoint::new(snr_db, tally.equations, tally.errors, tally.rate_zero, tally.truncated))
    }
}

/// Runs `f` on a pool of `workers` threads.
#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

/// Maps trial indices `0..n` and merges the results. `merge` must be
/// associative and commutative so the split across threads cannot matter.
#[cfg(feature = "parallel")]
fn map_reduce<T: Send>(
    n: u64,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
    identity: fn() -> T,
    merge: fn(T, T) -> T,
) -> Result<T> {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(f)
        .try_reduce(identity, |a, b| Ok(merge(a, b)))
}

#[cfg(not(feature = "parallel"))]
fn map_reduce<T: Send>(
    n: u64,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
    identity: fn() -> T,
    merge: fn(T, T) -> T,
) -> Result<T> {
    (0..n).map(f).try_fold(identity(), |a, b| Ok(merge(a, b?)))
}

#[cfg(feature = "parallel")]
fn map_collect<T: Send>(n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_collect<T: Send>(n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    trials: u64,
    equations: u64,
    errors: u64,
    rate_zero: u64,
    truncated: u64,
}

impl Tally {
    fn from_outcome(o: &TrialOutcome) -> Self {
        Self {
            trials: 1,
            equations: o.equation_errors.len() as u64,
            errors: o.equation_errors.iter().filter(|e| **e).count() as u64,
            rate_zero: (o.selected_rate == 0.0) as u64,
            truncated: o.truncated as u64,
        }
    }

    fn merge(self, b: Self) -> Self {
        Self {
            trials: self.trials + b.trials,
            equations: self.equations + b.equations,
            errors: self.errors + b.errors,
            rate_zero: self.rate_zero + b.rate_zero,
            truncated: self.truncated + b.truncated,
        }
    }
}

/// Equation error rate at one SNR. `trials` counts scored equations
/// (trials times relays).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EERPoint {
    pub snr_db: f64,
    pub errors: u64,
    pub trials: u64,
    pub eer: f64,
    pub ci95_halfwidth: f64,
    pub rate_zero_trials: u64,
    pub truncated_trials: u64,
}

impl EERPoint {
    pub fn new(snr_db: f64, trials: u64, errors: u64, rate_zero: u64, truncated: u64) -> Self {
        let p = errors as f64 / trials as f64;
        Self {
            snr_db,
            errors,
            trials,
            eer: p,
            ci95_halfwidth: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
            rate_zero_trials: rate_zero,
            truncated_trials: truncated,
        }
    }
}

pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<EERPoint>> {
    Simulator::new(cfg.clone())?.run_sweep()
}

pub const EER_CSV_HEADER: &str = "snr_db,trials,errors,eer,ci95";

pub fn eer_csv(points: &[EERPoint]) -> String {
    let mut s = String::from(EER_CSV_HEADER);
    s.push('\n');
    for p in points {
        writeln!(
            s,
            "{},{},{},{:.9e},{:.9e}",
            p.snr_db, p.trials, p.errors, p.eer, p.ci95_halfwidth
        )
        .unwrap();
    }
    s
}

/// Parses CSV written by [`eer_csv`].
pub fn parse_eer_csv(text: &str) -> Result<Vec<EERPoint>> {
    let mut lines = text.lines();
    if lines.next() != Some(EER_CSV_HEADER) {
        return Err(Error::Config("missing EER CSV header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || Error::Config(format!("bad EER CSV row '{l}'"));
            if f.len() != 5 {
                return Err(bad());
            }
            let snr = f[0].parse().map_err(|_| bad())?;
            let trials = f[1].parse().map_err(|_| bad())?;
            let errors = f[2].parse().map_err(|_| bad())?;
            Ok(EERPoint::new(snr, trials, errors, 0, 0))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub trial: u64,
    pub rate_plain: f64,
    pub rate_precoded: f64,
}

impl RateRow {
    pub fn gain_bits(&self) -> f64 {
        self.rate_precoded - self.rate_plain
    }
}

/// Best unprecoded and best precoded rate on `trials` random channels.
pub fn rate_table(
    users: usize,
    snr_db: f64,
    trials: u64,
    seed: u64,
    phases: &PhaseCodebook,
    workers: usize,
) -> Result<Vec<RateRow>> {
    if phases.users() != users {
        return Err(Error::DimensionMismatch {
            expected: users,
            got: phases.users(),
        });
    }
    let snr = db_to_linear(snr_db);
    with_workers(workers, || {
        map_collect(trials, |t| {
            let mut rng = trial_rng(seed, 0, t);
            let cs = ChannelState::new(draw_channel(&mut rng, users), snr)?;
            let limit = ball_limit(cs.norm_bound());
            let plain =
                best_coefficients(&SearchProblem::for_channel(&cs).with_enum_limit(limit)).rate();
            let sel = select_precoder_with_limit(&cs, phases, limit);
            Ok(RateRow {
                trial: t,
                rate_plain: plain,
                rate_precoded: sel.rate,
            })
        })
    })?
}

pub const RATE_CSV_HEADER: &str = "trial,rate_plain,rate_precoded,gain_bits";

pub fn rate_csv(rows: &[RateRow]) -> String {
    let mut s = String::from(RATE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{:.12},{:.12},{:.12}",
            r.trial,
            r.rate_plain,
            r.rate_precoded,
            r.gain_bits()
        )
        .unwrap();
    }
    s
}

/// Summary of a rate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub trials: usize,
    pub mean_plain: f64,
    pub mean_precoded: f64,
    pub mean_gain: f64,
    pub fraction_plain_zero: f64,
    pub fraction_precoded_zero: f64,
}

pub fn summarize_rates(rows: &[RateRow]) -> RateSummary {
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RateRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    RateSummary {
        trials: rows.len(),
        mean_plain: mean(&|r| r.rate_plain),
        mean_precoded: mean(&|r| r.rate_precoded),
        mean_gain: mean(&|r| r.gain_bits()),
        fraction_plain_zero: mean(&|r| (r.rate_plain == 0.0) as u8 as f64),
        fraction_precoded_zero: mean(&|r| (r.rate_precoded == 0.0) as u8 as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lattice: LatticeSpec, mode: PrecoderMode) -> SimConfig {
        SimConfig {
            users: 2,
            relays: 1,
            snr_grid_db: vec![10.0],
            trials: 200,
            lattice,
            scale_a: ScaleSpec::Real(4),
            precoder_mode: mode,
            master_seed: 7,
            workers: 1,
            enum_limit: None,
        }
    }

    #[test]
    fn channel_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let h = draw_channel(&mut rng, n);
        let power = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!((0.99..=1.01).contains(&power), "{power}");
        let mean = h.iter().sum::<Complex64>() / n as f64;
        // sample mean of each real part has std sqrt(1/2n)
        let sigma = (0.5 / n as f64).sqrt();
        assert!(mean.re.abs() < 4.0 * sigma && mean.im.abs() < 4.0 * sigma);
        let var_re = h.iter().map(|z| z.re * z.re).sum::<f64>() / n as f64;
        assert!((var_re - 0.5).abs() < 0.01);
    }

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: Vec<Complex64> = draw_channel(&mut trial_rng(3, 1, 9), 4);
        let b: Vec<Complex64> = draw_channel(&mut trial_rng(3, 1, 9), 4);
        let c: Vec<Complex64> = draw_channel(&mut trial_rng(3, 1, 10), 4);
        let d: Vec<Complex64> = draw_channel(&mut trial_rng(3, 2, 9), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn config_json() {
        let text = r#"{"L": 2, "snr_grid_db": [10, 12.5], "trials": 100,
            "lattice": "e8", "scale_a": 4, "precoder_mode": {"deep_hole": 5},
            "master_seed": 1, "workers": 2}"#;
        let c = SimConfig::from_json(text).unwrap();
        assert_eq!(c.users, 2);
        assert_eq!(c.relays, 1);
        assert_eq!(c.precoder_mode, PrecoderMode::DeepHole(5));
        assert_eq!(c.scale_a.value(), GaussInt::new(4, 0));
        let back = SimConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let c2 = SimConfig::from_json(
            r#"{"L":1,"snr_grid_db":[0],"trials":1,"lattice":{"cubic_gaussian":4},"scale_a":[2,1]}"#,
        )
        .unwrap();
        assert_eq!(c2.lattice, LatticeSpec::CubicGaussian(4));
        assert_eq!(c2.scale_a.value(), GaussInt::new(2, 1));
        for bad in [
            r#"{"L":0,"snr_grid_db":[0],"trials":1,"lattice":"e8"}"#,
            r#"{"L":2,"snr_grid_db":[],"trials":1,"lattice":"e8"}"#,
            r#"{"L":2,"snr_grid_db":[0],"trials":0,"lattice":"e8"}"#,
            r#"{"L":2,"snr_grid_db":[0],"trials":1,"lattice":"d4"}"#,
            r#"{"L":2,"snr_grid_db":[0],"trials":1,"lattice":"e8","typo":1}"#,
        ] {
            assert!(SimConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn precoder_flag_parsing() {
        assert_eq!(PrecoderMode::parse("none").unwrap(), PrecoderMode::None);
        assert_eq!(PrecoderMode::parse("deephole:5").unwrap(), PrecoderMode::DeepHole(5));
        assert_eq!(
            PrecoderMode::parse("file:x.json").unwrap(),
            PrecoderMode::CodebookFile("x.json".into())
        );
        assert!(PrecoderMode::parse("deephole:x").is_err());
        assert!(PrecoderMode::parse("always").is_err());
    }

    #[test]
    fn noiseless_integer_channel_never_errs() {
        let sim = Simulator::new(cfg(LatticeSpec::E8, PrecoderMode::None)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for h in [
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(2.0, 1.0), Complex64::new(0.0, -1.0)],
        ] {
            for _ in 0..50 {
                let o = sim
                    .trial_with_channels(1e6, &[h.clone()], 0.0, &mut rng)
                    .unwrap();
                assert!(!o.equation_error());
            }
        }
    }

    #[test]
    fn very_low_snr_nearly_always_errs() {
        let mut c = cfg(LatticeSpec::E8, PrecoderMode::None);
        c.snr_grid_db = vec![-20.0];
        let p = &run_sweep(&c).unwrap()[0];
        assert!(p.eer > 0.9, "{p:?}");
    }

    #[test]
    fn identity_codebook_matches_no_precoding() {
        let mut a = cfg(LatticeSpec::E8, PrecoderMode::None);
        a.snr_grid_db = vec![8.0, 14.0];
        let mut b = a.clone();
        b.precoder_mode = PrecoderMode::Codebook(vec![0.0]);
        assert_eq!(run_sweep(&a).unwrap(), run_sweep(&b).unwrap());
    }

    #[test]
    fn precoding_never_lowers_the_selected_rate() {
        let sim = Simulator::new(cfg(LatticeSpec::E8, PrecoderMode::DeepHole(5))).unwrap();
        for t in 0..300 {
            let o = sim.trial(db_to_linear(12.0), &mut trial_rng(5, 0, t)).unwrap();
            assert!(o.selected_rate >= o.plain_rate);
        }
    }

    #[test]
    fn sweep_is_independent_of_worker_count() {
        let mut c = cfg(LatticeSpec::CubicGaussian(4), PrecoderMode::DeepHole(3));
        c.snr_grid_db = vec![6.0, 12.0];
        let one = eer_csv(&run_sweep(&c).unwrap());
        c.workers = 3;
        assert_eq!(one, eer_csv(&run_sweep(&c).unwrap()));
    }

    #[test]
    fn eer_point_and_csv() {
        let p = EERPoint::new(10.0, 1000, 10, 0, 0);
        assert_eq!(p.eer, 0.01);
        assert!((p.ci95_halfwidth - 1.96 * (0.01f64 * 0.99 / 1000.0).sqrt()).abs() < 1e-15);
        let text = eer_csv(&[p.clone(), EERPoint::new(12.0, 1000, 0, 0, 0)]);
        assert!(text.starts_with("snr_db,trials,errors,eer,ci95\n10,1000,10,"));
        let back = parse_eer_csv(&text).unwrap();
        assert_eq!(back[0].errors, 10);
        assert_eq!(back[1].eer, 0.0);
    }

    #[test]
    fn multiple_relays_score_every_equation() {
        let mut c = cfg(LatticeSpec::E8, PrecoderMode::DeepHole(3));
        c.relays = 2;
        c.trials = 50;
        let p = &run_sweep(&c).unwrap()[0];
        assert_eq!(p.trials, 100);
    }

    #[test]
    fn rate_table_rows() {
        let cb = PhaseCodebook::deep_hole(5, 2).unwrap();
        let rows = rate_table(2, 10.0, 100, 4, &cb, 1).unwrap();
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().all(|r| r.gain_bits() >= 0.0));
        let text = rate_csv(&rows);
        assert!(text.starts_with("trial,rate_plain,rate_precoded,gain_bits\n0,"));
        let s = summarize_rates(&rows);
        assert!(s.mean_precoded >= s.mean_plain);
    }
}
