use clap::{Args, Parser, Subcommand, ValueEnum};
use phasecof::lattice::deep_hole_phases;
use phasecof::sim::{
    eer_csv, rate_csv, rate_table, run_sweep, summarize_rates, LatticeSpec, PrecoderMode,
    ScaleSpec, SimConfig,
};
use phasecof::verify::{verify, Level};
use phasecof::{Error, VoronoiCodebook};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phasecof", version, about = "Phase-precoded compute-and-forward simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equation error rate versus SNR
    Eer(EerArgs),
    /// Best plain and precoded computation rates over random channels
    Rate(RateArgs),
    /// Emit phase sets or lattice descriptions as JSON
    #[command(subcommand)]
    Codebook(CodebookCmd),
    /// Run the built-in oracle checks
    Verify {
        #[arg(value_enum)]
        level: LevelArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Args)]
struct EerArgs {
    /// JSON config; the flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// e8, cubic (Z[i]^4) or cubic:N
    #[arg(long)]
    lattice: Option<String>,
    /// Gaussian integer, e.g. 4 or 2,1
    #[arg(long)]
    scale_a: Option<String>,
    #[arg(long)]
    snr_start: Option<f64>,
    #[arg(long)]
    snr_stop: Option<f64>,
    #[arg(long)]
    snr_step: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// none, deephole:MAXODD or file:PATH
    #[arg(long)]
    precoder: Option<String>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    relays: Option<usize>,
    /// CSV output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, default_value_t = 2)]
    users: usize,
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "deephole:5")]
    precoder: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CodebookCmd {
    /// Deep-hole phase set
    Phases {
        #[arg(long, default_value_t = 5)]
        max_odd: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lattice and Voronoi codebook summary
    Lattice {
        #[arg(long, default_value = "e8")]
        lattice: String,
        #[arg(long, default_value = "4")]
        scale_a: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Verify,
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::InvalidPhaseCodebook(_)
            | Error::InvalidScale(_)
            | Error::CodebookTooLarge { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn parse_lattice(s: &str) -> Result<LatticeSpec, Failure> {
    match s {
        "e8" => Ok(LatticeSpec::E8),
        "cubic" => Ok(LatticeSpec::CubicGaussian(4)),
        _ => s
            .strip_prefix("cubic:")
            .and_then(|n| n.parse().ok())
            .filter(|n| *n > 0)
            .map(LatticeSpec::CubicGaussian)
            .ok_or_else(|| Failure::Config(format!("unknown lattice '{s}'"))),
    }
}

fn parse_scale(s: &str) -> Result<ScaleSpec, Failure> {
    let bad = || Failure::Config(format!("bad scale '{s}'"));
    match s.split_once(',') {
        None => s.trim().parse().map(ScaleSpec::Real).map_err(|_| bad()),
        Some((re, im)) => Ok(ScaleSpec::Complex([
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        ])),
    }
}

fn snr_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || stop < start {
        return Err(Failure::Config("need snr_step > 0 and snr_stop >= snr_start".into()));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // snap to the step so 0.1 increments print cleanly
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn eer_config(a: &EerArgs) -> Result<SimConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            SimConfig::from_json(&text)?
        }
        None => SimConfig {
            users: 2,
            relays: 1,
            snr_grid_db: snr_grid(
                a.snr_start.unwrap_or(20.0),
                a.snr_stop.unwrap_or(40.0),
                a.snr_step.unwrap_or(2.0),
            )?,
            trials: 10_000,
            lattice: LatticeSpec::E8,
            scale_a: ScaleSpec::default(),
            precoder_mode: PrecoderMode::None,
            master_seed: 0,
            workers: 1,
            enum_limit: None,
        },
    };
    if a.config.is_some() && (a.snr_start.is_some() || a.snr_stop.is_some() || a.snr_step.is_some())
    {
        let start = a.snr_start.unwrap_or(cfg.snr_grid_db[0]);
        let stop = a.snr_stop.unwrap_or(*cfg.snr_grid_db.last().unwrap());
        let step = a.snr_step.unwrap_or(2.0);
        cfg.snr_grid_db = snr_grid(start, stop, step)?;
    }
    if let Some(l) = &a.lattice {
        cfg.lattice = parse_lattice(l)?;
    }
    if let Some(s) = &a.scale_a {
        cfg.scale_a = parse_scale(s)?;
    }
    if let Some(p) = &a.precoder {
        cfg.precoder_mode = PrecoderMode::parse(p)?;
    }
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    cfg.master_seed = a.seed.unwrap_or(cfg.master_seed);
    cfg.workers = a.workers.unwrap_or(cfg.workers);
    cfg.users = a.users.unwrap_or(cfg.users);
    cfg.relays = a.relays.unwrap_or(cfg.relays);
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Eer(a) => {
            let cfg = eer_config(&a)?;
            log::info!("config: {}", serde_json::to_string(&cfg).unwrap_or_default());
            let points = run_sweep(&cfg)?;
            emit(&a.out, &eer_csv(&points))
        }
        Command::Rate(a) => {
            let mode = PrecoderMode::parse(&a.precoder)?;
            let phases = match mode.codebook(a.users)? {
                Some(cb) => cb,
                None => phasecof::PhaseCodebook::identity_only(a.users),
            };
            if a.users == 0 || a.trials == 0 || a.workers == 0 {
                return Err(Failure::Config("users, trials and workers must be positive".into()));
            }
            let rows = rate_table(a.users, a.snr_db, a.trials, a.seed, &phases, a.workers)?;
            let summary = summarize_rates(&rows);
            eprintln!(
                "mean plain {:.4} bits, mean precoded {:.4} bits, mean gain {:.4} bits",
                summary.mean_plain, summary.mean_precoded, summary.mean_gain
            );
            emit(&a.out, &rate_csv(&rows))
        }
        Command::Codebook(CodebookCmd::Phases { max_odd, out }) => {
            let phases = deep_hole_phases(max_odd)?;
            let text = serde_json::to_string_pretty(&phases).map_err(Error::from)?;
            emit(&out, &(text + "\n"))
        }
        Command::Codebook(CodebookCmd::Lattice {
            lattice,
            scale_a,
            out,
        }) => {
            let base = parse_lattice(&lattice)?.build()?;
            let cb = VoronoiCodebook::build(base, parse_scale(&scale_a)?.value(), 1.0)?;
            let text = serde_json::to_string_pretty(&cb.describe()).map_err(Error::from)?;
            emit(&out, &(text + "\n"))
        }
        Command::Verify { level, seed } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let report = verify(level, seed);
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
