//! `sectorsum`: certify sectors, evaluate the functional calculus, invert
//! operator sums, test T-sectoriality and estimate maximal regularity.
//!
//! Exit codes: 0 when the report passes, 1 on a numeric failure, 2 on a
//! configuration or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sectorsum::exec::init_thread_pool;
use sectorsum::harness::{load_config, ExperimentConfig, OperatorSource, Pipeline};
use sectorsum::maxreg::TimeGrid;
use sectorsum::sector::SectorSampling;
use sectorsum::tsector::MultiplierFamily;
use sectorsum::Error;

const THREADS_VAR: &str = "SECTORSUM_THREADS";

#[derive(Parser, Debug)]
#[command(name = "sectorsum", version, about)]
struct Cli {
    /// Run a JSON experiment config instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report (and CSV, if any) here instead of printing it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for generated probes and coefficients.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct MatrixArg {
    /// Matrix CSV: one row per line, entries `re` or `re+imi`.
    #[arg(long)]
    matrix: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sampled sector constant of a matrix at an angle.
    CertifySector {
        #[command(flatten)]
        m: MatrixArg,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        rays: Option<usize>,
        #[arg(long)]
        arc: Option<usize>,
        #[arg(long)]
        rmin: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
    },
    /// Complex power `A^z`.
    Power {
        #[command(flatten)]
        m: MatrixArg,
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        im: f64,
    },
    /// `f(−A)` for a builtin symbol.
    Hinf {
        #[command(flatten)]
        m: MatrixArg,
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        theta: f64,
    },
    /// Inverse of `A + B` for resolvent-commuting sectorial `A`, `B`.
    SumInverse {
        #[arg(long)]
        matrix_a: PathBuf,
        #[arg(long)]
        matrix_b: PathBuf,
        #[arg(long)]
        theta_a: Option<f64>,
        #[arg(long)]
        theta_b: Option<f64>,
        /// Weight `w = re + i·im` for the weighted identities.
        #[arg(long, num_args = 2, value_names = ["W_RE", "W_IM"], allow_hyphen_values = true)]
        check_identities: Option<Vec<f64>>,
        /// Also compute the closedness certificate.
        #[arg(long)]
        certify: bool,
    },
    /// T-sectoriality witness search over a multiplier family.
    TSector {
        #[command(flatten)]
        m: MatrixArg,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Highest coefficient index; `n + 1` seeded coefficients are drawn.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "pure-harmonics")]
        family: String,
        #[arg(long)]
        nt: Option<usize>,
    },
    /// Resolvents from imaginary powers against direct solves.
    RepCheck {
        #[command(flatten)]
        m: MatrixArg,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
    },
    /// Maximal-regularity constants of `f' + Af = g`.
    Maxreg {
        #[command(flatten)]
        m: MatrixArg,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 512)]
        nt: usize,
        /// Repeat at p ∈ {1.5, 2, 3, 4}.
        #[arg(long)]
        sweep_p: bool,
        /// Also run on 2·nt and 4·nt and emit the ladder.
        #[arg(long)]
        refine: bool,
    },
}

fn file(path: &Path) -> OperatorSource {
    OperatorSource::MatrixFile(path.to_path_buf())
}

fn seeded_coefficients(dim: usize, terms: usize, seed: u64) -> Vec<Vec<[f64; 2]>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..terms)
        .map(|_| {
            (0..dim)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect()
        })
        .collect()
}

fn pipeline(command: Command, seed: u64) -> sectorsum::Result<Pipeline> {
    Ok(match command {
        Command::CertifySector {
            m,
            theta,
            rays,
            arc,
            rmin,
            rmax,
        } => {
            let d = SectorSampling::default();
            Pipeline::Certify {
                operator: file(&m.matrix),
                theta,
                sampling: Some(SectorSampling {
                    rays: rays.unwrap_or(d.rays),
                    arc: arc.unwrap_or(d.arc),
                    r_min: rmin.unwrap_or(d.r_min),
                    r_max: rmax.unwrap_or(d.r_max),
                    ..d
                }),
            }
        }
        Command::Power { m, re, im } => Pipeline::Power {
            operator: file(&m.matrix),
            z: [re, im],
        },
        Command::Hinf { m, symbol, theta } => Pipeline::Hinf {
            operator: file(&m.matrix),
            symbol,
            theta,
        },
        Command::SumInverse {
            matrix_a,
            matrix_b,
            theta_a,
            theta_b,
            check_identities,
            certify,
        } => Pipeline::Sum {
            a: file(&matrix_a),
            b: file(&matrix_b),
            theta_a,
            theta_b,
            check_identities: check_identities.map(|w| [w[0], w[1]]),
            certify,
        },
        Command::TSector {
            m,
            phi,
            r,
            p,
            n,
            family,
            nt,
        } => {
            let dim = sectorsum::linops::read_matrix_csv(&m.matrix)?.nrows();
            let terms = n + 1;
            Pipeline::TSector {
                operator: file(&m.matrix),
                phi,
                r,
                p,
                n_t: nt.unwrap_or((8 * terms).max(64)),
                coefficients: seeded_coefficients(dim, terms, seed),
                family: MultiplierFamily::from_kind(&family)?,
            }
        }
        Command::RepCheck { m, rho, theta } => Pipeline::RepCheck {
            operator: file(&m.matrix),
            rho,
            theta,
            x: None,
        },
        Command::Maxreg {
            m,
            tau,
            p,
            nt,
            sweep_p,
            refine,
        } => {
            TimeGrid::new(tau, nt, p)?;
            Pipeline::Maxreg {
                operator: file(&m.matrix),
                tau,
                n_t: nt,
                p,
                probes: None,
                levels: if refine { 3 } else { 1 },
                sweep_p,
            }
        }
    })
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::ConfigInvalid(format!("{THREADS_VAR}={raw:?} is not a positive integer")))?;
        init_thread_pool(threads);
    }
    Ok(())
}

/// Prints a line; a closed pipe (e.g. `| head`) is not an error.
fn emit(line: &str) -> anyhow::Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other.context("writing to stdout")?),
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    let cwd = PathBuf::from(".");
    let (mut cfg, base) = match (&cli.config, cli.command) {
        (Some(path), None) => {
            let cfg = load_config(path)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or(cwd);
            (cfg, base)
        }
        (None, Some(command)) => {
            let seed = cli.seed.unwrap_or(sectorsum::harness::DEFAULT_SEED);
            (ExperimentConfig::new(pipeline(command, seed)?), cwd)
        }
        (Some(_), Some(_)) => {
            return Err(Error::ConfigInvalid("give either --config or a subcommand, not both".into()).into())
        }
        (None, None) => return Err(Error::ConfigInvalid("nothing to do: give a subcommand or --config".into()).into()),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.out {
        Some(dir) => {
            let outcome = cfg.run(&base, dir)?;
            emit(&outcome.report_path.display().to_string())?;
            if let Some(csv) = outcome.csv_path {
                emit(&csv.display().to_string())?;
            }
            Ok(outcome.report.passed)
        }
        None => {
            let output = sectorsum::harness::run_pipeline(&cfg, &base)?;
            emit(&serde_json::to_string_pretty(&output.report).context("serialising report")?)?;
            Ok(output.report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("sectorsum: report did not pass");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("sectorsum: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(2, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
