//! `gdz`: spectra, zeta values and determinants of Dirac operators on metric
//! graphs from a JSON graph file.
//!
//! Flags override config values, which override built-in defaults.
//! Exit status: 0 on success, 2 for invalid input, 3 for numerical failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gdz::config::{load_config, write_det, write_spectrum, write_zeta, GraphConfig, GraphData};
use gdz::determinant::{det_massive, det_massless, det_rose, DetResult};
use gdz::secular::SecularEvaluator;
use gdz::selftest::{run_criterion, SelftestOptions, CRITERIA, DEFAULT_SEED};
use gdz::special::{epstein, epstein_deriv0};
use gdz::spectrum::{find_roots, massive_spectrum, RootOptions, Spectrum};
use gdz::zeta::{MassiveZeta, MasslessZeta, ZetaRepresentation, ZetaResult};
use gdz::{Complex64, Error};

#[derive(Parser, Debug)]
#[command(name = "gdz", version, about = "Spectral zeta functions and determinants of Dirac operators on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the vertex conditions and print the self-adjointness report.
    Validate(Input),
    /// Positive roots of the secular equation up to `--kmax`.
    Spectrum {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_name = "REAL")]
        kmax: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Zeta values on a grid `s_j = (RE + i IM) + j (DRE + i DIM)`, `j < N`.
    Zeta {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_name = "RE,IM,DRE,DIM,N")]
        grid: Grid,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Closed-form determinant next to exp(-zeta'(0)).
    Det {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        overrides: Overrides,
        /// Closed form for non-rose graphs.
        #[arg(long, value_enum, default_value_t = Formula::Published)]
        formula: Formula,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// E(alpha, c) and E'(0, c).
    Epstein {
        #[arg(long, value_name = "REAL", allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_name = "REAL")]
        c: f64,
    },
    /// Runs the acceptance criteria.
    Selftest {
        #[arg(long, value_name = "INT", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Run only this criterion.
        #[arg(long, value_name = "N")]
        criterion: Option<u8>,
    },
}

#[derive(Args, Debug)]
struct Input {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct Overrides {
    /// Branch angle in (0, pi).
    #[arg(long, value_name = "REAL")]
    alpha: Option<f64>,
    #[arg(long, value_name = "REAL")]
    mass: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Formula {
    Published,
    Endpoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Grid {
    start: Complex64,
    step: Complex64,
    count: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(format!("expected RE,IM,DRE,DIM,N, got {s:?}"));
        }
        let num = |i: usize| parts[i].parse::<f64>().map_err(|e| format!("{:?}: {e}", parts[i]));
        let count: usize = parts[4].parse().map_err(|e| format!("{:?}: {e}", parts[4]))?;
        if count == 0 {
            return Err("grid count must be at least 1".into());
        }
        Ok(Grid {
            start: Complex64::new(num(0)?, num(1)?),
            step: Complex64::new(num(2)?, num(3)?),
            count,
        })
    }
}

impl Grid {
    fn points(&self) -> Vec<Complex64> {
        (0..self.count).map(|j| self.start + self.step * j as f64).collect()
    }
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::InvalidGraph(_)
            | Error::InvalidConditions(_)
            | Error::NotSu2(_)
            | Error::NotSquare { .. }
            | Error::DimensionMismatch(_) => 2,
            _ => 3,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

type Outcome = Result<(), Failure>;

fn load(input: &Input, overrides: Option<&Overrides>) -> Result<GraphConfig, Failure> {
    let cfg = load_config(&input.config)?;
    Ok(match overrides {
        Some(o) => cfg.with_overrides(o.mass, o.alpha)?,
        None => cfg,
    })
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn validate(input: &Input) -> Outcome {
    let cfg = load(input, None)?;
    let report = cfg.vertex_conditions()?.validate();
    println!("{report}");
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            msg: "vertex conditions are not self-adjoint".into(),
        })
    }
}

fn spectrum(cfg: &GraphConfig, k_max: f64) -> gdz::Result<Spectrum> {
    let opts = RootOptions::default();
    let vc = cfg.vertex_conditions()?;
    if cfg.mass > 0.0 {
        massive_spectrum(&vc, &cfg.graph, cfg.mass, k_max, &opts)
    } else {
        find_roots(&SecularEvaluator::massless(&vc, &cfg.graph)?, k_max, &opts)
    }
}

fn zeta_rows(cfg: &GraphConfig, pts: &[Complex64]) -> gdz::Result<Vec<ZetaResult>> {
    let vc = cfg.vertex_conditions()?;
    if cfg.mass > 0.0 {
        MassiveZeta::new(&vc, &cfg.graph, cfg.mass, cfg.settings)?.evaluate(pts)
    } else if let GraphData::Rose(r) = &cfg.data {
        MasslessZeta::rose(r, cfg.settings)?.evaluate(pts)
    } else {
        MasslessZeta::general(&vc, &cfg.graph, cfg.settings)?.evaluate(pts)
    }
}

fn determinant(cfg: &GraphConfig, formula: Formula) -> Result<DetResult, Failure> {
    let vc = cfg.vertex_conditions()?;
    let (closed, numeric) = if cfg.mass > 0.0 {
        let z = MassiveZeta::new(&vc, &cfg.graph, cfg.mass, cfg.settings)?;
        let closed = match formula {
            Formula::Published => det_massive(&vc, &cfg.graph, cfg.mass)?,
            Formula::Endpoint => z.determinant_closed_form()?,
        };
        (closed, z.zeta_prime_zero())
    } else if let (GraphData::Rose(r), Formula::Published) = (&cfg.data, formula) {
        let z = MasslessZeta::rose(r, cfg.settings)?;
        (det_rose(r)?, z.zeta_prime_zero())
    } else {
        let z = MasslessZeta::general(&vc, &cfg.graph, cfg.settings)?;
        let closed = match formula {
            Formula::Published => det_massless(&vc, &cfg.graph, z.expansion().c0)?,
            Formula::Endpoint => z.determinant_closed_form(),
        };
        (closed, z.zeta_prime_zero())
    };
    let via = match numeric {
        Ok(d) => Some((-d).exp()),
        Err(e) => {
            eprintln!("warning: exp(-zeta'(0)) unavailable: {e}");
            None
        }
    };
    Ok(DetResult::new(closed, via))
}

fn selftest(seed: u64, only: Option<u8>) -> Outcome {
    let opts = SelftestOptions { seed, parallel: true };
    let ids: Vec<u8> = match only {
        Some(n) if CRITERIA.iter().any(|c| c.0 == n) => vec![n],
        Some(n) => {
            return Err(Failure {
                code: 2,
                msg: format!("no criterion {n}"),
            })
        }
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let mut failed = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts).expect("known criterion");
        print!("{r}");
        io::stdout().flush()?;
        if !r.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            msg: format!("criteria failed: {failed:?}"),
        })
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate(input) => validate(&input),
        Command::Spectrum {
            input,
            overrides,
            kmax,
            out,
        } => {
            let cfg = load(&input, Some(&overrides))?;
            let sp = spectrum(&cfg, kmax)?;
            write_spectrum(sink(&out)?, &sp)?;
            if cfg.mass > 0.0 {
                eprintln!(
                    "{} positive-energy and {} negative-energy roots below {}",
                    sp.positive_roots.len(),
                    sp.negative_energy_roots.len(),
                    sp.k_max
                );
            }
            Ok(())
        }
        Command::Zeta {
            input,
            overrides,
            grid,
            out,
        } => {
            let cfg = load(&input, Some(&overrides))?;
            write_zeta(sink(&out)?, &zeta_rows(&cfg, &grid.points())?)?;
            Ok(())
        }
        Command::Det {
            input,
            overrides,
            formula,
            out,
        } => {
            let cfg = load(&input, Some(&overrides))?;
            write_det(sink(&out)?, &determinant(&cfg, formula)?)?;
            Ok(())
        }
        Command::Epstein { alpha, c } => {
            let e = epstein(Complex64::new(alpha, 0.0), c)?;
            println!("E({alpha}, {c}) = {:.16e}", e.re);
            println!("E'(0, {c}) = {:.16e}", epstein_deriv0(c)?);
            Ok(())
        }
        Command::Selftest { seed, criterion } => selftest(seed, criterion),
    }
}

fn init_threads() {
    let Ok(v) = std::env::var("GDZ_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: GDZ_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: GDZ_THREADS={v:?} is not a positive integer"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gdz: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
