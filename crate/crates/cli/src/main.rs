use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use kolmo_core::coupling::{contraction_study, IncrementLaw};
use kolmo_core::error::Error;
use kolmo_core::generator::{GeneratorSpec, Lift};
use kolmo_core::geometry::Geometry;
use kolmo_core::par::Execution;
use kolmo_core::report::{Format, ReportBundle, Verdict};
use kolmo_core::sim::{simulate_bm, simulate_lift, SimConfig};
use kolmo_core::verify::{run_suite, sharpness, RunConfig, Scenario};

/// Numerical checks of gradient bounds and functional inequalities for
/// Kolmogorov-type diffusions.
#[derive(Parser, Debug)]
#[command(name = "kolmo", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a verification scenario and write its report.
    Verify {
        scenario: String,
        /// JSON or TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON report path (stdout when neither --out nor --csv is given).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Run without the thread pool.
        #[arg(long)]
        sequential: bool,
    },
    /// Dump one simulated path as CSV (step, t, coordinates).
    Simulate {
        /// euclidean-d, sphere-d, hyperboloid-d or heisenberg.
        geometry: String,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Number of integral levels of the lift; 0 simulates the base only.
        #[arg(long, default_value_t = 1)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Path index inside the seeded stream.
        #[arg(long, default_value_t = 0)]
        path: usize,
        /// Comma-separated starting state (default: origin, zero fibers).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sharpness table of the flat gradient bound for f = xi.
    Sharpness {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,5")]
        t_grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contraction study of the coupled pair started at distance --distance.
    Couple {
        geometry: String,
        /// Curvature lower bound for the bound curves (default: the
        /// geometry's Ricci lower bound).
        #[arg(long, allow_hyphen_values = true)]
        k: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        distance: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        n_paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Law::Gaussian)]
        law: Law,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Law {
    Gaussian,
    PairAdapted,
}

const EXIT_VIOLATIONS: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::Config(_) | Error::HypothesisViolated(_) | Error::InvalidArgument(_) | Error::InvalidAlpha(_))
            );
            ExitCode::from(if config { EXIT_CONFIG } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Verify {
            scenario,
            config,
            seed,
            out,
            csv,
            sequential,
        } => verify(&scenario, config, seed, out, csv, sequential),
        Cmd::Simulate {
            geometry,
            t,
            dt,
            sigma,
            levels,
            seed,
            path,
            start,
            out,
        } => {
            let geometry: Geometry = geometry.parse()?;
            let cfg = SimConfig::with_dt(t, dt, 1, seed);
            let p = if levels == 0 {
                let x0 = start.unwrap_or_else(|| geometry.origin());
                simulate_bm(geometry, sigma, &x0, &cfg, path)?
            } else {
                let gen = lifted(geometry, sigma, levels);
                let x0 = start.unwrap_or_else(|| {
                    let mut z = vec![0.0; gen.layout().total()];
                    z[..geometry.ambient_dim()].copy_from_slice(&geometry.origin());
                    z
                });
                simulate_lift(&gen, &x0, &cfg, path)?
            };
            match out {
                Some(o) => p.write_csv(std::fs::File::create(&o).with_context(|| o.display().to_string())?)?,
                None => p.write_csv(std::io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sharpness { t_grid, out } => {
            let rows = sharpness(&t_grid)?;
            let mut buf = Vec::new();
            writeln!(buf, "t,grad_sq,rhs,expected,rel_gap")?;
            for r in &rows {
                writeln!(buf, "{},{:e},{:e},{:e},{:e}", r.t, r.grad_sq, r.rhs, r.expected, r.rel_gap)?;
            }
            match out {
                Some(o) => std::fs::write(&o, &buf).with_context(|| o.display().to_string())?,
                None => std::io::stdout().write_all(&buf)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Couple {
            geometry,
            k,
            distance,
            t,
            dt,
            n_paths,
            seed,
            law,
            out,
        } => {
            let geometry: Geometry = geometry.parse()?;
            let law = match law {
                Law::Gaussian => IncrementLaw::Gaussian,
                Law::PairAdapted => IncrementLaw::PairAdapted,
            };
            let mut gen = match geometry {
                Geometry::Sphere(d) => GeneratorSpec::sphere_lift(d, 1.0),
                Geometry::Euclidean(d) => GeneratorSpec::flat_kolmogorov(d, 1.0),
                Geometry::Hyperboloid(d) => GeneratorSpec {
                    lift: Lift::Constant { value: vec![0.0; d + 1] },
                    ..GeneratorSpec::relativistic(d, 1.0)
                },
                Geometry::Heisenberg => {
                    return Err(Error::Config("no Markovian coupling on the Heisenberg group".into()).into())
                }
            };
            if k.is_some() {
                gen.rho = k;
            }
            let o = geometry.origin();
            let e = &geometry.frame(&o)[0];
            let v: Vec<f64> = e.iter().map(|c| distance * c).collect();
            let p2 = geometry.exp(&o, &v)?;
            let kind = match geometry {
                Geometry::Euclidean(_) => kolmo_core::coupling::CouplingKind::Synchronous,
                _ => kolmo_core::coupling::CouplingKind::Parallel,
            };
            let display: Vec<f64> = (1..=4).map(|i| t * i as f64 / 4.0).collect();
            let cfg = SimConfig::with_dt(t, dt, n_paths, seed);
            let report = contraction_study(&gen, kind, law, &o, &p2, &cfg, &display)?;
            eprintln!(
                "{}: K = {}, eps_dt = {:.4}, abort fraction = {:.4}, base {}, fiber {}",
                report.geometry,
                gen.ricci().unwrap_or(f64::NAN),
                report.epsilon_dt,
                report.abort_fraction,
                report.verdict.label(),
                report.fiber_verdict.label()
            );
            let json = serde_json::to_string_pretty(&report)?;
            match out {
                Some(o) => std::fs::write(&o, json + "\n").with_context(|| o.display().to_string())?,
                None => println!("{json}"),
            }
            let violated = report.verdict == Verdict::Violated || report.fiber_verdict == Verdict::Violated;
            Ok(if violated { ExitCode::from(EXIT_VIOLATIONS) } else { ExitCode::SUCCESS })
        }
    }
}

fn lifted(geometry: Geometry, sigma: f64, levels: usize) -> GeneratorSpec {
    let base = match geometry {
        Geometry::Heisenberg => GeneratorSpec::heisenberg(sigma),
        Geometry::Sphere(d) => GeneratorSpec::sphere_lift(d, sigma),
        Geometry::Hyperboloid(d) => GeneratorSpec::relativistic(d, sigma),
        Geometry::Euclidean(d) => GeneratorSpec::flat_kolmogorov(d, sigma),
    };
    GeneratorSpec { levels, ..base }
}

fn verify(
    scenario: &str,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    sequential: bool,
) -> Result<ExitCode> {
    let scenario: Scenario = scenario.parse()?;
    let mut cfg = match &config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::new(scenario),
    };
    if cfg.scenario != scenario {
        return Err(Error::Config(format!(
            "config is for scenario {}, command line asks for {scenario}",
            cfg.scenario
        ))
        .into());
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if sequential {
        cfg.exec = Execution::Sequential;
    }
    let bundle = run_suite(&cfg)?;
    summarize(&bundle);
    if let Some(p) = &out {
        bundle.emit(Format::Json, p)?;
    }
    if let Some(p) = &csv {
        bundle.emit(Format::Csv, p)?;
    }
    if out.is_none() && csv.is_none() {
        println!("{}", bundle.to_json()?);
    }
    Ok(if bundle.violations() > 0 {
        ExitCode::from(EXIT_VIOLATIONS)
    } else {
        ExitCode::SUCCESS
    })
}

fn summarize(b: &ReportBundle) {
    eprintln!(
        "{} (seed {}): {} rows, {} verified, {} violated, {} inconclusive, {} skipped, {} row errors",
        b.scenario,
        b.seed,
        b.reports.len(),
        b.count(Verdict::Verified),
        b.count(Verdict::Violated),
        b.count(Verdict::Inconclusive),
        b.skipped.len(),
        b.errors.len()
    );
    for c in &b.contraction {
        eprintln!(
            "  contraction {}: eps_dt = {:.4}, eps_fiber = {:.4}, base {}, fiber {}",
            c.geometry,
            c.epsilon_dt,
            c.epsilon_fiber,
            c.verdict.label(),
            c.fiber_verdict.label()
        );
    }
    if let Some(h) = &b.heisenberg {
        eprintln!(
            "  heisenberg: family max K^ = {:.4} (reference lower bound {:.4}), max |K^ - 1| at t = {} is {:.4}",
            h.family_max, h.reference_lower_bound, h.small_t, h.small_t_max_deviation
        );
    }
}
