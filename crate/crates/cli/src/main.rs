//! `mslab`: batch front end for simulations, spectra and oracle checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mslab::commands::{self, exit_code};
use mslab::config::{SimConfig, SpectrumConfig, SpectrumSection, PRESETS};
use mslab::linstab::Route;
use mslab::{Error, Exec, GeometryParams, PhysParams};

#[derive(Parser)]
#[command(name = "mslab", version, about = "Height-function Mullins-Sekerka flow and coupled linear stability")]
struct Cli {
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow described by a config file (or `preset:<name>`).
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coupled modal spectrum around the reference circle.
    Spectrum(SpectrumArgs),
    /// Run an oracle suite: curvature, dk0, potential, symbols or all.
    Check { suite: String },
    /// Continue a run from a snapshot.
    Resume {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the shipped presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Retained,
    Eliminated,
    Streamfunction,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Start from a preset and override individual values.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long = "R-outer")]
    r_outer: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    mu_plus: Option<f64>,
    #[arg(long)]
    mu_minus: Option<f64>,
    /// Inclusive range `a..b`.
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_range(s: &str) -> Result<[usize; 2], Error> {
    let bad = || Error::Config { path: "--modes".into(), msg: format!("expected `a..b`, got `{s}`") };
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

fn spectrum_config(a: &SpectrumArgs) -> Result<SpectrumConfig, Error> {
    let mut c = match &a.preset {
        Some(p) => SpectrumConfig::preset(p)?,
        None => SpectrumConfig {
            geometry: GeometryParams::default(),
            physics: PhysParams::default(),
            spectrum: SpectrumSection { modes: [0, 8], n_r: 64, route: Route::Retained },
        },
    };
    if let Some(v) = a.r {
        c.geometry.r = v;
    }
    if let Some(v) = a.r_outer {
        c.geometry.r_outer = v;
    }
    // The band width plays no role in the spectrum; keep it admissible.
    let room = (c.geometry.r_outer - c.geometry.r).min(c.geometry.r);
    if room > 0.0 && 3.0 * c.geometry.a >= room {
        c.geometry.a = room / 4.0;
    }
    for (dst, src) in [
        (&mut c.physics.sigma, a.sigma),
        (&mut c.physics.m, a.m),
        (&mut c.physics.mu_plus, a.mu_plus),
        (&mut c.physics.mu_minus, a.mu_minus),
    ] {
        if let Some(v) = src {
            *dst = v;
        }
    }
    if let Some(m) = &a.modes {
        c.spectrum.modes = parse_range(m)?;
    }
    if let Some(n) = a.n_r {
        c.spectrum.n_r = n;
    }
    if let Some(r) = a.route {
        c.spectrum.route = match r {
            RouteArg::Retained => Route::Retained,
            RouteArg::Eliminated => Route::Eliminated,
            RouteArg::Streamfunction => Route::Streamfunction,
        };
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = SimConfig::resolve(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.directory.clone());
            let rep = commands::simulate(&cfg, &out, exec)?;
            print_report(&rep);
            Ok(if rep.halt.is_some() { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Resume { snapshot, config, out } => {
            let cfg = SimConfig::resolve(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.directory.join("resumed"));
            let rep = commands::resume(&snapshot, &cfg, &out, exec)?;
            print_report(&rep);
            Ok(if rep.halt.is_some() { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Spectrum(args) => {
            let cfg = spectrum_config(&args)?;
            let out = commands::spectrum(&cfg, exec);
            if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&args.out, out.to_json())?;
            print!("{}", out.table());
            for (k, msg) in &out.failures {
                eprintln!("mode {k}: {msg}");
            }
            println!("{}", out.summary());
            Ok(if out.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Check { suite } => {
            let suites: Vec<&str> = if suite == "all" { commands::SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut ok = true;
            for s in suites {
                for r in commands::check(s)? {
                    println!("{:<10} {}", s, r.line());
                    ok &= r.passed();
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_report(r: &commands::SimulateReport) {
    println!("t_final={} steps={} halvings={}", r.t_final, r.steps, r.halvings);
    println!("max_area_drift={:e} max_drift={:e}", r.max_area_drift, r.max_drift);
    for f in &r.fitted_rates {
        println!("k={} rate={} (discrete symbol {}, r^2 = {})", f.k, f.rate, f.symbol_discrete, f.r_squared);
    }
    println!("predicted_y={:?} terminal_distance={:e}", r.predicted_y, r.terminal_distance);
    if let Some(h) = &r.halt {
        eprintln!("halted: {h}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
