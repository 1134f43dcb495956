//! Implementations behind the `mslab` subcommands, usable without the binary.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{SimConfig, SpectrumConfig};
use crate::curvature::{curvature, dk0_apply_fd, dk0_symbol};
use crate::fourier;
use crate::linstab::{self, Classification, Spectrum};
use crate::msflow::{self, fit_decay_rate, Flow, Record, SimState};
use crate::par::Exec;
use crate::potential::{discrete_dtn_jump, ms_symbol, solve_potential, Resolution, SolveOptions};
use crate::refgeom::{equilibrium_height, GeometryParams, HeightField, PhysParams};
use crate::snapshot::Snapshot;
use crate::{Error, Result};

/// Process exit status for an error: 2 for invalid input, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Geometry(_) | Error::Physics(_) | Error::GridSize(_) | Error::Argument(_) => 2,
        _ => 1,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FittedRate {
    pub k: usize,
    pub rate: f64,
    pub r_squared: f64,
    /// Discrete decay rate of the scheme at `h = 0`.
    pub symbol_discrete: f64,
    pub symbol_closed_form: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateReport {
    pub t_final: f64,
    pub steps: u64,
    pub halt: Option<String>,
    pub max_perimeter_increase: Option<f64>,
    pub max_area_drift: f64,
    pub max_drift: f64,
    pub halvings: u64,
    pub fit_window: (f64, f64),
    pub fitted_rates: Vec<FittedRate>,
    pub predicted_y: [f64; 3],
    /// `|h_T - equilibrium_height(predicted_y)|_inf`.
    pub terminal_distance: f64,
    #[serde(skip)]
    pub final_state: Option<SimState>,
}

fn csv_header(k_max: usize) -> String {
    let mut s = String::from("t,area,perimeter,h_linf");
    for k in 0..=k_max {
        write!(s, ",re_h{k},im_h{k}").unwrap();
    }
    s
}

fn csv_row(r: &Record) -> String {
    let mut s = format!("{},{},{},{}", r.t, r.area, r.perimeter, r.h_linf);
    for c in &r.modes {
        write!(s, ",{},{}", c.re, c.im).unwrap();
    }
    s
}

pub fn simulate(cfg: &SimConfig, out: &Path, exec: Exec) -> Result<SimulateReport> {
    let h0 = cfg.initial_height()?;
    run_from(cfg, SimState::new(h0), out, exec)
}

/// Continues the run stored in `snapshot` under `cfg`, writing a fresh
/// output directory that starts at the snapshot time.
pub fn resume(snapshot: &Path, cfg: &SimConfig, out: &Path, exec: Exec) -> Result<SimulateReport> {
    let snap = Snapshot::read(snapshot)?;
    if snap.geometry != cfg.geometry {
        return Err(Error::Config { path: "geometry".into(), msg: "differs from the snapshot geometry".into() });
    }
    if snap.h.n_theta() != cfg.discretization.n_theta {
        return Err(Error::Config {
            path: "discretization.n_theta".into(),
            msg: format!("snapshot has {} nodes", snap.h.n_theta()),
        });
    }
    run_from(cfg, snap.state(), out, exec)
}

fn run_from(cfg: &SimConfig, state: SimState, out: &Path, exec: Exec) -> Result<SimulateReport> {
    std::fs::create_dir_all(out)?;
    let g = cfg.geometry;
    let opts = cfg.run_options();
    let solve = SolveOptions { exec, ..SolveOptions::default() };
    let flow = Flow::new(g, cfg.physics, cfg.discretization.n_theta, cfg.resolution(), solve)?;
    let want_csv = cfg.output.formats.iter().any(|f| f == "csv");
    let want_json = cfg.output.formats.iter().any(|f| f == "json");
    let mut csv = if want_csv {
        let mut w = BufWriter::new(File::create(out.join("timeseries.csv"))?);
        writeln!(w, "{}", csv_header(opts.k_max))?;
        Some(w)
    } else {
        None
    };
    let h_start = state.h.clone();
    let dt = opts.dt;
    let res = msflow::run(&flow, state, &opts, |s, r| {
        if let Some(w) = csv.as_mut() {
            writeln!(w, "{}", csv_row(r))?;
        }
        if want_json {
            Snapshot::new(s, dt, g).write(&out.join(format!("snapshot_{}.json", s.step)))?;
        }
        Ok(())
    })?;
    if let Some(mut w) = csv {
        w.flush()?;
    }

    let window = cfg.fit_window();
    let mut fitted_rates = Vec::new();
    for k in 2..=opts.k_max {
        if h_start.mode(k).norm() <= 1e-14 {
            continue;
        }
        if let Ok((rate, r2)) = fit_decay_rate(&res.series, k, window) {
            fitted_rates.push(FittedRate {
                k,
                rate,
                r_squared: r2,
                symbol_discrete: flow.symbols()[k],
                symbol_closed_form: ms_symbol(k, &g, &cfg.physics),
            });
        }
    }
    let predicted_y = linstab::predicted_limit(&h_start, &res.state.h, &g)?;
    let eq = equilibrium_height(predicted_y, &g, res.state.h.n_theta())?;
    let terminal_distance = res.state.h.values().iter().zip(eq.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let report = SimulateReport {
        t_final: res.state.t,
        steps: res.state.step,
        halt: res.halt,
        max_perimeter_increase: res.max_perimeter_increase.is_finite().then_some(res.max_perimeter_increase),
        max_area_drift: res.max_area_drift,
        max_drift: res.max_drift,
        halvings: res.halvings,
        fit_window: window,
        fitted_rates,
        predicted_y,
        terminal_distance,
        final_state: Some(res.state),
    };
    let js = serde_json::to_string_pretty(&report).map_err(|e| Error::Argument(e.to_string()))?;
    std::fs::write(out.join("report.json"), js + "\n")?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    pub k: usize,
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub classification: Classification,
    pub qb4_residual: f64,
    pub velocity_norm: f64,
}

pub struct SpectrumOutput {
    pub spectrum: Spectrum,
    pub entries: Vec<SpectrumEntry>,
    /// Modes whose assembly or eigensolve failed.
    pub failures: Vec<(usize, String)>,
}

impl SpectrumOutput {
    pub fn summary(&self) -> String {
        format!("kernel={} gap={}", self.spectrum.kernel_count, self.spectrum.gap)
    }

    pub fn table(&self) -> String {
        let mut s = String::from("   k            Re(lambda)            Im(lambda)  mult  class      qb4\n");
        for e in &self.entries {
            let class = match e.classification {
                Classification::Kernel => "kernel",
                Classification::Stable => "stable",
                Classification::Anomalous => "anomalous",
            };
            writeln!(s, "{:>4} {:>21.12e} {:>21.12e} {:>5}  {:<9} {:.1e}", e.k, e.re, e.im, e.multiplicity, class, e.qb4_residual).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("plain data serializes") + "\n"
    }
}

pub fn spectrum(cfg: &SpectrumConfig, exec: Exec) -> SpectrumOutput {
    let [a, b] = cfg.spectrum.modes;
    let ks: Vec<usize> = (a..=b).collect();
    let results = crate::par::map_slice(exec, &ks, |&k| {
        linstab::assemble_modal(k, &cfg.geometry, &cfg.physics, cfg.spectrum.n_r, cfg.spectrum.route)
            .and_then(|blk| linstab::eigen(&blk))
    });
    let mut modes = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in ks.iter().zip(results) {
        match r {
            Ok(m) => modes.push(m),
            Err(e) => failures.push((*k, e.to_string())),
        }
    }
    let spectrum = Spectrum::from_modes(modes);
    let entries = spectrum
        .pairs()
        .map(|p| SpectrumEntry {
            k: p.k,
            re: p.lambda.re,
            im: p.lambda.im,
            multiplicity: p.multiplicity,
            classification: p.classification,
            qb4_residual: p.qb4_residual,
            velocity_norm: p.velocity_norm,
        })
        .collect();
    SpectrumOutput { spectrum, entries, failures }
}

/// One line of a check matrix.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    /// `measured <= tolerance` unless `at_least` is set.
    pub at_least: bool,
}

impl CheckResult {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, at_least: false }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.measured >= self.tolerance
        } else {
            self.measured <= self.tolerance
        }
    }

    pub fn line(&self) -> String {
        let rel = if self.at_least { ">=" } else { "<=" };
        format!(
            "{} {:<40} measured {:.3e} (want {rel} {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

pub const SUITES: [&str; 4] = ["curvature", "dk0", "potential", "symbols"];

pub fn check(suite: &str) -> Result<Vec<CheckResult>> {
    let g = GeometryParams::default();
    Ok(match suite {
        "curvature" => vec![CheckResult::at_most("curvature vs polar formula (200 fields)", curvature_oracle_error(200, 256, 7)?, 1e-10)],
        "dk0" => vec![CheckResult::at_most("DK(0) finite difference vs symbol, k<=16", dk0_error(16)?, 1e-6)],
        "potential" => {
            let e256 = potential_error(8, 256)?;
            let e512 = potential_error(8, 512)?;
            vec![
                CheckResult::at_most("harmonic modes k<=8, n_r=512", e512, 1e-5),
                CheckResult::at_least("radial order 256 -> 512", (e256 / e512).log2(), 1.9),
            ]
        }
        "symbols" => {
            let p = PhysParams::default();
            let res = Resolution::uniform(1024);
            let worst = (2..=8)
                .map(|k| {
                    let d = -p.m * p.sigma * dk0_symbol(k as i64, &g) * discrete_dtn_jump(k, &g, res);
                    let c = ms_symbol(k, &g, &p);
                    ((d - c) / c).abs()
                })
                .fold(0.0, f64::max);
            vec![
                CheckResult::at_most("discrete B S DK vs closed form, n_r=1024", worst, 1e-4),
                CheckResult::at_most("lambda_2 = 192/17", (ms_symbol(2, &g, &p) - 192.0 / 17.0).abs(), 1e-12),
            ]
        }
        other => {
            return Err(Error::Argument(format!("unknown suite `{other}`, expected one of {}", SUITES.join(", "))));
        }
    })
}

/// Random band-limited field with modes `1..=k_max` and sup-norm `linf`.
pub fn random_height(rng: &mut impl Rng, n_theta: usize, k_max: usize, linf: f64) -> Result<HeightField> {
    let modes: Vec<(usize, f64, f64)> = (1..=k_max)
        .map(|k| {
            let s = 1.0 / (k * k) as f64;
            (k, s * rng.random_range(-1.0..1.0), s * rng.random_range(-1.0..1.0))
        })
        .collect();
    let h = HeightField::from_modes(n_theta, &modes)?;
    let c0 = rng.random_range(-0.5..0.5);
    let h = HeightField::from_values(h.values().iter().map(|v| v + c0 * h.linf()).collect())?;
    Ok(h.scaled(linf / h.linf()))
}

/// Classical polar curvature `(r^2 + 2 r'^2 - r r'') / (r^2 + r'^2)^(3/2)`.
pub fn polar_curvature(h: &HeightField, g: &GeometryParams) -> Vec<f64> {
    let d1 = h.derivative(1);
    let d2 = h.derivative(2);
    h.values()
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(v, (a, b))| {
            let r = g.r + v;
            (r * r + 2.0 * a * a - r * b) / (r * r + a * a).powf(1.5)
        })
        .collect()
}

/// Worst relative sup error of the curvature against the polar formula over
/// `samples` random fields with `|h| <= 0.3 a`.
pub fn curvature_oracle_error(samples: usize, n_theta: usize, seed: u64) -> Result<f64> {
    let g = GeometryParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let k_max = rng.random_range(1..=n_theta / 8);
        let amp = 0.3 * g.a * rng.random_range(0.05..1.0);
        let h = random_height(&mut rng, n_theta, k_max, amp)?;
        let k = curvature(&h, &g)?.values;
        let oracle = polar_curvature(&h, &g);
        let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = k.iter().zip(&oracle).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(err / scale);
    }
    Ok(worst)
}

/// Worst relative error of the central-difference Jacobian of `K` at `h = 0`
/// against `(k^2 - 1)/R^2` for modes `0..=k_max`.
pub fn dk0_error(k_max: usize) -> Result<f64> {
    let g = GeometryParams::default();
    let n = (4 * k_max + 4).next_power_of_two().max(16);
    let mut worst = 0.0f64;
    for k in 0..=k_max {
        for phase in [0.0, 0.5] {
            let v = HeightField::from_fn(n, |t| (k as f64 * t + phase).cos())?;
            let fd = dk0_apply_fd(&v, &g, 1e-5)?;
            let sym = dk0_symbol(k as i64, &g);
            let scale = sym.abs().max(1.0 / (g.r * g.r)) * v.linf();
            let err = fd.iter().zip(v.values()).fold(0.0f64, |m, (f, x)| m.max((f - sym * x).abs()));
            worst = worst.max(err / scale);
        }
    }
    Ok(worst)
}

/// Worst relative error of the discrete two-phase harmonic extension of
/// `cos(k theta)`, `k = 1..=k_max`, at `h = 0` against the exact solution.
pub fn potential_error(k_max: usize, n_r: usize) -> Result<f64> {
    let g = GeometryParams::default();
    let n = (2 * k_max + 2).next_power_of_two().max(16);
    let theta = fourier::grid(n);
    let h = HeightField::zeros(n)?;
    let res = Resolution::uniform(n_r);
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        let kf = k as f64;
        let data: Vec<f64> = theta.iter().map(|t| (kf * t).cos()).collect();
        let eta = solve_potential(&h, &data, &g, res, SolveOptions::default())?;
        let ro2k = g.r_outer.powf(2.0 * kf);
        let alpha = 1.0 / (g.r.powf(kf) + ro2k * g.r.powf(-kf));
        let inner = |r: f64| (r / g.r).powf(kf);
        let outer = |r: f64| alpha * (r.powf(kf) + ro2k * r.powf(-kf));
        for (field, nodes, exact) in [
            (&eta.inner, &eta.metric.inner.grid.nodes, &inner as &dyn Fn(f64) -> f64),
            (&eta.outer, &eta.metric.outer.grid.nodes, &outer),
        ] {
            for (i, &r) in nodes.iter().enumerate() {
                let e = exact(r);
                for j in 0..n {
                    worst = worst.max((field[(i, j)] - e * (kf * theta[j]).cos()).abs());
                }
            }
        }
    }
    Ok(worst)
}
