//! IMEX integration of the height-function Mullins–Sekerka flow.
//!
//! The evolution is `h_t = N(h)` with
//! `N(h) = m (G_out - G_in) / (R + h)`, where `G` are the conormal fluxes of the
//! potential with Gibbs–Thomson data `sigma K(h)`. The factor `|Gamma'| / (R + h)`
//! converts the normal velocity into the radial height velocity. Stepping
//! treats the frozen symbol `lambda_k` of the discrete operator at `h = 0`
//! implicitly and `N(h) + Lambda h` explicitly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature, CurvatureDecomposition};
use crate::fourier;
use crate::potential::{
    build_metric, discrete_ms_symbols, interface_fluxes, solve_with_metric, Resolution, SolveOptions,
};
use crate::refgeom::{area_unchecked, perimeter_unchecked, GeometryParams, HeightField, PhysParams};
use crate::{Error, Result};

/// Largest explicit increment per step, as a fraction of the admissible band.
pub const EXPLICIT_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex1,
    #[default]
    Imex2,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub h: HeightField,
    pub step: u64,
}

impl SimState {
    pub fn new(h: HeightField) -> Self {
        Self { t: 0.0, h, step: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub t: f64,
    pub area: f64,
    pub perimeter: f64,
    pub h_linf: f64,
    /// `h_k` for `k = 0..=k_max`.
    pub modes: Vec<Complex64>,
}

#[derive(Clone, Debug, Default)]
pub struct TimeSeries {
    pub records: Vec<Record>,
}

impl TimeSeries {
    pub fn push(&mut self, r: Record) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(r.t > last.t) {
                return Err(Error::Argument(format!("time {} does not increase past {}", r.t, last.t)));
            }
        }
        if !(r.area.is_finite() && r.perimeter.is_finite()) {
            return Err(Error::Argument(format!("non-finite diagnostics at t = {}", r.t)));
        }
        self.records.push(r);
        Ok(())
    }
}

/// Evolution operator for fixed geometry, physics and resolution.
#[derive(Clone, Debug)]
pub struct Flow {
    pub geometry: GeometryParams,
    pub phys: PhysParams,
    pub res: Resolution,
    pub opts: SolveOptions,
    /// Discrete `h = 0` decay rates for `k = 0..=n_theta/2`.
    symbols: Vec<f64>,
    n_theta: usize,
}

impl Flow {
    pub fn new(g: GeometryParams, phys: PhysParams, n_theta: usize, res: Resolution, opts: SolveOptions) -> Result<Self> {
        g.validate()?;
        phys.validate()?;
        HeightField::zeros(n_theta)?;
        let symbols = discrete_ms_symbols(n_theta / 2, &g, &phys, res);
        Ok(Self { geometry: g, phys, res, opts, symbols, n_theta })
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    fn symbol_at(&self, idx: usize) -> f64 {
        self.symbols[fourier::wavenumber(idx, self.n_theta).unsigned_abs() as usize]
    }

    fn check(&self, h: &HeightField) -> Result<()> {
        if h.n_theta() != self.n_theta {
            return Err(Error::Argument(format!("field has {} nodes, flow expects {}", h.n_theta(), self.n_theta)));
        }
        h.check_admissible(&self.geometry)
    }

    fn flux_response(&self, h: &HeightField, data: &[f64]) -> Result<Vec<f64>> {
        let metric = std::sync::Arc::new(build_metric(h, &self.geometry, self.res)?);
        let eta = solve_with_metric(metric, data, self.opts)?;
        let (gin, gout) = interface_fluxes(&eta);
        let g = &self.geometry;
        Ok(h.values()
            .iter()
            .zip(gin.iter().zip(&gout))
            .map(|(hv, (i, o))| self.phys.m * (o - i) / (g.r + hv))
            .collect())
    }

    /// Height velocity `N(h)` at the nodes.
    pub fn rhs(&self, h: &HeightField) -> Result<Vec<f64>> {
        self.check(h)?;
        let k = curvature(h, &self.geometry)?;
        let data: Vec<f64> = k.values.iter().map(|v| self.phys.sigma * v).collect();
        self.flux_response(h, &data)
    }

    /// The principal part `B S (sigma P(h) h)` and the remainder
    /// `B S (sigma Q(h))`; they sum to [`Flow::rhs`].
    pub fn rhs_split(&self, h: &HeightField) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(h)?;
        let dec = CurvatureDecomposition::new(h, &self.geometry)?;
        let s = self.phys.sigma;
        let ph: Vec<f64> = dec.apply_p(h)?.into_iter().map(|v| s * v).collect();
        let q: Vec<f64> = dec.q.iter().map(|v| s * v).collect();
        Ok((self.flux_response(h, &ph)?, self.flux_response(h, &q)?))
    }

    /// Explicit remainder `N(h) + Lambda h` in Fourier form. Rejects `dt`
    /// when the explicit increment alone would move the interface by more
    /// than [`EXPLICIT_FRACTION`] of the admissible band.
    fn remainder(&self, h: &HeightField, dt: f64) -> Result<Vec<Complex64>> {
        let f = fourier::forward(&self.rhs(h)?);
        let r: Vec<Complex64> = f
            .iter()
            .zip(h.coeffs())
            .enumerate()
            .map(|(idx, (fi, hi))| fi + self.symbol_at(idx) * hi)
            .collect();
        let incr = dt * fourier::inverse(&r).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let limit = EXPLICIT_FRACTION * self.geometry.admissible_limit();
        if !(incr <= limit) {
            return Err(Error::StepRejected { dt, reason: format!("explicit increment {incr:.3e} exceeds {limit:.3e}") });
        }
        Ok(r)
    }

    fn finish(&self, state: &SimState, coeffs: Vec<Complex64>, dt: f64) -> Result<SimState> {
        let h = HeightField::from_coeffs(coeffs)?;
        h.check_admissible(&self.geometry)?;
        Ok(SimState { t: state.t + dt, h, step: state.step + 1 })
    }

    /// First-order step `h^{n+1}_k = (h^n_k + dt N_k) / (1 + dt lambda_k)`.
    pub fn step_imex(&self, state: &SimState, dt: f64) -> Result<SimState> {
        self.check_dt(dt)?;
        let n0 = self.remainder(&state.h, dt)?;
        let c = state
            .h
            .coeffs()
            .iter()
            .zip(&n0)
            .enumerate()
            .map(|(idx, (h, nn))| (h + dt * nn) / (1.0 + dt * self.symbol_at(idx)))
            .collect();
        self.finish(state, c, dt)
    }

    /// Second-order step: trapezoidal rule on the symbol, Heun predictor and
    /// corrector on the remainder.
    pub fn step_imex2(&self, state: &SimState, dt: f64) -> Result<SimState> {
        self.check_dt(dt)?;
        let h0 = state.h.coeffs();
        let n0 = self.remainder(&state.h, dt)?;
        let cn = |idx: usize, base: Complex64, nn: Complex64| {
            let l = self.symbol_at(idx);
            (base * (1.0 - 0.5 * dt * l) + dt * nn) / (1.0 + 0.5 * dt * l)
        };
        let pred: Vec<Complex64> = (0..h0.len()).map(|i| cn(i, h0[i], n0[i])).collect();
        let hp = HeightField::from_coeffs(pred)?;
        hp.check_admissible(&self.geometry)?;
        let n1 = self.remainder(&hp, dt)?;
        let c = (0..h0.len()).map(|i| cn(i, h0[i], 0.5 * (n0[i] + n1[i]))).collect();
        self.finish(state, c, dt)
    }

    pub fn step(&self, state: &SimState, dt: f64, scheme: Scheme) -> Result<SimState> {
        match scheme {
            Scheme::Imex1 => self.step_imex(state, dt),
            Scheme::Imex2 => self.step_imex2(state, dt),
        }
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::StepRejected { dt, reason: "time step must be positive".into() });
        }
        Ok(())
    }

    pub fn record(&self, state: &SimState, k_max: usize) -> Record {
        let g = &self.geometry;
        Record {
            t: state.t,
            area: area_unchecked(&state.h, g),
            perimeter: perimeter_unchecked(&state.h, g),
            h_linf: state.h.linf(),
            modes: (0..=k_max.min(self.n_theta / 2)).map(|k| state.h.mode(k)).collect(),
        }
    }

    /// `0.1 / lambda_k` for the given mode, or `None` when the rate vanishes.
    pub fn default_dt(&self, k: usize) -> Option<f64> {
        let l = self.symbols.get(k).copied().unwrap_or(0.0);
        (l > 0.0).then(|| 0.1 / l)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Record every this many accepted steps (the first and last state are
    /// always recorded).
    pub cadence: u64,
    pub k_max: usize,
    /// Maximum number of dt halvings within one step.
    pub max_halvings: u32,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub state: SimState,
    pub halt: Option<String>,
    /// Largest single-step perimeter increase (negative when strictly
    /// decreasing throughout).
    pub max_perimeter_increase: f64,
    /// Largest `|area(t) - area(0)| / area(0)` over all steps.
    pub max_area_drift: f64,
    /// Largest `|h(t) - h(0)|_inf` over all steps.
    pub max_drift: f64,
    pub halvings: u64,
}

/// Integrates from `state` to `opts.t_end`. `observer` sees every recorded
/// state.
pub fn run(
    flow: &Flow,
    mut state: SimState,
    opts: &RunOptions,
    mut observer: impl FnMut(&SimState, &Record) -> Result<()>,
) -> Result<RunOutput> {
    let g = flow.geometry;
    let h_init = state.h.clone();
    let mut series = TimeSeries::default();
    let rec0 = flow.record(&state, opts.k_max);
    let area0 = rec0.area;
    let mut perim = rec0.perimeter;
    observer(&state, &rec0)?;
    series.push(rec0)?;
    let tol_perim = 1e-12 * g.r;
    let mut out = RunOutput {
        series: TimeSeries::default(),
        state: state.clone(),
        halt: None,
        max_perimeter_increase: f64::NEG_INFINITY,
        max_area_drift: 0.0,
        max_drift: 0.0,
        halvings: 0,
    };
    let t_stop = opts.t_end * (1.0 - 1e-14);
    while state.t < t_stop {
        let mut dt = opts.dt.min(opts.t_end - state.t);
        let mut attempt = 0;
        let next = loop {
            let res = flow.step(&state, dt, opts.scheme);
            let retry = match &res {
                Ok(s) => perimeter_unchecked(&s.h, &g) > perim + tol_perim,
                Err(Error::Inadmissible { .. }) | Err(Error::StepRejected { .. }) | Err(Error::NotReal(_)) => true,
                Err(_) => false,
            };
            if retry && attempt < opts.max_halvings {
                attempt += 1;
                out.halvings += 1;
                dt *= 0.5;
                continue;
            }
            break res;
        };
        let next = match next {
            Ok(s) => s,
            Err(e @ (Error::Inadmissible { .. } | Error::StepRejected { .. } | Error::NotReal(_))) => {
                out.halt = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let p = perimeter_unchecked(&next.h, &g);
        out.max_perimeter_increase = out.max_perimeter_increase.max(p - perim);
        perim = p;
        let a = area_unchecked(&next.h, &g);
        out.max_area_drift = out.max_area_drift.max((a - area0).abs() / area0);
        let drift = next
            .h
            .values()
            .iter()
            .zip(h_init.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        out.max_drift = out.max_drift.max(drift);
        state = next;
        let last = state.t >= t_stop;
        if last || state.step % opts.cadence.max(1) == 0 {
            let r = flow.record(&state, opts.k_max);
            observer(&state, &r)?;
            series.push(r)?;
        }
    }
    out.series = series;
    out.state = state;
    Ok(out)
}

/// Least-squares decay rate of `|h_k(t)|` over `t in [t0, t1]`, returned as
/// `(rate, r_squared)` with `|h_k| ~ exp(-rate t)`.
pub fn fit_decay_rate(series: &TimeSeries, k: usize, window: (f64, f64)) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .records
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| {
            let a = r.modes.get(k).map(|c| c.norm()).unwrap_or(0.0);
            (r.t, a)
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::Argument(format!("window {window:?} holds {} records, need 3", pts.len())));
    }
    if pts.iter().any(|p| !(p.1 > 1e-12)) {
        return Err(Error::Argument(format!("mode {k} amplitude below 1e-12 inside window {window:?}")));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let dx = p.0 - mx;
        let dy = p.1.ln() - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Argument("degenerate time window".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((-slope, r2))
}
