//! TOML run configuration, validation with field paths, and shipped presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::linstab::Route;
use crate::msflow::{RunOptions, Scheme};
use crate::potential::Resolution;
use crate::refgeom::{equilibrium_height, GeometryParams, HeightField, PhysParams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n_theta: usize,
    pub n_r_inner: usize,
    pub n_r_outer: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_halvings")]
    pub max_halvings: u32,
}

fn default_halvings() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    /// `(k, amp_cos, amp_sin)` triples.
    #[serde(default)]
    pub modes: Option<Vec<(usize, f64, f64)>>,
    /// Equilibrium parameters `(y0, y1, y2)`.
    #[serde(default)]
    pub equilibrium: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    /// Highest mode written to the time series.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Time window for decay-rate fits; defaults to `[0.1, 0.6] * t_end`.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
}

fn default_cadence() -> u64 {
    10
}
fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}
fn default_k_max() -> usize {
    8
}

impl Default for Output {
    fn default() -> Self {
        Self {
            cadence: default_cadence(),
            directory: default_directory(),
            formats: default_formats(),
            k_max: default_k_max(),
            fit_window: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub geometry: GeometryParams,
    pub physics: PhysParams,
    pub discretization: Discretization,
    pub initial: Initial,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Inclusive mode range `[first, last]`.
    pub modes: [usize; 2],
    pub n_r: usize,
    #[serde(default = "default_route")]
    pub route: Route,
}

fn default_route() -> Route {
    Route::Retained
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub geometry: GeometryParams,
    pub physics: PhysParams,
    pub spectrum: SpectrumSection,
}

pub const PRESETS: [(&str, &str); 4] = [
    ("mode3-decay", include_str!("../../../presets/mode3-decay.toml")),
    ("equilibrium-hold", include_str!("../../../presets/equilibrium-hold.toml")),
    ("two-mode-mix", include_str!("../../../presets/two-mode-mix.toml")),
    ("spectrum-default", include_str!("../../../presets/spectrum-default.toml")),
];

pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::Config { path: "preset".into(), msg: format!("unknown preset `{name}`") })
}

fn err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config { path: path.into(), msg: msg.into() }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(err(path, format!("must be positive and finite, got {v}")))
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(src: &str) -> Result<T> {
    toml::from_str(src).map_err(|e| {
        let path = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_else(|| "<document>".into());
        err(&path, e.message().to_string())
    })
}

fn validate_geometry(g: &GeometryParams) -> Result<()> {
    positive("geometry.R", g.r)?;
    positive("geometry.R_outer", g.r_outer)?;
    if g.r_outer <= g.r {
        return Err(err("geometry.R_outer", format!("must exceed R = {}, got {}", g.r, g.r_outer)));
    }
    positive("geometry.a", g.a)?;
    let room = (g.r_outer - g.r).min(g.r);
    if 3.0 * g.a >= room {
        return Err(err("geometry.a", format!("constraint 3a < min(R_outer - R, R) violated: 3a = {} >= {room}", 3.0 * g.a)));
    }
    Ok(())
}

fn validate_physics(p: &PhysParams) -> Result<()> {
    positive("physics.sigma", p.sigma)?;
    positive("physics.m", p.m)?;
    positive("physics.mu_plus", p.mu_plus)?;
    positive("physics.mu_minus", p.mu_minus)
}

impl SimConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let c: Self = parse_toml(src)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), e.to_string()))?;
        Self::from_toml(&src)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_toml(preset_source(name)?)
    }

    /// Loads `preset:<name>` or a file path.
    pub fn resolve(spec: &str) -> Result<Self> {
        match spec.strip_prefix("preset:") {
            Some(name) => Self::preset(name),
            None => Self::load(Path::new(spec)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_geometry(&self.geometry)?;
        validate_physics(&self.physics)?;
        let d = &self.discretization;
        if d.n_theta < 8 || !d.n_theta.is_power_of_two() {
            return Err(err("discretization.n_theta", format!("must be a power of two >= 8, got {}", d.n_theta)));
        }
        if d.n_r_inner < 8 {
            return Err(err("discretization.n_r_inner", format!("must be at least 8, got {}", d.n_r_inner)));
        }
        if d.n_r_outer < 8 {
            return Err(err("discretization.n_r_outer", format!("must be at least 8, got {}", d.n_r_outer)));
        }
        positive("discretization.dt", d.dt)?;
        positive("discretization.t_end", d.t_end)?;

        let i = &self.initial;
        match (&i.modes, &i.equilibrium) {
            (Some(_), Some(_)) => return Err(err("initial", "give either `modes` or `equilibrium`, not both")),
            (None, None) => return Err(err("initial", "one of `modes` or `equilibrium` is required")),
            (Some(modes), None) => {
                for (j, &(k, c, s)) in modes.iter().enumerate() {
                    if 2 * k >= d.n_theta {
                        return Err(err(&format!("initial.modes[{j}]"), format!("mode {k} is not below n_theta/2 = {}", d.n_theta / 2)));
                    }
                    if !(c.is_finite() && s.is_finite()) {
                        return Err(err(&format!("initial.modes[{j}]"), "amplitudes must be finite"));
                    }
                }
            }
            (None, Some(_)) => {}
        }
        self.initial_height().map_err(|e| err("initial", e.to_string()))?;

        let o = &self.output;
        if o.cadence == 0 {
            return Err(err("output.cadence", "must be at least 1"));
        }
        for (j, f) in o.formats.iter().enumerate() {
            if f != "csv" && f != "json" {
                return Err(err(&format!("output.formats[{j}]"), format!("unknown format `{f}`, expected `csv` or `json`")));
            }
        }
        if let Some([t0, t1]) = o.fit_window {
            if !(t0 >= 0.0 && t1 > t0) {
                return Err(err("output.fit_window", format!("need 0 <= t0 < t1, got [{t0}, {t1}]")));
            }
        }
        Ok(())
    }

    pub fn resolution(&self) -> Resolution {
        Resolution { n_r_inner: self.discretization.n_r_inner, n_r_outer: self.discretization.n_r_outer }
    }

    pub fn initial_height(&self) -> Result<HeightField> {
        let n = self.discretization.n_theta;
        let h = match (&self.initial.modes, self.initial.equilibrium) {
            (Some(m), _) => HeightField::from_modes(n, m)?,
            (None, Some(y)) => equilibrium_height(y, &self.geometry, n)?,
            (None, None) => return Err(err("initial", "no initial condition")),
        };
        h.check_admissible(&self.geometry)?;
        Ok(h)
    }

    pub fn run_options(&self) -> RunOptions {
        let d = &self.discretization;
        RunOptions {
            dt: d.dt,
            t_end: d.t_end,
            scheme: d.scheme,
            cadence: self.output.cadence,
            k_max: self.output.k_max.min(d.n_theta / 2),
            max_halvings: d.max_halvings,
        }
    }

    pub fn fit_window(&self) -> (f64, f64) {
        let t = self.discretization.t_end;
        self.output.fit_window.map(|[a, b]| (a, b)).unwrap_or((0.1 * t, 0.6 * t))
    }
}

impl SpectrumConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let c: Self = parse_toml(src)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        validate_geometry(&self.geometry)?;
        validate_physics(&self.physics)?;
        let [a, b] = self.spectrum.modes;
        if a > b {
            return Err(err("spectrum.modes", format!("empty range {a}..{b}")));
        }
        if self.spectrum.n_r < 32 {
            return Err(err("spectrum.n_r", format!("must be at least 32, got {}", self.spectrum.n_r)));
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_toml(preset_source(name)?)
    }
}
