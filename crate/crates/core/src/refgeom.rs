//! Reference circle `S_R`, height fields over it, the Hanzawa transform and
//! interface measurements.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fourier;
use crate::{Error, Result};

/// Relative admissibility margin: fields must satisfy `|h| <= a (1 - EPS_REL)`.
pub const ADMISSIBLE_EPS_REL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    /// Reference circle radius.
    #[serde(rename = "R")]
    pub r: f64,
    /// Outer wall radius.
    #[serde(rename = "R_outer")]
    pub r_outer: f64,
    /// Height band half-width.
    pub a: f64,
}

impl GeometryParams {
    pub fn new(r: f64, r_outer: f64, a: f64) -> Result<Self> {
        let g = Self { r, r_outer, a };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.r.is_finite() && self.r_outer.is_finite() && self.a.is_finite();
        if !finite || self.r <= 0.0 || self.r_outer <= self.r {
            return Err(Error::Geometry(format!(
                "need 0 < R < R_outer, got R = {}, R_outer = {}",
                self.r, self.r_outer
            )));
        }
        let room = (self.r_outer - self.r).min(self.r);
        if self.a <= 0.0 || 3.0 * self.a >= room {
            return Err(Error::Geometry(format!(
                "need 0 < a and 3a < min(R_outer - R, R) = {room}, got a = {}",
                self.a
            )));
        }
        Ok(())
    }

    /// Largest admissible sup-norm of a height field.
    pub fn admissible_limit(&self) -> f64 {
        self.a * (1.0 - ADMISSIBLE_EPS_REL)
    }
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self { r: 1.0, r_outer: 2.0, a: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysParams {
    pub sigma: f64,
    pub m: f64,
    /// Viscosity of the inner phase.
    pub mu_plus: f64,
    /// Viscosity of the outer phase.
    pub mu_minus: f64,
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("m", self.m),
            ("mu_plus", self.mu_plus),
            ("mu_minus", self.mu_minus),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Physics(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for PhysParams {
    fn default() -> Self {
        Self { sigma: 1.0, m: 1.0, mu_plus: 1.0, mu_minus: 2.0 }
    }
}

/// Real field on the uniform angle grid, kept in nodal and spectral form.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightField {
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

fn check_grid(n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::GridSize(n));
    }
    Ok(())
}

impl HeightField {
    pub fn zeros(n_theta: usize) -> Result<Self> {
        Self::from_values(vec![0.0; n_theta])
    }

    pub fn constant(n_theta: usize, c: f64) -> Result<Self> {
        Self::from_values(vec![c; n_theta])
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        check_grid(values.len())?;
        let coeffs = fourier::forward(&values);
        Ok(Self { values, coeffs })
    }

    pub fn from_fn(n_theta: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n_theta)?;
        Self::from_values(fourier::grid(n_theta).into_iter().map(f).collect())
    }

    /// Builds a field from FFT-ordered coefficients. Rejects coefficient sets
    /// that do not describe a real field.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        check_grid(n)?;
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut defect = coeffs[0].im.abs().max(coeffs[n / 2].im.abs());
        for k in 1..n / 2 {
            defect = defect.max((coeffs[k] - coeffs[n - k].conj()).norm());
        }
        if defect > 1e-12 * scale {
            return Err(Error::NotReal(defect));
        }
        let values = fourier::inverse(&coeffs);
        Ok(Self { values, coeffs })
    }

    /// Reassembles a field from both representations, as stored in snapshots.
    pub(crate) fn from_parts(values: Vec<f64>, coeffs: Vec<Complex64>) -> Result<Self> {
        check_grid(values.len())?;
        if coeffs.len() != values.len() {
            return Err(Error::Mismatch);
        }
        let back = fourier::inverse(&coeffs);
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let defect = back.iter().zip(&values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if !(defect <= 1e-12 * scale) {
            return Err(Error::NotReal(defect));
        }
        Ok(Self { values, coeffs })
    }

    /// Sum of `amp_cos cos(k theta) + amp_sin sin(k theta)` terms.
    pub fn from_modes(n_theta: usize, modes: &[(usize, f64, f64)]) -> Result<Self> {
        Self::from_fn(n_theta, |t| {
            modes
                .iter()
                .map(|&(k, c, s)| c * (k as f64 * t).cos() + s * (k as f64 * t).sin())
                .sum()
        })
    }

    pub fn n_theta(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `exp(i k theta)` for `0 <= k <= n/2`.
    pub fn mode(&self, k: usize) -> Complex64 {
        self.coeffs[k]
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Nodal samples of the `order`-th angular derivative.
    pub fn derivative(&self, order: u32) -> Vec<f64> {
        fourier::inverse(&fourier::derivative_coeffs(&self.coeffs, order))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        fourier::eval(&self.coeffs, theta)
    }

    /// `h(theta - phi)`.
    pub fn rotated(&self, phi: f64) -> Self {
        let coeffs = fourier::rotate(&self.coeffs, phi);
        let values = fourier::inverse(&coeffs);
        Self { values, coeffs }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| s * v).collect(),
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    pub fn check_admissible(&self, g: &GeometryParams) -> Result<()> {
        let linf = self.linf();
        let limit = g.admissible_limit();
        if !(linf <= limit) {
            return Err(Error::Inadmissible { linf, limit });
        }
        Ok(())
    }

    /// Discrete `L2(S_R)` inner product `R * sum_j f_j g_j * 2 pi / n`.
    pub fn inner(&self, other: &Self, g: &GeometryParams) -> f64 {
        let n = self.n_theta() as f64;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        g.r * s * 2.0 * PI / n
    }
}

/// Smooth cutoff with `chi = 1` on `|s| < 1/3`, `chi = 0` on `|s| > 2/3`.
///
/// The transition is `1 - S(3(|s| - 1/3))` with the step
/// `S(t) = 1 / (1 + exp((1 - 2t) / sqrt(t (1 - t))))`, whose slope peaks at
/// about 1.19, so `max |chi'|` is about 3.57.
#[derive(Clone, Copy, Debug, Default)]
pub struct CutoffProfile;

impl CutoffProfile {
    // Returns (S, S(1 - S)) without overflow.
    fn step_parts(t: f64) -> (f64, f64) {
        let q = (t * (1.0 - t)).sqrt();
        let g = (1.0 - 2.0 * t) / q;
        if g > 0.0 {
            let e = (-g).exp();
            (e / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
        } else {
            let e = g.exp();
            (1.0 / (1.0 + e), e / ((1.0 + e) * (1.0 + e)))
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let t = 3.0 * (s.abs() - 1.0 / 3.0);
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - Self::step_parts(t).0
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let t = 3.0 * (s.abs() - 1.0 / 3.0);
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let (_, s1s) = Self::step_parts(t);
        let q = t * (1.0 - t);
        let ds = s1s / (2.0 * q * q.sqrt());
        -3.0 * s.signum() * ds
    }
}

/// Radial profile `phi(rho) = chi((rho - R) / (4a))` of the Hanzawa transform.
pub fn radial_cutoff(g: &GeometryParams, rho: f64) -> (f64, f64) {
    let s = (rho - g.r) / (4.0 * g.a);
    let c = CutoffProfile;
    (c.eval(s), c.deriv(s) / (4.0 * g.a))
}

/// Hanzawa transform `x + chi(d(x)/(4a)) h(P x) nu(P x)`.
pub fn hanzawa_map(h: &HeightField, g: &GeometryParams, x: [f64; 2]) -> Result<[f64; 2]> {
    h.check_admissible(g)?;
    let rho = x[0].hypot(x[1]);
    if rho == 0.0 {
        return Ok(x);
    }
    let (phi, _) = radial_cutoff(g, rho);
    if phi == 0.0 {
        return Ok(x);
    }
    let theta = x[1].atan2(x[0]);
    let shift = phi * h.eval(theta) / rho;
    Ok([x[0] + shift * x[0], x[1] + shift * x[1]])
}

/// Unit outward normal of `r = R + h(theta)` at the grid angles.
pub fn interface_normal(h: &HeightField, g: &GeometryParams) -> Result<Vec<[f64; 2]>> {
    h.check_admissible(g)?;
    let dh = h.derivative(1);
    Ok(fourier::grid(h.n_theta())
        .iter()
        .zip(h.values().iter().zip(&dh))
        .map(|(&t, (&hv, &hp))| {
            let (s, c) = t.sin_cos();
            let rad = g.r + hv;
            let norm = rad.hypot(hp);
            // rad e_r - h' e_theta, normalized.
            let nx = (rad * c + hp * s) / norm;
            let ny = (rad * s - hp * c) / norm;
            [nx, ny]
        })
        .collect())
}

/// `(1/2) \oint (R + h)^2 dtheta` by the trapezoid rule.
pub fn enclosed_area(h: &HeightField, g: &GeometryParams) -> Result<f64> {
    h.check_admissible(g)?;
    Ok(area_unchecked(h, g))
}

pub(crate) fn area_unchecked(h: &HeightField, g: &GeometryParams) -> f64 {
    let n = h.n_theta() as f64;
    let s: f64 = h.values().iter().map(|v| (g.r + v) * (g.r + v)).sum();
    0.5 * s * 2.0 * PI / n
}

/// Arc length `\oint sqrt((R + h)^2 + h'^2) dtheta`, evaluated by the
/// trapezoidal rule on the 4x refined grid.
pub fn perimeter(h: &HeightField, g: &GeometryParams) -> Result<f64> {
    h.check_admissible(g)?;
    Ok(perimeter_unchecked(h, g))
}

pub(crate) fn perimeter_unchecked(h: &HeightField, g: &GeometryParams) -> f64 {
    let m = 4 * h.n_theta();
    let hv = fourier::inverse(&fourier::pad(h.coeffs(), m));
    let dv = fourier::inverse(&fourier::pad(&fourier::derivative_coeffs(h.coeffs(), 1), m));
    let s: f64 = hv.iter().zip(&dv).map(|(a, b)| (g.r + a).hypot(*b)).sum();
    s * 2.0 * PI / m as f64
}

/// Height function over `S_R` of the circle with centre `(y1, y2)` and radius
/// `R + y0`.
pub fn equilibrium_height(y: [f64; 3], g: &GeometryParams, n_theta: usize) -> Result<HeightField> {
    let [y0, y1, y2] = y;
    let rad = g.r + y0;
    let disc = rad * rad - y1 * y1 - y2 * y2;
    if rad <= 0.0 || disc <= 0.0 {
        return Err(Error::Argument(format!(
            "centre ({y1}, {y2}) is not inside the circle of radius {rad}"
        )));
    }
    let h = HeightField::from_fn(n_theta, |t| {
        let s = y1 * t.cos() + y2 * t.sin();
        s - g.r + (s * s + disc).sqrt()
    })?;
    h.check_admissible(g)?;
    Ok(h)
}

/// `Y_0 = 1`, `Y_1 = cos`, `Y_2 = sin`.
pub fn tangent_basis_kernel(n_theta: usize) -> Result<[HeightField; 3]> {
    Ok([
        HeightField::constant(n_theta, 1.0)?,
        HeightField::from_fn(n_theta, f64::cos)?,
        HeightField::from_fn(n_theta, f64::sin)?,
    ])
}
