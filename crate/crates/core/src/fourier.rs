//! Periodic Fourier utilities on the uniform angle grid `theta_j = 2 pi j / n`.
//!
//! Coefficients are stored in FFT order (`k = 0, 1, .., n/2, -n/2+1, .., -1`)
//! and normalized so that `f(theta) = sum_k c_k exp(i k theta)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((n, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    })
}

/// Signed wavenumber of FFT slot `idx` on an `n`-point grid. The Nyquist slot
/// maps to `+n/2`.
pub fn wavenumber(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// FFT slot of wavenumber `k` (must satisfy `|k| <= n/2`).
pub fn slot(k: i64, n: usize) -> usize {
    if k >= 0 {
        k as usize
    } else {
        (n as i64 + k) as usize
    }
}

pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Normalized forward transform of real samples.
pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, true).process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Normalized forward transform of complex samples.
pub fn forward_complex(values: &mut [Complex64]) {
    let n = values.len();
    plan(n, true).process(values);
    let s = 1.0 / n as f64;
    values.iter_mut().for_each(|c| *c *= s);
}

/// Inverse transform (synthesis) of complex samples in place.
pub fn inverse_complex(coeffs: &mut [Complex64]) {
    let n = coeffs.len();
    plan(n, false).process(coeffs);
}

/// Inverse transform returning the real part of the synthesized samples.
pub fn inverse(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    inverse_complex(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Spectral derivative of order `order`. The Nyquist mode is dropped for odd
/// orders, as is standard for real fields.
pub fn derivative_coeffs(coeffs: &[Complex64], order: u32) -> Vec<Complex64> {
    let n = coeffs.len();
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let k = wavenumber(idx, n);
            if order % 2 == 1 && 2 * k.unsigned_abs() as usize == n {
                return Complex64::new(0.0, 0.0);
            }
            c * Complex64::new(0.0, k as f64).powu(order)
        })
        .collect()
}

pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    inverse(&derivative_coeffs(&forward(values), order))
}

/// Zero-pads `coeffs` (length `n`) to length `m >= n`. The Nyquist coefficient
/// is split evenly between `+n/2` and `-n/2`.
pub fn pad(coeffs: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = coeffs.len();
    assert!(m >= n);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (idx, &c) in coeffs.iter().enumerate() {
        let k = wavenumber(idx, n);
        if 2 * k.unsigned_abs() as usize == n && m > n {
            out[slot(k, m)] += 0.5 * c;
            out[slot(-k, m)] += 0.5 * c;
        } else {
            out[slot(k, m)] += c;
        }
    }
    out
}

/// Truncates coefficients of length `m` back to `n <= m` modes, keeping
/// `|k| < n/2` and a real-symmetric Nyquist entry.
pub fn truncate(coeffs: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = coeffs.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let half = (n / 2) as i64;
    for k in -half + 1..half {
        out[slot(k, n)] = coeffs[slot(k, m)];
    }
    if m == n {
        out[n / 2] = coeffs[n / 2];
    } else {
        out[n / 2] = coeffs[slot(half, m)] + coeffs[slot(-half, m)];
    }
    out
}

/// Size of the 3/2-rule padded grid.
pub fn padded_len(n: usize) -> usize {
    (3 * n).div_ceil(2)
}

/// Evaluates a pointwise nonlinearity of several fields on the 3/2-padded grid
/// and returns the result truncated back to `n` modes (as nodal values).
///
/// Each input is given by its coefficients on the `n` grid.
pub fn dealiased<F>(inputs: &[&[Complex64]], f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = inputs[0].len();
    let m = padded_len(n);
    let fine: Vec<Vec<f64>> = inputs.iter().map(|c| inverse(&pad(c, m))).collect();
    let mut args = vec![0.0; inputs.len()];
    let vals: Vec<f64> = (0..m)
        .map(|j| {
            for (a, fld) in args.iter_mut().zip(&fine) {
                *a = fld[j];
            }
            f(&args)
        })
        .collect();
    inverse(&truncate(&forward(&vals), n))
}

/// Evaluates the trigonometric interpolant at an arbitrary angle.
pub fn eval(coeffs: &[Complex64], theta: f64) -> f64 {
    let n = coeffs.len();
    let mut s = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let k = wavenumber(idx, n);
        if 2 * k.unsigned_abs() as usize == n {
            s += c.re * (k as f64 * theta).cos();
        } else {
            let e = Complex64::from_polar(1.0, k as f64 * theta);
            s += (c * e).re;
        }
    }
    s
}

/// Coefficients of `f(theta - phi)`.
pub fn rotate(coeffs: &[Complex64], phi: f64) -> Vec<Complex64> {
    let n = coeffs.len();
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let k = wavenumber(idx, n);
            if 2 * k.unsigned_abs() as usize == n {
                // Nyquist mode cannot be shifted by a fractional cell and stay real.
                Complex64::new((c * Complex64::from_polar(1.0, -(k as f64) * phi)).re, 0.0)
            } else {
                c * Complex64::from_polar(1.0, -(k as f64) * phi)
            }
        })
        .collect()
}
