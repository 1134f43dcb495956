//! Curvature of the graph interface `r = R + h(theta)` written as
//! `K(h) = P(h)h + Q(h)` with local-coordinate coefficients, and its
//! linearization at `h = 0`.
//!
//! The surface is parametrized by `X(theta, r) = (R + r)(cos theta, sin theta)`.
//! With one surface coordinate the coefficient formulas reduce to scalars:
//!
//! ```text
//! p11 = (-l^2 w^11 + (w^11)^2 h'^2) / l^3
//! p1  = (l^2 w^11 G1_11 + (w^11)^2 G2_11 h' + 2 w^11 G1_21 h' - (w^11)^2 G1_11 h'^2) / l^3
//! q   = -w^11 G2_11 / l,        l = sqrt(1 + w^11 h'^2)
//! ```
//!
//! where `G1_11`, `G1_21` are tangential and `G2_11` normal Christoffel
//! contractions of second derivatives of `X`. Evaluation is by collocation at
//! the grid angles with spectral derivatives.

use crate::fourier;
use crate::refgeom::{GeometryParams, HeightField};
use crate::{Error, Result};

/// Fraction of spectral energy above `|k| = n/3` that flags underresolution.
pub const TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub underresolved: bool,
}

/// Nodal coefficient fields of `K(h) = P(h)h + Q(h)`.
#[derive(Clone, Debug)]
pub struct CurvatureDecomposition {
    pub p11: Vec<f64>,
    pub p1: Vec<f64>,
    pub q: Vec<f64>,
    pub w11: Vec<f64>,
    pub w11_inv: Vec<f64>,
    pub l: Vec<f64>,
    pub gamma1_11: Vec<f64>,
    pub gamma2_11: Vec<f64>,
    pub gamma1_21: Vec<f64>,
    pub underresolved: bool,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// True when the spectral tail above `n/3` carries more than
/// [`TAIL_TOLERANCE`] of the energy.
pub fn is_underresolved(h: &HeightField) -> bool {
    let n = h.n_theta();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (idx, c) in h.coeffs().iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if 3 * fourier::wavenumber(idx, n).unsigned_abs() as usize > n {
            tail += e;
        }
    }
    total > 0.0 && tail > TAIL_TOLERANCE * total
}

impl CurvatureDecomposition {
    pub fn new(h: &HeightField, g: &GeometryParams) -> Result<Self> {
        h.check_admissible(g)?;
        let n = h.n_theta();
        let dh = h.derivative(1);
        let theta = fourier::grid(n);
        let mut out = Self {
            p11: Vec::with_capacity(n),
            p1: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            w11: Vec::with_capacity(n),
            w11_inv: Vec::with_capacity(n),
            l: Vec::with_capacity(n),
            gamma1_11: Vec::with_capacity(n),
            gamma2_11: Vec::with_capacity(n),
            gamma1_21: Vec::with_capacity(n),
            underresolved: is_underresolved(h),
        };
        for j in 0..n {
            let (s, c) = theta[j].sin_cos();
            let r = g.r + h.values()[j];
            // Derivatives of X at (theta, h(theta)).
            let x_t = [-r * s, r * c];
            let x_tt = [-r * c, -r * s];
            let x_r = [c, s];
            let x_rt = [-s, c];

            let w11 = dot(x_t, x_t);
            let wi = 1.0 / w11;
            let g1_11 = wi * dot(x_tt, x_t);
            let g2_11 = dot(x_tt, x_r);
            let g1_21 = wi * dot(x_rt, x_t);

            let d = dh[j];
            let l2 = 1.0 + wi * d * d;
            let l = l2.sqrt();
            let l3 = l2 * l;

            let p11 = (-l2 * wi + wi * wi * d * d) / l3;
            let p1 = (l2 * wi * g1_11 + wi * wi * g2_11 * d + 2.0 * wi * g1_21 * d
                - wi * wi * g1_11 * d * d)
                / l3;
            let q = -wi * g2_11 / l;

            out.p11.push(p11);
            out.p1.push(p1);
            out.q.push(q);
            out.w11.push(w11);
            out.w11_inv.push(wi);
            out.l.push(l);
            out.gamma1_11.push(g1_11);
            out.gamma2_11.push(g2_11);
            out.gamma1_21.push(g1_21);
        }
        Ok(out)
    }

    /// `P(h) v = p11 v'' + p1 v'` at the nodes.
    pub fn apply_p(&self, v: &HeightField) -> Result<Vec<f64>> {
        if v.n_theta() != self.p11.len() {
            return Err(Error::Mismatch);
        }
        let d1 = v.derivative(1);
        let d2 = v.derivative(2);
        Ok((0..d1.len()).map(|j| self.p11[j] * d2[j] + self.p1[j] * d1[j]).collect())
    }

    /// `P(h)h + Q(h)`.
    pub fn assemble(&self, h: &HeightField) -> Result<Vec<f64>> {
        let mut k = self.apply_p(h)?;
        k.iter_mut().zip(&self.q).for_each(|(a, q)| *a += q);
        Ok(k)
    }
}

pub fn curvature_decomposition(h: &HeightField, g: &GeometryParams) -> Result<CurvatureDecomposition> {
    CurvatureDecomposition::new(h, g)
}

/// Curvature of `Gamma_h` pulled back to the reference circle, with `K(0) = 1/R`.
pub fn curvature(h: &HeightField, g: &GeometryParams) -> Result<CurvatureField> {
    let dec = CurvatureDecomposition::new(h, g)?;
    Ok(CurvatureField { values: dec.assemble(h)?, underresolved: dec.underresolved })
}

/// Mode-`k` symbol `(k^2 - 1)/R^2` of `DK(0)`.
pub fn dk0_symbol(k: i64, g: &GeometryParams) -> f64 {
    let k = k as f64;
    (k * k - 1.0) / (g.r * g.r)
}

/// Spectral application of `DK(0)`.
pub fn dk0_apply(v: &HeightField, g: &GeometryParams) -> HeightField {
    let n = v.n_theta();
    let c = v
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, &c)| c * dk0_symbol(fourier::wavenumber(idx, n), g))
        .collect();
    HeightField::from_coeffs(c).expect("symbol is even in k")
}

/// Central difference `(K(s v) - K(-s v)) / (2s)`.
pub fn dk0_apply_fd(h_dir: &HeightField, g: &GeometryParams, step: f64) -> Result<Vec<f64>> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::Argument(format!("finite-difference step {step} outside [1e-7, 1e-3]")));
    }
    let plus = curvature(&h_dir.scaled(step), g)?;
    let minus = curvature(&h_dir.scaled(-step), g)?;
    Ok(plus
        .values
        .iter()
        .zip(&minus.values)
        .map(|(a, b)| (a - b) / (2.0 * step))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn g() -> GeometryParams {
        GeometryParams::new(1.0, 2.0, 0.3).unwrap()
    }

    #[test]
    fn circles() {
        let g = g();
        let k = curvature(&HeightField::zeros(32).unwrap(), &g).unwrap();
        assert!(k.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let k = curvature(&HeightField::constant(32, 0.1).unwrap(), &g).unwrap();
        assert!(k.values.iter().all(|v| (v - 1.0 / 1.1).abs() < 1e-15));
        assert!(!k.underresolved);
    }

    #[test]
    fn coefficients_at_reference_circle() {
        let g = GeometryParams::new(1.5, 3.0, 0.3).unwrap();
        let d = curvature_decomposition(&HeightField::zeros(16).unwrap(), &g).unwrap();
        for j in 0..16 {
            assert_abs_diff_eq!(d.w11[j], 2.25, epsilon = 1e-15);
            assert_abs_diff_eq!(d.l[j], 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(d.gamma1_11[j], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(d.gamma2_11[j], -1.5, epsilon = 1e-15);
            assert_abs_diff_eq!(d.gamma1_21[j], 1.0 / 1.5, epsilon = 1e-15);
            assert_abs_diff_eq!(d.q[j], 1.0 / 1.5, epsilon = 1e-15);
            assert_abs_diff_eq!(d.p11[j], -1.0 / 2.25, epsilon = 1e-15);
            assert_abs_diff_eq!(d.p1[j], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn linearization_splits_into_p0_and_dq0() {
        // P(0)v = -v''/R^2 and DQ(0)v = -v/R^2, so DK(0)v = -(v + v'')/R^2.
        let g = g();
        let v = HeightField::from_fn(64, |t| (3.0 * t).cos() + 0.5 * (2.0 * t).sin()).unwrap();
        let d = curvature_decomposition(&HeightField::zeros(64).unwrap(), &g).unwrap();
        let p0v = d.apply_p(&v).unwrap();
        let v2 = v.derivative(2);
        for j in 0..64 {
            assert_abs_diff_eq!(p0v[j], -v2[j], epsilon = 1e-12);
        }
        let dk = dk0_apply(&v, &g);
        for j in 0..64 {
            assert_abs_diff_eq!(dk.values()[j], -(v.values()[j] + v2[j]), epsilon = 1e-12);
        }
    }

    #[test]
    fn symbol_examples() {
        let g = g();
        assert_eq!(dk0_symbol(1, &g), 0.0);
        assert_eq!(dk0_symbol(0, &g), -1.0);
        assert_eq!(dk0_symbol(2, &g), 3.0);
        assert_eq!(dk0_symbol(-2, &g), 3.0);
    }

    #[test]
    fn fd_examples() {
        let g = g();
        let c2 = HeightField::from_fn(64, |t| (2.0 * t).cos()).unwrap();
        let fd = dk0_apply_fd(&c2, &g, 1e-4).unwrap();
        for (f, v) in fd.iter().zip(c2.values()) {
            assert_abs_diff_eq!(*f, 3.0 * v, epsilon = 3e-6);
        }
        let one = HeightField::constant(64, 1.0).unwrap();
        let fd = dk0_apply_fd(&one, &g, 1e-4).unwrap();
        assert!(fd.iter().all(|v| (v + 1.0).abs() < 1e-7));
        assert!(dk0_apply_fd(&one, &g, 1e-2).is_err());
    }

    #[test]
    fn underresolution_flag() {
        let h = HeightField::from_fn(32, |t| 0.01 * (14.0 * t).cos()).unwrap();
        assert!(curvature(&h, &g()).unwrap().underresolved);
    }
}
