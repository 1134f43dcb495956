//! Pull-back of the Laplacian through the Hanzawa transform.
//!
//! In reference polar coordinates `(rho, theta)` the transform reads
//! `r = F(rho, theta) = rho + phi(rho) h(theta)` with `phi` the radial cutoff.
//! Multiplying the transformed Laplacian by the area factor `F F_rho` gives
//! the divergence form
//!
//! ```text
//! d_rho(a eta_rho + b eta_theta) + d_theta(b eta_rho + c eta_theta) = 0,
//! a = (F^2 + F_theta^2) / (F F_rho),  b = -F_theta / F,  c = F_rho / F.
//! ```

use ndarray::Array2;

use super::grid::{Phase, RadialGrid};
use crate::refgeom::{radial_cutoff, GeometryParams, HeightField};
use crate::{Error, Result};

/// Map values at one reference point.
#[derive(Clone, Copy, Debug)]
pub struct PointMap {
    pub f: f64,
    pub f_rho: f64,
    pub f_theta: f64,
}

impl PointMap {
    pub fn new(g: &GeometryParams, rho: f64, h: f64, hp: f64) -> Self {
        let (phi, dphi) = radial_cutoff(g, rho);
        Self { f: rho + phi * h, f_rho: 1.0 + dphi * h, f_theta: phi * hp }
    }

    pub fn a(&self) -> f64 {
        (self.f * self.f + self.f_theta * self.f_theta) / (self.f * self.f_rho)
    }

    pub fn b(&self) -> f64 {
        -self.f_theta / self.f
    }

    pub fn c(&self) -> f64 {
        self.f_rho / self.f
    }

    /// Jacobian in the polar frame `(e_r, e_theta)` at radius `rho > 0`.
    pub fn polar_jacobian(&self, rho: f64) -> [[f64; 2]; 2] {
        [[self.f_rho, self.f_theta / rho], [0.0, self.f / rho]]
    }
}

fn rotate_to_cartesian(m: [[f64; 2]; 2], theta: f64) -> [[f64; 2]; 2] {
    // Q M Q^T with Q = [e_r e_theta].
    let (s, c) = theta.sin_cos();
    let q = [[c, -s], [s, c]];
    let mut qm = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            qm[i][j] = q[i][0] * m[0][j] + q[i][1] * m[1][j];
        }
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = qm[i][0] * q[j][0] + qm[i][1] * q[j][1];
        }
    }
    out
}

fn inverse_transpose(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[1][0] / det], [-m[0][1] / det, m[0][0] / det]]
}

/// Coefficients of one phase on its tensor grid (`rings x n_theta`).
#[derive(Clone, Debug)]
pub struct PhaseMetric {
    pub grid: RadialGrid,
    /// `a` and `b` at faces.
    pub a_face: Array2<f64>,
    pub b_face: Array2<f64>,
    /// `b` and `c` at nodes.
    pub b_node: Array2<f64>,
    pub c_node: Array2<f64>,
    /// Cartesian Jacobian of the transform, its inverse transpose and
    /// determinant at the nodes.
    pub jacobian: Array2<[[f64; 2]; 2]>,
    pub inv_t: Array2<[[f64; 2]; 2]>,
    pub det: Array2<f64>,
    /// True when the deformation vanishes identically on the ring.
    pub flat_node: Vec<bool>,
}

impl PhaseMetric {
    fn build(grid: RadialGrid, g: &GeometryParams, h: &[f64], hp: &[f64]) -> Result<Self> {
        let n = h.len();
        let rings = grid.nodes.len();
        let theta = crate::fourier::grid(n);
        let mut a_face = Array2::zeros((rings - 1, n));
        let mut b_face = Array2::zeros((rings - 1, n));
        for (i, &rho) in grid.faces.iter().enumerate() {
            for j in 0..n {
                let p = PointMap::new(g, rho, h[j], hp[j]);
                a_face[(i, j)] = p.a();
                b_face[(i, j)] = p.b();
            }
        }
        let ident = [[1.0, 0.0], [0.0, 1.0]];
        let mut b_node = Array2::zeros((rings, n));
        let mut c_node = Array2::zeros((rings, n));
        let mut jacobian = Array2::from_elem((rings, n), ident);
        let mut inv_t = Array2::from_elem((rings, n), ident);
        let mut det = Array2::from_elem((rings, n), 1.0);
        let mut flat_node = vec![true; rings];
        for (i, &rho) in grid.nodes.iter().enumerate() {
            if rho == 0.0 {
                // Pole: the cutoff vanishes, the map is the identity and the
                // node carries no angular flux.
                continue;
            }
            flat_node[i] = radial_cutoff(g, rho).0 == 0.0 && radial_cutoff(g, rho).1 == 0.0;
            for j in 0..n {
                let p = PointMap::new(g, rho, h[j], hp[j]);
                b_node[(i, j)] = p.b();
                c_node[(i, j)] = p.c();
                let pj = p.polar_jacobian(rho);
                let d = pj[0][0] * pj[1][1];
                if !(d > 0.0) {
                    return Err(Error::Degenerate { det: d, r: rho, theta: theta[j] });
                }
                let jc = rotate_to_cartesian(pj, theta[j]);
                jacobian[(i, j)] = jc;
                inv_t[(i, j)] = inverse_transpose(jc);
                det[(i, j)] = d;
            }
        }
        for i in 0..rings - 1 {
            for j in 0..n {
                if !(a_face[(i, j)] > 0.0) {
                    return Err(Error::Degenerate {
                        det: a_face[(i, j)],
                        r: grid.faces[i],
                        theta: theta[j],
                    });
                }
            }
        }
        Ok(Self { grid, a_face, b_face, b_node, c_node, jacobian, inv_t, det, flat_node })
    }
}

/// Radial resolution of the two phases (number of intervals).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Resolution {
    pub n_r_inner: usize,
    pub n_r_outer: usize,
}

impl Resolution {
    pub fn uniform(n_r: usize) -> Self {
        Self { n_r_inner: n_r, n_r_outer: n_r }
    }
}

/// Transformed metric on both phases together with interface data.
#[derive(Clone, Debug)]
pub struct TransformedMetric {
    pub geometry: GeometryParams,
    pub h: HeightField,
    pub inner: PhaseMetric,
    pub outer: PhaseMetric,
    /// Unit normal of the deformed interface at the grid angles.
    pub normal: Vec<[f64; 2]>,
    /// `|Gamma'(theta)| = sqrt((R + h)^2 + h'^2)`.
    pub arc: Vec<f64>,
}

impl TransformedMetric {
    pub fn phase(&self, p: Phase) -> &PhaseMetric {
        match p {
            Phase::Inner => &self.inner,
            Phase::Outer => &self.outer,
        }
    }
}

pub fn build_metric(h: &HeightField, g: &GeometryParams, res: Resolution) -> Result<TransformedMetric> {
    h.check_admissible(g)?;
    let hv = h.values();
    let hp = h.derivative(1);
    let inner = PhaseMetric::build(RadialGrid::new(Phase::Inner, g.r, g.r_outer, res.n_r_inner), g, hv, &hp)?;
    let outer = PhaseMetric::build(RadialGrid::new(Phase::Outer, g.r, g.r_outer, res.n_r_outer), g, hv, &hp)?;
    let normal = crate::refgeom::interface_normal(h, g)?;
    let arc = hv.iter().zip(&hp).map(|(v, d)| (g.r + v).hypot(*d)).collect();
    Ok(TransformedMetric { geometry: *g, h: h.clone(), inner, outer, normal, arc })
}
