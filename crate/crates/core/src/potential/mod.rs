//! Two-phase chemical potential on the transformed fixed domain.
//!
//! `solve_potential` computes the solution operator `S(h)`: harmonic
//! extensions of Dirichlet data on the deformed interface into the inner disk
//! and the outer annulus (homogeneous Neumann at the wall), posed on the
//! reference grids through the transformed metric. `jump_flux` is `B(h)`, the
//! mobility times the jump (outside minus inside) of the normal derivative.
//!
//! Discretization: conservative finite volumes on stretched radial grids,
//! Fourier collocation in the angle. Both phases are solved independently by
//! GMRES, right-preconditioned with per-mode tridiagonal solves built from
//! angle-averaged coefficients (exact at `h = 0`).

mod grid;
mod krylov;
mod metric;

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

pub use grid::{Phase, RadialGrid, STRETCH};
pub use krylov::{gmres, tridiag_solve, GmresOptions, GmresStats};
pub use metric::{build_metric, PhaseMetric, PointMap, Resolution, TransformedMetric};

use crate::curvature::{dk0_symbol, is_underresolved};
use crate::fourier;
use crate::par::{self, Exec};
use crate::refgeom::{GeometryParams, HeightField, PhysParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub gmres: GmresOptions,
    pub exec: Exec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { gmres: GmresOptions::default(), exec: Exec::default() }
    }
}

/// Potential sampled on both reference grids (`rings x n_theta`), including
/// the interface rings.
#[derive(Clone, Debug)]
pub struct TwoPhaseField {
    pub metric: Arc<TransformedMetric>,
    pub inner: Array2<f64>,
    pub outer: Array2<f64>,
    pub stats: [GmresStats; 2],
    pub underresolved: bool,
}

impl TwoPhaseField {
    pub fn trace_in(&self) -> Vec<f64> {
        self.inner.row(self.inner.nrows() - 1).to_vec()
    }

    pub fn trace_out(&self) -> Vec<f64> {
        self.outer.row(0).to_vec()
    }

    pub fn phase(&self, p: Phase) -> &Array2<f64> {
        match p {
            Phase::Inner => &self.inner,
            Phase::Outer => &self.outer,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Discrete operator of one phase.
struct PhaseOp<'a> {
    pm: &'a PhaseMetric,
    n: usize,
    exec: Exec,
    /// Angle averages used by the preconditioner.
    a_bar: Vec<f64>,
    c_bar: Vec<f64>,
    /// Scale of the non-axisymmetric pole rows.
    pole_scale: f64,
}

impl<'a> PhaseOp<'a> {
    fn new(pm: &'a PhaseMetric, exec: Exec) -> Self {
        let n = pm.a_face.ncols();
        let a_bar: Vec<f64> = pm.a_face.rows().into_iter().map(|r| mean(r.as_slice().unwrap())).collect();
        let c_bar: Vec<f64> = pm.c_node.rows().into_iter().map(|r| mean(r.as_slice().unwrap())).collect();
        let pole_scale = a_bar[0] / pm.grid.spacing[0];
        Self { pm, n, exec, a_bar, c_bar, pole_scale }
    }

    fn rings(&self) -> usize {
        self.pm.grid.nodes.len()
    }

    /// Ring indices carrying unknowns.
    fn unknown_rings(&self) -> std::ops::Range<usize> {
        match self.pm.grid.phase {
            Phase::Inner => 0..self.rings() - 1,
            Phase::Outer => 1..self.rings(),
        }
    }

    fn theta_derivs(&self, eta: &Array2<f64>) -> Array2<f64> {
        let n = self.n;
        let mut out = Array2::zeros(eta.raw_dim());
        let src = eta.as_slice().unwrap();
        par::for_each_chunk_mut(self.exec, out.as_slice_mut().unwrap(), n, |i, row| {
            row.copy_from_slice(&fourier::derivative(&src[i * n..(i + 1) * n], 1));
        });
        out
    }

    fn face_fluxes(&self, eta: &Array2<f64>, eta_t: &Array2<f64>) -> Array2<f64> {
        let n = self.n;
        let pm = self.pm;
        let mut out = Array2::zeros((self.rings() - 1, n));
        par::for_each_chunk_mut(self.exec, out.as_slice_mut().unwrap(), n, |i, row| {
            let dr = pm.grid.spacing[i];
            for j in 0..n {
                row[j] = pm.a_face[(i, j)] * (eta[(i + 1, j)] - eta[(i, j)]) / dr
                    + pm.b_face[(i, j)] * 0.5 * (eta_t[(i, j)] + eta_t[(i + 1, j)]);
            }
        });
        out
    }

    /// Angular divergence `d_theta(b eta_rho + c eta_theta)` at node `i`.
    fn node_t(&self, eta: &Array2<f64>, eta_t: &Array2<f64>, i: usize) -> Vec<f64> {
        let pm = self.pm;
        let n = self.n;
        if pm.grid.nodes[i] == 0.0 {
            return vec![0.0; n];
        }
        if pm.flat_node[i] {
            let c = 1.0 / pm.grid.nodes[i];
            let row: Vec<f64> = eta.row(i).to_vec();
            return fourier::derivative(&row, 2).into_iter().map(|v| c * v).collect();
        }
        let (i0, w) = pm.grid.d1_weights(i);
        let q: Vec<f64> = (0..n)
            .map(|j| {
                let er = w[0] * eta[(i0, j)] + w[1] * eta[(i0 + 1, j)] + w[2] * eta[(i0 + 2, j)];
                pm.b_node[(i, j)] * er + pm.c_node[(i, j)] * eta_t[(i, j)]
            })
            .collect();
        fourier::derivative(&q, 1)
    }

    /// Residual rows for the unknown rings, in ring order.
    fn residual(&self, eta: &Array2<f64>) -> Vec<f64> {
        let n = self.n;
        let rings = self.rings();
        let eta_t = self.theta_derivs(eta);
        let flux = self.face_fluxes(eta, &eta_t);
        let unknown = self.unknown_rings();
        let first = unknown.start;
        let mut out = vec![0.0; unknown.len() * n];
        par::for_each_chunk_mut(self.exec, &mut out, n, |u, row| {
            let i = first + u;
            if self.pm.grid.phase == Phase::Inner && i == 0 {
                let fbar = mean(flux.row(0).as_slice().unwrap());
                let e0 = eta.row(0);
                let ebar = mean(e0.as_slice().unwrap());
                for j in 0..n {
                    row[j] = fbar + self.pole_scale * (e0[j] - ebar);
                }
                return;
            }
            let t = self.node_t(eta, &eta_t, i);
            let vol = self.pm.grid.vol[i];
            for j in 0..n {
                let up = if i < rings - 1 { flux[(i, j)] } else { 0.0 };
                row[j] = up - flux[(i - 1, j)] + vol * t[j];
            }
        });
        out
    }

    fn embed(&self, x: &[f64], dirichlet: Option<&[f64]>) -> Array2<f64> {
        let n = self.n;
        let mut eta = Array2::zeros((self.rings(), n));
        let first = self.unknown_rings().start;
        for (u, chunk) in x.chunks(n).enumerate() {
            eta.row_mut(first + u).as_slice_mut().unwrap().copy_from_slice(chunk);
        }
        if let Some(d) = dirichlet {
            let i = self.pm.grid.interface_node();
            eta.row_mut(i).as_slice_mut().unwrap().copy_from_slice(d);
        }
        eta
    }

    /// Tridiagonal rows of the mode-`k` preconditioner over the unknown rings.
    fn mode_matrix(&self, k: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let g = &self.pm.grid;
        let rings = self.rings();
        let unknown = self.unknown_rings();
        let nu = unknown.len();
        let (mut lo, mut di, mut up) = (vec![0.0; nu], vec![0.0; nu], vec![0.0; nu]);
        for (u, i) in unknown.enumerate() {
            if g.phase == Phase::Inner && i == 0 {
                if k == 0.0 {
                    di[u] = -self.pole_scale;
                    up[u] = self.pole_scale;
                } else {
                    di[u] = self.pole_scale;
                }
                continue;
            }
            let wl = self.a_bar[i - 1] / g.spacing[i - 1];
            let wr = if i < rings - 1 { self.a_bar[i] / g.spacing[i] } else { 0.0 };
            lo[u] = wl;
            up[u] = wr;
            di[u] = -wl - wr - g.vol[i] * k * k * self.c_bar[i];
        }
        (lo, di, up)
    }

    fn preconditioner(&self) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
        let n = self.n;
        let mats: Vec<_> = (0..=n / 2).map(|k| self.mode_matrix(k as f64)).collect();
        move |v: &[f64]| {
            let nu = v.len() / n;
            let spectra: Vec<Vec<Complex64>> = par::map_range(self.exec, nu, |u| fourier::forward(&v[u * n..(u + 1) * n]));
            let cols: Vec<Vec<Complex64>> = par::map_range(self.exec, n, |idx| {
                let k = fourier::wavenumber(idx, n).unsigned_abs() as usize;
                let (lo, di, up) = &mats[k];
                let mut col: Vec<Complex64> = spectra.iter().map(|s| s[idx]).collect();
                tridiag_solve(lo, di, up, &mut col);
                col
            });
            let rows: Vec<Vec<f64>> = par::map_range(self.exec, nu, |u| {
                let c: Vec<Complex64> = cols.iter().map(|col| col[u]).collect();
                fourier::inverse(&c)
            });
            rows.concat()
        }
    }

    fn solve(&self, dirichlet: &[f64], opts: GmresOptions) -> (Array2<f64>, GmresStats) {
        let n = self.n;
        let nu = self.unknown_rings().len();
        let zero = vec![0.0; nu * n];
        let rhs: Vec<f64> = self.residual(&self.embed(&zero, Some(dirichlet))).into_iter().map(|v| -v).collect();
        let mut x = zero;
        let pc = self.preconditioner();
        let stats = gmres(|v| self.residual(&self.embed(v, None)), &pc, &rhs, &mut x, opts);
        (self.embed(&x, Some(dirichlet)), stats)
    }

    /// Conormal flux `a eta_rho + b eta_theta` across the interface, per unit
    /// angle, in the `+rho` direction.
    fn interface_flux(&self, eta: &Array2<f64>) -> Vec<f64> {
        let n = self.n;
        let g = &self.pm.grid;
        let i = g.interface_node();
        // Only rings near the interface are needed.
        let (lo, hi) = match g.phase {
            Phase::Inner => (i - 2, i),
            Phase::Outer => (0, 2),
        };
        let mut eta_t = Array2::zeros(eta.raw_dim());
        for r in lo..=hi {
            let d = fourier::derivative(eta.row(r).as_slice().unwrap(), 1);
            eta_t.row_mut(r).as_slice_mut().unwrap().copy_from_slice(&d);
        }
        let t = self.node_t(eta, &eta_t, i);
        let vol = g.vol[i];
        let face = match g.phase {
            Phase::Inner => i - 1,
            Phase::Outer => 0,
        };
        let dr = g.spacing[face];
        (0..n)
            .map(|j| {
                let f = self.pm.a_face[(face, j)] * (eta[(face + 1, j)] - eta[(face, j)]) / dr
                    + self.pm.b_face[(face, j)] * 0.5 * (eta_t[(face, j)] + eta_t[(face + 1, j)]);
                match g.phase {
                    Phase::Inner => f - vol * t[j],
                    Phase::Outer => f + vol * t[j],
                }
            })
            .collect()
    }
}

/// Solves for the potential with Dirichlet data on the interface using a
/// prebuilt metric.
pub fn solve_with_metric(metric: Arc<TransformedMetric>, dirichlet: &[f64], opts: SolveOptions) -> Result<TwoPhaseField> {
    let n = metric.h.n_theta();
    if dirichlet.len() != n {
        return Err(Error::Argument(format!("dirichlet data has {} samples, grid has {n}", dirichlet.len())));
    }
    // Shifting by one sample reproduces constant data exactly.
    let shift = dirichlet[0];
    let data: Vec<f64> = dirichlet.iter().map(|v| v - shift).collect();
    let (inner, outer) = par::join(
        opts.exec,
        || PhaseOp::new(&metric.inner, opts.exec).solve(&data, opts.gmres),
        || PhaseOp::new(&metric.outer, opts.exec).solve(&data, opts.gmres),
    );
    for st in [&inner.1, &outer.1] {
        if !st.converged {
            return Err(Error::Solver { residual: st.residual, iterations: st.iterations });
        }
    }
    let underresolved = is_underresolved(&metric.h);
    let (mut ein, sin) = inner;
    let (mut eout, sout) = outer;
    ein.mapv_inplace(|v| v + shift);
    eout.mapv_inplace(|v| v + shift);
    Ok(TwoPhaseField { metric, inner: ein, outer: eout, stats: [sin, sout], underresolved })
}

pub fn solve_potential(
    h: &HeightField,
    dirichlet: &[f64],
    g: &GeometryParams,
    res: Resolution,
    opts: SolveOptions,
) -> Result<TwoPhaseField> {
    let metric = Arc::new(build_metric(h, g, res)?);
    solve_with_metric(metric, dirichlet, opts)
}

/// Conormal fluxes `(G_in, G_out)` of the potential through the interface per
/// unit reference angle. `G / |Gamma'|` is the normal derivative.
pub fn interface_fluxes(eta: &TwoPhaseField) -> (Vec<f64>, Vec<f64>) {
    let m = &eta.metric;
    let gin = PhaseOp::new(&m.inner, Exec::Sequential).interface_flux(&eta.inner);
    let gout = PhaseOp::new(&m.outer, Exec::Sequential).interface_flux(&eta.outer);
    (gin, gout)
}

/// `m [[nu_h . grad_h eta]]` with the jump taken outside minus inside.
pub fn jump_flux(h: &HeightField, eta: &TwoPhaseField, m: f64, g: &GeometryParams) -> Result<Vec<f64>> {
    if eta.metric.h.values() != h.values() || eta.metric.geometry != *g {
        return Err(Error::Mismatch);
    }
    let (gin, gout) = interface_fluxes(eta);
    Ok(gin.iter().zip(&gout).zip(&eta.metric.arc).map(|((i, o), s)| m * (o - i) / s).collect())
}

/// Jump of the normal derivative of the two-phase harmonic extension of
/// `cos(k theta)` from the reference circle.
pub fn dtn_jump_symbol(k: usize, g: &GeometryParams) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    -(2.0 * kf / g.r) / (1.0 + (g.r / g.r_outer).powf(2.0 * kf))
}

/// Decay rate of mode `k` of the flow linearized at the reference circle.
pub fn ms_symbol(k: usize, g: &GeometryParams, phys: &PhysParams) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    -phys.m * phys.sigma * dk0_symbol(k as i64, g) * dtn_jump_symbol(k, g)
}

/// Discrete counterpart of [`dtn_jump_symbol`] for the finite-volume scheme at
/// `h = 0`.
pub fn discrete_dtn_jump(k: usize, g: &GeometryParams, res: Resolution) -> f64 {
    let n = 8;
    let metric = build_metric(&HeightField::zeros(n).expect("valid grid"), g, res).expect("h = 0 is admissible");
    discrete_dtn_jump_with(k, &metric)
}

fn discrete_dtn_jump_with(k: usize, metric: &TransformedMetric) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    let mut g_side = [0.0; 2];
    for (s, pm) in [&metric.inner, &metric.outer].into_iter().enumerate() {
        let op = PhaseOp::new(pm, Exec::Sequential);
        let grid = &pm.grid;
        let (lo, di, up) = op.mode_matrix(kf);
        let nu = di.len();
        let mut rhs = vec![Complex64::new(0.0, 0.0); nu];
        let i_int = grid.interface_node();
        // Coupling of the row next to the interface to unit Dirichlet data.
        match grid.phase {
            Phase::Inner => rhs[nu - 1] = Complex64::new(-op.a_bar[i_int - 1] / grid.spacing[i_int - 1], 0.0),
            Phase::Outer => rhs[0] = Complex64::new(-op.a_bar[0] / grid.spacing[0], 0.0),
        }
        tridiag_solve(&lo, &di, &up, &mut rhs);
        let t = -kf * kf * op.c_bar[i_int];
        let vol = grid.vol[i_int];
        g_side[s] = match grid.phase {
            Phase::Inner => op.a_bar[i_int - 1] * (1.0 - rhs[nu - 1].re) / grid.spacing[i_int - 1] - vol * t,
            Phase::Outer => op.a_bar[0] * (rhs[0].re - 1.0) / grid.spacing[0] + vol * t,
        };
    }
    (g_side[1] - g_side[0]) / metric.geometry.r
}

/// Discrete decay rates `-m sigma DK(0)_k J_k` for `k = 0..=k_max`.
pub fn discrete_ms_symbols(k_max: usize, g: &GeometryParams, phys: &PhysParams, res: Resolution) -> Vec<f64> {
    let metric = build_metric(&HeightField::zeros(8).expect("valid grid"), g, res).expect("h = 0 is admissible");
    (0..=k_max)
        .map(|k| {
            if k <= 1 {
                0.0
            } else {
                -phys.m * phys.sigma * dk0_symbol(k as i64, g) * discrete_dtn_jump_with(k, &metric)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn g() -> GeometryParams {
        GeometryParams::new(1.0, 2.0, 0.25).unwrap()
    }

    #[test]
    fn symbol_spot_values() {
        let p = PhysParams { sigma: 1.0, m: 1.0, mu_plus: 1.0, mu_minus: 1.0 };
        assert_abs_diff_eq!(ms_symbol(2, &g(), &p), 192.0 / 17.0, epsilon = 1e-13);
        assert_eq!(ms_symbol(0, &g(), &p), 0.0);
        assert_eq!(ms_symbol(1, &g(), &p), 0.0);
        assert_abs_diff_eq!(dtn_jump_symbol(2, &g()), -64.0 / 17.0, epsilon = 1e-14);
    }

    #[test]
    fn constants_are_reproduced() {
        let g = g();
        let h = HeightField::from_fn(32, |t| 0.05 * (2.0 * t).cos() + 0.02 * t.sin()).unwrap();
        let eta = solve_potential(&h, &vec![1.7; 32], &g, Resolution::uniform(32), SolveOptions::default()).unwrap();
        assert!(eta.inner.iter().chain(eta.outer.iter()).all(|v| *v == 1.7));
        let j = jump_flux(&h, &eta, 1.0, &g).unwrap();
        assert!(j.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn harmonic_mode_at_zero_height() {
        let g = g();
        let k = 3;
        let h = HeightField::zeros(16).unwrap();
        let data: Vec<f64> = fourier::grid(16).iter().map(|t| (k as f64 * t).cos()).collect();
        let eta = solve_potential(&h, &data, &g, Resolution::uniform(256), SolveOptions::default()).unwrap();
        let alpha = 1.0 / (1.0 + 2f64.powi(2 * k));
        let theta = fourier::grid(16);
        for (i, &r) in eta.metric.inner.grid.nodes.iter().enumerate() {
            for j in 0..16 {
                assert_abs_diff_eq!(eta.inner[(i, j)], r.powi(k) * (k as f64 * theta[j]).cos(), epsilon = 1e-4);
            }
        }
        for (i, &r) in eta.metric.outer.grid.nodes.iter().enumerate() {
            for j in 0..16 {
                let ex = alpha * (r.powi(k) + 2f64.powi(2 * k) * r.powi(-k)) * (k as f64 * theta[j]).cos();
                assert_abs_diff_eq!(eta.outer[(i, j)], ex, epsilon = 1e-4);
            }
        }
        let jmp = jump_flux(&h, &eta, 1.0, &g).unwrap();
        let d = discrete_dtn_jump(k as usize, &g, Resolution::uniform(256));
        for j in 0..16 {
            assert_abs_diff_eq!(jmp[j], d * data[j], epsilon = 1e-10);
        }
        assert_abs_diff_eq!(d, dtn_jump_symbol(k as usize, &g), epsilon = 1e-3);
    }

    #[test]
    fn mismatched_field_is_rejected() {
        let g = g();
        let h = HeightField::zeros(16).unwrap();
        let eta = solve_potential(&h, &vec![0.0; 16], &g, Resolution::uniform(16), SolveOptions::default()).unwrap();
        let other = HeightField::constant(16, 0.01).unwrap();
        assert!(matches!(jump_flux(&other, &eta, 1.0, &g), Err(Error::Mismatch)));
    }
}
