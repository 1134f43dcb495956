//! Modal pencils `L z = lambda M z` of the linearized two-phase Stokes /
//! Mullins–Sekerka system in the decay orientation.
//!
//! Mode `k >= 1` uses the ansatz `u_r = U cos k theta`, `u_theta = V sin k theta`,
//! `q = P cos k theta`, `h = H cos k theta`. Mode 0 carries only the swirl
//! `u_theta = V`, the height `H` and, when pressure is retained, the pressure
//! jump.

use ndarray::{s, Array1, Array2, Axis};
use ndarray_linalg::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cheb::{AnnulusGrid, DiskGrid};
use crate::potential::ms_symbol;
use crate::refgeom::{GeometryParams, PhysParams};
use crate::{Error, Result};

/// How the pressure enters the pencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Velocity and pressure unknowns; continuity rows have zero mass.
    Retained,
    /// Retained pencil with the pressure and constraint rows removed
    /// algebraically (null-space projection); same eigenvalues, no infinite
    /// ones.
    Eliminated,
    /// Streamfunction formulation; pressure removed by taking the curl.
    /// Independent of the other two, but loses digits above `n_r ~ 48`.
    Streamfunction,
}

/// Offsets of the unknown blocks inside the state vector.
#[derive(Clone, Debug, Default)]
pub struct Layout {
    pub u_in: Option<usize>,
    pub v_in: Option<usize>,
    pub p_in: Option<usize>,
    pub u_out: Option<usize>,
    pub v_out: Option<usize>,
    pub p_out: Option<usize>,
    pub psi_in: Option<usize>,
    pub psi_out: Option<usize>,
    pub dp: Option<usize>,
    pub h: usize,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct ModalOperatorBlock {
    pub k: usize,
    pub route: Route,
    pub geometry: GeometryParams,
    pub phys: PhysParams,
    pub n_r: usize,
    pub disk: DiskGrid,
    pub annulus: AnnulusGrid,
    pub layout: Layout,
    pub l: Array2<f64>,
    pub m: Array2<f64>,
    /// Present for [`Route::Eliminated`]: maps pencil vectors back to `layout`.
    pub lift: Option<Lift>,
}

/// Reduced eigenvector `a` with eigenvalue `lambda` lifts to
/// `z = (p0 + lambda p1) a` in the retained layout.
#[derive(Clone, Debug)]
pub struct Lift {
    pub p0: Array2<f64>,
    pub p1: Array2<f64>,
}

impl ModalOperatorBlock {
    /// Pencil vector expressed in `layout`.
    pub fn lift(&self, lambda: Complex64, a: &Array1<Complex64>) -> Array1<Complex64> {
        match &self.lift {
            None => a.clone(),
            Some(lf) => (0..lf.p0.nrows())
                .map(|i| {
                    lf.p0.row(i).iter().zip(lf.p1.row(i)).zip(a).map(|((x, y), c)| c * (lambda * *y + *x)).sum()
                })
                .collect(),
        }
    }
}

/// Parity of `U`, `V` under `r -> -r` for mode `k`.
pub fn vector_parity(k: usize) -> f64 {
    if k % 2 == 0 { -1.0 } else { 1.0 }
}

/// Parity of `P`, `Psi` under `r -> -r` for mode `k`.
pub fn scalar_parity(k: usize) -> f64 {
    -vector_parity(k)
}

/// `(1 - k^2) / R^2`, the symbol of `(n-1)/R^2 + Laplace-Beltrami` on `S_R`.
pub fn surface_symbol(k: usize, g: &GeometryParams) -> f64 {
    let k = k as f64;
    (1.0 - k * k) / (g.r * g.r)
}

struct Rows {
    l: Array2<f64>,
    m: Array2<f64>,
    next: usize,
}

impl Rows {
    fn new(n: usize) -> Self {
        Self { l: Array2::zeros((n, n)), m: Array2::zeros((n, n)), next: 0 }
    }

    fn row(&mut self) -> usize {
        let r = self.next;
        self.next += 1;
        r
    }

    fn finish(self, k: usize) -> Result<(Array2<f64>, Array2<f64>)> {
        if self.next != self.l.nrows() {
            return Err(Error::Assembly { k, msg: format!("{} rows for {} unknowns", self.next, self.l.nrows()) });
        }
        Ok((self.l, self.m))
    }
}

pub fn assemble_modal(k: usize, g: &GeometryParams, phys: &PhysParams, n_r: usize, route: Route) -> Result<ModalOperatorBlock> {
    g.validate()?;
    phys.validate()?;
    if n_r < 8 {
        return Err(Error::Argument(format!("n_r = {n_r} is too small for the modal pencil")));
    }
    let disk = DiskGrid::new(g.r, n_r + 1);
    let annulus = AnnulusGrid::new(g.r, g.r_outer, n_r);
    let (layout, (l, m)) = match (k, route) {
        (0, _) => swirl_block(&disk, &annulus, g, phys, route)?,
        (_, Route::Streamfunction) => streamfunction_block(k, &disk, &annulus, g, phys)?,
        _ => retained_block(k, &disk, &annulus, g, phys)?,
    };
    let mut block = ModalOperatorBlock { k, route, geometry: *g, phys: *phys, n_r, disk, annulus, layout, l, m, lift: None };
    equilibrate(&mut block)?;
    if route == Route::Eliminated {
        let (l, m, lift) = eliminate(k, &block.l, &block.m)?;
        block.l = l;
        block.m = m;
        block.lift = Some(lift);
        equilibrate(&mut block)?;
    }
    Ok(block)
}

fn equilibrate(b: &mut ModalOperatorBlock) -> Result<()> {
    for i in 0..b.l.nrows() {
        let s = b.l.row(i).iter().chain(b.m.row(i).iter()).fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            // Empty kinematic row of mode 0 carries a mass entry; any other
            // empty row is a defect.
            return Err(Error::Assembly { k: b.k, msg: format!("row {i} is identically zero") });
        }
        b.l.row_mut(i).mapv_inplace(|v| v / s);
        b.m.row_mut(i).mapv_inplace(|v| v / s);
    }
    Ok(())
}

const RANK_REL: f64 = 1e-12;

/// Full SVD and numerical rank.
fn svd_rank(k: usize, a: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>, usize)> {
    let (u, sv, vt) = a.svd(true, true).map_err(|e| Error::Eigen { k, msg: e.to_string() })?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&v| v > RANK_REL * smax).count();
    Ok((u.expect("requested"), sv, vt.expect("requested"), rank))
}

/// Removes the rows without mass and the directions they constrain.
///
/// Finite eigenvectors satisfy the massless rows `C z = 0`, so `z = Z w`
/// with `Z` spanning `null C`. On the remaining rows the massless directions
/// `N` of `M Z` (pressures) enter only through `G = L Z N`; projecting the
/// rows onto `null G^T` and the columns onto the complement `V` of `N` leaves
/// a pencil with a nonsingular mass.
fn eliminate(k: usize, l: &Array2<f64>, m: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>, Lift)> {
    let n = l.nrows();
    let (dyn_rows, alg_rows): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| m.row(i).iter().any(|v| *v != 0.0));
    let fail = |msg: String| Error::Assembly { k, msg };
    let (_, _, vt, rank) = svd_rank(k, &l.select(Axis(0), &alg_rows))?;
    if n - rank != dyn_rows.len() {
        return Err(fail(format!("constraint rows have rank {rank}, expected {}", alg_rows.len())));
    }
    let z = vt.slice(s![rank.., ..]).t().to_owned();
    let l1 = l.select(Axis(0), &dyn_rows).dot(&z);
    let m1 = m.select(Axis(0), &dyn_rows).dot(&z);
    let (_, _, vt1, r1) = svd_rank(k, &m1)?;
    let v = vt1.slice(s![..r1, ..]).t().to_owned();
    let nd = vt1.slice(s![r1.., ..]).t().to_owned();
    if nd.ncols() == 0 {
        let lift = Lift { p0: z.dot(&v), p1: Array2::zeros((n, r1)) };
        return Ok((l1.dot(&v), m1.dot(&v), lift));
    }
    let g = l1.dot(&nd);
    let (ug, sg, vtg, rg) = svd_rank(k, &g)?;
    if rg != nd.ncols() {
        return Err(fail(format!("pressure coupling has rank {rg}, expected {}", nd.ncols())));
    }
    let y = ug.slice(s![.., rg..]).to_owned();
    let l2 = y.t().dot(&l1).dot(&v);
    let m2 = y.t().dot(&m1).dot(&v);
    // Least-squares solve G b = rhs through the thin SVD.
    let mut ut = ug.slice(s![.., ..rg]).t().to_owned();
    for (i, mut row) in ut.axis_iter_mut(Axis(0)).enumerate() {
        row.mapv_inplace(|x| x / sg[i]);
    }
    let pinv = vtg.slice(s![..rg, ..]).t().dot(&ut);
    let p0 = z.dot(&(&v - &nd.dot(&pinv.dot(&l1.dot(&v)))));
    let p1 = z.dot(&nd.dot(&pinv.dot(&m1.dot(&v))));
    Ok((l2, m2, Lift { p0, p1 }))
}

type Assembled = (Layout, (Array2<f64>, Array2<f64>));

fn retained_block(k: usize, disk: &DiskGrid, ann: &AnnulusGrid, g: &GeometryParams, phys: &PhysParams) -> Result<Assembled> {
    let np = disk.np;
    let mo = ann.n;
    let kf = k as f64;
    let pu = vector_parity(k);
    let ps = scalar_parity(k);
    let (d1i, d2i) = (disk.d1(pu), disk.d2(pu));
    let (pvi, pdi) = disk.pressure_maps(ps);
    let (pvo, pdo) = ann.pressure_maps();

    let ui = 0;
    let vi = np;
    let pi = 2 * np;
    let uo = 3 * np - 1;
    let vo = uo + mo + 1;
    let po = vo + mo + 1;
    let h = po + mo - 1;
    let size = h + 1;
    let layout = Layout {
        u_in: Some(ui),
        v_in: Some(vi),
        p_in: Some(pi),
        u_out: Some(uo),
        v_out: Some(vo),
        p_out: Some(po),
        h,
        size,
        ..Default::default()
    };
    let mut rows = Rows::new(size);

    // Momentum and continuity at interior nodes of each phase.
    struct Phase<'a> {
        mu: f64,
        r: &'a [f64],
        d1: &'a Array2<f64>,
        d2: &'a Array2<f64>,
        pv: &'a Array2<f64>,
        pd: &'a Array2<f64>,
        u: usize,
        v: usize,
        p: usize,
        nodes: std::ops::Range<usize>,
        width: usize,
    }
    let phases = [
        Phase { mu: phys.mu_plus, r: &disk.r, d1: &d1i, d2: &d2i, pv: &pvi, pd: &pdi, u: ui, v: vi, p: pi, nodes: 1..np, width: np },
        Phase { mu: phys.mu_minus, r: &ann.r, d1: &ann.d1, d2: &ann.d2, pv: &pvo, pd: &pdo, u: uo, v: vo, p: po, nodes: 1..mo, width: mo + 1 },
    ];
    for ph in &phases {
        let np_p = ph.pv.ncols();
        for i in ph.nodes.clone() {
            let r = ph.r[i];
            let mu = ph.mu;
            let ru = rows.row();
            let rv = rows.row();
            let rc = rows.row();
            for j in 0..ph.width {
                let lap = ph.d2[(i, j)] + ph.d1[(i, j)] / r;
                rows.l[(ru, ph.u + j)] -= mu * lap;
                rows.l[(rv, ph.v + j)] -= mu * lap;
                rows.l[(rc, ph.u + j)] += ph.d1[(i, j)];
            }
            let diag = mu * (kf * kf + 1.0) / (r * r);
            let cross = mu * 2.0 * kf / (r * r);
            rows.l[(ru, ph.u + i)] += diag;
            rows.l[(ru, ph.v + i)] += cross;
            rows.l[(rv, ph.v + i)] += diag;
            rows.l[(rv, ph.u + i)] += cross;
            for q in 0..np_p {
                rows.l[(ru, ph.p + q)] += ph.pd[(i, q)];
                rows.l[(rv, ph.p + q)] -= kf / r * ph.pv[(i, q)];
            }
            rows.m[(ru, ph.u + i)] = 1.0;
            rows.m[(rv, ph.v + i)] = 1.0;
            rows.l[(rc, ph.u + i)] += 1.0 / r;
            rows.l[(rc, ph.v + i)] += kf / r;
        }
    }

    // No slip at the wall (annulus node 0).
    let r = rows.row();
    rows.l[(r, uo)] = 1.0;
    let r = rows.row();
    rows.l[(r, vo)] = 1.0;

    // Interface: disk node 0 and annulus node mo.
    let rr = g.r;
    let (mi, mout) = (phys.mu_plus, phys.mu_minus);
    let r = rows.row();
    rows.l[(r, uo + mo)] = 1.0;
    rows.l[(r, ui)] = -1.0;
    let r = rows.row();
    rows.l[(r, vo + mo)] = 1.0;
    rows.l[(r, vi)] = -1.0;

    // Tangential stress: [[mu (V' - V/r - k U/r)]] = 0.
    let r = rows.row();
    for j in 0..=mo {
        rows.l[(r, vo + j)] += mout * ann.d1[(mo, j)];
    }
    rows.l[(r, vo + mo)] -= mout / rr;
    rows.l[(r, uo + mo)] -= mout * kf / rr;
    for j in 0..np {
        rows.l[(r, vi + j)] -= mi * d1i[(0, j)];
    }
    rows.l[(r, vi)] += mi / rr;
    rows.l[(r, ui)] += mi * kf / rr;

    // Normal stress: -2 [[mu U']] + [[P]] - sigma A_k H = 0.
    let r = rows.row();
    for j in 0..=mo {
        rows.l[(r, uo + j)] -= 2.0 * mout * ann.d1[(mo, j)];
    }
    for j in 0..np {
        rows.l[(r, ui + j)] += 2.0 * mi * d1i[(0, j)];
    }
    for q in 0..mo - 1 {
        rows.l[(r, po + q)] += pvo[(mo, q)];
    }
    for q in 0..np - 1 {
        rows.l[(r, pi + q)] -= pvi[(0, q)];
    }
    rows.l[(r, h)] = -phys.sigma * surface_symbol(k, g);

    // Kinematic row: lambda H = -U(R) + lambda_MS H.
    let r = rows.row();
    rows.l[(r, ui)] = -1.0;
    rows.l[(r, h)] = ms_symbol(k, g, phys);
    rows.m[(r, h)] = 1.0;

    Ok((layout, rows.finish(k)?))
}

fn streamfunction_block(k: usize, disk: &DiskGrid, ann: &AnnulusGrid, g: &GeometryParams, phys: &PhysParams) -> Result<Assembled> {
    let np = disk.np;
    let mo = ann.n;
    let kf = k as f64;
    let ps = scalar_parity(k);
    let (d1i, d2i) = (disk.d1(ps), disk.d2(ps));
    let lap = |d1: &Array2<f64>, d2: &Array2<f64>, r: &[f64]| -> Array2<f64> {
        let mut out = d2.clone();
        for i in 0..r.len() {
            for j in 0..r.len() {
                out[(i, j)] += d1[(i, j)] / r[i];
            }
            out[(i, i)] -= kf * kf / (r[i] * r[i]);
        }
        out
    };
    let lap_i = lap(&d1i, &d2i, &disk.r);
    let lap_o = lap(&ann.d1, &ann.d2, &ann.r);
    let bih_i = lap_i.dot(&lap_i);
    let bih_o = lap_o.dot(&lap_o);
    let dlap_i = d1i.dot(&lap_i);
    let dlap_o = ann.d1.dot(&lap_o);

    let si = 0;
    let so = np;
    let h = so + mo + 1;
    let size = h + 1;
    let layout = Layout { psi_in: Some(si), psi_out: Some(so), h, size, ..Default::default() };
    let mut rows = Rows::new(size);

    for i in 2..np {
        let r = rows.row();
        for j in 0..np {
            rows.l[(r, si + j)] = phys.mu_plus * bih_i[(i, j)];
            rows.m[(r, si + j)] = -lap_i[(i, j)];
        }
    }
    for i in 2..mo - 1 {
        let r = rows.row();
        for j in 0..=mo {
            rows.l[(r, so + j)] = phys.mu_minus * bih_o[(i, j)];
            rows.m[(r, so + j)] = -lap_o[(i, j)];
        }
    }
    // Wall: Psi = Psi' = 0.
    let r = rows.row();
    rows.l[(r, so)] = 1.0;
    let r = rows.row();
    for j in 0..=mo {
        rows.l[(r, so + j)] = ann.d1[(0, j)];
    }

    let rr = g.r;
    let (mi, mout) = (phys.mu_plus, phys.mu_minus);
    // Continuity of Psi and Psi'.
    let r = rows.row();
    rows.l[(r, so + mo)] = 1.0;
    rows.l[(r, si)] = -1.0;
    let r = rows.row();
    for j in 0..=mo {
        rows.l[(r, so + j)] += ann.d1[(mo, j)];
    }
    for j in 0..np {
        rows.l[(r, si + j)] -= d1i[(0, j)];
    }
    // Tangential stress: [[mu (-Psi'' + Psi'/r - k^2 Psi / r^2)]] = 0.
    let r = rows.row();
    for j in 0..=mo {
        rows.l[(r, so + j)] += mout * (-ann.d2[(mo, j)] + ann.d1[(mo, j)] / rr);
    }
    rows.l[(r, so + mo)] -= mout * kf * kf / (rr * rr);
    for j in 0..np {
        rows.l[(r, si + j)] -= mi * (-d2i[(0, j)] + d1i[(0, j)] / rr);
    }
    rows.l[(r, si)] += mi * kf * kf / (rr * rr);
    // Normal stress with the pressure jump recovered from the angular
    // momentum balance: [[P]] = (R/k) [[mu (Lap_k Psi)']].
    let r = rows.row();
    for j in 0..=mo {
        rows.l[(r, so + j)] += -2.0 * kf * mout * ann.d1[(mo, j)] / rr + rr / kf * mout * dlap_o[(mo, j)];
    }
    rows.l[(r, so + mo)] += 2.0 * kf * mout / (rr * rr);
    for j in 0..np {
        rows.l[(r, si + j)] -= -2.0 * kf * mi * d1i[(0, j)] / rr + rr / kf * mi * dlap_i[(0, j)];
    }
    rows.l[(r, si)] -= 2.0 * kf * mi / (rr * rr);
    rows.l[(r, h)] = -phys.sigma * surface_symbol(k, g);
    // Kinematic row with U(R) = k Psi(R) / R.
    let r = rows.row();
    rows.l[(r, si)] = -kf / rr;
    rows.l[(r, h)] = ms_symbol(k, g, phys);
    rows.m[(r, h)] = 1.0;

    Ok((layout, rows.finish(k)?))
}

fn swirl_block(disk: &DiskGrid, ann: &AnnulusGrid, g: &GeometryParams, phys: &PhysParams, route: Route) -> Result<Assembled> {
    let np = disk.np;
    let mo = ann.n;
    let pv = vector_parity(0);
    let (d1i, d2i) = (disk.d1(pv), disk.d2(pv));
    let vi = 0;
    let vo = np;
    let h = vo + mo + 1;
    let dp = (route != Route::Streamfunction).then_some(h + 1);
    let size = h + 1 + dp.is_some() as usize;
    let layout = Layout { v_in: Some(vi), v_out: Some(vo), dp, h, size, ..Default::default() };
    let mut rows = Rows::new(size);

    for (mu, r, d1, d2, off, nodes, width) in [
        (phys.mu_plus, &disk.r, &d1i, &d2i, vi, 1..np, np),
        (phys.mu_minus, &ann.r, &ann.d1, &ann.d2, vo, 1..mo, mo + 1),
    ] {
        for i in nodes {
            let row = rows.row();
            for j in 0..width {
                rows.l[(row, off + j)] = -mu * (d2[(i, j)] + d1[(i, j)] / r[i]);
            }
            rows.l[(row, off + i)] += mu / (r[i] * r[i]);
            rows.m[(row, off + i)] = 1.0;
        }
    }
    let r = rows.row();
    rows.l[(r, vo)] = 1.0;
    let r = rows.row();
    rows.l[(r, vo + mo)] = 1.0;
    rows.l[(r, vi)] = -1.0;
    let rr = g.r;
    let r = rows.row();
    for j in 0..=mo {
        rows.l[(r, vo + j)] += phys.mu_minus * ann.d1[(mo, j)];
    }
    rows.l[(r, vo + mo)] -= phys.mu_minus / rr;
    for j in 0..np {
        rows.l[(r, vi + j)] -= phys.mu_plus * d1i[(0, j)];
    }
    rows.l[(r, vi)] += phys.mu_plus / rr;
    if let Some(dp) = dp {
        // Normal stress for the axisymmetric mode: [[P]] = sigma A_0 H.
        let r = rows.row();
        rows.l[(r, dp)] = 1.0;
        rows.l[(r, h)] = -phys.sigma * surface_symbol(0, g);
    }
    // Kinematic row: U = 0 and lambda_MS(0) = 0 leave only the mass entry.
    let r = rows.row();
    rows.m[(r, h)] = 1.0;

    Ok((layout, rows.finish(0)?))
}
