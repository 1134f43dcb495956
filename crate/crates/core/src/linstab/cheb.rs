//! Chebyshev collocation on the annulus and on the disk.
//!
//! The disk uses a full-diameter grid with an odd number of intervals, so no
//! node sits at the pole, folded onto the positive half by the parity of the
//! field under `r -> -r`.

use ndarray::Array2;
use std::f64::consts::PI;

/// Chebyshev–Lobatto points `cos(pi j / n)` and differentiation matrix.
pub fn cheb(n: usize) -> (Vec<f64>, Array2<f64>) {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| -> f64 {
        let e = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 { e } else { -e }
    };
    let mut d = Array2::zeros((n + 1, n + 1));
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    // Diagonal from the zero-row-sum identity.
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Barycentric weights of arbitrary distinct nodes (scaled for `[-1, 1]`).
pub fn bary_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let p: f64 = (0..x.len()).filter(|&m| m != j).map(|m| 2.0 * (x[j] - x[m])).product();
            1.0 / p
        })
        .collect()
}

/// Barycentric weights of the Lobatto points.
pub fn lobatto_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n { 0.5 * s } else { s }
        })
        .collect()
}

/// Interpolation matrix from nodes `x` (weights `w`) to points `y`.
pub fn interp_matrix(x: &[f64], w: &[f64], y: &[f64]) -> Array2<f64> {
    let mut out = Array2::zeros((y.len(), x.len()));
    for (i, &yi) in y.iter().enumerate() {
        if let Some(j) = x.iter().position(|&xj| xj == yi) {
            out[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = x.iter().zip(w).map(|(xj, wj)| wj / (yi - xj)).collect();
        let s: f64 = terms.iter().sum();
        for j in 0..x.len() {
            out[(i, j)] = terms[j] / s;
        }
    }
    out
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * z * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Annulus `[r_in, r_out]`: node 0 at `r_out`, node `n` at `r_in`.
#[derive(Clone, Debug)]
pub struct AnnulusGrid {
    pub n: usize,
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub d1: Array2<f64>,
    pub d2: Array2<f64>,
    pub r_in: f64,
    pub r_out: f64,
}

impl AnnulusGrid {
    pub fn new(r_in: f64, r_out: f64, n: usize) -> Self {
        let (x, d) = cheb(n);
        let s = 2.0 / (r_out - r_in);
        let d1 = d.mapv(|v| v * s);
        let d2 = d1.dot(&d1);
        let r = x.iter().map(|xi| r_in + 0.5 * (r_out - r_in) * (1.0 + xi)).collect();
        Self { n, r, x, d1, d2, r_in, r_out }
    }

    pub fn inner_index(&self) -> usize {
        self.n
    }

    /// Interpolation from the nodes to radii `y`.
    pub fn interp_to(&self, y: &[f64]) -> Array2<f64> {
        let t: Vec<f64> = y.iter().map(|r| 2.0 * (r - self.r_in) / (self.r_out - self.r_in) - 1.0).collect();
        interp_matrix(&self.x, &lobatto_weights(self.n), &t)
    }

    /// Pressure space: interpolation from interior nodes `1..n-1` to all
    /// nodes, and its derivative.
    pub fn pressure_maps(&self) -> (Array2<f64>, Array2<f64>) {
        let xi: Vec<f64> = self.x[1..self.n].to_vec();
        let ip = interp_matrix(&xi, &bary_weights(&xi), &self.x);
        let dp = self.d1.dot(&ip);
        (ip, dp)
    }
}

/// Disk of radius `radius` on the folded full-diameter grid with `2 np - 1`
/// intervals; folded node `i` sits at `r = radius cos(pi i / (2 np - 1))`.
#[derive(Clone, Debug)]
pub struct DiskGrid {
    pub np: usize,
    pub n_full: usize,
    pub r: Vec<f64>,
    pub radius: f64,
    d1_full: Array2<f64>,
    d2_full: Array2<f64>,
    x_full: Vec<f64>,
}

impl DiskGrid {
    pub fn new(radius: f64, np: usize) -> Self {
        let n_full = 2 * np - 1;
        let (x, d) = cheb(n_full);
        let d1 = d.mapv(|v| v / radius);
        let d2 = d1.dot(&d1);
        let r = x[..np].iter().map(|xi| radius * xi).collect();
        Self { np, n_full, r, radius, d1_full: d1, d2_full: d2, x_full: x }
    }

    fn fold(&self, full: &Array2<f64>, parity: f64) -> Array2<f64> {
        let np = self.np;
        let mut out = Array2::zeros((np, np));
        for i in 0..np {
            for j in 0..np {
                out[(i, j)] = full[(i, j)] + parity * full[(i, self.n_full - j)];
            }
        }
        out
    }

    pub fn d1(&self, parity: f64) -> Array2<f64> {
        self.fold(&self.d1_full, parity)
    }

    pub fn d2(&self, parity: f64) -> Array2<f64> {
        self.fold(&self.d2_full, parity)
    }

    /// Pressure on interior full nodes `1..n_full-1`, folded to the
    /// `np - 1` unknowns at folded nodes `1..np-1`. Returns the maps to
    /// values and derivatives at the folded nodes.
    pub fn pressure_maps(&self, parity: f64) -> (Array2<f64>, Array2<f64>) {
        let nf = self.n_full;
        let np = self.np;
        let xi: Vec<f64> = self.x_full[1..nf].to_vec();
        let ip = interp_matrix(&xi, &bary_weights(&xi), &self.x_full);
        let dp = self.d1_full.dot(&ip);
        let mut fi = Array2::zeros((np, np - 1));
        let mut fd = Array2::zeros((np, np - 1));
        for i in 0..np {
            for u in 0..np - 1 {
                let j = u + 1;
                // Column j - 1 of ip is full node j.
                fi[(i, u)] = ip[(i, j - 1)] + parity * ip[(i, nf - j - 1)];
                fd[(i, u)] = dp[(i, j - 1)] + parity * dp[(i, nf - j - 1)];
            }
        }
        (fi, fd)
    }

    /// Interpolation of a parity-`p` field from the folded nodes to radii
    /// `y` in `[0, radius]`.
    pub fn interp_to(&self, y: &[f64], parity: f64) -> Array2<f64> {
        let t: Vec<f64> = y.iter().map(|r| r / self.radius).collect();
        let full = interp_matrix(&self.x_full, &lobatto_weights(self.n_full), &t);
        let mut out = Array2::zeros((y.len(), self.np));
        for i in 0..y.len() {
            for j in 0..self.np {
                out[(i, j)] = full[(i, j)] + parity * full[(i, self.n_full - j)];
            }
        }
        out
    }
}
