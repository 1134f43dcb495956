//! Restarted right-preconditioned GMRES and a tridiagonal solver.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-12, restart: 40, max_iter: 400 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GmresStats {
    pub iterations: usize,
    /// Final `|b - A x| / |b|`.
    pub residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` with `A M^{-1} y = b`, `x = M^{-1} y`, starting from `x`.
pub fn gmres<A, P>(apply: A, precond: P, b: &[f64], x: &mut [f64], opts: GmresOptions) -> GmresStats
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresStats { iterations: 0, residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    loop {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol || total >= opts.max_iter {
            return GmresStats { iterations: total, residual: rel, converged: rel <= opts.tol };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut gvec = vec![0.0; m + 1];
        gvec[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let z = precond(&basis[k]);
            let mut w = apply(&z);
            zs.push(z);
            // Modified Gram-Schmidt, twice for stability.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dotp(&w, v);
                    hess[i][k] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            cs[k] = hess[k][k] / d;
            sn[k] = hess[k + 1][k] / d;
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            gvec[k + 1] = -sn[k] * gvec[k];
            gvec[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if gvec[k + 1].abs() / bnorm <= 0.1 * opts.tol || wn == 0.0 || total >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (gvec[i] - s) / hess[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for idx in 0..n {
                x[idx] += yi * z[idx];
            }
        }
    }
}

/// Solves a tridiagonal system with real coefficients and complex right-hand
/// side in place. `lower[0]` and `upper[n-1]` are ignored.
pub fn tridiag_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [Complex64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = if n > 1 { upper[0] / beta } else { 0.0 };
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if i + 1 < n {
            c[i] = upper[i] / beta;
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let t = rhs[i + 1];
        rhs[i] -= c[i] * t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 30;
        let a = |i: usize, j: usize| -> f64 {
            if i == j {
                4.0 + i as f64 * 0.1
            } else if j == i + 1 {
                -1.3
            } else if i == j + 1 {
                -0.7
            } else if j == (i + 5) % n {
                0.2
            } else {
                0.0
            }
        };
        let apply = |x: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| a(i, j) * x[j]).sum()).collect() };
        let xs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = apply(&xs);
        let mut x = vec![0.0; n];
        let st = gmres(apply, |v| v.to_vec(), &b, &mut x, GmresOptions { tol: 1e-13, restart: 7, max_iter: 500 });
        assert!(st.converged, "{st:?}");
        for (u, v) in x.iter().zip(&xs) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-11);
        }
    }

    #[test]
    fn tridiag_matches_dense() {
        let lower = [0.0, 1.0, -2.0, 0.5];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let upper = [1.0, 0.3, 1.2, 0.0];
        let x = [Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.5), Complex64::new(0.3, 0.0), Complex64::new(2.0, -1.0)];
        let mut b: Vec<Complex64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i < 3 {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        tridiag_solve(&lower, &diag, &upper, &mut b);
        for (u, v) in b.iter().zip(&x) {
            assert_abs_diff_eq!((u - v).norm(), 0.0, epsilon = 1e-14);
        }
    }
}
