//! Eigenanalysis of the linearized coupled Stokes / Mullins–Sekerka operator
//! around the circle `S_R`, mode by mode.
//!
//! Each mode gives a real pencil `L z = lambda M z` in decay orientation:
//! stable modes have `Re lambda > 0`. Pressure and constraint rows carry no
//! mass and produce infinite eigenvalues, which are filtered out.

pub mod assemble;
pub mod cheb;
mod energy;

use std::cmp::Ordering;
use std::ops::RangeInclusive;

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{EigGeneralized, GeneralizedEigenvalue, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use assemble::{assemble_modal, surface_symbol, Layout, ModalOperatorBlock, Route};
pub use energy::{qb4_residual, ModalFields};

use crate::par::{self, Exec};
use crate::refgeom::{enclosed_area, GeometryParams, HeightField, PhysParams};
use crate::{Error, Result};

/// Radial resolution used when none is given.
pub const DEFAULT_N_R: usize = 64;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Thresholds {
    /// Eigenvalues with larger modulus are treated as infinite.
    pub infinite: f64,
    /// Eigenvalues kept per mode, smallest real part first.
    pub n_keep: usize,
    /// Kernel if `|lambda| <= kernel_rel * gap`.
    pub kernel_rel: f64,
    /// Candidates for the kernel before the gap is known: `|lambda| <= near_zero * scale`.
    pub near_zero: f64,
    /// Relative singular-value cutoff for the geometric multiplicity.
    pub rank_rel: f64,
    /// Minimal bordered residual for the absence of a Jordan chain.
    pub bordered_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { infinite: 1e8, n_keep: 6, kernel_rel: 1e-6, near_zero: 1e-9, rank_rel: 1e-10, bordered_min: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Kernel,
    Stable,
    Anomalous,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenPair {
    pub k: usize,
    pub lambda: Complex64,
    #[serde(skip)]
    pub vector: Array1<Complex64>,
    pub qb4_residual: f64,
    /// Largest nodal velocity of the unit-norm eigenvector.
    pub velocity_norm: f64,
    pub classification: Classification,
    /// Number of trigonometric components (2 for `k >= 1`).
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    pub k: usize,
    pub route: Route,
    pub n_r: usize,
    pub pairs: Vec<EigenPair>,
    pub finite_count: usize,
    /// Smallest real part among finite eigenvalues that were not kept.
    pub min_re_dropped: Option<f64>,
    pub thresholds: Thresholds,
}

fn cmp_lambda(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn classify(lambda: Complex64, zero_tol: f64) -> Classification {
    if lambda.norm() <= zero_tol {
        Classification::Kernel
    } else if lambda.re > 0.0 {
        Classification::Stable
    } else {
        Classification::Anomalous
    }
}

/// Dense generalized eigensolve of one block.
pub fn eigen(block: &ModalOperatorBlock) -> Result<SpectrumResult> {
    eigen_with(block, Thresholds::default())
}

pub fn eigen_with(block: &ModalOperatorBlock, th: Thresholds) -> Result<SpectrumResult> {
    let k = block.k;
    let (vals, vecs) = (block.l.clone(), block.m.clone())
        .eig_generalized(None)
        .map_err(|e| Error::Eigen { k, msg: e.to_string() })?;
    let mut finite: Vec<(Complex64, usize)> = vals
        .iter()
        .enumerate()
        .filter_map(|(i, v)| match v {
            GeneralizedEigenvalue::Finite(l, _) if l.is_finite() && l.norm() <= th.infinite => Some((*l, i)),
            _ => None,
        })
        .collect();
    finite.sort_by(|a, b| cmp_lambda(&a.0, &b.0));
    let finite_count = finite.len();
    let min_re_dropped = finite.get(th.n_keep).map(|_| finite[th.n_keep..].iter().map(|p| p.0.re).fold(f64::INFINITY, f64::min));
    finite.truncate(th.n_keep);
    let scale = finite.iter().fold(0.0f64, |a, p| a.max(p.0.norm())).max(1.0);
    let multiplicity = if k == 0 { 1 } else { 2 };
    let pairs = finite
        .into_iter()
        .map(|(lambda, i)| {
            let mut z = block.lift(lambda, &vecs.column(i).to_owned());
            let nrm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if nrm > 0.0 {
                z.mapv_inplace(|c| c / nrm);
            }
            let qb4 = qb4_residual(block, lambda, &z);
            let velocity_norm = ModalFields::extract(block, &z).max_velocity();
            EigenPair {
                k,
                lambda,
                vector: z,
                qb4_residual: qb4,
                velocity_norm,
                classification: classify(lambda, th.near_zero * scale),
                multiplicity,
            }
        })
        .collect();
    Ok(SpectrumResult { k, route: block.route, n_r: block.n_r, pairs, finite_count, min_re_dropped, thresholds: th })
}

/// Spectrum over a range of modes with kernel classification relative to the
/// spectral gap.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub modes: Vec<SpectrumResult>,
    pub gap: f64,
    pub gap_mode: usize,
    /// Kernel eigenvalues counted with trigonometric multiplicity.
    pub kernel_count: usize,
    /// Every non-kernel finite eigenvalue, kept or dropped, has `Re > 0`.
    pub others_positive: bool,
}

impl Spectrum {
    /// All kept pairs sorted by `(k, Re, Im)`.
    pub fn pairs(&self) -> impl Iterator<Item = &EigenPair> {
        self.modes.iter().flat_map(|m| m.pairs.iter())
    }
}

pub fn compute_spectrum(
    g: &GeometryParams,
    phys: &PhysParams,
    modes: RangeInclusive<usize>,
    n_r: usize,
    route: Route,
    exec: Exec,
) -> Result<Spectrum> {
    let ks: Vec<usize> = modes.collect();
    if ks.is_empty() {
        return Err(Error::Argument("empty mode range".into()));
    }
    let results = par::map_slice(exec, &ks, |&k| assemble_modal(k, g, phys, n_r, route).and_then(|b| eigen(&b)));
    Ok(Spectrum::from_modes(results.into_iter().collect::<Result<Vec<_>>>()?))
}

impl Spectrum {
    /// Merges per-mode results, locates the gap and classifies the kernel
    /// relative to it.
    pub fn from_modes(mut modes: Vec<SpectrumResult>) -> Self {
        modes.sort_by_key(|m| m.k);
        let mut gap = f64::INFINITY;
        let mut gap_mode = 0;
        for m in &modes {
            for p in m.pairs.iter().filter(|p| p.classification != Classification::Kernel) {
                if p.lambda.re < gap {
                    gap = p.lambda.re;
                    gap_mode = m.k;
                }
            }
        }
        let tol = Thresholds::default().kernel_rel * gap.abs();
        let mut kernel_count = 0;
        let mut others_positive = true;
        for m in &mut modes {
            for p in &mut m.pairs {
                p.classification = classify(p.lambda, tol);
                match p.classification {
                    Classification::Kernel => kernel_count += p.multiplicity,
                    Classification::Anomalous => others_positive = false,
                    Classification::Stable => {}
                }
            }
            if m.min_re_dropped.is_some_and(|r| r <= 0.0) {
                others_positive = false;
            }
        }
        Spectrum { modes, gap, gap_mode, kernel_count, others_positive }
    }
}

/// Smallest positive real part over `k <= k_max` and the mode attaining it.
pub fn spectral_gap(g: &GeometryParams, phys: &PhysParams, k_max: usize, n_r: usize, exec: Exec) -> Result<(f64, usize)> {
    if k_max < 2 {
        return Err(Error::Argument(format!("k_max = {k_max} must be at least 2")));
    }
    let s = compute_spectrum(g, phys, 0..=k_max, n_r, Route::Retained, exec)?;
    Ok((s.gap, s.gap_mode))
}

#[derive(Clone, Debug, Serialize)]
pub struct SemisimplicityReport {
    pub k: usize,
    /// Zero eigenvalues per trigonometric component.
    pub algebraic: usize,
    pub geometric: usize,
    /// Projection of `M z0` onto the left null space of `L`, relative; a
    /// Jordan chain would make this vanish.
    pub bordered_residual: Option<f64>,
    pub zero_distance: f64,
    pub semisimple: bool,
}

/// Compares algebraic and geometric multiplicity of `lambda = 0` per block.
pub fn semisimplicity_check(blocks: &[ModalOperatorBlock], gap: f64) -> Result<Vec<SemisimplicityReport>> {
    let th = Thresholds::default();
    blocks
        .iter()
        .map(|b| {
            let spec = eigen_with(b, Thresholds { n_keep: usize::MAX, ..th })?;
            let zero_tol = th.kernel_rel * gap;
            let algebraic = spec.pairs.iter().filter(|p| p.lambda.norm() <= zero_tol).count();
            let zero_distance = spec.pairs.iter().map(|p| p.lambda.norm()).fold(f64::INFINITY, f64::min);

            let (u, s, vt) = b.l.svd(true, true).map_err(|e| Error::Eigen { k: b.k, msg: e.to_string() })?;
            let (u, vt) = (u.expect("requested"), vt.expect("requested"));
            let smax = s.iter().cloned().fold(0.0, f64::max);
            let null: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= th.rank_rel * smax).collect();
            let geometric = null.len();
            let bordered_residual = null.first().map(|&i| {
                let z0 = vt.row(i).to_owned();
                let mz = b.m.dot(&z0);
                let nrm = mz.dot(&mz).sqrt();
                let proj: f64 = null.iter().map(|&j| u.column(j).dot(&mz).powi(2)).sum();
                proj.sqrt() / nrm.max(f64::MIN_POSITIVE)
            });
            let semisimple = algebraic == geometric && bordered_residual.is_none_or(|r| r >= th.bordered_min);
            Ok(SemisimplicityReport { k: b.k, algebraic, geometric, bordered_residual, zero_distance, semisimple })
        })
        .collect()
}

/// Equilibrium parameters `(y0, y1, y2)` predicted for a run: the radius from
/// the conserved area of `h0`, the centre from the centroid of the terminal
/// shape.
pub fn predicted_limit(h0: &HeightField, h_terminal: &HeightField, g: &GeometryParams) -> Result<[f64; 3]> {
    let area0 = enclosed_area(h0, g)?;
    let y0 = (area0 / std::f64::consts::PI).sqrt() - g.r;
    let n = h_terminal.n_theta();
    let area = enclosed_area(h_terminal, g)?;
    let dt = 2.0 * std::f64::consts::PI / n as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for (j, h) in h_terminal.values().iter().enumerate() {
        let t = j as f64 * dt;
        let r3 = (g.r + h).powi(3) / 3.0;
        cx += r3 * t.cos() * dt;
        cy += r3 * t.sin() * dt;
    }
    Ok([y0, cx / area, cy / area])
}

/// Right null vectors of `L` with relative singular value below `rel`.
pub fn null_space(l: &Array2<f64>, rel: f64) -> Result<Array2<f64>> {
    let (_, s, vt) = l.svd(false, true).map_err(|e| Error::Eigen { k: 0, msg: e.to_string() })?;
    let vt = vt.expect("requested");
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= rel * smax).collect();
    Ok(vt.select(Axis(0), &idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::ms_symbol;

    fn defaults() -> (GeometryParams, PhysParams) {
        (GeometryParams::default(), PhysParams::default())
    }

    #[test]
    fn block_sizes_match_layout() {
        let (g, p) = defaults();
        for route in [Route::Retained, Route::Eliminated, Route::Streamfunction] {
            for k in 0..3 {
                let b = assemble_modal(k, &g, &p, 32, route).unwrap();
                let n = b.lift.as_ref().map_or(b.layout.size, |lf| lf.p0.ncols());
                assert_eq!(b.l.dim(), (n, n));
                assert_eq!(b.m.dim(), b.l.dim());
                if let Some(lf) = &b.lift {
                    assert_eq!(lf.p0.nrows(), b.layout.size);
                }
            }
        }
    }

    #[test]
    fn kernel_modes() {
        let (g, p) = defaults();
        let s0 = eigen(&assemble_modal(0, &g, &p, 32, Route::Retained).unwrap()).unwrap();
        assert!(s0.pairs[0].lambda.norm() < 1e-8, "{:?}", s0.pairs[0].lambda);
        let s1 = eigen(&assemble_modal(1, &g, &p, 32, Route::Retained).unwrap()).unwrap();
        assert!(s1.pairs[0].lambda.norm() < 1e-8, "{:?}", s1.pairs[0].lambda);
        assert!(s1.pairs[1].lambda.re > 1.0);
    }

    #[test]
    fn streamfunction_agrees_at_low_resolution() {
        let (g, p) = defaults();
        for k in 1..4 {
            let a = eigen(&assemble_modal(k, &g, &p, 32, Route::Retained).unwrap()).unwrap();
            let b = eigen(&assemble_modal(k, &g, &p, 32, Route::Streamfunction).unwrap()).unwrap();
            for (x, y) in a.pairs.iter().zip(&b.pairs).take(3) {
                assert!((x.lambda - y.lambda).norm() < 1e-7 * x.lambda.norm().max(1.0), "k={k}: {} vs {}", x.lambda, y.lambda);
            }
        }
    }

    #[test]
    fn large_viscosity_recovers_ms_symbol() {
        let g = GeometryParams::default();
        let p = PhysParams { mu_plus: 1e4, mu_minus: 2e4, ..PhysParams::default() };
        let s = eigen(&assemble_modal(2, &g, &p, 32, Route::Retained).unwrap()).unwrap();
        let lam = s.pairs[0].lambda.re;
        let ms = ms_symbol(2, &g, &p);
        assert!((lam - ms).abs() < 0.01 * ms, "{lam} vs {ms}");
    }

    #[test]
    fn qb4_small_for_eigenpairs_and_large_otherwise() {
        let (g, p) = defaults();
        let b = assemble_modal(2, &g, &p, 32, Route::Retained).unwrap();
        let s = eigen(&b).unwrap();
        for pair in &s.pairs {
            assert!(pair.qb4_residual < 1e-8, "{} {}", pair.lambda, pair.qb4_residual);
        }
        let z = Array1::from_iter((0..b.layout.size).map(|i| Complex64::new(((i * 7919) % 13) as f64 - 6.0, 0.0)));
        assert!(qb4_residual(&b, Complex64::new(3.0, 0.0), &z) > 1e-2);
    }

    #[test]
    fn predicted_limit_of_equilibrium() {
        let g = GeometryParams::default();
        let y = [0.03, 0.01, 0.0];
        let h = crate::refgeom::equilibrium_height(y, &g, 128).unwrap();
        let p = predicted_limit(&h, &h, &g).unwrap();
        for i in 0..3 {
            assert!((p[i] - y[i]).abs() < 1e-6, "{p:?}");
        }
    }
}
