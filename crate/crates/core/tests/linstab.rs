use mslab::linstab::{
    assemble_modal, compute_spectrum, eigen, eigen_with, predicted_limit, semisimplicity_check, spectral_gap, Classification,
    Route, Thresholds,
};
use mslab::potential::ms_symbol;
use mslab::refgeom::{enclosed_area, equilibrium_height};
use mslab::{Exec, GeometryParams, HeightField, PhysParams};

fn defaults() -> (GeometryParams, PhysParams) {
    (GeometryParams::default(), PhysParams::default())
}

#[test]
fn three_dimensional_kernel_and_positive_rest() {
    let (g, p) = defaults();
    let s = compute_spectrum(&g, &p, 0..=8, 48, Route::Retained, Exec::default()).unwrap();
    assert_eq!(s.kernel_count, 3);
    assert!(s.others_positive);
    assert!(s.gap > 1.0);
    let count = |k: usize| -> usize {
        s.pairs().filter(|q| q.k == k && q.classification == Classification::Kernel).map(|q| q.multiplicity).sum()
    };
    assert_eq!((count(0), count(1)), (1, 2));
}

#[test]
fn complex_eigenvalues_come_in_conjugate_pairs() {
    let (g, p) = defaults();
    let b = assemble_modal(5, &g, &p, 40, Route::Retained).unwrap();
    let th = Thresholds { n_keep: usize::MAX, ..Thresholds::default() };
    let s = eigen_with(&b, th).unwrap();
    let lams: Vec<_> = s.pairs.iter().map(|q| q.lambda).collect();
    for l in &lams {
        if l.im.abs() > 1e-8 * l.norm() {
            assert!(lams.iter().any(|m| (m - l.conj()).norm() < 1e-6 * l.norm()));
        }
    }
}

#[test]
fn refinement_moves_leading_eigenvalues_little() {
    let (g, p) = defaults();
    for k in [0, 2] {
        let a = eigen(&assemble_modal(k, &g, &p, 64, Route::Retained).unwrap()).unwrap();
        let b = eigen(&assemble_modal(k, &g, &p, 128, Route::Retained).unwrap()).unwrap();
        for (x, y) in a.pairs.iter().zip(&b.pairs).take(3) {
            assert!((x.lambda - y.lambda).norm() <= 1e-4 * y.lambda.norm().max(1.0), "k={k}: {} vs {}", x.lambda, y.lambda);
        }
    }
}

#[test]
fn pressure_elimination_matches_retained_pencil() {
    let (g, p) = defaults();
    for k in 0..=8 {
        let a = eigen(&assemble_modal(k, &g, &p, 64, Route::Retained).unwrap()).unwrap();
        let b = eigen(&assemble_modal(k, &g, &p, 64, Route::Eliminated).unwrap()).unwrap();
        assert_eq!(a.pairs.len(), b.pairs.len());
        for (x, y) in a.pairs.iter().zip(&b.pairs) {
            assert!((x.lambda - y.lambda).norm() <= 1e-8 * x.lambda.norm().max(1.0), "k={k}: {} vs {}", x.lambda, y.lambda);
            assert!(y.qb4_residual <= 1e-8, "k={k}: {}", y.qb4_residual);
            assert_eq!(x.classification, y.classification);
        }
    }
}

#[test]
fn streamfunction_formulation_agrees_at_low_resolution() {
    let (g, p) = defaults();
    for k in 1..=4 {
        let a = eigen(&assemble_modal(k, &g, &p, 32, Route::Retained).unwrap()).unwrap();
        let b = eigen(&assemble_modal(k, &g, &p, 32, Route::Streamfunction).unwrap()).unwrap();
        for (x, y) in a.pairs.iter().zip(&b.pairs).take(3) {
            assert!((x.lambda - y.lambda).norm() <= 1e-7 * x.lambda.norm().max(1.0), "k={k}: {} vs {}", x.lambda, y.lambda);
        }
    }
}

#[test]
fn kernel_is_semisimple_and_motionless() {
    let (g, p) = defaults();
    let (gap, _) = spectral_gap(&g, &p, 4, 48, Exec::default()).unwrap();
    for route in [Route::Retained, Route::Eliminated] {
        let blocks: Vec<_> = (0..=2).map(|k| assemble_modal(k, &g, &p, 48, route).unwrap()).collect();
        let rep = semisimplicity_check(&blocks, gap).unwrap();
        for r in &rep[..2] {
            assert!(r.semisimple, "{route:?} {r:?}");
            assert_eq!((r.algebraic, r.geometric), (1, 1));
        }
        assert_eq!(rep[2].algebraic, 0);
    }
    let blocks: Vec<_> = (0..=2).map(|k| assemble_modal(k, &g, &p, 48, Route::Retained).unwrap()).collect();
    for b in &blocks[..2] {
        let s = eigen(b).unwrap();
        let z = s.pairs.iter().find(|q| q.classification == Classification::Kernel).unwrap();
        assert!(z.velocity_norm <= 1e-10);
        assert!(z.qb4_residual <= 1e-8);
    }
}

#[test]
fn large_viscosity_recovers_mullins_sekerka() {
    let g = GeometryParams::default();
    let p = PhysParams { mu_plus: 1e4, mu_minus: 2e4, ..PhysParams::default() };
    let (gap, mode) = spectral_gap(&g, &p, 6, 48, Exec::default()).unwrap();
    assert_eq!(mode, 2);
    assert!((gap - ms_symbol(2, &g, &p)).abs() <= 1e-3 * gap);
}

#[test]
fn predicted_limit_matches_area_of_mode_three() {
    let g = GeometryParams::default();
    let h0 = HeightField::from_fn(64, |t| 0.05 * (3.0 * t).cos()).unwrap();
    let y = predicted_limit(&h0, &HeightField::zeros(64).unwrap(), &g).unwrap();
    let a0 = enclosed_area(&h0, &g).unwrap();
    let circle = std::f64::consts::PI * (g.r + y[0]).powi(2);
    assert!((circle - a0).abs() <= 1e-12 * a0);
    assert!(y[1].abs() < 1e-14 && y[2].abs() < 1e-14);

    // A shifted circle is its own limit.
    let h = equilibrium_height([0.02, 0.03, -0.01], &g, 64).unwrap();
    let y = predicted_limit(&h, &h, &g).unwrap();
    for (a, b) in y.iter().zip([0.02, 0.03, -0.01]) {
        assert!((a - b).abs() < 1e-10, "{y:?}");
    }
}
