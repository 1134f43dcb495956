use std::f64::consts::PI;

use mslab::curvature::curvature;
use mslab::potential::{interface_fluxes, jump_flux, solve_potential, Resolution, SolveOptions};
use mslab::{Exec, GeometryParams, HeightField};
use proptest::prelude::*;

fn g() -> GeometryParams {
    GeometryParams::default()
}

fn field(n: usize) -> impl Strategy<Value = HeightField> {
    (prop::collection::vec((1usize..6, -1.0f64..1.0, -1.0f64..1.0), 1..4), 0.0f64..0.1).prop_map(move |(m, amp)| {
        let h = HeightField::from_modes(n, &m).unwrap();
        if h.linf() == 0.0 { h } else { h.scaled(amp / h.linf()) }
    })
}

const RES: Resolution = Resolution { n_r_inner: 24, n_r_outer: 24 };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constants_are_exact(h in field(32), c in -2.0f64..2.0) {
        let eta = solve_potential(&h, &vec![c; 32], &g(), RES, SolveOptions::default()).unwrap();
        prop_assert!(eta.inner.iter().chain(eta.outer.iter()).all(|v| *v == c));
    }

    #[test]
    fn fluxes_are_neutral(h in field(32)) {
        // Harmonic in the disk, and harmonic with zero wall flux in the
        // annulus: both interface fluxes integrate to zero.
        let data = curvature(&h, &g()).unwrap().values;
        let eta = solve_potential(&h, &data, &g(), RES, SolveOptions::default()).unwrap();
        let (gin, gout) = interface_fluxes(&eta);
        let scale = gin.iter().chain(&gout).fold(1e-12f64, |m, v| m.max(v.abs()));
        prop_assert!(gin.iter().sum::<f64>().abs() / 32.0 < 1e-10 * scale);
        prop_assert!(gout.iter().sum::<f64>().abs() / 32.0 < 1e-10 * scale);
    }

    #[test]
    fn jump_is_rotation_equivariant(h in field(32), shift in 0usize..32) {
        let phi = 2.0 * PI * shift as f64 / 32.0;
        let solve = |h: &HeightField| {
            let data = curvature(h, &g()).unwrap().values;
            let eta = solve_potential(h, &data, &g(), RES, SolveOptions::default()).unwrap();
            jump_flux(h, &eta, 1.0, &g()).unwrap()
        };
        let a = solve(&h);
        let b = solve(&h.rotated(phi));
        let scale = a.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for j in 0..32 {
            prop_assert!((b[(j + shift) % 32] - a[j]).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn solve_is_linear_in_the_data(h in field(32), s in -3.0f64..3.0) {
        let d1: Vec<f64> = (0..32).map(|j| (j as f64 * 0.7).sin()).collect();
        let d2: Vec<f64> = (0..32).map(|j| (j as f64 * 0.3).cos()).collect();
        let sum: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a + s * b).collect();
        let j = |d: &[f64]| {
            let eta = solve_potential(&h, d, &g(), RES, SolveOptions::default()).unwrap();
            jump_flux(&h, &eta, 1.0, &g()).unwrap()
        };
        let (a, b, c) = (j(&d1), j(&d2), j(&sum));
        let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..32 {
            prop_assert!((a[i] + s * b[i] - c[i]).abs() < 1e-8 * scale);
        }
    }
}

#[test]
fn sequential_and_parallel_solves_agree() {
    let h = HeightField::from_fn(32, |t| 0.06 * (2.0 * t).cos() - 0.03 * (3.0 * t).sin()).unwrap();
    let data = curvature(&h, &g()).unwrap().values;
    let run = |exec| {
        let eta = solve_potential(&h, &data, &g(), RES, SolveOptions { exec, ..SolveOptions::default() }).unwrap();
        jump_flux(&h, &eta, 1.0, &g()).unwrap()
    };
    assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
}
