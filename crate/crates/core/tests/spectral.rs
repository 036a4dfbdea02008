use std::f64::consts::PI;

use bilinear_ns::ensemble::{sample_field, Profile};
use bilinear_ns::spectral::{heat_propagate, leray_project, lp_norm};
use bilinear_ns::{make_grid, FieldKind, SpectralField};

/// Periodized heat kernel `Σ_m (4πt)^{-d/2} e^{-|x + mL|²/4t}`.
fn periodic_heat_kernel(x: [f64; 2], t: f64, period: f64) -> f64 {
    let mut s = 0.0;
    for m0 in -3..=3 {
        for m1 in -3..=3 {
            let (a, b) = (x[0] + m0 as f64 * period, x[1] + m1 as f64 * period);
            s += (-(a * a + b * b) / (4.0 * t)).exp();
        }
    }
    s / (4.0 * PI * t)
}

#[test]
fn heat_matches_direct_convolution() {
    let grid = make_grid(2, 16, 2.0 * PI).unwrap();
    let f = sample_field(&grid, 4, 0, Profile::WhiteL2).unwrap();
    let t = 0.3;
    let spectral = heat_propagate(&f, t).to_physical();
    let samples = f.to_physical();
    let h = grid.cell_volume();
    let mut worst = 0.0f64;
    for x in 0..grid.len() {
        let px = grid.position(x);
        let mut acc = 0.0;
        for y in 0..grid.len() {
            let py = grid.position(y);
            acc += h * periodic_heat_kernel([px[0] - py[0], px[1] - py[1]], t, grid.period()) * samples[0][y].re;
        }
        worst = worst.max((acc - spectral[0][x].re).abs());
    }
    assert!(worst < 1e-10 * lp_norm(&f, f64::INFINITY), "{worst:e}");
}

#[test]
fn heat_semigroup_and_contraction() {
    let grid = make_grid(2, 32, 2.0 * PI).unwrap();
    let f = sample_field(&grid, 8, 0, Profile::FlatBinf).unwrap();
    let two_steps = heat_propagate(&heat_propagate(&f, 0.2), 0.5);
    assert!(two_steps.max_abs_difference(&heat_propagate(&f, 0.7)) < 1e-14);
    for p in [1.0, 2.0, f64::INFINITY] {
        assert!(lp_norm(&heat_propagate(&f, 0.1), p) <= lp_norm(&f, p) * (1.0 + 1e-12));
    }
}

#[test]
fn leray_projection_removes_gradients() {
    let grid = make_grid(3, 8, 2.0 * PI).unwrap();
    let phi = sample_field(&grid, 2, 0, Profile::WhiteL2).unwrap();
    let grad = SpectralField::from_fn(grid, FieldKind::Vector, |i, xi| {
        let c = phi.coefficient(i)[0];
        [c * num_complex::Complex64::new(0.0, xi.0[0]), c * num_complex::Complex64::new(0.0, xi.0[1]), c * num_complex::Complex64::new(0.0, xi.0[2])]
    });
    assert!(leray_project(&grad).unwrap().max_abs_coefficient() < 1e-14 * grad.max_abs_coefficient());
    let u = sample_field(&grid, 2, 1, Profile::DivfreeVector).unwrap();
    assert!(leray_project(&u).unwrap().max_abs_difference(&u) < 1e-14);
}

#[test]
fn field_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = make_grid(3, 8, 4.0).unwrap();
    let u = sample_field(&grid, 1, 0, Profile::DivfreeVector).unwrap();
    for name in ["u.json", "u.bnsf"] {
        let path = dir.path().join(name);
        u.save(&path).unwrap();
        assert_eq!(SpectralField::load(&path).unwrap(), u);
    }
}
