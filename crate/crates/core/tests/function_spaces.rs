use std::f64::consts::PI;

use approx::assert_relative_eq;
use bilinear_ns::ensemble::{ensemble, Profile};
use bilinear_ns::function_spaces::*;
use bilinear_ns::{make_grid, FieldKind, GridSpec, SpectralField};
use num_complex::Complex64;

fn cosine(grid: GridSpec, k: f64) -> SpectralField {
    let samples = (0..grid.len()).map(|i| Complex64::new((k * grid.position(i)[0]).cos(), 0.0)).collect();
    SpectralField::from_physical(grid, FieldKind::Scalar, vec![samples]).unwrap()
}

#[test]
fn heat_norms_of_single_modes() {
    let grid = make_grid(2, 32, 2.0 * PI).unwrap();
    for k in [1.0, 2.0, 5.0] {
        let f = cosine(grid, k);
        // sup_t √t e^{-k²t} at t = 1/(2k²).
        assert_relative_eq!(b_minus1_inf_inf_heat(&f), (0.5f64).sqrt() * (-0.5f64).exp() / k, max_relative = 1e-6);
        // (∫ e^{-2k²t} dt)^{1/2}.
        assert_relative_eq!(heat_b_minus1_inf2(&f, &HeatQuadrature::for_grid(&grid)), 1.0 / (2.0f64.sqrt() * k), max_relative = 1e-3);
    }
}

#[test]
fn besov_norm_scales_with_regularity() {
    let grid = make_grid(2, 64, 2.0 * PI).unwrap();
    let f = cosine(grid, 4.0);
    let base = besov_norm(&f, &BesovParams::for_grid(&grid, 0.0, f64::INFINITY, f64::INFINITY).unwrap());
    for s in [-1.0, 0.5, 1.0] {
        let r = besov_norm(&f, &BesovParams::for_grid(&grid, s, f64::INFINITY, f64::INFINITY).unwrap());
        let expected = base
            .per_block
            .iter()
            .map(|(j, v)| 2f64.powf(*j as f64 * s) * v)
            .fold(0.0, f64::max);
        assert_relative_eq!(r.value, expected, max_relative = 1e-12);
    }
}

#[test]
fn embedding_chain_on_small_ensemble() {
    let grid = make_grid(2, 32, 2.0 * PI).unwrap();
    let rows: Vec<EmbeddingRow> =
        ensemble(&grid, 4, 4, Profile::FlatBinf).unwrap().iter().map(|f| embedding_row(f).unwrap()).collect();
    let (c, cp) = embedding_constants(&rows);
    assert!(c.is_finite() && cp.is_finite() && c > 0.0 && cp > 0.0);
    for r in &rows {
        assert!(r.b_inf_inf_heat <= c * r.grad_bmo * (1.0 + 1e-12));
        assert!(c * r.grad_bmo <= cp * r.b_inf2_heat * (1.0 + 1e-12));
        assert!(r.besov_inf_inf <= r.besov_inf_2 * (1.0 + 1e-12));
    }
}

#[test]
fn bmo_is_translation_and_sign_invariant_for_modes() {
    let grid = make_grid(2, 32, 2.0 * PI).unwrap();
    let (centers, radii) = (default_centers(&grid), default_radius_exponents(&grid));
    let f = cosine(grid, 2.0);
    let a = bmo_carleson_norm(&f, &centers, &radii);
    let b = bmo_carleson_norm(&f.scale(Complex64::new(-1.0, 0.0)), &centers, &radii);
    assert!(a > 0.0);
    assert_relative_eq!(a, b, max_relative = 1e-12);
    let doubled = bmo_carleson_norm(&f.scale(Complex64::new(2.0, 0.0)), &centers, &radii);
    assert_relative_eq!(doubled, 2.0 * a, max_relative = 1e-12);
}

#[test]
fn chemin_ratio_of_single_mode_is_exponential() {
    let grid = make_grid(2, 64, 2.0 * PI).unwrap();
    let f = cosine(grid, 3.0);
    let ratio = chemin_decay_check(&f, 1, 0.25).unwrap();
    assert_relative_eq!(ratio, (-9.0f64 * 0.25).exp(), max_relative = 1e-12);
    assert!(ratio <= chemin_bound(1, 0.25));
    assert!(chemin_decay_check(&SpectralField::zeros(grid, FieldKind::Scalar), 1, 1.0).is_err());
}
