use bilinear_ns::ensemble::{ensemble, Profile};
use bilinear_ns::ns_bilinear::*;
use bilinear_ns::spectral::{make_grid, lp_norm, SpectralField};
use num_complex::Complex64;
use std::f64::consts::PI;

fn relative_l2(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.combine(Complex64::new(1.0, 0.0), b, Complex64::new(-1.0, 0.0)).unwrap();
    lp_norm(&d, 2.0) / lp_norm(b, 2.0)
}

#[test]
fn t1_matches_duhamel_quadrature() {
    let grid = make_grid(2, 128, 32.0 * PI).unwrap();
    let fields = ensemble(&grid, 11, 2, Profile::DivfreeVector).unwrap();
    let t1 = t1_apply(&fields[0], &fields[1]).unwrap();
    let scale = Complex64::new(0.0, (2.0 * PI).powf(1.0));
    let mut errors = Vec::new();
    for steps in [64, 128, 256] {
        let d = duhamel_bilinear(&fields[0], &fields[1], 1.0, steps).unwrap();
        let e = relative_l2(&d.field.scale(scale), &t1);
        println!("steps {steps}: rel err {e:.3e}, richardson {:.3e}", d.error_estimate);
        errors.push(e);
    }
    assert!(errors[2] < 1e-6);
}

#[test]
fn dyadic_pieces_of_n_are_supported_on_annuli() {
    use bilinear_ns::Frequency;
    let (l1, l2) = (LinearForm([1.0, 0.0, 0.0]), LinearForm([0.0, 1.0, 0.0]));
    for j in 0..4 {
        let nj = nu_symbols(NuKind::Nj(j), l1, l2);
        let n = nu_symbols(NuKind::N, l1, l2);
        for i in 0..400 {
            let s = 0.05 * i as f64;
            let eta = Frequency([s, 0.3 * s + 0.1, 0.0]);
            let xi = Frequency([0.02 * s, -0.03 * s, 0.0]);
            let v = nj.eval_scalar(&xi, &eta).unwrap();
            let r = eta.norm() / 2f64.powi(j);
            if !(r > 0.75 && r < 8.0 / 3.0) || chi_partition(&xi, &eta).2 == 0.0 {
                assert_eq!(v.norm(), 0.0, "j = {j}, r = {r}");
            }
            assert!(v.norm() <= n.eval_scalar(&xi, &eta).unwrap().norm() + 1e-15);
        }
    }
}

#[test]
fn t2_output_is_divergence_free_and_imaginary() {
    let grid = make_grid(3, 8, 2.0 * PI).unwrap();
    let fields = ensemble(&grid, 2, 2, Profile::DivfreeVector).unwrap();
    let out = t2_apply(&fields[0], &fields[1]).unwrap();
    let scale = out.max_abs_coefficient();
    assert!(scale > 0.0);
    assert!(out.divergence_residual() < 1e-12 * scale);
    // The symbol carries no factor `i`, so `T2 = i·(real field)`.
    assert!(out.scale(Complex64::new(0.0, -1.0)).conjugate_asymmetry() < 1e-12 * scale);
}

/// `∫₀¹ e^{sa} ds` by a 10⁴-interval trapezoid with the Euler-Maclaurin end
/// correction `-h²/12 (f'(1) - f'(0))`.
fn corrected_trapezoid(a: f64) -> f64 {
    let n = 10_000;
    let h = 1.0 / n as f64;
    let f = |s: f64| (s * a).exp();
    let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
    let t = h * (0.5 * (f(0.0) + f(1.0)) + inner);
    t - h * h / 12.0 * (a * f(1.0) - a)
}

#[test]
fn time_factor_matches_quadrature() {
    for i in 0..=110 {
        let a = -50.0 + 0.5 * i as f64;
        let exact = duhamel_time_factor(a);
        assert!((exact - corrected_trapezoid(a)).abs() < 1e-9, "a = {a}");
    }
}

#[test]
fn dyadic_pieces_sum_to_n() {
    use bilinear_ns::Frequency;
    let (l1, l2) = (LinearForm([0.3, -1.0, 0.0]), LinearForm([1.0, 0.5, 0.0]));
    let n = nu_symbols(NuKind::N, l1, l2);
    for i in 1..200 {
        let r = 1.0 + 0.37 * i as f64;
        let angle = 0.1 * i as f64;
        let eta = Frequency([r * angle.cos(), r * angle.sin(), 0.0]);
        let xi = Frequency([0.1 * r * (2.0 * angle).sin(), 0.05 * r, 0.0]);
        if chi_partition(&xi, &eta).2 == 0.0 {
            continue;
        }
        let j0 = r.log2().floor() as i32;
        let sum: Complex64 = (j0 - 2..=j0 + 2).map(|j| nu_symbols(NuKind::Nj(j), l1, l2).eval_scalar(&xi, &eta).unwrap()).sum();
        let whole = n.eval_scalar(&xi, &eta).unwrap();
        assert!((sum - whole).norm() <= 1e-12 * whole.norm().max(1e-300), "r = {r}");
    }
}

#[test]
fn nu3pp_is_dyadically_diagonal() {
    let grid = make_grid(2, 32, 2.0 * PI).unwrap();
    let f = bilinear_ns::ensemble::sample_field(&grid, 6, 0, Profile::WhiteL2).unwrap();
    let g = bilinear_ns::ensemble::sample_field(&grid, 6, 1, Profile::WhiteL2).unwrap();
    let m = nu_symbols(NuKind::Nu3pp, LinearForm([1.0, 0.0, 0.0]), LinearForm([0.0, 1.0, 0.0]));
    let rows = dyadic_pair_energy(&m, &f, &g).unwrap();
    let near: f64 = rows.iter().filter(|(j, k, _)| (j - k).abs() <= 2).map(|r| r.2).sum();
    assert!(near > 0.0);
    for (j, k, e) in rows {
        if (j - k).abs() > 2 {
            assert_eq!(e, 0.0, "j = {j}, k = {k}");
        }
    }
}
