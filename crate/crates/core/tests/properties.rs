use std::f64::consts::PI;

use bilinear_ns::counterexample::{fN_fourier, AlphaKind, BumpSpec};
use bilinear_ns::ensemble::{sample_field, Profile};
use bilinear_ns::experiments::{ExperimentConfig, ExperimentKind};
use bilinear_ns::function_spaces::{besov_norm, BesovParams};
use bilinear_ns::littlewood_paley::build_psi;
use bilinear_ns::ns_bilinear::{chi_partition, mu_symbols, nu_symbols, LinearForm, MuKind, NuKind};
use bilinear_ns::pseudo_product::{apply_symbol, gaussian_symbol};
use bilinear_ns::spectral::{heat_propagate, leray_project};
use bilinear_ns::{make_grid, Frequency};
use num_complex::Complex64;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

fn freq2() -> impl Strategy<Value = Frequency> {
    (-6.0..6.0f64, -6.0..6.0f64).prop_map(|(a, b)| Frequency([a, b, 0.0]))
}

fn freq3() -> impl Strategy<Value = Frequency> {
    (-6.0..6.0f64, -6.0..6.0f64, -6.0..6.0f64).prop_map(|(a, b, c)| Frequency([a, b, c]))
}

fn form() -> impl Strategy<Value = LinearForm> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| LinearForm([a, b, c]))
}

fn value(s: &bilinear_ns::pseudo_product::Symbol, xi: &Frequency, eta: &Frequency) -> Complex64 {
    s.eval_scalar(xi, eta).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn partition_of_unity(r in 1e-6..1e6f64) {
        prop_assert!((build_psi().partition_sum(r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_partition_sums_to_one(xi in freq3(), eta in freq3()) {
        let (a, b, c) = chi_partition(&xi, &eta);
        prop_assert!((a + b + c - 1.0).abs() < 1e-14);
        prop_assert!(a >= 0.0 && b >= 0.0 && c >= 0.0);
    }

    #[test]
    fn chi_homogeneous_away_from_origin(xi in freq3(), eta in freq3(), lambda in 1.0..10.0f64) {
        prop_assume!(xi.norm() + eta.norm() >= 2.0);
        let (_, b, c) = chi_partition(&xi, &eta);
        let (_, b2, c2) = chi_partition(&(xi * lambda), &(eta * lambda));
        prop_assert!((b - b2).abs() < 1e-12 && (c - c2).abs() < 1e-12);
    }

    #[test]
    fn mu_and_nu_decompose(xi in freq2(), eta in freq2(), l1 in form(), l2 in form()) {
        let m = |k| value(&mu_symbols(k, l1, l2), &xi, &eta);
        prop_assert!((m(MuKind::Mu) - m(MuKind::Mu1) - m(MuKind::Mu2) - m(MuKind::Mu3)).norm() < 1e-12);
        let n = |k| value(&nu_symbols(k, l1, l2), &xi, &eta);
        prop_assert!((n(NuKind::Nu) - n(NuKind::Nu1) - n(NuKind::Nu2) - n(NuKind::Nu3)).norm() < 1e-12);
    }

    #[test]
    fn region_three_splits(eta in freq2(), t in 0.0..0.19f64, angle in 0.0..(2.0 * PI), l1 in form(), l2 in form()) {
        prop_assume!(eta.norm() > 1.0);
        let xi = Frequency([angle.cos(), angle.sin(), 0.0]) * (t * eta.norm());
        let m = |k| value(&mu_symbols(k, l1, l2), &xi, &eta);
        prop_assert!((m(MuKind::Mu3) - m(MuKind::Mu3p) + m(MuKind::Mu3pp)).norm() < 1e-10);
        let n = |k| value(&nu_symbols(k, l1, l2), &xi, &eta);
        prop_assert!((n(NuKind::Nu3) - n(NuKind::Nu3p) + n(NuKind::Nu3pp)).norm() < 1e-10);
    }

    #[test]
    fn leray_is_idempotent(seed in 0u64..1000) {
        let grid = make_grid(3, 8, 2.0 * PI).unwrap();
        let u = sample_field(&grid, seed, 0, Profile::DivfreeVector).unwrap();
        let w = u.combine(Complex64::new(1.0, 0.0), &heat_propagate(&u, 0.1), Complex64::new(0.5, 0.0)).unwrap();
        let p = leray_project(&w).unwrap();
        prop_assert!(leray_project(&p).unwrap().max_abs_difference(&p) < 1e-15);
        prop_assert!(p.divergence_residual() < 1e-14);
    }

    #[test]
    fn heat_semigroup(seed in 0u64..1000, s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let grid = make_grid(2, 16, 2.0 * PI).unwrap();
        let f = sample_field(&grid, seed, 0, Profile::WhiteL2).unwrap();
        let a = heat_propagate(&heat_propagate(&f, s), t);
        prop_assert!(a.max_abs_difference(&heat_propagate(&f, s + t)) < 1e-14);
    }

    #[test]
    fn real_symbol_keeps_fields_real(seed in 0u64..1000) {
        let grid = make_grid(2, 16, 2.0 * PI).unwrap();
        let f = sample_field(&grid, seed, 0, Profile::WhiteL2).unwrap();
        let g = sample_field(&grid, seed, 1, Profile::WhiteL2).unwrap();
        prop_assert!(f.conjugate_asymmetry() == 0.0);
        let b = apply_symbol(&gaussian_symbol(), &f, &g).unwrap();
        prop_assert!(b.conjugate_asymmetry() < 1e-14 * b.max_abs_coefficient());
    }

    #[test]
    fn apply_symbol_is_bilinear(seed in 0u64..1000, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let grid = make_grid(2, 8, 2.0 * PI).unwrap();
        let f = sample_field(&grid, seed, 0, Profile::WhiteL2).unwrap();
        let g = sample_field(&grid, seed, 1, Profile::WhiteL2).unwrap();
        let h = sample_field(&grid, seed, 2, Profile::WhiteL2).unwrap();
        let m = gaussian_symbol();
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let lhs = apply_symbol(&m, &f.combine(ca, &h, cb).unwrap(), &g).unwrap();
        let rhs = apply_symbol(&m, &f, &g).unwrap().combine(ca, &apply_symbol(&m, &h, &g).unwrap(), cb).unwrap();
        prop_assert!(lhs.max_abs_difference(&rhs) < 1e-13);
    }

    #[test]
    fn besov_decreases_in_q(seed in 0u64..1000, s in -1.0..1.0f64) {
        let grid = make_grid(2, 32, 2.0 * PI).unwrap();
        let f = sample_field(&grid, seed, 0, Profile::WhiteL2).unwrap();
        let norm = |q| besov_norm(&f, &BesovParams::for_grid(&grid, s, f64::INFINITY, q).unwrap()).value;
        let (a, b, c) = (norm(1.0), norm(2.0), norm(f64::INFINITY));
        prop_assert!(a >= b * (1.0 - 1e-12) && b >= c * (1.0 - 1e-12));
    }

    #[test]
    fn bump_data_divergence_free_and_even(x in -2000.0..2000.0f64, y in -3.0..3.0f64, z in -3.0..3.0f64) {
        let spec = BumpSpec::new(11, AlphaKind::LqNotL2).unwrap();
        let xi = Frequency([x, y, z]);
        let v = fN_fourier(&spec, &xi);
        let w = fN_fourier(&spec, &(xi * -1.0));
        prop_assert!((v[0] * x + v[1] * y + v[2] * z).abs() <= 1e-12 * (1.0 + xi.norm() * v.iter().map(|c| c.abs()).fold(0.0, f64::max)));
        // Real, even coefficients make the physical field real.
        prop_assert!(v.iter().zip(&w).all(|(a, b)| a == b));
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), dim in 1usize..4, points in 2usize..512, period in 0.1..100.0f64, eps in 0.001..0.2f64) {
        let mut c = ExperimentConfig::new(ExperimentKind::Inflation);
        c.seed = seed;
        c.dim = dim;
        c.points = points;
        c.period = period;
        c.set("zeta_eps", &eps.to_string()).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }
}
