use std::f64::consts::PI;

use approx::assert_relative_eq;
use bilinear_ns::ensemble::{sample_field, Profile};
use bilinear_ns::ns_bilinear::{mu_symbols, nu_symbols, LinearForm, MuKind, NuKind};
use bilinear_ns::pseudo_product::{
    apply_symbol, apply_via_kernel, boundedness_ratio, cm_condition_estimate, constant_symbol, gaussian_symbol,
    kernel_of_symbol, NormSelector, Symbol,
};
use bilinear_ns::spectral::lp_norm;
use bilinear_ns::{make_grid, Frequency, GridSpec, SpectralField};
use num_complex::Complex64;

const E1: LinearForm = LinearForm([1.0, 0.0, 0.0]);
const E2: LinearForm = LinearForm([0.0, 1.0, 0.0]);

fn test_symbols() -> Vec<Symbol> {
    vec![
        constant_symbol(1.0),
        gaussian_symbol(),
        Symbol::complex("i xi1 gauss", |xi: &Frequency, eta: &Frequency| {
            Complex64::new(0.0, xi.0[0]) * (-(xi.norm_sq() + eta.norm_sq()) / 4.0).exp()
        }),
        mu_symbols(MuKind::Mu1, E1, E2),
        nu_symbols(NuKind::Nj(1), E1, E2),
    ]
}

fn relative_l2(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.combine(Complex64::new(1.0, 0.0), b, Complex64::new(-1.0, 0.0)).unwrap();
    (d.coefficient_energy() / b.coefficient_energy()).sqrt()
}

fn pair(grid: &GridSpec, seed: u64) -> (SpectralField, SpectralField) {
    (sample_field(grid, seed, 0, Profile::WhiteL2).unwrap(), sample_field(grid, seed, 1, Profile::WhiteL2).unwrap())
}

#[test]
fn kernel_sum_matches_lattice_sum() {
    let grid = make_grid(2, 16, 4.0 * PI).unwrap();
    let (f, g) = pair(&grid, 3);
    for m in test_symbols() {
        let direct = apply_symbol(&m, &f, &g).unwrap();
        assert!(!direct.is_zero(), "{}", m.name());
        let k = kernel_of_symbol(&m, &grid).unwrap();
        let via = apply_via_kernel(&k, &f, &g).unwrap();
        let err = relative_l2(&via, &direct);
        assert!(err < 1e-8, "{}: {err:e}", m.name());
    }
}

#[test]
fn kernel_young_bound() {
    let grid = make_grid(2, 16, 2.0 * PI).unwrap();
    let (f, g) = pair(&grid, 5);
    for m in test_symbols() {
        let k = kernel_of_symbol(&m, &grid).unwrap();
        let b = apply_symbol(&m, &f, &g).unwrap();
        let bound = k.l1_norm * lp_norm(&f, f64::INFINITY) * lp_norm(&g, f64::INFINITY);
        assert!(lp_norm(&b, f64::INFINITY) <= bound * (1.0 + 1e-9), "{}", m.name());
    }
}

#[test]
fn bilinear_in_each_argument() {
    let grid = make_grid(2, 16, 2.0 * PI).unwrap();
    let (f, g) = pair(&grid, 7);
    let h = sample_field(&grid, 7, 2, Profile::WhiteL2).unwrap();
    let (a, b) = (Complex64::new(0.7, -0.2), Complex64::new(-1.3, 0.4));
    let m = gaussian_symbol();
    let lhs = apply_symbol(&m, &f.combine(a, &h, b).unwrap(), &g).unwrap();
    let rhs = apply_symbol(&m, &f, &g).unwrap().combine(a, &apply_symbol(&m, &h, &g).unwrap(), b).unwrap();
    assert!(relative_l2(&lhs, &rhs) < 1e-12);
    let lhs = apply_symbol(&m, &f, &g.combine(a, &h, b).unwrap()).unwrap();
    let rhs = apply_symbol(&m, &f, &g).unwrap().combine(a, &apply_symbol(&m, &f, &h).unwrap(), b).unwrap();
    assert!(relative_l2(&lhs, &rhs) < 1e-12);
}

#[test]
fn constant_symbol_ratio_is_product_ratio() {
    let grid = make_grid(2, 16, 2.0 * PI).unwrap();
    let pairs: Vec<_> = (0..3).map(|s| pair(&grid, 20 + s)).collect();
    let l2 = NormSelector::Lp { p: 2.0 };
    let linf = NormSelector::Lp { p: f64::INFINITY };
    let r = boundedness_ratio(&constant_symbol(1.0), linf, l2, l2, &pairs).unwrap();
    for ((f, g), ratio) in pairs.iter().zip(&r.ratios) {
        let (pf, pg) = (f.to_physical(), g.to_physical());
        let h = grid.cell_volume();
        let prod: f64 = pf[0].iter().zip(&pg[0]).map(|(a, b)| (a * b).norm_sqr() * h).sum::<f64>().sqrt();
        let expected = 2.0 * PI * prod / (lp_norm(f, f64::INFINITY) * lp_norm(g, 2.0));
        assert_relative_eq!(ratio.unwrap(), expected, max_relative = 1e-10);
        assert!(ratio.unwrap() <= 2.0 * PI * (1.0 + 1e-12));
    }
}

#[test]
fn zero_input_gives_undefined_ratio() {
    let grid = make_grid(2, 8, 2.0 * PI).unwrap();
    let (f, _) = pair(&grid, 1);
    let zero = SpectralField::zeros(grid, f.kind());
    let l2 = NormSelector::Lp { p: 2.0 };
    let r = boundedness_ratio(&gaussian_symbol(), l2, l2, l2, &[(zero, f)]).unwrap();
    assert_eq!(r.ratios, vec![None]);
}

#[test]
fn coifman_meyer_estimates_finite_for_smooth_symbols() {
    let samples: Vec<(Frequency, Frequency)> = (1..=20)
        .map(|i| {
            let s = 0.3 * i as f64;
            (Frequency([s, 0.5 * s, 0.0]), Frequency([-0.4 * s, 1.1 * s, 0.0]))
        })
        .collect();
    for m in [gaussian_symbol(), mu_symbols(MuKind::Mu2, E1, E2), nu_symbols(NuKind::Nu1, E1, E2)] {
        let r = cm_condition_estimate(&m, 2, 2, &samples).unwrap();
        assert!(r.is_finite(), "{}: {:?}", m.name(), r);
    }
}
