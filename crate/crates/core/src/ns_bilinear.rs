//! The bilinear part of the second Picard iterate for Navier-Stokes and the
//! multipliers that describe it.
//!
//! With `a(ξ,η) = |ξ|² - |η|² - |ξ-η|²` and `τ(a) = ∫₀¹ e^{sa} ds`,
//!
//! ```text
//! T1(f,g)^(ξ) = P(ξ) e^{-|ξ|²} ∫ τ(a) (f̂(η)·(ξ-η)) ĝ(ξ-η) dη
//! T2(f,g)     = T1(f,g) + T1(g,f)
//! ```
//!
//! Symbols carrying the `e^{-|ξ|²}` envelope obey `|m| ≲ poly·e^{-|ξ|²/2}`
//! and are treated as zero for `|ξ| > ENVELOPE_CUTOFF`, where the envelope
//! is below `1e-40`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::{DyadicBank, Psi};
use crate::pseudo_product::{
    apply_symbol, assemble, bilinear_sum, output_points, support_mask, BilinearOperator, Symbol, Vec3c,
};
use crate::smooth::smoothstep;
use crate::spectral::{heat_propagate, leray_matrix, FieldKind, Frequency, GridSpec, SpectralField, ZERO};

/// `|ξ|` beyond which enveloped symbols are dropped.
pub const ENVELOPE_CUTOFF: f64 = 13.6;

/// Lower clamp for `|a|` in the `1/a` symbols.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;

/// `τ(a) = (e^a - 1)/a`, with a cubic Taylor branch near 0.
pub fn duhamel_time_factor(a: f64) -> f64 {
    if a.abs() < 1e-4 {
        1.0 + a / 2.0 + a * a / 6.0 + a * a * a / 24.0
    } else {
        a.exp_m1() / a
    }
}

/// `a(ξ,η) = |ξ|² - |η|² - |ξ-η|²`.
pub fn exponent(xi: &Frequency, eta: &Frequency) -> f64 {
    xi.norm_sq() - eta.norm_sq() - (*xi - *eta).norm_sq()
}

/// `τ(a)·e^{-|ξ|²}` from the tables `E_v = e^{-|v|²}` without overflow:
/// `e^a·E_ξ = E_η·E_ζ`.
#[inline]
pub fn heat_weight(a: f64, e_xi: f64, e_eta: f64, e_zeta: f64) -> f64 {
    if a.abs() >= 1.0 {
        (e_eta * e_zeta - e_xi) / a
    } else if a == 0.0 {
        e_xi
    } else {
        e_xi * a.exp_m1() / a
    }
}

/// `(χ1, χ2, χ3)` at `(ξ, η)`.
///
/// `χ1 = S(2 - |ξ| - |η|)` covers the low-frequency ball, `ρ = 1` for
/// `|ξ| ≤ |η|/6` and `0` for `|ξ| ≥ |η|/5`, `χ3 = (1-χ1)ρ` and
/// `χ2 = (1-χ1)(1-ρ)`.
pub fn chi_partition(xi: &Frequency, eta: &Frequency) -> (f64, f64, f64) {
    let (nx, ne) = (xi.norm(), eta.norm());
    let chi1 = smoothstep(2.0 - nx - ne);
    let rho = if ne == 0.0 { 0.0 } else { smoothstep((0.2 - nx / ne) / (0.2 - 1.0 / 6.0)) };
    let rest = 1.0 - chi1;
    (chi1, rest * (1.0 - rho), rest * rho)
}

/// A linear form `ℓ(v) = c·v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearForm(pub [f64; 3]);

impl LinearForm {
    pub fn apply(&self, v: &Frequency) -> f64 {
        self.0[0] * v.0[0] + self.0[1] * v.0[1] + self.0[2] * v.0[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuKind {
    Mu,
    Mu1,
    Mu2,
    Mu3,
    Mu3p,
    Mu3pp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuKind {
    Nu,
    Nu1,
    Nu2,
    Nu3,
    Nu3p,
    Nu3pp,
    N,
    Nj(i32),
}

/// `1/a` clamped away from zero, with `a ≤ 0` on the support of `χ3`.
fn guarded_inverse(a: f64) -> f64 {
    if a.abs() < DENOMINATOR_FLOOR {
        -1.0 / DENOMINATOR_FLOOR
    } else {
        1.0 / a
    }
}

/// Region-resolved symbol shared by the `μ` and `ν` families; `second` maps
/// `(ξ, η)` to the argument of `ℓ²`.
fn region_symbol(region: u8, split: u8, l1: LinearForm, l2: LinearForm, second: fn(&Frequency, &Frequency) -> Frequency) -> impl Fn(&Frequency, &Frequency) -> f64 {
    move |xi, eta| {
        let (c1, c2, c3) = chi_partition(xi, eta);
        let chi = match region {
            0 => 1.0,
            1 => c1,
            2 => c2,
            _ => c3,
        };
        if chi == 0.0 {
            return 0.0;
        }
        let lin = l1.apply(eta) * l2.apply(&second(xi, eta));
        let zeta = *xi - *eta;
        match split {
            0 => chi * lin * (-xi.norm_sq()).exp() * duhamel_time_factor(exponent(xi, eta)),
            1 => chi * lin * (-zeta.norm_sq() - eta.norm_sq()).exp() * guarded_inverse(exponent(xi, eta)),
            _ => chi * lin * (-xi.norm_sq()).exp() * guarded_inverse(exponent(xi, eta)),
        }
    }
}

fn with_forms(s: Symbol, l1: LinearForm, l2: LinearForm) -> Symbol {
    let mut s = s;
    for i in 0..3 {
        s = s.with_param(format!("l1_{i}"), l1.0[i]).with_param(format!("l2_{i}"), l2.0[i]);
    }
    s
}

/// `μ = e^{-|ξ|²} ℓ¹(η) ℓ²(ξ) τ(a)` and its region pieces.
///
/// `μ_i = χ_i μ`, `μ3' = χ3 ℓ¹(η)ℓ²(ξ) e^{-|ξ-η|²-|η|²}/a` and
/// `μ3'' = χ3 ℓ¹(η)ℓ²(ξ) e^{-|ξ|²}/a`, so `μ3 = μ3' - μ3''`.
pub fn mu_symbols(which: MuKind, l1: LinearForm, l2: LinearForm) -> Symbol {
    fn at_xi(xi: &Frequency, _: &Frequency) -> Frequency {
        *xi
    }
    let (name, region, split) = match which {
        MuKind::Mu => ("mu", 0, 0),
        MuKind::Mu1 => ("mu1", 1, 0),
        MuKind::Mu2 => ("mu2", 2, 0),
        MuKind::Mu3 => ("mu3", 3, 0),
        MuKind::Mu3p => ("mu3p", 3, 1),
        MuKind::Mu3pp => ("mu3pp", 3, 2),
    };
    with_forms(Symbol::scalar(name, region_symbol(region, split, l1, l2, at_xi)), l1, l2).with_cutoff(ENVELOPE_CUTOFF)
}

/// `ν = e^{-|ξ|²} ℓ¹(η) ℓ²(ξ-η) τ(a)`, its region pieces, and
/// `N = χ3 ℓ¹(η)ℓ²(ξ-η)/a` with dyadic pieces `N_j = ψ(|η|/2^j) N`.
pub fn nu_symbols(which: NuKind, l1: LinearForm, l2: LinearForm) -> Symbol {
    fn at_zeta(xi: &Frequency, eta: &Frequency) -> Frequency {
        *xi - *eta
    }
    let enveloped = |name: &str, region, split| {
        with_forms(Symbol::scalar(name, region_symbol(region, split, l1, l2, at_zeta)), l1, l2)
            .with_cutoff(ENVELOPE_CUTOFF)
    };
    match which {
        NuKind::Nu => enveloped("nu", 0, 0),
        NuKind::Nu1 => enveloped("nu1", 1, 0),
        NuKind::Nu2 => enveloped("nu2", 2, 0),
        NuKind::Nu3 => enveloped("nu3", 3, 0),
        NuKind::Nu3p => enveloped("nu3p", 3, 1),
        NuKind::Nu3pp => enveloped("nu3pp", 3, 2),
        NuKind::N => with_forms(Symbol::scalar("N", move |xi, eta| n_symbol(xi, eta, l1, l2)), l1, l2),
        NuKind::Nj(j) => {
            let psi = Psi::default();
            let scale = 2f64.powi(j);
            with_forms(
                Symbol::scalar(format!("N_{j}"), move |xi, eta| {
                    let w = psi.eval(eta.norm() / scale);
                    if w == 0.0 {
                        0.0
                    } else {
                        w * n_symbol(xi, eta, l1, l2)
                    }
                }),
                l1,
                l2,
            )
            .with_param("j", j as f64)
        }
    }
}

fn n_symbol(xi: &Frequency, eta: &Frequency, l1: LinearForm, l2: LinearForm) -> f64 {
    let (_, _, c3) = chi_partition(xi, eta);
    if c3 == 0.0 {
        return 0.0;
    }
    c3 * l1.apply(eta) * l2.apply(&(*xi - *eta)) * guarded_inverse(exponent(xi, eta))
}

/// Per-lattice tables used by the `T1`/`T2` sums.
struct Tables {
    freq: Vec<Frequency>,
    nsq: Vec<f64>,
    env: Vec<f64>,
}

impl Tables {
    fn new(grid: &GridSpec) -> Self {
        let freq: Vec<Frequency> = (0..grid.len()).map(|i| grid.frequency(i)).collect();
        let nsq: Vec<f64> = freq.iter().map(|f| f.norm_sq()).collect();
        let env = nsq.iter().map(|v| (-v).exp()).collect();
        Self { freq, nsq, env }
    }

    #[inline]
    fn weight(&self, xi: usize, eta: usize, zeta: usize) -> f64 {
        let a = self.nsq[xi] - self.nsq[eta] - self.nsq[zeta];
        heat_weight(a, self.env[xi], self.env[eta], self.env[zeta])
    }
}

/// `(c_f·ζ) c_g` scaled by `w`.
#[inline]
pub fn t1_pair_term(w: f64, cf: &Vec3c, zeta: &Frequency, cg: &Vec3c) -> Vec3c {
    let s = (cf[0] * zeta.0[0] + cf[1] * zeta.0[1] + cf[2] * zeta.0[2]) * w;
    [s * cg[0], s * cg[1], s * cg[2]]
}

/// `(2π)^{d/2} P(ξ) v`.
fn project_scaled(xi: &Frequency, dim: usize, v: &Vec3c) -> Vec3c {
    let p = leray_matrix(xi, dim);
    let norm = (2.0 * PI).powf(dim as f64 / 2.0);
    std::array::from_fn(|i| (0..dim).map(|j| v[j] * p[i][j]).sum::<Complex64>() * norm)
}

fn check_flow_input(f: &SpectralField, what: &str) -> Result<()> {
    if f.kind() != FieldKind::Vector {
        return Err(Error::InvalidArgument(format!("{what} must be a vector field")));
    }
    f.require_half_nyquist(what)?;
    let div = f.divergence_residual();
    if div > 1e-8 {
        return Err(Error::InvalidArgument(format!("{what} is not divergence-free (residual {div:.3e})")));
    }
    Ok(())
}

/// `T1(f, g)`.
pub fn t1_apply(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.check_compatible(g)?;
    check_flow_input(f, "first input")?;
    check_flow_input(g, "second input")?;
    let grid = *f.grid();
    let tables = Tables::new(&grid);
    let (supp_f, _) = support_mask(f);
    let (supp_g, mask_g) = support_mask(g);
    let points = output_points(&grid, &supp_f, &supp_g, Some(ENVELOPE_CUTOFF));
    let sums = bilinear_sum(&grid, &supp_f, &mask_g, &points, |xi, eta, zeta| {
        t1_pair_term(tables.weight(xi, eta, zeta), &f.coefficient(eta), &tables.freq[zeta], &g.coefficient(zeta))
    });
    let values = points.iter().zip(sums).map(|(&p, v)| project_scaled(&tables.freq[p], grid.dim(), &v)).collect();
    assemble(grid, FieldKind::Vector, &points, values)
}

/// `T2(f, g)`: the symmetrized integrand, summed in one pass.
pub fn t2_apply(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.check_compatible(g)?;
    check_flow_input(f, "first input")?;
    check_flow_input(g, "second input")?;
    let grid = *f.grid();
    let tables = Tables::new(&grid);
    let (_, mask_f) = support_mask(f);
    let (_, mask_g) = support_mask(g);
    let mask: Vec<bool> = mask_f.iter().zip(&mask_g).map(|(a, b)| *a || *b).collect();
    let union: Vec<usize> = (0..grid.len()).filter(|&i| mask[i]).collect();
    let points = output_points(&grid, &union, &union, Some(ENVELOPE_CUTOFF));
    let sums = bilinear_sum(&grid, &union, &mask, &points, |xi, eta, zeta| {
        let w = tables.weight(xi, eta, zeta);
        let z = &tables.freq[zeta];
        let a = t1_pair_term(w, &f.coefficient(eta), z, &g.coefficient(zeta));
        let b = t1_pair_term(w, &g.coefficient(eta), z, &f.coefficient(zeta));
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    });
    let values = points.iter().zip(sums).map(|(&p, v)| project_scaled(&tables.freq[p], grid.dim(), &v)).collect();
    assemble(grid, FieldKind::Vector, &points, values)
}

/// `T1` as a [`BilinearOperator`].
#[derive(Debug, Clone, Copy, Default)]
pub struct T1Operator;

/// `T2` as a [`BilinearOperator`].
#[derive(Debug, Clone, Copy, Default)]
pub struct T2Operator;

impl BilinearOperator for T1Operator {
    fn label(&self) -> String {
        "T1".into()
    }
    fn apply(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        t1_apply(f, g)
    }
}

impl BilinearOperator for T2Operator {
    fn label(&self) -> String {
        "T2".into()
    }
    fn apply(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        t2_apply(f, g)
    }
}

/// Time-quadrature result with a Richardson error estimate.
#[derive(Debug, Clone)]
pub struct DuhamelResult {
    pub field: SpectralField,
    /// `‖S_n - S_{n/2}‖₂ / 15`, relative to `‖S_n‖₂`.
    pub error_estimate: f64,
}

/// `(F·∇)G` for vector fields, computed with FFT products.
fn advect(f: &SpectralField, g: &SpectralField) -> SpectralField {
    let grid = *f.grid();
    let dim = grid.dim();
    let pf = f.to_physical();
    let mut out = vec![vec![ZERO; grid.len()]; dim];
    let freqs: Vec<Frequency> = (0..grid.len()).map(|i| grid.frequency(i)).collect();
    for i in 0..dim {
        for j in 0..dim {
            let mut dg = SpectralField::zeros(grid, FieldKind::Scalar);
            for (flat, c) in dg.component_mut(0).iter_mut().enumerate() {
                *c = g.component(i)[flat] * Complex64::new(0.0, freqs[flat].0[j]);
            }
            let phys = dg.to_physical();
            for ((o, a), b) in out[i].iter_mut().zip(&pf[j]).zip(&phys[0]) {
                *o += a * b;
            }
        }
    }
    SpectralField::from_physical(grid, FieldKind::Vector, out).expect("shapes match")
}

/// `D(f,g;t) = -∫₀^t e^{(t-s)Δ} P((e^{sΔ}f·∇) e^{sΔ}g) ds` by composite
/// Simpson in `s`, with products formed pointwise in physical space.
///
/// On the coefficient lattice `T1(f,g) = i (2π)^{d/2} D(f,g;1)`.
pub fn duhamel_bilinear(f: &SpectralField, g: &SpectralField, t: f64, steps: usize) -> Result<DuhamelResult> {
    f.check_compatible(g)?;
    check_flow_input(f, "first input")?;
    check_flow_input(g, "second input")?;
    if steps < 16 || steps % 4 != 0 {
        return Err(Error::InvalidArgument(format!("steps = {steps}; need a multiple of 4, at least 16")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t}")));
    }
    let grid = *f.grid();
    let dim = grid.dim();
    let h = t / steps as f64;
    let mut fine = SpectralField::zeros(grid, FieldKind::Vector);
    let mut coarse = SpectralField::zeros(grid, FieldKind::Vector);
    let simpson = |i: usize, n: usize| -> f64 {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    for i in 0..=steps {
        let s = i as f64 * h;
        let term = advect(&heat_propagate(f, s), &heat_propagate(g, s));
        let wf = -h / 3.0 * simpson(i, steps);
        let wc = if i % 2 == 0 { -2.0 * h / 3.0 * simpson(i / 2, steps / 2) } else { 0.0 };
        for flat in 0..grid.len() {
            let xi = grid.frequency(flat);
            let p = leray_matrix(&xi, dim);
            let decay = (-(t - s) * xi.norm_sq()).exp();
            let c = term.coefficient(flat);
            let pc: Vec3c = std::array::from_fn(|r| (0..dim).map(|k| c[k] * p[r][k]).sum::<Complex64>() * decay);
            for r in 0..dim {
                fine.component_mut(r)[flat] += pc[r] * wf;
                if wc != 0.0 {
                    coarse.component_mut(r)[flat] += pc[r] * wc;
                }
            }
        }
    }
    let scale = fine.coefficient_energy().sqrt();
    let diff = fine.combine(Complex64::new(1.0, 0.0), &coarse, Complex64::new(-1.0, 0.0))?;
    let error_estimate = if scale > 0.0 { diff.coefficient_energy().sqrt() / 15.0 / scale } else { 0.0 };
    Ok(DuhamelResult { field: fine, error_estimate })
}

/// Picard iterate `u_n(t)` from `u_0 = 0`: `n = 1` is `e^{tΔ}u0`, `n = 2`
/// adds `D(u0, u0; t)`.
pub fn picard_iterate(u0: &SpectralField, n: usize, t: f64, steps: usize) -> Result<SpectralField> {
    match n {
        0 => Ok(SpectralField::zeros(*u0.grid(), u0.kind())),
        1 => {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidArgument(format!("t = {t}")));
            }
            Ok(heat_propagate(u0, t))
        }
        2 => {
            let d = duhamel_bilinear(u0, u0, t, steps)?;
            heat_propagate(u0, t).combine(Complex64::new(1.0, 0.0), &d.field, Complex64::new(1.0, 0.0))
        }
        _ => Err(Error::Unsupported(format!("Picard iterate n = {n}; only n <= 2"))),
    }
}

/// `(j, k, ‖B_m(Δ_j f, Δ_k g)‖₂²)` over the grid's dyadic range.
///
/// For `m = ν3''` only `|j - k| ≤ 2` can be nonzero: on `supp χ3`,
/// `|ξ-η|/|η| ∈ [4/5, 6/5]`.
pub fn dyadic_pair_energy(m: &Symbol, f: &SpectralField, g: &SpectralField) -> Result<Vec<(i32, i32, f64)>> {
    f.check_compatible(g)?;
    let bank = DyadicBank::for_grid(f.grid());
    let fj: Vec<(i32, SpectralField)> = bank.indices().map(|j| (j, bank.block(f, j))).collect();
    let gk: Vec<(i32, SpectralField)> = bank.indices().map(|k| (k, bank.block(g, k))).collect();
    let volume = f.grid().box_volume();
    let mut out = Vec::with_capacity(fj.len() * gk.len());
    for (j, a) in &fj {
        for (k, b) in &gk {
            let e = if a.is_zero() || b.is_zero() { 0.0 } else { apply_symbol(m, a, b)?.coefficient_energy() * volume };
            out.push((*j, *k, e));
        }
    }
    Ok(out)
}

/// Vector field given by finitely many Fourier-series coefficients on the
/// lattice `κℤ^d` (a torus of period `2π/κ`), for data too high in
/// frequency to hold on a dense grid.
#[derive(Debug, Clone, Default)]
pub struct SparseField {
    pub kappa: f64,
    pub dim: usize,
    pub coeffs: HashMap<[i64; 3], Vec3c>,
}

impl SparseField {
    pub fn frequency(&self, k: &[i64; 3]) -> Frequency {
        Frequency(k.map(|v| v as f64 * self.kappa))
    }
}

/// `T1` coefficients at the given output wavenumbers, by the same pair sum
/// as [`t1_apply`].
pub fn t1_sparse(f: &SparseField, g: &SparseField, outputs: &[[i64; 3]]) -> Result<Vec<Vec3c>> {
    if f.kappa != g.kappa || f.dim != g.dim {
        return Err(Error::GridMismatch("sparse fields on different lattices".into()));
    }
    let mut eta_keys: Vec<&[i64; 3]> = f.coeffs.keys().collect();
    eta_keys.sort();
    Ok(outputs
        .iter()
        .map(|kx| {
            let xi = f.frequency(kx);
            let e_xi = (-xi.norm_sq()).exp();
            let mut acc = [ZERO; 3];
            for ke in &eta_keys {
                let kz = [kx[0] - ke[0], kx[1] - ke[1], kx[2] - ke[2]];
                let Some(cg) = g.coeffs.get(&kz) else { continue };
                let (eta, zeta) = (f.frequency(ke), f.frequency(&kz));
                let a = xi.norm_sq() - eta.norm_sq() - zeta.norm_sq();
                let w = heat_weight(a, e_xi, (-eta.norm_sq()).exp(), (-zeta.norm_sq()).exp());
                let t = t1_pair_term(w, &f.coeffs[*ke], &zeta, cg);
                for r in 0..3 {
                    acc[r] += t[r];
                }
            }
            project_scaled(&xi, f.dim, &acc)
        })
        .collect())
}
