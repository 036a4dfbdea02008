//! Besov norms, heat-semigroup characterizations of `Ḃ^{-1}`, Carleson-type
//! BMO and `∇BMO` norms, and the block heat-decay check.
//!
//! Suprema over balls are sampled on a coarse lattice of centers and dyadic
//! radii, and ball averages divide by the discrete ball volume, so all of
//! these are norm-equivalent surrogates rather than exact values.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::DyadicBank;
use crate::spectral::{heat_propagate, lp_norm, norm_of_magnitude, GridSpec, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub j_min: i32,
    pub j_max: i32,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64, j_min: i32, j_max: i32) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) {
            return Err(Error::InvalidArgument(format!("need p, q >= 1, got p={p}, q={q}")));
        }
        if j_min > j_max {
            return Err(Error::InvalidArgument(format!("empty range [{j_min}, {j_max}]")));
        }
        Ok(Self { s, p, q, j_min, j_max })
    }

    /// Parameters with the dyadic range resolved by `grid`.
    pub fn for_grid(grid: &GridSpec, s: f64, p: f64, q: f64) -> Result<Self> {
        let bank = DyadicBank::for_grid(grid);
        Self::new(s, p, q, bank.j_min, bank.j_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    /// `(j, 2^{js}‖Δ_j f‖_p)`.
    pub per_block: Vec<(i32, f64)>,
    /// `‖f - Σ_j Δ_j f‖_p`: content the dyadic range does not see (the mean).
    pub truncation_tail: f64,
}

/// `ℓ^q` aggregation.
pub fn lq_aggregate(values: impl IntoIterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else {
        values.into_iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

pub fn besov_norm(f: &SpectralField, params: &BesovParams) -> NormReport {
    besov_norm_with(f, params, &DyadicBank::for_grid(f.grid()))
}

pub fn besov_norm_with(f: &SpectralField, params: &BesovParams, bank: &DyadicBank) -> NormReport {
    let per_block: Vec<(i32, f64)> = (params.j_min..=params.j_max)
        .map(|j| (j, 2f64.powf(j as f64 * params.s) * lp_norm(&bank.block(f, j), params.p)))
        .collect();
    let value = lq_aggregate(per_block.iter().map(|b| b.1), params.q);
    let rest = f.map_multiplier(|xi| {
        let r = xi.norm();
        if r == 0.0 {
            return 1.0;
        }
        1.0 - (params.j_min..=params.j_max).map(|j| bank.block_weight(j, r)).sum::<f64>()
    });
    NormReport { value, per_block, truncation_tail: lp_norm(&rest, params.p) }
}

/// Log-spaced time nodes for heat integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatQuadrature {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl HeatQuadrature {
    /// 64 points on `[2^{-2(j_max+1)}, 2^{-2(j_min-1)}]`.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let bank = DyadicBank::for_grid(grid);
        Self {
            t_min: 2f64.powi(-2 * (bank.j_max + 1)),
            t_max: 2f64.powi(-2 * (bank.j_min - 1)),
            points: 64,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        (0..self.points)
            .map(|i| (a + (b - a) * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }
}

fn sup_heat(f: &SpectralField, t: f64) -> f64 {
    lp_norm(&heat_propagate(f, t), f64::INFINITY)
}

/// `(∫₀^∞ ‖e^{tΔ}f‖_∞² dt)^{1/2}` by trapezoid in `ln t`, with the pieces
/// below `t_min` and above `t_max` closed by one-term estimates.
pub fn heat_b_minus1_inf2(f: &SpectralField, quad: &HeatQuadrature) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let nodes = quad.nodes();
    let values: Vec<f64> = nodes.iter().map(|&t| sup_heat(f, t).powi(2)).collect();
    let mut body = 0.0;
    for i in 1..nodes.len() {
        let dl = (nodes[i] / nodes[i - 1]).ln();
        body += 0.5 * dl * (values[i] * nodes[i] + values[i - 1] * nodes[i - 1]);
    }
    let head = 0.5 * quad.t_min * (sup_heat(f, 0.0).powi(2) + values[0]);
    let kappa = f.grid().freq_step();
    // Beyond t_max every mode decays at least like e^{-2κ²t}.
    let tail = values[values.len() - 1] / (2.0 * kappa * kappa);
    let total = body + head + tail;
    if head + tail > 0.01 * total {
        warn!(
            "heat integral boundary pieces are {:.2}% of the total",
            100.0 * (head + tail) / total
        );
    }
    total.sqrt()
}

/// `sup_t √t‖e^{tΔ}f‖_∞`: grid search in `ln t`, then golden-section refinement.
pub fn b_minus1_inf_inf_heat(f: &SpectralField) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let quad = HeatQuadrature::for_grid(f.grid());
    let g = |ln_t: f64| {
        let t = ln_t.exp();
        t.sqrt() * sup_heat(f, t)
    };
    let nodes: Vec<f64> = quad.nodes().iter().map(|t| t.ln()).collect();
    let values: Vec<f64> = nodes.iter().map(|&l| g(l)).collect();
    let best = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let lo = nodes[best.saturating_sub(1)];
    let hi = nodes[(best + 1).min(nodes.len() - 1)];
    let refined = golden_max(g, lo, hi, 60);
    refined.max(values[best])
}

fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..iterations {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    gc.max(gd)
}

/// Centers of the default `4^d` sampling lattice.
pub fn default_centers(grid: &GridSpec) -> Vec<usize> {
    let n = grid.points_per_axis() as i64;
    let step = n / 4;
    let mut out = Vec::new();
    let count = 4usize.pow(grid.dim() as u32);
    for m in 0..count {
        let mut idx = [0i64; 3];
        let mut rest = m;
        for slot in idx.iter_mut().take(grid.dim()) {
            *slot = (rest % 4) as i64 * step;
            rest /= 4;
        }
        out.push(grid.wrap_sample(&idx));
    }
    out
}

/// Dyadic exponents `J` with `h < 2^J ≤ L/4`.
pub fn default_radius_exponents(grid: &GridSpec) -> Vec<i32> {
    let h = grid.cell_size();
    let top = grid.period() / 4.0;
    let mut j = top.log2().floor() as i32;
    let mut out = Vec::new();
    while 2f64.powi(j) > h {
        if 2f64.powi(j) <= top {
            out.push(j);
        }
        j -= 1;
    }
    out.reverse();
    out
}

/// Sample-index offsets of the periodic ball of radius `r`.
fn ball_offsets(grid: &GridSpec, r: f64) -> Vec<[i64; 3]> {
    let h = grid.cell_size();
    let m = (r / h).floor() as i64;
    let mut out = Vec::new();
    let range = |active: bool| if active { -m..=m } else { 0..=0 };
    for a in range(true) {
        for b in range(true) {
            for c in range(grid.dim() == 3) {
                let d2 = ((a * a + b * b + c * c) as f64) * h * h;
                if d2 <= r * r {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Ball averages of `density` (per-sample values) around each center.
fn ball_averages(grid: &GridSpec, density: &[f64], centers: &[usize], offsets: &[[i64; 3]]) -> Vec<f64> {
    centers
        .iter()
        .map(|&c| {
            let base = grid.sample_index(c);
            let sum: f64 = offsets
                .iter()
                .map(|o| {
                    let idx = [base[0] as i64 + o[0], base[1] as i64 + o[1], base[2] as i64 + o[2]];
                    density[grid.wrap_sample(&idx)]
                })
                .sum();
            sum / offsets.len() as f64
        })
        .collect()
}

fn squared_magnitude(f: &SpectralField) -> Vec<f64> {
    f.physical_magnitude().into_iter().map(|v| v * v).collect()
}

/// Number of time nodes per radius in the Carleson integral.
const CARLESON_TIME_NODES: usize = 32;

/// `sup_{x,R} (R^{-2} · avg_{B(x,R)} ∫₀^{R²} |e^{tΔ}f|² dt)^{1/2}`.
///
/// The ball average uses the discrete ball volume; `R^{-2}` then plays the
/// role of the `R^{-d}` normalization of the continuum average of
/// `∫∫ dy dt` over `B(x,R) × [0, R²]`.
pub fn grad_bmo_carleson(f: &SpectralField, centers: &[usize], radius_exponents: &[i32]) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let grid = *f.grid();
    let base = squared_magnitude(f);
    let mut best = 0.0f64;
    for &jr in radius_exponents {
        let r = 2f64.powi(jr);
        let offsets = ball_offsets(&grid, r);
        let t_min = (grid.cell_size() / 4.0).powi(2).min(r * r / 16.0);
        let t_max = r * r;
        let (a, b) = (t_min.ln(), t_max.ln());
        let nodes: Vec<f64> = (0..CARLESON_TIME_NODES)
            .map(|i| (a + (b - a) * i as f64 / (CARLESON_TIME_NODES - 1) as f64).exp())
            .collect();
        let averages: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&t| ball_averages(&grid, &squared_magnitude(&heat_propagate(f, t)), centers, &offsets))
            .collect();
        let at_zero = ball_averages(&grid, &base, centers, &offsets);
        for ci in 0..centers.len() {
            let mut integral = 0.5 * t_min * (at_zero[ci] + averages[0][ci]);
            for i in 1..nodes.len() {
                integral += 0.5 * (nodes[i] - nodes[i - 1]) * (averages[i][ci] + averages[i - 1][ci]);
            }
            best = best.max(integral / (r * r));
        }
    }
    best.sqrt()
}

/// `sup_{J,x} (avg_{B(x,2^J)} Σ_{j ≥ -J} |Δ_j f|²)^{1/2}`.
pub fn bmo_carleson_norm(f: &SpectralField, centers: &[usize], radius_exponents: &[i32]) -> f64 {
    let grid = *f.grid();
    let bank = DyadicBank::for_grid(&grid);
    let blocks: Vec<(i32, Vec<f64>)> = bank.indices().map(|j| (j, squared_magnitude(&bank.block(f, j)))).collect();
    let mut best = 0.0f64;
    for &jr in radius_exponents {
        let mut density = vec![0.0; grid.len()];
        for (j, sq) in &blocks {
            if *j >= -jr {
                density.iter_mut().zip(sq).for_each(|(d, s)| *d += s);
            }
        }
        let offsets = ball_offsets(&grid, 2f64.powi(jr));
        for avg in ball_averages(&grid, &density, centers, &offsets) {
            best = best.max(avg);
        }
    }
    best.sqrt()
}

/// `‖e^{tΔ}Δ_j f‖_∞ / ‖Δ_j f‖_∞`.
pub fn chemin_decay_check(f: &SpectralField, j: i32, t: f64) -> Result<f64> {
    let bank = DyadicBank::for_grid(f.grid());
    let block = bank.block(f, j);
    let denom = lp_norm(&block, f64::INFINITY);
    if denom == 0.0 {
        return Err(Error::InvalidArgument(format!("Δ_{j} f vanishes")));
    }
    Ok(sup_heat(&block, t) / denom)
}

/// Annulus lower-edge decay `e^{-(3/4)² 4^j t}`.
pub fn chemin_bound(j: i32, t: f64) -> f64 {
    (-0.5625 * 4f64.powi(j) * t).exp()
}

/// The norms entering the `Ḃ^{-1}_{∞,2} ⊂ ∇BMO ⊂ Ḃ^{-1}_{∞,∞}` chain for one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub b_inf_inf_heat: f64,
    pub grad_bmo: f64,
    pub b_inf2_heat: f64,
    pub besov_inf_inf: f64,
    pub besov_inf_2: f64,
}

pub fn embedding_row(f: &SpectralField) -> Result<EmbeddingRow> {
    let grid = *f.grid();
    let inf = besov_norm(f, &BesovParams::for_grid(&grid, -1.0, f64::INFINITY, f64::INFINITY)?).value;
    let two = besov_norm(f, &BesovParams::for_grid(&grid, -1.0, f64::INFINITY, 2.0)?).value;
    Ok(EmbeddingRow {
        b_inf_inf_heat: b_minus1_inf_inf_heat(f),
        grad_bmo: grad_bmo_carleson(f, &default_centers(&grid), &default_radius_exponents(&grid)),
        b_inf2_heat: heat_b_minus1_inf2(f, &HeatQuadrature::for_grid(&grid)),
        besov_inf_inf: inf,
        besov_inf_2: two,
    })
}

/// Smallest `C, C'` with `b_inf_inf ≤ C·grad_bmo ≤ C'·b_inf2` on every row.
pub fn embedding_constants(rows: &[EmbeddingRow]) -> (f64, f64) {
    let c = rows
        .iter()
        .filter(|r| r.grad_bmo > 0.0)
        .map(|r| r.b_inf_inf_heat / r.grad_bmo)
        .fold(0.0, f64::max);
    let c_prime = rows
        .iter()
        .filter(|r| r.b_inf2_heat > 0.0)
        .map(|r| c * r.grad_bmo / r.b_inf2_heat)
        .fold(0.0, f64::max);
    (c, c_prime)
}

/// `‖f‖_p` from precomputed magnitudes (re-exported for ensemble sweeps).
pub fn magnitude_norm(magnitude: &[f64], grid: &GridSpec, p: f64) -> f64 {
    norm_of_magnitude(magnitude, grid, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, FieldKind};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn real_mode(grid: GridSpec, k: [i64; 3], a: f64) -> SpectralField {
        let mut f = SpectralField::zeros(grid, FieldKind::Scalar);
        let neg = [-k[0], -k[1], -k[2]];
        f.component_mut(0)[grid.flat_index(&k).unwrap()] = Complex64::new(a / 2.0, 0.0);
        f.component_mut(0)[grid.flat_index(&neg).unwrap()] = Complex64::new(a / 2.0, 0.0);
        f
    }

    #[test]
    fn single_block_besov() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        // |ξ| = 12 = 1.5·2^3: only Δ_3 sees it, with weight 1.
        let f = real_mode(g, [12, 0, 0], 1.0);
        for q in [1.0, 2.0, f64::INFINITY] {
            let rep = besov_norm(&f, &BesovParams::for_grid(&g, -1.0, f64::INFINITY, q).unwrap());
            assert!((rep.value - 0.125).abs() < 1e-12, "q={q}: {}", rep.value);
            assert!(rep.truncation_tail < 1e-14);
        }
    }

    #[test]
    fn two_blocks_besov() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let a = real_mode(g, [3, 0, 0], 0.7);
        let b = real_mode(g, [0, 12, 0], 2.0);
        let f = a.combine(Complex64::new(1.0, 0.0), &b, Complex64::new(1.0, 0.0)).unwrap();
        let q = 2.0;
        let rep = besov_norm(&f, &BesovParams::for_grid(&g, -1.0, f64::INFINITY, q).unwrap());
        let expected = ((0.7f64 / 2.0).powi(2) + (2.0f64 / 8.0).powi(2)).sqrt();
        assert!((rep.value - expected).abs() < 1e-12);
    }

    #[test]
    fn heat_sup_of_single_mode() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let f = real_mode(g, [5, 0, 0], 1.3);
        let exact = 1.3 / (5.0 * (2.0 * std::f64::consts::E).sqrt());
        assert!((b_minus1_inf_inf_heat(&f) - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn zero_fields() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let z = SpectralField::zeros(g, FieldKind::Scalar);
        assert_eq!(heat_b_minus1_inf2(&z, &HeatQuadrature::for_grid(&g)), 0.0);
        assert_eq!(b_minus1_inf_inf_heat(&z), 0.0);
        assert_eq!(grad_bmo_carleson(&z, &default_centers(&g), &default_radius_exponents(&g)), 0.0);
        assert_eq!(bmo_carleson_norm(&z, &default_centers(&g), &default_radius_exponents(&g)), 0.0);
    }

    #[test]
    fn constant_field_has_zero_bmo() {
        let g = make_grid(2, 32, 2.0 * PI).unwrap();
        let mut f = SpectralField::zeros(g, FieldKind::Scalar);
        f.component_mut(0)[0] = Complex64::new(3.0, 0.0);
        assert_eq!(bmo_carleson_norm(&f, &default_centers(&g), &default_radius_exponents(&g)), 0.0);
    }

    #[test]
    fn chemin_single_mode() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        let f = real_mode(g, [4, 0, 0], 1.0);
        assert!((chemin_decay_check(&f, 2, 0.0).unwrap() - 1.0).abs() < 1e-12);
        // ψ(1) = 1/2 at |ξ| = 2^j, so the block is a scaled copy of the mode.
        let r = chemin_decay_check(&f, 2, 1.0).unwrap();
        assert!((r - (-16.0f64).exp()).abs() < 1e-12 * (-16.0f64).exp() + 1e-300);
        assert!(chemin_decay_check(&f, 5, 1.0).is_err());
    }

    #[test]
    fn radii_and_centers() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        assert_eq!(default_centers(&g).len(), 16);
        let js = default_radius_exponents(&g);
        assert!(js.iter().all(|&j| 2f64.powi(j) > g.cell_size() && 2f64.powi(j) <= g.period() / 4.0));
        assert_eq!(js, vec![-3, -2, -1, 0]);
    }
}
