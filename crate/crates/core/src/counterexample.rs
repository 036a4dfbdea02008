//! Grid-free norm-inflation data for `T1`.
//!
//! The data are
//!
//! ```text
//! f̂^N(ξ) = Σ_{k=10}^N 2^k α_k [φ(ξ - 2^k e₁) - φ(ξ + 2^k e₁)] (ξ/|ξ| × e₂)
//! ```
//!
//! with `φ` a radial bump equal to 1 on `B(0,2)` and 0 outside `B(0,3)`.
//! Near `ξ₀ = (0, 1/2, 1/2)` only the `(k,+)` bump meets the `(k,-)` bump, so
//! with `η = σ2^k e₁ + u` the transform of `T1(f^N, f^N)` reduces to
//!
//! ```text
//! T̂1(ζ) = -e^{-|ζ|²} Σ_k α_k² ∫ φ(u) φ(ζ-u) Σ_σ B_{k,σ}(u, ζ) du
//! B_{k,σ} = P(ζ) 2^{2k} τ(a) [d(η)·ζ] d(ζ-η),   d(v) = (v × e₂)/|v|
//! a = |ζ|² - |u|² - |ζ-u|² - 2^{2k+1} - 2σ2^k(2u₁ - ζ₁)
//! ```
//!
//! which is evaluated in these local coordinates so that `k` up to 60 stays
//! accurate in double precision.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::Psi;
use crate::ns_bilinear::duhamel_time_factor;
use crate::smooth::smoothstep;
use crate::spectral::{leray_matrix, Frequency};

/// Lowest dyadic index carrying a bump.
pub const K_MIN: u32 = 10;
/// Largest supported top index.
pub const K_MAX: u32 = 60;

/// `φ(r) = S(3 - r)`: 1 for `r ≤ 2`, 0 for `r ≥ 3`.
pub fn phi_profile(r: f64) -> f64 {
    smoothstep(3.0 - r)
}

fn phi(v: &Frequency) -> f64 {
    phi_profile(v.norm())
}

/// `ξ₀ = (0, 1/2, 1/2)`.
pub fn xi0() -> Frequency {
    Frequency([0.0, 0.5, 0.5])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    /// `α_k = k^{-1/2}`: in every `ℓ^q`, `q > 2`, but not in `ℓ²`.
    LqNotL2,
    /// `α_k = k^{-1}`: square summable.
    L2Control,
    /// `α_k = δ_{k,k₀}`.
    Single(u32),
    /// `α_k = values[k - 10]`, zero past the end.
    Custom(Vec<f64>),
}

pub fn alpha_sequence(kind: &AlphaKind, k: u32) -> f64 {
    assert!(k >= K_MIN, "α_k is defined for k >= {K_MIN}");
    match kind {
        AlphaKind::LqNotL2 => (k as f64).powf(-0.5),
        AlphaKind::L2Control => 1.0 / k as f64,
        AlphaKind::Single(k0) => {
            if k == *k0 {
                1.0
            } else {
                0.0
            }
        }
        AlphaKind::Custom(v) => v.get((k - K_MIN) as usize).copied().unwrap_or(0.0),
    }
}

/// `Σ_{k=10}^N α_k²`.
pub fn alpha_square_sum(kind: &AlphaKind, n_top: u32) -> f64 {
    (K_MIN..=n_top).map(|k| alpha_sequence(kind, k).powi(2)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub n_top: u32,
    pub alpha: AlphaKind,
}

impl BumpSpec {
    pub fn new(n_top: u32, alpha: AlphaKind) -> Result<Self> {
        if !(K_MIN..=K_MAX).contains(&n_top) {
            return Err(Error::InvalidArgument(format!("N = {n_top} outside [{K_MIN}, {K_MAX}]")));
        }
        if let AlphaKind::Custom(v) = &alpha {
            if v.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(Error::InvalidArgument("α_k must be finite and nonnegative".into()));
            }
        }
        Ok(Self { n_top, alpha })
    }

    pub fn alpha(&self, k: u32) -> f64 {
        alpha_sequence(&self.alpha, k)
    }
}

/// `(v × e₂)/|v| = (-v₃, 0, v₁)/|v|`.
fn direction(v: &Frequency) -> [f64; 3] {
    let n = v.norm();
    [-v.0[2] / n, 0.0, v.0[0] / n]
}

/// `f̂^N(ξ)` (real, even, divergence-free).
#[allow(non_snake_case)]
pub fn fN_fourier(spec: &BumpSpec, xi: &Frequency) -> [f64; 3] {
    for k in K_MIN..=spec.n_top {
        let c = 2f64.powi(k as i32);
        for sign in [1.0, -1.0] {
            let local = Frequency([xi.0[0] - sign * c, xi.0[1], xi.0[2]]);
            let w = phi(&local);
            if w > 0.0 {
                let amp = sign * c * spec.alpha(k) * w;
                return direction(xi).map(|d| d * amp);
            }
        }
    }
    [0.0; 3]
}

/// Midpoint tensor quadrature over `[-half_width, half_width]³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub nodes: usize,
    pub half_width: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { nodes: 48, half_width: 3.2 }
    }
}

impl QuadSpec {
    pub fn with_nodes(nodes: usize) -> Self {
        Self { nodes, ..Self::default() }
    }

    fn points(&self) -> Vec<f64> {
        let h = 2.0 * self.half_width / self.nodes as f64;
        (0..self.nodes).map(|i| -self.half_width + (i as f64 + 0.5) * h).collect()
    }

    fn cell(&self) -> f64 {
        (2.0 * self.half_width / self.nodes as f64).powi(3)
    }
}

/// `2^{2k} τ(a)` and the two direction vectors at `η = σ2^k e₁ + u`.
fn local_terms(k: u32, sigma: f64, u: &Frequency, zeta: &Frequency) -> (f64, [f64; 3], [f64; 3]) {
    let c = 2f64.powi(k as i32);
    let zu = *zeta - *u;
    let base = zeta.norm_sq() - u.norm_sq() - zu.norm_sq();
    let a = base - 2.0 * c * c - 2.0 * sigma * c * (2.0 * u.0[0] - zeta.0[0]);
    let eta = Frequency([sigma * c + u.0[0], u.0[1], u.0[2]]);
    let rest = Frequency([zeta.0[0] - sigma * c - u.0[0], zu.0[1], zu.0[2]]);
    (c * c * duhamel_time_factor(a), direction(&eta), direction(&rest))
}

/// `B_{k,σ}(u, ζ) = P(ζ) 2^{2k} τ(a) [d(η)·ζ] d(ζ-η)`.
pub fn bracket(k: u32, sigma: f64, u: &Frequency, zeta: &Frequency) -> [f64; 3] {
    let (scaled_tau, d_eta, d_rest) = local_terms(k, sigma, u, zeta);
    let dot = d_eta[0] * zeta.0[0] + d_eta[1] * zeta.0[1] + d_eta[2] * zeta.0[2];
    let v = d_rest.map(|x| x * scaled_tau * dot);
    let p = leray_matrix(zeta, 3);
    std::array::from_fn(|i| p[i][0] * v[0] + p[i][1] * v[1] + p[i][2] * v[2])
}

/// `2^{2k} τ(a) (d(η)·e₃)(d(ζ-η)·e₃)`.
pub fn scalar_ratio(k: u32, sigma: f64, u: &Frequency, zeta: &Frequency) -> f64 {
    let (scaled_tau, d_eta, d_rest) = local_terms(k, sigma, u, zeta);
    scaled_tau * d_eta[2] * d_rest[2]
}

/// `I_k(ζ) = ∫ φ(u)φ(ζ-u) Σ_σ B_{k,σ}(u, ζ) du` for `k = 10..=k_top`.
pub fn per_k_integrals(zeta: &Frequency, k_top: u32, quad: &QuadSpec) -> Vec<[f64; 3]> {
    let pts = quad.points();
    let ks: Vec<u32> = (K_MIN..=k_top).collect();
    let planes: Vec<Vec<[f64; 3]>> = pts
        .par_iter()
        .map(|&x| {
            let mut acc = vec![[0.0; 3]; ks.len()];
            for &y in &pts {
                for &z in &pts {
                    let u = Frequency([x, y, z]);
                    let w = phi(&u) * phi(&(*zeta - u));
                    if w == 0.0 {
                        continue;
                    }
                    for (slot, &k) in acc.iter_mut().zip(&ks) {
                        let p = bracket(k, 1.0, &u, zeta);
                        let m = bracket(k, -1.0, &u, zeta);
                        for i in 0..3 {
                            slot[i] += w * (p[i] + m[i]);
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let cell = quad.cell();
    let mut out = vec![[0.0; 3]; ks.len()];
    for plane in planes {
        for (o, v) in out.iter_mut().zip(plane) {
            for i in 0..3 {
                o[i] += v[i] * cell;
            }
        }
    }
    out
}

/// `T̂1(f^N, f^N)(ζ)` from precomputed `I_k`.
pub fn t1_hat_from_integrals(spec: &BumpSpec, zeta: &Frequency, integrals: &[[f64; 3]]) -> [f64; 3] {
    let env = (-zeta.norm_sq()).exp();
    let mut out = [0.0; 3];
    for (k, ik) in (K_MIN..=spec.n_top).zip(integrals) {
        let a2 = spec.alpha(k).powi(2);
        for i in 0..3 {
            out[i] -= env * a2 * ik[i];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Sample {
    pub value: [f64; 3],
    /// Relative change of the third component against a 32-node rule.
    pub refinement_change: f64,
    /// Set when `refinement_change ≥ 1%`.
    pub flagged: bool,
}

fn check_zeta(zeta: &Frequency) -> Result<()> {
    if (*zeta - xi0()).norm() >= 0.25 {
        return Err(Error::InvalidArgument(format!("ζ = {:?} is not within 1/4 of ξ₀", zeta.0)));
    }
    Ok(())
}

/// `T̂1(f^N, f^N)(ζ)` with a refinement check against a 32-node rule.
pub fn t1_hat_at(spec: &BumpSpec, zeta: &Frequency, quad: &QuadSpec) -> Result<T1Sample> {
    check_zeta(zeta)?;
    let value = t1_hat_from_integrals(spec, zeta, &per_k_integrals(zeta, spec.n_top, quad));
    let coarse = t1_hat_from_integrals(spec, zeta, &per_k_integrals(zeta, spec.n_top, &QuadSpec::with_nodes(32)));
    let refinement_change = relative_change(value[2], coarse[2]);
    Ok(T1Sample { value, refinement_change, flagged: refinement_change >= 0.01 })
}

fn relative_change(fine: f64, coarse: f64) -> f64 {
    if fine == 0.0 {
        if coarse == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((fine - coarse) / fine).abs()
    }
}

/// Lower and upper estimates of `‖f^N‖_{Ḃ^{-1}_{∞,q}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovEstimate {
    pub lower: f64,
    pub upper: f64,
    /// `(j, lower_j, upper_j)` for the weighted block sup norms.
    pub per_block: Vec<(i32, f64, f64)>,
}

/// `∫_{ℝ³} φ(|u|) du` by composite Simpson in the radius.
pub fn phi_mass() -> f64 {
    let n = 4000;
    let h = 3.0 / n as f64;
    let f = |r: f64| phi_profile(r) * r * r;
    let mut s = f(0.0) + f(3.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    4.0 * PI * s * h / 3.0
}

/// Min and max of `ψ(r/2^j)` over the radii `[2^k - 3, 2^k + 3]` of bump `k`.
fn psi_range(psi: &Psi, j: i32, k: u32) -> (f64, f64) {
    let c = 2f64.powi(k as i32);
    let scale = 2f64.powi(j);
    (0..=256)
        .map(|i| psi.eval((c - 3.0 + 6.0 * i as f64 / 256.0) / scale))
        .fold((f64::INFINITY, 0.0), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Per-block bounds for `2^{-j}‖Δ_j f^N‖_∞`.
///
/// Upper: `‖Δ_j f‖_∞ ≤ (2π)^{-3/2} ‖ψ_j f̂‖_{L¹}` with `|d| ≤ 1`. Lower: the
/// third component at `x = 0`, where every bump contributes with the same
/// sign and `ξ₁/|ξ| ≥ (2^k-3)/√((2^k-3)² + 9)` on the bump.
#[allow(non_snake_case)]
pub fn fN_besov_norm(spec: &BumpSpec, q: f64) -> Result<BesovEstimate> {
    if !(q > 2.0) {
        return Err(Error::InvalidArgument(format!("q = {q}; need q in (2, ∞]")));
    }
    let psi = Psi::default();
    let unit = (2.0 * PI).powf(-1.5) * 2.0 * phi_mass();
    let mut per_block = Vec::new();
    for j in (K_MIN as i32 - 1)..=(spec.n_top as i32) {
        let (mut lo, mut hi) = (0.0, 0.0);
        for k in [j, j + 1] {
            if k < K_MIN as i32 || k > spec.n_top as i32 {
                continue;
            }
            let k = k as u32;
            let weight = 2f64.powi(k as i32 - j) * spec.alpha(k) * unit;
            let (pmin, pmax) = psi_range(&psi, j, k);
            let c = 2f64.powi(k as i32) - 3.0;
            lo += weight * pmin * c / (c * c + 9.0).sqrt();
            hi += weight * pmax;
        }
        per_block.push((j, lo, hi));
    }
    let agg = |sel: fn(&(i32, f64, f64)) -> f64| crate::function_spaces::lq_aggregate(per_block.iter().map(sel), q);
    Ok(BesovEstimate { lower: agg(|b| b.1), upper: agg(|b| b.2), per_block })
}

/// Bound on `upper(N') - upper(N)` for `N' > N` when `α_k = k^{-1/2}`:
/// Minkowski plus `Σ_{k>N} k^{-q/2} ≤ N^{1-q/2}/(q/2 - 1)`.
pub fn sqrt_alpha_tail_bound(q: f64, n: u32) -> f64 {
    assert!(q > 2.0 && q.is_finite());
    let unit = (2.0 * PI).powf(-1.5) * 2.0 * phi_mass();
    let tail = (n as f64).powf(1.0 - q / 2.0) / (q / 2.0 - 1.0);
    // Each block takes bump j with weight ≤ 1 and bump j+1 with weight ≤ 2.
    3.0 * unit * tail.powf(1.0 / q)
}

/// Default `ζ` samples: `ξ₀` and four points at distance `0.9 ε`.
pub fn default_zeta_samples(eps: f64) -> Vec<Frequency> {
    let r = 0.9 * eps;
    let s = r / 3f64.sqrt();
    let x = xi0();
    vec![
        x,
        x + Frequency([r, 0.0, 0.0]),
        x + Frequency([0.0, -r, 0.0]),
        x + Frequency([0.0, 0.0, r]),
        x + Frequency([s, s, s]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationRow {
    pub n: u32,
    pub zeta_id: usize,
    pub value_third_component: f64,
    pub sum_alpha_sq: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflationReport {
    pub alpha: AlphaKind,
    pub zetas: Vec<[f64; 3]>,
    pub rows: Vec<InflationRow>,
    /// `(min, max)` of `ratio` over all rows.
    pub band: (f64, f64),
    /// Whether the value increases strictly in `N` for every `ζ`.
    pub strictly_increasing: bool,
    /// Largest relative change of the third component between 32 and the
    /// configured number of nodes.
    pub max_refinement_change: f64,
    /// Largest `|first component| / |third component|`.
    pub max_first_over_third: f64,
}

/// Third component of `T̂1(f^N, f^N)(ζ)` for every `N` and `ζ`.
pub fn inflation_experiment(n_list: &[u32], alpha: &AlphaKind, zetas: &[Frequency], quad: &QuadSpec) -> Result<InflationReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("N list must be nonempty and increasing".into()));
    }
    let n_max = *n_list.last().expect("nonempty");
    BumpSpec::new(n_max, alpha.clone())?;
    if n_list[0] < K_MIN {
        return Err(Error::InvalidArgument(format!("N must be >= {K_MIN}")));
    }
    let mut rows = Vec::new();
    let mut strictly_increasing = true;
    let mut max_refinement_change = 0.0f64;
    let mut max_first_over_third = 0.0f64;
    for (zi, zeta) in zetas.iter().enumerate() {
        check_zeta(zeta)?;
        let fine = per_k_integrals(zeta, n_max, quad);
        let coarse = per_k_integrals(zeta, n_max, &QuadSpec::with_nodes(32));
        let mut previous = f64::NEG_INFINITY;
        for &n in n_list {
            let spec = BumpSpec::new(n, alpha.clone())?;
            let v = t1_hat_from_integrals(&spec, zeta, &fine);
            let vc = t1_hat_from_integrals(&spec, zeta, &coarse);
            max_refinement_change = max_refinement_change.max(relative_change(v[2], vc[2]));
            max_first_over_third = max_first_over_third.max((v[0] / v[2]).abs());
            if v[2] <= previous {
                strictly_increasing = false;
            }
            previous = v[2];
            let sum = alpha_square_sum(alpha, n);
            rows.push(InflationRow { n, zeta_id: zi, value_third_component: v[2], sum_alpha_sq: sum, ratio: v[2] / sum });
        }
    }
    let band = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    Ok(InflationReport {
        alpha: alpha.clone(),
        zetas: zetas.iter().map(|z| z.0).collect(),
        rows,
        band,
        strictly_increasing,
        max_refinement_change,
        max_first_over_third,
    })
}
