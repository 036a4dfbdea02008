//! Bilinear Fourier multipliers (pseudo-products).
//!
//! `B_m(f,g)^(ξ) = ∫ m(ξ,η) f̂(η) ĝ(ξ-η) dη` is evaluated as a direct sum over
//! the frequency lattice. In coefficient form this reads
//! `c_B(ξ) = (2π)^{d/2} Σ_η m(ξ,η) c_f(η) c_g(ξ-η)`, so `B_1(f,g) = (2π)^{d/2} f·g`.
//!
//! Inputs must be band-limited to `|k_i| < n/4` so every product frequency
//! lies on the lattice without wrap-around.
//!
//! Contraction rules: a scalar symbol multiplies the broadcast product of the
//! inputs (scalar times vector, or componentwise for two vectors); a matrix
//! symbol is applied to that product.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_spaces::{bmo_carleson_norm, besov_norm, default_centers, default_radius_exponents, BesovParams};
use crate::spectral::{lp_norm, FieldKind, Frequency, GridSpec, SpectralField, ZERO};

pub type Vec3c = [Complex64; 3];
pub type Mat3c = [[Complex64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolValue {
    Scalar(Complex64),
    Matrix(Mat3c),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Scalar,
    Matrix,
}

type EvalFn = dyn Fn(&Frequency, &Frequency) -> SymbolValue + Send + Sync;

/// An evaluatable multiplier `m(ξ, η)` with metadata.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    kind: ValueKind,
    params: BTreeMap<String, f64>,
    cutoff: Option<f64>,
    eval: Arc<EvalFn>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl Symbol {
    /// Real scalar symbol.
    pub fn scalar<F>(name: impl Into<String>, m: F) -> Self
    where
        F: Fn(&Frequency, &Frequency) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, ValueKind::Scalar, move |xi, eta| SymbolValue::Scalar(Complex64::new(m(xi, eta), 0.0)))
    }

    pub fn complex<F>(name: impl Into<String>, m: F) -> Self
    where
        F: Fn(&Frequency, &Frequency) -> Complex64 + Send + Sync + 'static,
    {
        Self::new(name, ValueKind::Scalar, move |xi, eta| SymbolValue::Scalar(m(xi, eta)))
    }

    pub fn matrix<F>(name: impl Into<String>, m: F) -> Self
    where
        F: Fn(&Frequency, &Frequency) -> Mat3c + Send + Sync + 'static,
    {
        Self::new(name, ValueKind::Matrix, move |xi, eta| SymbolValue::Matrix(m(xi, eta)))
    }

    fn new<F>(name: impl Into<String>, kind: ValueKind, eval: F) -> Self
    where
        F: Fn(&Frequency, &Frequency) -> SymbolValue + Send + Sync + 'static,
    {
        Self { name: name.into(), kind, params: BTreeMap::new(), cutoff: None, eval: Arc::new(eval) }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    /// Treat the symbol as zero for `|ξ| > cutoff`.
    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.cutoff
    }

    pub fn eval(&self, xi: &Frequency, eta: &Frequency) -> SymbolValue {
        if let Some(c) = self.cutoff {
            if xi.norm_sq() > c * c {
                return self.zero_value();
            }
        }
        (self.eval)(xi, eta)
    }

    fn zero_value(&self) -> SymbolValue {
        match self.kind {
            ValueKind::Scalar => SymbolValue::Scalar(ZERO),
            ValueKind::Matrix => SymbolValue::Matrix([[ZERO; 3]; 3]),
        }
    }

    /// Scalar value, or `None` for matrix symbols.
    pub fn eval_scalar(&self, xi: &Frequency, eta: &Frequency) -> Option<Complex64> {
        match self.eval(xi, eta) {
            SymbolValue::Scalar(v) => Some(v),
            SymbolValue::Matrix(_) => None,
        }
    }

    /// Pointwise sum `m₁ + m₂`.
    pub fn plus(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(other, 1.0, "+")
    }

    /// Pointwise difference `m₁ - m₂`.
    pub fn minus(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(other, -1.0, "-")
    }

    fn combine(&self, other: &Symbol, sign: f64, op: &str) -> Result<Symbol> {
        if self.kind != other.kind {
            return Err(Error::InvalidArgument("cannot add scalar and matrix symbols".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        let mut out = Symbol::new(format!("({} {op} {})", self.name, other.name), self.kind, move |xi, eta| {
            match (a.eval(xi, eta), b.eval(xi, eta)) {
                (SymbolValue::Scalar(x), SymbolValue::Scalar(y)) => SymbolValue::Scalar(x + y * sign),
                (SymbolValue::Matrix(x), SymbolValue::Matrix(y)) => {
                    SymbolValue::Matrix(std::array::from_fn(|i| std::array::from_fn(|j| x[i][j] + y[i][j] * sign)))
                }
                _ => unreachable!("kinds checked above"),
            }
        });
        out.cutoff = match (self.cutoff, other.cutoff) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        Ok(out)
    }
}

/// `m ≡ c`.
pub fn constant_symbol(c: f64) -> Symbol {
    Symbol::scalar(format!("const({c})"), move |_, _| c).with_param("value", c)
}

/// `m(ξ,η) = e^{-|ξ|²-|η|²}`.
pub fn gaussian_symbol() -> Symbol {
    Symbol::scalar("gaussian", |xi, eta| (-xi.norm_sq() - eta.norm_sq()).exp())
}

/// Bilinear operators that can be probed by the boundedness harness.
pub trait BilinearOperator: Sync {
    fn label(&self) -> String;
    fn apply(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField>;
}

impl BilinearOperator for Symbol {
    fn label(&self) -> String {
        self.name.clone()
    }
    fn apply(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        apply_symbol(self, f, g)
    }
}

/// Flat indices of nonzero coefficients together with a membership mask.
pub(crate) fn support_mask(f: &SpectralField) -> (Vec<usize>, Vec<bool>) {
    let support = f.support();
    let mut mask = vec![false; f.grid().len()];
    for &i in &support {
        mask[i] = true;
    }
    (support, mask)
}

/// Lattice points that can receive contributions from `supp f + supp g`,
/// optionally restricted to `|ξ| ≤ cutoff`.
pub(crate) fn output_points(grid: &GridSpec, supp_f: &[usize], supp_g: &[usize], cutoff: Option<f64>) -> Vec<usize> {
    let extent = |supp: &[usize]| {
        let mut e = [0i64; 3];
        for &i in supp {
            let k = grid.wavenumber(i);
            for a in 0..3 {
                e[a] = e[a].max(k[a].abs());
            }
        }
        e
    };
    if supp_f.is_empty() || supp_g.is_empty() {
        return Vec::new();
    }
    let (ef, eg) = (extent(supp_f), extent(supp_g));
    let bound: [i64; 3] = std::array::from_fn(|a| ef[a] + eg[a]);
    (0..grid.len())
        .filter(|&i| {
            let k = grid.wavenumber(i);
            (0..3).all(|a| k[a].abs() <= bound[a])
                && cutoff.is_none_or(|c| grid.frequency(i).norm_sq() <= c * c)
        })
        .collect()
}

/// `out[ξ] = Σ_{η ∈ eta_support, ξ-η ∈ zeta_mask} term(ξ, η, ξ-η)` for each
/// output point, in parallel over outputs with a fixed summation order.
pub(crate) fn bilinear_sum<T>(
    grid: &GridSpec,
    eta_support: &[usize],
    zeta_mask: &[bool],
    out_points: &[usize],
    term: T,
) -> Vec<Vec3c>
where
    T: Fn(usize, usize, usize) -> Vec3c + Sync,
{
    let eta_k: Vec<[i64; 3]> = eta_support.iter().map(|&i| grid.wavenumber(i)).collect();
    out_points
        .par_iter()
        .map(|&xi| {
            let kx = grid.wavenumber(xi);
            let mut acc = [ZERO; 3];
            for (&eta, ke) in eta_support.iter().zip(&eta_k) {
                let kz = [kx[0] - ke[0], kx[1] - ke[1], kx[2] - ke[2]];
                let Some(zeta) = grid.flat_index(&kz) else { continue };
                if !zeta_mask[zeta] {
                    continue;
                }
                let t = term(xi, eta, zeta);
                acc[0] += t[0];
                acc[1] += t[1];
                acc[2] += t[2];
            }
            acc
        })
        .collect()
}

/// Output kind of the broadcast product of two inputs.
fn product_kind(f: FieldKind, g: FieldKind) -> FieldKind {
    if f == FieldKind::Scalar && g == FieldKind::Scalar {
        FieldKind::Scalar
    } else {
        FieldKind::Vector
    }
}

/// Broadcast product of two coefficient vectors.
#[inline]
fn broadcast(fk: FieldKind, a: &Vec3c, gk: FieldKind, b: &Vec3c) -> Vec3c {
    match (fk, gk) {
        (FieldKind::Scalar, FieldKind::Scalar) => [a[0] * b[0], ZERO, ZERO],
        (FieldKind::Scalar, FieldKind::Vector) => [a[0] * b[0], a[0] * b[1], a[0] * b[2]],
        (FieldKind::Vector, FieldKind::Scalar) => [a[0] * b[0], a[1] * b[0], a[2] * b[0]],
        (FieldKind::Vector, FieldKind::Vector) => [a[0] * b[0], a[1] * b[1], a[2] * b[2]],
    }
}

#[inline]
fn apply_value(v: &SymbolValue, p: &Vec3c) -> Vec3c {
    match v {
        SymbolValue::Scalar(s) => [s * p[0], s * p[1], s * p[2]],
        SymbolValue::Matrix(m) => std::array::from_fn(|i| m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2]),
    }
}

fn check_inputs(m_kind: ValueKind, f: &SpectralField, g: &SpectralField) -> Result<FieldKind> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid(), g.grid())));
    }
    f.require_half_nyquist("first input")?;
    g.require_half_nyquist("second input")?;
    let kind = product_kind(f.kind(), g.kind());
    if m_kind == ValueKind::Matrix && kind == FieldKind::Scalar {
        return Err(Error::InvalidArgument("matrix symbol needs a vector input".into()));
    }
    Ok(kind)
}

pub(crate) fn assemble(grid: GridSpec, kind: FieldKind, points: &[usize], values: Vec<Vec3c>) -> Result<SpectralField> {
    let mut out = SpectralField::zeros(grid, kind);
    for (&p, v) in points.iter().zip(values) {
        out.set_coefficient(p, v);
    }
    Ok(out)
}

/// `B_m(f, g)` by direct lattice convolution.
pub fn apply_symbol(m: &Symbol, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let kind = check_inputs(m.kind(), f, g)?;
    let grid = *f.grid();
    let (supp_f, _) = support_mask(f);
    let (supp_g, mask_g) = support_mask(g);
    let points = output_points(&grid, &supp_f, &supp_g, m.cutoff());
    let norm = (2.0 * PI).powf(grid.dim() as f64 / 2.0);
    let freqs: Vec<Frequency> = (0..grid.len()).map(|i| grid.frequency(i)).collect();
    let (fk, gk) = (f.kind(), g.kind());
    let values = bilinear_sum(&grid, &supp_f, &mask_g, &points, |xi, eta, zeta| {
        let v = m.eval(&freqs[xi], &freqs[eta]);
        let p = broadcast(fk, &f.coefficient(eta), gk, &g.coefficient(zeta));
        apply_value(&v, &p).map(|c| c * norm)
    });
    assemble(grid, kind, &points, values)
}

/// Largest `n^{2d}` accepted by [`kernel_of_symbol`].
pub const KERNEL_CAP: usize = 1 << 20;

/// Physical-space kernel of a scalar symbol on a grid.
#[derive(Debug, Clone)]
pub struct KernelEstimate {
    pub grid: GridSpec,
    /// `K(a, b)` on the sample lattice, `a` index major.
    pub kernel: Vec<Complex64>,
    /// `h^{2d} Σ |K|`.
    pub l1_norm: f64,
    /// Share of `Σ|K|` where some coordinate exceeds `3L/8` in magnitude.
    pub boundary_fraction: f64,
}

/// `K(a,b) = (2π)^{d/2} L^{-2d} Σ_{ξ,η} m(ξ,η) e^{i(ξ·a + η·b)}`, so that
/// `B_m(f,g)(x) = Σ_{y,z} h^{2d} K(x-z, z-y) f(y) g(z)`.
pub fn kernel_of_symbol(m: &Symbol, grid: &GridSpec) -> Result<KernelEstimate> {
    if m.kind() != ValueKind::Scalar {
        return Err(Error::Unsupported("kernels of matrix symbols".into()));
    }
    let n = grid.points_per_axis();
    let d = grid.dim();
    let size = grid.len() * grid.len();
    if size > KERNEL_CAP {
        return Err(Error::InvalidArgument(format!("kernel lattice n^(2d) = {size} exceeds {KERNEL_CAP}")));
    }
    let freqs: Vec<Frequency> = (0..grid.len()).map(|i| grid.frequency(i)).collect();
    let mut data: Vec<Complex64> = (0..size)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid.len(), idx % grid.len());
            m.eval_scalar(&freqs[i], &freqs[j]).expect("scalar symbol")
        })
        .collect();
    crate::fft::inverse(&mut data, n, 2 * d);
    let scale = (2.0 * PI).powf(d as f64 / 2.0) / grid.period().powi(2 * d as i32);
    data.iter_mut().for_each(|c| *c *= scale);
    let cell = grid.cell_volume().powi(2);
    let total: f64 = data.iter().map(|c| c.norm()).sum();
    let edge = 3 * n / 8;
    let outer = |i: usize| {
        let s = if i < n / 2 { i } else { n - i };
        s > edge
    };
    let boundary: f64 = data
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let (a, b) = (idx / grid.len(), idx % grid.len());
            let ia = grid.sample_index(a);
            let ib = grid.sample_index(b);
            (0..d).any(|ax| outer(ia[ax]) || outer(ib[ax]))
        })
        .map(|(_, c)| c.norm())
        .sum();
    let boundary_fraction = if total > 0.0 { boundary / total } else { 0.0 };
    if boundary_fraction > 0.01 {
        warn!(
            "kernel of {} keeps {:.2}% of its mass near the box boundary",
            m.name(),
            100.0 * boundary_fraction
        );
    }
    Ok(KernelEstimate { grid: *grid, kernel: data, l1_norm: total * cell, boundary_fraction })
}

/// `B(x) = Σ_{y,z} h^{2d} K(x-z, z-y) f(y) g(z)` by direct summation.
pub fn apply_via_kernel(k: &KernelEstimate, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let kind = check_inputs(ValueKind::Scalar, f, g)?;
    let grid = k.grid;
    if *f.grid() != grid {
        return Err(Error::GridMismatch("kernel and inputs live on different grids".into()));
    }
    let len = grid.len();
    let (pf, pg) = (f.to_physical(), g.to_physical());
    let comps = match kind {
        FieldKind::Scalar => 1,
        FieldKind::Vector => grid.dim(),
    };
    let pick = |phys: &Vec<Vec<Complex64>>, c: usize| if phys.len() == 1 { 0 } else { c };
    let cell = grid.cell_volume().powi(2);
    let mut out_phys = Vec::with_capacity(comps);
    for c in 0..comps {
        let (fc, gc) = (&pf[pick(&pf, c)], &pg[pick(&pg, c)]);
        let values: Vec<Complex64> = (0..len)
            .into_par_iter()
            .map(|x| {
                let sx = grid.sample_index(x);
                let mut acc = ZERO;
                for z in 0..len {
                    let sz = grid.sample_index(z);
                    let a = grid.wrap_sample(&std::array::from_fn(|ax| sx[ax] as i64 - sz[ax] as i64));
                    let row = &k.kernel[a * len..(a + 1) * len];
                    let mut inner = ZERO;
                    for y in 0..len {
                        let sy = grid.sample_index(y);
                        let b = grid.wrap_sample(&std::array::from_fn(|ax| sz[ax] as i64 - sy[ax] as i64));
                        inner += row[b] * fc[y];
                    }
                    acc += inner * gc[z];
                }
                acc * cell
            })
            .collect();
        out_phys.push(values);
    }
    SpectralField::from_physical(grid, kind, out_phys)
}

/// Outcome of the Coifman-Meyer condition sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CmStatus {
    Ok,
    /// A derivative came out infinite or NaN at this sample index.
    NonFinite { sample: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmReport {
    /// `sup |∂_ξ^α ∂_η^β m|·(|ξ|+|η|)^{|α|+|β|}` over samples and orders.
    pub estimate: f64,
    pub worst_sample: Option<usize>,
    pub worst_order: usize,
    pub status: CmStatus,
}

impl CmReport {
    pub fn is_finite(&self) -> bool {
        self.status == CmStatus::Ok && self.estimate.is_finite()
    }
}

/// Central-difference stencil `(offset, weight)` for a derivative of order `k`.
fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("orders above 4 are rejected"),
    }
}

/// All exponent vectors over `vars` variables with total order ≤ `max_order`.
fn multi_indices(vars: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..vars {
        let mut next = Vec::new();
        for prefix in &out {
            let used: usize = prefix.iter().sum();
            for e in 0..=(max_order - used) {
                let mut p = prefix.clone();
                p.push(e);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn value_entries(v: &SymbolValue) -> Vec<Complex64> {
    match v {
        SymbolValue::Scalar(s) => vec![*s],
        SymbolValue::Matrix(m) => m.iter().flatten().copied().collect(),
    }
}

/// Coifman-Meyer sweep by tensor central differences.
///
/// A derivative of total order `k` uses the step `ε^{1/(k+2)}·(|ξ|+|η|)`,
/// which balances the `O(h²)` truncation error against `ε/h^k` roundoff.
pub fn cm_condition_estimate(m: &Symbol, dim: usize, max_order: usize, samples: &[(Frequency, Frequency)]) -> Result<CmReport> {
    if max_order > 4 {
        return Err(Error::InvalidArgument(format!("max_order {max_order} > 4")));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension {dim}")));
    }
    let vars = 2 * dim;
    let indices = multi_indices(vars, max_order);
    let mut report = CmReport { estimate: 0.0, worst_sample: None, worst_order: 0, status: CmStatus::Ok };
    for (si, (xi, eta)) in samples.iter().enumerate() {
        let s = xi.norm() + eta.norm();
        if s == 0.0 {
            return Err(Error::InvalidArgument(format!("sample {si} is (0, 0)")));
        }
        for alpha in &indices {
            let order: usize = alpha.iter().sum();
            let h = f64::EPSILON.powf(1.0 / (order as f64 + 2.0)) * s;
            let mut acc: Vec<Complex64> = Vec::new();
            // Tensor product over the active variables.
            let active: Vec<(usize, &[(i32, f64)])> =
                alpha.iter().enumerate().filter(|(_, &e)| e > 0).map(|(v, &e)| (v, stencil(e))).collect();
            let mut counters = vec![0usize; active.len()];
            loop {
                let mut point = [xi.0, eta.0];
                let mut weight = 1.0;
                for (slot, (v, st)) in active.iter().enumerate() {
                    let (off, w) = st[counters[slot]];
                    point[v / dim][v % dim] += off as f64 * h;
                    weight *= w;
                }
                let entries = value_entries(&m.eval(&Frequency(point[0]), &Frequency(point[1])));
                if acc.is_empty() {
                    acc = vec![ZERO; entries.len()];
                }
                for (a, e) in acc.iter_mut().zip(entries) {
                    *a += e * weight;
                }
                let mut carry = true;
                for (slot, (_, st)) in active.iter().enumerate() {
                    if !carry {
                        break;
                    }
                    counters[slot] += 1;
                    if counters[slot] == st.len() {
                        counters[slot] = 0;
                    } else {
                        carry = false;
                    }
                }
                if carry {
                    break;
                }
            }
            let magnitude = acc.iter().map(|c| c.norm()).fold(0.0, f64::max) / h.powi(order as i32);
            let scaled = magnitude * s.powi(order as i32);
            if !scaled.is_finite() {
                report.status = CmStatus::NonFinite { sample: si };
                report.estimate = f64::INFINITY;
                report.worst_sample = Some(si);
                report.worst_order = order;
                return Ok(report);
            }
            if scaled > report.estimate {
                report.estimate = scaled;
                report.worst_sample = Some(si);
                report.worst_order = order;
            }
        }
    }
    Ok(report)
}

/// Norms available to the boundedness harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "snake_case")]
pub enum NormSelector {
    Lp { p: f64 },
    Besov { s: f64, p: f64, q: f64 },
    Bmo,
}

impl NormSelector {
    pub fn evaluate(&self, f: &SpectralField) -> Result<f64> {
        let grid = *f.grid();
        Ok(match *self {
            NormSelector::Lp { p } => lp_norm(f, p),
            NormSelector::Besov { s, p, q } => besov_norm(f, &BesovParams::for_grid(&grid, s, p, q)?).value,
            NormSelector::Bmo => bmo_carleson_norm(f, &default_centers(&grid), &default_radius_exponents(&grid)),
        })
    }

    pub fn label(&self) -> String {
        match *self {
            NormSelector::Lp { p } => format!("L^{p}"),
            NormSelector::Besov { s, p, q } => format!("B^{s}_{{{p},{q}}}"),
            NormSelector::Bmo => "BMO".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub operator: String,
    pub in1: NormSelector,
    pub in2: NormSelector,
    pub out: NormSelector,
    /// Per pair; `None` where an input norm vanished.
    pub ratios: Vec<Option<f64>>,
    pub max: f64,
    pub median: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Per-pair `‖B(f,g)‖_out / (‖f‖_in1 ‖g‖_in2)`.
pub fn boundedness_ratio(
    op: &dyn BilinearOperator,
    in1: NormSelector,
    in2: NormSelector,
    out: NormSelector,
    pairs: &[(SpectralField, SpectralField)],
) -> Result<BoundednessReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let mut ratios = Vec::with_capacity(pairs.len());
    for (f, g) in pairs {
        let (nf, ng) = (in1.evaluate(f)?, in2.evaluate(g)?);
        if nf == 0.0 || ng == 0.0 {
            ratios.push(None);
            continue;
        }
        let b = op.apply(f, g)?;
        ratios.push(Some(out.evaluate(&b)? / (nf * ng)));
    }
    let finite: Vec<f64> = ratios.iter().flatten().copied().collect();
    Ok(BoundednessReport {
        operator: op.label(),
        in1,
        in2,
        out,
        max: finite.iter().copied().fold(0.0, f64::max),
        median: median(&finite),
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    fn random_scalar(grid: GridSpec, seed: u64) -> SpectralField {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let f = SpectralField::from_fn(grid, FieldKind::Scalar, |_, _| [Complex64::new(next(), next()), ZERO, ZERO]);
        f.truncate_half_nyquist()
    }

    #[test]
    fn constant_symbol_is_product() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let (f, h) = (random_scalar(g, 1), random_scalar(g, 2));
        let b = apply_symbol(&constant_symbol(1.0), &f, &h).unwrap();
        let (pf, ph) = (f.to_physical(), h.to_physical());
        let prod: Vec<Complex64> = pf[0].iter().zip(&ph[0]).map(|(a, b)| a * b * (2.0 * PI)).collect();
        let expected = SpectralField::from_physical(g, FieldKind::Scalar, vec![prod]).unwrap();
        assert!(b.max_abs_difference(&expected) < 1e-10 * expected.max_abs_coefficient());
    }

    #[test]
    fn rejects_aliasing_inputs() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let mut f = SpectralField::zeros(g, FieldKind::Scalar);
        f.component_mut(0)[g.flat_index(&[4, 0, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        assert!(matches!(apply_symbol(&constant_symbol(1.0), &f, &f), Err(Error::Aliasing(_))));
    }

    #[test]
    fn kernel_of_zero_and_gaussian() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let k0 = kernel_of_symbol(&constant_symbol(0.0), &g).unwrap();
        assert_eq!(k0.l1_norm, 0.0);
        let kg = kernel_of_symbol(&gaussian_symbol(), &g).unwrap();
        assert!((kg.l1_norm - 2.0 * PI).abs() < 1e-6 * 2.0 * PI, "{}", kg.l1_norm);
    }

    #[test]
    fn cm_of_constant_and_growing() {
        let samples: Vec<(Frequency, Frequency)> = (0..6)
            .map(|i| (Frequency::new(&[0.3 * i as f64 + 0.1, 0.2]), Frequency::new(&[1.0, -0.5 * i as f64])))
            .collect();
        let r = cm_condition_estimate(&constant_symbol(1.0), 2, 4, &samples).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12 && r.is_finite());
        let grow = Symbol::scalar("exp|eta|^2", |_, eta| eta.norm_sq().exp());
        let far: Vec<(Frequency, Frequency)> =
            (1..=30).map(|i| (Frequency::new(&[0.5, 0.0]), Frequency::new(&[i as f64, 0.0]))).collect();
        assert!(!cm_condition_estimate(&grow, 2, 2, &far).unwrap().is_finite());
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(4, 4).len(), 70);
        assert_eq!(multi_indices(6, 4).len(), 210);
    }
}
