//! Band-limited fields on a periodic box, stored as Fourier-series coefficients.
//!
//! A field is `f(x) = Σ_ξ c_ξ e^{iξ·x}` with `ξ` on the lattice `(2π/L)·ℤ^d`
//! truncated to wavenumbers `-n/2 ..= n/2 - 1` per axis. Coefficients are kept
//! in FFT (wrap-around) order, row-major with the last axis fastest. With this
//! normalization `‖f‖₂² = L^d Σ|c_ξ|²`; the continuum unitary transform of
//! the periodic surrogate relates to the coefficients through
//! `f̂(ξ) = (2π)^{d/2} (2π/L)^{-d} c_ξ`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Periodic grid: `dim` axes of `points_per_axis` samples over a box of side `period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points_per_axis: usize,
    period: f64,
}

/// Build a grid, rejecting unsupported dimensions, sizes and periods.
pub fn make_grid(dim: usize, points_per_axis: usize, period: f64) -> Result<GridSpec> {
    GridSpec::new(dim, points_per_axis, period)
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, period: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        Ok(Self { dim, points_per_axis, period })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Lattice spacing `2π/L` in frequency.
    pub fn freq_step(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn cell_size(&self) -> f64 {
        self.period / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().powi(self.dim as i32)
    }

    pub fn box_volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Total number of lattice points (and physical samples).
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_wavenumber(&self) -> i64 {
        -(self.points_per_axis as i64 / 2)
    }

    pub fn max_wavenumber(&self) -> i64 {
        self.points_per_axis as i64 / 2 - 1
    }

    /// Largest `|ξ_i|` on the lattice.
    pub fn nyquist(&self) -> f64 {
        self.freq_step() * (self.points_per_axis / 2) as f64
    }

    /// Largest `|ξ|` on the lattice.
    pub fn max_frequency_norm(&self) -> f64 {
        self.nyquist() * (self.dim as f64).sqrt()
    }

    /// Exclusive per-axis wavenumber bound for inputs of bilinear operators.
    pub fn half_nyquist_bound(&self) -> i64 {
        self.points_per_axis as i64 / 4
    }

    /// Signed integer wavenumber of a storage index (unused axes are zero).
    pub fn wavenumber(&self, flat: usize) -> [i64; 3] {
        let n = self.points_per_axis;
        let mut k = [0i64; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            let i = rest % n;
            rest /= n;
            k[axis] = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
        }
        k
    }

    /// Storage index of a wavenumber, `None` outside the truncated lattice.
    pub fn flat_index(&self, k: &[i64; 3]) -> Option<usize> {
        let n = self.points_per_axis as i64;
        let (lo, hi) = (self.min_wavenumber(), self.max_wavenumber());
        let mut flat = 0usize;
        for &ki in k.iter().take(self.dim) {
            if ki < lo || ki > hi {
                return None;
            }
            let i = if ki < 0 { ki + n } else { ki };
            flat = flat * n as usize + i as usize;
        }
        Some(flat)
    }

    /// Storage index of `-k` modulo the lattice (the DFT conjugate partner).
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let n = self.points_per_axis;
        let mut rest = flat;
        let mut out = 0usize;
        let mut mult = 1usize;
        for _ in 0..self.dim {
            let i = rest % n;
            rest /= n;
            out += ((n - i) % n) * mult;
            mult *= n;
        }
        out
    }

    pub fn frequency(&self, flat: usize) -> Frequency {
        let k = self.wavenumber(flat);
        let s = self.freq_step();
        Frequency([k[0] as f64 * s, k[1] as f64 * s, k[2] as f64 * s])
    }

    /// Physical coordinates of a sample, in `[0, L)^d`.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let n = self.points_per_axis;
        let h = self.cell_size();
        let mut x = [0.0; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            x[axis] = (rest % n) as f64 * h;
            rest /= n;
        }
        x
    }

    /// Per-axis sample indices of a storage index.
    pub fn sample_index(&self, flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % n;
            rest /= n;
        }
        idx
    }

    /// Storage index of per-axis sample indices, wrapping periodically.
    pub fn wrap_sample(&self, idx: &[i64; 3]) -> usize {
        let n = self.points_per_axis as i64;
        idx.iter()
            .take(self.dim)
            .fold(0usize, |acc, &i| acc * n as usize + i.rem_euclid(n) as usize)
    }
}

/// A point of frequency space; components beyond the grid dimension are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Frequency(pub [f64; 3]);

impl Frequency {
    pub const ZERO: Frequency = Frequency([0.0; 3]);

    pub fn new(components: &[f64]) -> Self {
        let mut v = [0.0; 3];
        v[..components.len()].copy_from_slice(components);
        Frequency(v)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Frequency) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Frequency) -> Frequency {
        let (a, b) = (self.0, other.0);
        Frequency([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for Frequency {
    type Output = Frequency;
    fn add(self, rhs: Frequency) -> Frequency {
        Frequency([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Frequency {
    type Output = Frequency;
    fn sub(self, rhs: Frequency) -> Frequency {
        Frequency([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Neg for Frequency {
    type Output = Frequency;
    fn neg(self) -> Frequency {
        Frequency(self.0.map(|v| -v))
    }
}

impl Mul<f64> for Frequency {
    type Output = Frequency;
    fn mul(self, rhs: f64) -> Frequency {
        Frequency(self.0.map(|v| v * rhs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Vector,
}

/// Fourier coefficients of a scalar or `dim`-component vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    kind: FieldKind,
    components: Vec<Vec<Complex64>>,
}

fn component_count(grid: &GridSpec, kind: FieldKind) -> usize {
    match kind {
        FieldKind::Scalar => 1,
        FieldKind::Vector => grid.dim(),
    }
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, kind: FieldKind) -> Self {
        let components = vec![vec![ZERO; grid.len()]; component_count(&grid, kind)];
        Self { grid, kind, components }
    }

    pub fn from_components(grid: GridSpec, kind: FieldKind, components: Vec<Vec<Complex64>>) -> Result<Self> {
        if components.len() != component_count(&grid, kind) {
            return Err(Error::InvalidArgument(format!(
                "{:?} field on a {}-d grid needs {} components, got {}",
                kind,
                grid.dim(),
                component_count(&grid, kind),
                components.len()
            )));
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidArgument("component length does not match the grid".into()));
        }
        Ok(Self { grid, kind, components })
    }

    /// Coefficients from a function of (storage index, frequency).
    pub fn from_fn<F>(grid: GridSpec, kind: FieldKind, mut coeff: F) -> Self
    where
        F: FnMut(usize, Frequency) -> [Complex64; 3],
    {
        let mut field = Self::zeros(grid, kind);
        for flat in 0..grid.len() {
            let c = coeff(flat, grid.frequency(flat));
            for (comp, value) in field.components.iter_mut().zip(c) {
                comp[flat] = value;
            }
        }
        field
    }

    /// Transform physical samples (one vector per component) to coefficients.
    pub fn from_physical(grid: GridSpec, kind: FieldKind, mut samples: Vec<Vec<Complex64>>) -> Result<Self> {
        for s in samples.iter_mut() {
            if s.len() != grid.len() {
                return Err(Error::InvalidArgument("sample count does not match the grid".into()));
            }
            fft::forward(s, grid.points_per_axis(), grid.dim());
        }
        Self::from_components(grid, kind, samples)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    /// Coefficients of all components at one lattice point (zero padded).
    pub fn coefficient(&self, flat: usize) -> [Complex64; 3] {
        let mut out = [ZERO; 3];
        for (slot, comp) in out.iter_mut().zip(&self.components) {
            *slot = comp[flat];
        }
        out
    }

    pub fn set_coefficient(&mut self, flat: usize, value: [Complex64; 3]) {
        for (comp, v) in self.components.iter_mut().zip(value) {
            comp[flat] = v;
        }
    }

    /// Physical samples, one vector per component.
    pub fn to_physical(&self) -> Vec<Vec<Complex64>> {
        self.components
            .iter()
            .map(|c| {
                let mut data = c.clone();
                fft::inverse(&mut data, self.grid.points_per_axis(), self.grid.dim());
                data
            })
            .collect()
    }

    /// Pointwise Euclidean magnitude `|f(x)|` on the physical grid.
    pub fn physical_magnitude(&self) -> Vec<f64> {
        let phys = self.to_physical();
        (0..self.grid.len())
            .map(|i| phys.iter().map(|c| c[i].norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// Multiply every coefficient by a real radial or general multiplier `m(ξ)`.
    pub fn map_multiplier<F>(&self, multiplier: F) -> Self
    where
        F: Fn(Frequency) -> f64,
    {
        let mut out = self.clone();
        for flat in 0..self.grid.len() {
            let m = multiplier(self.grid.frequency(flat));
            for comp in out.components.iter_mut() {
                comp[flat] *= m;
            }
        }
        out
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().flatten().for_each(|c| *c *= a);
        out
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &SpectralField, b: Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (oc, rc) in out.components.iter_mut().zip(&other.components) {
            for (o, r) in oc.iter_mut().zip(rc) {
                *o = a * *o + b * r;
            }
        }
        Ok(out)
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.kind != other.kind {
            return Err(Error::GridMismatch(format!("{:?} vs {:?} field", self.kind, other.kind)));
        }
        Ok(())
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest coefficient-wise difference to another field on the same grid.
    pub fn max_abs_difference(&self, other: &SpectralField) -> f64 {
        self.components
            .iter()
            .flatten()
            .zip(other.components.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `Σ|c_ξ|²` over components and lattice.
    pub fn coefficient_energy(&self) -> f64 {
        self.components.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Largest `|c_{-ξ} - conj(c_ξ)|`; zero for real-valued fields.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for comp in &self.components {
            for flat in 0..self.grid.len() {
                let partner = comp[self.grid.conjugate_index(flat)];
                worst = worst.max((partner - comp[flat].conj()).norm());
            }
        }
        worst
    }

    /// `max_ξ |ξ·c_ξ| / max_ξ |c_ξ|` (zero for the zero field).
    pub fn divergence_residual(&self) -> f64 {
        if self.kind != FieldKind::Vector {
            return 0.0;
        }
        let scale = self.max_abs_coefficient();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for flat in 0..self.grid.len() {
            let xi = self.grid.frequency(flat);
            let div: Complex64 = self.components.iter().enumerate().map(|(i, c)| c[flat] * xi.0[i]).sum();
            worst = worst.max(div.norm());
        }
        worst / scale
    }

    /// Storage indices of lattice points where any component is nonzero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.grid.len())
            .filter(|&flat| self.components.iter().any(|c| c[flat] != ZERO))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().flatten().all(|c| *c == ZERO)
    }

    /// Whether all nonzero coefficients satisfy `|k_i| < n/4` on every axis.
    pub fn is_half_nyquist(&self) -> bool {
        let bound = self.grid.half_nyquist_bound();
        self.support()
            .into_iter()
            .all(|flat| self.grid.wavenumber(flat).iter().all(|k| k.abs() < bound))
    }

    pub fn require_half_nyquist(&self, what: &str) -> Result<()> {
        if self.is_half_nyquist() {
            Ok(())
        } else {
            Err(Error::Aliasing(format!(
                "{what} has coefficients at |k_i| >= n/4 = {}; products would alias",
                self.grid.half_nyquist_bound()
            )))
        }
    }

    /// Zero every coefficient outside the half-Nyquist band.
    pub fn truncate_half_nyquist(&self) -> Self {
        let bound = self.grid.half_nyquist_bound();
        let mut out = self.clone();
        for flat in 0..self.grid.len() {
            if self.grid.wavenumber(flat).iter().any(|k| k.abs() >= bound) {
                for comp in out.components.iter_mut() {
                    comp[flat] = ZERO;
                }
            }
        }
        out
    }
}

/// `e^{tΔ}`: multiply each coefficient by `exp(-t|ξ|²)`.
pub fn heat_propagate(f: &SpectralField, t: f64) -> SpectralField {
    assert!(t >= 0.0, "heat propagation needs t >= 0, got {t}");
    if t == 0.0 {
        return f.clone();
    }
    f.map_multiplier(|xi| (-t * xi.norm_sq()).exp())
}

/// `P(ξ) = I - ξξᵀ/|ξ|²`, with `P(0) = I`.
pub fn leray_matrix(xi: &Frequency, dim: usize) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    let n2 = xi.norm_sq();
    for i in 0..dim {
        for j in 0..dim {
            let delta = if i == j { 1.0 } else { 0.0 };
            p[i][j] = if n2 > 0.0 { delta - xi.0[i] * xi.0[j] / n2 } else { delta };
        }
    }
    p
}

/// Leray projection onto divergence-free fields.
pub fn leray_project(f: &SpectralField) -> Result<SpectralField> {
    if f.kind() != FieldKind::Vector {
        return Err(Error::InvalidArgument("Leray projection needs a vector field".into()));
    }
    let grid = *f.grid();
    let dim = grid.dim();
    let dc = f.coefficient(0);
    if dc.iter().any(|c| *c != ZERO) {
        warn!("Leray projection of a field with nonzero mean; P(0) acts as the identity");
    }
    let mut out = f.clone();
    for flat in 1..grid.len() {
        let xi = grid.frequency(flat);
        let p = leray_matrix(&xi, dim);
        let c = f.coefficient(flat);
        let mut r = [ZERO; 3];
        for i in 0..dim {
            for j in 0..dim {
                r[i] += c[j] * p[i][j];
            }
        }
        out.set_coefficient(flat, r);
    }
    Ok(out)
}

/// Discrete `L^p` norm: Riemann sum over the physical grid (`p = ∞` is the grid maximum).
pub fn lp_norm(f: &SpectralField, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
    norm_of_magnitude(&f.physical_magnitude(), f.grid(), p)
}

/// `L^p` norm of precomputed pointwise magnitudes.
pub fn norm_of_magnitude(magnitude: &[f64], grid: &GridSpec, p: f64) -> f64 {
    if p.is_infinite() {
        return magnitude.iter().fold(0.0, |m, v| m.max(*v));
    }
    let sum: f64 = magnitude.iter().map(|v| v.powf(p)).sum();
    (sum * grid.cell_volume()).powf(1.0 / p)
}

/// Serialized form of a field: header plus flat interleaved coefficients,
/// component-major, each component in row-major storage order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldFile {
    pub dim: usize,
    pub points_per_axis: usize,
    pub period: f64,
    pub tag: FieldKind,
    pub coefficients: Vec<f64>,
}

const BINARY_MAGIC: &[u8; 4] = b"BNSF";
const BINARY_VERSION: u8 = 1;

impl SpectralField {
    pub fn to_file(&self) -> FieldFile {
        let coefficients = self.components.iter().flatten().flat_map(|c| [c.re, c.im]).collect();
        FieldFile {
            dim: self.grid.dim(),
            points_per_axis: self.grid.points_per_axis(),
            period: self.grid.period(),
            tag: self.kind,
            coefficients,
        }
    }

    pub fn from_file(file: &FieldFile) -> Result<Self> {
        let grid = GridSpec::new(file.dim, file.points_per_axis, file.period)?;
        let ncomp = component_count(&grid, file.tag);
        if file.coefficients.len() != 2 * ncomp * grid.len() {
            return Err(Error::Format(format!(
                "expected {} reals, found {}",
                2 * ncomp * grid.len(),
                file.coefficients.len()
            )));
        }
        let components = file
            .coefficients
            .chunks_exact(2 * grid.len())
            .map(|chunk| chunk.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
            .collect();
        Self::from_components(grid, file.tag, components)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &self.to_file())?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let file: FieldFile = serde_json::from_reader(reader)?;
        Self::from_file(&file)
    }

    /// Little-endian binary container: magic, version, dim, tag, n (u32),
    /// period (f64), then the interleaved coefficients.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(BINARY_MAGIC)?;
        let tag = match self.kind {
            FieldKind::Scalar => 0u8,
            FieldKind::Vector => 1u8,
        };
        writer.write_all(&[BINARY_VERSION, self.grid.dim() as u8, tag])?;
        writer.write_all(&(self.grid.points_per_axis() as u32).to_le_bytes())?;
        writer.write_all(&self.grid.period().to_le_bytes())?;
        for c in self.components.iter().flatten() {
            writer.write_all(&c.re.to_le_bytes())?;
            writer.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut head = [0u8; 3];
        reader.read_exact(&mut head)?;
        if head[0] != BINARY_VERSION {
            return Err(Error::Format(format!("unsupported version {}", head[0])));
        }
        let tag = match head[2] {
            0 => FieldKind::Scalar,
            1 => FieldKind::Vector,
            other => return Err(Error::Format(format!("unknown tag {other}"))),
        };
        let mut n = [0u8; 4];
        reader.read_exact(&mut n)?;
        let mut period = [0u8; 8];
        reader.read_exact(&mut period)?;
        let grid = GridSpec::new(head[1] as usize, u32::from_le_bytes(n) as usize, f64::from_le_bytes(period))?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let coefficients: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_file(&FieldFile {
            dim: grid.dim(),
            points_per_axis: grid.points_per_axis(),
            period: grid.period(),
            tag,
            coefficients,
        })
    }

    /// Save as JSON when the extension is `.json`, binary otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "json") {
            self.write_json(file)
        } else {
            self.write_binary(file)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        if path.extension().is_some_and(|e| e == "json") {
            Self::read_json(file)
        } else {
            Self::read_binary(file)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode(grid: GridSpec, k: [i64; 3], amp: Complex64) -> SpectralField {
        let mut f = SpectralField::zeros(grid, FieldKind::Scalar);
        let flat = grid.flat_index(&k).unwrap();
        f.component_mut(0)[flat] = amp;
        f
    }

    #[test]
    fn make_grid_examples() {
        let g = make_grid(2, 64, 2.0 * PI).unwrap();
        assert!((g.freq_step() - 1.0).abs() < 1e-15);
        assert!((g.nyquist() - 32.0).abs() < 1e-12);
        let g3 = make_grid(3, 8, 2.0 * PI).unwrap();
        assert_eq!(g3.len(), 512);
        let ks: Vec<i64> = (0..8).map(|i| g3.wavenumber(i)[2]).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!((g3.min_wavenumber(), g3.max_wavenumber()), (-4, 3));
        assert!(make_grid(2, 100, 1.0).is_err());
        assert!(make_grid(2, 64, 0.0).is_err());
        assert!(make_grid(2, 64, -1.0).is_err());
        assert!(make_grid(4, 64, 1.0).is_err());
        assert!(make_grid(2, 4, 1.0).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = make_grid(3, 8, 1.0).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flat_index(&g.wavenumber(flat)), Some(flat));
            assert_eq!(g.conjugate_index(g.conjugate_index(flat)), flat);
        }
        assert_eq!(g.flat_index(&[4, 0, 0]), None);
    }

    #[test]
    fn heat_single_mode_and_identity() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let amp = Complex64::new(0.7, -0.2);
        let f = single_mode(g, [2, 0, 0], amp);
        let out = heat_propagate(&f, 0.25);
        let flat = g.flat_index(&[2, 0, 0]).unwrap();
        assert!((out.component(0)[flat] - amp * (-1.0f64).exp()).norm() < 1e-15);
        assert_eq!(heat_propagate(&f, 0.0), f);
    }

    #[test]
    fn leray_matrix_at_xi0() {
        let p = leray_matrix(&Frequency([0.0, 0.5, 0.5]), 3);
        let expected = [[1.0, 0.0, 0.0], [0.0, 0.5, -0.5], [0.0, -0.5, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((p[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
        let p1 = leray_matrix(&Frequency([1.0, 0.0, 0.0]), 3);
        assert_eq!(p1[0], [0.0, 0.0, 0.0]);
        assert_eq!([p1[0][1], p1[1][1], p1[2][1]], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn lp_norm_single_mode_and_zero() {
        for dim in [2, 3] {
            let g = make_grid(dim, 8, 2.0 * PI).unwrap();
            let f = single_mode(g, [1, 0, 0], Complex64::new(1.0, 0.0));
            let expected = (2.0 * PI).powf(dim as f64 / 2.0);
            assert!((lp_norm(&f, 2.0) - expected).abs() < 1e-12 * expected);
            assert!((lp_norm(&f, f64::INFINITY) - 1.0).abs() < 1e-12);
            let z = SpectralField::zeros(g, FieldKind::Vector);
            for p in [1.0, 2.0, 3.5, f64::INFINITY] {
                assert_eq!(lp_norm(&z, p), 0.0);
            }
        }
    }

    #[test]
    fn leray_requires_vector() {
        let g = make_grid(2, 8, 1.0).unwrap();
        assert!(leray_project(&SpectralField::zeros(g, FieldKind::Scalar)).is_err());
    }

    #[test]
    fn containers_round_trip() {
        let g = make_grid(2, 8, 3.0).unwrap();
        let f = SpectralField::from_fn(g, FieldKind::Vector, |flat, _| {
            [Complex64::new(flat as f64, 0.5), Complex64::new(-1.0, flat as f64 * 0.25), ZERO]
        });
        let mut json = Vec::new();
        f.write_json(&mut json).unwrap();
        assert_eq!(SpectralField::read_json(json.as_slice()).unwrap(), f);
        let mut bin = Vec::new();
        f.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 4 + 3 + 4 + 8 + 2 * 2 * 64 * 8);
        assert_eq!(SpectralField::read_binary(bin.as_slice()).unwrap(), f);
        assert!(SpectralField::read_binary(&b"NOPE"[..]).is_err());
    }
}
