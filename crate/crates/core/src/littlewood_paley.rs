//! Dyadic partition of unity and the Littlewood-Paley projectors.
//!
//! The profile is `ψ(r) = θ(r) / Σ_j θ(r/2^j)` where `θ` is a smooth bump
//! equal to 1 on `[1, 2]` and supported in `[3/4, 8/3]`.

use crate::error::{Error, Result};
use crate::smooth::{smoothstep, Jet, Real};
use crate::spectral::{GridSpec, SpectralField};

pub const SUPPORT_LO: f64 = 0.75;
pub const SUPPORT_HI: f64 = 8.0 / 3.0;

fn theta<T: Real>(r: T) -> T {
    let rise = smoothstep((r - T::constant(SUPPORT_LO)) * T::constant(4.0));
    let fall = smoothstep((T::constant(SUPPORT_HI) - r) * T::constant(1.5));
    rise * fall
}

/// The radial profile `ψ`.
///
/// `scale` multiplies the normalized profile; it is 1 except when a
/// deliberately broken partition is wanted (fault injection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi {
    scale: f64,
}

impl Default for Psi {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

/// The standard profile.
pub fn build_psi() -> Psi {
    Psi::default()
}

impl Psi {
    /// Profile multiplied by `1 + eps`, so `Σ_j ψ(r/2^j) = 1 + eps`.
    pub fn perturbed(eps: f64) -> Self {
        Self { scale: 1.0 + eps }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn eval_generic<T: Real>(&self, r: T) -> T {
        let v = r.value();
        if v <= SUPPORT_LO || v >= SUPPORT_HI {
            return T::zero();
        }
        // Only j = -1, 0, 1 can overlap the support of θ(r).
        let num = theta(r);
        let den = theta(r * T::constant(2.0)) + num + theta(r * T::constant(0.5));
        num / den * T::constant(self.scale)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_generic(r)
    }

    /// `ψ^{(k)}(r)` for `k = 0..=4`.
    pub fn derivatives(&self, r: f64) -> [f64; 5] {
        let jet = self.eval_generic(Jet::variable(r));
        std::array::from_fn(|k| jet.derivative(k))
    }

    /// `Σ_j ψ(r/2^j)` over the (at most three) contributing `j`.
    pub fn partition_sum(&self, r: f64) -> f64 {
        assert!(r > 0.0, "partition sum needs r > 0");
        let j0 = r.log2().floor() as i32;
        (j0 - 2..=j0 + 2).map(|j| self.eval(r / 2f64.powi(j))).sum()
    }
}

/// Profile plus the dyadic range resolved by a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicBank {
    pub psi: Psi,
    pub j_min: i32,
    pub j_max: i32,
}

/// `[j_min, j_max]` such that every lattice frequency `κ ≤ |ξ| ≤ κ√d·n/2`
/// is reached by some `Δ_j` and every `Δ_j` in range touches that band.
pub fn grid_dyadic_range(grid: &GridSpec) -> (i32, i32) {
    let kappa = grid.freq_step();
    let top = grid.max_frequency_norm();
    let mut j_min = (kappa / SUPPORT_HI).log2().floor() as i32 - 1;
    while SUPPORT_HI * 2f64.powi(j_min) <= kappa {
        j_min += 1;
    }
    let mut j_max = (top / SUPPORT_LO).log2().ceil() as i32 + 1;
    while SUPPORT_LO * 2f64.powi(j_max) >= top {
        j_max -= 1;
    }
    (j_min, j_max)
}

impl DyadicBank {
    pub fn new(psi: Psi, j_min: i32, j_max: i32) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::InvalidArgument(format!("empty dyadic range [{j_min}, {j_max}]")));
        }
        Ok(Self { psi, j_min, j_max })
    }

    pub fn for_grid(grid: &GridSpec) -> Self {
        Self::for_grid_with(grid, Psi::default())
    }

    pub fn for_grid_with(grid: &GridSpec, psi: Psi) -> Self {
        let (j_min, j_max) = grid_dyadic_range(grid);
        Self { psi, j_min, j_max }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    /// Multiplier `ψ(|ξ|/2^j)`.
    pub fn block_weight(&self, j: i32, xi_norm: f64) -> f64 {
        self.psi.eval(xi_norm / 2f64.powi(j))
    }

    /// `Δ_j f`.
    pub fn block(&self, f: &SpectralField, j: i32) -> SpectralField {
        f.map_multiplier(|xi| self.block_weight(j, xi.norm()))
    }

    /// `Σ_{j=lo..hi} Δ_j f`; `None` means unbounded on that side, which on a
    /// grid is the bank's own end of the range.
    pub fn range(&self, f: &SpectralField, lo: Option<i32>, hi: Option<i32>) -> Result<SpectralField> {
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return Err(Error::InvalidArgument(format!("dyadic range lo {l} > hi {h}")));
            }
        }
        let lo = lo.unwrap_or(self.j_min).max(self.j_min);
        let hi = hi.unwrap_or(self.j_max).min(self.j_max);
        Ok(f.map_multiplier(|xi| {
            let r = xi.norm();
            if r == 0.0 {
                return 0.0;
            }
            (lo..=hi).map(|j| self.block_weight(j, r)).sum()
        }))
    }
}

/// `Δ_j f` with the standard profile.
pub fn dyadic_block(f: &SpectralField, j: i32) -> SpectralField {
    DyadicBank::for_grid(f.grid()).block(f, j)
}

/// `Δ_{lo ≤ · ≤ hi} f` with the standard profile.
pub fn dyadic_range(f: &SpectralField, lo: Option<i32>, hi: Option<i32>) -> Result<SpectralField> {
    DyadicBank::for_grid(f.grid()).range(f, lo, hi)
}

/// Largest `|Σ_j ψ(r/2^j) - 1|` over `samples` log-uniform radii in `[r_lo, r_hi]`.
pub fn partition_residual(psi: &Psi, r_lo: f64, r_hi: f64, samples: usize) -> f64 {
    let (a, b) = (r_lo.ln(), r_hi.ln());
    (0..samples)
        .map(|i| {
            let t = if samples > 1 { i as f64 / (samples - 1) as f64 } else { 0.5 };
            let r = (a + t * (b - a)).exp();
            (psi.partition_sum(r) - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, FieldKind};
    use num_complex::Complex64;

    #[test]
    fn profile_values() {
        let psi = build_psi();
        assert_eq!(psi.eval(0.5), 0.0);
        assert_eq!(psi.eval(0.75), 0.0);
        assert_eq!(psi.eval(3.0), 0.0);
        assert!((psi.eval(1.5) - 1.0).abs() < 1e-15);
        assert!((psi.eval(1.0) - 0.5).abs() < 1e-15);
        assert!((psi.eval(2.0) - 0.5).abs() < 1e-15);
        let s: f64 = (-3..=3).map(|j| psi.eval(1.0 / 2f64.powi(j))).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partition_of_unity_dense() {
        assert!(partition_residual(&build_psi(), 1e-3, 1e3, 10_000) < 1e-10);
        assert!(partition_residual(&Psi::perturbed(1e-3), 1e-3, 1e3, 100) > 9e-4);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let psi = build_psi();
        for &r in &[0.8, 0.9, 1.2, 2.3, 2.6] {
            let d = psi.derivatives(r);
            let h = 1e-5;
            let fd = (psi.eval(r + h) - psi.eval(r - h)) / (2.0 * h);
            assert!((d[0] - psi.eval(r)).abs() < 1e-14);
            assert!((d[1] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "r={r}: {} vs {fd}", d[1]);
        }
    }

    #[test]
    fn grid_range_covers_lattice() {
        let g = make_grid(2, 64, 2.0 * std::f64::consts::PI).unwrap();
        let bank = DyadicBank::for_grid(&g);
        assert_eq!((bank.j_min, bank.j_max), (-1, 5));
        for flat in 1..g.len() {
            let r = g.frequency(flat).norm();
            let s: f64 = bank.indices().map(|j| bank.block_weight(j, r)).sum();
            assert!((s - 1.0).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn block_of_single_mode() {
        let g = make_grid(2, 256, 2.0 * std::f64::consts::PI).unwrap();
        let bank = DyadicBank::for_grid(&g);
        let mut f = SpectralField::zeros(g, FieldKind::Scalar);
        f.component_mut(0)[g.flat_index(&[48, 0, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        assert_eq!(bank.block(&f, 5), f);
        let mut low = SpectralField::zeros(g, FieldKind::Scalar);
        low.component_mut(0)[g.flat_index(&[16, 0, 0]).unwrap()] = Complex64::new(1.0, 0.0);
        assert!(bank.block(&low, 5).is_zero());
        assert!(bank.range(&low, Some(5), Some(9)).unwrap().is_zero());
        assert!(bank.range(&low, Some(3), Some(1)).is_err());
    }
}
