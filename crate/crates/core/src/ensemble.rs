//! Seeded random field ensembles.
//!
//! Every field is real, mean zero and band-limited to `|k_i| < n/4`. Field
//! `i` of an ensemble draws from ChaCha stream `i` of the given seed, so
//! ensembles are reproducible bit for bit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_spaces::{besov_norm, BesovParams};
use crate::littlewood_paley::DyadicBank;
use crate::spectral::{leray_project, lp_norm, FieldKind, GridSpec, SpectralField, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Scalar, equal sup-norm in every dyadic block, unit `Ḃ⁰_{∞,∞}` norm.
    FlatBinf,
    /// Scalar white noise with unit `L²` norm.
    WhiteL2,
    /// Divergence-free vector white noise with unit `L²` norm.
    DivfreeVector,
    /// Divergence-free vector field with block sup-norms `∝ 2^j` and unit
    /// `Ḃ⁻¹_{∞,∞}` norm.
    DivfreeFlatBminus1,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat_binf" => Ok(Profile::FlatBinf),
            "white_l2" => Ok(Profile::WhiteL2),
            "divfree_vector" => Ok(Profile::DivfreeVector),
            "divfree_flat_bminus1" => Ok(Profile::DivfreeFlatBminus1),
            other => Err(Error::Config(format!("unknown profile '{other}'"))),
        }
    }
}

impl Profile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::FlatBinf => "flat_binf",
            Profile::WhiteL2 => "white_l2",
            Profile::DivfreeVector => "divfree_vector",
            Profile::DivfreeFlatBminus1 => "divfree_flat_bminus1",
        }
    }
}

fn white_noise(grid: &GridSpec, kind: FieldKind, rng: &mut ChaCha8Rng) -> SpectralField {
    let comps = match kind {
        FieldKind::Scalar => 1,
        FieldKind::Vector => grid.dim(),
    };
    let samples = (0..comps)
        .map(|_| {
            (0..grid.len())
                .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
                .collect()
        })
        .collect();
    let mut f = SpectralField::from_physical(*grid, kind, samples)
        .expect("sample shapes match")
        .truncate_half_nyquist();
    f.set_coefficient(0, [ZERO; 3]);
    // Exact conjugate symmetry; the FFT leaves rounding-level asymmetry.
    for c in 0..comps {
        let comp = f.component(c).to_vec();
        for (flat, slot) in f.component_mut(c).iter_mut().enumerate() {
            let partner = comp[grid.conjugate_index(flat)];
            *slot = 0.5 * (comp[flat] + partner.conj());
        }
    }
    f
}

/// Rescale each dyadic block so its sup norm is `2^{js}`.
fn flatten_blocks(f: &SpectralField, s: f64) -> SpectralField {
    let bank = DyadicBank::for_grid(f.grid());
    let mut out = SpectralField::zeros(*f.grid(), f.kind());
    for j in bank.indices() {
        let block = bank.block(f, j);
        let sup = lp_norm(&block, f64::INFINITY);
        if sup > 0.0 {
            let w = Complex64::new(2f64.powf(j as f64 * s) / sup, 0.0);
            out = out.combine(Complex64::new(1.0, 0.0), &block, w).expect("same grid");
        }
    }
    out
}

fn normalize(f: SpectralField, norm: f64) -> SpectralField {
    if norm > 0.0 {
        f.scale(Complex64::new(1.0 / norm, 0.0))
    } else {
        f
    }
}

/// One field of the ensemble.
pub fn sample_field(grid: &GridSpec, seed: u64, index: u64, profile: Profile) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    Ok(match profile {
        Profile::WhiteL2 => {
            let f = white_noise(grid, FieldKind::Scalar, &mut rng);
            let n = lp_norm(&f, 2.0);
            normalize(f, n)
        }
        Profile::DivfreeVector => {
            let f = leray_project(&white_noise(grid, FieldKind::Vector, &mut rng))?;
            let n = lp_norm(&f, 2.0);
            normalize(f, n)
        }
        Profile::FlatBinf => {
            let f = flatten_blocks(&white_noise(grid, FieldKind::Scalar, &mut rng), 0.0);
            let n = besov_norm(&f, &BesovParams::for_grid(grid, 0.0, f64::INFINITY, f64::INFINITY)?).value;
            normalize(f, n)
        }
        Profile::DivfreeFlatBminus1 => {
            let f = leray_project(&flatten_blocks(&white_noise(grid, FieldKind::Vector, &mut rng), 1.0))?;
            let n = besov_norm(&f, &BesovParams::for_grid(grid, -1.0, f64::INFINITY, f64::INFINITY)?).value;
            normalize(f, n)
        }
    })
}

/// `size` fields from `seed`.
pub fn ensemble(grid: &GridSpec, seed: u64, size: usize, profile: Profile) -> Result<Vec<SpectralField>> {
    if size == 0 {
        return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
    }
    (0..size as u64).map(|i| sample_field(grid, seed, i, profile)).collect()
}
