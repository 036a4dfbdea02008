//! Spectral toolkit for bilinear Fourier multipliers, Littlewood-Paley and
//! Besov/BMO norms, the second Picard iterate of the incompressible
//! Navier-Stokes equations, and a norm-inflation construction for it.
//!
//! Fields live on a periodic box and are stored as Fourier coefficients
//! ([`spectral::SpectralField`]). Bilinear operators are evaluated as direct
//! lattice convolutions ([`pseudo_product::apply_symbol`]) and checked
//! against independent oracles: a physical-space kernel sum and a
//! time-stepped Duhamel integral.

pub mod counterexample;
pub mod ensemble;
pub mod error;
pub mod experiments;
mod fft;
pub mod function_spaces;
pub mod littlewood_paley;
pub mod ns_bilinear;
pub mod pseudo_product;
pub mod report;
pub mod smooth;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{make_grid, FieldKind, Frequency, GridSpec, SpectralField};
