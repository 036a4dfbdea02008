//! Multi-dimensional FFT on row-major cubes, one axis at a time.
//!
//! `inverse` is unnormalized (`x_j = Σ_k c_k e^{+2πi jk/n}`) and `forward`
//! divides by the total number of points, so the pair maps physical samples
//! to Fourier-series coefficients and back.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, direction == FftDirection::Forward);
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

fn transform_axes(data: &mut [Complex64], n: usize, axes: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(axes as u32));
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..axes.saturating_sub(1) {
        let stride = n.pow((axes - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, value) in line.iter().enumerate() {
                    data[start + i * stride] = *value;
                }
            }
        }
    }
}

/// Physical samples to Fourier-series coefficients.
pub fn forward(data: &mut [Complex64], n: usize, axes: usize) {
    transform_axes(data, n, axes, FftDirection::Forward);
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
}

/// Fourier-series coefficients to physical samples.
pub fn inverse(data: &mut [Complex64], n: usize, axes: usize) {
    transform_axes(data, n, axes, FftDirection::Inverse);
}
