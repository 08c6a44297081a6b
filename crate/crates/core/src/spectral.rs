//! Multi-dimensional FFTs on dyadic grids.
//!
//! `fourier_coefficients` returns `f̂(ℓ) = N^{-n} Σ_i f_i e^{-2πi ℓ·x_i}` so that
//! `f_i = Σ_ℓ f̂(ℓ) e^{2πi ℓ·x_i}` is the unnormalized inverse transform.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{GridFunction, GridSpec};

/// Forward and inverse plans for every power of two up to `2^max_exp`.
#[derive(Clone)]
pub struct FftBank {
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FftBank(max 2^{})", self.forward.len() - 1)
    }
}

impl FftBank {
    pub fn new(max_exp: u32) -> Self {
        let mut planner = FftPlanner::new();
        let forward = (0..=max_exp).map(|e| planner.plan_fft_forward(1 << e)).collect();
        let inverse = (0..=max_exp).map(|e| planner.plan_fft_inverse(1 << e)).collect();
        FftBank { forward, inverse }
    }

    /// In-place unnormalized transform of an `n`-dimensional array with side `2^exp`.
    /// `inverse` selects the `e^{+2πi}` kernel.
    pub fn transform(&self, data: &mut [Complex64], exp: u32, n: usize, inverse: bool) {
        if exp == 0 {
            return;
        }
        let plan = if inverse {
            &self.inverse[exp as usize]
        } else {
            &self.forward[exp as usize]
        };
        let side = 1usize << exp;
        debug_assert_eq!(data.len(), side.pow(n as u32));
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::new(0.0, 0.0); side];
        for axis in 0..n.saturating_sub(1) {
            let stride = side.pow((n - 1 - axis) as u32);
            let outer = side.pow(axis as u32);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * side * stride + inner;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Fourier coefficients `f̂(ℓ)` indexed by FFT bin.
    pub fn fourier_coefficients(&self, f: &GridFunction) -> Vec<Complex64> {
        let spec = f.spec();
        let mut data = f.values().to_vec();
        self.transform(&mut data, spec.resolution(), spec.n(), false);
        let scale = spec.cell_volume();
        data.iter_mut().for_each(|v| *v *= scale);
        data
    }

    /// Grid samples `Σ_ℓ f̂(ℓ) e^{2πi ℓ·x}` from bin-indexed coefficients.
    pub fn from_fourier(&self, spec: &GridSpec, mut coeffs: Vec<Complex64>) -> GridFunction {
        self.transform(&mut coeffs, spec.resolution(), spec.n(), true);
        GridFunction::new(*spec, coeffs).expect("length preserved by transform")
    }
}

/// Signed frequency of FFT bin `b` for a transform of length `side`, in `[-side/2, side/2)`.
pub fn signed_freq(b: usize, side: usize) -> i64 {
    if b < side / 2 {
        b as i64
    } else {
        b as i64 - side as i64
    }
}

/// Applies a radial-or-not Fourier multiplier `m(ξ)` with `ξ = 2πℓ` to `f`.
pub fn apply_multiplier(
    bank: &FftBank,
    f: &GridFunction,
    mut m: impl FnMut(&[f64]) -> Complex64,
) -> GridFunction {
    let spec = *f.spec();
    let mut fh = bank.fourier_coefficients(f);
    for_each_frequency(&spec, |b, xi| fh[b] *= m(xi));
    bank.from_fourier(&spec, fh)
}

/// Calls `visit(bin, ξ)` for every bin with `ξ = 2πℓ`.
pub fn for_each_frequency(spec: &GridSpec, mut visit: impl FnMut(usize, &[f64])) {
    let side = spec.side();
    let n = spec.n();
    let mut xi = vec![0.0; n];
    for b in 0..spec.len() {
        let mut rest = b;
        for d in (0..n).rev() {
            xi[d] = 2.0 * std::f64::consts::PI * signed_freq(rest % side, side) as f64;
            rest /= side;
        }
        visit(b, &xi);
    }
}
