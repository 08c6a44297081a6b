use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{validate_decay, AlmostDiagonalMatrix};
use crate::error::{param, OscilletError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::semigroup::TimeCoeffField;
use crate::spectral::{apply_multiplier, for_each_frequency, FftBank};
use crate::tent::{tent_norms, TentOptions, TentParams};
use crate::wavelet::{CoeffField, WaveletBasis};

fn check_direction(spec: &GridSpec, l: usize) -> Result<()> {
    if l == 0 || l > spec.n() {
        return param(format!("Riesz direction {l} outside 1..={}", spec.n()));
    }
    Ok(())
}

/// `−i ξ_l / |ξ|`, zero at `ξ = 0`.
fn symbol(xi: &[f64], l: usize) -> Complex64 {
    let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, -xi[l - 1] / r) }
}

fn symbol_table(spec: &GridSpec, l: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); spec.len()];
    for_each_frequency(spec, |b, xi| out[b] = symbol(xi, l));
    out
}

/// `R_l f` as an exact Fourier multiplier on the lattice.
pub fn riesz_apply(f: &GridFunction, l: usize) -> Result<GridFunction> {
    let spec = *f.spec();
    check_direction(&spec, l)?;
    let bank = FftBank::new(spec.resolution());
    Ok(apply_multiplier(&bank, f, |xi| symbol(xi, l)))
}

/// Coefficients of `R_l` applied to the function with coefficients `c`.
pub fn riesz_coefficients(basis: &WaveletBasis, c: &CoeffField, l: usize) -> Result<CoeffField> {
    check_direction(basis.spec(), l)?;
    let table = symbol_table(basis.spec(), l);
    spectral_apply(basis, c, &table)
}

fn spectral_apply(basis: &WaveletBasis, c: &CoeffField, table: &[Complex64]) -> Result<CoeffField> {
    let mut fh = basis.synthesize_spectrum(c)?;
    fh.iter_mut().zip(table).for_each(|(v, m)| *v *= m);
    Ok(basis.analyze_spectrum(&fh))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszMatrix {
    pub direction: usize,
    /// Entries with `|j − j′| <= 1`; `C` is set to the smallest admissible constant.
    pub matrix: AlmostDiagonalMatrix,
    /// `max |a|` over `|j − j′| >= 2`, which are not stored.
    pub off_band_max: f64,
}

/// `a_{(j,k),(j′,k′)} = ⟨Φ_{j,k}, R_l Φ_{j′,k′}⟩`, column by column through the multiplier.
pub fn riesz_matrix(basis: &WaveletBasis, l: usize, n0: f64) -> Result<RieszMatrix> {
    if !basis.is_meyer() {
        return Err(OscilletError::Unsupported("Riesz matrices need a band-limited (Meyer) basis".into()));
    }
    let spec = *basis.spec();
    check_direction(&spec, l)?;
    let table = symbol_table(&spec, l);
    let layout = basis.layout();
    let dim = layout.total();
    let levels: Vec<u32> = (0..dim).map(|i| layout.decode(i).level).collect();
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
    let mut off_band_max: f64 = 0.0;
    let mut unit = CoeffField::zeros(spec, basis.family());
    for col in 0..dim {
        unit.data_mut()[col] = Complex64::new(1.0, 0.0);
        let out = spectral_apply(basis, &unit, &table)?;
        unit.data_mut()[col] = Complex64::new(0.0, 0.0);
        for (row, &v) in out.data().iter().enumerate() {
            if (levels[row] as i64 - levels[col] as i64).abs() >= 2 {
                off_band_max = off_band_max.max(v.norm());
            } else if v != Complex64::new(0.0, 0.0) {
                rows[row].push((col, v));
            }
        }
    }
    let mut matrix = AlmostDiagonalMatrix::new(spec, basis.family(), n0, 1.0, Some(1))?;
    for (i, r) in rows.into_iter().enumerate() {
        matrix.set_row(i, r)?;
    }
    matrix.c = validate_decay(&matrix).c_min;
    Ok(RieszMatrix { direction: l, matrix, off_band_max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszTentReport {
    pub direction: usize,
    pub input: [f64; 4],
    pub output: [f64; 4],
    /// Part-wise `output / input`; absent when the input part vanishes.
    pub ratios: [Option<f64>; 4],
    /// `output III / (input III + input IV)`.
    pub cross_iii: Option<f64>,
}

/// Applies `R_l` slice by slice and compares the four tent parts before and after.
pub fn riesz_tent_experiment(basis: &WaveletBasis, tcf: &TimeCoeffField, tp: &TentParams, l: usize) -> Result<RieszTentReport> {
    if !basis.is_meyer() {
        return Err(OscilletError::Unsupported("Riesz tent experiment needs a Meyer basis".into()));
    }
    check_direction(basis.spec(), l)?;
    let table = symbol_table(basis.spec(), l);
    let image = tcf.map_slices(|s| spectral_apply(basis, s, &table))?;
    let opts = TentOptions::default();
    let input = tent_norms(tcf, tp, &opts)?.values();
    let output = tent_norms(&image, tp, &opts)?.values();
    let ratio = |a: f64, b: f64| if a > 0.0 { Some(b / a) } else { None };
    let ratios = [0, 1, 2, 3].map(|i| ratio(input[i], output[i]));
    Ok(RieszTentReport { direction: l, input, output, ratios, cross_iii: ratio(input[2] + input[3], output[2]) })
}
