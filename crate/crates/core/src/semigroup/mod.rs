//! Fractional heat semigroup `e^{−t(−Δ)^β}` as a Fourier multiplier, its wavelet-coefficient
//! lift to a time grid, the calibrated reconstruction family, and coefficient decay bounds.

mod calibrated;
mod decay;

pub use calibrated::{
    pi_phi, pi_phi_field, single_mode_identity, AdmissibilityReport, CalibratedFamily, Reconstruction, QUADRATURE_TOLERANCE,
};
pub use decay::{
    check_decay_bounds, check_dual_bound, fit_decay_constant, seam_continuity, DecayReport, DualBoundReport,
    SeamReport, DEFAULT_C_GRID, FINITE_RATIO, STABLE_SPREAD,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, OscilletError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::spectral::{for_each_frequency, FftBank};
use crate::wavelet::{CoeffField, Family, WaveletBasis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupSpec {
    pub beta: f64,
    pub spec: GridSpec,
}

impl SemigroupSpec {
    pub fn new(beta: f64, spec: GridSpec) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return param(format!("fractional order β={beta} must be positive"));
        }
        Ok(SemigroupSpec { beta, spec })
    }

    /// `|ξ|^{2β}` with `ξ = 2πℓ`, indexed by FFT bin.
    pub fn symbol(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.len()];
        for_each_frequency(&self.spec, |b, xi| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            out[b] = if r2 == 0.0 { 0.0 } else { r2.powf(self.beta) };
        });
        out
    }

    /// `|ξ|` indexed by FFT bin.
    pub fn radii(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.len()];
        for_each_frequency(&self.spec, |b, xi| out[b] = xi.iter().map(|x| x * x).sum::<f64>().sqrt());
        out
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return param(format!("time t={t} must be finite and non-negative"));
    }
    Ok(())
}

/// `e^{−t|ξ|^{2β}} f̂` applied to bin-indexed coefficients.
pub fn heat_spectrum(symbol: &[f64], fh: &[Complex64], t: f64) -> Vec<Complex64> {
    fh.iter().zip(symbol).map(|(v, s)| v * (-t * s).exp()).collect()
}

pub fn heat_apply(sg: &SemigroupSpec, f: &GridFunction, t: f64) -> Result<GridFunction> {
    check_time(t)?;
    if *f.spec() != sg.spec {
        return Err(OscilletError::Shape("function grid differs from the semigroup grid".into()));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let bank = FftBank::new(sg.spec.resolution());
    let fh = bank.fourier_coefficients(f);
    Ok(bank.from_fourier(&sg.spec, heat_spectrum(&sg.symbol(), &fh, t)))
}

/// Log-spaced nodes `t_ℓ = exp(ln t_min + (ℓ + ½)Δ)`, `Δ = ln(t_max/t_min)/L`, each weighted
/// `Δ` for the measure `dt/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, len: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return param(format!("time grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"));
        }
        if len == 0 {
            return param("time grid needs at least one node");
        }
        Ok(TimeGrid { t_min, t_max, len })
    }

    /// `[2^{−2β(J+1)}, 4]` with 256 nodes.
    pub fn standard(spec: &GridSpec, beta: f64) -> Self {
        let t_min = (-2.0 * beta * (spec.resolution() as f64 + 1.0)).exp2();
        TimeGrid { t_min, t_max: 4.0, len: 256 }
    }

    pub fn log_step(&self) -> f64 {
        (self.t_max / self.t_min).ln() / self.len as f64
    }

    pub fn log_node(&self, l: usize) -> f64 {
        self.t_min.ln() + (l as f64 + 0.5) * self.log_step()
    }

    pub fn node(&self, l: usize) -> f64 {
        self.log_node(l).exp()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|l| self.node(l)).collect()
    }

    pub fn weight(&self) -> f64 {
        self.log_step()
    }
}

/// Wavelet coefficients `a^ε_{j,k}(t_ℓ)` at every node of a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeCoeffField {
    pub beta: f64,
    pub grid: TimeGrid,
    slices: Vec<CoeffField>,
}

impl TimeCoeffField {
    pub fn new(beta: f64, grid: TimeGrid, slices: Vec<CoeffField>) -> Result<Self> {
        if slices.len() != grid.len {
            return Err(OscilletError::Shape(format!(
                "{} slices for {} time nodes",
                slices.len(),
                grid.len
            )));
        }
        if let Some(first) = slices.first() {
            if slices.iter().any(|s| s.spec() != first.spec() || s.family() != first.family()) {
                return Err(OscilletError::Shape("time slices disagree on grid or basis".into()));
            }
        }
        if !(beta > 0.0) {
            return param("β must be positive");
        }
        Ok(TimeCoeffField { beta, grid, slices })
    }

    pub fn spec(&self) -> &GridSpec {
        self.slices[0].spec()
    }

    pub fn family(&self) -> Family {
        self.slices[0].family()
    }

    pub fn slices(&self) -> &[CoeffField] {
        &self.slices
    }

    pub fn slice(&self, l: usize) -> &CoeffField {
        &self.slices[l]
    }

    /// Applies `f` to every slice.
    pub fn map_slices(&self, f: impl FnMut(&CoeffField) -> Result<CoeffField>) -> Result<TimeCoeffField> {
        let slices = self.slices.iter().map(f).collect::<Result<Vec<_>>>()?;
        TimeCoeffField::new(self.beta, self.grid, slices)
    }

    /// Field with coefficients `profile(j, t) · c^ε_{j,k}` for detail indices; scaling block zero.
    pub fn from_profile(
        beta: f64,
        grid: TimeGrid,
        c: &CoeffField,
        mut profile: impl FnMut(u32, f64) -> f64,
    ) -> Result<TimeCoeffField> {
        let layout = c.layout();
        let slices = (0..grid.len)
            .map(|l| {
                let t = grid.node(l);
                let mut s = CoeffField::zeros(*c.spec(), c.family());
                for b in layout.blocks().into_iter().filter(|b| b.eps != 0) {
                    let w = profile(b.level, t);
                    for (dst, src) in s.block_mut(b.level, b.eps).iter_mut().zip(c.block(b.level, b.eps)) {
                        *dst = src * w;
                    }
                }
                s
            })
            .collect();
        TimeCoeffField::new(beta, grid, slices)
    }
}

/// `analyze(heat_apply(f, t_ℓ))` for every node, with one forward FFT of `f`.
pub fn evolve_coefficients(
    sg: &SemigroupSpec,
    basis: &WaveletBasis,
    f: &GridFunction,
    tg: &TimeGrid,
) -> Result<TimeCoeffField> {
    if *f.spec() != sg.spec || *basis.spec() != sg.spec {
        return Err(OscilletError::Shape("semigroup, basis and function grids differ".into()));
    }
    let fh = basis.bank().fourier_coefficients(f);
    let symbol = sg.symbol();
    let slices = tg
        .nodes()
        .into_iter()
        .map(|t| basis.analyze_spectrum(&heat_spectrum(&symbol, &fh, t)))
        .collect();
    TimeCoeffField::new(sg.beta, *tg, slices)
}

/// Scaling coefficients `⟨a(t_ℓ,·), Φ⁰_{j,k}⟩` at every node and level `j_min..J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScalingField {
    pub grid: TimeGrid,
    pub n: usize,
    pub levels: Vec<u32>,
    /// `data[ℓ][level index]` holds the row-major coefficients.
    pub data: Vec<Vec<Vec<Complex64>>>,
}

/// Heat-lifts `f` and records its scaling coefficients on every level of the band.
pub fn scaling_lift(
    sg: &SemigroupSpec,
    basis: &WaveletBasis,
    f: &GridFunction,
    tg: &TimeGrid,
) -> Result<TimeScalingField> {
    let bank = basis.bank();
    let fh = bank.fourier_coefficients(f);
    let symbol = sg.symbol();
    let levels: Vec<u32> = (sg.spec.j_min()..sg.spec.resolution()).collect();
    let data = tg
        .nodes()
        .into_iter()
        .map(|t| {
            let h = heat_spectrum(&symbol, &fh, t);
            let input = if basis.is_meyer() { h } else { bank.from_fourier(&sg.spec, h).into_values() };
            levels.iter().map(|&j| basis.scaling_from_spectrum(&input, j)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeScalingField { grid: *tg, n: sg.spec.n(), levels, data })
}
