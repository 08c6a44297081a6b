use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SemigroupSpec, TimeCoeffField, TimeGrid};
use crate::error::{param, OscilletError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::spectral::signed_freq;
use crate::wavelet::{MeyerWindow, WaveletBasis};

const LOWER: f64 = 2.0 * PI / 3.0;
const MIDDLE: f64 = 4.0 * PI / 3.0;
const UPPER: f64 = 8.0 * PI / 3.0;
/// Simpson panels per smooth piece of the profile.
const PANELS: usize = 4096;
/// Largest tolerated `max |Q(ξ) − 1|` of the discrete reconstruction multiplier.
pub const QUADRATURE_TOLERANCE: f64 = 1e-3;
/// Radii sampled for the Calderón residual.
const MAX_RADII: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `sup |φ̂|` on `|ξ| < 2π/3`; all moments of `φ` vanish when this is zero.
    pub moment_residual: f64,
    /// `max |∫₀^∞ φ̂(t^{1/2β}ξ)² dt/t − 1|` over sampled nonzero lattice radii.
    pub calderon_residual: f64,
    pub radii_checked: usize,
    /// `C_β` with `∫₀^∞ φ̂(t^{1/2β}) e^{−t} dt/t = 1/C_β`.
    pub c_beta: f64,
}

/// Radial `φ̂(ξ) = h(|ξ|)`, `h = Ω / (2β ln 2)^{1/2}`, so that
/// `2β ∫₀^∞ h(u)² du/u = 1` and every moment of `φ` vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedFamily {
    pub beta: f64,
    pub window: MeyerWindow,
    pub c_beta: f64,
    pub report: AdmissibilityReport,
}

fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Distinct squared lattice radii `Σ ℓ_d²` of a grid, ascending.
fn lattice_radii_sq(spec: &GridSpec) -> Vec<u64> {
    let side = spec.side();
    let n = spec.n();
    let axis: Vec<u64> = (0..side).map(|b| signed_freq(b, side).unsigned_abs().pow(2)).collect();
    let mut out: Vec<u64> = (0..spec.len())
        .map(|mut b| {
            let mut m = 0;
            for _ in 0..n {
                m += axis[b % side];
                b /= side;
            }
            m
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn bin_radii_sq(spec: &GridSpec) -> Vec<u64> {
    let side = spec.side();
    let n = spec.n();
    (0..spec.len())
        .map(|mut b| {
            let mut m = 0;
            for _ in 0..n {
                m += signed_freq(b % side, side).unsigned_abs().pow(2);
                b /= side;
            }
            m
        })
        .collect()
}

impl CalibratedFamily {
    /// Builds the family and checks its admissibility on the lattice of `spec`.
    pub fn new(beta: f64, window: MeyerWindow, spec: &GridSpec) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return param(format!("fractional order β={beta} must be positive"));
        }
        let mut cf = CalibratedFamily {
            beta,
            window,
            c_beta: f64::NAN,
            report: AdmissibilityReport { moment_residual: 0.0, calderon_residual: 0.0, radii_checked: 0, c_beta: 0.0 },
        };
        let g = |s: f64| cf.profile(s) * (-s.powf(2.0 * beta)).exp() / s;
        let inv = 2.0 * beta * (simpson(LOWER, MIDDLE, PANELS, g) + simpson(MIDDLE, UPPER, PANELS, g));
        if !(inv > 0.0 && inv.is_finite()) {
            return Err(OscilletError::Construction(format!("calibration integral {inv} is not positive")));
        }
        cf.c_beta = 1.0 / inv;
        cf.report = cf.admissibility(spec);
        Ok(cf)
    }

    pub fn standard(beta: f64, spec: &GridSpec) -> Result<Self> {
        CalibratedFamily::new(beta, MeyerWindow::default(), spec)
    }

    /// `h(s) = φ̂` at radius `s`.
    pub fn profile(&self, s: f64) -> f64 {
        self.window.omega(s) / (2.0 * self.beta * LN_2).sqrt()
    }

    fn admissibility(&self, spec: &GridSpec) -> AdmissibilityReport {
        let moment_residual = (0..=1000)
            .map(|i| self.profile(LOWER * i as f64 / 1000.0 * (1.0 - 1e-12)).abs())
            .fold(0.0, f64::max);
        let radii = lattice_radii_sq(spec);
        let nonzero: Vec<u64> = radii.into_iter().filter(|&m| m > 0).collect();
        let stride = nonzero.len().div_ceil(MAX_RADII).max(1);
        let mut picked: Vec<u64> = nonzero.iter().copied().step_by(stride).collect();
        if let Some(&last) = nonzero.last() {
            if picked.last() != Some(&last) {
                picked.push(last);
            }
        }
        let two_beta = 2.0 * self.beta;
        let calderon_residual = picked
            .iter()
            .map(|&m| {
                let r = 2.0 * PI * (m as f64).sqrt();
                // ∫ φ̂(t^{1/2β} r)² dt/t in the variable ln t over the support of φ̂.
                let lo = two_beta * (LOWER / r).ln();
                let mid = two_beta * (MIDDLE / r).ln();
                let hi = two_beta * (UPPER / r).ln();
                let g = |lt: f64| self.profile((lt / two_beta).exp() * r).powi(2);
                (simpson(lo, mid, PANELS, g) + simpson(mid, hi, PANELS, g) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        AdmissibilityReport { moment_residual, calderon_residual, radii_checked: picked.len(), c_beta: self.c_beta }
    }

    /// `Q(r) = C_β Σ_ℓ w_ℓ h(t_ℓ^{1/2β} r) e^{−t_ℓ r^{2β}}`, the discrete multiplier of
    /// `π_φ` applied to a heat lift; equal to 1 for exact quadrature.
    pub fn lift_multiplier(&self, tg: &TimeGrid, r: f64) -> f64 {
        let w = tg.weight();
        let inv = 1.0 / (2.0 * self.beta);
        let r2b = r.powf(2.0 * self.beta);
        self.c_beta
            * (0..tg.len)
                .map(|l| {
                    let t = tg.node(l);
                    self.profile(t.powf(inv) * r) * (-t * r2b).exp()
                })
                .sum::<f64>()
            * w
    }

    /// `max |Q(ξ) − 1|` over nonzero lattice frequencies of `spec`.
    pub fn lift_residual(&self, spec: &GridSpec, tg: &TimeGrid) -> f64 {
        self.residual_over(lattice_radii_sq(spec), tg)
    }

    fn residual_over(&self, radii_sq: impl IntoIterator<Item = u64>, tg: &TimeGrid) -> f64 {
        radii_sq
            .into_iter()
            .filter(|&m| m > 0)
            .map(|m| (self.lift_multiplier(tg, 2.0 * PI * (m as f64).sqrt()) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub f: GridFunction,
    /// `max |Q(ξ) − 1|` of the heat-lift multiplier on this time grid, over the frequencies
    /// carried by the input.
    pub multiplier_residual: f64,
    pub warning: Option<String>,
}

fn finish(
    cf: &CalibratedFamily,
    spec: &GridSpec,
    tg: &TimeGrid,
    bank: &crate::spectral::FftBank,
    (acc, support): (Vec<Complex64>, Vec<u64>),
) -> Reconstruction {
    let multiplier_residual = cf.residual_over(support, tg);
    let warning = (multiplier_residual > QUADRATURE_TOLERANCE).then(|| {
        format!(
            "time grid [{:.3e}, {:.3e}] with {} nodes leaves quadrature residual {multiplier_residual:.3e}",
            tg.t_min, tg.t_max, tg.len
        )
    });
    Reconstruction { f: bank.from_fourier(spec, acc), multiplier_residual, warning }
}

/// Accumulates `C_β w_ℓ h(t_ℓ^{1/2β}|ξ|) F̂_ℓ(ξ)` over nodes given bin-indexed spectra, and
/// the distinct squared radii where some `F̂_ℓ` is non-negligible.
fn accumulate(
    cf: &CalibratedFamily,
    spec: &GridSpec,
    tg: &TimeGrid,
    spectra: impl Iterator<Item = Result<Vec<Complex64>>>,
) -> Result<(Vec<Complex64>, Vec<u64>)> {
    let radii_sq = bin_radii_sq(spec);
    let radii: Vec<f64> = radii_sq.iter().map(|&m| 2.0 * PI * (m as f64).sqrt()).collect();
    let mut peak = vec![0.0f64; spec.len()];
    let inv = 1.0 / (2.0 * cf.beta);
    let scale = cf.c_beta * tg.weight();
    let mut acc = vec![Complex64::new(0.0, 0.0); spec.len()];
    for (l, fh) in spectra.enumerate() {
        let fh = fh?;
        let tb = tg.node(l).powf(inv);
        for (p, v) in peak.iter_mut().zip(&fh) {
            *p = p.max(v.norm());
        }
        for ((a, v), r) in acc.iter_mut().zip(&fh).zip(&radii) {
            let h = cf.profile(tb * r);
            if h != 0.0 {
                *a += v * (scale * h);
            }
        }
    }
    let top = peak.iter().copied().fold(0.0, f64::max);
    let mut support: Vec<u64> =
        radii_sq.into_iter().zip(&peak).filter(|(_, &p)| p > 1e-13 * top).map(|(m, _)| m).collect();
    support.sort_unstable();
    support.dedup();
    Ok((acc, support))
}

/// `π_φ F = C_β ∫₀^∞ F(t,·) * φ^β_t dt/t` on the nodes of `tg`; `φ^β_t` has transform
/// `φ̂(t^{1/2β}ξ)`. The zero frequency is annihilated since `φ` has vanishing moments.
pub fn pi_phi(cf: &CalibratedFamily, tg: &TimeGrid, slices: &[GridFunction]) -> Result<Reconstruction> {
    let Some(first) = slices.first() else {
        return param("reconstruction needs at least one time slice");
    };
    let spec = *first.spec();
    if slices.len() != tg.len || slices.iter().any(|s| *s.spec() != spec) {
        return Err(OscilletError::Shape("time slices do not match the time grid or each other".into()));
    }
    let bank = crate::spectral::FftBank::new(spec.resolution());
    let acc = accumulate(cf, &spec, tg, slices.iter().map(|s| Ok(bank.fourier_coefficients(s))))?;
    Ok(finish(cf, &spec, tg, &bank, acc))
}

/// [`pi_phi`] for a field given by its wavelet coefficients at each node.
pub fn pi_phi_field(cf: &CalibratedFamily, basis: &WaveletBasis, tcf: &TimeCoeffField) -> Result<Reconstruction> {
    if (tcf.beta - cf.beta).abs() > 1e-15 {
        return param(format!("field β={} differs from family β={}", tcf.beta, cf.beta));
    }
    let spec = *basis.spec();
    let acc = accumulate(cf, &spec, &tcf.grid, tcf.slices().iter().map(|s| basis.synthesize_spectrum(s)))?;
    Ok(finish(cf, &spec, &tcf.grid, basis.bank(), acc))
}

/// `C_β ∫₀^∞ h(t^{1/2β} r) e^{−t r^{2β}} dt/t` by Simpson quadrature in `ln t`; equals 1 for
/// every `r > 0`.
pub fn single_mode_identity(cf: &CalibratedFamily, r: f64) -> f64 {
    let two_beta = 2.0 * cf.beta;
    let g = |lt: f64| {
        let t = lt.exp();
        cf.profile((lt / two_beta).exp() * r) * (-t * r.powf(two_beta)).exp()
    };
    let lo = two_beta * (LOWER / r).ln();
    let mid = two_beta * (MIDDLE / r).ln();
    let hi = two_beta * (UPPER / r).ln();
    cf.c_beta * (simpson(lo, mid, PANELS, g) + simpson(mid, hi, PANELS, g))
}

impl SemigroupSpec {
    /// Heat snapshots `e^{−t_ℓ(−Δ)^β} f` at every node.
    pub fn lift(&self, f: &GridFunction, tg: &TimeGrid) -> Result<Vec<GridFunction>> {
        tg.nodes().into_iter().map(|t| super::heat_apply(self, f, t)).collect()
    }
}
