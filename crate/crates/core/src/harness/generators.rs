use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, OscilletError, Result};
use crate::grid::{flatten_side, GridFunction};
use crate::norms::{tlm_wavelet_norm, SpaceParams};
use crate::spectral::{for_each_frequency, signed_freq};
use crate::wavelet::{CoeffField, WaveletBasis, WaveletIndex};

/// Relative tolerance on a prescribed norm.
pub const NORM_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Gaussian detail coefficients with variance `2^{−j(2γ₁+n)}`.
    #[default]
    RandomCoeffInBall,
    /// Random phases on a Gaussian shell `|ℓ| ≈ radius` of integer frequencies.
    FourierBump { radius: f64, width: f64 },
    /// Periodized Gaussian of standard deviation `width` at a random center.
    SmoothBump { width: f64 },
    /// Polynomials on the torus; only degree 0 is periodic.
    Polynomial { degree: usize },
    /// One wavelet at the given level and a random position.
    AdversarialSingleCube { level: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub generator: GeneratorKind,
    pub space: SpaceParams,
    /// Prescribed sequence norm; `None` keeps the raw amplitude.
    pub target_norm: Option<f64>,
    pub seed: u64,
}

/// Stream key of a wavelet index; independent of the resolution.
pub(crate) fn index_stream(idx: &WaveletIndex) -> u64 {
    let flat = flatten_side(&idx.position, 1 << idx.level) as u64;
    (idx.level as u64) << 48 | (idx.eps as u64) << 40 | flat
}

fn keyed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Real detail coefficients keyed per index, so coarser resolutions see the same values.
pub fn random_coefficients(basis: &WaveletBasis, gamma1: f64, seed: u64) -> CoeffField {
    let spec = *basis.spec();
    let n = spec.n() as f64;
    let mut c = CoeffField::zeros(spec, basis.family());
    let layout = c.layout();
    for flat in layout.detail_start()..layout.total() {
        let idx = layout.decode(flat);
        let z: f64 = StandardNormal.sample(&mut keyed_rng(seed, index_stream(&idx)));
        let sd = (-(idx.level as f64) * (gamma1 + n / 2.0)).exp2();
        c.data_mut()[flat] = Complex64::new(z * sd, 0.0);
    }
    c
}

fn fourier_bump(basis: &WaveletBasis, radius: f64, width: f64, seed: u64) -> Result<GridFunction> {
    let spec = *basis.spec();
    if !(radius >= 0.0 && width > 0.0) {
        return param("Fourier bump needs radius >= 0 and width > 0");
    }
    let nyquist = (spec.side() / 2) as f64;
    if radius + 4.0 * width >= nyquist {
        return param(format!("Fourier bump radius {radius} ± 4·{width} exceeds the grid band {nyquist}"));
    }
    let side = spec.side();
    let n = spec.n();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); spec.len()];
    for_each_frequency(&spec, |b, _| {
        let mut rest = b;
        let mut key = 0u64;
        let mut r2 = 0.0;
        for _ in 0..n {
            let l = signed_freq(rest % side, side);
            rest /= side;
            key = key << 21 | (l + (1 << 20)) as u64;
            r2 += (l * l) as f64;
        }
        let amp = (-(r2.sqrt() - radius).powi(2) / (2.0 * width * width)).exp();
        if amp > 1e-300 {
            let phase: f64 = keyed_rng(seed, key).random_range(0.0..std::f64::consts::TAU);
            coeffs[b] = Complex64::from_polar(amp, phase);
        }
    });
    let f = basis.bank().from_fourier(&spec, coeffs);
    let re: Vec<f64> = f.values().iter().map(|v| v.re).collect();
    GridFunction::from_real(spec, &re)
}

fn smooth_bump(basis: &WaveletBasis, width: f64, seed: u64) -> Result<GridFunction> {
    if !(width > 0.0 && width < 0.25) {
        return param("smooth bump width must lie in (0, 1/4)");
    }
    let spec = *basis.spec();
    let mut rng = keyed_rng(seed, 0);
    let center: Vec<f64> = (0..spec.n()).map(|_| rng.random_range(0.0..1.0)).collect();
    Ok(GridFunction::from_fn(spec, |x| {
        // Periodic distance; the Gaussian tail beyond half a period is below 1e-34.
        let d2: f64 = x
            .iter()
            .zip(&center)
            .map(|(a, c)| {
                let d = (a - c).rem_euclid(1.0);
                d.min(1.0 - d).powi(2)
            })
            .sum();
        Complex64::new((-d2 / (2.0 * width * width)).exp(), 0.0)
    }))
}

fn single_cube(basis: &WaveletBasis, level: u32, seed: u64) -> Result<GridFunction> {
    let spec = *basis.spec();
    if level < spec.j_min() || level >= spec.resolution() {
        return param(format!("single-cube level {level} outside {}..{}", spec.j_min(), spec.resolution()));
    }
    let mut rng = keyed_rng(seed, 0);
    let position: Vec<usize> = (0..spec.n()).map(|_| rng.random_range(0..1usize << level)).collect();
    let eps = rng.random_range(1..=basis.layout().types());
    let mut c = CoeffField::zeros(spec, basis.family());
    c.set(&WaveletIndex::new(eps, level, position), Complex64::new(1.0, 0.0))?;
    basis.synthesize(&c)
}

/// Deterministic test function; with a target, rescaled so the sequence norm matches within 1%.
pub fn generate_test_function(tfs: &TestFunctionSpec, basis: &WaveletBasis) -> Result<GridFunction> {
    tfs.space.validate()?;
    if let Some(t) = tfs.target_norm {
        if !(t >= 0.0 && t.is_finite()) {
            return param(format!("target norm {t} must be finite and non-negative"));
        }
    }
    let spec = *basis.spec();
    let raw = match &tfs.generator {
        GeneratorKind::RandomCoeffInBall => basis.synthesize(&random_coefficients(basis, tfs.space.gamma1, tfs.seed))?,
        GeneratorKind::FourierBump { radius, width } => fourier_bump(basis, *radius, *width, tfs.seed)?,
        GeneratorKind::SmoothBump { width } => smooth_bump(basis, *width, tfs.seed)?,
        GeneratorKind::Polynomial { degree } => {
            if *degree > 0 {
                return param(format!("a polynomial of degree {degree} is not periodic on the torus"));
            }
            if tfs.target_norm.is_some_and(|t| t > 0.0) {
                return param("constants have zero detail norm; a positive target cannot be met");
            }
            let v: f64 = keyed_rng(tfs.seed, 0).random_range(-1.0..1.0);
            return Ok(GridFunction::from_fn(spec, |_| Complex64::new(v, 0.0)));
        }
        GeneratorKind::AdversarialSingleCube { level } => single_cube(basis, *level, tfs.seed)?,
    };
    let Some(target) = tfs.target_norm else {
        return Ok(raw);
    };
    let measured = tlm_wavelet_norm(&basis.analyze(&raw)?, &tfs.space)?.value;
    if measured == 0.0 {
        if target == 0.0 {
            return Ok(raw);
        }
        return param("generated function has zero detail norm; the target cannot be met");
    }
    let f = raw.scale(Complex64::new(target / measured, 0.0));
    let check = tlm_wavelet_norm(&basis.analyze(&f)?, &tfs.space)?.value;
    if target > 0.0 && (check / target - 1.0).abs() > NORM_TOLERANCE {
        return Err(OscilletError::Range(format!("rescaled norm {check} misses target {target} by more than 1%")));
    }
    Ok(f)
}
