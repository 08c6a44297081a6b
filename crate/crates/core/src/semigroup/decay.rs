use serde::{Deserialize, Serialize};

use super::{heat_spectrum, SemigroupSpec, TimeCoeffField};
use crate::error::{param, OscilletError, Result};
use crate::grid::unflatten_side;
use crate::wavelet::{CoeffField, WaveletBasis, WaveletIndex};

/// Candidate exponential rates `c̃ ∈ {0.05, 0.10, …, 2.00}`.
pub const DEFAULT_C_GRID: [f64; 40] = {
    let mut g = [0.0; 40];
    let mut i = 0;
    while i < 40 {
        g[i] = 0.05 * (i + 1) as f64;
        i += 1;
    }
    g
};
/// A maximal ratio above this is treated as unbounded.
pub const FINITE_RATIO: f64 = 1e6;
/// Inter-level band of the coupling sums.
const BAND: i64 = 3;
/// Relative spread of `max R₁` across resolutions accepted as stable.
pub const STABLE_SPREAD: f64 = 0.2;
/// Coefficients below this fraction of the largest source magnitude count as zero.
const NOISE: f64 = 1e-12;

/// Per-level tables `Σ_{|j−j′|≤3} Σ_{k′} m_{j′,k′} (1+|2^{j−j′}k′ − k|)^{−N}` for every
/// detail level `j` and position `k`, with periodic distances at level `j`.
fn coupling_table(c_src: &[Vec<f64>], j_min: u32, n: usize, big_n: f64) -> Vec<Vec<f64>> {
    let levels = c_src.len();
    (0..levels)
        .map(|ji| {
            let j = j_min + ji as u32;
            let side = 1usize << j;
            let period = side as f64;
            let mut out = vec![0.0; side.pow(n as u32)];
            let targets: Vec<Vec<usize>> = (0..out.len()).map(|k| unflatten_side(k, side, n)).collect();
            for (jpi, src) in c_src.iter().enumerate() {
                let jp = j_min + jpi as u32;
                if (jp as i64 - j as i64).abs() > BAND {
                    continue;
                }
                let src_side = 1usize << jp;
                let factor = (j as f64 - jp as f64).exp2();
                for (kf, &m) in src.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let kp: Vec<f64> = unflatten_side(kf, src_side, n).iter().map(|&v| v as f64 * factor).collect();
                    for (o, k) in out.iter_mut().zip(&targets) {
                        let mut d2 = 0.0;
                        for d in 0..n {
                            let diff = kp[d] - k[d] as f64;
                            let w = diff - period * (diff / period).round();
                            d2 += w * w;
                        }
                        *o += m * (1.0 + d2.sqrt()).powf(-big_n);
                    }
                }
            }
            out
        })
        .collect()
}

/// `Σ_ε |c^ε_{j,k}|` per detail level and position.
fn detail_magnitudes(c: &CoeffField) -> Vec<Vec<f64>> {
    let spec = c.spec();
    let layout = c.layout();
    (spec.j_min()..spec.resolution())
        .map(|j| {
            let mut m = vec![0.0; layout.block_len(j)];
            for eps in 1..=layout.types() {
                for (v, a) in m.iter_mut().zip(c.block(j, eps)) {
                    *v += a.norm();
                }
            }
            m
        })
        .collect()
}

fn check_exponent(big_n: f64) -> Result<()> {
    if !(big_n > 0.0 && big_n.is_finite()) {
        return param(format!("localization exponent N={big_n} must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub beta: f64,
    pub localization: f64,
    pub resolution: u32,
    pub c_grid: Vec<f64>,
    /// `max R₁` over `t 2^{2βj} >= 1` for each candidate `c̃`, capped at `f64::MAX`.
    pub max_r1: Vec<f64>,
    /// `max R₂` over `t 2^{2βj} < 1`.
    pub max_r2: f64,
    /// Largest `c̃` with `max R₁ <= FINITE_RATIO`.
    pub fitted_c: Option<f64>,
    /// Indices with a nonzero coefficient and a vanishing coupling sum.
    pub violations: usize,
    pub samples_r1: usize,
    pub samples_r2: usize,
}

impl DecayReport {
    pub fn r1_at(&self, c: f64) -> Option<f64> {
        self.c_grid.iter().position(|&g| (g - c).abs() < 1e-12).map(|i| self.max_r1[i])
    }
}

/// Ratios of `|a^ε_{j,k}(t)|` to the coupling sums of the initial coefficients, with the
/// factor `e^{−c̃ t2^{2jβ}}` in the regime `t2^{2jβ} >= 1`.
pub fn check_decay_bounds(tcf: &TimeCoeffField, c0: &CoeffField, big_n: f64, c_grid: &[f64]) -> Result<DecayReport> {
    check_exponent(big_n)?;
    if c0.spec() != tcf.spec() {
        return Err(OscilletError::Shape("initial coefficients and time field use different grids".into()));
    }
    if c_grid.iter().any(|c| !(*c > 0.0)) {
        return param("decay rates must be positive");
    }
    let spec = *c0.spec();
    let layout = c0.layout();
    let beta = tcf.beta;
    let mags = detail_magnitudes(c0);
    let floor = NOISE * mags.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let table = coupling_table(&mags, spec.j_min(), spec.n(), big_n);
    let mut log_r1 = vec![f64::NEG_INFINITY; c_grid.len()];
    let mut max_r2: f64 = 0.0;
    let (mut violations, mut samples_r1, mut samples_r2) = (0, 0, 0);
    for (l, slice) in tcf.slices().iter().enumerate() {
        let t = tcf.grid.node(l);
        for j in spec.j_min()..spec.resolution() {
            let s = t * (2.0 * beta * j as f64).exp2();
            let row = &table[(j - spec.j_min()) as usize];
            for eps in 1..=layout.types() {
                for (k, a) in slice.block(j, eps).iter().enumerate() {
                    let a = a.norm();
                    if a <= floor {
                        continue;
                    }
                    let d = row[k];
                    if d <= 0.0 {
                        violations += 1;
                        continue;
                    }
                    if s >= 1.0 {
                        samples_r1 += 1;
                        let base = a.ln() - d.ln();
                        for (lr, c) in log_r1.iter_mut().zip(c_grid) {
                            *lr = lr.max(base + c * s);
                        }
                    } else {
                        samples_r2 += 1;
                        max_r2 = max_r2.max(a / d);
                    }
                }
            }
        }
    }
    let max_r1: Vec<f64> = log_r1.iter().map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { l.exp().min(f64::MAX) }).collect();
    let fitted_c = c_grid
        .iter()
        .zip(&max_r1)
        .filter(|(_, &r)| r <= FINITE_RATIO)
        .map(|(&c, _)| c)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
    Ok(DecayReport {
        beta,
        localization: big_n,
        resolution: spec.resolution(),
        c_grid: c_grid.to_vec(),
        max_r1,
        max_r2,
        fitted_c,
        violations,
        samples_r1,
        samples_r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Largest `c̃` whose `max R₁` is finite at every resolution and varies by less than 20%.
    pub c_tilde: Option<f64>,
    pub resolutions: Vec<u32>,
    /// `max R₁` at `c_tilde` per resolution.
    pub ratios: Vec<f64>,
    /// Largest signed relative increase of `max R₁` per unit J.
    pub growth: f64,
    /// `max/min − 1` of the ratios at `c_tilde`.
    pub spread: f64,
}

fn spread_of(vals: &[f64]) -> f64 {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(0.0, f64::max);
    if lo > 0.0 { hi / lo - 1.0 } else if hi == 0.0 { 0.0 } else { f64::INFINITY }
}

fn signed_growth(res: &[u32], vals: &[f64]) -> f64 {
    res.windows(2)
        .zip(vals.windows(2))
        .map(|(r, v)| {
            let dj = (r[1] as f64 - r[0] as f64).max(1.0);
            if v[0] == 0.0 {
                if v[1] == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                (v[1] / v[0]).powf(1.0 / dj) - 1.0
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Picks `c̃` across reports at increasing resolutions sharing one rate grid.
pub fn fit_decay_constant(reports: &[DecayReport]) -> Result<DecayFit> {
    let Some(first) = reports.first() else {
        return param("decay fit needs at least one report");
    };
    if reports.iter().any(|r| r.c_grid != first.c_grid) {
        return param("decay reports use different rate grids");
    }
    let mut sorted: Vec<&DecayReport> = reports.iter().collect();
    sorted.sort_by_key(|r| r.resolution);
    let resolutions: Vec<u32> = sorted.iter().map(|r| r.resolution).collect();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for (i, &c) in first.c_grid.iter().enumerate() {
        let vals: Vec<f64> = sorted.iter().map(|r| r.max_r1[i]).collect();
        let growth = if vals.len() > 1 { signed_growth(&resolutions, &vals) } else { 0.0 };
        if vals.iter().all(|&v| v <= FINITE_RATIO) && spread_of(&vals) < STABLE_SPREAD {
            best = Some((c, vals, growth));
        }
    }
    Ok(match best {
        Some((c, ratios, growth)) => {
            let spread = spread_of(&ratios);
            DecayFit { c_tilde: Some(c), resolutions, ratios, growth: growth.max(0.0), spread }
        }
        None => DecayFit { c_tilde: None, resolutions, ratios: Vec::new(), growth: f64::INFINITY, spread: f64::INFINITY },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamLevel {
    pub level: u32,
    /// `max R₂` just below the seam.
    pub below: f64,
    /// `max R₁` just above the seam.
    pub above: f64,
    /// `|above − e^{c̃ s₊} below| / above`.
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamReport {
    pub c_tilde: f64,
    pub offset: f64,
    pub levels: Vec<SeamLevel>,
    pub max_defect: f64,
    pub continuous: bool,
}

/// Evaluates both ratio branches on level `j` at `t = 2^{−2βj}(1 ∓ δ)` and checks that they
/// differ only by the exponential factor.
pub fn seam_continuity(
    sg: &SemigroupSpec,
    basis: &WaveletBasis,
    c0: &CoeffField,
    big_n: f64,
    c_tilde: f64,
) -> Result<SeamReport> {
    check_exponent(big_n)?;
    let spec = sg.spec;
    if *c0.spec() != spec || *basis.spec() != spec {
        return Err(OscilletError::Shape("seam check grids differ".into()));
    }
    let delta = 1e-7;
    let mags = detail_magnitudes(c0);
    let floor = NOISE * mags.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let table = coupling_table(&mags, spec.j_min(), spec.n(), big_n);
    let fh = basis.bank().fourier_coefficients(&basis.synthesize(c0)?);
    let symbol = sg.symbol();
    let layout = c0.layout();
    let mut levels = Vec::new();
    for j in spec.j_min()..spec.resolution() {
        let t0 = (-2.0 * sg.beta * j as f64).exp2();
        let branch = |t: f64| -> f64 {
            let c = basis.analyze_spectrum(&heat_spectrum(&symbol, &fh, t));
            let row = &table[(j - spec.j_min()) as usize];
            (1..=layout.types())
                .flat_map(|eps| c.block(j, eps).iter().zip(row).map(|(a, d)| (a.norm(), *d)).collect::<Vec<_>>())
                .filter(|(a, d)| *a > floor && *d > 0.0)
                .map(|(a, d)| a / d)
                .fold(0.0, f64::max)
        };
        let below = branch(t0 * (1.0 - delta));
        let s_above = 1.0 + delta;
        let above = branch(t0 * s_above) * (c_tilde * s_above).exp();
        if below == 0.0 && above == 0.0 {
            continue;
        }
        let defect = (above - (c_tilde * s_above).exp() * below).abs() / above.max(f64::MIN_POSITIVE);
        levels.push(SeamLevel { level: j, below, above, defect });
    }
    let max_defect = levels.iter().map(|l| l.defect).fold(0.0, f64::max);
    Ok(SeamReport { c_tilde, offset: delta, levels, max_defect, continuous: max_defect < 1e-4 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualBoundReport {
    pub localization: f64,
    /// `max |a^ε_{j,k}| / B_{j,k}`.
    pub max_ratio: f64,
    pub argmax: Option<WaveletIndex>,
    pub violations: usize,
    /// Share of the time-integrand mass on nodes with `|log₂(t 2^{2j′β})| <= 1`.
    pub time_localization: f64,
}

/// Compares reconstructed coefficients with
/// `B = Σ_{|j−j′|≤3} ∫ (max{s′, 1/s′})^{−N} Σ_{ε′,k′} |a^{ε′}_{j′,k′}(t)| (1+|2^{j−j′}k′−k|)^{−N} dt/t`,
/// `s′ = t 2^{2j′β}`.
pub fn check_dual_bound(c_rec: &CoeffField, tcf: &TimeCoeffField, big_n: f64) -> Result<DualBoundReport> {
    check_exponent(big_n)?;
    if c_rec.spec() != tcf.spec() {
        return Err(OscilletError::Shape("reconstruction and time field use different grids".into()));
    }
    let spec = *c_rec.spec();
    let beta = tcf.beta;
    let w = tcf.grid.weight();
    // The time integral factors out of the spatial coupling.
    let mut integrated: Vec<Vec<f64>> = detail_magnitudes(c_rec).iter().map(|m| vec![0.0; m.len()]).collect();
    let (mut local, mut total) = (0.0, 0.0);
    for (l, slice) in tcf.slices().iter().enumerate() {
        let t = tcf.grid.node(l);
        for (ji, (acc, m)) in integrated.iter_mut().zip(detail_magnitudes(slice)).enumerate() {
            let j = spec.j_min() + ji as u32;
            let s = t * (2.0 * beta * j as f64).exp2();
            let weight = w * s.max(1.0 / s).powf(-big_n);
            let mass: f64 = m.iter().sum::<f64>() * weight;
            total += mass;
            if s.log2().abs() <= 1.0 {
                local += mass;
            }
            for (a, v) in acc.iter_mut().zip(m) {
                *a += weight * v;
            }
        }
    }
    let table = coupling_table(&integrated, spec.j_min(), spec.n(), big_n);
    let floor = NOISE * c_rec.detail_max_abs();
    let layout = c_rec.layout();
    let mut max_ratio: f64 = 0.0;
    let mut argmax = None;
    let mut violations = 0;
    for j in spec.j_min()..spec.resolution() {
        let row = &table[(j - spec.j_min()) as usize];
        for eps in 1..=layout.types() {
            for (k, a) in c_rec.block(j, eps).iter().enumerate() {
                let a = a.norm();
                if a <= floor {
                    continue;
                }
                if row[k] <= 0.0 {
                    violations += 1;
                    continue;
                }
                let r = a / row[k];
                if r > max_ratio {
                    max_ratio = r;
                    argmax = Some(WaveletIndex::new(eps, j, unflatten_side(k, 1 << j, spec.n())));
                }
            }
        }
    }
    Ok(DualBoundReport {
        localization: big_n,
        max_ratio,
        argmax,
        violations,
        time_localization: if total > 0.0 { local / total } else { 0.0 },
    })
}
