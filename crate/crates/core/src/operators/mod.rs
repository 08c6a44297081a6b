//! Almost-diagonal operators on wavelet coefficients: the decay envelope, random matrices
//! that saturate it, sparse application, boundedness experiments and Riesz transforms.

mod riesz;

pub use riesz::{riesz_apply, riesz_coefficients, riesz_matrix, riesz_tent_experiment, RieszMatrix, RieszTentReport};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, OscilletError, Result};
use crate::grid::GridSpec;
use crate::norms::{tlm_wavelet_norm, SpaceParams};
use crate::semigroup::TimeCoeffField;
use crate::wavelet::{CoeffField, Family, Layout, WaveletIndex};

/// Periodic distance `|k2^{−j} − k′2^{−j′}|` on the torus.
pub fn cube_distance(row: &WaveletIndex, col: &WaveletIndex) -> f64 {
    let (hj, hjp) = ((-(row.level as f64)).exp2(), (-(col.level as f64)).exp2());
    row.position
        .iter()
        .zip(&col.position)
        .map(|(&k, &kp)| {
            let diff = k as f64 * hj - kp as f64 * hjp;
            let w = diff - diff.round();
            w * w
        })
        .sum::<f64>()
        .sqrt()
}

/// `2^{−|j−j′|(n/2+N₀)} ((2^{−j}+2^{−j′}) / (2^{−j}+2^{−j′}+|k2^{−j}−k′2^{−j′}|))^{n+N₀}` with
/// periodic distance on the torus.
pub fn envelope(n: usize, n0: f64, row: &WaveletIndex, col: &WaveletIndex) -> f64 {
    let (hj, hjp) = ((-(row.level as f64)).exp2(), (-(col.level as f64)).exp2());
    let dist = cube_distance(row, col);
    let nn = n as f64;
    let dj = (row.level as f64 - col.level as f64).abs();
    (-dj * (nn / 2.0 + n0)).exp2() * ((hj + hjp) / (hj + hjp + dist)).powf(nn + n0)
}

/// Sparse matrix over the flat coefficient layout, rows holding `(column, value)` sorted by
/// column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostDiagonalMatrix {
    pub spec: GridSpec,
    pub family: Family,
    /// Declared decay order `N₀`.
    pub n0: f64,
    /// Declared decay constant `C`.
    pub c: f64,
    /// Largest `|j − j′|` with stored entries; `None` for unbounded.
    pub band: Option<u32>,
    rows: Vec<Vec<(usize, Complex64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: WaveletIndex,
    pub col: WaveletIndex,
    /// `|a| / (C · envelope)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayValidation {
    /// Smallest `C` making every entry admissible.
    pub c_min: f64,
    pub violations: Vec<Violation>,
    pub entries: usize,
}

impl AlmostDiagonalMatrix {
    pub fn new(spec: GridSpec, family: Family, n0: f64, c: f64, band: Option<u32>) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) || !(c >= 0.0 && c.is_finite()) {
            return param(format!("decay order N₀={n0} must be positive and C={c} non-negative"));
        }
        let total = Layout::new(&spec).total();
        Ok(AlmostDiagonalMatrix { spec, family, n0, c, band, rows: vec![Vec::new(); total] })
    }

    pub fn identity(spec: GridSpec, family: Family) -> Self {
        let mut m = AlmostDiagonalMatrix::new(spec, family, 1.0, 1.0, Some(0)).expect("valid constants");
        for (i, r) in m.rows.iter_mut().enumerate() {
            r.push((i, Complex64::new(1.0, 0.0)));
        }
        m
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.spec)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Replaces row `i`; columns are sorted and must be unique.
    pub fn set_row(&mut self, i: usize, mut entries: Vec<(usize, Complex64)>) -> Result<()> {
        let dim = self.dim();
        if i >= dim || entries.iter().any(|e| e.0 >= dim) {
            return Err(OscilletError::Index(format!("row {i} or its columns exceed dimension {dim}")));
        }
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(OscilletError::Index(format!("row {i} repeats a column")));
        }
        self.rows[i] = entries;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map(|p| self.rows[i][p].1)
            .unwrap_or_default()
    }

    /// All stored entries as `(row, column, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }

    /// Envelope value (with `C = 1`) for a stored position; scaling indices count as level
    /// `j_min` cubes.
    pub fn unit_envelope(&self, i: usize, j: usize) -> f64 {
        let layout = self.layout();
        envelope(self.spec.n(), self.n0, &layout.decode(i), &layout.decode(j))
    }
}

pub fn validate_decay(mat: &AlmostDiagonalMatrix) -> DecayValidation {
    let layout = mat.layout();
    let n = mat.spec.n();
    let mut c_min: f64 = 0.0;
    let mut violations = Vec::new();
    let mut entries = 0;
    for (i, row) in mat.rows.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        let ri = layout.decode(i);
        for &(j, v) in row {
            entries += 1;
            let ci = layout.decode(j);
            let env = envelope(n, mat.n0, &ri, &ci);
            let ratio = v.norm() / env;
            c_min = c_min.max(ratio);
            if ratio > mat.c * (1.0 + 1e-12) {
                violations.push(Violation { row: ri.clone(), col: ci, excess: if mat.c > 0.0 { ratio / mat.c } else { f64::INFINITY } });
            }
        }
    }
    DecayValidation { c_min, violations, entries }
}

pub fn apply_matrix(mat: &AlmostDiagonalMatrix, c: &CoeffField) -> Result<CoeffField> {
    if *c.spec() != mat.spec {
        return Err(OscilletError::Index("coefficient field and matrix index different bands".into()));
    }
    let src = c.data();
    let out: Vec<Complex64> = mat.rows.iter().map(|r| r.iter().map(|&(j, v)| v * src[j]).sum()).collect();
    CoeffField::from_data(mat.spec, c.family(), out)
}

/// Applies the matrix to every time slice.
pub fn apply_matrix_time(mat: &AlmostDiagonalMatrix, tcf: &TimeCoeffField) -> Result<TimeCoeffField> {
    tcf.map_slices(|s| apply_matrix(mat, s))
}

/// Generator settings for random almost-diagonal matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CzoGenerator {
    pub n0: f64,
    pub c: f64,
    /// Largest `|j − j′|`; `None` couples every pair of levels.
    pub band: Option<u32>,
    /// Fraction of entries set exactly on the envelope.
    pub rho: f64,
    /// Spatial window `|k2^{−j} − k′2^{−j′}| <= window · 2^{−min(j,j′)}`.
    pub window: f64,
    /// Entries with `j > j′` are multiplied by `2^{λ n (j−j′)}`; zero keeps the envelope.
    pub oversaturation: f64,
}

impl CzoGenerator {
    pub fn admissible(n0: f64, c: f64) -> Self {
        CzoGenerator { n0, c, band: Some(4), rho: 0.1, window: 8.0, oversaturation: 0.0 }
    }

    /// Slowly decaying control whose coarse-to-fine entries exceed the envelope.
    pub fn violating() -> Self {
        CzoGenerator { n0: 0.2, c: 1.0, band: None, rho: 0.1, window: 8.0, oversaturation: 1.5 }
    }
}

/// Row key independent of the resolution, so rows agree across `J` on shared indices.
fn row_stream(idx: &WaveletIndex, side: usize) -> u64 {
    let flat = crate::grid::flatten_side(&idx.position, side) as u64;
    ((idx.level as u64) << 48) | ((idx.eps as u64) << 40) | flat
}

/// Positions `k′` at level `j′` within the spatial window of `(j, k)`, per axis.
fn window_positions(k: usize, j: u32, jp: u32, window: f64) -> Vec<usize> {
    let side = 1i64 << jp;
    let centre = k as f64 * (jp as f64 - j as f64).exp2();
    let radius = window * (jp as f64 - j.min(jp) as f64).exp2();
    let lo = (centre - radius).ceil() as i64;
    let hi = (centre + radius).floor() as i64;
    let mut out: Vec<usize> = (lo..=hi).map(|v| v.rem_euclid(side) as usize).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Draws detail-to-detail entries `u · C · envelope` with `u ~ U[−1,1]`, replaced by
/// `sign(u) · C · envelope` with probability `ρ`.
pub fn generate_random_czo(spec: GridSpec, family: Family, g: &CzoGenerator, seed: u64) -> Result<AlmostDiagonalMatrix> {
    if !(g.rho >= 0.0 && g.rho <= 1.0) || !(g.window > 0.0) || !g.oversaturation.is_finite() {
        return param("generator needs ρ in [0,1], positive window and finite oversaturation");
    }
    let mut mat = AlmostDiagonalMatrix::new(spec, family, g.n0, g.c, g.band)?;
    if g.c == 0.0 {
        return Ok(mat);
    }
    let layout = mat.layout();
    let n = spec.n();
    for row_block in layout.blocks().into_iter().filter(|b| b.eps != 0) {
        let j = row_block.level;
        for kf in 0..layout.block_len(j) {
            let row = WaveletIndex::new(row_block.eps, j, crate::grid::unflatten_side(kf, 1 << j, n));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row_stream(&row, 1 << j));
            let mut entries = Vec::new();
            for jp in spec.j_min()..spec.resolution() {
                if g.band.is_some_and(|b| (j as i64 - jp as i64).unsigned_abs() > b as u64) {
                    continue;
                }
                let axes: Vec<Vec<usize>> = row.position.iter().map(|&k| window_positions(k, j, jp, g.window)).collect();
                let boost = if j > jp { (g.oversaturation * n as f64 * (j - jp) as f64).exp2() } else { 1.0 };
                let reach = g.window * (-(j.min(jp) as f64)).exp2() * (1.0 + 1e-12);
                let mut pos = vec![0usize; n];
                let count: usize = axes.iter().map(Vec::len).product();
                for c in 0..count {
                    let mut rest = c;
                    for d in (0..n).rev() {
                        pos[d] = axes[d][rest % axes[d].len()];
                        rest /= axes[d].len();
                    }
                    if n > 1 && cube_distance(&row, &WaveletIndex::new(1, jp, pos.clone())) > reach {
                        continue;
                    }
                    for eps in 1..=layout.types() {
                        let col = WaveletIndex::new(eps, jp, pos.clone());
                        let u: f64 = rng.random_range(-1.0..=1.0);
                        let saturate = rng.random::<f64>() < g.rho;
                        let scale = if saturate { u.signum() } else { u };
                        let v = scale * g.c * boost * envelope(n, g.n0, &row, &col);
                        if v != 0.0 {
                            entries.push((layout.encode(&col)?, Complex64::new(v, 0.0)));
                        }
                    }
                }
            }
            mat.set_row(layout.encode(&row)?, entries)?;
        }
    }
    Ok(mat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRatio {
    pub resolution: u32,
    pub sample: usize,
    pub input: f64,
    pub output: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub label: String,
    pub norm: String,
    pub samples: Vec<SampleRatio>,
    /// `(J, max ratio)` in ascending `J`.
    pub per_resolution: Vec<(u32, f64)>,
    pub max_ratio: f64,
    /// Fitted relative change of the max ratio per unit `J`.
    pub growth: f64,
    /// Entries exceeding the declared envelope, summed over resolutions.
    pub decay_violations: usize,
    pub pass: bool,
}

/// `e^{slope} − 1` of the least-squares line through `(J, ln r_J)`; signed, so shrinking
/// ratios give negative growth. Zeros are handled stepwise: `0 → 0` is flat, `0 → r` unbounded.
pub fn growth_per_level(per_resolution: &[(u32, f64)]) -> f64 {
    if per_resolution.len() < 2 {
        return 0.0;
    }
    if per_resolution.iter().any(|r| r.1 == 0.0) {
        return per_resolution
            .windows(2)
            .map(|w| match (w[0].1, w[1].1) {
                (0.0, 0.0) => 0.0,
                (0.0, _) => f64::INFINITY,
                (_, 0.0) => -1.0,
                (a, b) => (b / a).powf(1.0 / (w[1].0 as f64 - w[0].0 as f64).max(1.0)) - 1.0,
            })
            .fold(f64::NEG_INFINITY, f64::max);
    }
    let m = per_resolution.len() as f64;
    let xs: Vec<f64> = per_resolution.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = per_resolution.iter().map(|r| r.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxy / sxx).exp() - 1.0
}

/// Growth threshold for bounded operators.
pub const GROWTH_LIMIT: f64 = 0.10;

/// Norm ratios `‖T c‖ / ‖c‖` of the wavelet TLM norm over samples and resolutions.
pub fn czo_boundedness_experiment(
    label: &str,
    sp: &SpaceParams,
    resolutions: &[u32],
    samples: usize,
    mut matrix: impl FnMut(u32) -> Result<AlmostDiagonalMatrix>,
    mut input: impl FnMut(u32, usize) -> Result<CoeffField>,
) -> Result<BoundednessReport> {
    if samples == 0 || resolutions.is_empty() {
        return param("boundedness experiment needs samples and resolutions");
    }
    let mut rows = Vec::new();
    let mut per_resolution = Vec::new();
    let mut decay_violations = 0;
    let mut sorted = resolutions.to_vec();
    sorted.sort_unstable();
    for &big_j in &sorted {
        let mat = matrix(big_j)?;
        decay_violations += validate_decay(&mat).violations.len();
        let mut best: f64 = 0.0;
        for s in 0..samples {
            let c = input(big_j, s)?;
            let a = tlm_wavelet_norm(&c, sp)?.value;
            let b = tlm_wavelet_norm(&apply_matrix(&mat, &c)?, sp)?.value;
            let ratio = if a > 0.0 { b / a } else { 0.0 };
            best = best.max(ratio);
            rows.push(SampleRatio { resolution: big_j, sample: s, input: a, output: b, ratio });
        }
        per_resolution.push((big_j, best));
    }
    let growth = growth_per_level(&per_resolution);
    let max_ratio = per_resolution.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(BoundednessReport {
        label: label.to_string(),
        norm: format!("tlm(γ₁={}, γ₂={}, p={}, q={})", sp.gamma1, sp.gamma2, sp.p, sp.q),
        samples: rows,
        per_resolution,
        max_ratio,
        growth,
        decay_violations,
        pass: growth < GROWTH_LIMIT && decay_violations == 0,
    })
}

#[cfg(test)]
mod tests;
