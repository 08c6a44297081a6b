//! Uniform sampling grid on the torus `[0,1)^n` and its dyadic cubes.
//!
//! Samples sit at `x_i = i / N` with `N = 2^J` per axis, stored row-major with the first
//! axis varying slowest. Every integral on the grid uses the quadrature weight `N^{-n}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, OscilletError, Result};

/// Largest supported number of samples (`N^n`).
pub const MAX_SAMPLES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    resolution: u32,
    j_min: u32,
}

impl GridSpec {
    /// Grid with `2^resolution` samples per axis in dimension `n`; `j_min` is the coarsest
    /// wavelet level used by bases built on this grid.
    pub fn new(n: usize, resolution: u32, j_min: u32) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return param(format!("dimension n={n} must be 1, 2 or 3"));
        }
        if resolution == 0 || resolution > 24 {
            return param(format!("resolution J={resolution} must lie in 1..=24"));
        }
        if (resolution as usize) * n > 24 {
            return param(format!(
                "grid with J={resolution}, n={n} exceeds {MAX_SAMPLES} samples"
            ));
        }
        if j_min >= resolution {
            return param(format!("j_min={j_min} must be below J={resolution}"));
        }
        Ok(GridSpec { n, resolution, j_min })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `J`, the log2 of the samples per axis.
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn j_min(&self) -> u32 {
        self.j_min
    }

    /// Finest wavelet level, `J - 1`.
    pub fn j_max(&self) -> u32 {
        self.resolution - 1
    }

    pub fn side(&self) -> usize {
        1 << self.resolution
    }

    pub fn len(&self) -> usize {
        1 << (self.resolution as usize * self.n)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `N^{-n}`.
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn with_resolution(&self, resolution: u32) -> Result<Self> {
        GridSpec::new(self.n, resolution, self.j_min)
    }

    /// Multi-index of a flat sample index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        let side = self.side();
        for d in (0..self.n).rev() {
            idx[d] = flat % side;
            flat /= side;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        flatten_side(idx, self.side())
    }

    /// Coordinates `i / N` of a flat sample index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = 1.0 / self.side() as f64;
        self.unflatten(flat).into_iter().map(|i| i as f64 * h).collect()
    }
}

pub(crate) fn flatten_side(idx: &[usize], side: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * side + i)
}

pub(crate) fn unflatten_side(mut flat: usize, side: usize, n: usize) -> Vec<usize> {
    let mut idx = vec![0; n];
    for d in (0..n).rev() {
        idx[d] = flat % side;
        flat /= side;
    }
    idx
}

/// `Q_{j,k} = 2^{-j}(k + [0,1)^n)` with `0 <= k_i < 2^j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub position: Vec<usize>,
}

impl DyadicCube {
    pub fn new(level: u32, position: Vec<usize>) -> Result<Self> {
        if level > 30 {
            return param(format!("cube level {level} is too deep"));
        }
        let side = 1usize << level;
        if let Some(&bad) = position.iter().find(|&&k| k >= side) {
            return Err(OscilletError::Index(format!(
                "cube position {bad} outside 0..{side} at level {level}"
            )));
        }
        Ok(DyadicCube { level, position })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn side_length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn volume(&self) -> f64 {
        (-((self.level as usize * self.dim()) as f64)).exp2()
    }

    pub fn center(&self) -> Vec<f64> {
        let l = self.side_length();
        self.position.iter().map(|&k| (k as f64 + 0.5) * l).collect()
    }

    /// Row-major index of this cube among the cubes of its level.
    pub fn flat(&self) -> usize {
        flatten_side(&self.position, 1 << self.level)
    }

    pub fn from_flat(level: u32, flat: usize, n: usize) -> Self {
        DyadicCube {
            level,
            position: unflatten_side(flat, 1 << level, n),
        }
    }

    /// Whether grid sample `idx` (at resolution `resolution`) lies in the cube.
    pub fn contains_sample(&self, idx: &[usize], resolution: u32) -> bool {
        if self.level > resolution {
            return false;
        }
        let shift = resolution - self.level;
        idx.iter()
            .zip(&self.position)
            .all(|(&i, &k)| i >> shift == k)
    }
}

/// All cubes with level in `j_lo..=j_hi`, ordered by level then row-major position.
pub fn enumerate_cubes(spec: &GridSpec, j_lo: u32, j_hi: u32) -> Result<Vec<DyadicCube>> {
    if j_lo > j_hi {
        return param(format!("empty level range {j_lo}..={j_hi}"));
    }
    if j_hi > spec.resolution() {
        return param(format!(
            "level {j_hi} is finer than the grid resolution {}",
            spec.resolution()
        ));
    }
    let mut out = Vec::new();
    for j in j_lo..=j_hi {
        let count = 1usize << (j as usize * spec.n());
        out.extend((0..count).map(|f| DyadicCube::from_flat(j, f, spec.n())));
    }
    Ok(out)
}

/// Whether `inner` is contained in `outer`.
pub fn cube_contains(outer: &DyadicCube, inner: &DyadicCube) -> bool {
    if outer.dim() != inner.dim() || inner.level < outer.level {
        return false;
    }
    let shift = inner.level - outer.level;
    inner
        .position
        .iter()
        .zip(&outer.position)
        .all(|(&a, &b)| a >> shift == b)
}

/// Exponent in `(0, ∞]`.
pub fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p.is_nan() || p <= 0.0 {
        return param(format!("{name}={p} must lie in (0, inf]"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(OscilletError::Shape(format!(
                "{} values for a grid of {} samples",
                values.len(),
                spec.len()
            )));
        }
        Ok(GridFunction { spec, values })
    }

    pub fn from_real(spec: GridSpec, values: &[f64]) -> Result<Self> {
        GridFunction::new(spec, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(spec: GridSpec) -> Self {
        GridFunction {
            spec,
            values: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    /// Samples `f(x_i)` for `x_i = i / N`.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        GridFunction { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, idx: &[usize]) -> Result<Complex64> {
        if idx.len() != self.spec.n() || idx.iter().any(|&i| i >= self.spec.side()) {
            return Err(OscilletError::Index(format!("sample index {idx:?} outside the grid")));
        }
        Ok(self.values[self.spec.flatten(idx)])
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.spec != other.spec {
            return Err(OscilletError::Shape("grid functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GridFunction> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(GridFunction { spec: self.spec, values })
    }

    pub fn scale(&self, s: Complex64) -> GridFunction {
        GridFunction {
            spec: self.spec,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// `∫ f conj(g)` by the grid quadrature.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_same(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.spec.cell_volume())
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.spec.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest pointwise difference to `other`.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }
}

/// `(N^{-n} Σ |f_i|^p)^{1/p}`, or `max |f_i|` for `p = ∞`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let s: f64 = f.values().iter().map(|v| v.norm().powf(p)).sum();
    Ok((s * f.spec().cell_volume()).powf(1.0 / p))
}

/// Precomputed ancestors of the finest wavelet cells (level `J - 1`).
///
/// Norm integrands are constant on these cells, so every cube integral reduces to a sum
/// over them.
#[derive(Debug, Clone)]
pub struct CellMap {
    pub n: usize,
    pub j_min: u32,
    pub j_max: u32,
    /// `ancestors[j][cell]` is the flat position of the level-`j` cube holding `cell`, for
    /// every `0 <= j <= j_max`.
    ancestors: Vec<Vec<u32>>,
}

impl CellMap {
    pub fn new(spec: &GridSpec) -> Self {
        let n = spec.n();
        let j_max = spec.j_max();
        let cells = 1usize << (j_max as usize * n);
        let fine_side = 1usize << j_max;
        let ancestors = (0..=j_max)
            .map(|j| {
                let shift = j_max - j;
                (0..cells)
                    .map(|c| {
                        let idx = unflatten_side(c, fine_side, n);
                        let k: Vec<usize> = idx.iter().map(|&i| i >> shift).collect();
                        flatten_side(&k, 1 << j) as u32
                    })
                    .collect()
            })
            .collect();
        CellMap { n, j_min: spec.j_min(), j_max, ancestors }
    }

    pub fn cells(&self) -> usize {
        1usize << (self.j_max as usize * self.n)
    }

    pub fn cell_volume(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn ancestors(&self, j: u32) -> &[u32] {
        &self.ancestors[j as usize]
    }

    pub fn cubes_at(&self, j: u32) -> usize {
        1usize << (j as usize * self.n)
    }
}
