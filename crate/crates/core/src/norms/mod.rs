//! Triebel–Lizorkin and Triebel–Lizorkin–Morrey sequence norms, the oscillation norm, the
//! dyadic vector-valued maximal function and the associated kernel sums.
//!
//! All sequence norms use detail coefficients only; the scaling block is excluded, so the
//! norms are homogeneous and vanish on constants.

mod maximal;
mod oscillation;

pub use maximal::{dyadic_maximal, kernel_sum, vector_maximal, KernelSumReport};
pub use oscillation::{
    fit_local_polynomial, oscillation_norm, Cutoff, LocalFit, OscillationEvaluation, OscillationOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::grid::{check_exponent, CellMap, DyadicCube};
use crate::wavelet::CoeffField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: f64,
    pub q: f64,
}

impl SpaceParams {
    pub fn new(gamma1: f64, gamma2: f64, p: f64, q: f64) -> Result<Self> {
        let sp = SpaceParams { gamma1, gamma2, p, q };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma1.is_finite() || !self.gamma2.is_finite() {
            return param("smoothness and Morrey exponents must be finite");
        }
        if !self.p.is_finite() {
            return param("p must be finite");
        }
        check_exponent("p", self.p)?;
        check_exponent("q", self.q)
    }

    /// `γ₂ > n/p`: only polynomials have finite norm.
    pub fn is_degenerate(&self, n: usize) -> bool {
        self.gamma2 > n as f64 / self.p
    }

    /// `γ₂ = n/p`: the Morrey sup collapses to the plain Triebel–Lizorkin norm.
    pub fn is_collapse(&self, n: usize) -> bool {
        self.gamma2 == n as f64 / self.p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelContribution {
    pub level: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEvaluation {
    pub value: f64,
    pub argmax: Option<DyadicCube>,
    /// Norm of each level alone over the torus.
    pub per_level: Vec<LevelContribution>,
    pub degenerate: bool,
}

/// Per-level, per-position weighted coefficient terms:
/// `2^{qj(γ₁+n/2)} Σ_ε |a|^q` for finite `q`, `2^{j(γ₁+n/2)} max_ε |a|` for `q = ∞`.
pub(crate) struct LevelTerms {
    pub q: f64,
    pub j_min: u32,
    pub terms: Vec<Vec<f64>>,
}

impl LevelTerms {
    pub fn from_field(c: &CoeffField, gamma1: f64, q: f64) -> Self {
        let layout = c.layout();
        let n = layout.n as f64;
        let mut terms = Vec::new();
        for j in layout.j_min..layout.resolution {
            let w = ((j as f64) * (gamma1 + n / 2.0)).exp2();
            let mut t = vec![0.0; layout.block_len(j)];
            for eps in 1..=layout.types() {
                for (acc, a) in t.iter_mut().zip(c.block(j, eps)) {
                    let v = w * a.norm();
                    if q.is_infinite() {
                        *acc = f64::max(*acc, v);
                    } else {
                        *acc += v.powf(q);
                    }
                }
            }
            terms.push(t);
        }
        LevelTerms { q, j_min: layout.j_min, terms }
    }

    pub fn level(&self, j: u32) -> &[f64] {
        &self.terms[(j - self.j_min) as usize]
    }

    pub fn j_max(&self) -> u32 {
        self.j_min + self.terms.len() as u32 - 1
    }

    /// Folds level `j` into the per-cell accumulator.
    pub fn accumulate(&self, map: &CellMap, j: u32, acc: &mut [f64]) {
        let t = self.level(j);
        let anc = map.ancestors(j);
        for (a, &c) in acc.iter_mut().zip(anc) {
            let v = t[c as usize];
            if self.q.is_infinite() {
                *a = a.max(v);
            } else {
                *a += v;
            }
        }
    }
}

/// `|Q|^{γ₂/n − 1/p} (∫_Q S^{p/q})^{1/p}` for every cube of level `j0`, where `S` holds the
/// per-cell accumulated terms (`S` is already a `q`-th power sum for finite `q`).
pub(crate) fn cube_values(map: &CellMap, j0: u32, s: &[f64], p: f64, q: f64, gamma2: f64) -> Vec<f64> {
    let n = map.n as f64;
    let cubes = map.cubes_at(j0);
    let vol_q = (-(j0 as f64) * n).exp2();
    let anc = map.ancestors(j0);
    let inner = if q.is_infinite() { 1.0 } else { 1.0 / q };
    let mut out = vec![0.0; cubes];
    if p.is_infinite() {
        for (&c, &v) in anc.iter().zip(s) {
            let g = v.powf(inner);
            out[c as usize] = f64::max(out[c as usize], g);
        }
        let w = vol_q.powf(gamma2 / n);
        out.iter_mut().for_each(|v| *v *= w);
    } else {
        let pow = p * inner;
        for (&c, &v) in anc.iter().zip(s) {
            out[c as usize] += v.powf(pow);
        }
        let cell = map.cell_volume();
        let w = vol_q.powf(gamma2 / n - 1.0 / p);
        out.iter_mut().for_each(|v| *v = w * (*v * cell).powf(1.0 / p));
    }
    out
}

/// Running sup with lexicographic tie-breaking; feed candidates in `(j, k)` order.
#[derive(Debug, Clone, Default)]
pub(crate) struct ArgMax<K> {
    pub value: f64,
    pub key: Option<K>,
}

impl<K> ArgMax<K> {
    pub fn new() -> Self {
        ArgMax { value: 0.0, key: None }
    }

    pub fn offer(&mut self, value: f64, key: impl FnOnce() -> K) {
        if self.key.is_none() || value > self.value || (value.is_nan() && !self.value.is_nan()) {
            self.value = value;
            self.key = Some(key());
        }
    }
}

fn check_norm_params(gamma1: f64, p: f64, q: f64) -> Result<()> {
    if !gamma1.is_finite() {
        return param("γ₁ must be finite");
    }
    check_exponent("p", p)?;
    check_exponent("q", q)
}

/// `‖(Σ 2^{qj(γ₁+n/2)} |a^ε_{j,k}|^q χ(2^j·−k))^{1/q}‖_{L^p}` over the detail coefficients.
pub fn tl_norm(c: &CoeffField, gamma1: f64, p: f64, q: f64) -> Result<f64> {
    check_norm_params(gamma1, p, q)?;
    let map = CellMap::new(c.spec());
    let terms = LevelTerms::from_field(c, gamma1, q);
    let mut acc = vec![0.0; map.cells()];
    for j in (terms.j_min..=terms.j_max()).rev() {
        terms.accumulate(&map, j, &mut acc);
    }
    // The torus is the single level-0 cube, with |Q| = 1.
    Ok(cube_values(&map, 0, &acc, p, q, 0.0)[0])
}

/// Sup over dyadic cubes `Q` of `|Q|^{γ₂/n−1/p} ‖(Σ_{Q_{j,k} ⊂ Q} …)^{1/q}‖_{L^p}`.
pub fn tlm_wavelet_norm(c: &CoeffField, sp: &SpaceParams) -> Result<NormEvaluation> {
    check_norm_params(sp.gamma1, sp.p, sp.q)?;
    check_exponent("p", sp.p)?;
    if !sp.gamma2.is_finite() {
        return param("γ₂ must be finite");
    }
    let map = CellMap::new(c.spec());
    let terms = LevelTerms::from_field(c, sp.gamma1, sp.q);
    let j_max = terms.j_max();
    let mut acc = vec![0.0; map.cells()];
    let mut per_cube: Vec<Vec<f64>> = vec![Vec::new(); j_max as usize + 1];
    for j0 in (0..=j_max).rev() {
        if j0 >= terms.j_min {
            terms.accumulate(&map, j0, &mut acc);
        }
        per_cube[j0 as usize] = cube_values(&map, j0, &acc, sp.p, sp.q, sp.gamma2);
    }
    let mut best = ArgMax::new();
    let n = map.n;
    for (j0, vals) in per_cube.iter().enumerate() {
        for (k, &v) in vals.iter().enumerate() {
            best.offer(v, || DyadicCube::from_flat(j0 as u32, k, n));
        }
    }
    let per_level = per_level_table(&map, &terms, sp.p, sp.q);
    Ok(NormEvaluation {
        value: best.value,
        argmax: best.key,
        per_level,
        degenerate: sp.is_degenerate(n),
    })
}

fn per_level_table(map: &CellMap, terms: &LevelTerms, p: f64, q: f64) -> Vec<LevelContribution> {
    (terms.j_min..=terms.j_max())
        .map(|j| {
            let mut acc = vec![0.0; map.cells()];
            terms.accumulate(map, j, &mut acc);
            LevelContribution { level: j, value: cube_values(map, 0, &acc, p, q, 0.0)[0] }
        })
        .collect()
}

/// Plain TL evaluation wrapped as a [`NormEvaluation`] over the whole torus.
pub fn tl_evaluation(c: &CoeffField, gamma1: f64, p: f64, q: f64) -> Result<NormEvaluation> {
    let value = tl_norm(c, gamma1, p, q)?;
    let map = CellMap::new(c.spec());
    let terms = LevelTerms::from_field(c, gamma1, q);
    Ok(NormEvaluation {
        value,
        argmax: Some(DyadicCube::from_flat(0, 0, c.spec().n())),
        per_level: per_level_table(&map, &terms, p, q),
        degenerate: false,
    })
}
