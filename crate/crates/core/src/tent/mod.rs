//! Tent-space norms of time-dependent wavelet coefficients: the four parts and their
//! intersection norm, the t-Bloch and t-L∞ norms, and pointwise embedding bounds.

mod quadrature;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::grid::{CellMap, DyadicCube};
use crate::norms::{cube_values, SpaceParams};
use crate::semigroup::{TimeCoeffField, TimeScalingField};
use crate::wavelet::WaveletIndex;

pub(crate) use quadrature::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TentParams {
    pub sp: SpaceParams,
    /// Time weight of the high-frequency parts.
    pub m: f64,
    /// Time weight of the low-frequency part, positive.
    pub m_prime: f64,
    pub beta: f64,
    /// Bloch exponent, positive.
    pub tau: f64,
}

impl TentParams {
    pub fn new(sp: SpaceParams, m: f64, m_prime: f64, beta: f64, tau: f64) -> Result<Self> {
        let tp = TentParams { sp, m, m_prime, beta, tau };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<()> {
        self.sp.validate()?;
        if !self.m.is_finite() {
            return param("time weight m must be finite");
        }
        if !(self.m_prime > 0.0 && self.m_prime.is_finite()) {
            return param(format!("low-frequency weight m'={} must be positive", self.m_prime));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return param(format!("fractional order β={} must be positive", self.beta));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return param(format!("Bloch exponent τ={} must be positive", self.tau));
        }
        Ok(())
    }

    /// Hypotheses of the heat characterization that this parameter point violates.
    pub fn characterization_violations(&self) -> Vec<String> {
        let SpaceParams { gamma1, gamma2, p, .. } = self.sp;
        let mut out = Vec::new();
        if !(1.0 < p && p < self.m) {
            out.push(format!("requires 1 < p < m, got p={p}, m={}", self.m));
        }
        if !(gamma1 - gamma2 < 0.0) {
            out.push(format!("requires γ₁ − γ₂ < 0, got {}", gamma1 - gamma2));
        }
        if !(self.tau + (gamma1 - gamma2) / (2.0 * self.beta) > 0.0) {
            out.push(format!("requires τ + (γ₁−γ₂)/(2β) > 0, got {}", self.tau + (gamma1 - gamma2) / (2.0 * self.beta)));
        }
        out
    }
}

/// Where the outer `1/q` power sits in the time-integrated parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentPlacement {
    /// `‖(Σ 2^{…} ∫ |a|^q … χ)^{1/q}‖_p`, matching the other parts.
    #[default]
    Consistent,
    /// `‖Σ 2^{…} ∫ |a|^q … χ‖_p` without the inner root.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TentOptions {
    pub placement: ExponentPlacement,
    /// Offset added to the seam level separating parts I and II.
    pub seam_shift: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentPart {
    pub value: f64,
    pub cube: Option<DyadicCube>,
    /// Time node of the sup for the pointwise-in-time parts.
    pub node: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamDiagnostic {
    pub shift: i32,
    pub part_i: f64,
    pub part_ii: f64,
    pub joint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentNormReport {
    pub parts: [TentPart; 4],
    /// `max` of the four parts.
    pub combined: f64,
    pub placement: ExponentPlacement,
    /// Parts I and II with the seam moved by −1, 0, +1 levels.
    pub seam: Vec<SeamDiagnostic>,
    /// Relative change of parts III and IV when every other time node is dropped.
    pub quadrature_iii: f64,
    pub quadrature_iv: f64,
    /// Share of part IV's integrals coming from the analytic extension below `t_min`.
    pub tail_iv: f64,
    pub violations: Vec<String>,
}

impl TentNormReport {
    pub fn values(&self) -> [f64; 4] {
        [self.parts[0].value, self.parts[1].value, self.parts[2].value, self.parts[3].value]
    }
}

/// Running sup with `(j, k, node)` lexicographic tie-breaking.
struct Best {
    value: f64,
    key: Option<(u32, usize, usize)>,
}

impl Best {
    fn new() -> Self {
        Best { value: 0.0, key: None }
    }

    fn offer(&mut self, v: f64, key: (u32, usize, usize)) {
        let better = match self.key {
            None => true,
            Some(k) => v > self.value || (v == self.value && key < k),
        };
        if better {
            self.value = v;
            self.key = Some(key);
        }
    }

    fn part(self, n: usize, with_node: bool) -> TentPart {
        TentPart {
            value: self.value,
            cube: self.key.map(|(j, k, _)| DyadicCube::from_flat(j, k, n)),
            node: if with_node { self.key.map(|k| k.2) } else { None },
        }
    }
}

/// `q`-th power sums (or maxima for `q = ∞`) of `|a^ε_{j,k}(t_ℓ)|` over `ε`.
struct Prepared {
    tp: TentParams,
    map: CellMap,
    n: usize,
    j_min: u32,
    levels: u32,
    /// `ln t_ℓ`.
    u: Vec<f64>,
    /// `g[ℓ][j − j_min][k]`.
    g: Vec<Vec<Vec<f64>>>,
}

impl Prepared {
    fn new(tcf: &TimeCoeffField, tp: &TentParams) -> Result<Self> {
        tp.validate()?;
        if (tcf.beta - tp.beta).abs() > 1e-12 {
            return param(format!("field β={} differs from tent β={}", tcf.beta, tp.beta));
        }
        let spec = *tcf.spec();
        let q = tp.sp.q;
        let layout = tcf.slice(0).layout();
        let g = tcf
            .slices()
            .iter()
            .map(|s| {
                (spec.j_min()..spec.resolution())
                    .map(|j| {
                        let mut v = vec![0.0; layout.block_len(j)];
                        for eps in 1..=layout.types() {
                            for (acc, a) in v.iter_mut().zip(s.block(j, eps)) {
                                if q.is_infinite() {
                                    *acc = f64::max(*acc, a.norm());
                                } else {
                                    *acc += a.norm().powf(q);
                                }
                            }
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        Ok(Prepared {
            tp: *tp,
            map: CellMap::new(&spec),
            n: spec.n(),
            j_min: spec.j_min(),
            levels: spec.resolution(),
            u: (0..tcf.grid.len).map(|l| tcf.grid.log_node(l)).collect(),
            g,
        })
    }

    fn q(&self) -> f64 {
        self.tp.sp.q
    }

    /// `2^{qj(γ₁+n/2)}`, or `2^{j(γ₁+n/2)}` for `q = ∞`.
    fn level_weight(&self, j: u32) -> f64 {
        let e = j as f64 * (self.tp.sp.gamma1 + self.n as f64 / 2.0);
        if self.q().is_infinite() { e.exp2() } else { (self.q() * e).exp2() }
    }

    /// `ln 2^{−2βj}`.
    fn level_time(&self, j: u32) -> f64 {
        -2.0 * self.tp.beta * j as f64 * LN_2
    }

    /// Smallest level `j` with `t 2^{2βj} >= 1`.
    fn seam(&self, l: usize) -> i64 {
        (-self.u[l] / (2.0 * self.tp.beta * LN_2) - 1e-9).ceil() as i64
    }

    fn fold(&self, acc: &mut [f64], j: u32, terms: &[f64]) {
        let inf = self.q().is_infinite();
        for (a, &c) in acc.iter_mut().zip(self.map.ancestors(j)) {
            let v = terms[c as usize];
            if inf {
                *a = a.max(v);
            } else {
                *a += v;
            }
        }
    }

    fn cubes(&self, j0: u32, acc: &[f64], q: f64) -> Vec<f64> {
        cube_values(&self.map, j0, acc, self.tp.sp.p, q, self.tp.sp.gamma2)
    }

    /// Parts I and II with the seam moved by `shift` levels.
    fn pointwise_parts(&self, shift: i32) -> (TentPart, TentPart) {
        let (mut b1, mut b2) = (Best::new(), Best::new());
        let cells = self.map.cells();
        let q = self.q();
        let m = self.tp.m;
        for l in 0..self.u.len() {
            let sigma = self.seam(l) + shift as i64;
            let log2t = self.u[l] / LN_2;
            let (mut acc1, mut acc2) = (vec![0.0; cells], vec![0.0; cells]);
            let (mut any1, mut any2) = (false, false);
            for j0 in (0..self.levels).rev() {
                if j0 >= self.j_min && j0 as i64 >= sigma {
                    // (t 2^{2βj})^{qm} against the level weight.
                    let e = m * (log2t + 2.0 * self.tp.beta * j0 as f64);
                    let w = self.level_weight(j0) * if q.is_infinite() { e.exp2() } else { (q * e).exp2() };
                    let terms: Vec<f64> = self.g[l][(j0 - self.j_min) as usize].iter().map(|v| v * w).collect();
                    self.fold(&mut acc1, j0, &terms);
                    any1 = true;
                }
                let jn = j0 + 1;
                if jn < self.levels && jn >= self.j_min && (jn as i64) < sigma {
                    let w = self.level_weight(jn);
                    let terms: Vec<f64> = self.g[l][(jn - self.j_min) as usize].iter().map(|v| v * w).collect();
                    self.fold(&mut acc2, jn, &terms);
                    any2 = true;
                }
                for (best, acc, any) in [(&mut b1, &acc1, any1), (&mut b2, &acc2, any2)] {
                    if any {
                        for (k, v) in self.cubes(j0, acc, q).into_iter().enumerate() {
                            best.offer(v, (j0, k, l));
                        }
                    } else {
                        best.offer(0.0, (j0, 0, l));
                    }
                }
            }
        }
        (b1.part(self.n, true), b2.part(self.n, true))
    }

    /// Time profile `g[·][j][k]` restricted to the node subset.
    fn profile(&self, nodes: &[usize], j: u32, k: usize) -> Vec<f64> {
        let ji = (j - self.j_min) as usize;
        nodes.iter().map(|&l| self.g[l][ji][k]).collect()
    }

    fn outer_q(&self, placement: ExponentPlacement) -> f64 {
        match placement {
            ExponentPlacement::Literal if self.q().is_finite() => 1.0,
            _ => self.q(),
        }
    }

    /// Part III on the given node subset.
    fn part_iii(&self, nodes: &[usize], placement: ExponentPlacement) -> TentPart {
        let q = self.q();
        let kappa = q * self.tp.m;
        let u: Vec<f64> = nodes.iter().map(|&l| self.u[l]).collect();
        // terms[j0][j − j_min][k] for j0 < j.
        let mut terms: Vec<Vec<Vec<f64>>> = vec![Vec::new(); self.levels as usize];
        for j0 in 0..self.levels {
            terms[j0 as usize] = (self.j_min..self.levels).map(|j| vec![0.0; if j > j0 { self.map.cubes_at(j) } else { 0 }]).collect();
        }
        for j in self.j_min.max(1)..self.levels {
            let w = self.level_weight(j);
            let uj = self.level_time(j);
            for k in 0..self.map.cubes_at(j) {
                let h = self.profile(nodes, j, k);
                if h.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let mut cum = 0.0;
                for j0 in (0..j).rev() {
                    let (lo, hi) = (self.level_time(j0 + 1), self.level_time(j0));
                    if q.is_infinite() {
                        for (&ul, &hl) in u.iter().zip(&h) {
                            if ul >= lo && ul <= hi {
                                cum = f64::max(cum, hl * (self.tp.m * (ul - uj)).exp());
                            }
                        }
                    } else {
                        cum += integrate(&u, &h, lo, hi, kappa, uj);
                    }
                    terms[j0 as usize][(j - self.j_min) as usize][k] = w * cum;
                }
            }
        }
        let outer = self.outer_q(placement);
        let mut best = Best::new();
        for j0 in 0..self.levels {
            let mut acc = vec![0.0; self.map.cells()];
            for j in (j0 + 1).max(self.j_min)..self.levels {
                self.fold(&mut acc, j, &terms[j0 as usize][(j - self.j_min) as usize]);
            }
            for (k, v) in self.cubes(j0, &acc, outer).into_iter().enumerate() {
                best.offer(v, (j0, k, 0));
            }
        }
        best.part(self.n, false)
    }

    /// Part IV on the given node subset, with the tail share of its integrals.
    fn part_iv(&self, nodes: &[usize], placement: ExponentPlacement) -> (TentPart, f64) {
        let q = self.q();
        let mp = self.tp.m_prime;
        let kappa = if q.is_infinite() { mp } else { q * mp };
        let u: Vec<f64> = nodes.iter().map(|&l| self.u[l]).collect();
        let (mut tail, mut total) = (0.0, 0.0);
        let terms: Vec<Vec<f64>> = (self.j_min..self.levels)
            .map(|j| {
                let w = self.level_weight(j);
                let uj = self.level_time(j);
                (0..self.map.cubes_at(j))
                    .map(|k| {
                        let h = self.profile(nodes, j, k);
                        if q.is_infinite() {
                            let mut best = h[0] * (mp * (u[0].min(uj) - uj)).exp();
                            for (&ul, &hl) in u.iter().zip(&h) {
                                if ul <= uj {
                                    best = best.max(hl * (mp * (ul - uj)).exp());
                                }
                            }
                            w * best
                        } else {
                            let all = integrate(&u, &h, f64::NEG_INFINITY, uj, kappa, uj);
                            let below = h[0] * (kappa * (u[0].min(uj) - uj)).exp() / kappa;
                            tail += w * below;
                            total += w * all;
                            w * all
                        }
                    })
                    .collect()
            })
            .collect();
        let outer = self.outer_q(placement);
        let mut acc = vec![0.0; self.map.cells()];
        let mut per_level: Vec<Vec<f64>> = vec![Vec::new(); self.levels as usize];
        for j0 in (0..self.levels).rev() {
            if j0 >= self.j_min {
                self.fold(&mut acc, j0, &terms[(j0 - self.j_min) as usize]);
            }
            per_level[j0 as usize] = self.cubes(j0, &acc, outer);
        }
        let mut best = Best::new();
        for (j0, vals) in per_level.into_iter().enumerate() {
            for (k, v) in vals.into_iter().enumerate() {
                best.offer(v, (j0 as u32, k, 0));
            }
        }
        (best.part(self.n, false), if total > 0.0 { tail / total } else { 0.0 })
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }
}

pub fn tent_norm_i(tcf: &TimeCoeffField, tp: &TentParams) -> Result<f64> {
    Ok(Prepared::new(tcf, tp)?.pointwise_parts(0).0.value)
}

pub fn tent_norm_ii(tcf: &TimeCoeffField, tp: &TentParams) -> Result<f64> {
    Ok(Prepared::new(tcf, tp)?.pointwise_parts(0).1.value)
}

pub fn tent_norm_iii(tcf: &TimeCoeffField, tp: &TentParams) -> Result<f64> {
    let pr = Prepared::new(tcf, tp)?;
    let all: Vec<usize> = (0..tcf.grid.len).collect();
    Ok(pr.part_iii(&all, ExponentPlacement::Consistent).value)
}

pub fn tent_norm_iv(tcf: &TimeCoeffField, tp: &TentParams) -> Result<f64> {
    let pr = Prepared::new(tcf, tp)?;
    let all: Vec<usize> = (0..tcf.grid.len).collect();
    Ok(pr.part_iv(&all, ExponentPlacement::Consistent).0.value)
}

/// All four parts with argmax locations, seam and quadrature diagnostics.
pub fn tent_norms(tcf: &TimeCoeffField, tp: &TentParams, opts: &TentOptions) -> Result<TentNormReport> {
    let pr = Prepared::new(tcf, tp)?;
    let all: Vec<usize> = (0..tcf.grid.len).collect();
    let half: Vec<usize> = all.iter().copied().step_by(2).collect();
    let (p1, p2) = pr.pointwise_parts(opts.seam_shift);
    let p3 = pr.part_iii(&all, opts.placement);
    let (p4, tail_iv) = pr.part_iv(&all, opts.placement);
    let quadrature_iii = relative_change(p3.value, pr.part_iii(&half, opts.placement).value);
    let quadrature_iv = relative_change(p4.value, pr.part_iv(&half, opts.placement).0.value);
    let seam = [-1, 0, 1]
        .into_iter()
        .map(|d| {
            let shift = opts.seam_shift + d;
            let (a, b) = if d == 0 { (p1.value, p2.value) } else {
                let (a, b) = pr.pointwise_parts(shift);
                (a.value, b.value)
            };
            SeamDiagnostic { shift, part_i: a, part_ii: b, joint: a.max(b) }
        })
        .collect();
    let combined = p1.value.max(p2.value).max(p3.value).max(p4.value);
    Ok(TentNormReport {
        parts: [p1, p2, p3, p4],
        combined,
        placement: opts.placement,
        seam,
        quadrature_iii,
        quadrature_iv,
        tail_iv,
        violations: tp.characterization_violations(),
    })
}

/// `sup_{ε,j,k} [sup_{s≥1} s^τ 2^{j(n/2+γ₁)}|a(t)| + sup_{s≤1} 2^{j(n/2+γ₁)}|a(t)|]`,
/// `s = t 2^{2jβ}`.
pub fn bloch_norm(tcf: &TimeCoeffField, gamma1: f64, tau: f64, beta: f64) -> Result<f64> {
    if !(tau > 0.0) || !gamma1.is_finite() || !(beta > 0.0) {
        return param("Bloch norm needs τ > 0, β > 0 and finite γ₁");
    }
    let spec = *tcf.spec();
    let layout = tcf.slice(0).layout();
    let n = spec.n() as f64;
    let mut best: f64 = 0.0;
    for j in spec.j_min()..spec.resolution() {
        let w = (j as f64 * (n / 2.0 + gamma1)).exp2();
        for eps in 1..=layout.types() {
            for k in 0..layout.block_len(j) {
                let (mut hi, mut lo): (f64, f64) = (0.0, 0.0);
                for (l, s) in tcf.slices().iter().enumerate() {
                    let sc = tcf.grid.node(l) * (2.0 * beta * j as f64).exp2();
                    let a = w * s.block(j, eps)[k].norm();
                    if sc >= 1.0 {
                        hi = hi.max(sc.powf(tau) * a);
                    }
                    if sc <= 1.0 {
                        lo = lo.max(a);
                    }
                }
                best = best.max(hi + lo);
            }
        }
    }
    Ok(best)
}

/// `sup_{t,j,k} t^{−γ₁/2β} 2^{nj/2} |⟨a(t,·), Φ⁰_{j,k}⟩|`.
pub fn t_linf_norm(ts: &TimeScalingField, gamma1: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !gamma1.is_finite() {
        return param("t-L∞ norm needs β > 0 and finite γ₁");
    }
    let n = ts.n as f64;
    let mut best: f64 = 0.0;
    for (l, per_level) in ts.data.iter().enumerate() {
        let tw = ts.grid.node(l).powf(-gamma1 / (2.0 * beta));
        for (&j, coeffs) in ts.levels.iter().zip(per_level) {
            let w = tw * (n * j as f64 / 2.0).exp2();
            for c in coeffs {
                best = best.max(w * c.norm());
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeBound {
    /// Largest normalized coefficient ratio.
    pub max_ratio: f64,
    pub argmax: Option<WaveletIndex>,
    pub node: Option<usize>,
    /// The sup sits on the last node carrying this regime and still increases there.
    pub growing_at_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub combined: f64,
    /// `|a| / (2^{j(γ₂−γ₁−n/2)} s^{−m})` over `s = t2^{2jβ} >= 1`, divided by the tent norm.
    pub high: RegimeBound,
    /// `|a| / 2^{−j(γ₁−γ₂)−jn/2}` over `s < 1`, divided by the tent norm.
    pub low: RegimeBound,
    /// Some regime is unbounded in `t` on this grid or exceeds the finite threshold.
    pub flagged: bool,
}

/// Pointwise coefficient bounds implied by a finite tent norm.
pub fn check_embeddings(tcf: &TimeCoeffField, tp: &TentParams) -> Result<EmbeddingReport> {
    let combined = tent_norms(tcf, tp, &TentOptions::default())?.combined;
    let spec = *tcf.spec();
    let layout = tcf.slice(0).layout();
    let n = spec.n() as f64;
    let SpaceParams { gamma1, gamma2, .. } = tp.sp;
    let len = tcf.grid.len;
    // Per-node maxima for both regimes.
    let mut series = [vec![None::<f64>; len], vec![None::<f64>; len]];
    let mut arg: [Option<(WaveletIndex, usize)>; 2] = [None, None];
    let mut best = [0.0f64; 2];
    for (l, s) in tcf.slices().iter().enumerate() {
        let t = tcf.grid.node(l);
        for j in spec.j_min()..spec.resolution() {
            let sc = t * (2.0 * tp.beta * j as f64).exp2();
            let (regime, bound) = if sc >= 1.0 {
                (0, (j as f64 * (gamma2 - gamma1 - n / 2.0)).exp2() * sc.powf(-tp.m))
            } else {
                (1, (-(j as f64) * (gamma1 - gamma2) - j as f64 * n / 2.0).exp2())
            };
            for eps in 1..=layout.types() {
                for (k, a) in s.block(j, eps).iter().enumerate() {
                    let r = if combined > 0.0 { a.norm() / bound / combined } else { 0.0 };
                    let slot = &mut series[regime][l];
                    *slot = Some(slot.map_or(r, |v: f64| v.max(r)));
                    if r > best[regime] {
                        best[regime] = r;
                        arg[regime] = Some((WaveletIndex::new(eps, j, crate::grid::unflatten_side(k, 1 << j, spec.n())), l));
                    }
                }
            }
        }
    }
    let regime = |i: usize| {
        let present: Vec<(usize, f64)> = series[i].iter().enumerate().filter_map(|(l, v)| v.map(|v| (l, v))).collect();
        let growing_at_edge = match (present.len(), arg[i].as_ref()) {
            (len, Some((_, node))) if len >= 2 => {
                let (last, v_last) = present[len - 1];
                let (_, v_prev) = present[len - 2];
                *node == last && v_last > v_prev * (1.0 + 1e-9)
            }
            _ => false,
        };
        RegimeBound {
            max_ratio: best[i],
            argmax: arg[i].as_ref().map(|a| a.0.clone()),
            node: arg[i].as_ref().map(|a| a.1),
            growing_at_edge,
        }
    };
    let (high, low) = (regime(0), regime(1));
    let flagged = high.growing_at_edge
        || low.growing_at_edge
        || high.max_ratio > crate::semigroup::FINITE_RATIO
        || low.max_ratio > crate::semigroup::FINITE_RATIO;
    Ok(EmbeddingReport { combined, high, low, flagged })
}

#[cfg(test)]
mod tests;
