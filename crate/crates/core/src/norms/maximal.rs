use serde::{Deserialize, Serialize};

use crate::error::{param, OscilletError, Result};
use crate::grid::{flatten_side, GridFunction, GridSpec};
use crate::wavelet::CoeffField;

/// Dyadic Hardy–Littlewood maximal function: at each sample, the largest average of `g` over
/// the dyadic cubes (levels `0..=J`) containing it.
pub fn dyadic_maximal(spec: &GridSpec, g: &[f64]) -> Vec<f64> {
    let n = spec.n();
    let big_j = spec.resolution() as usize;
    // pyramid[j] holds averages over level-j cubes, row-major.
    let mut pyramid: Vec<Vec<f64>> = vec![Vec::new(); big_j + 1];
    pyramid[big_j] = g.to_vec();
    for j in (0..big_j).rev() {
        let side = 1usize << j;
        let fine = &pyramid[j + 1];
        let mut avg = vec![0.0; side.pow(n as u32)];
        let fine_side = side * 2;
        for (f, &v) in fine.iter().enumerate() {
            let mut rest = f;
            let mut idx = vec![0; n];
            for d in (0..n).rev() {
                idx[d] = (rest % fine_side) >> 1;
                rest /= fine_side;
            }
            avg[flatten_side(&idx, side)] += v;
        }
        let w = 1.0 / (1usize << n) as f64;
        avg.iter_mut().for_each(|v| *v *= w);
        pyramid[j] = avg;
    }
    (0..spec.len())
        .map(|f| {
            let idx = spec.unflatten(f);
            (0..=big_j)
                .map(|j| {
                    let shift = big_j - j;
                    let k: Vec<usize> = idx.iter().map(|&i| i >> shift).collect();
                    pyramid[j][flatten_side(&k, 1 << j)]
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `M_A(f)(x) = (Σ_j M(|f_j|^A)(x))^{1/A}` with the dyadic maximal operator `M`.
pub fn vector_maximal(spec: &GridSpec, fs: &[GridFunction], a: f64) -> Result<GridFunction> {
    if !(a > 0.0) || !a.is_finite() {
        return param(format!("maximal exponent A={a} must be positive and finite"));
    }
    let mut sum = vec![0.0; spec.len()];
    for f in fs {
        if f.spec() != spec {
            return Err(OscilletError::Shape("maximal inputs live on different grids".into()));
        }
        let g: Vec<f64> = f.values().iter().map(|v| v.norm().powf(a)).collect();
        for (s, m) in sum.iter_mut().zip(dyadic_maximal(spec, &g)) {
            *s += m;
        }
    }
    GridFunction::from_real(*spec, &sum.iter().map(|s| s.powf(1.0 / a)).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSumReport {
    pub value: f64,
    /// Smallest `M_A(f_{j'})` over the samples of `Q_{j,k}`, times `2^{n(j'-j)/A}` when `j < j'`.
    pub maximal_bound: f64,
    pub ratio: f64,
    /// `γ > n/A + 1`.
    pub bound_guaranteed: bool,
}

/// `g^k_{j,j'} = Σ_{ε',k'} 2^{j'(s+n/2)} |a^{ε'}_{j',k'}| (1+|k' − 2^{j'−j}k|)^{−(n+γ)}` for
/// `j >= j'` and `(1+|k − 2^{j−j'}k'|)^{−(n+γ)}` for `j < j'`, with periodic distances.
#[allow(clippy::too_many_arguments)]
pub fn kernel_sum(
    c: &CoeffField,
    j_src: u32,
    j: u32,
    k: &[usize],
    gamma: f64,
    s: f64,
    a: f64,
) -> Result<KernelSumReport> {
    let spec = *c.spec();
    let layout = c.layout();
    let n = spec.n();
    if j_src < spec.j_min() || j_src >= spec.resolution() || j >= spec.resolution() {
        return Err(OscilletError::Range(format!("levels j={j}, j'={j_src} outside the basis band")));
    }
    if k.len() != n || k.iter().any(|&ki| ki >= 1 << j) {
        return Err(OscilletError::Index(format!("target position {k:?} outside level {j}")));
    }
    if !(a > 0.0) {
        return param("maximal exponent must be positive");
    }
    let weight = (j_src as f64 * (s + n as f64 / 2.0)).exp2();
    let src_side = 1usize << j_src;
    let period = if j >= j_src { src_side as f64 } else { (1usize << j) as f64 };
    let mut value = 0.0;
    let mut cube_mass = vec![0.0; layout.block_len(j_src)];
    for eps in 1..=layout.types() {
        for (kf, coef) in c.block(j_src, eps).iter().enumerate() {
            let mag = weight * coef.norm();
            if mag == 0.0 {
                continue;
            }
            let kp = crate::grid::unflatten_side(kf, src_side, n);
            let mut d2 = 0.0;
            for d in 0..n {
                let diff = if j >= j_src {
                    kp[d] as f64 - k[d] as f64 * (j_src as f64 - j as f64).exp2()
                } else {
                    k[d] as f64 - kp[d] as f64 * (j as f64 - j_src as f64).exp2()
                };
                let w = diff - period * (diff / period).round();
                d2 += w * w;
            }
            value += mag * (1.0 + d2.sqrt()).powf(-(n as f64 + gamma));
            cube_mass[kf] += mag;
        }
    }
    // f_{j'} is piecewise constant on the level-j' cubes.
    let shift = spec.resolution() - j_src;
    let level_fn: Vec<f64> = (0..spec.len())
        .map(|f| {
            let kk: Vec<usize> = spec.unflatten(f).iter().map(|&i| i >> shift).collect();
            cube_mass[flatten_side(&kk, src_side)]
        })
        .collect();
    let fj = GridFunction::from_real(spec, &level_fn)?;
    let m = vector_maximal(&spec, &[fj], a)?;
    let target_shift = spec.resolution() - j;
    let min_m = (0..spec.len())
        .filter(|&f| spec.unflatten(f).iter().zip(k).all(|(&i, &kk)| i >> target_shift == kk))
        .map(|f| m.values()[f].re)
        .fold(f64::INFINITY, f64::min);
    let factor = if j < j_src { (n as f64 * (j_src as f64 - j as f64) / a).exp2() } else { 1.0 };
    let maximal_bound = min_m * factor;
    let ratio = if value == 0.0 { 0.0 } else { value / maximal_bound };
    Ok(KernelSumReport {
        value,
        maximal_bound,
        ratio,
        bound_guaranteed: gamma > n as f64 / a + 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicCube;
    use crate::wavelet::{Family, WaveletIndex};
    use num_complex::Complex64;

    #[test]
    fn constant_is_fixed() {
        let spec = GridSpec::new(2, 4, 0).unwrap();
        let f = GridFunction::from_real(spec, &vec![2.5; spec.len()]).unwrap();
        let m = vector_maximal(&spec, &[f], 1.5).unwrap();
        assert!(m.values().iter().all(|v| (v.re - 2.5).abs() < 1e-12));
        assert!(vector_maximal(&spec, &[], 1.0).unwrap().max_abs() == 0.0);
        assert!(vector_maximal(&spec, &[], 0.0).is_err());
    }

    #[test]
    fn indicator_matches_ancestor_enumeration() {
        let spec = GridSpec::new(1, 6, 0).unwrap();
        let cube = DyadicCube::new(3, vec![5]).unwrap();
        let ind: Vec<f64> = (0..64).map(|i| cube.contains_sample(&[i], 6) as u8 as f64).collect();
        let m = dyadic_maximal(&spec, &ind);
        for i in 0..64 {
            // Oracle: largest |Q ∩ cube| / |Q| over dyadic Q ∋ x.
            let mut best: f64 = 0.0;
            for j in 0..=6u32 {
                let q = DyadicCube::new(j, vec![i >> (6 - j)]).unwrap();
                let overlap = (0..64).filter(|&s| q.contains_sample(&[s], 6) && ind[s] > 0.0).count();
                best = best.max(overlap as f64 / (1usize << (6 - j)) as f64);
            }
            assert!((m[i] - best).abs() < 1e-12);
            if ind[i] > 0.0 {
                assert_eq!(m[i], 1.0);
            }
        }
    }

    #[test]
    fn kernel_sum_distance_zero_term() {
        let spec = GridSpec::new(1, 7, 0).unwrap();
        let mut c = CoeffField::zeros(spec, Family::meyer());
        // j = 5 >= j' = 3 with k' = 2^{j'-j} k.
        c.set(&WaveletIndex::new(1, 3, vec![5]), Complex64::new(-2.0, 0.0)).unwrap();
        let r = kernel_sum(&c, 3, 5, &[20], 2.5, 0.25, 1.0).unwrap();
        let want = (3.0f64 * 0.75).exp2() * 2.0;
        assert!((r.value - want).abs() < 1e-12);
        assert!(r.bound_guaranteed);
        let zero = CoeffField::zeros(spec, Family::meyer());
        assert_eq!(kernel_sum(&zero, 3, 5, &[20], 1.5, 0.25, 1.0).unwrap().value, 0.0);
        assert!(!kernel_sum(&c, 3, 5, &[20], 1.5, 0.25, 1.0).unwrap().bound_guaranteed);
    }
}
