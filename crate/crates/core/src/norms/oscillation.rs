use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{tl_norm, ArgMax, LevelContribution, SpaceParams};
use crate::error::{param, OscilletError, Result};
use crate::grid::{DyadicCube, GridFunction};
use crate::wavelet::WaveletBasis;

/// Radial bump: 1 on `|u| <= inner`, `exp(1 − 1/(1 − s²))` with `s = (|u|−inner)/(outer−inner)`
/// on the transition, 0 beyond `outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    /// Plateau radius `√n`; outer radius `n`, or 2 in dimension one where `n = √n`.
    pub fn standard(n: usize) -> Self {
        let inner = (n as f64).sqrt();
        let outer = if n == 1 { 2.0 } else { n as f64 };
        Cutoff { inner, outer }
    }

    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return param(format!("cutoff radii must satisfy 0 < {inner} < {outer}"));
        }
        Ok(Cutoff { inner, outer })
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if rho <= self.inner {
            1.0
        } else if rho >= self.outer {
            0.0
        } else {
            let s = (rho - self.inner) / (self.outer - self.inner);
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationOptions {
    /// Highest total degree `m₀` of the local polynomial.
    pub moment_order: usize,
    pub cutoff: Cutoff,
    pub condition_limit: f64,
    /// Re-minimize the norm directly over polynomials at the maximizing cube.
    pub direct_check: bool,
}

impl OscillationOptions {
    pub fn standard(n: usize) -> Self {
        OscillationOptions {
            moment_order: 3,
            cutoff: Cutoff::standard(n),
            condition_limit: 1e10,
            direct_check: false,
        }
    }
}

/// Solution of the local moment system `∫ u^α φ_Q (f − P) = 0`, `|α| <= degree`.
#[derive(Debug, Clone)]
pub struct LocalFit {
    pub cube: DyadicCube,
    /// Degree actually used: `m₀`, or 0 when the cutoff wraps around the torus.
    pub degree: usize,
    pub exponents: Vec<Vec<u32>>,
    /// Coefficients of `P` in the local variable `u = (x − x_Q)/ℓ(Q)`.
    pub coeffs: Vec<Complex64>,
    pub condition: f64,
    /// `φ_Q (f − P)` on the grid.
    pub residual: GridFunction,
    /// Largest `|∫ u^α φ_Q (f−P)| / ∫ |u^α φ_Q f|` over the constraints.
    pub moment_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialGap {
    pub cube: DyadicCube,
    pub moment_value: f64,
    pub minimized_value: f64,
    /// `moment_value / minimized_value − 1`; above 0.1 the two polynomial classes disagree.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationEvaluation {
    pub value: f64,
    pub argmax: Option<DyadicCube>,
    /// Largest cube value at each level.
    pub per_level: Vec<LevelContribution>,
    pub degenerate: bool,
    pub polynomial_gap: Option<PolynomialGap>,
}

fn monomials(n: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, total);
    }
    fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, d: usize, left: u32) {
        if d + 1 == cur.len() {
            cur[d] = left;
            out.push(cur.clone());
            return;
        }
        for a in (0..=left).rev() {
            cur[d] = a;
            fill(out, cur, d + 1, left - a);
        }
    }
    out
}

fn mono(u: &[f64], alpha: &[u32]) -> f64 {
    u.iter().zip(alpha).map(|(x, &a)| x.powi(a as i32)).product()
}

/// Samples of the cutoff support: `(flat index, u, φ)`.
fn support(f: &GridFunction, cube: &DyadicCube, cutoff: &Cutoff) -> Vec<(usize, Vec<f64>, f64)> {
    let spec = f.spec();
    let n = spec.n();
    let side = spec.side();
    let r = cube.side_length();
    let center = cube.center();
    let reach = cutoff.outer * r;
    // Per-axis candidate indices and their local coordinates.
    let axes: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|d| {
            let cands: Vec<usize> = if reach >= 0.5 {
                (0..side).collect()
            } else {
                let lo = ((center[d] - reach) * side as f64).floor() as i64;
                let hi = ((center[d] + reach) * side as f64).ceil() as i64;
                let mut v: Vec<usize> = (lo..=hi).map(|i| i.rem_euclid(side as i64) as usize).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            cands
                .into_iter()
                .map(|i| {
                    let diff = i as f64 / side as f64 - center[d];
                    (i, (diff - diff.round()) / r)
                })
                .filter(|&(_, u)| u.abs() < cutoff.outer)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    if axes.iter().any(|a| a.is_empty()) {
        return out;
    }
    let mut pos = vec![0usize; n];
    loop {
        let u: Vec<f64> = (0..n).map(|d| axes[d][pos[d]].1).collect();
        let phi = cutoff.eval(u.iter().map(|x| x * x).sum::<f64>().sqrt());
        if phi > 0.0 {
            let flat = (0..n).fold(0, |acc, d| acc * side + axes[d][pos[d]].0);
            out.push((flat, u, phi));
        }
        let mut d = n;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            pos[d] += 1;
            if pos[d] < axes[d].len() {
                break;
            }
            pos[d] = 0;
        }
    }
}

/// Solves the moment system on `cube`. The polynomial degree drops to 0 when the cutoff
/// support does not fit inside one period, since non-constant polynomials are not periodic.
pub fn fit_local_polynomial(f: &GridFunction, cube: &DyadicCube, opts: &OscillationOptions) -> Result<LocalFit> {
    let n = f.spec().n();
    if cube.dim() != n {
        return Err(OscilletError::Shape("cube dimension differs from the grid".into()));
    }
    let fits = opts.cutoff.outer * cube.side_length() <= 0.5;
    let degree = if fits { opts.moment_order } else { 0 };
    let exps = monomials(n, degree);
    let m = exps.len();
    let pts = support(f, cube, &opts.cutoff);
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut b_re = DVector::<f64>::zeros(m);
    let mut b_im = DVector::<f64>::zeros(m);
    let mut b_abs = vec![0.0; m];
    let vals = f.values();
    for (flat, u, phi) in &pts {
        let mv: Vec<f64> = exps.iter().map(|a| mono(u, a)).collect();
        let fv = vals[*flat];
        for a in 0..m {
            for c in 0..m {
                g[(a, c)] += phi * mv[a] * mv[c];
            }
            b_re[a] += phi * mv[a] * fv.re;
            b_im[a] += phi * mv[a] * fv.im;
            b_abs[a] += (phi * mv[a]).abs() * fv.norm();
        }
    }
    let eig = SymmetricEigen::new(g.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition <= opts.condition_limit) {
        return Err(OscilletError::Conditioning {
            level: cube.level,
            position: cube.position.clone(),
            condition,
        });
    }
    let svd = g.svd(true, true);
    let tol = lmax * 1e-14;
    let x_re = svd.solve(&b_re, tol).map_err(|e| OscilletError::Parameter(e.to_string()))?;
    let x_im = svd.solve(&b_im, tol).map_err(|e| OscilletError::Parameter(e.to_string()))?;
    let coeffs: Vec<Complex64> = (0..m).map(|a| Complex64::new(x_re[a], x_im[a])).collect();
    let mut residual = GridFunction::zeros(*f.spec());
    let mut moments = vec![Complex64::new(0.0, 0.0); m];
    {
        let rv = residual.values_mut();
        for (flat, u, phi) in &pts {
            let mv: Vec<f64> = exps.iter().map(|a| mono(u, a)).collect();
            let p: Complex64 = coeffs.iter().zip(&mv).map(|(c, v)| c * v).sum();
            let r = (vals[*flat] - p) * phi;
            rv[*flat] = r;
            for a in 0..m {
                moments[a] += r * mv[a];
            }
        }
    }
    let moment_residual = moments
        .iter()
        .zip(&b_abs)
        .map(|(mo, s)| if *s > 0.0 { mo.norm() / s } else { mo.norm() })
        .fold(0.0, f64::max);
    Ok(LocalFit {
        cube: cube.clone(),
        degree,
        exponents: exps,
        coeffs,
        condition,
        residual,
        moment_residual,
    })
}

fn cube_weight(cube: &DyadicCube, sp: &SpaceParams) -> f64 {
    cube.volume().powf(sp.gamma2 / cube.dim() as f64 - 1.0 / sp.p)
}

/// Sup over the dyadic cubes of levels `j_min..J` of
/// `|Q|^{γ₂/n−1/p} ‖analyze(φ_Q (f − P_{Q,f}))‖_{TL}`.
pub fn oscillation_norm(
    f: &GridFunction,
    sp: &SpaceParams,
    basis: &WaveletBasis,
    opts: &OscillationOptions,
) -> Result<OscillationEvaluation> {
    sp.validate()?;
    if f.spec() != basis.spec() {
        return Err(OscilletError::Shape("function and basis grids differ".into()));
    }
    let spec = *f.spec();
    let n = spec.n();
    let mut best = ArgMax::new();
    let mut per_level = Vec::new();
    for j0 in spec.j_min()..spec.resolution() {
        let mut level_best: f64 = 0.0;
        for k in 0..(1usize << (n * j0 as usize)) {
            let cube = DyadicCube::from_flat(j0, k, n);
            let fit = fit_local_polynomial(f, &cube, opts)?;
            let c = basis.analyze(&fit.residual)?;
            let v = cube_weight(&cube, sp) * tl_norm(&c, sp.gamma1, sp.p, sp.q)?;
            level_best = level_best.max(v);
            best.offer(v, || cube);
        }
        per_level.push(LevelContribution { level: j0, value: level_best });
    }
    let polynomial_gap = match (&best.key, opts.direct_check) {
        (Some(cube), true) => Some(direct_minimization(f, cube, sp, basis, opts, best.value)?),
        _ => None,
    };
    Ok(OscillationEvaluation {
        value: best.value,
        argmax: best.key,
        per_level,
        degenerate: sp.is_degenerate(n),
        polynomial_gap,
    })
}

/// Nelder–Mead over the coefficients of `P` for the cube value itself, started from the
/// moment solution.
fn direct_minimization(
    f: &GridFunction,
    cube: &DyadicCube,
    sp: &SpaceParams,
    basis: &WaveletBasis,
    opts: &OscillationOptions,
    moment_value: f64,
) -> Result<PolynomialGap> {
    let fit = fit_local_polynomial(f, cube, opts)?;
    let pts = support(f, cube, &opts.cutoff);
    let m = fit.coeffs.len();
    let weight = cube_weight(cube, sp);
    let vals = f.values();
    let objective = |x: &[f64]| -> f64 {
        let mut g = GridFunction::zeros(*f.spec());
        let gv = g.values_mut();
        for (flat, u, phi) in &pts {
            let p: Complex64 = fit
                .exponents
                .iter()
                .enumerate()
                .map(|(a, e)| Complex64::new(x[2 * a], x[2 * a + 1]) * mono(u, e))
                .sum();
            gv[*flat] = (vals[*flat] - p) * phi;
        }
        match basis.analyze(&g).and_then(|c| tl_norm(&c, sp.gamma1, sp.p, sp.q)) {
            Ok(v) => weight * v,
            Err(_) => f64::INFINITY,
        }
    };
    let x0: Vec<f64> = fit.coeffs.iter().flat_map(|c| [c.re, c.im]).collect();
    let scale = f.max_abs().max(1e-300) * 0.05;
    let minimized = nelder_mead(&objective, &x0, scale, 150 * m.max(1));
    let minimized_value = minimized.min(moment_value);
    Ok(PolynomialGap {
        cube: cube.clone(),
        moment_value,
        minimized_value,
        relative_gap: if minimized_value > 0.0 { moment_value / minimized_value - 1.0 } else { 0.0 },
    })
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize) -> f64 {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let mut evals = d + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[d].clone();
        let centroid: Vec<f64> = (0..d)
            .map(|i| simplex[..d].iter().map(|(x, _)| x[i]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> { (0..d).map(|i| centroid[i] + t * (worst.0[i] - centroid[i])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            evals += 1;
            if fc < worst.1 {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = (0..d).map(|i| best[i] + 0.5 * (s.0[i] - best[i])).collect();
                    s.1 = f(&s.0);
                }
                evals += d;
            }
        }
    }
    simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
}
