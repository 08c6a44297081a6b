use super::*;
use crate::grid::{GridFunction, GridSpec};
use crate::semigroup::{evolve_coefficients, scaling_lift, SemigroupSpec, TimeGrid};
use crate::wavelet::{CoeffField, Family, WaveletBasis};
use num_complex::Complex64;

fn params(gamma1: f64, gamma2: f64, p: f64, q: f64, m: f64, mp: f64, beta: f64) -> TentParams {
    TentParams::new(SpaceParams::new(gamma1, gamma2, p, q).unwrap(), m, mp, beta, 1.0).unwrap()
}

fn single(spec: GridSpec, j: u32, k: usize, v: f64) -> CoeffField {
    let mut c = CoeffField::zeros(spec, Family::meyer());
    c.set(&WaveletIndex::new(1, j, vec![k]), Complex64::new(v, 0.0)).unwrap();
    c
}

fn heat_field(spec: GridSpec, beta: f64, seed: u64) -> TimeCoeffField {
    let basis = WaveletBasis::meyer(spec);
    let sg = SemigroupSpec::new(beta, spec).unwrap();
    let f = GridFunction::from_fn(spec, |x| {
        let s: f64 = x.iter().enumerate().map(|(d, v)| (d + 1) as f64 * v).sum();
        Complex64::new(
            (2.0 * std::f64::consts::PI * (3.0 + seed as f64) * s).sin() + 0.4 * (2.0 * std::f64::consts::PI * 11.0 * s).cos(),
            0.0,
        )
    });
    evolve_coefficients(&sg, &basis, &f, &TimeGrid::standard(&spec, beta)).unwrap()
}

#[test]
fn zero_field_is_zero() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let tp = params(-0.2, 0.1, 2.0, 2.0, 3.0, 1.0, 1.0);
    let tcf = TimeCoeffField::from_profile(1.0, TimeGrid::standard(&spec, 1.0), &CoeffField::zeros(spec, Family::meyer()), |_, _| 1.0).unwrap();
    let r = tent_norms(&tcf, &tp, &TentOptions::default()).unwrap();
    assert_eq!(r.values(), [0.0; 4]);
    assert_eq!(r.combined, 0.0);
    assert_eq!(bloch_norm(&tcf, -0.2, 1.0, 1.0).unwrap(), 0.0);
    let e = check_embeddings(&tcf, &tp).unwrap();
    assert!(!e.flagged && e.high.max_ratio == 0.0);
}

#[test]
fn part_i_matches_brute_force() {
    let spec = GridSpec::new(1, 7, 0).unwrap();
    let (j, k, beta) = (4u32, 5usize, 1.0);
    let tp = params(-0.2, 0.1, 2.0, 2.0, 3.0, 1.0, beta);
    let tg = TimeGrid::standard(&spec, beta);
    let c = single(spec, j, k, 1.0);
    let tcf = TimeCoeffField::from_profile(beta, tg, &c, |jj, t| (-t * (2.0 * beta * jj as f64).exp2()).exp()).unwrap();
    let got = tent_norm_i(&tcf, &tp).unwrap();
    let mut want: f64 = 0.0;
    for l in 0..tg.len {
        let t = tg.node(l);
        let s = t * (2.0 * beta * j as f64).exp2();
        if s < 1.0 - 1e-9 {
            continue;
        }
        let a = (-s).exp();
        for j0 in 0..=j {
            let vol_q = (-(j0 as f64)).exp2();
            let inner = t.powf(tp.m) * (j as f64 * (tp.sp.gamma1 + 0.5 + 2.0 * tp.m * beta)).exp2() * a;
            let v = vol_q.powf(tp.sp.gamma2 - 0.5) * inner * (-(j as f64) / 2.0).exp2();
            want = want.max(v);
        }
    }
    assert!((got / want - 1.0).abs() < 1e-10, "{got} vs {want}");
    // Homogeneity.
    let scaled = TimeCoeffField::from_profile(beta, tg, &c.scale(Complex64::new(0.0, -3.0)), |jj, t| {
        (-t * (2.0 * beta * jj as f64).exp2()).exp()
    })
    .unwrap();
    let r1 = tent_norms(&tcf, &tp, &TentOptions::default()).unwrap();
    let r3 = tent_norms(&scaled, &tp, &TentOptions::default()).unwrap();
    for (a, b) in r1.values().iter().zip(r3.values()) {
        assert!((3.0 * a - b).abs() <= 1e-10 * b.max(1e-300));
    }
}

#[test]
fn part_ii_single_index_and_vacuous_band() {
    let spec = GridSpec::new(1, 7, 0).unwrap();
    let (j, beta) = (4u32, 1.0);
    let tp = params(-0.2, 0.1, 2.0, 2.0, 3.0, 1.0, beta);
    let tg = TimeGrid::standard(&spec, beta);
    let c = single(spec, j, 2, 1.0);
    let tcf = TimeCoeffField::from_profile(beta, tg, &c, |_, _| 1.0).unwrap();
    // Level j lies in part II at nodes with t 2^{2βj} < 1, for cubes of level j0 < j.
    let want = (0..j)
        .map(|j0| (-(j0 as f64)).exp2().powf(tp.sp.gamma2 - 0.5) * (j as f64 * (tp.sp.gamma1 + 0.5)).exp2() * (-(j as f64) / 2.0).exp2())
        .fold(0.0, f64::max);
    let got = tent_norm_ii(&tcf, &tp).unwrap();
    assert!((got / want - 1.0).abs() < 1e-12);
    // Only nodes with t >= 1 remain: no level sits below the seam.
    let late = TimeGrid::new(1.0, 4.0, 8).unwrap();
    let tcf = TimeCoeffField::from_profile(beta, late, &c, |_, _| 1.0).unwrap();
    assert_eq!(tent_norm_ii(&tcf, &tp).unwrap(), 0.0);
}

#[test]
fn time_integrals_match_closed_forms() {
    let spec = GridSpec::new(1, 7, 0).unwrap();
    let (j, beta) = (5u32, 0.75);
    for q in [1.0, 2.0] {
        let tp = params(-0.2, 0.1, 2.0, q, 3.0, 1.5, beta);
        let c = single(spec, j, 9, 1.0);
        let tcf = TimeCoeffField::from_profile(beta, TimeGrid::standard(&spec, beta), &c, |_, _| 1.0).unwrap();
        let n = 1.0;
        let (g1, g2, p, m, mp) = (tp.sp.gamma1, tp.sp.gamma2, tp.sp.p, tp.m, tp.m_prime);
        let cube = |j0: u32, s: f64| (-(j0 as f64)).exp2().powf(g2 / n - 1.0 / p) * s.powf(1.0 / q) * (-(j as f64) / p).exp2();
        let want3 = (0..j)
            .map(|j0| {
                let hi = (-2.0 * beta * j0 as f64).exp2().powf(q * m);
                let lo = (-2.0 * beta * j as f64).exp2().powf(q * m);
                let s = (q * j as f64 * (g1 + n / 2.0 + 2.0 * m * beta)).exp2() * (hi - lo) / (q * m);
                cube(j0, s)
            })
            .fold(0.0, f64::max);
        let got3 = tent_norm_iii(&tcf, &tp).unwrap();
        assert!((got3 / want3 - 1.0).abs() < 1e-3, "q={q}: {got3} vs {want3}");
        let s4 = (q * j as f64 * (g1 + n / 2.0)).exp2() / (q * mp);
        let want4 = (0..=j).map(|j0| cube(j0, s4)).fold(0.0, f64::max);
        let got4 = tent_norm_iv(&tcf, &tp).unwrap();
        assert!((got4 / want4 - 1.0).abs() < 1e-3, "q={q}: {got4} vs {want4}");
    }
}

#[test]
fn literal_placement_agrees_at_q_one() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let tcf = heat_field(spec, 1.0, 1);
    let tp = params(-0.2, 0.1, 2.0, 1.0, 3.0, 1.0, 1.0);
    let a = tent_norms(&tcf, &tp, &TentOptions::default()).unwrap();
    let b = tent_norms(&tcf, &tp, &TentOptions { placement: ExponentPlacement::Literal, seam_shift: 0 }).unwrap();
    assert_eq!(a.values(), b.values());
    let tp2 = params(-0.2, 0.1, 2.0, 2.0, 3.0, 1.0, 1.0);
    let c = tent_norms(&tcf, &tp2, &TentOptions { placement: ExponentPlacement::Literal, seam_shift: 0 }).unwrap();
    assert_eq!(c.placement, ExponentPlacement::Literal);
}

#[test]
fn quadrature_refinement_is_stable() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let beta = 1.0;
    let basis = WaveletBasis::meyer(spec);
    let sg = SemigroupSpec::new(beta, spec).unwrap();
    let f = basis.synthesize(&single(spec, 3, 2, 1.0).scale(Complex64::new(1.0, 0.0))).unwrap();
    let tp = params(-0.2, 0.1, 2.0, 2.0, 3.0, 1.0, beta);
    let base = TimeGrid::standard(&spec, beta);
    let coarse = evolve_coefficients(&sg, &basis, &f, &base).unwrap();
    let fine = evolve_coefficients(&sg, &basis, &f, &TimeGrid::new(base.t_min, base.t_max, 2 * base.len).unwrap()).unwrap();
    let a = tent_norms(&coarse, &tp, &TentOptions::default()).unwrap();
    let b = tent_norms(&fine, &tp, &TentOptions::default()).unwrap();
    for i in [2, 3] {
        assert!(relative_change(a.values()[i], b.values()[i]) < 1e-3, "part {i}: {} vs {}", a.values()[i], b.values()[i]);
    }
    assert!(a.quadrature_iii < 1e-2 && a.quadrature_iv < 1e-2);
    assert!(a.tail_iv > 0.0 && a.tail_iv < 1e-2, "{}", a.tail_iv);
}

#[test]
fn monotone_under_domination_and_seam_report() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let tcf = heat_field(spec, 1.0, 2);
    let bigger = tcf.map_slices(|s| {
        let mut out = s.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v *= 1.0 + (i % 3) as f64;
        }
        Ok(out)
    })
    .unwrap();
    let tp = params(-0.2, 0.1, 2.0, 2.0, 3.0, 1.0, 1.0);
    let a = tent_norms(&tcf, &tp, &TentOptions::default()).unwrap();
    let b = tent_norms(&bigger, &tp, &TentOptions::default()).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!(*x <= y * (1.0 + 1e-12));
    }
    assert_eq!(a.seam.len(), 3);
    assert_eq!(a.seam[1].part_i, a.parts[0].value);
    assert!(a.seam.iter().all(|s| s.joint.is_finite() && s.joint > 0.0));
    assert!(a.violations.is_empty());
}

#[test]
fn bloch_plateau_profile() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let (j, beta, tau, g1) = (3u32, 1.0, 0.7, -0.2);
    let c = single(spec, j, 1, 1.0);
    let tcf = TimeCoeffField::from_profile(beta, TimeGrid::standard(&spec, beta), &c, |jj, t| {
        let s = t * (2.0 * beta * jj as f64).exp2();
        if s >= 1.0 { s.powf(-tau) } else { 1.0 }
    })
    .unwrap();
    let want = 2.0 * (j as f64 * (0.5 + g1)).exp2();
    assert!((bloch_norm(&tcf, g1, tau, beta).unwrap() / want - 1.0).abs() < 1e-12);
    assert!(bloch_norm(&tcf, g1, 0.0, beta).is_err());
}

#[test]
fn t_linf_weight_cancels() {
    let spec = GridSpec::new(2, 4, 0).unwrap();
    let (beta, g1) = (1.0, -0.3);
    let basis = WaveletBasis::meyer(spec);
    let sg = SemigroupSpec::new(beta, spec).unwrap();
    let g = GridFunction::from_fn(spec, |x| Complex64::new((2.0 * std::f64::consts::PI * (x[0] + 2.0 * x[1])).cos() + 0.5, 0.0));
    let tg = TimeGrid::new(1e-4, 1.0, 9).unwrap();
    // Zero time evolution: scaling coefficients of g, reweighted by t^{γ₁/2β}.
    let mut ts = scaling_lift(&sg, &basis, &g, &TimeGrid::new(1e-300, 2e-300, 9).unwrap()).unwrap();
    ts.grid = tg;
    for (l, per_level) in ts.data.iter_mut().enumerate() {
        let w = tg.node(l).powf(g1 / (2.0 * beta));
        per_level.iter_mut().flatten().for_each(|v| *v *= w);
    }
    let mut want: f64 = 0.0;
    for j in 0..4 {
        for c in basis.scaling_coefficients(&g, j).unwrap() {
            want = want.max((j as f64).exp2() * c.norm());
        }
    }
    assert!((t_linf_norm(&ts, g1, beta).unwrap() / want - 1.0).abs() < 1e-10);
}

#[test]
fn embeddings_flag_growing_profile() {
    let spec = GridSpec::new(1, 7, 0).unwrap();
    let beta = 1.0;
    let tp = params(-0.2, 0.1, 2.0, 2.0, 3.0, 1.0, beta);
    let basis = WaveletBasis::meyer(spec);
    let sg = SemigroupSpec::new(beta, spec).unwrap();
    let tg = TimeGrid::standard(&spec, beta);
    let f = basis.synthesize(&single(spec, 4, 3, 1.0)).unwrap();
    let tcf = evolve_coefficients(&sg, &basis, &f, &tg).unwrap();
    let good = check_embeddings(&tcf, &tp).unwrap();
    assert!(!good.flagged, "{good:?}");
    assert!(good.high.max_ratio > 0.0 && good.low.max_ratio > 0.0);
    let bad = TimeCoeffField::from_profile(beta, tg, &single(spec, 4, 3, 1.0), |j, t| t * (2.0 * beta * j as f64).exp2()).unwrap();
    assert!(check_embeddings(&bad, &tp).unwrap().flagged);
}

#[test]
fn invalid_parameters() {
    let sp = SpaceParams::new(0.0, 0.3, 2.0, 2.0).unwrap();
    assert!(TentParams::new(sp, 3.0, 0.0, 1.0, 1.0).is_err());
    assert!(TentParams::new(sp, 3.0, 1.0, -1.0, 1.0).is_err());
    assert!(TentParams::new(sp, 3.0, 1.0, 1.0, 0.0).is_err());
    let tp = TentParams::new(sp, 1.5, 1.0, 1.0, 0.1).unwrap();
    assert_eq!(tp.characterization_violations().len(), 2);
}
