use super::*;
use crate::grid::GridFunction;
use crate::semigroup::{evolve_coefficients, SemigroupSpec, TimeGrid};
use crate::tent::TentParams;
use crate::wavelet::WaveletBasis;
use std::f64::consts::PI;

fn random_field(spec: GridSpec, seed: u64) -> CoeffField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = CoeffField::zeros(spec, Family::meyer());
    for v in c.data_mut() {
        *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    c
}

#[test]
fn envelope_and_trivial_matrices() {
    let spec = GridSpec::new(1, 5, 0).unwrap();
    let i = WaveletIndex::new(1, 3, vec![2]);
    assert_eq!(envelope(1, 6.0, &i, &i), 1.0);
    let id = AlmostDiagonalMatrix::identity(spec, Family::meyer());
    let v = validate_decay(&id);
    assert_eq!(v.c_min, 1.0);
    assert!(v.violations.is_empty());
    let zero = generate_random_czo(spec, Family::meyer(), &CzoGenerator::admissible(6.0, 0.0), 1).unwrap();
    assert_eq!(zero.nnz(), 0);
    assert_eq!(validate_decay(&zero).c_min, 0.0);
    let c = random_field(spec, 3);
    assert_eq!(apply_matrix(&id, &c).unwrap(), c);
}

#[test]
fn generator_is_deterministic_and_admissible() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let g = CzoGenerator::admissible(6.0, 2.0);
    let a = generate_random_czo(spec, Family::meyer(), &g, 9).unwrap();
    let b = generate_random_czo(spec, Family::meyer(), &g, 9).unwrap();
    assert_eq!(a, b);
    let v = validate_decay(&a);
    assert!(v.violations.is_empty());
    assert!(v.c_min <= 2.0 * (1.0 + 1e-12) && v.c_min > 1.0);
    assert_ne!(a, generate_random_czo(spec, Family::meyer(), &g, 10).unwrap());
    // Rows on shared indices agree across resolutions.
    let finer = generate_random_czo(GridSpec::new(1, 7, 0).unwrap(), Family::meyer(), &g, 9).unwrap();
    let (la, lf) = (a.layout(), finer.layout());
    let idx = WaveletIndex::new(1, 2, vec![1]);
    let ra: Vec<(WaveletIndex, Complex64)> = a.row(la.encode(&idx).unwrap()).iter().map(|&(j, v)| (la.decode(j), v)).collect();
    let rf: Vec<(WaveletIndex, Complex64)> = finer
        .row(lf.encode(&idx).unwrap())
        .iter()
        .map(|&(j, v)| (lf.decode(j), v))
        .filter(|(i, _)| i.level < 6)
        .collect();
    assert_eq!(ra, rf);
    let control = generate_random_czo(spec, Family::meyer(), &CzoGenerator::violating(), 9).unwrap();
    assert!(!validate_decay(&control).violations.is_empty());
}

#[test]
fn faster_decay_has_less_off_diagonal_mass() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let mass = |n0: f64| {
        let m = generate_random_czo(spec, Family::meyer(), &CzoGenerator::admissible(n0, 1.0), 4).unwrap();
        m.entries().filter(|(i, j, _)| i != j).map(|(_, _, v)| v.norm()).sum::<f64>()
    };
    assert!(mass(4.0) < mass(1.0));
}

#[test]
fn application_is_linear_and_matches_dense_product() {
    let spec = GridSpec::new(1, 4, 0).unwrap();
    let m = generate_random_czo(spec, Family::meyer(), &CzoGenerator::admissible(2.0, 1.0), 5).unwrap();
    let (u, v) = (random_field(spec, 1), random_field(spec, 2));
    let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
    let mut mix = u.scale(a);
    for (x, y) in mix.data_mut().iter_mut().zip(v.data()) {
        *x += b * y;
    }
    let lhs = apply_matrix(&m, &mix).unwrap();
    let mut rhs = apply_matrix(&m, &u).unwrap().scale(a);
    for (x, y) in rhs.data_mut().iter_mut().zip(apply_matrix(&m, &v).unwrap().data()) {
        *x += b * y;
    }
    assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    let dim = m.dim();
    let out = apply_matrix(&m, &u).unwrap();
    for i in 0..dim {
        let dense: Complex64 = (0..dim).map(|j| m.get(i, j) * u.data()[j]).sum();
        assert!((dense - out.data()[i]).norm() < 1e-10);
    }
    let other = random_field(GridSpec::new(1, 5, 0).unwrap(), 1);
    assert!(apply_matrix(&m, &other).is_err());
}

#[test]
fn identity_experiment_has_unit_ratios() {
    let sp = SpaceParams::new(0.0, 0.3, 2.0, 2.0).unwrap();
    let r = czo_boundedness_experiment(
        "identity",
        &sp,
        &[5, 6],
        3,
        |j| Ok(AlmostDiagonalMatrix::identity(GridSpec::new(1, j, 0).unwrap(), Family::meyer())),
        |j, s| Ok(random_field(GridSpec::new(1, j, 0).unwrap(), s as u64)),
    )
    .unwrap();
    assert!(r.samples.iter().all(|s| (s.ratio - 1.0).abs() < 1e-12));
    assert!(r.pass && r.growth.abs() < 1e-12);
}

#[test]
fn riesz_multiplier_identities() {
    let spec = GridSpec::new(1, 6, 0).unwrap();
    let f = GridFunction::from_fn(spec, |x| Complex64::new((2.0 * PI * x[0]).cos(), 0.0));
    let g = riesz_apply(&f, 1).unwrap();
    let want = GridFunction::from_fn(spec, |x| Complex64::new((2.0 * PI * x[0]).sin(), 0.0));
    assert!(g.max_abs_diff(&want).unwrap() < 1e-13);
    assert!(riesz_apply(&f, 2).is_err());
    let spec2 = GridSpec::new(2, 5, 0).unwrap();
    let h = GridFunction::from_fn(spec2, |x| Complex64::new((2.0 * PI * (x[0] + 3.0 * x[1])).sin() + 0.7 + x[0] * x[1], 0.0));
    let mut sum = GridFunction::zeros(spec2);
    for l in 1..=2 {
        let r = riesz_apply(&h, l).unwrap();
        assert!(r.lp_norm(2.0).unwrap() <= h.lp_norm(2.0).unwrap() + 1e-12);
        sum = sum.add(&riesz_apply(&r, l).unwrap()).unwrap();
    }
    let mean = h.mean();
    let want = GridFunction::from_fn(spec2, |_| Complex64::new(0.0, 0.0)).sub(&h).unwrap();
    let want = GridFunction::new(spec2, want.values().iter().map(|v| v + mean).collect()).unwrap();
    assert!(sum.max_abs_diff(&want).unwrap() < 1e-10);
}

#[test]
fn riesz_matrix_band_and_consistency() {
    let spec = GridSpec::new(1, 7, 0).unwrap();
    let basis = WaveletBasis::meyer(spec);
    let rm = riesz_matrix(&basis, 1, 2.0).unwrap();
    assert!(rm.off_band_max < 1e-10, "{}", rm.off_band_max);
    assert!(validate_decay(&rm.matrix).violations.is_empty());
    let c = random_field(spec, 8);
    let via_matrix = apply_matrix(&rm.matrix, &c).unwrap();
    let via_multiplier = basis.analyze(&riesz_apply(&basis.synthesize(&c).unwrap(), 1).unwrap()).unwrap();
    assert!(via_matrix.max_abs_diff(&via_multiplier).unwrap() < 1e-8);
    assert!(riesz_coefficients(&basis, &c, 1).unwrap().max_abs_diff(&via_multiplier).unwrap() < 1e-10);
    // Skew-adjointness of the Hilbert transform.
    let m = &rm.matrix;
    for (i, j, v) in m.entries() {
        assert!((v + m.get(j, i).conj()).norm() < 1e-12);
    }
    let db = WaveletBasis::daubechies(spec, 3).unwrap();
    assert!(matches!(riesz_matrix(&db, 1, 2.0), Err(OscilletError::Unsupported(_))));
}

#[test]
fn riesz_tent_ratios() {
    let spec = GridSpec::new(2, 4, 0).unwrap();
    let basis = WaveletBasis::meyer(spec);
    let sg = SemigroupSpec::new(1.0, spec).unwrap();
    let tg = TimeGrid::new(TimeGrid::standard(&spec, 1.0).t_min, 4.0, 64).unwrap();
    let tp = TentParams::new(SpaceParams::new(-0.2, 0.1, 2.0, 2.0).unwrap(), 3.0, 1.0, 1.0, 1.0).unwrap();
    let zero = evolve_coefficients(&sg, &basis, &GridFunction::zeros(spec), &tg).unwrap();
    let r = riesz_tent_experiment(&basis, &zero, &tp, 1).unwrap();
    assert!(r.ratios.iter().all(Option::is_none));
    let f = GridFunction::from_fn(spec, |x| Complex64::new((2.0 * PI * (x[0] + 2.0 * x[1])).cos() + (2.0 * PI * 5.0 * x[0]).sin(), 0.0));
    let tcf = evolve_coefficients(&sg, &basis, &f, &tg).unwrap();
    let r = riesz_tent_experiment(&basis, &tcf, &tp, 2).unwrap();
    assert!(r.ratios.iter().all(|v| v.is_some_and(|x| x.is_finite() && x > 0.0)));
    assert!(r.cross_iii.is_some_and(f64::is_finite));
}

#[test]
fn growth_is_the_fitted_log_slope() {
    assert_eq!(growth_per_level(&[(8, 2.0)]), 0.0);
    assert!((growth_per_level(&[(8, 1.0), (9, 2.0), (10, 4.0)]) - 1.0).abs() < 1e-12);
    assert!((growth_per_level(&[(8, 1.0), (10, 4.0)]) - 1.0).abs() < 1e-12);
    // One outlier step does not dominate the fitted trend.
    let g = growth_per_level(&[(8, 1.0), (9, 1.2), (10, 1.1)]);
    assert!((g - 1.1f64.sqrt() + 1.0).abs() < 1e-12);
    assert!(growth_per_level(&[(8, 2.0), (9, 1.0)]) < 0.0);
    assert_eq!(growth_per_level(&[(8, 0.0), (9, 0.0)]), 0.0);
    assert_eq!(growth_per_level(&[(8, 0.0), (9, 1.0)]), f64::INFINITY);
}
