//! Property tests for the structural invariants of the library.

use num_complex::Complex64;
use oscillet::harness::derive_seed;
use oscillet::io;
use oscillet::norms::{tl_norm, tlm_wavelet_norm, SpaceParams};
use oscillet::operators::{growth_per_level, riesz_apply};
use oscillet::semigroup::{heat_apply, SemigroupSpec};
use oscillet::wavelet::Layout;
use oscillet::{CoeffField, Family, GridFunction, GridSpec, WaveletBasis};
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = GridSpec> {
    prop_oneof![(1u32..=7).prop_map(|j| (1usize, j)), (1u32..=4).prop_map(|j| (2usize, j)), (1u32..=2).prop_map(|j| (3usize, j))]
        .prop_flat_map(|(n, j)| (Just(n), Just(j), 0..=j - 1))
        .prop_map(|(n, j, j_min)| GridSpec::new(n, j, j_min).unwrap())
}

fn values(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

fn function() -> impl Strategy<Value = GridFunction> {
    grid().prop_flat_map(|spec| values(spec.len()).prop_map(move |v| GridFunction::new(spec, v).unwrap()))
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::meyer()), (1usize..=6).prop_map(Family::daubechies)]
}

fn space() -> impl Strategy<Value = SpaceParams> {
    (-0.5f64..1.0, 0.0f64..1.0, 1.0f64..4.0, prop_oneof![(1.0f64..4.0).boxed(), Just(f64::INFINITY).boxed()])
        .prop_map(|(g1, g2, p, q)| SpaceParams::new(g1, g2, p, q).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_is_unitary(f in function(), fam in family()) {
        let basis = WaveletBasis::new(*f.spec(), fam).unwrap();
        let c = basis.analyze(&f).unwrap();
        let energy = f.inner(&f).unwrap().re;
        prop_assert!(close(c.energy(), energy, 1e-10));
        prop_assert!(basis.synthesize(&c).unwrap().max_abs_diff(&f).unwrap() < 1e-10);
    }

    #[test]
    fn layout_is_a_bijection(spec in grid()) {
        let layout = Layout::new(&spec);
        prop_assert_eq!(layout.total(), spec.len());
        for flat in 0..layout.total() {
            prop_assert_eq!(layout.encode(&layout.decode(flat)).unwrap(), flat);
        }
    }

    #[test]
    fn norms_are_homogeneous_and_dominate(f in function(), sp in space(), scale in 0.01f64..100.0) {
        let c = WaveletBasis::meyer(*f.spec()).analyze(&f).unwrap();
        let tlm = tlm_wavelet_norm(&c, &sp).unwrap().value;
        let tl = tl_norm(&c, sp.gamma1, sp.p, sp.q).unwrap();
        prop_assert!(tl >= 0.0 && tlm >= tl * (1.0 - 1e-12));
        let scaled = c.scale(Complex64::new(0.0, scale));
        prop_assert!(close(tlm_wavelet_norm(&scaled, &sp).unwrap().value, scale * tlm, 1e-10));
        prop_assert!(close(tl_norm(&scaled, sp.gamma1, sp.p, sp.q).unwrap(), scale * tl, 1e-10));
    }

    #[test]
    fn sequence_norm_obeys_triangle_inequality(
        (spec, a, b) in grid().prop_flat_map(|s| (Just(s), values(s.len()), values(s.len()))),
        sp in space(),
    ) {
        let ca = CoeffField::from_data(spec, Family::meyer(), a).unwrap();
        let cb = CoeffField::from_data(spec, Family::meyer(), b).unwrap();
        let sum: Vec<Complex64> = ca.data().iter().zip(cb.data()).map(|(x, y)| x + y).collect();
        let cs = CoeffField::from_data(spec, Family::meyer(), sum).unwrap();
        let n = |c: &CoeffField| tlm_wavelet_norm(c, &sp).unwrap().value;
        prop_assert!(n(&cs) <= (n(&ca) + n(&cb)) * (1.0 + 1e-12));
    }

    #[test]
    fn collapse_point_reproduces_the_plain_norm(f in function(), sp in space()) {
        let n = f.spec().n() as f64;
        let sp = SpaceParams::new(sp.gamma1, n / sp.p, sp.p, sp.q).unwrap();
        let c = WaveletBasis::meyer(*f.spec()).analyze(&f).unwrap();
        let tl = tl_norm(&c, sp.gamma1, sp.p, sp.q).unwrap();
        prop_assert!(close(tlm_wavelet_norm(&c, &sp).unwrap().value, tl, 1e-12));
    }

    #[test]
    fn heat_flow_is_a_contractive_semigroup(f in function(), beta in 0.1f64..=2.0, s in 0.0f64..0.05, t in 0.0f64..0.05) {
        let sg = SemigroupSpec::new(beta, *f.spec()).unwrap();
        let once = heat_apply(&sg, &f, s + t).unwrap();
        let twice = heat_apply(&sg, &heat_apply(&sg, &f, s).unwrap(), t).unwrap();
        prop_assert!(once.max_abs_diff(&twice).unwrap() < 1e-10);
        prop_assert!(once.lp_norm(2.0).unwrap() <= f.lp_norm(2.0).unwrap() * (1.0 + 1e-12));
        prop_assert!((once.mean() - f.mean()).norm() < 1e-12);
    }

    #[test]
    fn riesz_transforms_resolve_minus_identity(f in function()) {
        let spec = *f.spec();
        let mut sum = GridFunction::zeros(spec);
        for l in 1..=spec.n() {
            let r = riesz_apply(&f, l).unwrap();
            prop_assert!(r.lp_norm(2.0).unwrap() <= f.lp_norm(2.0).unwrap() * (1.0 + 1e-12));
            sum = sum.add(&riesz_apply(&r, l).unwrap()).unwrap();
        }
        let mean = f.mean();
        let want = GridFunction::new(spec, f.values().iter().map(|v| mean - v).collect()).unwrap();
        prop_assert!(sum.max_abs_diff(&want).unwrap() < 1e-10);
    }

    #[test]
    fn files_round_trip(f in function(), fam in family()) {
        let mut buf = Vec::new();
        io::write_grid_function(&mut buf, &f).unwrap();
        // The grid format carries n and J only; j_min reads back as 0.
        let back = io::read_grid_function(&mut buf.as_slice()).unwrap();
        prop_assert!(back.values() == f.values() && back.spec().n() == f.spec().n());
        prop_assert!(back.spec().resolution() == f.spec().resolution() && back.spec().j_min() == 0);
        let c = WaveletBasis::new(*f.spec(), fam).unwrap().analyze(&f).unwrap();
        let mut buf = Vec::new();
        io::write_coeff_binary(&mut buf, &c).unwrap();
        prop_assert!(io::read_coeff_binary(&mut buf.as_slice()).unwrap() == c);
        let json = serde_json::to_string(&io::CoeffFile::from_field(&c)).unwrap();
        prop_assert!(serde_json::from_str::<io::CoeffFile>(&json).unwrap().to_field().unwrap() == c);
    }

    #[test]
    fn growth_is_scale_invariant_and_exact_on_geometric_data(
        start in 8u32..12, r in 0.2f64..3.0, a in 1e-3f64..1e3, k in 2usize..5,
    ) {
        let rows: Vec<(u32, f64)> = (0..k as u32).map(|i| (start + i, a * r.powi(i as i32))).collect();
        prop_assert!(close(growth_per_level(&rows) + 1.0, r, 1e-10));
        let scaled: Vec<(u32, f64)> = rows.iter().map(|&(j, v)| (j, 7.0 * v)).collect();
        prop_assert!((growth_per_level(&scaled) - growth_per_level(&rows)).abs() < 1e-10);
    }

    #[test]
    fn derived_seeds_are_pure(master: u64, stream in 0u64..16, counter in 0u64..1_000_000) {
        prop_assert_eq!(derive_seed(master, stream, counter), derive_seed(master, stream, counter));
        prop_assert_ne!(derive_seed(master, stream, counter), derive_seed(master, stream, counter + 1));
    }
}
