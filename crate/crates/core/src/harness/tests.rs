use super::*;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = quick_suite(7).experiments.into_iter().find(|e| e.kind == kind).expect("kind listed");
    cfg.samples = 2;
    cfg
}

#[test]
fn kinds_round_trip_through_names() {
    for k in ExperimentKind::ALL {
        assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
    }
    assert!("unknown".parse::<ExperimentKind>().is_err());
    assert_eq!(parse_family("db4").unwrap(), Family::daubechies(4));
    assert!(parse_family("haar").is_err());
}

#[test]
fn seeds_are_counter_based() {
    assert_eq!(derive_seed(42, 1, 5), derive_seed(42, 1, 5));
    let all: std::collections::BTreeSet<u64> = (0..3).flat_map(|st| (0..50).map(move |c| derive_seed(42, st, c))).collect();
    assert_eq!(all.len(), 150);
    assert_ne!(derive_seed(42, 1, 0), derive_seed(43, 1, 0));
}

#[test]
fn suites_cover_every_kind_and_survive_toml() {
    for suite in [default_suite(42), quick_suite(1)] {
        let kinds: std::collections::BTreeSet<ExperimentKind> = suite.experiments.iter().map(|e| e.kind).collect();
        assert_eq!(kinds.len(), 6);
        assert!(suite.experiments.iter().all(|e| e.validate().is_ok()));
        assert_eq!(Suite::from_toml(&suite.to_toml().unwrap()).unwrap(), suite);
    }
    let template = include_str!("../../../../configs/default.toml");
    assert_eq!(Suite::from_toml(template).unwrap(), default_suite(42));
    assert!(Suite::named("nope", 1).is_err());
    assert!(Suite::from_toml("[[experiment]]\nkind = \"bogus\"").is_err());
}

#[test]
fn empty_suite_gives_empty_passing_summary() {
    let r = run_all(&Suite::default());
    assert!(r.summary.experiments.is_empty() && r.summary.all_pass);
    let dir = tempfile::tempdir().unwrap();
    write_reports(&r, dir.path()).unwrap();
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn invalid_configs_are_isolated() {
    let mut bad = small(ExperimentKind::Embeddings);
    bad.resolutions = vec![7, 6];
    let mut refused = small(ExperimentKind::SemigroupCharacterization);
    refused.space.gamma2 = refused.space.gamma1 - 0.1;
    let ok = small(ExperimentKind::CzoBoundedness);
    let r = run_all(&Suite { experiments: vec![bad, refused, ok] });
    assert!(r.outcomes[0].report.error.as_deref().unwrap().contains("strictly increasing"));
    let second = &r.outcomes[1].report;
    assert!(second.error.as_deref().unwrap().contains("precondition violated"));
    assert!(second.preconditions.iter().any(|p| p.required && !p.holds));
    assert!(r.outcomes[2].report.error.is_none());
    assert_eq!(r.summary.experiments.len(), 3);
}

#[test]
fn every_kind_runs_at_small_scale() {
    for kind in ExperimentKind::ALL {
        let out = run_experiment(&small(kind));
        let r = &out.report;
        assert!(r.error.is_none(), "{kind:?}: {:?}", r.error);
        assert!(!r.checks.is_empty() && !out.rows.is_empty());
        let control = r.control.as_ref().expect("every kind has a control");
        assert!(control.detected, "{kind:?} control not detected: {control:?}");
        assert!(r.checks.iter().all(|c| c.value.is_finite() || !c.pass));
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let suite = Suite { experiments: vec![small(ExperimentKind::CzoBoundedness), small(ExperimentKind::Embeddings)] };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_reports(&run_all(&suite), a.path()).unwrap();
    write_reports(&run_all(&suite), b.path()).unwrap();
    let mut names: Vec<String> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in names.iter().filter(|n| *n != "metadata.json") {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let digest = std::fs::read_to_string(a.path().join("digest.txt")).unwrap();
    assert!(digest.contains("czo-boundedness/random"));
}

#[test]
fn checks_fail_on_nan() {
    assert!(!Check::below("x", f64::NAN, 1.0).pass);
    assert!(!Check::above("x", f64::NAN, 1.0).pass);
    assert!(Check::at_least("x", 0.0, 0.0).pass);
    assert!(!ControlOutcome::new("empty", Vec::new()).detected);
}
