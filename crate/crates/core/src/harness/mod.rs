//! Experiment orchestration: configuration, deterministic seeding, test-function generators,
//! the end-to-end experiments and their JSON/CSV/text reports.

mod experiments;
mod generators;

pub use generators::{generate_test_function, random_coefficients, GeneratorKind, TestFunctionSpec, NORM_TOLERANCE};

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, OscilletError, Result};
use crate::grid::GridSpec;
use crate::norms::SpaceParams;
use crate::tent::TentParams;
use crate::wavelet::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NormEquivalence,
    SemigroupCharacterization,
    CzoBoundedness,
    RieszTent,
    DecayBounds,
    Embeddings,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::NormEquivalence,
        ExperimentKind::SemigroupCharacterization,
        ExperimentKind::CzoBoundedness,
        ExperimentKind::RieszTent,
        ExperimentKind::DecayBounds,
        ExperimentKind::Embeddings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NormEquivalence => "norm-equivalence",
            ExperimentKind::SemigroupCharacterization => "semigroup-characterization",
            ExperimentKind::CzoBoundedness => "czo-boundedness",
            ExperimentKind::RieszTent => "riesz-tent",
            ExperimentKind::DecayBounds => "decay-bounds",
            ExperimentKind::Embeddings => "embeddings",
        }
    }

    /// Seed stream of the experiment kind; distinct kinds never share sample seeds.
    fn stream(self) -> u64 {
        Self::ALL.iter().position(|k| *k == self).expect("listed") as u64 + 1
    }
}

impl FromStr for ExperimentKind {
    type Err = OscilletError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| OscilletError::Parameter(format!("unknown experiment kind '{s}'")))
    }
}

/// `m`, `m′` and `τ` of the tent space; `β` comes from the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TentSettings {
    pub m: f64,
    pub m_prime: f64,
    pub tau: f64,
}

impl Default for TentSettings {
    fn default() -> Self {
        TentSettings { m: 3.0, m_prime: 1.0, tau: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzoSettings {
    /// Decay order of the admissible operators.
    pub n0: f64,
    /// Envelope constant.
    pub c: f64,
    /// Decay orders whose ratio trend is reported.
    #[serde(default)]
    pub sweep: Vec<f64>,
}

impl Default for CzoSettings {
    fn default() -> Self {
        CzoSettings { n0: 6.0, c: 1.0, sweep: vec![1.0, 2.0, 4.0, 6.0, 8.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputPaths {
    /// Report file name inside the output directory; defaults to `<kind>-<label>.json`.
    #[serde(default)]
    pub report: Option<String>,
}

fn default_betas() -> Vec<f64> {
    vec![1.0]
}

fn default_families() -> Vec<String> {
    vec!["meyer".into()]
}

fn default_time_nodes() -> usize {
    256
}

fn default_localization() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub label: String,
    pub dimension: usize,
    #[serde(default)]
    pub j_min: u32,
    /// Resolutions `J`, strictly increasing.
    pub resolutions: Vec<u32>,
    pub space: SpaceParams,
    #[serde(default)]
    pub tent: TentSettings,
    /// Fractional orders `β`; single-order experiments use the first.
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    pub samples: usize,
    /// Master seed; the suite seed overrides it.
    #[serde(default)]
    pub seed: u64,
    /// `meyer` or `db<N>`.
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default)]
    pub generator: GeneratorKind,
    #[serde(default = "default_time_nodes")]
    pub time_nodes: usize,
    /// Spatial localization order of the coefficient decay bounds.
    #[serde(default = "default_localization")]
    pub localization: f64,
    #[serde(default)]
    pub czo: CzoSettings,
    #[serde(default)]
    pub output: OutputPaths,
}

/// `meyer` or `db<N>`.
pub fn parse_family(s: &str) -> Result<Family> {
    if s == "meyer" {
        return Ok(Family::meyer());
    }
    s.strip_prefix("db")
        .and_then(|o| o.parse::<usize>().ok())
        .map(Family::daubechies)
        .ok_or_else(|| OscilletError::Parameter(format!("unknown basis family '{s}'")))
}

/// Counter-based seed: word `counter` of the ChaCha stream `stream` keyed by `master`.
pub fn derive_seed(master: u64, stream: u64, counter: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.set_word_pos(2 * counter as u128);
    rng.next_u64()
}

impl ExperimentConfig {
    pub fn grid(&self, resolution: u32) -> Result<GridSpec> {
        GridSpec::new(self.dimension, resolution, self.j_min)
    }

    pub fn family_list(&self) -> Result<Vec<Family>> {
        self.families.iter().map(|f| parse_family(f)).collect()
    }

    pub fn tent_params(&self, beta: f64) -> Result<TentParams> {
        TentParams::new(self.space, self.tent.m, self.tent.m_prime, beta, self.tent.tau)
    }

    /// Seed of sample `s`, independent of the resolution.
    pub fn sample_seed(&self, s: u64) -> u64 {
        derive_seed(self.seed, self.kind.stream(), s)
    }

    pub fn report_name(&self) -> String {
        self.output.report.clone().unwrap_or_else(|| format!("{}-{}.json", self.kind.name(), self.label))
    }

    /// Shape checks shared by every kind.
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.label.is_empty() || !self.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return param(format!("label '{}' must be non-empty ASCII alphanumerics, '-' or '_'", self.label));
        }
        if self.resolutions.is_empty() || self.resolutions.windows(2).any(|w| w[0] >= w[1]) {
            return param("resolutions must be non-empty and strictly increasing");
        }
        for &j in &self.resolutions {
            self.grid(j)?;
        }
        if self.samples == 0 {
            return param("at least one sample is required");
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b > 0.0 && *b <= 2.0)) {
            return param("every β must lie in (0, 2]");
        }
        if self.families.is_empty() {
            return param("at least one basis family is required");
        }
        self.family_list()?;
        if self.time_nodes < 2 {
            return param("at least two time nodes are required");
        }
        if !(self.localization > 0.0) {
            return param("localization order must be positive");
        }
        Ok(())
    }
}

/// A set of experiments, serialized as `[[experiment]]` tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Suite> {
        toml::from_str(text).map_err(|e| OscilletError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Suite> {
        Suite::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| OscilletError::Format(e.to_string()))
    }

    pub fn with_seed(mut self, seed: u64) -> Suite {
        self.experiments.iter_mut().for_each(|e| e.seed = seed);
        self
    }

    /// Named built-in suites: `default` runs every kind at desk scale, `quick` at reduced size.
    pub fn named(name: &str, seed: u64) -> Result<Suite> {
        match name {
            "default" => Ok(default_suite(seed)),
            "quick" => Ok(quick_suite(seed)),
            _ => param(format!("unknown suite '{name}'")),
        }
    }
}

fn base(kind: ExperimentKind, label: &str, dimension: usize, resolutions: Vec<u32>, space: SpaceParams, samples: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        label: label.into(),
        dimension,
        j_min: 0,
        resolutions,
        space,
        tent: TentSettings::default(),
        betas: default_betas(),
        samples,
        seed,
        families: default_families(),
        generator: GeneratorKind::RandomCoeffInBall,
        time_nodes: default_time_nodes(),
        localization: default_localization(),
        czo: CzoSettings::default(),
        output: OutputPaths::default(),
    }
}

fn sp(g1: f64, g2: f64, p: f64, q: f64) -> SpaceParams {
    SpaceParams { gamma1: g1, gamma2: g2, p, q }
}

/// Every experiment kind at the desk-scale sweep: `J ∈ {8,9,10}` for `n = 1`, `{5,6,7}` for `n = 2`.
pub fn default_suite(seed: u64) -> Suite {
    use ExperimentKind::*;
    let n1 = vec![8, 9, 10];
    let mut experiments = Vec::new();
    for (label, space) in [("set-a", sp(0.0, 0.3, 2.0, 2.0)), ("set-b", sp(-0.2, 0.1, 2.0, 2.0)), ("set-c", sp(0.5, 0.6, 3.0, 2.0))] {
        let mut e = base(NormEquivalence, label, 1, n1.clone(), space, 20, seed);
        e.families = vec!["meyer".into(), "db4".into()];
        experiments.push(e);
    }
    let heat = sp(-0.2, 0.1, 2.0, 2.0);
    experiments.push(base(SemigroupCharacterization, "heat", 1, n1.clone(), heat, 20, seed));
    experiments.push(base(CzoBoundedness, "random", 1, n1.clone(), heat, 20, seed));
    experiments.push(base(RieszTent, "plane", 2, vec![5, 6, 7], heat, 10, seed));
    let mut decay = base(DecayBounds, "single-cube", 1, n1.clone(), heat, 20, seed);
    decay.betas = vec![0.5, 1.0];
    decay.generator = GeneratorKind::AdversarialSingleCube { level: 5 };
    experiments.push(decay);
    experiments.push(base(Embeddings, "heat", 1, n1, heat, 20, seed));
    Suite { experiments }
}

/// The default suite at `J ∈ {6,7,8}` (`{4,5,6}` in the plane) with four samples.
pub fn quick_suite(seed: u64) -> Suite {
    let mut s = default_suite(seed);
    for e in &mut s.experiments {
        e.resolutions = if e.dimension == 1 { vec![6, 7, 8] } else { vec![4, 5, 6] };
        e.samples = 4;
        e.time_nodes = 128;
        if let GeneratorKind::AdversarialSingleCube { level } = &mut e.generator {
            *level = 3;
        }
    }
    s
}

/// Comparison used by a [`Check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Check {
        // NaN compares false and therefore fails every relation.
        let pass = match relation {
            Relation::Below => value < threshold,
            Relation::Above => value > threshold,
            Relation::AtLeast => value >= threshold,
        };
        Check { name: name.into(), value, relation, threshold, pass }
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check::new(name, value, Relation::Below, threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check::new(name, value, Relation::Above, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Check {
        Check::new(name, value, Relation::AtLeast, threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub statement: String,
    pub holds: bool,
    /// A failing required precondition refuses the run.
    pub required: bool,
}

/// A run that must fail; `detected` holds when every detection check passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlOutcome {
    pub description: String,
    pub checks: Vec<Check>,
    pub detected: bool,
}

impl ControlOutcome {
    pub fn new(description: impl Into<String>, checks: Vec<Check>) -> ControlOutcome {
        let detected = !checks.is_empty() && checks.iter().all(|c| c.pass);
        ControlOutcome { description: description.into(), checks, detected }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub label: String,
    pub config: ExperimentConfig,
    pub preconditions: Vec<Precondition>,
    pub error: Option<String>,
    pub checks: Vec<Check>,
    pub control: Option<ControlOutcome>,
    /// Experiment-specific tables.
    pub details: serde_json::Value,
    /// All checks pass, the control is detected and no error occurred.
    pub pass: bool,
}

/// One per-sample measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub kind: String,
    pub label: String,
    pub resolution: u32,
    pub variant: String,
    pub sample: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub rows: Vec<SampleRow>,
}

/// Runs one experiment; errors and refusals are recorded in the report, never propagated.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentOutcome {
    let mut report = ExperimentReport {
        kind: cfg.kind,
        label: cfg.label.clone(),
        config: cfg.clone(),
        preconditions: Vec::new(),
        error: None,
        checks: Vec::new(),
        control: None,
        details: serde_json::Value::Null,
        pass: false,
    };
    if let Err(e) = cfg.validate() {
        report.error = Some(e.to_string());
        return ExperimentOutcome { report, rows: Vec::new() };
    }
    report.preconditions = experiments::preconditions(cfg);
    let refused: Vec<&str> = report.preconditions.iter().filter(|p| p.required && !p.holds).map(|p| p.statement.as_str()).collect();
    if !refused.is_empty() {
        report.error = Some(OscilletError::Precondition(refused.join("; ")).to_string());
        return ExperimentOutcome { report, rows: Vec::new() };
    }
    match experiments::run(cfg) {
        Ok(run) => {
            report.pass = !run.checks.is_empty()
                && run.checks.iter().all(|c| c.pass)
                && run.control.as_ref().is_some_and(|c| c.detected);
            report.checks = run.checks;
            report.control = run.control;
            report.details = run.details;
            ExperimentOutcome { report, rows: run.rows }
        }
        Err(e) => {
            report.error = Some(e.to_string());
            ExperimentOutcome { report, rows: Vec::new() }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub kind: ExperimentKind,
    pub label: String,
    pub report: String,
    pub pass: bool,
    pub control_detected: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub experiments: Vec<SummaryEntry>,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub summary: Summary,
    pub outcomes: Vec<ExperimentOutcome>,
    /// Wall-clock seconds per experiment; written only to the metadata.
    pub elapsed: Vec<f64>,
}

/// Runs every configured experiment in order and aggregates the verdicts.
pub fn run_all(suite: &Suite) -> SuiteResult {
    let mut elapsed = Vec::new();
    let outcomes: Vec<ExperimentOutcome> = suite
        .experiments
        .iter()
        .map(|cfg| {
            let start = std::time::Instant::now();
            let out = run_experiment(cfg);
            elapsed.push(start.elapsed().as_secs_f64());
            out
        })
        .collect();
    let experiments: Vec<SummaryEntry> = outcomes
        .iter()
        .map(|o| SummaryEntry {
            kind: o.report.kind,
            label: o.report.label.clone(),
            report: o.report.config.report_name(),
            pass: o.report.pass,
            control_detected: o.report.control.as_ref().is_some_and(|c| c.detected),
            error: o.report.error.clone(),
        })
        .collect();
    let passed = experiments.iter().filter(|e| e.pass).count();
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION").into(),
        failed: experiments.len() - passed,
        all_pass: passed == experiments.len(),
        passed,
        experiments,
    };
    SuiteResult { summary, outcomes, elapsed }
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

fn fmt_check(c: &Check) -> String {
    let rel = match c.relation {
        Relation::Below => "<",
        Relation::Above => ">",
        Relation::AtLeast => ">=",
    };
    format!("{} = {} {rel} {} : {}", c.name, fmt_value(c.value), fmt_value(c.threshold), if c.pass { "ok" } else { "FAIL" })
}

/// Plain-text digest of a suite result.
pub fn digest(result: &SuiteResult) -> String {
    let mut out = String::new();
    let s = &result.summary;
    let _ = writeln!(out, "oscillet {} verification digest", s.version);
    let _ = writeln!(out, "{} experiments, {} passed, {} failed", s.experiments.len(), s.passed, s.failed);
    for o in &result.outcomes {
        let r = &o.report;
        let _ = writeln!(out, "\n[{}] {}/{}", if r.pass { "PASS" } else { "FAIL" }, r.kind.name(), r.label);
        for p in r.preconditions.iter().filter(|p| !p.holds) {
            let _ = writeln!(out, "  precondition not met{}: {}", if p.required { "" } else { " (advisory)" }, p.statement);
        }
        if let Some(e) = &r.error {
            let _ = writeln!(out, "  error: {e}");
        }
        for c in &r.checks {
            let _ = writeln!(out, "  {}", fmt_check(c));
        }
        if let Some(c) = &r.control {
            let _ = writeln!(out, "  control ({}): {}", if c.detected { "detected" } else { "NOT DETECTED" }, c.description);
            for ch in &c.checks {
                let _ = writeln!(out, "    {}", fmt_check(ch));
            }
        }
    }
    out
}

/// Writes one JSON report per experiment, `samples.csv`, `summary.json`, `digest.txt` and
/// `metadata.json`; only the metadata carries the wall-clock time.
pub fn write_reports(result: &SuiteResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = csv::Writer::from_path(dir.join("samples.csv")).map_err(|e| OscilletError::Format(e.to_string()))?;
    for o in &result.outcomes {
        let text = serde_json::to_string_pretty(&o.report)?;
        std::fs::write(dir.join(o.report.config.report_name()), text + "\n")?;
        for row in &o.rows {
            csv.serialize(row).map_err(|e| OscilletError::Format(e.to_string()))?;
        }
    }
    csv.flush()?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&result.summary)? + "\n")?;
    std::fs::write(dir.join("digest.txt"), digest(result))?;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let elapsed: serde_json::Map<String, serde_json::Value> = result
        .outcomes
        .iter()
        .zip(&result.elapsed)
        .map(|(o, t)| (o.report.config.report_name(), serde_json::json!(t)))
        .collect();
    let meta = serde_json::json!({
        "timestamp_unix": timestamp,
        "version": env!("CARGO_PKG_VERSION"),
        "elapsed_seconds": elapsed,
    });
    std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests;
