use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use oscillet::harness::{self, ExperimentKind, Suite};
use oscillet::io;
use oscillet::norms::{oscillation_norm, tl_evaluation, tlm_wavelet_norm, OscillationOptions, SpaceParams};
use oscillet::operators::{apply_matrix, generate_random_czo, riesz_apply, validate_decay, CzoGenerator};
use oscillet::semigroup::{evolve_coefficients, pi_phi_field, CalibratedFamily, SemigroupSpec, TimeGrid};
use oscillet::tent::{tent_norms, TentOptions, TentParams};
use oscillet::{CoeffField, GridFunction, GridSpec, OscilletError, Result, WaveletBasis};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "oscillet", version, about = "Wavelet, semigroup and tent-space norms on the dyadic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wavelet coefficients of a sampled function.
    Transform {
        #[arg(long, default_value = "meyer")]
        family: String,
        /// Expected resolution; must match the input file.
        #[arg(long = "J")]
        resolution: Option<u32>,
        #[arg(long, default_value_t = 0)]
        j_min: u32,
        #[arg(long = "in")]
        input: PathBuf,
        /// `.json` writes the record format, anything else the binary format.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequence or oscillation norm of a coefficient field.
    Norm {
        #[arg(long, value_enum)]
        kind: NormKind,
        #[command(flatten)]
        space: SpaceArgs,
        /// Highest polynomial degree of the oscillation norm.
        #[arg(long)]
        m0: Option<usize>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Heat lift `e^{−t(−Δ)^β} f` in wavelet coefficients on a log-spaced time grid.
    Semigroup {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        tmin: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long = "L")]
        nodes: Option<usize>,
        #[arg(long, default_value = "meyer")]
        family: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrated reconstruction of a function from its heat lift.
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// The four tent parts of a heat lift.
    Tent {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 3.0)]
        m: f64,
        #[arg(long = "mprime", default_value_t = 1.0)]
        m_prime: f64,
        /// Defaults to the β stored in the input.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Random almost-diagonal operators.
    Czo(CzoArgs),
    /// Riesz transform `R_l` as a Fourier multiplier.
    Riesz {
        /// Direction, 1-based.
        #[arg(long)]
        l: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs an experiment suite and writes reports; exits nonzero when any experiment fails.
    Verify {
        #[arg(long, default_value = "default", conflicts_with = "config")]
        suite: String,
        /// Suite file in the format of `configs/default.toml`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides every experiment seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    Tl,
    Tlm,
    Osc,
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long, allow_hyphen_values = true)]
    gamma1: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma2: f64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
}

impl SpaceArgs {
    fn params(&self) -> Result<SpaceParams> {
        SpaceParams::new(self.gamma1, self.gamma2, self.p, self.q)
    }
}

#[derive(Args)]
#[group(skip)]
#[command(group(ArgGroup::new("mode").required(true).multiple(false).args(["gen", "apply", "experiment"])))]
struct CzoArgs {
    /// Draw a matrix and write it as JSON lines to `--out`.
    #[arg(long)]
    gen: bool,
    /// Apply `--matrix` to the coefficient field `--in`, writing `--out`.
    #[arg(long)]
    apply: bool,
    /// Run the boundedness experiment and write its report to `--out`.
    #[arg(long)]
    experiment: bool,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long = "J", default_value_t = 8)]
    resolution: u32,
    #[arg(long, default_value = "meyer")]
    family: String,
    #[arg(long, default_value_t = 6.0)]
    n0: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Largest level gap coupled by the generator.
    #[arg(long, default_value_t = 4)]
    band: u32,
    /// Draw the envelope-violating control instead.
    #[arg(long)]
    violating: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Resolutions of the experiment sweep.
    #[arg(long, value_delimiter = ',', default_value = "8,9,10")]
    resolutions: Vec<u32>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| OscilletError::Parameter(format!("--{flag} is required in this mode")))
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn load_coeffs(path: &Path) -> Result<CoeffField> {
    if is_json(path) {
        io::load_coeff_json(path)
    } else {
        io::read_coeff_binary(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn save_coeffs(path: &Path, c: &CoeffField) -> Result<()> {
    if is_json(path) {
        io::save_coeff_json(path, c)
    } else {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        io::write_coeff_binary(&mut w, c)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(OscilletError::Parameter(format!("β must lie in (0, 2], got {beta}")))
    }
}

fn meyer_basis(spec: GridSpec, family: oscillet::Family) -> Result<WaveletBasis> {
    if !matches!(family, oscillet::Family::Meyer { .. }) {
        return Err(OscilletError::Unsupported("the heat lift needs a Meyer basis".into()));
    }
    WaveletBasis::new(spec, family)
}

fn transform(family: &str, resolution: Option<u32>, j_min: u32, input: &Path, out: &Path) -> Result<()> {
    let f = io::load_grid_function(input)?;
    if resolution.is_some_and(|j| j != f.spec().resolution()) {
        return Err(OscilletError::Shape(format!("--J {} differs from the input resolution {}", resolution.unwrap(), f.spec().resolution())));
    }
    let spec = GridSpec::new(f.spec().n(), f.spec().resolution(), j_min)?;
    let f = GridFunction::new(spec, f.into_values())?;
    let basis = WaveletBasis::new(spec, harness::parse_family(family)?)?;
    save_coeffs(out, &basis.analyze(&f)?)
}

fn norm(kind: NormKind, space: &SpaceArgs, m0: Option<usize>, input: &Path, report: Option<&Path>) -> Result<()> {
    let sp = space.params()?;
    let c = load_coeffs(input)?;
    match kind {
        NormKind::Tl => write_json(report, &tl_evaluation(&c, sp.gamma1, sp.p, sp.q)?),
        NormKind::Tlm => write_json(report, &tlm_wavelet_norm(&c, &sp)?),
        NormKind::Osc => {
            let basis = WaveletBasis::new(*c.spec(), c.family())?;
            let f = basis.synthesize(&c)?;
            let mut opts = OscillationOptions::standard(c.spec().n());
            if let Some(m0) = m0 {
                opts.moment_order = m0;
            }
            write_json(report, &oscillation_norm(&f, &sp, &basis, &opts)?)
        }
    }
}

fn semigroup(beta: f64, tmin: Option<f64>, tmax: Option<f64>, nodes: Option<usize>, family: &str, input: &Path, out: &Path) -> Result<()> {
    check_beta(beta)?;
    let f = io::load_grid_function(input)?;
    let spec = *f.spec();
    let standard = TimeGrid::standard(&spec, beta);
    let tg = TimeGrid::new(tmin.unwrap_or(standard.t_min), tmax.unwrap_or(standard.t_max), nodes.unwrap_or(standard.len))?;
    let basis = meyer_basis(spec, harness::parse_family(family)?)?;
    let tcf = evolve_coefficients(&SemigroupSpec::new(beta, spec)?, &basis, &f, &tg)?;
    io::save_time_field(out, &tcf)
}

#[derive(Serialize)]
struct ReconstructionReport {
    beta: f64,
    time_grid: TimeGrid,
    multiplier_residual: f64,
    warning: Option<String>,
}

fn reconstruct(input: &Path, out: &Path, report: Option<&Path>) -> Result<()> {
    let tcf = io::load_time_field(input)?;
    let spec = *tcf.spec();
    let basis = meyer_basis(spec, tcf.family())?;
    let cf = CalibratedFamily::standard(tcf.beta, &spec)?;
    let rec = pi_phi_field(&cf, &basis, &tcf)?;
    if let Some(w) = &rec.warning {
        eprintln!("warning: {w}");
    }
    io::save_grid_function(out, &rec.f)?;
    write_json(report, &ReconstructionReport { beta: tcf.beta, time_grid: tcf.grid, multiplier_residual: rec.multiplier_residual, warning: rec.warning })
}

fn tent(space: &SpaceArgs, m: f64, m_prime: f64, beta: Option<f64>, tau: f64, input: &Path, report: Option<&Path>) -> Result<()> {
    let tcf = io::load_time_field(input)?;
    let beta = beta.unwrap_or(tcf.beta);
    if (beta - tcf.beta).abs() > 1e-15 {
        return Err(OscilletError::Parameter(format!("--beta {beta} differs from the lift's β = {}", tcf.beta)));
    }
    let tp = TentParams::new(space.params()?, m, m_prime, beta, tau)?;
    write_json(report, &tent_norms(&tcf, &tp, &TentOptions::default())?)
}

fn czo(a: &CzoArgs) -> Result<()> {
    let family = harness::parse_family(&a.family)?;
    if a.gen {
        let spec = GridSpec::new(a.n, a.resolution, 0)?;
        let g = if a.violating { CzoGenerator::violating() } else { CzoGenerator { band: Some(a.band), ..CzoGenerator::admissible(a.n0, a.c) } };
        let m = generate_random_czo(spec, family, &g, a.seed)?;
        let v = validate_decay(&m);
        eprintln!("{} entries, {} outside the envelope", m.nnz(), v.violations.len());
        io::save_matrix(required(&a.out, "out")?, &m)
    } else if a.apply {
        let m = io::load_matrix(required(&a.matrix, "matrix")?)?;
        let c = load_coeffs(required(&a.input, "in")?)?;
        save_coeffs(required(&a.out, "out")?, &apply_matrix(&m, &c)?)
    } else {
        let mut cfg = harness::default_suite(a.seed)
            .experiments
            .into_iter()
            .find(|e| e.kind == ExperimentKind::CzoBoundedness)
            .expect("the default suite lists every kind");
        cfg.dimension = a.n;
        cfg.resolutions = a.resolutions.clone();
        cfg.samples = a.samples;
        cfg.families = vec![a.family.clone()];
        cfg.czo.n0 = a.n0;
        cfg.czo.c = a.c;
        let outcome = harness::run_experiment(&cfg);
        write_json(a.out.as_deref(), &outcome.report)?;
        if !outcome.report.pass {
            return Err(OscilletError::Precondition("boundedness experiment failed".into()));
        }
        Ok(())
    }
}

fn riesz(l: usize, input: &Path, out: &Path) -> Result<()> {
    io::save_grid_function(out, &riesz_apply(&io::load_grid_function(input)?, l)?)
}

fn verify(suite: &str, config: Option<&Path>, seed: u64, out: &Path) -> Result<bool> {
    let suite = match config {
        Some(path) => Suite::load(path)?.with_seed(seed),
        None => Suite::named(suite, seed)?,
    };
    let result = harness::run_all(&suite);
    harness::write_reports(&result, out)?;
    print!("{}", harness::digest(&result));
    Ok(result.summary.all_pass)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Transform { family, resolution, j_min, input, out } => transform(&family, resolution, j_min, &input, &out)?,
        Command::Norm { kind, space, m0, input, report } => norm(kind, &space, m0, &input, report.as_deref())?,
        Command::Semigroup { beta, tmin, tmax, nodes, family, input, out } => semigroup(beta, tmin, tmax, nodes, &family, &input, &out)?,
        Command::Reconstruct { input, out, report } => reconstruct(&input, &out, report.as_deref())?,
        Command::Tent { space, m, m_prime, beta, tau, input, report } => tent(&space, m, m_prime, beta, tau, &input, report.as_deref())?,
        Command::Czo(args) => czo(&args)?,
        Command::Riesz { l, input, out } => riesz(l, &input, &out)?,
        Command::Verify { suite, config, seed, out } => return verify(&suite, config.as_deref(), seed, &out),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
