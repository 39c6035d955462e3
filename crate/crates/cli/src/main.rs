use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use ridgeboot::report::{self, Report};
use ridgeboot::sim::{self, HyperChoice, Scale, SimCase, Target};
use ridgeboot::{
    confidence_region, cross_validate, default_grid, improved_fit, prediction_region_with, test_with_draws,
    BootstrapConfig, CvGrid, DesignMatrix, Error, Hyperparams, ModelFrame, ResidualSource,
};

mod config;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "ridgeboot", version, about = "Debiased thresholded ridge regression with bootstrap inference")]
#[command(args_override_self = true)]
struct Cli {
    /// File of `key = value` lines supplying any flag; the command line wins.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the debiased thresholded ridge estimator.
    Fit(FitArgs),
    /// Cross-validate the ridge parameter and threshold.
    Cv(CvArgs),
    /// Simultaneous confidence region for γ = Mβ and optional test of γ = γ₀.
    Infer(InferArgs),
    /// Prediction region for future responses at the rows of X_f.
    Predict(PredictArgs),
    /// Run one simulation case.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Design matrix CSV (n rows, p columns).
    #[arg(long, value_name = "FILE")]
    x: PathBuf,
    /// Response CSV, one value per line.
    #[arg(long, value_name = "FILE")]
    y: PathBuf,
    /// Input files start with a header line.
    #[arg(long)]
    header: bool,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct HyperArgs {
    /// Ridge parameter ρ.
    #[arg(long, required_unless_present = "cv", conflicts_with = "cv")]
    rho: Option<f64>,
    /// Threshold b.
    #[arg(long, visible_alias = "threshold", required_unless_present = "cv", conflicts_with = "cv")]
    b: Option<f64>,
    /// Choose ρ and b by cross-validation over the default grid.
    #[arg(long)]
    cv: bool,
    /// Folds used with --cv.
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Args, Debug, Clone)]
struct BootArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    replicates: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Combination matrix CSV (p₁ rows, p columns); identity when omitted.
    #[arg(long, value_name = "FILE")]
    m: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated ridge candidates (default: 20 log-spaced values in [1e-3, n]).
    #[arg(long, value_delimiter = ',')]
    rho_grid: Option<Vec<f64>>,
    /// Comma-separated threshold candidates (default: 20 values in [0, 2·median|θ̃|]).
    #[arg(long, value_delimiter = ',')]
    b_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[arg(long, value_name = "FILE")]
    m: Option<PathBuf>,
    /// Hypothesized γ₀ (p₁ values, one per line); triggers the test.
    #[arg(long, value_name = "FILE")]
    gamma0: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ResidualArg {
    Fitted,
    Loo,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    boot: BootArgs,
    /// Prediction design CSV (rows are new covariate vectors).
    #[arg(long, value_name = "FILE")]
    xf: PathBuf,
    /// Residuals resampled for the future noise.
    #[arg(long, value_enum, default_value = "fitted")]
    residuals: ResidualArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TargetArg {
    Beta,
    Theta,
    Both,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    case: u8,
    /// Parameter scored by the regions (default: theta for p < n, both for p > n).
    #[arg(long, value_enum)]
    target: Option<TargetArg>,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    /// Shorthand for --scale full.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the preset hyperparameters.
    #[arg(long, requires = "b", conflicts_with = "cv")]
    rho: Option<f64>,
    #[arg(long, requires = "rho", conflicts_with = "cv")]
    b: Option<f64>,
    /// Select hyperparameters by 5-fold cross-validation on a pilot sample.
    #[arg(long)]
    cv: bool,
    /// Comma-separated shifts δ for the power curve.
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.3,0.5,1")]
    deltas: Vec<f64>,
    /// Comma-separated ridge values for the ridge-variant error curve.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10,100,1000")]
    rho_curve: Vec<f64>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

/// Failure classified by exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = if e.is_numerical() {
            (EXIT_NUMERICAL, "numerical")
        } else if matches!(e, Error::InvalidArgument(_)) {
            (EXIT_USAGE, "usage")
        } else {
            (EXIT_DATA, "data")
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error kind={}: {}", f.kind, f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}

fn run(argv: Vec<String>) -> Outcome {
    let argv = config::expand(argv).map_err(Failure::usage)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            return Err(Failure::usage(message.trim_start_matches("error: ")));
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Failure::usage(e.to_string()))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn require_file(flag: &str, path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{flag}: no such file '{}'", path.display())))
    }
}

fn load_frame(data: &DataArgs, m: Option<&Path>) -> Result<ModelFrame, Failure> {
    require_file("x", &data.x)?;
    require_file("y", &data.y)?;
    if let Some(m) = m {
        require_file("m", m)?;
    }
    let x = DesignMatrix::new(ridgeboot::io::read_matrix(&data.x, data.header)?)?;
    let y = ridgeboot::io::read_vector(&data.y, data.header)?;
    let combination = m.map(|p| ridgeboot::io::read_matrix(p, data.header)).transpose()?;
    Ok(ModelFrame::new(x, y, combination)?)
}

/// Resolves hyperparameters and records how they were obtained.
fn resolve_hyper(frame: &ModelFrame, h: &HyperArgs, seed: u64, cfg: &mut Vec<(String, String)>) -> Result<Hyperparams, Failure> {
    if h.cv {
        let grid = default_grid(frame, h.folds, seed)?;
        let report = cross_validate(frame, &grid)?;
        cfg.push(("hyper_source".into(), "cv".into()));
        cfg.push(("folds".into(), h.folds.to_string()));
        Ok(report.chosen)
    } else {
        let (rho, b) = (h.rho.unwrap_or_default(), h.b.unwrap_or_default());
        cfg.push(("hyper_source".into(), "fixed".into()));
        Ok(Hyperparams::new(rho, b)?)
    }
}

fn data_config(data: &DataArgs, cfg: &mut Vec<(String, String)>) {
    cfg.push(("x".into(), data.x.display().to_string()));
    cfg.push(("y".into(), data.y.display().to_string()));
    cfg.push(("header".into(), data.header.to_string()));
    cfg.push((
        "out".into(),
        data.out.as_ref().map_or("-".into(), |p| p.display().to_string()),
    ));
    cfg.push(("threads".into(), rayon::current_num_threads().to_string()));
}

fn emit(out: Option<&Path>, files: &[(&str, String)], summary: &str) -> Outcome {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::from(io_err(dir, e)))?;
            for (name, text) in files {
                report::write_text(&dir.join(name), text)?;
            }
            print!("{summary}");
        }
        None => {
            for (_, text) in files {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn cmd_fit(a: FitArgs) -> Outcome {
    let frame = load_frame(&a.data, a.m.as_deref())?;
    let mut cfg = Vec::new();
    data_config(&a.data, &mut cfg);
    cfg.push(("m".into(), a.m.as_ref().map_or("identity".into(), |p| p.display().to_string())));
    let hyper = resolve_hyper(&frame, &a.hyper, a.data.seed, &mut cfg)?;
    let fit = improved_fit(&frame, hyper)?;

    let mut r = Report::new("fit", a.data.seed);
    r.config(cfg).scalar("n", frame.n()).scalar("p", frame.p()).scalar("rank", frame.svd().rank());
    report::add_fit(&mut r, &fit);
    let summary = format!(
        "fit: n={} p={} rho={} b={} selected={} sigma2_hat={}\n",
        frame.n(),
        frame.p(),
        hyper.rho,
        hyper.threshold,
        fit.selected.len(),
        fit.sigma2_hat
    );
    emit(a.data.out.as_deref(), &[("fit.txt", r.render())], &summary)
}

fn cmd_cv(a: CvArgs) -> Outcome {
    let frame = load_frame(&a.data, None)?;
    let default = default_grid(&frame, a.folds, a.data.seed)?;
    let grid = CvGrid {
        rho: a.rho_grid.clone().unwrap_or(default.rho),
        thresholds: a.b_grid.clone().unwrap_or(default.thresholds),
        folds: a.folds,
        seed: a.data.seed,
    };
    let cv = cross_validate(&frame, &grid)?;

    let mut cfg = Vec::new();
    data_config(&a.data, &mut cfg);
    cfg.push(("folds".into(), a.folds.to_string()));
    cfg.push(("rho_grid".into(), join(&grid.rho)));
    cfg.push(("b_grid".into(), join(&grid.thresholds)));
    let mut r = Report::new("cv", a.data.seed);
    r.config(cfg)
        .scalar("chosen_rho", cv.chosen.rho)
        .scalar("chosen_b", cv.chosen.threshold)
        .scalar("chosen_error", cv.chosen_error);
    let summary = format!(
        "cv: chosen rho={} b={} mean_error={}\n",
        cv.chosen.rho, cv.chosen.threshold, cv.chosen_error
    );
    emit(
        a.data.out.as_deref(),
        &[("cv.txt", r.render()), ("cv.csv", report::cv_csv(&cv))],
        &summary,
    )
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn boot_config(b: &BootArgs, seed: u64, cfg: &mut Vec<(String, String)>) -> Result<BootstrapConfig, Failure> {
    cfg.push(("alpha".into(), b.alpha.to_string()));
    cfg.push(("replicates".into(), b.replicates.to_string()));
    Ok(BootstrapConfig::new(b.replicates, b.alpha, seed)?)
}

fn cmd_infer(a: InferArgs) -> Outcome {
    let frame = load_frame(&a.data, a.m.as_deref())?;
    if let Some(g) = &a.gamma0 {
        require_file("gamma0", g)?;
    }
    let mut cfg = Vec::new();
    data_config(&a.data, &mut cfg);
    cfg.push(("m".into(), a.m.as_ref().map_or("identity".into(), |p| p.display().to_string())));
    let hyper = resolve_hyper(&frame, &a.hyper, a.data.seed, &mut cfg)?;
    let boot = boot_config(&a.boot, a.data.seed, &mut cfg)?;
    let fit = improved_fit(&frame, hyper)?;
    let (region, draws) = confidence_region(&frame, &fit, &boot)?;
    let (lower, upper): (Vec<f64>, Vec<f64>) = region.intervals().into_iter().unzip();

    let mut r = Report::new("infer", a.data.seed);
    r.config(cfg);
    report::add_fit(&mut r, &fit);
    r.scalar("level", region.level)
        .scalar("radius", region.radius)
        .vector("lower", lower.iter())
        .vector("upper", upper.iter());
    let mut summary = format!(
        "infer: p1={} level={} radius={} selected={}\n",
        frame.p1(),
        region.level,
        region.radius,
        fit.selected.len()
    );
    if let Some(path) = &a.gamma0 {
        let gamma0 = ridgeboot::io::read_vector(path, a.data.header)?;
        if gamma0.len() != frame.p1() {
            return Err(Error::Dimension {
                what: "gamma0 length".into(),
                expected: frame.p1(),
                found: gamma0.len(),
            }
            .into());
        }
        let t = test_with_draws(&fit, &gamma0, &draws)?;
        r.scalar("config.gamma0", path.display())
            .scalar("test_statistic", t.statistic)
            .scalar("test_critical", t.critical)
            .scalar("test_reject", t.reject);
        summary.push_str(&format!(
            "test: statistic={} critical={} reject={}\n",
            t.statistic, t.critical, t.reject
        ));
    }
    let mut csv = String::from("index,gamma_hat,tau_hat,lower,upper\n");
    for i in 0..frame.p1() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            fit.gamma_hat[i],
            fit.tau_hat[i],
            lower[i],
            upper[i]
        ));
    }
    emit(
        a.data.out.as_deref(),
        &[("infer.txt", r.render()), ("intervals.csv", csv)],
        &summary,
    )
}

fn cmd_predict(a: PredictArgs) -> Outcome {
    let frame = load_frame(&a.data, None)?;
    require_file("xf", &a.xf)?;
    let xf: DMatrix<f64> = ridgeboot::io::read_matrix(&a.xf, a.data.header)?;
    let mut cfg = Vec::new();
    data_config(&a.data, &mut cfg);
    cfg.push(("xf".into(), a.xf.display().to_string()));
    let source = match a.residuals {
        ResidualArg::Fitted => ResidualSource::Fitted,
        ResidualArg::Loo => ResidualSource::LeaveOneOut,
    };
    cfg.push(("residuals".into(), format!("{:?}", a.residuals).to_lowercase()));
    let hyper = resolve_hyper(&frame, &a.hyper, a.data.seed, &mut cfg)?;
    let boot = boot_config(&a.boot, a.data.seed, &mut cfg)?;
    let fit = improved_fit(&frame, hyper)?;
    let (region, _) = prediction_region_with(&frame, &fit, &xf, &boot, source)?;
    let (lower, upper): (Vec<f64>, Vec<f64>) = region.intervals().into_iter().unzip();

    let mut r = Report::new("predict", a.data.seed);
    r.config(cfg)
        .scalar("rho", hyper.rho)
        .scalar("threshold", hyper.threshold)
        .scalar("level", region.level)
        .scalar("radius", region.radius)
        .vector("prediction", region.center.iter())
        .vector("lower", lower.iter())
        .vector("upper", upper.iter());
    let mut csv = String::from("index,prediction,lower,upper\n");
    let center: &DVector<f64> = &region.center;
    for i in 0..center.len() {
        csv.push_str(&format!("{},{},{},{}\n", i + 1, center[i], lower[i], upper[i]));
    }
    let summary = format!(
        "predict: rows={} level={} radius={}\n",
        center.len(),
        region.level,
        region.radius
    );
    emit(
        a.data.out.as_deref(),
        &[("predict.txt", r.render()), ("predict.csv", csv)],
        &summary,
    )
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    let scale = if a.full { ScaleArg::Full } else { a.scale };
    let mut case = SimCase::preset(
        a.case,
        match scale {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Full => Scale::Full,
        },
    )?;
    if matches!(scale, ScaleArg::Full) {
        eprintln!("warning: full-scale simulation runs for a long time (hours on a laptop)");
    }
    if let Some(r) = a.reps {
        case.reps = r;
    }
    if let Some(b) = a.replicates {
        case.replicates = b;
    }
    case.alpha = a.alpha;
    case.seed = a.seed;
    if let (Some(rho), Some(b)) = (a.rho, a.b) {
        case.hyper = HyperChoice::Fixed(Hyperparams::new(rho, b)?);
    }
    if a.cv {
        case.hyper = HyperChoice::CrossValidated { folds: 5 };
    }
    if let Some(t) = a.target {
        case.targets = match t {
            TargetArg::Beta => vec![Target::Beta],
            TargetArg::Theta => vec![Target::Theta],
            TargetArg::Both => vec![Target::Beta, Target::Theta],
        };
    }
    case.deltas = a.deltas.clone();
    case.validate()?;

    let result = sim::run_case(&case)?;
    let curve = sim::ridge_variant_curve(&case, &a.rho_curve)?;

    let mut r = Report::new("simulate", case.seed);
    r.config([
        ("case", a.case.to_string()),
        ("scale", format!("{scale:?}").to_lowercase()),
        ("law", case.law.name().to_string()),
        ("n", case.n.to_string()),
        ("p", case.p.to_string()),
        ("p1", case.p1.to_string()),
        ("m_count", case.m_count.to_string()),
        ("tau_split", case.tau_split.to_string()),
        ("reps", case.reps.to_string()),
        ("replicates", case.replicates.to_string()),
        ("alpha", case.alpha.to_string()),
        ("xf_rows", case.xf_rows.to_string()),
        (
            "targets",
            case.targets.iter().map(|t| t.name()).collect::<Vec<_>>().join(","),
        ),
        (
            "hyper_source",
            match case.hyper {
                HyperChoice::Fixed(_) => "fixed".to_string(),
                HyperChoice::CrossValidated { .. } => "cv".to_string(),
            },
        ),
        ("deltas", join(&case.deltas)),
        ("rho_curve", join(&a.rho_curve)),
        ("threads", rayon::current_num_threads().to_string()),
    ])
    .scalar("rho", result.hyper.rho)
    .scalar("threshold", result.hyper.threshold)
    .scalar("misspecification", result.misspecification);

    let summary = report::sim_summary(&result);
    let mut files = vec![
        ("simulate.txt", r.render() + "\n# summary\n" + &prefix_lines(&summary)),
        ("sim.csv", report::sim_csv(&result)),
        ("rho_curve.csv", report::rho_curve_csv(&curve)),
    ];
    let scored = result
        .targets
        .iter()
        .find(|t| t.target == Target::Theta)
        .or(result.targets.first());
    if let Some(t) = scored {
        files.push(("power.csv", report::power_csv(&t.power)));
    }
    emit(Some(&a.out), &files, &summary)
}

fn prefix_lines(text: &str) -> String {
    text.lines().map(|l| format!("# {l}\n")).collect()
}
