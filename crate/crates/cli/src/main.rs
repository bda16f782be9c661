//! `hadamard-sparse`: fit, lasso baselines, simulations and variable selection
//! from the command line. Structured results are JSON, curves are CSV.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hadamard_sparse::baselines::{
    fista, ista, lambda_grid, lambda_max, lasso_cv, lasso_path, LassoProblem, SolverOptions,
};
use hadamard_sparse::data_io::{load_csv, read_vector, write_columns, CsvOptions};
use hadamard_sparse::experiments::{run_setting, write_rows_csv, Method, SettingSpec};
use hadamard_sparse::selection::{
    hard_threshold, score_selection, selected_indices, threshold_window, window_stability, SelectionReport,
    ThresholdedSelection, WindowConstants,
};
use hadamard_sparse::solver::Schedule;
use hadamard_sparse::stopping::{fit_with_rule, RuleInputs, SelectMode, StopKind, StoppingRule};
use hadamard_sparse::{Dataset, Error, GroundTruth, HyperParams, InitMode, RecordingPolicy};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "hadamard-sparse", version, about = "Sparse regression by early-stopped Hadamard-product gradient descent")]
struct Cli {
    /// Directory for output files (created if missing).
    #[arg(long, global = true, env = "HADAMARD_SPARSE_OUT", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gradient descent on β = g∘l with an optional data-driven stopping rule.
    Fit(FitArgs),
    /// Lasso by FISTA/ISTA: a single λ, a path, or a cross-validated path.
    Lasso(LassoArgs),
    /// Replicated simulation of a built-in or JSON-configured setting.
    Simulate(SimulateArgs),
    /// Hard-threshold the coefficients of a result file.
    Select(SelectArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Design matrix, one row per sample.
    x: PathBuf,
    /// Response, one value per line.
    y: PathBuf,
    /// Input CSVs start with a header row.
    #[arg(long)]
    header: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StopArg {
    None,
    Holdout,
    Kfold,
    Sure,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SelectArg {
    GlobalMin,
    FirstRise,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    Uniform,
    Deterministic,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1e-5)]
    alpha: f64,
    /// Step size; defaults to 0.5 / λ_max(XᵀX/n).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    tmax: usize,
    /// Stop once the training RMSE falls to this level (`--stop none` only).
    #[arg(long, default_value_t = 0.0)]
    stop_tol: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Uniform)]
    init: InitArg,
    #[arg(long, value_enum, default_value_t = StopArg::None)]
    stop: StopArg,
    /// How a stopping rule picks an iteration from its risk curve.
    #[arg(long, value_enum, default_value_t = SelectArg::GlobalMin)]
    select: SelectArg,
    #[arg(long)]
    valid_x: Option<PathBuf>,
    #[arg(long)]
    valid_y: Option<PathBuf>,
    /// Folds for `--stop kfold`.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Noise level for `--stop sure`; estimated when absent.
    #[arg(long)]
    sigma: Option<f64>,
    /// Per-coordinate weights, one per line.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Record the trajectory every this many iterations (0 = log-spaced grid).
    #[arg(long, default_value_t = 1)]
    every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Fista,
    Ista,
}

#[derive(Args, Debug)]
struct LassoArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, conflicts_with = "path")]
    lambda: Option<f64>,
    /// Solve a descending grid from λ_max.
    #[arg(long)]
    path: bool,
    #[arg(long, default_value_t = 50, requires = "path")]
    grid: usize,
    /// Smallest λ as a fraction of λ_max.
    #[arg(long, default_value_t = 1e-3, requires = "path")]
    ratio: f64,
    /// Choose λ on the path by k-fold cross-validation.
    #[arg(long, requires = "path")]
    cv: Option<usize>,
    #[arg(long, value_enum, default_value_t = SolverArg::Fista)]
    solver: SolverArg,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Built-in setting S1..S8.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    setting: Option<String>,
    /// Setting as a JSON document.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated subset of gd_holdout, gd_kfold, gd_oracle, gd_sure, lasso_cv.
    #[arg(long, value_delimiter = ',', default_value = "gd_holdout,gd_kfold,gd_oracle,lasso_cv")]
    methods: Vec<String>,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// A result.json written by `fit` or `lasso`.
    result: PathBuf,
    #[arg(long, conflicts_with = "window", required_unless_present = "window")]
    threshold: Option<f64>,
    /// Probe the low end, midpoint and high end of the threshold window.
    #[arg(long, requires = "sigma")]
    window: bool,
    /// Noise level estimate for the window's upper end.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    c_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    c_hi: f64,
    /// True coefficients, one per line, for false-positive counts.
    #[arg(long)]
    truth: Option<PathBuf>,
}

/// Failure to report: `usage` exits 2, everything else exits 1.
struct Failure {
    usage: bool,
    kind: String,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            usage: true,
            kind: "usage".into(),
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            usage: matches!(e, Error::Config(_)),
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e).into()
    }
}

type CmdResult = Result<Vec<PathBuf>, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail(Failure::usage(e.to_string().trim_end()));
        }
    };
    let outcome = fs::create_dir_all(&cli.out_dir)
        .map_err(Failure::from)
        .and_then(|_| match &cli.command {
            Command::Fit(a) => cmd_fit(a, &cli.out_dir),
            Command::Lasso(a) => cmd_lasso(a, &cli.out_dir),
            Command::Simulate(a) => cmd_simulate(a, &cli.out_dir),
            Command::Select(a) => cmd_select(a, &cli.out_dir),
        });
    match outcome {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    let body = json!({ "error": { "kind": f.kind, "message": f.message } });
    eprintln!("{body}");
    ExitCode::from(if f.usage { 2 } else { 1 })
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("no such file: {}", path.display())))
    }
}

fn load(x: &Path, y: &Path, header: bool) -> Result<Dataset, Failure> {
    require_file(x)?;
    require_file(y)?;
    Ok(load_csv(x, y, CsvOptions { header })?)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Run provenance, kept out of the primary outputs so those stay byte-stable.
fn write_metadata(dir: &Path, command: &str) -> Result<PathBuf, Failure> {
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "unix_time": started,
    });
    write_json(dir, "metadata.json", &meta)
}

fn finite_positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn cmd_fit(a: &FitArgs, out: &Path) -> CmdResult {
    let mode = match a.select {
        SelectArg::GlobalMin => SelectMode::GlobalMin,
        SelectArg::FirstRise => SelectMode::FirstRise,
    };
    let kind = match a.stop {
        StopArg::None => StopKind::None,
        StopArg::Holdout => {
            if a.valid_x.is_none() || a.valid_y.is_none() {
                return Err(Failure::usage("--stop holdout requires --valid-x and --valid-y"));
            }
            StopKind::Holdout { mode }
        }
        StopArg::Kfold => StopKind::Kfold { k: a.k, mode },
        StopArg::Sure => StopKind::Sure { sigma: a.sigma, mode },
    };
    if !matches!(a.stop, StopArg::Holdout) && (a.valid_x.is_some() || a.valid_y.is_some()) {
        return Err(Failure::usage("--valid-x/--valid-y are only used with --stop holdout"));
    }
    if a.stop_tol != 0.0 && !matches!(a.stop, StopArg::None) {
        return Err(Failure::usage("--stop-tol only applies with --stop none"));
    }
    if let Some(s) = a.sigma {
        finite_positive("sigma", s)?;
    }
    let rule = StoppingRule { kind, t_max: a.tmax };
    rule.validate()?;

    let ds = load(&a.data.x, &a.data.y, a.data.header)?;
    let valid = match (&a.valid_x, &a.valid_y) {
        (Some(vx), Some(vy)) => Some(load(vx, vy, a.data.header)?),
        _ => None,
    };
    let weights = match &a.weights {
        Some(w) => {
            require_file(w)?;
            Some(read_vector(w, CsvOptions { header: a.data.header })?.as_slice().to_vec())
        }
        None => None,
    };
    let hp = HyperParams {
        alpha: a.alpha,
        eta: a.eta,
        stop_tol: a.stop_tol,
        t_max: a.tmax,
        init: match a.init {
            InitArg::Uniform => InitMode::UniformPmAlpha,
            InitArg::Deterministic => InitMode::DeterministicTheory,
        },
        weights,
    };
    hp.validate(ds.p())?;
    let schedule = if a.every == 0 {
        Schedule::default()
    } else {
        Schedule::Every(a.every)
    };
    let inputs = RuleInputs {
        valid: valid.as_ref(),
        record: RecordingPolicy {
            schedule,
            keep_beta: false,
        },
    };
    let (fit, curve) = fit_with_rule(&ds, &hp, &rule, a.seed, &inputs)?;

    let result = json!({
        "command": "fit",
        "n": ds.n(),
        "p": ds.p(),
        "seed": a.seed,
        "stop_rule": rule,
        "beta_hat": fit.beta_hat,
        "stopped_at": fit.stopped_at,
        "stop_reason": fit.stop_reason,
        "diagnostics": fit.diagnostics,
    });
    let mut files = vec![write_json(out, "result.json", &result)?];
    let traj = out.join("trajectory.csv");
    write_columns(
        &traj,
        &["t", "train_rmse", "l1_norm"],
        &[
            fit.trajectory.iter().map(|s| s.t as f64).collect(),
            fit.trajectory.iter().map(|s| s.train_rmse).collect(),
            fit.trajectory.iter().map(|s| s.l1_norm).collect(),
        ],
    )?;
    files.push(traj);
    if let Some(curve) = curve {
        let path = out.join("risk.csv");
        curve.write_csv(&path)?;
        files.push(path);
    }
    files.push(write_metadata(out, "fit")?);
    Ok(files)
}

fn cmd_lasso(a: &LassoArgs, out: &Path) -> CmdResult {
    if a.lambda.is_none() && !a.path {
        return Err(Failure::usage("give either --lambda or --path"));
    }
    if let Some(l) = a.lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Failure::usage(format!("--lambda must be >= 0, got {l}")));
        }
    }
    if a.path {
        if a.grid < 2 {
            return Err(Failure::usage("--grid must be at least 2"));
        }
        if !(a.ratio > 0.0 && a.ratio < 1.0) {
            return Err(Failure::usage("--ratio must lie in (0, 1)"));
        }
    }
    finite_positive("tol", a.tol)?;
    let ds = load(&a.data.x, &a.data.y, a.data.header)?;
    let opts = SolverOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        lipschitz: None,
    };
    let mut files = Vec::new();
    if let Some(lambda) = a.lambda {
        let prob = LassoProblem::new(&ds, lambda)?;
        let sol = match a.solver {
            SolverArg::Fista => fista(&prob, &opts)?,
            SolverArg::Ista => ista(&prob, &opts)?,
        };
        let result = json!({
            "command": "lasso",
            "lambda": lambda,
            "lambda_max": lambda_max(&ds),
            "beta": sol.beta.as_slice(),
            "iters": sol.iters,
            "kkt_violation": sol.kkt_violation,
        });
        files.push(write_json(out, "result.json", &result)?);
    } else {
        let grid = lambda_grid(lambda_max(&ds), a.grid, a.ratio);
        let path = lasso_path(&ds, &grid, true, &opts)?;
        let csv = out.join("path.csv");
        path.write_csv(&csv, None)?;
        files.push(csv);
        let mut result = json!({
            "command": "lasso",
            "lambdas": path.lambdas,
            "l1_norms": path.betas.iter().map(|b| b.iter().map(|v| v.abs()).sum::<f64>()).collect::<Vec<_>>(),
            "iters": path.iters,
            "converged": path.converged,
        });
        if let Some(k) = a.cv {
            let cv = lasso_cv(&ds, k, &grid, a.seed, &opts)?;
            result["cv"] = json!({
                "k": k,
                "seed": a.seed,
                "cv_error": cv.cv_error,
                "best_index": cv.best_index,
                "best_lambda": cv.best_lambda,
            });
            result["lambda"] = json!(cv.best_lambda);
            result["beta"] = json!(cv.beta);
        }
        files.insert(0, write_json(out, "result.json", &result)?);
    }
    files.push(write_metadata(out, "lasso")?);
    Ok(files)
}

fn cmd_simulate(a: &SimulateArgs, out: &Path) -> CmdResult {
    let mut spec = match (&a.setting, &a.config) {
        (Some(name), None) => SettingSpec::builtin(name)?,
        (None, Some(path)) => {
            require_file(path)?;
            serde_json::from_str::<SettingSpec>(&fs::read_to_string(path)?)
                .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?
        }
        _ => return Err(Failure::usage("give exactly one of --setting or --config")),
    };
    if let Some(r) = a.reps {
        spec.replications = r;
    }
    let mut methods = Vec::new();
    for m in &a.methods {
        let m: Method = m.trim().parse().map_err(|_| Failure::usage(format!("unknown method {m:?}")))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    spec.validate()?;
    let result = run_setting(&spec, &methods, a.seed)?;
    let summary = write_json(out, "summary.json", &result.summary)?;
    let rows = out.join("rows.csv");
    write_rows_csv(&rows, &result.rows)?;
    Ok(vec![summary, rows, write_metadata(out, "simulate")?])
}

#[derive(Serialize)]
struct WindowOutput {
    lo: f64,
    hi: f64,
    thresholds: [f64; 3],
    stable: bool,
    selections: Vec<ThresholdedSelection>,
}

fn cmd_select(a: &SelectArgs, out: &Path) -> CmdResult {
    require_file(&a.result)?;
    let doc: Value = serde_json::from_str(&fs::read_to_string(&a.result)?)
        .map_err(|e| Failure::usage(format!("{} is not JSON: {e}", a.result.display())))?;
    let beta: Vec<f64> = ["beta_hat", "beta"]
        .iter()
        .find_map(|k| doc.get(*k))
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .ok_or_else(|| Failure::usage("result file has no beta_hat or beta array"))?;
    let beta = DVector::from_vec(beta);
    let truth = match &a.truth {
        Some(path) => {
            require_file(path)?;
            let b = read_vector(path, CsvOptions { header: false })?;
            if b.len() != beta.len() {
                return Err(Error::Dimension(format!(
                    "truth has {} entries but the result has {}",
                    b.len(),
                    beta.len()
                ))
                .into());
            }
            Some(GroundTruth::all_strong(b.as_slice().to_vec(), 0.0)?)
        }
        None => None,
    };
    let report = |lambda: f64| -> ThresholdedSelection {
        let selected = selected_indices(&hard_threshold(&beta, lambda));
        let report = match &truth {
            Some(t) => score_selection(&selected, t),
            None => SelectionReport {
                selected,
                false_positives: 0,
                true_negatives_missed: 0,
            },
        };
        ThresholdedSelection { threshold: lambda, report }
    };
    let scored = truth.is_some();
    let value = if let Some(lambda) = a.threshold {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Failure::usage(format!("--threshold must be >= 0, got {lambda}")));
        }
        strip_counts(serde_json::to_value(report(lambda))?, scored)
    } else {
        let sigma = a.sigma.ok_or_else(|| Failure::usage("--window requires --sigma"))?;
        let n = doc
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Failure::usage("--window needs a result file that records n"))? as usize;
        let constants = WindowConstants {
            c_lo: a.c_lo,
            c_hi: a.c_hi,
        };
        let window = threshold_window(n, beta.len(), sigma, constants)?;
        let st = window_stability(&beta, window);
        let output = WindowOutput {
            lo: window.lo,
            hi: window.hi,
            thresholds: st.thresholds,
            stable: st.stable,
            selections: st.thresholds.iter().map(|&l| report(l)).collect(),
        };
        let mut v = serde_json::to_value(output)?;
        if let Some(items) = v["selections"].as_array_mut() {
            for item in items.iter_mut() {
                *item = strip_counts(item.take(), scored);
            }
        }
        v
    };
    Ok(vec![write_json(out, "selection.json", &value)?, write_metadata(out, "select")?])
}

/// Without a truth vector the fp/tn counts are meaningless and are dropped.
fn strip_counts(mut v: Value, scored: bool) -> Value {
    if !scored {
        if let Some(obj) = v.as_object_mut() {
            obj.remove("false_positives");
            obj.remove("true_negatives_missed");
        }
    }
    v
}
