//! `zzbound` command-line front end.
//!
//! Exit codes: `0` on success, `2` for malformed arguments or parameters
//! outside a bound's domain, `1` for numerical or I/O failures.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use zzbound_core::analysis::{self, fmt_f64, EstimatorSpec, FigureId, ScanAxis};
use zzbound_core::bounds::{self, BoundKind, BoundRequest};
use zzbound_core::{
    Error, FidelityModel, FidelityTable, PriorDistribution, PriorShape, QuadratureConfig,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ZZBOUND_THREADS";

/// Search interval for the max-gain figure reported by `constants`.
const GAIN_INTERVAL: (f64, f64) = (0.05, 5.0);

#[derive(Debug, Parser)]
#[command(
    name = "zzbound",
    version,
    about = "Quantum Ziv-Zakai lower bounds on phase-estimation error"
)]
struct Cli {
    /// JSON file overriding numerical defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the asymptotic constants and the uniform-prior maximum gain.
    Constants(FormatOnly),
    /// Evaluate one bound for one prior.
    Bound(BoundArgs),
    /// Sweep t0 = W / x0 and emit one row per grid point.
    Scan(ScanArgs),
    /// Emit the data behind one of the reference figures.
    Figure(FigureArgs),
    /// Monte-Carlo RMSE of a measurement-free estimator.
    Rmse(RmseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct FormatOnly {
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct PriorArgs {
    /// uniform, gaussian, bimodal, triangular or tabulated.
    #[arg(long)]
    prior: String,
    /// Comma-separated key=value pairs, e.g. `W=0.5` or `lower=0,upper=1,mode=0.8`.
    #[arg(long, default_value = "")]
    prior_params: String,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    prior: PriorArgs,
    /// direct, main, appendix, variance, closed-form, lpi or hpi.
    #[arg(long)]
    kind: BoundKind,
    /// `H=<v>`, `dH=<v>`, `x0=<v>`, `delta0=<v>` or a bare number (H or dH).
    #[arg(long)]
    scale: Option<String>,
    /// `qsl:H=<v>`, `bhatta:dH=<v>`, `coherent:N=<v>`, `table:<path>` or `one`.
    #[arg(long)]
    fidelity: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// uniform, gaussian or bimodal.
    #[arg(long)]
    prior: PriorShape,
    #[arg(long)]
    kind: BoundKind,
    #[arg(long)]
    t0_min: f64,
    #[arg(long)]
    t0_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Log-spaced grid instead of linear.
    #[arg(long)]
    log: bool,
    /// `x0=<v>`, `delta0=<v>` or `W=<v>`.
    #[arg(long, default_value = "x0=1")]
    fix: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// fig1, fig2a or fig2b.
    id: FigureId,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Estimator {
    Mean,
    Randomguess,
}

#[derive(Debug, Args)]
struct RmseArgs {
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long, value_enum)]
    estimator: Estimator,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Contents of the `--config` file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub quadrature: QuadratureConfig,
    pub threads: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(Error::Domain(_) | Error::Unsupported(_) | Error::InvalidData(_)) => 2,
            Failure::Core(_) | Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
            Failure::Io(e) => e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Run with process stdout/stderr and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Run with explicit output streams and return the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                2
            } else {
                let _ = write!(out, "{rendered}");
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            if let Failure::Usage(_) = f {
                let _ = writeln!(err, "run `zzbound --help` for usage");
            }
            f.exit_code()
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<CliConfig> {
    let Some(path) = path else {
        return Ok(CliConfig::default());
    };
    let text = fs::read_to_string(path)?;
    let cfg: CliConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
    cfg.quadrature.validate()?;
    Ok(cfg)
}

fn thread_cap(cfg: &CliConfig) -> CliResult<Option<usize>> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => {
                return usage(format!(
                    "{THREADS_ENV} must be a positive integer, got '{v}'"
                ))
            }
        },
        Err(_) => None,
    };
    if cfg.threads == Some(0) {
        return usage("threads must be positive");
    }
    Ok(match (env, cfg.threads) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    })
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let command = cli.command;
    let text = match thread_cap(&cfg)? {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| dispatch(command, &cfg))?
        }
        None => dispatch(command, &cfg)?,
    };
    if let Some(text) = text {
        out.write_all(text.as_bytes())?;
    }
    Ok(())
}

/// Returns text for stdout, or `None` when output went to a file.
fn dispatch(command: Command, cfg: &CliConfig) -> CliResult<Option<String>> {
    let quad = &cfg.quadrature;
    match command {
        Command::Constants(a) => constants(a.format.unwrap_or(Format::Text), quad).map(Some),
        Command::Bound(a) => bound(a, quad).map(Some),
        Command::Scan(a) => scan(a, quad),
        Command::Figure(a) => figure(a, quad),
        Command::Rmse(a) => rmse(a).map(Some),
    }
}

fn emit(text: String, path: Option<&Path>) -> CliResult<Option<String>> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

fn key_values(pairs: &[(&str, String)]) -> String {
    let mut line = pairs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    line.push('\n');
    line
}

fn json_object(pairs: &[(&str, serde_json::Value)]) -> CliResult<String> {
    let map: serde_json::Map<String, serde_json::Value> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
    let mut s = serde_json::to_string_pretty(&map).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn text_or_json(format: Format) -> CliResult<bool> {
    match format {
        Format::Text => Ok(false),
        Format::Json => Ok(true),
        Format::Csv => usage("this command supports --format text or json"),
    }
}

fn constants(format: Format, quad: &QuadratureConfig) -> CliResult<String> {
    let json = text_or_json(format)?;
    let a = bounds::constant_a(quad)?.value;
    let a_prime = bounds::constant_a_prime();
    let best = analysis::max_gain(PriorShape::Uniform, BoundKind::MainQsl, GAIN_INTERVAL, quad)?;
    let values = [
        ("A_computed", a),
        ("A_paper", bounds::A_PRINTED_REFERENCE),
        ("A_prime", a_prime),
        ("sqrt_A_over_2", (a / 2.0).sqrt()),
        ("sqrt_A_prime_over_2", (a_prime / 2.0).sqrt()),
        ("max_gain", best.gain),
        ("t0_star", best.t0),
    ];
    if json {
        let pairs: Vec<_> = values
            .iter()
            .map(|(k, v)| (*k, serde_json::json!(v)))
            .collect();
        return json_object(&pairs);
    }
    let pairs: Vec<_> = values
        .iter()
        .map(|(k, v)| {
            let s = match *k {
                "max_gain" | "t0_star" => format!("{v:.3}"),
                "A_paper" => format!("{v}"),
                _ => format!("{v:.7}"),
            };
            (*k, s)
        })
        .collect();
    Ok(key_values(&pairs))
}

fn parse_params(spec: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((k, v)) = part.split_once('=') else {
            return usage(format!("expected key=value, got '{part}'"));
        };
        if map
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return usage(format!("parameter '{}' given twice", k.trim()));
        }
    }
    Ok(map)
}

fn parse_number(key: &str, v: &str) -> CliResult<f64> {
    v.parse::<f64>()
        .map_err(|_| Failure::Usage(format!("parameter '{key}' is not a number: '{v}'")))
}

/// Takes parameters by their accepted spellings and rejects leftovers.
struct Params(BTreeMap<String, String>);

impl Params {
    fn take(&mut self, keys: &[&str]) -> CliResult<Option<f64>> {
        let mut found = None;
        for k in keys {
            if let Some(v) = self.0.remove(*k) {
                if found.is_some() {
                    return usage(format!("parameter '{}' given twice", keys[0]));
                }
                found = Some(parse_number(k, &v)?);
            }
        }
        Ok(found)
    }

    fn require(&mut self, keys: &[&str]) -> CliResult<f64> {
        self.take(keys)?
            .ok_or_else(|| Failure::Usage(format!("missing parameter '{}'", keys[0])))
    }

    fn finish(self, family: &str) -> CliResult<()> {
        match self.0.keys().next() {
            Some(k) => usage(format!("unknown parameter '{k}' for prior '{family}'")),
            None => Ok(()),
        }
    }
}

fn build_prior(args: &PriorArgs) -> CliResult<PriorDistribution> {
    let family = args.prior.to_ascii_lowercase();
    let raw = parse_params(&args.prior_params)?;
    if family == "tabulated" {
        let mut raw = raw;
        let path = raw
            .remove("path")
            .ok_or_else(|| Failure::Usage("tabulated prior needs path=<csv>".into()))?;
        Params(raw).finish(&family)?;
        return Ok(PriorDistribution::tabulated_from_csv_path(path)?);
    }
    let mut p = Params(raw);
    let prior = match family.as_str() {
        "uniform" => {
            let w = p.take(&["W", "width"])?.unwrap_or(1.0);
            let c = p.take(&["center", "mean"])?.unwrap_or(0.0);
            PriorDistribution::uniform(c, w)?
        }
        "gaussian" | "normal" => {
            let s = p.take(&["sigma", "W", "std"])?.unwrap_or(1.0);
            let m = p.take(&["mean", "center"])?.unwrap_or(0.0);
            PriorDistribution::gaussian(m, s)?
        }
        "bimodal" => {
            let w = p.take(&["W", "width"])?.unwrap_or(1.0);
            PriorDistribution::bimodal_two_block(w)?
        }
        "triangular" => {
            let a = p.require(&["lower", "a"])?;
            let b = p.require(&["upper", "b"])?;
            let c = p.require(&["mode", "c"])?;
            PriorDistribution::triangular(a, b, c)?
        }
        other => return usage(format!("unknown prior family '{other}'")),
    };
    p.finish(&family)?;
    Ok(prior)
}

/// Generator scale `H` (or `dH`).
fn parse_scale(spec: &str) -> CliResult<f64> {
    let spec = spec.trim();
    let (key, v) = match spec.split_once('=') {
        Some((k, v)) => (k.trim(), v.trim()),
        None => ("H", spec),
    };
    let v = parse_number(key, v)?;
    match key {
        "H" | "dH" => Ok(v),
        "x0" | "delta0" => {
            if v > 0.0 {
                Ok(PI / (2.0 * v))
            } else {
                Err(Failure::Core(Error::Domain(format!(
                    "{key} must be positive, got {v}"
                ))))
            }
        }
        other => usage(format!(
            "unknown scale key '{other}', expected H, dH, x0 or delta0"
        )),
    }
}

fn parse_fidelity(spec: &str) -> CliResult<FidelityModel> {
    let (model, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let single = |keys: &[&str]| -> CliResult<f64> {
        let mut p = Params(parse_params(rest)?);
        let v = p.require(keys)?;
        p.finish(model)?;
        Ok(v)
    };
    let f = match model {
        "one" => FidelityModel::Custom(FidelityTable::constant_one()),
        "qsl" => FidelityModel::QslNumberOperator {
            h_mean: single(&["H"])?,
        },
        "bhatta" => FidelityModel::BhattacharyyaVariance {
            h_std: single(&["dH"])?,
        },
        "coherent" => FidelityModel::CoherentStateExact {
            photons: single(&["N"])?,
        },
        "table" => FidelityModel::Custom(FidelityTable::from_csv_path(rest)?),
        other => return usage(format!("unknown fidelity model '{other}'")),
    };
    f.validate()?;
    Ok(f)
}

fn bound(args: BoundArgs, quad: &QuadratureConfig) -> CliResult<String> {
    let json = text_or_json(args.format.unwrap_or(Format::Text))?;
    let request = BoundRequest {
        kind: args.kind,
        prior: build_prior(&args.prior)?,
        generator_scale: args.scale.as_deref().map(parse_scale).transpose()?,
        fidelity: args.fidelity.as_deref().map(parse_fidelity).transpose()?,
        quad: quad.clone(),
    };
    let r = request.evaluate()?;
    if json {
        let mut s = serde_json::to_string_pretty(&r).map_err(Error::from)?;
        s.push('\n');
        return Ok(s);
    }
    let mut pairs = vec![
        ("kind", r.kind.to_string()),
        ("value", fmt_f64(r.value)),
        ("err", fmt_f64(r.err_estimate)),
    ];
    if let Some(t0) = r.t0 {
        pairs.push(("t0", fmt_f64(t0)));
    }
    if let Some(l) = r.length_scale {
        pairs.push(("length_scale", fmt_f64(l)));
    }
    pairs.push(("prior_stddev", fmt_f64(request.prior.std_dev())));
    Ok(key_values(&pairs))
}

fn parse_axis(spec: &str) -> CliResult<ScanAxis> {
    let Some((k, v)) = spec.split_once('=') else {
        return usage(format!(
            "--fix expects x0=<v>, delta0=<v> or W=<v>, got '{spec}'"
        ));
    };
    let v = parse_number(k, v.trim())?;
    match k.trim() {
        "x0" | "delta0" => Ok(ScanAxis::FixedLength(v)),
        "W" => Ok(ScanAxis::FixedWidth(v)),
        other => usage(format!("--fix key must be x0, delta0 or W, got '{other}'")),
    }
}

fn scan(args: ScanArgs, quad: &QuadratureConfig) -> CliResult<Option<String>> {
    let axis = parse_axis(&args.fix)?;
    let grid = if args.log {
        analysis::log_grid(args.t0_min, args.t0_max, args.points)?
    } else {
        analysis::linear_grid(args.t0_min, args.t0_max, args.points)?
    };
    let result = analysis::scan_t0(args.prior, args.kind, &grid, axis, quad)?;
    let text = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => result.to_csv_string()?,
        Format::Json => result.to_json()? + "\n",
        Format::Text => return usage("scan supports --format csv or json"),
    };
    emit(text, args.out.as_deref())
}

fn figure(args: FigureArgs, quad: &QuadratureConfig) -> CliResult<Option<String>> {
    let data = analysis::figure_data(args.id, quad)?;
    let text = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => data.to_csv_string()?,
        Format::Json => serde_json::to_string_pretty(&data).map_err(Error::from)? + "\n",
        Format::Text => return usage("figure supports --format csv or json"),
    };
    emit(text, args.out.as_deref())
}

fn rmse(args: RmseArgs) -> CliResult<String> {
    let json = text_or_json(args.format.unwrap_or(Format::Text))?;
    let prior = build_prior(&args.prior)?;
    let estimator = match args.estimator {
        Estimator::Mean => EstimatorSpec::ConstantMean,
        Estimator::Randomguess => EstimatorSpec::RandomGuessFromPrior,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let r = analysis::weighted_rmse(&prior, &estimator, args.samples, &mut rng)?;
    if json {
        return json_object(&[
            ("rmse", serde_json::json!(r.rmse)),
            ("stderr", serde_json::json!(r.stderr)),
            ("prior_stddev", serde_json::json!(prior.std_dev())),
        ]);
    }
    Ok(key_values(&[
        ("rmse", fmt_f64(r.rmse)),
        ("stderr", fmt_f64(r.stderr)),
        ("prior_stddev", fmt_f64(prior.std_dev())),
    ]))
}
