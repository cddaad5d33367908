//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::ConstantVariant;
use crate::charfunc::{solve_range, Tolerances};
use crate::error::Error;
use crate::kernel::{
    asymptotic_k, eval_h, eval_k, eval_kprime, KernelEval, KernelParams, SectorSpec, DEFAULT_DELTA,
};
use crate::verify::{self, Experiment, GridConfig, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Environment variable capping the worker thread count (0 = automatic).
pub const THREADS_ENV: &str = "GP_SPECTRUM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gp-spectrum", version, about = "Complex spectrum of the Gurtin-Pipkin equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate K, K', h or the asymptotic form at given points.
    Kernel(KernelArgs),
    /// Locate z_n^+ for a range of modes.
    Spectrum(SpectrumArgs),
    /// Run the verification experiments.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    AsStated,
    Half,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    K,
    Kprime,
    H,
    Asymptotic,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (written atomically); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Evaluation point as `re,im`; repeatable.
    #[arg(long = "z", value_parser = parse_complex, allow_hyphen_values = true, required = true)]
    pub z: Vec<Complex64>,
    #[arg(long, value_enum, default_value = "k")]
    pub which: Which,
    #[arg(long, default_value_t = 1e-12)]
    pub kernel_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub n_min: u64,
    #[arg(long)]
    pub n_max: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_fp: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Restrict to one parameter pair (needs --beta); default is the standard quartet.
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub beta: Option<f64>,
    /// One of series, asymptotic, zkprime, sector, theorem, all.
    #[arg(long, default_value = "all", value_parser = parse_experiment)]
    pub experiment: ExperimentFilter,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub n_min: u64,
    #[arg(long, default_value_t = 500)]
    pub n_max: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_fp: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub kernel_tol: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub ratio_cap: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExperimentFilter {
    All,
    One(Experiment),
}

fn parse_experiment(s: &str) -> Result<ExperimentFilter, String> {
    if s == "all" {
        return Ok(ExperimentFilter::All);
    }
    Experiment::parse(s)
        .map(ExperimentFilter::One)
        .ok_or_else(|| format!("unknown experiment '{s}' (series, asymptotic, zkprime, sector, theorem, all)"))
}

/// Parses `re,im` (or a bare real number).
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let parse = |t: &str| t.parse::<f64>().map_err(|_| format!("malformed number '{t}' in z = '{s}'"));
    let z = match parts.as_slice() {
        [re] => Complex64::new(parse(re)?, 0.0),
        [re, im] => Complex64::new(parse(re)?, parse(im)?),
        _ => return Err(format!("expected z as 're,im', got '{s}'")),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(format!("z = '{s}' is not finite"));
    }
    Ok(z)
}

/// Float with 17 significant digits, locale independent.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

#[derive(Serialize)]
struct C {
    re: f64,
    im: f64,
}

impl From<Complex64> for C {
    fn from(z: Complex64) -> Self {
        C { re: z.re, im: z.im }
    }
}

fn envelope(config: serde_json::Value, results: serde_json::Value) -> String {
    let doc = json!({
        "config": config,
        "results": results,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(output: &OutputArgs, contents: &str) -> Result<(), String> {
    match &output.out {
        Some(path) => write_atomic(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

/// Outcome of a subcommand: rendered document plus exit code.
pub struct Rendered {
    pub contents: String,
    pub code: i32,
}

fn params_or_usage(alpha: f64, beta: f64) -> Result<KernelParams, String> {
    KernelParams::new(alpha, beta).map_err(|e| e.to_string())
}

fn eval_which(params: &KernelParams, which: Which, z: Complex64, tol: f64) -> Result<KernelEval, Error> {
    match which {
        Which::K => eval_k(params, z, tol),
        Which::Kprime => eval_kprime(params, z, tol),
        Which::H => eval_h(params, z, tol),
        Which::Asymptotic => asymptotic_k(params, z).map(|value| KernelEval { value, error_bound: 0.0, terms_used: 0 }),
        Which::All => unreachable!("expanded by caller"),
    }
}

fn which_name(w: Which) -> &'static str {
    match w {
        Which::K => "K",
        Which::Kprime => "Kprime",
        Which::H => "h",
        Which::Asymptotic => "asymptotic",
        Which::All => "all",
    }
}

pub fn render_kernel(args: &KernelArgs) -> Result<Rendered, String> {
    let params = params_or_usage(args.alpha, args.beta)?;
    if !(args.kernel_tol > 0.0) {
        return Err("requires kernel-tol > 0".into());
    }
    let quantities: Vec<Which> = match args.which {
        Which::All => vec![Which::K, Which::Kprime, Which::H, Which::Asymptotic],
        w => vec![w],
    };
    let format = args.output.format.unwrap_or(Format::Csv);
    let mut rows = Vec::new();
    let mut failed = false;
    for &z in &args.z {
        for &w in &quantities {
            let r = eval_which(&params, w, z, args.kernel_tol);
            failed |= r.is_err();
            rows.push((w, z, r));
        }
    }
    let contents = match format {
        Format::Csv => {
            let mut s = String::from("quantity,z_re,z_im,K_re,K_im,err_bound,terms,error\n");
            for (w, z, r) in &rows {
                match r {
                    Ok(e) => writeln!(
                        s,
                        "{},{},{},{},{},{},{},",
                        which_name(*w),
                        fmt_f64(z.re),
                        fmt_f64(z.im),
                        fmt_f64(e.value.re),
                        fmt_f64(e.value.im),
                        fmt_f64(e.error_bound),
                        e.terms_used
                    ),
                    Err(err) => writeln!(s, "{},{},{},,,,,\"{}\"", which_name(*w), fmt_f64(z.re), fmt_f64(z.im), err.to_string().replace('"', "'")),
                }
                .expect("write to string");
            }
            s
        }
        Format::Json => {
            let results: Vec<serde_json::Value> = rows
                .iter()
                .map(|(w, z, r)| match r {
                    Ok(e) => json!({
                        "quantity": which_name(*w), "z": C::from(*z), "value": C::from(e.value),
                        "err_bound": e.error_bound, "terms": e.terms_used,
                    }),
                    Err(err) => json!({ "quantity": which_name(*w), "z": C::from(*z), "error": err.to_string() }),
                })
                .collect();
            let config = json!({
                "command": "kernel", "alpha": args.alpha, "beta": args.beta, "which": args.which,
                "kernel_tol": args.kernel_tol, "format": format,
                "points": args.z.iter().map(|z| C::from(*z)).collect::<Vec<_>>(),
            });
            envelope(config, json!(results))
        }
    };
    Ok(Rendered { contents, code: if failed { EXIT_PARTIAL } else { EXIT_OK } })
}

pub fn render_spectrum(args: &SpectrumArgs) -> Result<Rendered, String> {
    let params = params_or_usage(args.alpha, args.beta)?;
    if args.n_min == 0 || args.n_min > args.n_max {
        return Err(format!("requires 1 <= n-min <= n-max, got n-min = {}, n-max = {}", args.n_min, args.n_max));
    }
    let tol = Tolerances { tol_fp: args.tol_fp, tol_residual: args.tol_residual, max_iter: args.max_iter };
    tol.validate().map_err(|e| e.to_string())?;
    let outcomes = solve_range(&params, args.n_min, args.n_max, tol).map_err(|e| e.to_string())?;
    let failed = outcomes.iter().any(|o| o.result.is_err());
    let format = args.output.format.unwrap_or(Format::Csv);
    let variants: Vec<ConstantVariant> = match args.variant {
        VariantArg::AsStated => vec![ConstantVariant::AsStated],
        VariantArg::Half => vec![ConstantVariant::Half],
        VariantArg::Both => ConstantVariant::ALL.to_vec(),
    };
    let contents = match format {
        Format::Csv => {
            let mut s = String::from("n,z_re,z_im,residual,iters");
            for v in &variants {
                let suffix = if args.variant == VariantArg::Both && *v == ConstantVariant::Half { "_half" } else { "" };
                write!(s, ",pred_re{suffix},pred_im{suffix},deviation{suffix}").expect("write to string");
            }
            s.push('\n');
            for o in &outcomes {
                let Ok(p) = &o.result else { continue };
                write!(s, "{},{},{},{},{}", p.n, fmt_f64(p.z.re), fmt_f64(p.z.im), fmt_f64(p.residual), p.iterations)
                    .expect("write to string");
                for v in &variants {
                    let (pred, dev) = p.prediction_for(*v);
                    write!(s, ",{},{},{}", fmt_f64(pred.re), fmt_f64(pred.im), fmt_f64(dev)).expect("write to string");
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let results: Vec<serde_json::Value> = outcomes
                .iter()
                .map(|o| match &o.result {
                    Ok(p) => {
                        let mut row = json!({
                            "n": p.n, "z": C::from(p.z), "tau": C::from(p.tau), "residual": p.residual,
                            "iters": p.iterations, "refined": p.refined, "method": p.diagnostics.method,
                            "escaped_at": p.diagnostics.escaped_at,
                        });
                        for v in &variants {
                            let (pred, dev) = p.prediction_for(*v);
                            row[v.name()] = json!({ "prediction": C::from(pred), "deviation": dev });
                        }
                        row
                    }
                    Err(e) => json!({ "n": o.n, "error": e.to_string() }),
                })
                .collect();
            let config = json!({
                "command": "spectrum", "alpha": args.alpha, "beta": args.beta,
                "n_min": args.n_min, "n_max": args.n_max, "tol_fp": args.tol_fp,
                "tol_residual": args.tol_residual, "max_iter": args.max_iter,
                "variant": args.variant, "format": format,
            });
            envelope(config, json!(results))
        }
    };
    Ok(Rendered { contents, code: if failed { EXIT_PARTIAL } else { EXIT_OK } })
}

pub fn verify_config(args: &VerifyArgs) -> Result<VerifyConfig, String> {
    let params = match (args.alpha, args.beta) {
        (Some(a), Some(b)) => vec![params_or_usage(a, b)?],
        _ => verify::standard_params(),
    };
    if args.n_min == 0 || args.n_min > args.n_max {
        return Err(format!("requires 1 <= n-min <= n-max, got n-min = {}, n-max = {}", args.n_min, args.n_max));
    }
    let tolerances = Tolerances { tol_fp: args.tol_fp, tol_residual: args.tol_residual, ..Tolerances::default() };
    tolerances.validate().map_err(|e| e.to_string())?;
    let defaults = SectorSpec::default();
    let sector = SectorSpec::new(args.delta, defaults.rho_min, defaults.rho_max).map_err(|e| e.to_string())?;
    let experiments = match &args.experiment {
        ExperimentFilter::All => Experiment::ALL.to_vec(),
        ExperimentFilter::One(e) => vec![*e],
    };
    Ok(VerifyConfig {
        params,
        sector,
        grid: GridConfig { ratio_cap: args.ratio_cap, kernel_tol: args.kernel_tol, ..GridConfig::default() },
        sector_samples: args.samples,
        seed: args.seed,
        n_min: args.n_min,
        n_max: args.n_max,
        tolerances,
        experiments,
    })
}

pub fn render_verify(args: &VerifyArgs) -> Result<Rendered, String> {
    let config = verify_config(args)?;
    let bundle = verify::run(&config);
    let format = args.output.format.unwrap_or(Format::Json);
    let code = if bundle.passed { EXIT_OK } else { EXIT_PARTIAL };
    let contents = match format {
        Format::Json => {
            let mut cfg = serde_json::to_value(&config).expect("serializable");
            cfg["command"] = json!("verify");
            cfg["variant"] = json!(args.variant);
            cfg["format"] = json!(format);
            envelope(cfg, serde_json::to_value(&bundle).expect("serializable"))
        }
        Format::Csv => {
            let mut s = String::from("experiment,alpha,beta,statistic,ratio,cap,passed\n");
            for e in &bundle.experiments {
                let line = match e {
                    verify::ExperimentResult::Bound(b) => format!(
                        "{},{},{},{},{},{},{}",
                        b.experiment_id,
                        b.alpha.map(fmt_f64).unwrap_or_default(),
                        b.beta.map(fmt_f64).unwrap_or_default(),
                        fmt_f64(b.statistic),
                        fmt_f64(b.ratio),
                        fmt_f64(b.cap),
                        b.passed
                    ),
                    verify::ExperimentResult::Theorem(t) => format!(
                        "theorem,{},{},{},,,{}",
                        fmt_f64(t.alpha),
                        fmt_f64(t.beta),
                        t.criteria.slope.map(fmt_f64).unwrap_or_default(),
                        t.passed
                    ),
                    verify::ExperimentResult::Failed { experiment_id, alpha, beta, .. } => format!(
                        "{},{},{},,,,false",
                        experiment_id,
                        alpha.map(fmt_f64).unwrap_or_default(),
                        beta.map(fmt_f64).unwrap_or_default()
                    ),
                };
                s.push_str(&line);
                s.push('\n');
            }
            s
        }
    };
    Ok(Rendered { contents, code })
}

fn configure_threads() {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    if threads > 0 {
        // fails only if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

/// Parses `args` and runs the selected subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    let (rendered, output) = match &cli.command {
        Command::Kernel(a) => (render_kernel(a), &a.output),
        Command::Spectrum(a) => (render_spectrum(a), &a.output),
        Command::Verify(a) => (render_verify(a), &a.output),
    };
    match rendered {
        Ok(r) => match emit(output, &r.contents) {
            Ok(()) => r.code,
            Err(msg) => {
                eprintln!("error: {msg}");
                EXIT_USAGE
            }
        },
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1,0").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(parse_complex("-2.5, 3e2").unwrap(), Complex64::new(-2.5, 300.0));
        assert_eq!(parse_complex("4").unwrap(), Complex64::new(4.0, 0.0));
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("a,b").is_err());
        assert!(parse_complex("nan,0").is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }
}
