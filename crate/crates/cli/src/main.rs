use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussian_lhv::born::{evaluate_chsh, optimize_chsh, ChshConstraint, ChshEvaluation, ChshSetting, OUTCOMES};
use gaussian_lhv::certify::{certify_isotropic, certify_lossy_tmss, click_families, region_condition, LocalityCertificate};
use gaussian_lhv::sampler::{build_lhv_model, simulate, SimulationReport};
use gaussian_lhv::states::TmssParameters;
use gaussian_lhv::sweep::{run_sweep, write_csv, SweepConfig};
use serde::{Deserialize, Serialize};

/// Local hidden-variable models and CHSH tests for lossy two-mode squeezed states.
#[derive(Parser)]
#[command(name = "gaussian-lhv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Look for an isotropic locality certificate at one (eta, nu) point.
    Certify(PointArgs),
    /// Evaluate or optimize the CHSH value with displaced click detectors.
    Chsh(ChshArgs),
    /// Simulate the local model at a certified point.
    Sample(PointArgs),
    /// Classify every cell of an (eta, nu) grid.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Flat JSON config; command-line flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ChshArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Search for the best mirrored settings instead of evaluating fixed ones.
    #[arg(long)]
    optimize: bool,
    /// Let all four displacements vary independently (implies --optimize).
    #[arg(long)]
    free: bool,
    /// Real displacements `A0,A1` for Alice; Bob uses their negatives.
    #[arg(long, value_name = "A0,A1", value_parser = parse_pair, allow_hyphen_values = true)]
    alpha: Option<(f64, f64)>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of eta and nu grid points.
    #[arg(long, value_name = "WxH", value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[command(flatten)]
    common: Common,
}

/// Keys accepted in a `--config` file for single-point commands.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PointConfig {
    eta: Option<f64>,
    nu: Option<f64>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
    optimize: Option<bool>,
    alpha: Option<(f64, f64)>,
    output_path: Option<PathBuf>,
}

struct Point {
    eta: f64,
    nu: f64,
    epsilon: f64,
    seed: u64,
    samples: usize,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<gaussian_lhv::Error> for Failure {
    fn from(e: gaussian_lhv::Error) -> Self {
        match e {
            gaussian_lhv::Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH, e.g. 50x50")?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(w)?, num(h)?))
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn resolve_point(args: &PointArgs) -> CliResult<(Point, PointConfig)> {
    let cfg: PointConfig = load_config(args.common.config.as_deref())?;
    let required = |flag: Option<f64>, key: Option<f64>, name: &str| {
        flag.or(key).ok_or_else(|| Failure::Usage(format!("--{name} is required (flag or config key)")))
    };
    let point = Point {
        eta: required(args.eta, cfg.eta, "eta")?,
        nu: required(args.nu, cfg.nu, "nu")?,
        epsilon: args.epsilon.or(cfg.epsilon).unwrap_or(0.02),
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        samples: args.samples.or(cfg.samples).unwrap_or(100_000),
    };
    Ok((point, cfg))
}

fn emit(common: &Common, fallback: Option<&Path>, text: &str) -> CliResult<()> {
    match common.out.as_deref().or(fallback) {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Domain(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes") + "\n"
}

#[derive(Serialize)]
struct CertifyOutput {
    eta: f64,
    nu: f64,
    epsilon: f64,
    verdict: &'static str,
    region_condition: bool,
    certificate: Option<LocalityCertificate>,
}

fn certify(args: &PointArgs) -> CliResult<()> {
    let (p, cfg) = resolve_point(args)?;
    let cert = certify_lossy_tmss(TmssParameters::new(p.nu, p.eta)?, p.epsilon)?;
    let out = CertifyOutput {
        eta: p.eta,
        nu: p.nu,
        epsilon: p.epsilon,
        verdict: if cert.is_some() { "present" } else { "absent" },
        region_condition: region_condition(p.eta, p.nu, p.epsilon),
        certificate: cert,
    };
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out),
        Format::Csv => format!(
            "eta,nu,epsilon,verdict,margin\n{},{},{},{},{}\n",
            out.eta,
            out.nu,
            out.epsilon,
            out.verdict,
            out.certificate.as_ref().map_or(String::new(), |c| c.margin.to_string())
        ),
    };
    emit(&args.common, cfg.output_path.as_deref(), &text)
}

#[derive(Serialize)]
struct ChshOutput {
    eta: f64,
    nu: f64,
    optimized: bool,
    setting: ChshSetting,
    s: f64,
    evaluation: ChshEvaluation,
}

fn probability_rows(eval: &ChshEvaluation) -> String {
    let mut csv = String::from("x,y,a,b,probability\n");
    for x in 0..2 {
        for y in 0..2 {
            for (ia, a) in OUTCOMES.iter().enumerate() {
                for (ib, b) in OUTCOMES.iter().enumerate() {
                    let _ = writeln!(csv, "{x},{y},{a},{b},{}", eval.probabilities[x][y][ia][ib]);
                }
            }
        }
    }
    csv
}

fn chsh(args: &ChshArgs) -> CliResult<()> {
    let (p, cfg) = resolve_point(&args.point)?;
    let state = TmssParameters::new(p.nu, p.eta)?.state()?;
    let optimized = args.optimize || args.free || cfg.optimize.unwrap_or(false);
    let (setting, evaluation) = if optimized {
        let constraint = if args.free { ChshConstraint::Free } else { ChshConstraint::Mirrored };
        optimize_chsh(&state, p.epsilon, constraint)?
    } else {
        let (a0, a1) = args.alpha.or(cfg.alpha).unwrap_or((0.12, -0.48));
        let setting = ChshSetting::mirrored(a0, a1, p.epsilon)?;
        (setting, evaluate_chsh(&state, &setting)?)
    };
    let out = ChshOutput { eta: p.eta, nu: p.nu, optimized, setting, s: evaluation.s, evaluation };
    let text = match args.point.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out),
        Format::Csv => probability_rows(&out.evaluation),
    };
    emit(&args.point.common, cfg.output_path.as_deref(), &text)
}

#[derive(Serialize)]
struct SampleOutput {
    eta: f64,
    nu: f64,
    epsilon: f64,
    setting: ChshSetting,
    quantum_s: f64,
    empirical_s: Option<f64>,
    report: SimulationReport,
}

fn sample(args: &PointArgs) -> CliResult<()> {
    let (p, cfg) = resolve_point(args)?;
    let state = TmssParameters::new(p.nu, p.eta)?.state()?;
    let (setting, evaluation) = optimize_chsh(&state, p.epsilon, ChshConstraint::Mirrored)?;
    let fa = click_families(p.epsilon, &setting.alpha)?;
    let fb = click_families(p.epsilon, &setting.beta)?;
    let cert = certify_isotropic(&state, &fa, &fb)?.ok_or_else(|| {
        Failure::Domain(format!("no locality certificate at eta = {}, nu = {}; the local model is undefined", p.eta, p.nu))
    })?;
    let model = build_lhv_model(&cert, &state, &fa, &fb)?;
    let report = simulate(&model, p.samples, p.seed)?;
    let text = match args.common.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&SampleOutput {
            eta: p.eta,
            nu: p.nu,
            epsilon: p.epsilon,
            setting,
            quantum_s: evaluation.s,
            empirical_s: report.empirical_s(),
            report,
        }),
        Format::Csv => {
            let mut csv = String::from("x,y,a,b,empirical,target,z\n");
            for x in 0..report.empirical.len() {
                for y in 0..report.empirical[x].len() {
                    for (ia, a) in report.outcomes_a[x].iter().enumerate() {
                        for (ib, b) in report.outcomes_b[y].iter().enumerate() {
                            let _ = writeln!(
                                csv,
                                "{x},{y},{a},{b},{},{},{}",
                                report.empirical[x][y][ia][ib],
                                report.target[x][y][ia][ib],
                                report.z_scores[x][y][ia][ib]
                            );
                        }
                    }
                }
            }
            csv
        }
    };
    emit(&args.common, cfg.output_path.as_deref(), &text)
}

#[derive(Serialize)]
struct CellOutput<'a> {
    eta: f64,
    nu: f64,
    status: &'a str,
    value: f64,
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let mut config: SweepConfig = load_config(args.common.config.as_deref())?;
    if let Some(eps) = args.epsilon {
        config.epsilon = eps;
    }
    if let Some((w, h)) = args.grid {
        config.eta_steps = w;
        config.nu_steps = h;
    }
    let verdicts = run_sweep(&config)?;
    let text = match args.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&verdicts, &mut buf).map_err(|e| Failure::Domain(e.to_string()))?;
            String::from_utf8(buf).expect("CSV is ASCII")
        }
        Format::Json => to_json(
            &verdicts
                .iter()
                .map(|v| CellOutput { eta: v.eta, nu: v.nu, status: v.status.as_str(), value: v.value })
                .collect::<Vec<_>>(),
        ),
    };
    emit(&args.common, config.output_path.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify(a) => certify(a),
        Command::Chsh(a) => chsh(a),
        Command::Sample(a) => sample(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
