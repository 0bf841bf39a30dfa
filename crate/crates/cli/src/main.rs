use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hqcalc_core::calculus::{d_calc, hinf_d, hinf_s, s_calc, CalcOptions, CalculusResult};
use hqcalc_core::contour::DEFAULT_MAX_NODES;
use hqcalc_core::error::Error;
use hqcalc_core::harness::{run_suite, Report, Suite, SuiteConfig};
use hqcalc_core::hnum::ImaginaryUnit;
use hqcalc_core::linalg::QMat;
use hqcalc_core::qop::{resolvent_profile, s_spectrum, CommutingOperator, OperatorSpec, Side};
use hqcalc_core::sfun::{FunctionSpec, StemFunction};

/// Functional calculi for quaternionic operators with commuting components.
#[derive(Parser, Debug)]
#[command(name = "hqcalc", version, about)]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the S-spectrum of an operator as a list of spheres.
    Spectrum {
        /// Operator description (JSON).
        #[arg(short = 'T', long = "operator", value_name = "FILE")]
        operator: PathBuf,
    },
    /// Evaluate a functional calculus at an operator.
    Apply(ApplyArgs),
    /// Run verification suites and report each check.
    Verify(VerifyArgs),
    /// Emit CSV samples of |s| against ||Q_{c,s}^{-1}(T)|| along rays.
    PlotData(PlotArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Calculus {
    /// S-functional calculus f(T).
    S,
    /// Harmonic (Q-resolvent) calculus Df(T).
    Harmonic,
    /// S-functional calculus regularized for growing f.
    HinfS,
    /// Harmonic calculus regularized for growing f.
    HinfHarmonic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    /// Operator description (JSON).
    #[arg(short = 'T', long = "operator", value_name = "FILE")]
    operator: PathBuf,
    /// Function description (JSON).
    #[arg(short = 'f', long = "function", value_name = "FILE")]
    function: PathBuf,
    /// Which calculus to evaluate.
    #[arg(long, value_enum, default_value = "harmonic")]
    calculus: Calculus,
    /// Left or right slice function and matching resolvent.
    #[arg(long, value_enum, default_value = "left")]
    side: SideArg,
    /// Power n of the regularizer s^n / (1+s)^(2n-1) for the H-infinity calculi.
    #[arg(long, value_name = "N")]
    regularizer_n: Option<u32>,
    /// Contour angle; defaults to the midpoint between the spectrum and the function's sector.
    #[arg(long)]
    phi: Option<f64>,
    /// Imaginary unit of the integration slice, as "j1,j2,j3".
    #[arg(long = "J", value_name = "j1,j2,j3", default_value = "1,0,0")]
    unit: String,
    /// Requested accuracy.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Node budget per integral.
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Comma-separated suites (algebra, resolvent, independence, product, rational, hinf) or "all".
    #[arg(long)]
    suite: Option<String>,
    /// Seed for random instances; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Suite configuration (JSON).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Write a CSV residual table here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Operator description (JSON).
    #[arg(short = 'T', long = "operator", value_name = "FILE")]
    operator: PathBuf,
    /// Ray angles as "a1,a2,..."; defaults to five rays between the spectrum and the negative axis.
    #[arg(long)]
    angles: Option<String>,
    #[arg(long, default_value_t = 1e-4)]
    r_min: f64,
    #[arg(long, default_value_t = 1e4)]
    r_max: f64,
    /// Samples per decade of |s|.
    #[arg(long, default_value_t = 10)]
    per_decade: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Exit status classes: bad input (2) or a numerical failure (1).
enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidUnit(_) | Error::InvalidSector(_) => Failure::Usage(e.into()),
            other => Failure::Numerical(other.into()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(e: anyhow::Error) -> Failure {
    Failure::Usage(e)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {what} file {}", path.display()))
        .map_err(usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid {what} file {}", path.display()))
        .map_err(usage)
}

fn load_operator(path: &Path) -> CliResult<CommutingOperator> {
    let spec: OperatorSpec = read_json(path, "operator")?;
    spec.build()
        .with_context(|| format!("invalid operator in {}", path.display()))
        .map_err(usage)
}

fn load_function(path: &Path) -> CliResult<StemFunction> {
    let spec: FunctionSpec = read_json(path, "function")?;
    spec.build()
        .with_context(|| format!("invalid function in {}", path.display()))
        .map_err(usage)
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| usage(anyhow!("invalid {what} '{s}'")))
        })
        .collect()
}

fn parse_unit(s: &str) -> CliResult<ImaginaryUnit> {
    let v = parse_list(s, "--J")?;
    if v.len() != 3 {
        return Err(usage(anyhow!("--J takes three components, got '{s}'")));
    }
    ImaginaryUnit::normalized(v[0], v[1], v[2]).map_err(|e| usage(e.into()))
}

fn print_matrix(m: &QMat) {
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:.12}", m[(i, j)])).collect();
        println!("  [{}]", row.join(", "));
    }
}

fn spectrum(json_out: bool, path: &Path) -> CliResult<()> {
    let t = load_operator(path)?;
    let report = s_spectrum(&t)?;
    if json_out {
        println!("{}", serde_json::to_string(&report).expect("spectrum serializes"));
    } else {
        println!("S-spectrum ({} spheres):", report.spheres.len());
        for s in &report.spheres {
            println!("  center {} radius {}", s.center, s.radius);
        }
        println!("max argument {:.6}", report.max_arg());
    }
    Ok(())
}

fn apply(json_out: bool, args: &ApplyArgs) -> CliResult<()> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(usage(anyhow!("--tol must be positive")));
    }
    let t = load_operator(&args.operator)?;
    let side = match args.side {
        SideArg::Left => Side::Left,
        SideArg::Right => Side::Right,
    };
    let f = load_function(&args.function)?.with_side(side);
    let opts = CalcOptions {
        phi: args.phi,
        unit: parse_unit(&args.unit)?,
        tol: args.tol,
        max_nodes: args.max_nodes,
        side,
        resolvent_consts: None,
        regularizer_n: args.regularizer_n,
    };
    let result: CalculusResult = match args.calculus {
        Calculus::S => s_calc(&t, &f, &opts)?,
        Calculus::Harmonic => d_calc(&t, &f, &opts)?,
        Calculus::HinfS => hinf_s(&t, &f, &opts)?,
        Calculus::HinfHarmonic => hinf_d(&t, &f, &opts)?,
    };
    if json_out {
        let out = json!({
            "value": result.value,
            "est_error": result.est_error,
            "form_gap": result.form_gap,
            "plan": result.plan,
            "diagnostics": result.diagnostics,
        });
        println!("{}", serde_json::to_string(&out).expect("result serializes"));
    } else {
        println!("value:");
        print_matrix(&result.value);
        println!("estimated error {:.3e}", result.est_error);
        if let Some(g) = result.form_gap {
            println!("form gap {g:.3e}");
        }
        if let Some(p) = &result.plan {
            println!(
                "contour phi {:.6}, eps {:.3e}, R {:.3e}, {} nodes",
                p.phi, p.eps, p.r_max, p.nodes
            );
        }
        println!(
            "{} integrals, {} nodes evaluated",
            result.diagnostics.integrals, result.diagnostics.nodes_evaluated
        );
    }
    Ok(())
}

fn verify(json_out: bool, args: &VerifyArgs) -> CliResult<Report> {
    let mut cfg = match &args.config {
        Some(path) => SuiteConfig::from_file(path)?,
        None => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(s) = &args.suite {
        cfg.suites = Suite::parse_list(s)?;
    }
    let report = run_suite(&cfg)?;
    if let Some(path) = &args.report {
        report.write_json(path)?;
    }
    if let Some(path) = &args.csv {
        report.write_csv(path)?;
    }
    if json_out {
        println!("{}", report.to_json());
    } else {
        for c in &report.checks {
            println!(
                "{} {:<34} residual {:>10.3e}  tolerance {:>8.1e}{}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance,
                c.detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default()
            );
        }
        println!(
            "{} passed, {} failed in {:.1} s (seed {})",
            report.passed,
            report.failed,
            report.timing.total_ms / 1e3,
            report.seed
        );
    }
    Ok(report)
}

fn plot_data(args: &PlotArgs) -> CliResult<()> {
    if !(args.r_min > 0.0 && args.r_max > args.r_min) || args.per_decade == 0 {
        return Err(usage(anyhow!("need 0 < r-min < r-max and per-decade > 0")));
    }
    let t = load_operator(&args.operator)?;
    let angles = match &args.angles {
        Some(s) => parse_list(s, "--angles")?,
        None => {
            let w = s_spectrum(&t)?.max_arg();
            (1..=5).map(|k| w + (PI - w) * k as f64 / 5.0).collect()
        }
    };
    let samples = resolvent_profile(&t, &angles, args.r_min, args.r_max, args.per_decade)?;
    let mut csv = String::from("angle,abs_s,norm_q_inv,scaled_q\n");
    for s in samples {
        csv.push_str(&format!("{},{:e},{:e},{:e}\n", s.angle, s.r, s.norm_q_inv, s.scaled_q));
    }
    match &args.out {
        Some(path) => fs::write(path, csv)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(usage)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<bool> {
    match &cli.command {
        Command::Spectrum { operator } => spectrum(cli.json, operator).map(|_| true),
        Command::Apply(args) => apply(cli.json, args).map(|_| true),
        Command::Verify(args) => verify(cli.json, args).map(|r| r.pass),
        Command::PlotData(args) => plot_data(args).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
