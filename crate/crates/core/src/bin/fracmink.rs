use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracmink::harness::{
    default_examples, emit_report, load_scenario_path, margins_svg, paper_example, random_scenario, read_margins,
    run_pairs, run_suite, Family, ReportFormat, SuiteResult,
};
use fracmink::inequalities::{RealFn, Theorem};
use fracmink::operators::{frac_integral_direct, frac_integral_series, DEFAULT_SERIES_TOL};
use fracmink::{
    make_constant_kernel, make_prabhakar_kernel, make_proportional_kernel, make_rl_kernel, make_series_kernel,
    AnalyticKernel, Error, FractionalOrder, Interval, QuadratureSpec, Radius,
};

#[derive(Parser)]
#[command(
    name = "fracmink",
    version,
    about = "Fractional integrals with analytic kernels and inequality checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one left fractional integral
    Eval(EvalArgs),
    /// Check theorems on a scenario file
    Check(CheckArgs),
    /// Run the canned examples
    Examples(ExamplesArgs),
    /// Run seeded random scenarios
    Fuzz(FuzzArgs),
    /// Plot margins from a report CSV
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct KernelArgs {
    /// rl, constant, proportional, prabhakar or series
    #[arg(long, default_value = "rl")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Defaults to 0 for rl/constant, otherwise 1 (0.8 for prabhakar examples)
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Coefficient expression in n for series kernels
    #[arg(long)]
    coeff: Option<String>,
    /// Radius of convergence for series kernels
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// text, csv or svg
    #[arg(long, default_value = "text")]
    format: String,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = default_parallelism())]
    parallelism: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Integrand, an expression in theta
    #[arg(long)]
    f: String,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    x: f64,
    /// direct, series or both
    #[arg(long, default_value = "both")]
    method: String,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated theorem ids (thm31, ..., thm46) or all
    #[arg(long, default_value = "all")]
    theorems: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ExamplesArgs {
    /// 1..8 or all
    #[arg(long, default_value = "all")]
    id: String,
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 2.0)]
    x: f64,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 200)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed0: u64,
    /// rl, constant, prabhakar, proportional-report-only or admissible
    #[arg(long, default_value = "admissible")]
    family: String,
    #[arg(long, default_value = "all")]
    theorems: String,
    /// Exit with status 2 when an admissible scenario is violated
    #[arg(long)]
    fail_on_violation: bool,
    /// csv, text or svg
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = default_parallelism())]
    parallelism: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn build_kernel(k: &KernelArgs, prabhakar_defaults: bool) -> Result<(AnalyticKernel, FractionalOrder), Error> {
    let beta = k.beta.unwrap_or(match k.kernel.as_str() {
        "rl" | "constant" => 0.0,
        "prabhakar" if prabhakar_defaults => 0.8,
        _ => 1.0,
    });
    let order = FractionalOrder::new(k.alpha, beta)?;
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::InvalidParameter {
            name: name.into(),
            message: format!("--{name} is required for --kernel {}", k.kernel),
        })
    };
    let kernel = match k.kernel.as_str() {
        "rl" => make_rl_kernel(k.alpha)?,
        "constant" => make_constant_kernel(need("c", k.c)?)?,
        "proportional" => make_proportional_kernel(need("rho", k.rho)?, k.alpha)?,
        "prabhakar" if prabhakar_defaults => {
            make_prabhakar_kernel(k.rho.unwrap_or(1.2), k.omega.unwrap_or(0.3), order)?
        }
        "prabhakar" => make_prabhakar_kernel(need("rho", k.rho)?, need("omega", k.omega)?, order)?,
        "series" => {
            let src = k.coeff.as_deref().ok_or_else(|| Error::InvalidParameter {
                name: "coeff".into(),
                message: "--coeff is required for --kernel series".into(),
            })?;
            make_series_kernel(src, k.radius.map_or(Radius::Infinite, Radius::Finite))?
        }
        other => {
            return Err(Error::InvalidParameter {
                name: "kernel".into(),
                message: format!("unknown kernel '{other}'"),
            })
        }
    };
    Ok((kernel, order))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_result(r: &SuiteResult, format: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    let format: ReportFormat = format.parse()?;
    let mut w = open_out(out)?;
    emit_report(r, format, &mut w)?;
    w.flush()?;
    if format != ReportFormat::Text {
        eprintln!("{}", r.summary_line());
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<i32, Error> {
    let (kernel, order) = build_kernel(&args.kernel, false)?;
    let f = RealFn::parse(&args.f)?;
    let iv = Interval::left(args.a, args.x)?;
    let q = QuadratureSpec::default();
    let g = |t: f64| f.eval(t);
    let (direct, series) = match args.method.as_str() {
        "direct" => (true, false),
        "series" => (false, true),
        "both" => (true, true),
        m => {
            return Err(Error::InvalidParameter {
                name: "method".into(),
                message: format!("unknown method '{m}' (direct, series, both)"),
            })
        }
    };
    println!(
        "kernel {kernel}, alpha={}, beta={}, f={}",
        order.alpha,
        order.beta,
        f.label()
    );
    if direct {
        let v = frac_integral_direct(&kernel, order, g, &iv, &q)?;
        println!(
            "direct value={} error={:.3e} cells={}",
            v.value, v.error_estimate, v.terms_or_cells
        );
    }
    if series {
        let v = frac_integral_series(&kernel, order, g, &iv, &q, DEFAULT_SERIES_TOL)?;
        println!(
            "series value={} error={:.3e} terms={}",
            v.value, v.error_estimate, v.terms_or_cells
        );
    }
    Ok(0)
}

fn check(args: CheckArgs) -> Result<i32, Error> {
    let s = load_scenario_path(&args.scenario)?;
    let theorems = Theorem::parse_list(&args.theorems)?;
    let r = run_suite(&[s], &theorems, args.output.parallelism);
    write_result(&r, &args.output.format, &args.output.out)?;
    Ok(r.exit_code())
}

fn examples(args: ExamplesArgs) -> Result<i32, Error> {
    let (kernel, order) = build_kernel(&args.kernel, true)?;
    let iv = Interval::left(args.a, args.x)?;
    let list = if args.id == "all" {
        if (args.ell, args.p, args.a, args.x) == (1.0, 2.0, 1.0, 2.0) {
            default_examples(&kernel, order)?
        } else {
            (1..=8)
                .map(|id| paper_example(id, args.ell, order, kernel.clone(), iv, args.p))
                .collect::<Result<_, _>>()?
        }
    } else {
        let id: u32 = args
            .id
            .parse()
            .map_err(|_| Error::Range(format!("example id '{}' (expected 1..8 or all)", args.id)))?;
        vec![paper_example(id, args.ell, order, kernel, iv, args.p)?]
    };
    let pairs: Vec<_> = list.into_iter().map(|e| (e.scenario, e.theorem)).collect();
    let r = run_pairs(&pairs, args.output.parallelism);
    write_result(&r, &args.output.format, &args.output.out)?;
    Ok(r.exit_code())
}

fn fuzz(args: FuzzArgs) -> Result<i32, Error> {
    let family: Family = args.family.parse()?;
    let theorems = Theorem::parse_list(&args.theorems)?;
    let scenarios: Vec<_> = (0..args.seeds)
        .map(|i| random_scenario(args.seed0.wrapping_add(i), family))
        .collect();
    let mut r = run_suite(&scenarios, &theorems, args.parallelism);
    r.seed = Some(args.seed0);
    write_result(&r, &args.format, &args.out)?;
    for e in &r.entries {
        if let Err(err) = &e.outcome {
            eprintln!("{} {}: {err}", e.scenario_id, e.theorem);
        }
    }
    Ok(match r.exit_code() {
        2 if !args.fail_on_violation => 0,
        c => c,
    })
}

fn plot(args: PlotArgs) -> Result<i32, Error> {
    let points = read_margins(File::open(&args.input)?)?;
    std::fs::write(&args.out, margins_svg(&points))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Check(a) => check(a),
        Command::Examples(a) => examples(a),
        Command::Fuzz(a) => fuzz(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 3 } else { 4 })
        }
    }
}
