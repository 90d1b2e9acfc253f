use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sbl_core::bounds::{
    growth_constants, in_alpha_lower_bound, lambda1_lower_bound, lambda_k_lower_bound, sobolev_constants,
    GeometricHypotheses, SobolevBranch,
};
use sbl_core::models::{Discretization, ModelManifold, ModelSpec, PotentialSpec};
use sbl_core::operators::OperatorPair;
use sbl_core::solver::{lowest_eigenpairs_with, SolverMethod, DEFAULT_TOL};
use sbl_core::verify::{
    check_gradient_estimates, check_sobolev, check_volume_comparison, check_wz_lemma, full_verification, wz_trials,
    RunResult, VerificationReport,
};
use sbl_core::LogScalar;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "sbl", version, about = "Explicit eigenvalue lower bounds and their numerical verification")]
struct Cli {
    /// Write the model's triangle mesh as Wavefront OBJ.
    #[arg(long, global = true, value_name = "PATH.obj")]
    dump_mesh: Option<PathBuf>,
    /// Write the stiffness matrix in Matrix Market coordinate format.
    #[arg(long, global = true, value_name = "PATH.mtx")]
    dump_operator: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bound constants for a hypothesis tuple.
    Bounds(BoundsArgs),
    /// Lowest eigenvalues of a model's discrete Laplacian.
    Spectrum(SpectrumArgs),
    /// Run every check on a model and write a JSON report.
    Verify(VerifyArgs),
    /// Run a single family of checks.
    Check(CheckArgs),
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long = "m")]
    m: u32,
    #[arg(long = "K")]
    k: f64,
    #[arg(long = "L")]
    l: f64,
    #[arg(long = "D")]
    d: f64,
    #[arg(long)]
    vol: Option<f64>,
    /// Also evaluate the lower bound of lambda_k.
    #[arg(long = "k")]
    index: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    /// sphere:S or torus:M:N
    #[arg(long, value_parser = parse_model)]
    model: ModelSpec,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    /// Write index,eigenvalue,residual rows.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelSpec,
    /// zero or axcos:A
    #[arg(long, value_parser = parse_potential, default_value = "zero")]
    potential: PotentialSpec,
    #[arg(long)]
    kmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long, value_parser = parse_model, default_value = "sphere:4")]
    model: ModelSpec,
    #[arg(long, value_parser = parse_potential, default_value = "zero")]
    potential: PotentialSpec,
    /// Random fields (sobolev, default 100) or sequences (wz, default 1000).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Eigenfunctions used by the gradient check.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Radii per center for the volume check.
    #[arg(long, default_value_t = 10)]
    radii: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Which {
    Sobolev,
    Gradient,
    Volume,
    Wz,
}

fn parse_model(s: &str) -> std::result::Result<ModelSpec, String> {
    s.parse().map_err(|e: sbl_core::Error| e.to_string())
}

fn parse_potential(s: &str) -> std::result::Result<PotentialSpec, String> {
    s.parse().map_err(|e: sbl_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Bounds(args) => {
            if cli.dump_mesh.is_some() || cli.dump_operator.is_some() {
                bail!("--dump-mesh and --dump-operator need a model; `bounds` has none");
            }
            bounds(args)
        }
        Command::Spectrum(args) => spectrum(cli, args),
        Command::Verify(args) => verify(cli, args),
        Command::Check(args) => check(cli, args),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn build_model(cli: &Cli, spec: ModelSpec) -> Result<ModelManifold> {
    let model = ModelManifold::build(spec)?;
    if let Some(path) = &cli.dump_mesh {
        let Discretization::Mesh(mesh) = &model.discretization else {
            bail!("{spec} is a periodic grid and has no triangle mesh to dump");
        };
        let mut out = create(path)?;
        mesh.write_obj(&mut out)?;
        out.flush()?;
    }
    if let Some(path) = &cli.dump_operator {
        let ops = OperatorPair::for_model(&model)?;
        let mut out = create(path)?;
        ops.stiffness.write_matrix_market(&mut out)?;
        out.flush()?;
    }
    Ok(model)
}

#[derive(Serialize)]
struct Quantity {
    name: String,
    log: f64,
    linear: Option<f64>,
    underflow: bool,
    overflow: bool,
}

impl Quantity {
    fn new(name: impl Into<String>, x: LogScalar) -> Self {
        let lin = x.linear();
        Self {
            name: name.into(),
            log: x.log_value(),
            linear: (!lin.overflow).then_some(lin.value),
            underflow: lin.underflow,
            overflow: lin.overflow,
        }
    }
}

#[derive(Serialize)]
struct BoundsReport {
    hypotheses: GeometricHypotheses,
    quantities: Vec<Quantity>,
}

fn bounds(args: &BoundsArgs) -> Result<ExitCode> {
    let hyp = GeometricHypotheses::new(args.m, args.k, args.l, args.d, args.vol)?;
    let mut q = Vec::new();
    let alpha = args.alpha;
    // IN_alpha does not depend on the volume at alpha = 1
    match (args.vol, alpha == 1.0) {
        (Some(v), _) => q.push(Quantity::new(format!("IN_alpha (alpha={alpha})"), in_alpha_lower_bound(&hyp, alpha, args.d, v)?)),
        (None, true) => q.push(Quantity::new("IN_alpha (alpha=1)", in_alpha_lower_bound(&hyp, 1.0, args.d, 1.0)?)),
        (None, false) => eprintln!("note: IN_alpha for alpha != 1 needs --vol"),
    }
    q.push(Quantity::new("c0", lambda1_lower_bound(&hyp)?));
    let (sum_constant, growth) = growth_constants(&hyp)?;
    let sob = sobolev_constants(&hyp)?;
    match sob.branch {
        SobolevBranch::HighDimensional => {
            q.push(Quantity::new("c1", growth));
            q.push(Quantity::new("C5", sum_constant));
            q.push(Quantity::new("C1(m)", LogScalar::from_value(sob.raw_dim_c1)));
            q.push(Quantity::new("C2(m)", LogScalar::from_value(sob.raw_dim_c2)));
            q.push(Quantity::new("C~", sob.geometric_factor));
        }
        SobolevBranch::Surface => {
            q.push(Quantity::new("c2", growth));
            q.push(Quantity::new("C6", sum_constant));
            q.push(Quantity::new("S1~", LogScalar::from_value(sob.raw_dim_c1)));
            q.push(Quantity::new("S2~", LogScalar::from_value(sob.raw_dim_c2)));
            q.push(Quantity::new("S~", sob.geometric_factor));
        }
    }
    q.push(Quantity::new("Sobolev C1 (with factor)", sob.c1));
    q.push(Quantity::new("Sobolev C2 (with factor)", sob.c2));
    if let Some(k) = args.index {
        q.push(Quantity::new(format!("lambda_k bound (k={k})"), lambda_k_lower_bound(&hyp, k)?));
    }

    if args.json {
        let report = BoundsReport { hypotheses: hyp, quantities: q };
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!(
        "m = {}, K = {}, L = {}, D = {}, V = {}",
        hyp.dimension,
        hyp.curvature_bound,
        hyp.gradient_bound,
        hyp.diameter_upper,
        hyp.volume.map_or("-".to_string(), |v| v.to_string())
    );
    println!("{:<28} {:>22} {:>24}  note", "quantity", "log", "linear");
    for row in &q {
        let linear = row.linear.map_or("inf".to_string(), |v| format!("{v:.12e}"));
        let note = match (row.underflow, row.overflow) {
            (true, _) => "underflow",
            (_, true) => "overflow",
            _ => "",
        };
        println!("{:<28} {:>22.15e} {:>24}  {note}", row.name, row.log, linear);
    }
    Ok(ExitCode::SUCCESS)
}

fn spectrum(cli: &Cli, args: &SpectrumArgs) -> Result<ExitCode> {
    let model = build_model(cli, args.model)?;
    let ops = OperatorPair::for_model(&model)?;
    let method = match args.method {
        Method::Auto => SolverMethod::Auto,
        Method::Dense => SolverMethod::Dense,
        Method::Iterative => SolverMethod::Iterative,
    };
    let spec = lowest_eigenpairs_with(&ops, args.k, args.tol, args.seed, method)?;
    if let Some(path) = &args.csv {
        let mut out = create(path)?;
        spec.write_csv(&mut out)?;
        out.flush()?;
    }
    println!("{} ({} vertices)", model.spec, model.vertex_count());
    println!("{:>5} {:>24} {:>24} {:>12}", "index", "eigenvalue", "smooth", "residual");
    for (i, (l, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
        let exact = model.reference.exact_eigenvalues.get(i).map_or("-".to_string(), |e| format!("{e}"));
        println!("{i:>5} {l:>24.15e} {exact:>24} {r:>12.3e}");
    }
    println!("max residual {:.3e}", spec.max_residual());
    Ok(ExitCode::SUCCESS)
}

fn print_summary(report: &VerificationReport) {
    if let Some(model) = &report.model {
        println!("model {} potential {} ({} vertices)", model.spec, model.potential, model.vertex_count);
    }
    for anchor in report.anchors() {
        let checks: Vec<_> = report.checks_with_anchor(anchor).collect();
        let passed = checks.iter().filter(|c| c.pass).count();
        let min = checks.iter().map(|c| c.margin_log).fold(f64::INFINITY, f64::min);
        println!("{anchor:<14} {passed:>4}/{:<4} min log-margin {min:.6}", checks.len());
    }
    println!("overall {}", if report.pass { "PASS" } else { "FAIL" });
}

fn finish(result: RunResult, out: Option<&Path>) -> Result<ExitCode> {
    let (report, error) = match result {
        Ok(report) => (report, None),
        Err(failure) => (*failure.report, Some(failure.error)),
    };
    if let Some(path) = out {
        let mut file = create(path)?;
        serde_json::to_writer_pretty(&mut file, &report)?;
        writeln!(file)?;
        file.flush()?;
    }
    print_summary(&report);
    if let Some(e) = error {
        bail!(e);
    }
    if let Some(first) = report.first_failure() {
        eprintln!(
            "first failing check: {} ({}) margin {:.6}",
            first.name, first.anchor, first.margin_log
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<ExitCode> {
    let model = build_model(cli, args.model)?;
    finish(full_verification(&model, args.potential, args.kmax, args.tol, args.seed), Some(&args.out))
}

fn check(cli: &Cli, args: &CheckArgs) -> Result<ExitCode> {
    if args.which == Which::Wz {
        let trials = args.trials.unwrap_or(1000);
        let stats = wz_trials(trials, args.seed)?;
        println!(
            "sequences {}: non-vacuous {}, vacuous {}, counterexamples {}",
            stats.trials, stats.non_vacuous, stats.vacuous, stats.counterexamples
        );
        return finish(check_wz_lemma(trials, args.seed), args.out.as_deref());
    }
    let model = build_model(cli, args.model)?;
    let result = match args.which {
        Which::Sobolev => check_sobolev(&model, args.potential, args.trials.unwrap_or(100), args.seed),
        Which::Gradient => check_gradient_estimates(&model, args.potential, args.k, args.tol, args.seed),
        Which::Volume => check_volume_comparison(&model, args.radii, args.seed),
        Which::Wz => unreachable!(),
    };
    finish(result, args.out.as_deref())
}
