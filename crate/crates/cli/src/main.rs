//! `asg1`: construct AS-G1 surfaces, check them, solve fourth-order problems on their
//! C1 spaces and export meshes.
//!
//! Exit codes: 0 success, 1 usage/parse/io, 2 admissibility, 3 topology/conformity/
//! regularity, 4 infeasible or degenerate stage, 5 AS-G1 check failed, 6 problem does
//! not fit the geometry.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use asg1::construct::{check_asg1, method_by_name, ConstructionParams};
use asg1::gluing::{estimate_all, estimator_by_name, GluingData};
use asg1::iga::{
    convergence_study, manufactured_by_name, ProblemSpec, StudyOptions, DEFAULT_LAMBDA,
};
use asg1::io::{export_csv_grid, export_vtk_patch, write_geometry, ExportFormat, GeometryFile, ReportFile};
use asg1::mpatch::{analytic_source, MultiPatchSpline, SurfaceSource};
use asg1::spline::SplineSpace1D;
use asg1::{bundled, vec3, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "asg1", version, about = "AS-G1 multi-patch surfaces and C1 isogeometric analysis")]
struct Cli {
    /// Worker threads (falls back to ASG1_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an AS-G1 approximation of a G1 multi-patch surface.
    Fit(FitArgs),
    /// Check the AS-G1 conditions of a spline surface.
    Check(CheckArgs),
    /// Solve one level of a fourth-order problem.
    Solve(StudyArgs),
    /// Solve on dyadically refined levels and report convergence orders.
    Convergence(StudyArgs),
    /// Sample patches into VTK or CSV grids.
    Export(ExportArgs),
    /// Write a built-in geometry to a file.
    Bundled(BundledArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Local,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Dirichlet,
    Reaction,
}

#[derive(Args)]
struct FitArgs {
    /// Geometry file, `bundled:NAME` or `analytic:NAME`.
    #[arg(long)]
    input: String,
    #[arg(long)]
    degree: usize,
    #[arg(long)]
    regularity: usize,
    #[arg(long)]
    segments: usize,
    #[arg(long, value_enum, default_value = "local")]
    mode: Mode,
    /// Gluing estimator (`surface` or `planar-determinant`).
    #[arg(long, default_value = "surface")]
    estimator: String,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    input: String,
    #[arg(long, default_value_t = 101)]
    samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also write the residual report here (it always goes to stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    input: String,
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Manufactured solution or source (`cos4sin4`, `cos-half-product`).
    #[arg(long)]
    solution: String,
    /// Reaction coefficient.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long)]
    levels: Option<usize>,
    /// Represent the geometry in `S^{p,r}_k` first.
    #[arg(long, requires_all = ["regularity", "segments"])]
    degree: Option<usize>,
    #[arg(long)]
    regularity: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    /// Also compute h-h/2 estimators when the exact solution is known.
    #[arg(long)]
    estimators: bool,
    /// CSV ledger.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    input: String,
    /// `vtk` (one file per patch in the output directory) or `csv-grid`.
    #[arg(long)]
    format: String,
    #[arg(long, default_value_t = 21)]
    samples_per_patch: usize,
    /// Adds the scalar `distance` = |F - S| to this surface (file, bundled: or analytic:).
    #[arg(long)]
    compare: Option<String>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BundledArgs {
    /// Omit to list the names.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, requires = "name")]
    output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Admissibility(_) => 2,
        Error::Topology(_) | Error::Conformity { .. } | Error::Regularity { .. } => 3,
        Error::Infeasible { .. } | Error::Degenerate { .. } | Error::GluingDegenerate { .. } => 4,
        Error::NotAsG1 { .. } => 5,
        Error::ProblemMismatch(_) => 6,
        _ => 1,
    }
}

/// A spline surface with the gluing data stored alongside it, if any.
fn load_surface(spec: &str) -> asg1::Result<(MultiPatchSpline, Option<Vec<GluingData>>)> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        let b = bundled::by_name(name)?;
        return Ok((b.surface, b.gluing));
    }
    if spec.starts_with("analytic:") {
        return Err(Error::InvalidArgument(format!(
            "{spec} is not a spline surface; fit it first"
        )));
    }
    GeometryFile::read(Path::new(spec))?.to_surface()
}

fn load_source(spec: &str) -> asg1::Result<Box<dyn SurfaceSource>> {
    match spec.strip_prefix("analytic:") {
        Some(name) => analytic_source(name),
        None => Ok(Box::new(load_surface(spec)?.0)),
    }
}

fn gluing_or_estimate(s: &MultiPatchSpline, stored: Option<Vec<GluingData>>) -> asg1::Result<Vec<GluingData>> {
    match stored {
        Some(g) => Ok(g),
        None => estimate_all(estimator_by_name("surface")?.as_ref(), s),
    }
}

fn fit(a: &FitArgs) -> asg1::Result<u8> {
    let params = ConstructionParams::new(a.degree, a.regularity, a.segments)?.with_estimator(&a.estimator);
    estimator_by_name(&a.estimator)?;
    let source = load_source(&a.input)?;
    let mode = match a.mode {
        Mode::Local => "local",
        Mode::Global => "global",
    };
    let c = method_by_name(mode)?.construct(source.as_ref(), &params)?;
    write_geometry(&a.output, &c.surface, Some(&c.gluing))?;
    let residual = c.report.check.max_residual();
    let errors = c.report.errors;
    let mut report = ReportFile::new();
    report.construction = Some(c.report);
    report.write(&a.report)?;
    println!(
        "{mode}: eps_L2 {:e}, eps_H1 {:e}, AS-G1 residual {residual:e}",
        errors.eps_l2, errors.eps_h1
    );
    if residual > 1e-8 {
        eprintln!("error: constructed surface has AS-G1 residual {residual:e} > 1e-8");
        return Ok(5);
    }
    Ok(0)
}

fn check(a: &CheckArgs) -> asg1::Result<u8> {
    let (s, stored) = load_surface(&a.input)?;
    let gluing = gluing_or_estimate(&s, stored)?;
    let rep = check_asg1(&s, &gluing, a.samples)?;
    let json = serde_json::to_string_pretty(&rep)?;
    println!("{json}");
    if let Some(p) = &a.report {
        std::fs::write(p, json + "\n")?;
    }
    let worst = rep.worst();
    if rep.max_residual() > a.tol || rep.min_alpha() <= 0.0 {
        let id = worst.map(|w| w.interface).unwrap_or_default();
        eprintln!(
            "error: interface {id} fails the AS-G1 check (max residual {:e}, min alpha {:e}, tol {:e})",
            rep.max_residual(),
            rep.min_alpha(),
            a.tol
        );
        return Ok(5);
    }
    Ok(0)
}

fn study(a: &StudyArgs, default_levels: usize) -> asg1::Result<u8> {
    let (mut s, stored) = load_surface(&a.input)?;
    if let (Some(p), Some(r), Some(k)) = (a.degree, a.regularity, a.segments) {
        s = s.represent_in(SplineSpace1D::new(p, r, k)?)?;
    }
    let gluing = gluing_or_estimate(&s, stored)?;
    let m = manufactured_by_name(&a.solution)?;
    let problem = match a.problem {
        ProblemArg::Dirichlet => ProblemSpec::dirichlet(Arc::clone(&m))?,
        ProblemArg::Reaction => ProblemSpec::reaction(Arc::clone(&m), a.lambda)?,
    };
    problem.check_geometry(s.topology.is_closed(), s.is_planar())?;
    let opts = StudyOptions {
        levels: a.levels.unwrap_or(default_levels),
        estimators: a.estimators,
    };
    let ledger = convergence_study(&problem, &s, &gluing, opts)?;
    std::fs::write(&a.output, ledger.to_csv())?;
    for (row, o) in ledger.rows.iter().zip(ledger.orders()) {
        match o {
            Some(o) => println!(
                "level {} (k = {}, dim {}): orders L2 {:.2}, H1 {:.2}, H2 {:.2}",
                row.level, row.k, row.dim, o[0], o[1], o[2]
            ),
            None => println!("level {} (k = {}, dim {})", row.level, row.k, row.dim),
        }
    }
    if let Some(p) = &a.report {
        let mut report = ReportFile::new();
        if matches!(a.problem, ProblemArg::Reaction) && a.lambda == DEFAULT_LAMBDA {
            report.notes.push(format!("reaction coefficient defaulted to {DEFAULT_LAMBDA}"));
        }
        report.convergence = Some(ledger);
        report.write(p)?;
    }
    Ok(0)
}

fn export(a: &ExportArgs) -> asg1::Result<u8> {
    let format: ExportFormat = a.format.parse()?;
    let (s, _) = load_surface(&a.input)?;
    let other = a.compare.as_deref().map(load_source).transpose()?;
    if let Some(o) = &other {
        if o.num_patches() != s.patches.len() {
            return Err(Error::Topology(format!(
                "comparison surface has {} patches, expected {}",
                o.num_patches(),
                s.patches.len()
            )));
        }
    }
    let dist = |patch: usize, xi: [f64; 2]| -> asg1::Result<f64> {
        let o = other.as_ref().expect("only called with a comparison surface");
        Ok(vec3::dist(s.eval(patch, xi, 0, 0)?, o.jet(patch, xi)?.d[0][0]))
    };
    let scalar = other.is_some().then_some(("distance", &dist as &dyn Fn(usize, [f64; 2]) -> asg1::Result<f64>));
    match format {
        ExportFormat::Vtk => {
            std::fs::create_dir_all(&a.output)?;
            for patch in 0..s.patches.len() {
                let text = export_vtk_patch(&s, patch, a.samples_per_patch, scalar)?;
                std::fs::write(a.output.join(format!("patch_{patch}.vtk")), text)?;
            }
        }
        ExportFormat::CsvGrid => {
            std::fs::write(&a.output, export_csv_grid(&s, a.samples_per_patch, scalar)?)?;
        }
    }
    Ok(0)
}

fn write_bundled(a: &BundledArgs) -> asg1::Result<u8> {
    match (&a.name, &a.output) {
        (Some(name), Some(out)) => {
            let b = bundled::by_name(name)?;
            write_geometry(out, &b.surface, b.gluing.as_deref())?;
        }
        (Some(name), None) => {
            let b = bundled::by_name(name)?;
            println!("{}", GeometryFile::from_surface(&b.surface, b.gluing.as_deref()).to_json());
        }
        _ => {
            for n in bundled::names() {
                println!("{n}");
            }
        }
    }
    Ok(0)
}

fn configure_threads(n: Option<usize>) -> asg1::Result<()> {
    let n = match n {
        Some(n) => Some(n),
        None => match std::env::var("ASG1_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                Error::InvalidArgument(format!("ASG1_THREADS must be a positive integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|()| match &cli.command {
        Command::Fit(a) => fit(a),
        Command::Check(a) => check(a),
        Command::Solve(a) => study(a, 1),
        Command::Convergence(a) => study(a, 3),
        Command::Export(a) => export(a),
        Command::Bundled(a) => write_bundled(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
