//! The `isopath` command line.

pub mod files;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cloud::{io::read_points, PointCloud, DEFAULT_FAIR_DAMPING, DEFAULT_FAIR_STEPS, DEFAULT_GAP_THRESHOLD};
use crate::diffgeo::{Surface, SurfaceConfig};
use crate::error::{Error, Result};
use crate::param::{
    build_laplacian, conformality_report, parameterize, Domain, DomainKind, Parameterization, SolverConfig,
    WeightScheme,
};
use crate::planner::{plan, Pattern, ToolConfig, ToolPath};
use crate::verify::{analytic_regression, evaluate_plan, AnalyticSurface, Tolerances};

/// Environment variable bounding the worker thread count.
pub const THREADS_ENV: &str = "ISOPATH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "isopath", version, about = "Iso-parametric tool paths on point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parameterize a cloud onto a rectangle or disk.
    Param(ParamArgs),
    /// Plan tool paths over a parameterized cloud.
    Plan(PlanArgs),
    /// Measure side-interval and chord errors of planned paths.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CloudArgs {
    /// Point cloud, XYZ text or PLY.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Neighbours per point.
    #[arg(long, default_value_t = 12)]
    pub knn: usize,
    /// Smooth the cloud along its normals before use.
    #[arg(long)]
    pub fair: bool,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[command(flatten)]
    pub cloud: CloudArgs,
    /// Break point indices in boundary traversal order.
    #[arg(long)]
    pub breaks: PathBuf,
    #[arg(long, default_value = "rect", value_parser = parse_domain)]
    pub domain: DomainKind,
    /// Relative residual the interior solve must reach.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ToolArgs {
    /// Ball-end cutter radius, mm.
    #[arg(long, default_value_t = 4.0)]
    pub cutter: f64,
    /// Scallop height limit, mm.
    #[arg(long, default_value_t = 1.0)]
    pub scallop: f64,
    /// Chord deviation limit, mm.
    #[arg(long, default_value_t = 0.01)]
    pub chord: f64,
    /// Paths planned from each boundary with the projected side step (3 to 5).
    #[arg(long, default_value_t = 4)]
    pub band_paths: usize,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub cloud: CloudArgs,
    /// Break point indices; needed unless --param is given.
    #[arg(long)]
    pub breaks: Option<PathBuf>,
    /// Reuse a parameterization written by `param`.
    #[arg(long)]
    pub param: Option<PathBuf>,
    /// Defaults to rect for direction paths and disk for contour paths.
    #[arg(long, value_parser = parse_domain)]
    pub domain: Option<DomainKind>,
    #[arg(long, default_value = "direction", value_parser = parse_pattern)]
    pub pattern: Pattern,
    #[command(flatten)]
    pub tool: ToolArgs,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run the regression on a synthetic surface instead: plane,
    /// sphere:<radius> or cylinder:<radius>.
    #[arg(long, value_parser = parse_analytic)]
    pub analytic: Option<AnalyticSurface>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub param: Option<PathBuf>,
    #[arg(long)]
    pub paths: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub knn: usize,
    #[command(flatten)]
    pub tool: ToolArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_domain(s: &str) -> std::result::Result<DomainKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pattern(s: &str) -> std::result::Result<Pattern, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_analytic(s: &str) -> std::result::Result<AnalyticSurface, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

/// Exit code for an error raised outside planning: 2 for bad input or
/// configuration, 3 for topology or degenerate geometry, 4 for solver failure.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::InvalidArgument(_) | Error::InvalidInput(_) | Error::Parse { .. } | Error::Io { .. } => 2,
        Error::SolverFailure { .. } => 4,
        Error::Gouging { .. } | Error::InvalidCurvature { .. } => 5,
        Error::Topology(_) | Error::DegenerateGeometry(_) | Error::TooSparse(_) | Error::OutOfDomain(..) => 3,
        Error::Planning { .. } => 5,
    }
}

fn fail(e: Error) -> Failure {
    Failure {
        code: exit_code(&e),
        error: e,
    }
}

/// Planning errors, whatever their cause, exit with 5.
fn planning_failure(e: Error) -> Failure {
    Failure { code: 5, error: e }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads the cloud and estimates normals and boundary tags.
fn load_cloud(args: &CloudArgs) -> Result<PointCloud> {
    let mut cloud = PointCloud::new(read_points(&args.input)?)?;
    cloud.compute_normals(args.knn)?;
    cloud.classify_boundary(args.knn, DEFAULT_GAP_THRESHOLD)?;
    if args.fair {
        let weights = build_laplacian(&cloud, args.knn, WeightScheme::Tangent)?;
        let tags = cloud.tags().to_vec();
        cloud = cloud.fair(&weights, DEFAULT_FAIR_STEPS, DEFAULT_FAIR_DAMPING)?;
        cloud.set_tags(tags)?;
        cloud.compute_normals(args.knn)?;
    }
    Ok(cloud)
}

fn solver(tolerance: f64) -> Result<SolverConfig> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "solver tolerance {tolerance} must be in (0, 1)"
        )));
    }
    Ok(SolverConfig {
        tolerance,
        ..SolverConfig::default()
    })
}

fn compute_param(
    cloud: &PointCloud,
    breaks: &Path,
    kind: DomainKind,
    knn: usize,
    tolerance: f64,
) -> Result<Parameterization> {
    let breaks = files::parse_breaks(&read_text(breaks)?, breaks)?;
    parameterize(cloud, &breaks, kind, knn, &solver(tolerance)?)
}

fn load_param(path: &Path, cloud: &PointCloud) -> Result<Parameterization> {
    let p = files::parse_param(&read_text(path)?, path)?;
    if p.len() != cloud.len() {
        return Err(Error::InvalidInput(format!(
            "{} holds {} points, the cloud has {}",
            path.display(),
            p.len(),
            cloud.len()
        )));
    }
    Ok(p)
}

fn surface_config(knn: usize) -> SurfaceConfig {
    SurfaceConfig {
        k: knn,
        ..SurfaceConfig::default()
    }
}

fn tool_config(t: &ToolArgs, pattern: Pattern) -> Result<ToolConfig> {
    let cfg = ToolConfig {
        cutter_radius: t.cutter,
        scallop: t.scallop,
        chord: t.chord,
        pattern,
        boundary_band_paths: t.band_paths,
        ..ToolConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn conformality_text(surface: &Surface) -> String {
    let p = surface.param();
    let mut s = match p.domain() {
        Domain::Rect { a, b } => format!("domain: rect {a:.6} {b:.6}\n"),
        Domain::Disk { r0 } => format!("domain: disk {r0:.6}\n"),
    };
    let fixed = (0..p.len()).filter(|&i| p.is_fixed(i)).count();
    s += &format!("points: {}\nboundary_points: {fixed}\n", p.len());
    s += &format!(
        "solver_iterations: {}\nsolver_residual: {:.3e}\nclamped_images: {}\n",
        p.stats().iterations,
        p.stats().relative_residual,
        p.clamped()
    );
    if let Some(r) = conformality_report(surface, 2000, 1) {
        for (name, d) in [
            ("metric_ratio", r.metric),
            ("shear", r.shear),
            ("angle_error_deg", r.angle_deg),
        ] {
            s += &format!(
                "{name}_median: {:.6}\n{name}_p90: {:.6}\n{name}_max: {:.6}\n",
                d.median, d.p90, d.max
            );
        }
    }
    s
}

fn cmd_param(args: &ParamArgs) -> std::result::Result<(), Failure> {
    let cloud = load_cloud(&args.cloud).map_err(fail)?;
    let param = compute_param(&cloud, &args.breaks, args.domain, args.cloud.knn, args.tolerance).map_err(fail)?;
    write(&args.out, "param.txt", &files::format_param(&param)).map_err(fail)?;
    write(&args.out, "domain.svg", &svg::domain_svg(&param)).map_err(fail)?;
    let surface = Surface::new(&cloud, &param, surface_config(args.cloud.knn)).map_err(fail)?;
    print!("{}", conformality_text(&surface));
    Ok(())
}

fn write_report(out: &Path, surface: &Surface, paths: &[ToolPath], chord: f64) -> std::result::Result<bool, Failure> {
    let report = evaluate_plan(surface, paths, chord, Tolerances::default()).map_err(fail)?;
    write(out, "report.txt", &report.to_text()).map_err(fail)?;
    write(out, "epsilon.csv", &report.to_csv()).map_err(fail)?;
    print!("{}", report.to_text());
    Ok(report.passed())
}

fn cmd_plan(args: &PlanArgs) -> std::result::Result<(), Failure> {
    let default_kind = match args.pattern {
        Pattern::DirectionParallel => DomainKind::Rect,
        Pattern::ContourParallel => DomainKind::Disk,
    };
    let kind = args.domain.unwrap_or(default_kind);
    if kind != default_kind {
        return Err(fail(Error::InvalidArgument(format!(
            "{} paths need a {} domain",
            args.pattern,
            if default_kind == DomainKind::Rect {
                "rect"
            } else {
                "disk"
            }
        ))));
    }
    let cfg = tool_config(&args.tool, args.pattern).map_err(fail)?;
    let cloud = load_cloud(&args.cloud).map_err(fail)?;
    let param = match (&args.param, &args.breaks) {
        (Some(p), _) => load_param(p, &cloud),
        (None, Some(b)) => compute_param(&cloud, b, kind, args.cloud.knn, args.tolerance),
        (None, None) => Err(Error::InvalidArgument("either --breaks or --param is required".into())),
    }
    .map_err(fail)?;
    if param.domain().is_disk() != (kind == DomainKind::Disk) {
        return Err(fail(Error::InvalidInput(format!(
            "{} paths do not fit the parameterization's domain",
            args.pattern
        ))));
    }
    let surface = Surface::new(&cloud, &param, surface_config(args.cloud.knn)).map_err(fail)?;
    let paths = plan(&surface, &cfg).map_err(planning_failure)?;
    write(&args.out, "paths.txt", &files::format_paths(&paths)).map_err(fail)?;
    write(&args.out, "stages.txt", &files::format_stages(&paths)).map_err(fail)?;
    write(&args.out, "paths.svg", &svg::paths_svg(param.domain(), &paths)).map_err(fail)?;
    if args.param.is_none() {
        write(&args.out, "param.txt", &files::format_param(&param)).map_err(fail)?;
    }
    println!("paths: {}", paths.len());
    write_report(&args.out, &surface, &paths, cfg.chord)?;
    Ok(())
}

/// Checks that every path point lies in the domain and on the surface the
/// parameterization describes.
fn check_paths(surface: &Surface, paths: &[ToolPath]) -> Result<()> {
    let domain = surface.domain();
    for p in paths {
        if (p.pattern == Pattern::ContourParallel) != domain.is_disk() {
            return Err(Error::InvalidInput(format!(
                "path {} is {} but the parameterization is not on a matching domain",
                p.index, p.pattern
            )));
        }
        for pt in &p.points {
            let c = domain.to_cartesian(pt.q);
            if !domain.contains_cartesian(c, 1e-6 * domain.size() + 1e-6) {
                return Err(Error::InvalidInput(format!(
                    "path {} point ({:.6}, {:.6}) is outside the domain",
                    p.index, pt.q[0], pt.q[1]
                )));
            }
            let x = surface.interpolate_cartesian(domain.clamp_cartesian(c))?;
            if (x - pt.position).norm() > 1e-4 * (1.0 + domain.size()) {
                return Err(Error::InvalidInput(format!(
                    "path {} point ({:.6}, {:.6}) does not match the parameterization",
                    p.index, pt.q[0], pt.q[1]
                )));
            }
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> std::result::Result<(), Failure> {
    if let Some(shape) = args.analytic {
        let cfg = tool_config(&args.tool, Pattern::DirectionParallel).map_err(fail)?;
        let report = analytic_regression(shape, &cfg).map_err(fail)?;
        write(&args.out, "report.txt", &report.to_text()).map_err(fail)?;
        write(&args.out, "epsilon.csv", &report.quality.to_csv()).map_err(fail)?;
        print!("{}", report.to_text());
        if !report.passed() {
            return Err(Failure {
                code: 1,
                error: Error::InvalidInput(format!("regression on {shape} failed")),
            });
        }
        return Ok(());
    }
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone().ok_or_else(|| {
            fail(Error::InvalidArgument(format!(
                "--{flag} is required without --analytic"
            )))
        })
    };
    let (input, param_path, paths_path) = (
        need(&args.input, "in")?,
        need(&args.param, "param")?,
        need(&args.paths, "paths")?,
    );
    let cloud_args = CloudArgs {
        input,
        knn: args.knn,
        fair: false,
    };
    let tool = tool_config(&args.tool, Pattern::DirectionParallel).map_err(fail)?;
    // Consistency problems between the files are input errors.
    let input_error = |e: Error| Failure { code: 2, error: e };
    let cloud = load_cloud(&cloud_args).map_err(fail)?;
    let param = load_param(&param_path, &cloud).map_err(input_error)?;
    let mut paths =
        files::parse_paths(&read_text(&paths_path).map_err(input_error)?, &paths_path).map_err(input_error)?;
    let stages = paths_path.with_file_name("stages.txt");
    if stages.exists() {
        files::apply_stages(&read_text(&stages).map_err(input_error)?, &stages, &mut paths).map_err(input_error)?;
    }
    let surface = Surface::new(&cloud, &param, surface_config(args.knn)).map_err(fail)?;
    check_paths(&surface, &paths).map_err(input_error)?;
    write_report(&args.out, &surface, &paths, tool.chord)?;
    Ok(())
}

/// Applies the thread bound from the environment, if set.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
    // A pool configured earlier in this process is left as it is.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = configure_threads().map_err(fail).and_then(|()| match &cli.command {
        Command::Param(a) => cmd_param(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Verify(a) => cmd_verify(a),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("isopath: {}", f.error);
            f.code
        }
    }
}
