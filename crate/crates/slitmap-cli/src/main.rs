//! Command line front end for the slitmap library.
//!
//! Evaluates Mityuk's radius at points, over grids, and along boundary
//! approach paths, locates critical points, checks the distance lower
//! bound, and runs the built-in demo studies. Output is CSV or JSON;
//! failures print a one-line JSON error record to stderr and exit
//! nonzero.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use slitmap::analysis::{
    boundary_probe, find_critical_points, lower_bound_check, morse_check, sweep, GridSpec,
    ScalarField,
};
use slitmap::C64;
use slitmap_cli::demos::{demo_domain, demo_probes, find_demo};
use slitmap_cli::domain::{
    format_thetas, parse_alpha, resolve_thetas, solver_config, CliError, CliResult, DomainSpec,
    Engine,
};
use slitmap_cli::report::{
    bound_csv, compute_csv, critical_csv, field_csv, probe_csv, to_json, write_output,
    BoundOut, BoundRecord, ComputeRecord, ComputeReport, CriticalRecord, CriticalReport,
    DemoReport, DemoStudy, FieldRecord, ProbeOut, ProbeRecord, RunConfig, SweepReport,
    SweepSummary,
};

#[derive(Parser)]
#[command(
    name = "slitmap",
    version,
    about = "Mityuk's radius and conformal slit maps of multiply connected domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the radius and slit parameters at one point
    Compute(ComputeArgs),
    /// Evaluate the radius over a grid and export the field
    Sweep(GridArgs),
    /// Sweep a grid, then locate and classify critical points
    Critical(GridArgs),
    /// Sweep a grid, then check R >= distance-to-boundary everywhere
    Boundcheck(GridArgs),
    /// Classify the boundary limit along approach rays
    Probe(ProbeArgs),
    /// Run a built-in demo study end to end
    Demo(DemoArgs),
    /// Repeat the run echoed under "config" in a JSON report
    Rerun(RerunArgs),
    /// List the built-in demos
    Demos(DemosArgs),
}

#[derive(Args)]
struct DemosArgs {
    /// Write every demo's domain description into this directory
    #[arg(long, value_name = "DIR")]
    export: Option<PathBuf>,
}

#[derive(Args)]
struct DomainOpts {
    /// Domain description file (JSON)
    #[arg(long, value_name = "FILE", conflicts_with = "demo")]
    domain: Option<PathBuf>,
    /// Built-in demo domain
    #[arg(long, value_name = "NAME")]
    demo: Option<String>,
    /// Slit kinds, comma separated, c (circular) or r (radial) per hole;
    /// a single token applies to every hole
    #[arg(long, value_name = "LIST")]
    theta: Option<String>,
    /// Nodes per boundary component (overrides the domain file)
    #[arg(long, value_name = "INT")]
    n: Option<usize>,
}

#[derive(Args)]
struct SolverOpts {
    /// Linear solver: direct (dense) or iterative (GMRES)
    #[arg(long, value_name = "NAME")]
    method: Option<String>,
    /// Solver tolerance
    #[arg(long, value_name = "FLOAT")]
    tol: Option<f64>,
}

#[derive(Args)]
struct OutOpts {
    /// Output file (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_name = "csv|json")]
    format: Option<String>,
}

impl OutOpts {
    fn resolve_format(&self, default: &str) -> CliResult<String> {
        let f = self.format.clone().unwrap_or_else(|| default.to_string());
        if f == "csv" || f == "json" {
            Ok(f)
        } else {
            Err(CliError::new("config", format!("unknown format {f:?}, expected csv or json")))
        }
    }
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    domain: DomainOpts,
    /// Evaluation point
    #[arg(long, value_name = "RE,IM", allow_hyphen_values = true)]
    alpha: String,
    #[command(flatten)]
    solver: SolverOpts,
    #[command(flatten)]
    out: OutOpts,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    domain: DomainOpts,
    /// Grid NX,NY over the domain box, or NX,NY,X0,X1,Y0,Y1
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    grid: String,
    /// Worker threads for the sweep (default: all cores)
    #[arg(long, value_name = "INT")]
    workers: Option<usize>,
    #[command(flatten)]
    solver: SolverOpts,
    #[command(flatten)]
    out: OutOpts,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    domain: DomainOpts,
    /// Approach path TX,TY:DX,DY[;DX,DY...][:D1,D2,...]; distances
    /// default to a geometric ladder scaled to the domain
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    path: String,
    #[command(flatten)]
    solver: SolverOpts,
    #[command(flatten)]
    out: OutOpts,
}

#[derive(Args)]
struct DemoArgs {
    /// Demo name (see `slitmap demos`)
    name: String,
    /// Restrict the study to one slit mix (default: every shipped mix)
    #[arg(long, value_name = "LIST")]
    theta: Option<String>,
    /// Nodes per boundary component
    #[arg(long, value_name = "INT")]
    n: Option<usize>,
    /// Grid points per axis
    #[arg(long, value_name = "INT", default_value_t = 51)]
    grid_size: usize,
    /// Output directory (default: slitmap-demo-NAME)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the sweeps (default: all cores)
    #[arg(long, value_name = "INT")]
    workers: Option<usize>,
    #[command(flatten)]
    solver: SolverOpts,
}

#[derive(Args)]
struct RerunArgs {
    /// A JSON report written by another subcommand
    report: PathBuf,
    /// Output file (stdout if omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("{}", serde_json::json!({ "error": e.code, "message": e.message }));
        std::process::exit(1);
    }
}

fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Compute(a) => cmd_compute(a),
        Command::Sweep(a) => cmd_grid(a, GridMode::Sweep),
        Command::Critical(a) => cmd_grid(a, GridMode::Critical),
        Command::Boundcheck(a) => cmd_grid(a, GridMode::Bound),
        Command::Probe(a) => cmd_probe(a),
        Command::Demo(a) => cmd_demo(a),
        Command::Rerun(a) => cmd_rerun(a),
        Command::Demos(a) => {
            for demo in slitmap_cli::demos::DEMOS {
                println!("{:<18} {}", demo.name, demo.about);
            }
            if let Some(dir) = &a.export {
                for demo in slitmap_cli::demos::DEMOS {
                    let spec = demo_domain(demo.name)?;
                    let mut text = serde_json::to_string_pretty(&spec)
                        .map_err(|e| CliError::new("serialize", e.to_string()))?;
                    text.push('\n');
                    write_output(Some(&dir.join(format!("{}.json", demo.name))), &text)?;
                }
                println!("domain files written to {}", dir.display());
            }
            Ok(())
        }
    }
}

/// Load the domain, resolve slit kinds and solver settings, and build the
/// engine together with the config record that reproduces the run.
fn setup(
    dom: &DomainOpts,
    solver: &SolverOpts,
    default_method: &str,
    default_tol: f64,
) -> CliResult<(Engine, RunConfig)> {
    let spec: DomainSpec = match (&dom.domain, &dom.demo) {
        (Some(path), None) => DomainSpec::load(path)?,
        (None, Some(name)) => demo_domain(name)?,
        _ => return Err(CliError::new("config", "exactly one of --domain or --demo is required")),
    };
    let thetas = resolve_thetas(dom.theta.as_deref(), &spec)?;
    let method = solver.method.clone().unwrap_or_else(|| default_method.to_string());
    let tol = solver.tol.unwrap_or(default_tol);
    let cfg = solver_config(&method, tol)?;
    let engine = Engine::build(&spec, dom.n, &thetas, cfg)?;
    let config = RunConfig {
        command: String::new(),
        domain: dom.domain.as_ref().map(|p| p.display().to_string()),
        demo: dom.demo.clone(),
        theta: format_thetas(&thetas),
        n: dom.n,
        method,
        tol,
        alpha: None,
        grid: None,
        path: None,
        format: String::new(),
        workers: None,
    };
    Ok((engine, config))
}

/// Run `f` on a dedicated pool of the requested width, or inline on the
/// default pool.
fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::new("config", "workers must be positive")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::new("config", format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn parse_grid(s: &str, bbox: (C64, C64)) -> CliResult<GridSpec> {
    let bad = || {
        CliError::new("config", format!("cannot parse grid {s:?}, expected NX,NY[,X0,X1,Y0,Y1]"))
    };
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [nx, ny] => {
            let nx: usize = nx.parse().map_err(|_| bad())?;
            let ny: usize = ny.parse().map_err(|_| bad())?;
            let (lo, hi) = bbox;
            Ok(GridSpec::new(nx, ny, lo.re, hi.re, lo.im, hi.im)?)
        }
        [nx, ny, x0, x1, y0, y1] => {
            let nx: usize = nx.parse().map_err(|_| bad())?;
            let ny: usize = ny.parse().map_err(|_| bad())?;
            let x0: f64 = x0.parse().map_err(|_| bad())?;
            let x1: f64 = x1.parse().map_err(|_| bad())?;
            let y0: f64 = y0.parse().map_err(|_| bad())?;
            let y1: f64 = y1.parse().map_err(|_| bad())?;
            Ok(GridSpec::new(nx, ny, x0, x1, y0, y1)?)
        }
        _ => Err(bad()),
    }
}

/// Default approach distances: a geometric ladder from a fifth of the
/// domain diameter down to where the quadrature floor takes over.
fn default_ladder(diameter: f64) -> Vec<f64> {
    (0..16).map(|k| 0.2 * diameter * 0.6f64.powi(k)).collect()
}

fn parse_path(s: &str, diameter: f64) -> CliResult<(C64, Vec<C64>, Vec<f64>)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(CliError::new(
            "config",
            format!("cannot parse path {s:?}, expected TX,TY:DX,DY[;DX,DY...][:D1,D2,...]"),
        ));
    }
    let target = parse_alpha(parts[0])?;
    let dirs = parts[1]
        .split(';')
        .map(parse_alpha)
        .collect::<CliResult<Vec<C64>>>()?;
    let dists = if parts.len() == 3 {
        let mut v = Vec::new();
        for tok in parts[2].split(',') {
            let d: f64 = tok
                .trim()
                .parse()
                .map_err(|_| CliError::new("config", format!("bad distance {tok:?}")))?;
            if !(d > 0.0) {
                return Err(CliError::new("config", "distances must be positive"));
            }
            v.push(d);
        }
        v
    } else {
        default_ladder(diameter)
    };
    Ok((target, dirs, dists))
}

fn cmd_compute(a: ComputeArgs) -> CliResult<()> {
    let alpha = parse_alpha(&a.alpha)?;
    let (engine, mut config) = setup(&a.domain, &a.solver, "direct", 1e-14)?;
    config.command = "compute".into();
    config.alpha = Some([alpha.re, alpha.im]);
    config.format = a.out.resolve_format("json")?;
    let result = engine.evaluate(alpha)?;
    let record = ComputeRecord::from(&result);
    let text = if config.format == "csv" {
        compute_csv(&record)
    } else {
        to_json(&ComputeReport { config, result: record })?
    };
    write_output(a.out.out.as_deref(), &text)
}

enum GridMode {
    Sweep,
    Critical,
    Bound,
}

fn cmd_grid(a: GridArgs, mode: GridMode) -> CliResult<()> {
    let (engine, mut config) = setup(&a.domain, &a.solver, "iterative", 1e-12)?;
    config.command = match mode {
        GridMode::Sweep => "sweep",
        GridMode::Critical => "critical",
        GridMode::Bound => "boundcheck",
    }
    .into();
    config.grid = Some(a.grid.clone());
    config.workers = a.workers;
    config.format = a.out.resolve_format(match mode {
        GridMode::Sweep => "csv",
        _ => "json",
    })?;

    let grid = parse_grid(&a.grid, engine.bbox())?;
    let field: ScalarField = with_pool(a.workers, || sweep(&engine, grid))??;
    let summary = SweepSummary::from(&field);

    let text = match mode {
        GridMode::Sweep => {
            if config.format == "csv" {
                field_csv(&field)
            } else {
                to_json(&SweepReport { config, summary, field: FieldRecord::from(&field) })?
            }
        }
        GridMode::Critical => {
            let points = find_critical_points(&engine, &field)?;
            let morse = morse_check(&points, engine.holes());
            let records: Vec<CriticalRecord> = points.iter().map(CriticalRecord::from).collect();
            if config.format == "csv" {
                critical_csv(&records)
            } else {
                to_json(&CriticalReport {
                    config,
                    summary,
                    critical_points: records,
                    morse: (&morse).into(),
                })?
            }
        }
        GridMode::Bound => {
            let bound = BoundRecord::from(&lower_bound_check(&engine, &field));
            if config.format == "csv" {
                bound_csv(&bound)
            } else {
                to_json(&BoundOut { config, bound })?
            }
        }
    };
    write_output(a.out.out.as_deref(), &text)
}

fn cmd_probe(a: ProbeArgs) -> CliResult<()> {
    let (engine, mut config) = setup(&a.domain, &a.solver, "iterative", 1e-12)?;
    config.command = "probe".into();
    config.path = Some(a.path.clone());
    config.format = a.out.resolve_format("json")?;
    let (lo, hi) = engine.bbox();
    let (target, dirs, dists) = parse_path(&a.path, (hi - lo).norm())?;
    let report = boundary_probe(&engine, target, &dirs, &dists)?;
    let record = ProbeRecord::from(&report);
    let text = if config.format == "csv" {
        probe_csv(&record)
    } else {
        to_json(&ProbeOut { config, probe: record })?
    };
    write_output(a.out.out.as_deref(), &text)
}

fn cmd_demo(a: DemoArgs) -> CliResult<()> {
    let demo = find_demo(&a.name)?;
    let spec = demo_domain(&a.name)?;
    let method = a.solver.method.clone().unwrap_or_else(|| "iterative".to_string());
    let tol = a.solver.tol.unwrap_or(1e-12);
    let cfg = solver_config(&method, tol)?;
    let out_dir = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("slitmap-demo-{}", a.name)));

    let mixes: Vec<String> = match &a.theta {
        Some(t) => vec![t.clone()],
        None => demo.mixes.iter().map(|m| m.to_string()).collect(),
    };

    let mut studies = Vec::new();
    for mix in &mixes {
        let thetas = slitmap_cli::domain::parse_thetas(mix, spec.holes())?;
        let engine = Engine::build(&spec, a.n, &thetas, cfg)?;
        let (lo, hi) = engine.bbox();
        let grid = GridSpec::new(a.grid_size, a.grid_size, lo.re, hi.re, lo.im, hi.im)?;
        let field = with_pool(a.workers, || sweep(&engine, grid))??;
        let points = find_critical_points(&engine, &field)?;
        let morse = morse_check(&points, engine.holes());
        let bound = lower_bound_check(&engine, &field);

        let diameter = (hi - lo).norm();
        let mut probes = Vec::new();
        for (target, dirs) in demo_probes(&a.name) {
            let target = C64::new(target[0], target[1]);
            let dirs: Vec<C64> = dirs.iter().map(|d| C64::new(d[0], d[1])).collect();
            match boundary_probe(&engine, target, &dirs, &default_ladder(diameter)) {
                Ok(report) => probes.push(ProbeRecord::from(&report)),
                Err(slitmap::Error::Analysis(msg)) => {
                    println!(
                        "probe at ({}, {}) skipped: {msg}; raise --n to resolve the approach",
                        target.re, target.im
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }

        let theta_name = format_thetas(&thetas);
        let slug = if theta_name.is_empty() {
            "plain".to_string()
        } else {
            theta_name.replace(',', "")
        };
        let field_file = format!("field-{slug}.csv");
        write_output(Some(&out_dir.join(&field_file)), &field_csv(&field))?;

        println!(
            "{} theta=[{}] interior={} maxima={} minima={} saddles={} degenerate={} \
             bound_violations={} min_margin={:.3e}",
            a.name,
            theta_name,
            field.interior_count(),
            morse.maxima,
            morse.minima,
            morse.saddles,
            morse.degenerate,
            bound.violations,
            bound.min_margin,
        );

        studies.push(DemoStudy {
            theta: theta_name,
            summary: SweepSummary::from(&field),
            critical_points: points.iter().map(CriticalRecord::from).collect(),
            morse: (&morse).into(),
            bound: BoundRecord::from(&bound),
            probes,
            field_file,
        });
    }

    let config = RunConfig {
        command: "demo".into(),
        domain: None,
        demo: Some(a.name.clone()),
        theta: a.theta.clone().unwrap_or_default(),
        n: a.n,
        method,
        tol,
        alpha: None,
        grid: Some(format!("{}", a.grid_size)),
        path: None,
        format: "json".into(),
        workers: a.workers,
    };
    let report = DemoReport {
        config,
        name: demo.name.to_string(),
        about: demo.about.to_string(),
        studies,
    };
    let report_path = out_dir.join("report.json");
    write_output(Some(&report_path), &to_json(&report)?)?;
    println!("report written to {}", report_path.display());
    Ok(())
}

fn cmd_rerun(a: RerunArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.report)
        .map_err(|e| CliError::new("io", format!("cannot read {}: {e}", a.report.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::new("config", format!("report is not JSON: {e}")))?;
    let config_value = value
        .get("config")
        .ok_or_else(|| CliError::new("config", "report has no config key"))?;
    let config: RunConfig = serde_json::from_value(config_value.clone())
        .map_err(|e| CliError::new("config", format!("bad config record: {e}")))?;

    let dom = DomainOpts {
        domain: config.domain.as_ref().map(PathBuf::from),
        demo: config.demo.clone(),
        theta: if config.theta.is_empty() { None } else { Some(config.theta.clone()) },
        n: config.n,
    };
    let solver = SolverOpts { method: Some(config.method.clone()), tol: Some(config.tol) };
    let out = OutOpts { out: a.out.clone(), format: Some(config.format.clone()) };

    let modes = [
        config.alpha.is_some(),
        config.grid.is_some() && config.command != "demo",
        config.path.is_some(),
    ];
    if modes.iter().filter(|m| **m).count() > 1 {
        return Err(CliError::new("config", "config selects more than one of point, grid, path"));
    }

    match config.command.as_str() {
        "compute" => {
            let alpha = config
                .alpha
                .ok_or_else(|| CliError::new("config", "compute config has no alpha"))?;
            cmd_compute(ComputeArgs {
                domain: dom,
                alpha: format!("{},{}", alpha[0], alpha[1]),
                solver,
                out,
            })
        }
        "sweep" | "critical" | "boundcheck" => {
            let grid = config
                .grid
                .clone()
                .ok_or_else(|| CliError::new("config", "grid config has no grid"))?;
            let mode = match config.command.as_str() {
                "sweep" => GridMode::Sweep,
                "critical" => GridMode::Critical,
                _ => GridMode::Bound,
            };
            cmd_grid(GridArgs { domain: dom, grid, workers: config.workers, solver, out }, mode)
        }
        "probe" => {
            let path = config
                .path
                .clone()
                .ok_or_else(|| CliError::new("config", "probe config has no path"))?;
            cmd_probe(ProbeArgs { domain: dom, path, solver, out })
        }
        "demo" => {
            let name = config
                .demo
                .clone()
                .ok_or_else(|| CliError::new("config", "demo config has no demo name"))?;
            let grid_size: usize = config
                .grid
                .as_deref()
                .unwrap_or("51")
                .parse()
                .map_err(|_| CliError::new("config", "demo config has a bad grid size"))?;
            cmd_demo(DemoArgs {
                name,
                theta: dom.theta,
                n: config.n,
                grid_size,
                out: a.out.clone(),
                workers: config.workers,
                solver,
            })
        }
        other => Err(CliError::new("config", format!("unknown command {other:?} in config"))),
    }
}
