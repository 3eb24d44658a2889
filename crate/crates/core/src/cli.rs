//! Command-line front end: `simulate`, `check-region`, `verify` and
//! `exhaustion`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a solver failure (partial
//! outputs are still written) or a failed verification, 3 parameters outside
//! the CGL region.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::amalgam::{exhaustive_sweeps, random_sweeps};
use crate::config::{FieldSpec, RunConfig};
use crate::error::{PcglError, Result};
use crate::exhaustion::{run_exhaustion, ExhaustionPlan};
use crate::grid::Grid;
use crate::integrator::{simulate, Scheme, Trajectory};
use crate::io::{
    fmt_float, write_exhaustion_csv, write_field_csv, write_region_raster, write_reports_csv, write_snapshot,
    write_sweeps_csv, write_trace_csv,
};
use crate::monitors::{
    check_dissipation, check_first_energy, check_second_energy, check_smoothing, identity_suite, CheckReport,
};
use crate::region::{find_witness, region_radius, ParamSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_OUTSIDE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pcgl", version, about = "p-Laplacian complex Ginzburg-Landau solver and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the configured problem and write the energy trace and snapshots.
    Simulate {
        config: PathBuf,
        /// Output directory, overriding `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a parameter point against the CGL region.
    #[command(allow_negative_numbers = true)]
    CheckRegion {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Also write a raster of the region in the `(α/λ, β/κ)` plane.
        #[arg(long)]
        raster: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        extent: f64,
        #[arg(long, default_value_t = 201)]
        steps: usize,
    },
    /// Run one check suite on the configured problem.
    Verify {
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve on the nested boxes of `[exhaustion] widths` and compare them.
    Exhaustion {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Identities,
    Energies,
    Smoothing,
    Clarkson,
    Exhaustion,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_ERROR;
    }
    let result = match cli.command {
        Command::Simulate { config, out: dir } => cmd_simulate(&config, dir, out, err),
        Command::CheckRegion { lambda, kappa, alpha, beta, q, p, dim, raster, extent, steps } => {
            let params = ParamSet { lambda, kappa, alpha, beta, gamma: 0.0, p, q, dim };
            cmd_check_region(&params, raster.as_deref(), extent, steps, out)
        }
        Command::Verify { config, suite, out: dir } => cmd_verify(&config, suite, dir, out, err),
        Command::Exhaustion { config, out: dir } => cmd_exhaustion(&config, dir, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Caps the global rayon pool at `PCGL_THREADS` when set. A pool that was
/// already built is left alone.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("PCGL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| PcglError::Domain(format!("PCGL_THREADS must be a positive integer, got '{raw}'")))?;
    if n == 0 {
        return Err(PcglError::Domain("PCGL_THREADS must be positive".into()));
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

struct Loaded {
    cfg: RunConfig,
    grid: Grid<f64>,
    out_dir: PathBuf,
}

fn load(config: &Path, dir: Option<PathBuf>) -> Result<Loaded> {
    let cfg = RunConfig::load(config)?;
    let grid = cfg.grid.build()?;
    let out_dir = dir.unwrap_or_else(|| {
        let base = config.parent().unwrap_or(Path::new("."));
        base.join(&cfg.output)
    });
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("effective.toml"), cfg.to_string())?;
    Ok(Loaded { cfg, grid, out_dir })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_trajectory(dir: &Path, traj: &Trajectory<f64>) -> Result<()> {
    write_trace_csv(create(&dir.join("trace.csv"))?, &traj.trace)?;
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps)?;
    let mut index = create(&snaps.join("times.csv"))?;
    writeln!(index, "index,t")?;
    for (k, (t, u)) in traj.snapshots.iter().enumerate() {
        writeln!(index, "{k},{}", fmt_float(*t))?;
        write_snapshot(create(&snaps.join(format!("snap_{k:06}.bin")))?, u)?;
    }
    index.flush()?;
    write_field_csv(create(&dir.join("final.csv"))?, &traj.final_state)?;
    Ok(())
}

fn cmd_simulate(config: &Path, dir: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let Loaded { cfg, grid, out_dir } = load(config, dir)?;
    let u0 = cfg.initial.build(&grid)?;
    let forcing = cfg.forcing_field(&grid)?;
    match simulate(&u0, &cfg.scheme, &cfg.params, &forcing) {
        Ok(traj) => {
            write_trajectory(&out_dir, &traj)?;
            let last = traj.trace.rows.last().expect("trace has the initial row");
            writeln!(
                out,
                "completed {} steps to t = {}: |U|^2 = {}, phi = {}, psi = {}",
                last.step,
                fmt_float(last.t),
                fmt_float(last.l2sq),
                fmt_float(last.phi),
                fmt_float(last.psi)
            )?;
            Ok(EXIT_OK)
        }
        Err(failure) => {
            write_trajectory(&out_dir, &failure.partial)?;
            writeln!(err, "solver failure: {failure}")?;
            Ok(EXIT_FAILED)
        }
    }
}

fn cmd_check_region(
    params: &ParamSet<f64>,
    raster: Option<&Path>,
    extent: f64,
    steps: usize,
    out: &mut dyn Write,
) -> Result<i32> {
    let verdict = find_witness(params)?;
    let r = region_radius(params.q)?;
    let (x, y) = params.region_point();
    let sets: Vec<String> = verdict.matched_sets.iter().map(ToString::to_string).collect();
    writeln!(out, "verdict: {}", if verdict.inside { "inside" } else { "outside" })?;
    writeln!(out, "point: x = {}, y = {}, r = {}", fmt_float(x), fmt_float(y), fmt_float(r))?;
    writeln!(out, "matched: {}", if sets.is_empty() { "none".into() } else { sets.join(",") })?;
    match verdict.witness {
        Some(w) => writeln!(
            out,
            "witness: delta = {}, epsilon = {}, J = {}",
            fmt_float(w.delta),
            fmt_float(w.epsilon),
            fmt_float(w.j)
        )?,
        None => writeln!(out, "witness: none")?,
    }
    writeln!(out, "discriminant: {}", fmt_float(verdict.discriminant))?;
    if let Some(path) = raster {
        write_region_raster(create(path)?, r, extent, steps)?;
    }
    Ok(if verdict.inside { EXIT_OK } else { EXIT_OUTSIDE })
}

fn summarize(reports: &[CheckReport<f64>], out: &mut dyn Write) -> Result<bool> {
    for r in reports {
        writeln!(
            out,
            "{} {}: lhs = {}, rhs = {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            fmt_float(r.lhs),
            fmt_float(r.rhs)
        )?;
    }
    Ok(reports.iter().all(|r| r.passed))
}

/// Grid with every cell split in two along each axis, over the same box.
fn refined(grid: &Grid<f64>) -> Result<Grid<f64>> {
    let extent: Vec<f64> = (0..grid.dim()).map(|a| grid.extent(a)).collect();
    let nodes: Vec<usize> = (0..grid.dim()).map(|a| 2 * grid.nodes(a) + 1).collect();
    Grid::new(&extent, &nodes)
}

fn grid_independent(spec: &FieldSpec, what: &str) -> Result<()> {
    match spec {
        FieldSpec::Noise { cells: 0, .. } => Err(PcglError::Domain(format!(
            "smoothing needs {what} that does not depend on the grid; set cells > 0 for noise"
        ))),
        FieldSpec::File(_) => Err(PcglError::Domain(format!("smoothing cannot refine {what} read from a file"))),
        _ => Ok(()),
    }
}

fn cmd_verify(
    config: &Path,
    suite: Suite,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let Loaded { cfg, grid, out_dir } = load(config, dir)?;
    let v = &cfg.verify;
    let reports_path = out_dir.join("reports.csv");
    let passed = match suite {
        Suite::Identities => {
            let reports = identity_suite(&grid, &cfg.params, v.mu, v.nu, v.samples, v.seed, &cfg.scheme.prox)?;
            write_reports_csv(create(&reports_path)?, &reports)?;
            summarize(&reports, out)?
        }
        Suite::Energies => {
            let u0 = cfg.initial.build(&grid)?;
            let forcing = cfg.forcing_field(&grid)?;
            let traj = match simulate(&u0, &cfg.scheme, &cfg.params, &forcing) {
                Ok(t) => t,
                Err(failure) => {
                    write_trajectory(&out_dir, &failure.partial)?;
                    writeln!(err, "solver failure: {failure}")?;
                    return Ok(EXIT_FAILED);
                }
            };
            write_trace_csv(create(&out_dir.join("trace.csv"))?, &traj.trace)?;
            let mut reports = check_first_energy(&traj.trace, &cfg.params)?;
            let unforced = matches!(cfg.forcing, FieldSpec::Zero) && cfg.params.gamma == 0.0;
            if unforced && cfg.scheme.scheme == Scheme::FullyImplicit {
                let step_tol = 10.0 * cfg.scheme.prox.tol;
                reports.extend(check_dissipation(&traj.trace, &cfg.params, step_tol, 0.02)?);
            }
            let verdict = find_witness(&cfg.params)?;
            match check_second_energy(&traj.trace, &cfg.params, &verdict) {
                Ok(r) => reports.extend(r),
                Err(PcglError::NotClaimed(why)) => writeln!(out, "second_energy: not claimed ({why})")?,
                Err(e) => return Err(e),
            }
            write_reports_csv(create(&reports_path)?, &reports)?;
            summarize(&reports, out)?
        }
        Suite::Smoothing => {
            grid_independent(&cfg.initial, "initial data")?;
            grid_independent(&cfg.forcing, "a force")?;
            let fine = refined(&grid)?;
            let mut fine_scheme = cfg.scheme;
            fine_scheme.dt = cfg.scheme.dt / 4.0;
            let run = |g: &Grid<f64>, s| -> Result<Trajectory<f64>> {
                let u0 = cfg.initial.build(g)?;
                let forcing = cfg.forcing_field(g)?;
                simulate(&u0, s, &cfg.params, &forcing).map_err(|f| f.error)
            };
            let coarse = run(&grid, &cfg.scheme)?;
            let fine = run(&fine, &fine_scheme)?;
            let reports = check_smoothing(&coarse.trace, &fine.trace)?;
            write_reports_csv(create(&reports_path)?, &reports)?;
            summarize(&reports, out)?
        }
        Suite::Clarkson => {
            let mut sweeps = random_sweeps(v.sweep_samples, v.seed)?;
            sweeps.extend(exhaustive_sweeps()?);
            write_sweeps_csv(create(&out_dir.join("sweeps.csv"))?, &sweeps)?;
            for s in &sweeps {
                writeln!(
                    out,
                    "{} {} p = {} q = {}: {} failures in {} samples{}",
                    if s.failures == 0 || !s.hard { "PASS" } else { "FAIL" },
                    s.check,
                    s.p,
                    s.q,
                    s.failures,
                    s.samples,
                    if s.hard { "" } else { " (reported only)" }
                )?;
            }
            sweeps.iter().filter(|s| s.hard).all(|s| s.failures == 0)
        }
        Suite::Exhaustion => {
            let report = exhaustion_report(&cfg, &grid, &out_dir, out)?;
            write_reports_csv(create(&reports_path)?, &report.first_energy)?;
            let energies = summarize(&report.first_energy, out)?;
            let decreasing = report.strictly_decreasing();
            writeln!(out, "{} exhaustion_decreasing", if decreasing { "PASS" } else { "FAIL" })?;
            report.failure.is_none() && energies && decreasing
        }
    };
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

fn exhaustion_report(
    cfg: &RunConfig,
    grid: &Grid<f64>,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<crate::exhaustion::ExhaustionReport<f64>> {
    if cfg.exhaustion_widths.is_empty() {
        return Err(PcglError::Domain("the configuration has no [exhaustion] widths".into()));
    }
    let widths: Vec<Vec<f64>> = cfg.exhaustion_widths.iter().map(|&w| vec![w; grid.dim()]).collect();
    let u0 = cfg.initial.build(grid)?;
    let plan = ExhaustionPlan::concentric(grid.clone(), &widths, u0)?;
    let forcing = cfg.forcing_field(grid)?;
    let report = run_exhaustion(&plan, &cfg.scheme, &cfg.params, &forcing)?;
    write_exhaustion_csv(create(&out_dir.join("exhaustion.csv"))?, &report)?;
    for r in &report.rows {
        writeln!(out, "k = {} width = {}: d = {}", r.k, fmt_float(r.box_width), fmt_float(r.sup_diff))?;
    }
    if let Some(f) = &report.failure {
        writeln!(out, "child run failed: {f}")?;
    }
    Ok(report)
}

fn cmd_exhaustion(config: &Path, dir: Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let Loaded { cfg, grid, out_dir } = load(config, dir)?;
    let report = exhaustion_report(&cfg, &grid, &out_dir, out)?;
    Ok(if report.failure.is_none() { EXIT_OK } else { EXIT_FAILED })
}
