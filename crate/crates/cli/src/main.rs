//! Command-line driver: single solves, multi-start batches, residual
//! verification of supplied pairs, and named experiment presets.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use cone_angles::cones::{LinearMap, LiscCone};
use cone_angles::eja::{AlgebraElement, AlgebraKind};
use cone_angles::error::{Error, Result};
use cone_angles::harness::{
    emit_report, run_batch, sample_initial, BatchReport, Family, ProblemSpec, ReportFormat,
};
use cone_angles::solver::{solve, SolverConfig};
use cone_angles::verify::{criticality_residual, phi, stationarity_residual, StationarityReport};

#[derive(Parser)]
#[command(
    name = "cone-angles",
    version,
    about = "Critical and maximal angles between convex cones"
)]
struct Cli {
    /// Worker threads for batch runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver once from a seeded random starting point.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the result JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a multi-start batch and report aggregates plus an angle histogram.
    Batch {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 100)]
        starts: usize,
        /// Report format: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Report path; without it a summary is printed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate stationarity/criticality residuals for a supplied pair.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        /// JSON file with either preimages {"x": [...], "y": [...]} or an
        /// ambient unit pair {"u": [...], "v": [...]}.
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Named experiment presets (table1, table3, table5) at configurable scale.
    Reproduce {
        /// One of: table1, table3, table5.
        preset: String,
        #[command(flatten)]
        config: ConfigArgs,
        /// Restrict to a single dimension.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Format for per-dimension report files written under --out.
        #[arg(long, default_value = "json")]
        format: String,
        /// Prefix for per-dimension report files (suffix: _n<dim>.<ext>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem-spec JSON file.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Family: polyhedral, schur_vs_orthant, ellipsoidal_pair,
    /// sdp_vs_nonneg, custom.
    #[arg(long)]
    family: Option<String>,
    /// Ambient dimension (matrix order for sdp_vs_nonneg).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Density of randomly generated ellipsoid matrices.
    #[arg(long)]
    density: Option<f64>,
}

impl ProblemArgs {
    fn resolve(&self) -> Result<ProblemSpec> {
        let mut spec = match (&self.problem, &self.family) {
            (Some(path), _) => ProblemSpec::from_file(path)?,
            (None, Some(family)) => {
                let family: Family = family.parse()?;
                let mut s = ProblemSpec::schur_vs_orthant(0, 0);
                s.family = family;
                s
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "provide --problem <file> or --family <name>".into(),
                ))
            }
        };
        if let Some(n) = self.n {
            spec.n = n;
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(density) = self.density {
            spec.density = density;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    mu2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    eps3: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl ConfigArgs {
    fn apply(&self, mut config: SolverConfig) -> SolverConfig {
        if let Some(v) = self.mu1 {
            config.mu1 = v;
        }
        if let Some(v) = self.mu2 {
            config.mu2 = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.beta {
            config.beta = v;
        }
        if let Some(v) = self.rho {
            config.rho = v;
        }
        if let Some(v) = self.eps1 {
            config.eps1 = v;
        }
        if let Some(v) = self.eps2 {
            config.eps2 = v;
        }
        if let Some(v) = self.eps3 {
            config.eps3 = v;
        }
        if let Some(v) = self.max_iter {
            config.max_iter = v;
        }
        config
    }
}

#[derive(Serialize)]
struct SolveOutput {
    angle: f64,
    angle_pi: f64,
    cos_angle: f64,
    iterations: usize,
    termination: String,
    stationarity: StationarityReport,
    criticality: f64,
    u: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Deserialize)]
struct PairFile {
    x: Option<Vec<f64>>,
    y: Option<Vec<f64>>,
    u: Option<Vec<f64>>,
    v: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct VerifyOutput {
    phi: Option<f64>,
    angle_pi: Option<f64>,
    stationarity: Option<StationarityReport>,
    criticality: f64,
    membership: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: could not configure {threads} threads: {e}");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Solve { problem, config, out } => run_solve(&problem, &config, out.as_deref()),
        Command::Batch { problem, config, starts, format, out } => {
            run_batch_cmd(&problem, &config, starts, &format, out.as_deref())
        }
        Command::Verify { problem, pair, out } => run_verify(&problem, &pair, out.as_deref()),
        Command::Reproduce { preset, config, n, starts, seed, format, out } => {
            run_reproduce(&preset, &config, n, starts, seed, &format, out.as_deref())
        }
    }
}

fn run_solve(
    problem: &ProblemArgs,
    config_args: &ConfigArgs,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let spec = problem.resolve()?;
    let config = config_args.apply(spec.family.preset());
    let pair = spec.build_pair()?;
    let mut rng = spec.start_rng(0);
    let (x0, y0) = sample_initial(&pair, &mut rng);
    let res = solve(&pair, &config, &x0, &y0)?;
    let criticality = criticality_residual(&res.u, &res.v, &pair, Some((&res.x, &res.y)))?;
    let output = SolveOutput {
        angle: res.angle,
        angle_pi: res.angle / PI,
        cos_angle: res.cos_angle,
        iterations: res.iterations,
        termination: res.termination.to_string(),
        stationarity: res.stationarity,
        criticality,
        u: res.u.iter().copied().collect(),
        v: res.v.iter().copied().collect(),
    };
    let json = serde_json::to_string_pretty(&output)?;
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn run_batch_cmd(
    problem: &ProblemArgs,
    config_args: &ConfigArgs,
    starts: usize,
    format: &str,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let spec = problem.resolve()?;
    let config = config_args.apply(spec.family.preset());
    let report = run_batch(&spec, &config, starts)?;
    match out {
        Some(path) => {
            let format: ReportFormat = format.parse()?;
            emit_report(&report, format, path)?;
            println!(
                "wrote {} records to {} (best angle {:.6}π)",
                report.records.len(),
                path.display(),
                report.best_angle_pi
            );
        }
        None => print_batch_summary(&report),
    }
    Ok(())
}

fn print_batch_summary(report: &BatchReport) {
    println!("family          {}", report.problem.family);
    println!("n               {}", report.problem.n);
    println!("starts          {}", report.records.len());
    println!("failures        {}", report.failures.len());
    println!("best angle      {:.6}π ({:.9} rad)", report.best_angle_pi, report.best_angle);
    println!("iterations      {} / {:.2} / {}", report.it_min, report.it_avg, report.it_max);
    println!(
        "cpu seconds     {:.3e} / {:.3e} / {:.3e}",
        report.cpu_min, report.cpu_avg, report.cpu_max
    );
    println!("angle histogram (center, count, share):");
    for c in &report.histogram {
        println!("  {:.4}π  {:6}  {:5.1}%", c.center_pi, c.count, 100.0 * c.share);
    }
}

fn membership_label(cone: &LiscCone) -> &'static str {
    let polyhedral = cone.algebra().kind() == AlgebraKind::RealVector
        && matches!(cone.map(), LinearMap::Dense(_) | LinearMap::Identity { .. });
    if polyhedral {
        "nnls"
    } else {
        "unchecked"
    }
}

fn run_verify(
    problem: &ProblemArgs,
    pair_path: &std::path::Path,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let spec = problem.resolve()?;
    let pair = spec.build_pair()?;
    let file: PairFile = serde_json::from_str(&std::fs::read_to_string(pair_path)?)?;

    let output = match (&file.x, &file.y) {
        (Some(x), Some(y)) => {
            let x = AlgebraElement::new(pair.p().algebra(), DVector::from_vec(x.clone()))?;
            let y = AlgebraElement::new(pair.q().algebra(), DVector::from_vec(y.clone()))?;
            let value = phi(&x, &y, &pair)?;
            let stat = stationarity_residual(&x, &y, &pair)?;
            let gx = pair.p().apply(&x)?;
            let hy = pair.q().apply(&y)?;
            let u = &gx / gx.norm();
            let v = &hy / hy.norm();
            let criticality = criticality_residual(&u, &v, &pair, Some((&x, &y)))?;
            VerifyOutput {
                phi: Some(value),
                angle_pi: Some(value.clamp(-1.0, 1.0).acos() / PI),
                stationarity: Some(stat),
                criticality,
                membership: "preimage".into(),
            }
        }
        _ => {
            let (u, v) = match (&file.u, &file.v) {
                (Some(u), Some(v)) => {
                    (DVector::from_vec(u.clone()), DVector::from_vec(v.clone()))
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "pair file needs either x and y, or u and v".into(),
                    ))
                }
            };
            let criticality = criticality_residual(&u, &v, &pair, None)?;
            let cos = u.dot(&v);
            let membership =
                format!("{}/{}", membership_label(pair.p()), membership_label(pair.q()));
            VerifyOutput {
                phi: Some(cos),
                angle_pi: Some(cos.clamp(-1.0, 1.0).acos() / PI),
                stationarity: None,
                criticality,
                membership,
            }
        }
    };
    let json = serde_json::to_string_pretty(&output)?;
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

struct Preset {
    family: Family,
    dims: Vec<usize>,
    starts: usize,
    histogram: bool,
}

fn preset_by_name(name: &str) -> Result<Preset> {
    match name {
        "table1" => Ok(Preset {
            family: Family::SchurVsOrthant,
            dims: vec![5, 20, 50, 100],
            starts: 1000,
            histogram: false,
        }),
        "table3" => Ok(Preset {
            family: Family::SchurVsOrthant,
            dims: vec![5],
            starts: 1000,
            histogram: true,
        }),
        "table5" => Ok(Preset {
            family: Family::SdpVsNonneg,
            dims: vec![4, 5, 6, 7, 8, 9, 10],
            starts: 1000,
            histogram: false,
        }),
        other => Err(Error::InvalidArgument(format!(
            "unknown preset '{other}' (expected table1, table3 or table5)"
        ))),
    }
}

fn run_reproduce(
    name: &str,
    config_args: &ConfigArgs,
    n: Option<usize>,
    starts: Option<usize>,
    seed: Option<u64>,
    format: &str,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let preset = preset_by_name(name)?;
    let dims = match n {
        Some(n) => vec![n],
        None => preset.dims.clone(),
    };
    let starts = starts.unwrap_or(preset.starts);
    let seed = seed.unwrap_or(0);
    let config = config_args.apply(preset.family.preset());

    println!(
        "{:<6} {:>12} {:>7} {:>9} {:>7} {:>10} {:>10} {:>10}",
        "n", "best_angle", "it_b", "it_a", "it_w", "cpu_b", "cpu_a", "cpu_w"
    );
    for dim in dims {
        let mut spec = ProblemSpec::schur_vs_orthant(dim, seed);
        spec.family = preset.family;
        let report = run_batch(&spec, &config, starts)?;
        println!(
            "{:<6} {:>9.4} π {:>7} {:>9.2} {:>7} {:>10.2e} {:>10.2e} {:>10.2e}",
            dim,
            report.best_angle_pi,
            report.it_min,
            report.it_avg,
            report.it_max,
            report.cpu_min,
            report.cpu_avg,
            report.cpu_max
        );
        if preset.histogram {
            println!("angle distribution ({} starts):", report.records.len());
            for c in &report.histogram {
                println!("  {:.4}π  {:6}  {:5.1}%", c.center_pi, c.count, 100.0 * c.share);
            }
        }
        if let Some(prefix) = out {
            let format: ReportFormat = format.parse()?;
            let ext = match format {
                ReportFormat::Csv => "csv",
                ReportFormat::Json => "json",
            };
            let path = PathBuf::from(format!("{}_n{}.{}", prefix.display(), dim, ext));
            emit_report(&report, format, &path)?;
        }
    }
    Ok(())
}
