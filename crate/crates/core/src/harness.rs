//! Experiment driver: problem-spec ingestion, seeded random initialization,
//! multi-start batches with deterministic per-start seed streams, aggregation
//! and report emission (CSV or JSON).

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{
    make_ellipsoidal, make_nonneg_sym, make_orthant, make_polyhedral, make_schur,
    make_sdp_identity, ConePair, LiscCone,
};
use crate::eja::{Algebra, AlgebraElement, AlgebraKind};
use crate::error::{Error, Result};
use crate::solver::{solve, SolverConfig, Termination};

/// Angles closer than this (radians) fall into the same histogram cluster.
pub const ANGLE_CLUSTER_TOL: f64 = 5e-4 * PI;

/// Problem families with bundled construction and sampling rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Two polyhedral cones from explicit generator matrices.
    Polyhedral,
    /// Nonnegative orthant vs the Schur cone in `ℝⁿ`.
    SchurVsOrthant,
    /// Two ellipsoidal cones; matrices supplied or randomly generated.
    EllipsoidalPair,
    /// Positive semidefinite cone vs entrywise-nonnegative symmetric matrices.
    SdpVsNonneg,
    /// Arbitrary cone on each side.
    Custom,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polyhedral" => Ok(Family::Polyhedral),
            "schur_vs_orthant" => Ok(Family::SchurVsOrthant),
            "ellipsoidal_pair" => Ok(Family::EllipsoidalPair),
            "sdp_vs_nonneg" => Ok(Family::SdpVsNonneg),
            "custom" => Ok(Family::Custom),
            other => Err(Error::Parse(format!("unknown family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Polyhedral => "polyhedral",
            Family::SchurVsOrthant => "schur_vs_orthant",
            Family::EllipsoidalPair => "ellipsoidal_pair",
            Family::SdpVsNonneg => "sdp_vs_nonneg",
            Family::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl Family {
    /// The solver parameter preset tuned for this family.
    pub fn preset(&self) -> SolverConfig {
        match self {
            Family::Polyhedral | Family::SchurVsOrthant | Family::Custom => {
                SolverConfig::polyhedral()
            }
            Family::EllipsoidalPair => SolverConfig::ellipsoidal(),
            Family::SdpVsNonneg => SolverConfig::sdp_nonneg(),
        }
    }
}

/// A dense matrix, inline (row-major) or in an external text file whose
/// first line is `rows cols`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Inline { rows: usize, cols: usize, data: Vec<f64> },
    Path { path: String },
}

impl MatrixSpec {
    pub fn load(&self, base_dir: Option<&Path>) -> Result<DMatrix<f64>> {
        match self {
            MatrixSpec::Inline { rows, cols, data } => {
                if data.len() != rows * cols {
                    return Err(Error::Parse(format!(
                        "inline matrix declares {rows}×{cols} but carries {} entries",
                        data.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(*rows, *cols, data))
            }
            MatrixSpec::Path { path } => {
                let mut full = PathBuf::from(path);
                if full.is_relative() {
                    if let Some(base) = base_dir {
                        full = base.join(&full);
                    }
                }
                read_matrix_text(&full)
            }
        }
    }
}

/// Reads a plain-text matrix: a `rows cols` header line followed by
/// whitespace-separated entries in row-major order.
pub fn read_matrix_text(path: &Path) -> Result<DMatrix<f64>> {
    let content = std::fs::read_to_string(path)?;
    let mut tokens = content.split_whitespace();
    let rows: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("matrix file is empty".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad row count: {e}")))?;
    let cols: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("matrix file is missing the column count".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad column count: {e}")))?;
    let mut data = Vec::with_capacity(rows * cols);
    for tok in tokens {
        data.push(
            tok.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad matrix entry '{tok}': {e}")))?,
        );
    }
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "matrix file declares {rows}×{cols} but carries {} entries",
            data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// One side of a custom problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeSpec {
    Orthant { n: usize },
    Schur { n: usize },
    Polyhedral { generators: MatrixSpec },
    Lorentz { n: usize },
    Ellipsoidal { n: usize, a: MatrixSpec },
    Sdp { n: usize },
    NonnegSym { n: usize },
}

impl ConeSpec {
    fn build(&self, base_dir: Option<&Path>) -> Result<LiscCone> {
        match self {
            ConeSpec::Orthant { n } => make_orthant(*n),
            ConeSpec::Schur { n } => make_schur(*n),
            ConeSpec::Polyhedral { generators } => make_polyhedral(generators.load(base_dir)?),
            ConeSpec::Lorentz { n } => {
                if *n < 2 {
                    return Err(Error::InvalidArgument("lorentz cone needs n >= 2".into()));
                }
                make_ellipsoidal(&DMatrix::identity(n - 1, n - 1), *n)
            }
            ConeSpec::Ellipsoidal { n, a } => make_ellipsoidal(&a.load(base_dir)?, *n),
            ConeSpec::Sdp { n } => make_sdp_identity(*n),
            ConeSpec::NonnegSym { n } => make_nonneg_sym(*n),
        }
    }
}

fn default_density() -> f64 {
    0.5
}

/// Declarative description of a cone-pair instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    /// Ambient dimension (matrix order for `sdp_vs_nonneg`). Inferred from
    /// generator data when omitted for the `polyhedral` family.
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Sparsity of randomly generated ellipsoid matrices.
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators_p: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators_q: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_a: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_b: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<ConeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<ConeSpec>,
    /// Directory against which relative matrix paths resolve; set when the
    /// spec is loaded from a file.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ProblemSpec {
    pub fn schur_vs_orthant(n: usize, seed: u64) -> Self {
        Self {
            family: Family::SchurVsOrthant,
            n,
            seed,
            density: default_density(),
            generators_p: None,
            generators_q: None,
            matrix_a: None,
            matrix_b: None,
            p: None,
            q: None,
            base_dir: None,
        }
    }

    pub fn ellipsoidal_pair(n: usize, density: f64, seed: u64) -> Self {
        Self { family: Family::EllipsoidalPair, n, density, ..Self::schur_vs_orthant(n, seed) }
    }

    pub fn sdp_vs_nonneg(n: usize, seed: u64) -> Self {
        Self { family: Family::SdpVsNonneg, ..Self::schur_vs_orthant(n, seed) }
    }

    pub fn custom(p: ConeSpec, q: ConeSpec, seed: u64) -> Self {
        Self {
            family: Family::Custom,
            p: Some(p),
            q: Some(q),
            ..Self::schur_vs_orthant(0, seed)
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut spec: ProblemSpec = serde_json::from_str(&content)?;
        spec.base_dir = path.parent().map(|p| p.to_path_buf());
        Ok(spec)
    }

    /// RNG stream used for instance data (random ellipsoid matrices); start
    /// streams are offset by one so instance and start randomness never mix.
    fn instance_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0);
        rng
    }

    /// Per-start RNG stream. [`run_batch`] draws the initial point of start
    /// `i` from this stream, which makes batches reproducible run by run.
    pub fn start_rng(&self, start_index: usize) -> impl Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1 + start_index as u64);
        rng
    }

    /// Builds the cone pair this spec describes.
    pub fn build_pair(&self) -> Result<ConePair> {
        let base = self.base_dir.as_deref();
        match self.family {
            Family::Polyhedral => {
                let gp = self
                    .generators_p
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("polyhedral family needs generators_p".into()))?
                    .load(base)?;
                let gq = self
                    .generators_q
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("polyhedral family needs generators_q".into()))?
                    .load(base)?;
                ConePair::new(make_polyhedral(gp)?, make_polyhedral(gq)?)
            }
            Family::SchurVsOrthant => {
                self.require_n()?;
                ConePair::new(make_orthant(self.n)?, make_schur(self.n)?)
            }
            Family::EllipsoidalPair => {
                self.require_n()?;
                if self.n < 2 {
                    return Err(Error::InvalidArgument("ellipsoidal pair needs n >= 2".into()));
                }
                let mut rng = self.instance_rng();
                let a = match &self.matrix_a {
                    Some(m) => m.load(base)?,
                    None => random_spd(self.n - 1, self.density, self.n as f64, &mut rng)?,
                };
                let b = match &self.matrix_b {
                    Some(m) => m.load(base)?,
                    None => random_spd(self.n - 1, self.density, self.n as f64, &mut rng)?,
                };
                ConePair::new(make_ellipsoidal(&a, self.n)?, make_ellipsoidal(&b, self.n)?)
            }
            Family::SdpVsNonneg => {
                self.require_n()?;
                ConePair::new(make_sdp_identity(self.n)?, make_nonneg_sym(self.n)?)
            }
            Family::Custom => {
                let p = self
                    .p
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("custom family needs a 'p' cone".into()))?
                    .build(base)?;
                let q = self
                    .q
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("custom family needs a 'q' cone".into()))?
                    .build(base)?;
                ConePair::new(p, q)
            }
        }
    }

    fn require_n(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument(format!(
                "family {} needs an explicit dimension n",
                self.family
            )));
        }
        Ok(())
    }
}

/// Uniform point on the unit simplex of `ℝᵐ` (normalized exponentials).
pub fn simplex_uniform(m: usize, rng: &mut impl Rng) -> DVector<f64> {
    let raw: Vec<f64> = (0..m).map(|_| -(rng.random::<f64>().max(1e-300)).ln()).collect();
    let total: f64 = raw.iter().sum();
    DVector::from_iterator(m, raw.into_iter().map(|v| v / total))
}

/// Uniform point in the closed unit ball of `ℝᵈ` (normalized Gaussian
/// direction scaled by `U^{1/d}`).
pub fn ball_uniform(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    let mut g = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
    let norm = g.norm();
    if norm < 1e-300 {
        g[0] = 1.0;
    }
    let radius = rng.random::<f64>().powf(1.0 / d as f64);
    let scale = radius / g.norm();
    g * scale
}

fn sample_side(algebra: Algebra, rng: &mut impl Rng) -> AlgebraElement {
    match algebra.kind() {
        AlgebraKind::RealVector => {
            AlgebraElement::new(algebra, simplex_uniform(algebra.dim(), rng)).expect("simplex point")
        }
        AlgebraKind::SpinFactor => {
            let n = algebra.ambient();
            let xi = ball_uniform(n - 1, rng);
            let mut coords = DVector::zeros(n);
            coords.rows_mut(0, n - 1).copy_from(&xi);
            coords[n - 1] = 1.0;
            AlgebraElement::new(algebra, coords).expect("ball point")
        }
        AlgebraKind::SymMatrix => {
            let n = algebra.ambient();
            let diag = simplex_uniform(n, rng);
            let m = DMatrix::from_diagonal(&diag);
            AlgebraElement::from_matrix(&m).expect("diagonal point")
        }
    }
}

/// Draws a feasible starting pair: simplex-uniform for coordinate vectors,
/// uniform-ball tails with unit last coordinate for spin elements, and
/// diagonal matrices with simplex-uniform diagonals for matrix elements.
pub fn sample_initial(pair: &ConePair, rng: &mut impl Rng) -> (AlgebraElement, AlgebraElement) {
    let x0 = sample_side(pair.p().algebra(), rng);
    let y0 = sample_side(pair.q().algebra(), rng);
    (x0, y0)
}

/// Random symmetric positive definite matrix `C + shift·I`, where `C` has
/// standard-normal entries at the given density. Regenerates on the (rare)
/// failure of positive definiteness, erroring after a bounded number of
/// retries.
pub fn random_spd(
    order: usize,
    density: f64,
    shift: f64,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    if order == 0 {
        return Err(Error::InvalidArgument("matrix order must be positive".into()));
    }
    for _ in 0..16 {
        let mut c = DMatrix::zeros(order, order);
        for i in 0..order {
            for j in 0..=i {
                if rng.random::<f64>() < density {
                    let v: f64 = StandardNormal.sample(rng);
                    c[(i, j)] = v;
                    c[(j, i)] = v;
                }
            }
        }
        let a = c + DMatrix::identity(order, order) * shift;
        let min = a
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            return Ok(a);
        }
    }
    Err(Error::Numerical(
        "failed to generate a positive definite matrix within the retry budget".into(),
    ))
}

/// Outcome of one start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub start_index: usize,
    pub seed: u64,
    /// Angle in radians.
    pub angle: f64,
    /// Angle as a multiple of π.
    pub angle_pi: f64,
    pub cos_angle: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    pub residual_total: f64,
}

/// One histogram cluster of converged angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleCluster {
    /// Cluster center in radians (mean of members).
    pub center: f64,
    pub center_pi: f64,
    pub count: usize,
    pub share: f64,
}

/// Aggregated results of a multi-start batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub problem: ProblemSpec,
    pub config: SolverConfig,
    pub records: Vec<RunRecord>,
    /// Start indices that failed, with their error messages.
    pub failures: Vec<(usize, String)>,
    pub best_angle: f64,
    pub best_angle_pi: f64,
    pub it_min: usize,
    pub it_avg: f64,
    pub it_max: usize,
    pub cpu_min: f64,
    pub cpu_avg: f64,
    pub cpu_max: f64,
    pub histogram: Vec<AngleCluster>,
}

/// Runs `starts` independent solves with per-start seed streams derived from
/// the problem seed. Results are deterministic for fixed spec, config and
/// start count, independent of thread count.
pub fn run_batch(spec: &ProblemSpec, config: &SolverConfig, starts: usize) -> Result<BatchReport> {
    if starts == 0 {
        return Err(Error::InvalidArgument("starts must be at least 1".into()));
    }
    config.validate()?;
    let pair = spec.build_pair()?;

    let outcomes: Vec<(usize, std::result::Result<RunRecord, String>)> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = spec.start_rng(i);
            let (x0, y0) = sample_initial(&pair, &mut rng);
            let started = Instant::now();
            let outcome = solve(&pair, config, &x0, &y0)
                .map(|res| {
                    let wall = started.elapsed().as_secs_f64();
                    RunRecord {
                        start_index: i,
                        seed: spec.seed,
                        angle: res.angle,
                        angle_pi: res.angle / PI,
                        cos_angle: res.cos_angle,
                        iterations: res.iterations,
                        wall_seconds: wall,
                        termination: res.termination,
                        residual_total: res.stationarity.total,
                    }
                })
                .map_err(|e| e.to_string());
            (i, outcome)
        })
        .collect();

    let mut records = Vec::with_capacity(starts);
    let mut failures = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(msg) => failures.push((i, msg)),
        }
    }
    if records.is_empty() {
        return Err(Error::Numerical(format!(
            "all {starts} starts failed; first failure: {}",
            failures.first().map(|(_, m)| m.as_str()).unwrap_or("unknown")
        )));
    }

    let best_angle = records.iter().map(|r| r.angle).fold(f64::NEG_INFINITY, f64::max);
    let it_min = records.iter().map(|r| r.iterations).min().unwrap();
    let it_max = records.iter().map(|r| r.iterations).max().unwrap();
    let it_avg = records.iter().map(|r| r.iterations as f64).sum::<f64>() / records.len() as f64;
    let cpu_min = records.iter().map(|r| r.wall_seconds).fold(f64::INFINITY, f64::min);
    let cpu_max = records.iter().map(|r| r.wall_seconds).fold(f64::NEG_INFINITY, f64::max);
    let cpu_avg = records.iter().map(|r| r.wall_seconds).sum::<f64>() / records.len() as f64;
    let histogram = cluster_angles(&records);

    Ok(BatchReport {
        problem: spec.clone(),
        config: config.clone(),
        records,
        failures,
        best_angle,
        best_angle_pi: best_angle / PI,
        it_min,
        it_avg,
        it_max,
        cpu_min,
        cpu_avg,
        cpu_max,
        histogram,
    })
}

/// Groups record angles into clusters no wider than the clustering
/// tolerance; centers are member means, shares are fractions of all records.
fn cluster_angles(records: &[RunRecord]) -> Vec<AngleCluster> {
    let mut angles: Vec<f64> = records.iter().map(|r| r.angle).collect();
    angles.sort_by(f64::total_cmp);
    let total = angles.len();
    let mut clusters = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for &a in &angles {
        if let Some(&first) = members.first() {
            if a - first > ANGLE_CLUSTER_TOL {
                clusters.push(finish_cluster(&members, total));
                members.clear();
            }
        }
        members.push(a);
    }
    if !members.is_empty() {
        clusters.push(finish_cluster(&members, total));
    }
    clusters
}

fn finish_cluster(members: &[f64], total: usize) -> AngleCluster {
    let center = members.iter().sum::<f64>() / members.len() as f64;
    AngleCluster {
        center,
        center_pi: center / PI,
        count: members.len(),
        share: members.len() as f64 / total as f64,
    }
}

/// Output format for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

/// Renders the CSV form: one row per record, then a `#`-prefixed footer with
/// the aggregates and the angle histogram.
pub fn report_to_csv(report: &BatchReport) -> String {
    let mut out = String::new();
    out.push_str("start,seed,angle_pi,cos_angle,iters,wall_s,termination,residual\n");
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{:.6},{:.16e},{},{:.16e},{},{:.16e}\n",
            r.start_index,
            r.seed,
            r.angle_pi,
            r.cos_angle,
            r.iterations,
            r.wall_seconds,
            r.termination,
            r.residual_total
        ));
    }
    out.push_str("# aggregates\n");
    out.push_str(&format!("# best_angle_pi,{:.6}\n", report.best_angle_pi));
    out.push_str(&format!("# it_min,{}\n# it_avg,{:.2}\n# it_max,{}\n", report.it_min, report.it_avg, report.it_max));
    out.push_str(&format!(
        "# cpu_min,{:.6e}\n# cpu_avg,{:.6e}\n# cpu_max,{:.6e}\n",
        report.cpu_min, report.cpu_avg, report.cpu_max
    ));
    out.push_str(&format!("# failures,{}\n", report.failures.len()));
    out.push_str("# histogram_center_pi,count,share\n");
    for c in &report.histogram {
        out.push_str(&format!("# {:.4},{},{:.4}\n", c.center_pi, c.count, c.share));
    }
    out
}

/// Writes the report to `path` in the requested format. JSON mirrors the
/// full report and round-trips all floating-point fields exactly.
pub fn emit_report(report: &BatchReport, format: ReportFormat, path: &Path) -> Result<()> {
    let content = match format {
        ReportFormat::Csv => report_to_csv(report),
        ReportFormat::Json => serde_json::to_string_pretty(report)?,
    };
    std::fs::write(path, content)?;
    Ok(())
}
