//! Batch front end: one subcommand per capability, a JSON run config in, a JSON
//! report plus CSV data out.
//!
//! Exit status: 0 on success, 2 when the computation finished but a hypothesis or
//! verdict fails (an infeasible certificate, say), 1 on any error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certificate::{compute_certificate, feasibility_search, gamma_lower_bound, Gamma, SearchBox, SearchOutcome};
use crate::embedding::{
    brezis_lieb_gap, combined_norm, compactness_probe, embedding_ratio_scan, lions_vanishing_probe, weighted_sobolev_norm,
    write_series_csv, FamilyKind, LionsLabel, Target, TestFamily,
};
use crate::error::{Error, Result};
use crate::model::{
    validate_hypotheses, DoublePhaseModel, ModelConfig, Nonlinearity, NonlinearityConfig, SamplingSpec,
};
use crate::nfunction::{luxemburg_norm, modular, Grid, NFunctionHandle, SampledField};
use crate::record::{sha256_hex, Provenance, Record};
use crate::sobolev::{companion_check, CompanionFunction, CompanionGrid, SobolevConjugateHandle};
use crate::solver::{find_mountain_pass_solution, find_negative_solution, Outcome, RadialGrid, RadialProblem, SolverOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "dphase", version, about = "Double phase N-function toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (all cores when absent).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Check the structural hypotheses of the model and nonlinearity.
    Validate,
    /// Modulars and Luxemburg norms of a field.
    Norm,
    /// Convex conjugate, double conjugate and Young gaps.
    Conjugate,
    /// `N`, `N⁻¹` and `H*` tables.
    Sobolev,
    /// Companion-function checks against `H*`.
    Companion,
    /// Certificate constants at one `(η, r)`.
    Certify,
    /// Feasibility search over `(η, r)`.
    Search,
    /// Embedding, Lions, compactness and Brezis–Lieb probes.
    Probe,
    /// Radial critical points of the energy.
    Solve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// Radial shells on `[0, r_max]`; the dimension comes from the model.
    Radial { r_max: f64, n: usize },
    Box { lo: Vec<f64>, hi: Vec<f64>, h: f64 },
}

impl GridSpec {
    pub fn build(&self, d: usize) -> Result<Arc<Grid>> {
        match self {
            GridSpec::Radial { r_max, n } => {
                if !(*r_max > 0.0) || *n == 0 {
                    return Err(Error::InvalidInput("radial grid needs r_max > 0 and n ≥ 1".into()));
                }
                Ok(Arc::new(Grid::radial(d, *r_max, *n)))
            }
            GridSpec::Box { lo, hi, h } => {
                if lo.len() != d {
                    return Err(Error::DimensionMismatch { grid: lo.len(), model: d });
                }
                Ok(Arc::new(Grid::box_grid(lo, hi, *h)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// A field CSV (`x0.., weight, value[, gradient]`), relative to the config file.
    Csv { path: PathBuf },
    Constant { grid: GridSpec, value: f64 },
    /// Member `n` of a test family.
    Family { grid: GridSpec, family: FamilyKind, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsSpec {
    /// Evaluation points in x; the origin when empty.
    #[serde(default)]
    pub x: Vec<Vec<f64>>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    /// Lower bound from the largest embedding ratio over a family.
    Estimate { grid: GridSpec, family: FamilyKind, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSpec {
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub radius: f64,
    #[serde(default = "default_one")]
    pub eta: f64,
    #[serde(default = "default_one")]
    pub r: f64,
    pub gamma: GammaSpec,
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum ProbeSpec {
    Embedding { grid: GridSpec, family: FamilyKind, #[serde(flatten)] target: Target, count: usize },
    Lions { grid: GridSpec, family: FamilyKind, companion: CompanionFunction, r: f64, count: usize },
    Compactness { grid: GridSpec, family: FamilyKind, count: usize },
    /// Gap between member `1` and members `2..=count`.
    BrezisLieb { grid: GridSpec, family: FamilyKind, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSpec {
    pub lambda: f64,
    pub r_max: f64,
    pub n: usize,
    /// Seed cone `ũ` (height η, radius R).
    #[serde(default = "default_one")]
    pub eta: f64,
    pub radius: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_true")]
    pub mountain_pass: bool,
}

fn default_true() -> bool {
    true
}

/// The JSON run configuration. Each command reads the sections it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub version: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(default)]
    pub sampling: Option<SamplingSpec>,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub points: Option<PointsSpec>,
    #[serde(default)]
    pub companion: Option<CompanionFunction>,
    #[serde(default)]
    pub companion_grid: Option<CompanionGrid>,
    #[serde(default)]
    pub certificate: Option<CertificateSpec>,
    #[serde(default)]
    pub search: Option<SearchBox>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub solve: Option<SolveSpec>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<PathBuf>,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub report: Value,
    pub records: Vec<Record>,
    pub files: Vec<PathBuf>,
    pub verdict_failure: bool,
    /// Printed to stdout after the run.
    pub summary: String,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    base_dir: PathBuf,
    out: PathBuf,
    digest: String,
}

impl Ctx<'_> {
    fn section<'b, T>(&self, v: &'b Option<T>, name: &str) -> Result<&'b T> {
        v.as_ref().ok_or_else(|| Error::InvalidInput(format!("config has no `{name}` section")))
    }

    fn model(&self) -> Result<DoublePhaseModel> {
        DoublePhaseModel::from_config(&self.cfg.model)
    }

    fn nl(&self) -> Result<Nonlinearity> {
        Nonlinearity::from_config(self.section(&self.cfg.nonlinearity, "nonlinearity")?)
    }

    fn record(&self, op: &str, value: f64, tol: f64, provenance: Provenance) -> Record {
        Record { op: op.into(), inputs_digest: self.digest.clone(), value, tol, provenance }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if !out.summary.is_empty() {
                print!("{}", out.summary);
            }
            if out.verdict_failure {
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command line and writes `report.json` and `manifest.json` into the output directory.
pub fn execute(cli: &Cli) -> Result<CommandOutput> {
    let started = now();
    let path = cli.config.as_ref().ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let bytes = fs::read(path)?;
    let cfg: RunConfig = serde_json::from_slice(&bytes)?;
    if cfg.version != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!("config schema version {} is not supported (expected {SCHEMA_VERSION})", cfg.version)));
    }
    fs::create_dir_all(&cli.out)?;
    let ctx = Ctx {
        cfg: &cfg,
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        out: cli.out.clone(),
        digest: sha256_hex(&bytes),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut out = pool.install(|| dispatch(cli.command, &ctx, cli.seed))?;
    let report_path = ctx.path("report.json");
    let command = serde_json::to_value(cli.command)?.as_str().unwrap_or_default().to_string();
    let report = json!({
        "command": command,
        "config_digest": ctx.digest,
        "verdict_failure": out.verdict_failure,
        "records": out.records,
        "report": out.report,
    });
    fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")?;
    out.files.insert(0, report_path);
    let manifest = RunManifest {
        command,
        config_digest: ctx.digest.clone(),
        seed: cli.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: now(),
        outputs: out.files.clone(),
    };
    fs::write(ctx.path("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(out)
}

fn dispatch(command: Command, ctx: &Ctx, seed: u64) -> Result<CommandOutput> {
    match command {
        Command::Validate => validate(ctx, seed),
        Command::Norm => norm(ctx),
        Command::Conjugate => conjugate(ctx),
        Command::Sobolev => sobolev(ctx),
        Command::Companion => companion(ctx),
        Command::Certify => certify(ctx),
        Command::Search => search(ctx),
        Command::Probe => probe(ctx),
        Command::Solve => solve(ctx),
    }
}

fn validate(ctx: &Ctx, seed: u64) -> Result<CommandOutput> {
    let model = DoublePhaseModel::from_config_unchecked(&ctx.cfg.model)?;
    let nl = ctx.cfg.nonlinearity.as_ref().map(Nonlinearity::from_config).transpose()?;
    let mut spec = ctx.cfg.sampling.unwrap_or_default();
    if seed != 0 {
        spec.seed = seed;
    }
    let report = validate_hypotheses(&model, nl.as_ref(), &spec);
    let mut summary = String::new();
    for c in &report.checks {
        let v = serde_json::to_value(&c.verdict)?;
        summary.push_str(&format!("{:<10}{}\n", c.id, v["verdict"].as_str().unwrap_or("?")));
    }
    Ok(CommandOutput { verdict_failure: report.any_failure(), report: serde_json::to_value(&report)?, summary, ..Default::default() })
}

fn load_field(ctx: &Ctx, d: usize) -> Result<SampledField> {
    match ctx.section(&ctx.cfg.field, "field")? {
        FieldSpec::Csv { path } => {
            let p = if path.is_absolute() { path.clone() } else { ctx.base_dir.join(path) };
            SampledField::read_csv(&p)
        }
        FieldSpec::Constant { grid, value } => Ok(SampledField::constant(grid.build(d)?, *value)),
        FieldSpec::Family { grid, family, n } => {
            if *n == 0 {
                return Err(Error::InvalidInput("family members count from 1".into()));
            }
            Ok(TestFamily::new(*family, grid.build(d)?).member(*n))
        }
    }
}

const NORM_TOL: f64 = 1e-10;

fn norm(ctx: &Ctx) -> Result<CommandOutput> {
    let h = NFunctionHandle::new(ctx.model()?);
    let u = load_field(ctx, h.d())?;
    let mut records = vec![
        ctx.record("modular_h", modular(&h, &u, false)?, NORM_TOL, Provenance::Computed),
        ctx.record("modular_hv", modular(&h, &u, true)?, NORM_TOL, Provenance::Computed),
        ctx.record("luxemburg_h", luxemburg_norm(&h, &u, false)?, NORM_TOL, Provenance::Computed),
        ctx.record("luxemburg_hv", luxemburg_norm(&h, &u, true)?, NORM_TOL, Provenance::Computed),
    ];
    if u.gradient.is_some() {
        records.push(ctx.record("weighted_sobolev_norm", weighted_sobolev_norm(&h, &u)?, NORM_TOL, Provenance::Computed));
        records.push(ctx.record("combined_norm", combined_norm(&h, &u)?, NORM_TOL, Provenance::Computed));
    }
    let summary = records.iter().map(|r| format!("{:<24}{:.12e}\n", r.op, r.value)).collect();
    Ok(CommandOutput { report: json!({ "nodes": u.len() }), records, summary, ..Default::default() })
}

fn points(ctx: &Ctx, d: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let p = ctx.section(&ctx.cfg.points, "points")?;
    let xs = if p.x.is_empty() { vec![vec![0.0; d]] } else { p.x.clone() };
    if let Some(x) = xs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch { grid: x.len(), model: d });
    }
    if p.t.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidInput("t values must be nonnegative".into()));
    }
    Ok((xs, p.t.clone()))
}

fn conjugate(ctx: &Ctx) -> Result<CommandOutput> {
    let h = NFunctionHandle::new(ctx.model()?);
    let (xs, ts) = points(ctx, h.d())?;
    let path = ctx.path("conjugate.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["point", "t", "H", "H_tilde", "argmax", "H_double_conjugate", "young_gap_at_h"])?;
    let mut worst_gap: f64 = 0.0;
    let mut worst_dc: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        for &t in &ts {
            let big = h.big_h(x, t)?;
            let c = h.conjugate(x, t)?;
            let dc = h.double_conjugate(x, t)?;
            let gap = h.young_gap(x, t, h.h(x, t))?;
            worst_gap = worst_gap.max(gap.abs());
            if big > 0.0 {
                worst_dc = worst_dc.max((dc - big).abs() / big);
            }
            w.write_record([i.to_string(), t.to_string(), big.to_string(), c.value.to_string(), c.tau.to_string(), dc.to_string(), gap.to_string()])?;
        }
    }
    w.flush()?;
    let records = vec![
        ctx.record("max_double_conjugate_rel_error", worst_dc, 1e-6, Provenance::Computed),
        ctx.record("max_young_gap_at_h", worst_gap, 1e-8, Provenance::Computed),
    ];
    let summary = format!("{} rows, double conjugate error {worst_dc:.3e}, Young gap at h {worst_gap:.3e}\n", xs.len() * ts.len());
    Ok(CommandOutput { report: json!({ "points": xs.len(), "t": ts.len() }), records, files: vec![path], summary, ..Default::default() })
}

fn sobolev(ctx: &Ctx) -> Result<CommandOutput> {
    let s = SobolevConjugateHandle::new(NFunctionHandle::new(ctx.model()?));
    let (xs, ts) = points(ctx, s.base.d())?;
    let mut files = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let path = ctx.path(&format!("sobolev_{i}.csv"));
        s.write_table_csv(x, &ts, &path)?;
        files.push(path);
    }
    let (lo, hi) = s.star_exponents();
    let records = vec![
        ctx.record("p_star_minus", lo, 0.0, Provenance::Computed),
        ctx.record("q_star_plus", hi, 0.0, Provenance::Computed),
    ];
    let summary = format!("p*- = {lo}, q*+ = {hi}; {} table(s)\n", files.len());
    Ok(CommandOutput { report: json!({ "asymptotics": s.asymptotics(), "n_tol": s.tol }), records, files, summary, ..Default::default() })
}

fn companion(ctx: &Ctx) -> Result<CommandOutput> {
    let s = SobolevConjugateHandle::new(NFunctionHandle::new(ctx.model()?));
    let comp = ctx.section(&ctx.cfg.companion, "companion")?;
    let grid = ctx.cfg.companion_grid.clone().unwrap_or_default();
    let report = companion_check(&s, comp, &grid)?;
    let fail = report.checks.iter().chain(&report.aux_checks).any(|c| c.verdict.is_failure());
    let mut summary = String::new();
    for c in report.checks.iter().chain(&report.aux_checks) {
        let v = serde_json::to_value(&c.verdict)?;
        summary.push_str(&format!("{:<12}{}\n", c.id, v["verdict"].as_str().unwrap_or("?")));
    }
    Ok(CommandOutput { report: serde_json::to_value(&report)?, verdict_failure: fail, summary, ..Default::default() })
}

fn gamma(spec: &GammaSpec, model: &DoublePhaseModel, nl: &Nonlinearity) -> Result<Gamma> {
    match spec {
        GammaSpec::Value(v) => Ok(Gamma::user(*v)),
        GammaSpec::Estimate { grid, family, count } => {
            let fam = TestFamily::new(*family, grid.build(model.d)?);
            gamma_lower_bound(&NFunctionHandle::new(model.clone()), nl, &fam.members(*count))
        }
    }
}

fn certificate_inputs<'a>(ctx: &Ctx<'a>) -> Result<(DoublePhaseModel, Nonlinearity, Vec<f64>, Gamma, &'a CertificateSpec)> {
    let model = ctx.model()?;
    let nl = ctx.nl()?;
    let spec = ctx.section(&ctx.cfg.certificate, "certificate")?;
    let x0 = spec.x0.clone().unwrap_or_else(|| vec![0.0; model.d]);
    let g = gamma(&spec.gamma, &model, &nl)?;
    Ok((model, nl, x0, g, spec))
}

fn certify(ctx: &Ctx) -> Result<CommandOutput> {
    let (model, nl, x0, g, spec) = certificate_inputs(ctx)?;
    let c = compute_certificate(&model, &nl, &x0, spec.radius, spec.eta, spec.r, g)?;
    let exact = |op: &str, v: f64| ctx.record(op, v, 1e-12, Provenance::Computed);
    let records = vec![
        exact("omega_r", c.omega_r),
        ctx.record("v_inf", c.v_inf, 1e-10, Provenance::Estimated),
        exact("delta", c.delta),
        exact("alpha_r", c.alpha_r),
        exact("beta_eta", c.beta_eta),
        ctx.record("gamma", c.gamma.value, 0.0, c.gamma.provenance),
    ];
    let path = ctx.path("certificate.json");
    fs::write(&path, serde_json::to_string_pretty(&c)? + "\n")?;
    Ok(CommandOutput { verdict_failure: !c.admissible, summary: c.table(), report: serde_json::to_value(&c)?, records, files: vec![path] })
}

fn search(ctx: &Ctx) -> Result<CommandOutput> {
    let (model, nl, x0, g, spec) = certificate_inputs(ctx)?;
    let bx = ctx.cfg.search.unwrap_or_default();
    let outcome = feasibility_search(&model, &nl, &x0, spec.radius, g, &bx)?;
    let (fail, summary) = match &outcome {
        SearchOutcome::Feasible { best } => (false, format!("feasible\n{}", best.table())),
        SearchOutcome::Infeasible { least_violated, min_gap } => {
            (true, format!("infeasible (min gap {min_gap:?})\n{}", least_violated.table()))
        }
    };
    Ok(CommandOutput { report: serde_json::to_value(&outcome)?, verdict_failure: fail, summary, ..Default::default() })
}

fn probe(ctx: &Ctx) -> Result<CommandOutput> {
    let model = ctx.model()?;
    let d = model.d;
    let handle = NFunctionHandle::new(model);
    match ctx.section(&ctx.cfg.probe, "probe")? {
        ProbeSpec::Embedding { grid, family, target, count } => {
            let s = SobolevConjugateHandle::new(handle);
            let fam = TestFamily::new(*family, grid.build(d)?);
            let scan = embedding_ratio_scan(&s, target, &fam, *count)?;
            let path = ctx.path("embedding.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["n", "ratio"])?;
            for (i, r) in scan.ratios.iter().enumerate() {
                w.write_record([(i + 1).to_string(), r.map_or(String::new(), |v| v.to_string())])?;
            }
            w.flush()?;
            let summary = format!("max ratio {:.6e} at n = {}\n", scan.max_ratio, scan.argmax);
            let records = vec![ctx.record("max_ratio", scan.max_ratio, NORM_TOL, Provenance::Estimated)];
            Ok(CommandOutput { verdict_failure: scan.trend.is_failure(), report: serde_json::to_value(&scan)?, records, files: vec![path], summary })
        }
        ProbeSpec::Lions { grid, family, companion, r, count } => {
            let s = SobolevConjugateHandle::new(handle);
            let fam = TestFamily::new(*family, grid.build(d)?);
            let rep = lions_vanishing_probe(&s, &fam, companion, *r, *count)?;
            let path = ctx.path("lions.csv");
            write_series_csv(&rep.rows, &path)?;
            let summary = format!("{:?}\n", rep.label);
            Ok(CommandOutput {
                verdict_failure: rep.label == LionsLabel::LionsInconsistent,
                report: serde_json::to_value(&rep)?,
                files: vec![path],
                summary,
                ..Default::default()
            })
        }
        ProbeSpec::Compactness { grid, family, count } => {
            let fam = TestFamily::new(*family, grid.build(d)?);
            let rep = compactness_probe(&handle, &fam, *count)?;
            let path = ctx.path("compactness.csv");
            write_series_csv(&rep.rows, &path)?;
            let v = serde_json::to_value(&rep.verdict)?;
            let summary = format!("{}\n", v["verdict"].as_str().unwrap_or("?"));
            Ok(CommandOutput { verdict_failure: rep.verdict.is_failure(), report: serde_json::to_value(&rep)?, files: vec![path], summary, ..Default::default() })
        }
        ProbeSpec::BrezisLieb { grid, family, count } => {
            if *count < 2 {
                return Err(Error::InvalidInput("Brezis–Lieb probe needs at least two members".into()));
            }
            let fam = TestFamily::new(*family, grid.build(d)?);
            let members = fam.members(*count);
            let gaps = brezis_lieb_gap(&handle, &members[0], &members[1..])?;
            let path = ctx.path("brezis_lieb.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["n", "gap"])?;
            for (i, g) in gaps.iter().enumerate() {
                w.write_record([(i + 2).to_string(), g.to_string()])?;
            }
            w.flush()?;
            let summary = format!("last gap {:.3e}\n", gaps.last().copied().unwrap_or(0.0));
            Ok(CommandOutput { report: json!({ "gaps": gaps }), files: vec![path], summary, ..Default::default() })
        }
    }
}

fn solve(ctx: &Ctx) -> Result<CommandOutput> {
    let model = ctx.model()?;
    let nl = ctx.nl()?;
    let spec = ctx.section(&ctx.cfg.solve, "solve")?;
    let d = model.d;
    let p = RadialProblem::new(NFunctionHandle::new(model.clone()), nl.clone(), spec.lambda, RadialGrid::new(d, spec.r_max, spec.n))?;
    let cert = compute_certificate(&model, &nl, &vec![0.0; d], spec.radius, spec.eta, 1.0, Gamma::user(1.0))?;
    let low = find_negative_solution(&p, &cert, &spec.solver)?;
    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut summary = String::new();
    let mut write_state = |name: &str, o: &Outcome, files: &mut Vec<PathBuf>, records: &mut Vec<Record>| -> Result<()> {
        if let Some(s) = o.state() {
            let a = ctx.path(&format!("{name}_state.csv"));
            let b = ctx.path(&format!("{name}_trace.csv"));
            s.write_state_csv(&a)?;
            s.write_trace_csv(&b)?;
            files.extend([a, b]);
            records.push(ctx.record(&format!("{name}.energy"), s.energy, spec.solver.tol * (1.0 + s.energy.abs()), Provenance::Computed));
            records.push(ctx.record(&format!("{name}.weak_residual"), s.weak_residual, 0.0, Provenance::Computed));
            summary.push_str(&format!(
                "{name}: J = {:.10e}, grad_norm = {:.3e}, residual = {:.3e}, sup = {:.6}, morse = {}\n",
                s.energy, s.grad_norm, s.weak_residual, s.sup, s.morse_index
            ));
        } else {
            summary.push_str(&format!("{name}: {}\n", serde_json::to_string(o)?));
        }
        Ok(())
    };
    write_state("negative", &low, &mut files, &mut records)?;
    let pass = match (&low, spec.mountain_pass) {
        (Outcome::Converged { state }, true) => Some(find_mountain_pass_solution(&p, state, &spec.solver)?),
        _ => None,
    };
    if let Some(o) = &pass {
        write_state("mountain_pass", o, &mut files, &mut records)?;
    }
    let two = low.converged().is_some() && pass.as_ref().and_then(|o| o.converged()).is_some();
    let failure = low.converged().is_none() || (spec.mountain_pass && !two);
    let report = json!({ "negative": low, "mountain_pass": pass, "two_solutions": two });
    Ok(CommandOutput { report, records, files, verdict_failure: failure, summary })
}
