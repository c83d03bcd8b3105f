//! Command-line front end.
//!
//! Exit codes: 0 success, 2 verification failure, 3 bad input or domain,
//! 4 numerical failure (blow-up or step limit).

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::architectures::{verify_embedding, ArchError, NodeArchitecture, DEFAULT_VERIFY_TOL};
use crate::constructions::{construct, ConstructionError};
use crate::funcspec::{Domain, FuncSpec, Grid, Interval, DEFAULT_INSET};
use crate::io::{fmt_f64, to_json};
use crate::julia::{iterative_logarithm, jabotinsky_flow, julia_series_residual, monomial_series_solution, PowerSeries, RFunction};
use crate::morse::{diagnose, morseify, DiagnosisReport, Verdict};
use crate::odecore::{integrate, time_t_map, IntegratorConfig, OdeError, Status, VectorField};
use crate::suspension::{MappingTorus, SuspensionError, TorusPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Default samples per dimension when `--grid` is absent.
const DEFAULT_COUNT_1D: usize = 64;
const DEFAULT_COUNT_ND: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "nodembed", version, about = "Construct, verify and diagnose exact neural-ODE embeddings of maps")]
pub struct RunConfig {
    /// Relative tolerance of the integrator.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the integrator.
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    /// Sample grid: `lo:hi:n[,lo:hi:n...]` per dimension, or a count `n` on the input domain.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print the result each output relies on.
    #[arg(long, global = true)]
    pub cite: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an explicit embedding and write its architecture JSON.
    #[command(allow_negative_numbers = true)]
    Embed(EmbedArgs),
    /// Compare an architecture's time-T map with a target on a grid.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Look for obstructions to embedding a map.
    #[command(allow_negative_numbers = true)]
    Diagnose(DiagnoseArgs),
    /// Power-series solutions of Julia's equation.
    #[command(allow_negative_numbers = true)]
    Series(SeriesArgs),
    /// Time-t flow of a field by integration and, in 1-D, in closed form.
    #[command(allow_negative_numbers = true)]
    Flow(FlowArgs),
    /// Suspension flow on a mapping torus.
    #[command(allow_negative_numbers = true)]
    Suspend(SuspendArgs),
    /// Integrate a field and write the accepted steps.
    #[command(allow_negative_numbers = true)]
    Trajectory(TrajectoryArgs),
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// linear, monomial, moebius, negation, polynomial or universal.
    pub id: String,
    /// Parameter `c` of the target map.
    #[arg(long)]
    pub c: Option<f64>,
    /// Exponent of `monomial`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Polynomial coefficients `a1,a2,...`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,
    /// Map to embed (FuncSpec JSON), for `universal`.
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub arch: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub phi: PathBuf,
    /// Also diagnose `Φ + a·x` with `a` drawn from `[−bound, bound]ⁿ`.
    #[arg(long)]
    pub perturb: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Near-identity series `{"N": .., "coeffs": [..]}`.
    #[arg(long, conflicts_with = "monomial")]
    pub phi: Option<PathBuf>,
    /// Run the elimination for `c·x^alpha` instead.
    #[arg(long)]
    pub monomial: bool,
    /// Coefficient of the monomial `c x^alpha`.
    #[arg(long)]
    pub c: Option<f64>,
    /// Integer exponent of the monomial.
    #[arg(long)]
    pub alpha: Option<u32>,
    #[arg(long = "N")]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long)]
    pub t: f64,
}

#[derive(Debug, Args)]
pub struct SuspendArgs {
    #[arg(long)]
    pub torus: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    /// Starting fiber time.
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Flow time.
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    #[arg(long = "T")]
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(msg: impl Display) -> Self {
        CliError { code: EXIT_INPUT, message: msg.to_string() }
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        CliError { code, message: e.to_string() }
    }
}

impl From<ArchError> for CliError {
    fn from(e: ArchError) -> Self {
        match e {
            ArchError::Ode(o) => o.into(),
            other => CliError::input(other),
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Arch(a) => a.into(),
            other => CliError::input(other),
        }
    }
}

impl From<SuspensionError> for CliError {
    fn from(e: SuspensionError) -> Self {
        let code = if matches!(e, SuspensionError::WindingLimit(_)) { EXIT_NUMERICAL } else { EXIT_INPUT };
        CliError { code, message: e.to_string() }
    }
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cfg, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

/// Run a parsed command; `Ok` carries the exit code of a completed run.
pub fn execute(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut ctx = Ctx { cfg, out };
    match &cfg.command {
        Command::Embed(a) => cmd_embed(&mut ctx, a),
        Command::Verify(a) => cmd_verify(&mut ctx, a),
        Command::Diagnose(a) => cmd_diagnose(&mut ctx, a),
        Command::Series(a) => cmd_series(&mut ctx, a),
        Command::Flow(a) => cmd_flow(&mut ctx, a),
        Command::Suspend(a) => cmd_suspend(&mut ctx, a),
        Command::Trajectory(a) => cmd_trajectory(&mut ctx, a),
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn say(&mut self, line: impl Display) {
        let _ = writeln!(self.out, "{line}");
    }

    fn cite(&mut self, text: &str) {
        if self.cfg.cite {
            self.say(format_args!("cite: {text}"));
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.cfg.out).map_err(|e| CliError::input(format!("{}: {e}", self.cfg.out.display())))?;
        let path = self.cfg.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        self.say(format_args!("wrote {}", path.display()));
        Ok(path)
    }

    fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let base = IntegratorConfig::default();
        let c = base.with_tolerances(self.cfg.rtol.unwrap_or(base.rtol), self.cfg.atol.unwrap_or(base.atol));
        c.validate()?;
        Ok(c)
    }

    fn overrides_tolerances(&self) -> bool {
        self.cfg.rtol.is_some() || self.cfg.atol.is_some()
    }

    fn grid(&self, domain: &Domain) -> Result<Grid, CliError> {
        parse_grid(self.cfg.grid.as_deref(), domain)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Grid from a `--grid` flag over `domain`.
///
/// Explicit intervals are closed except where an endpoint coincides with an
/// open endpoint of `domain`.
pub fn parse_grid(flag: Option<&str>, domain: &Domain) -> Result<Grid, CliError> {
    let n = domain.dim();
    let default = if n == 1 { DEFAULT_COUNT_1D } else { DEFAULT_COUNT_ND };
    let bad = |e: &dyn Display| CliError::input(format!("grid: {e}"));
    let Some(spec) = flag.filter(|s| s.contains(':')) else {
        let count = match flag {
            Some(s) => s.trim().parse::<usize>().map_err(|e| bad(&e))?,
            None => default,
        };
        if domain.0.iter().any(|iv| !iv.is_bounded()) {
            return Err(CliError::input("the input domain is unbounded; pass --grid lo:hi:n per dimension"));
        }
        return Grid::new(domain.clone(), vec![count; n], DEFAULT_INSET).map_err(|e| bad(&e));
    };
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != n {
        return Err(bad(&format!("{} intervals given for a {n}-dimensional domain", parts.len())));
    }
    let mut intervals = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    for (part, iv) in parts.iter().zip(&domain.0) {
        let f: Vec<&str> = part.split(':').collect();
        let [lo, hi, count] = f[..] else {
            return Err(bad(&format!("`{part}` is not lo:hi:n")));
        };
        let lo: f64 = lo.trim().parse().map_err(|e| bad(&e))?;
        let hi: f64 = hi.trim().parse().map_err(|e| bad(&e))?;
        let count: usize = count.trim().parse().map_err(|e| bad(&e))?;
        if lo < iv.lo || hi > iv.hi {
            return Err(bad(&format!("[{lo}, {hi}] leaves the domain ({}, {})", iv.lo, iv.hi)));
        }
        intervals.push(Interval {
            lo,
            hi,
            lo_open: iv.lo_open && lo == iv.lo,
            hi_open: iv.hi_open && hi == iv.hi,
            positive: iv.positive,
        });
        counts.push(count);
    }
    Grid::new(Domain(intervals), counts, DEFAULT_INSET).map_err(|e| bad(&e))
}

fn cmd_embed(ctx: &mut Ctx, a: &EmbedArgs) -> Result<i32, CliError> {
    let phi: Option<FuncSpec> = a.phi.as_deref().map(read_json).transpose()?;
    let con = construct(&a.id, a.c, a.alpha, a.coeffs.as_deref(), phi.as_ref(), a.horizon)?;
    let mut arch = con.arch.clone();
    if ctx.overrides_tolerances() {
        arch = arch.with_config(ctx.integrator()?);
    }
    ctx.say(format_args!("{}: {}", con.id(), con.citation()));
    ctx.write(&format!("{}.json", con.id()), &to_json(&arch))?;
    ctx.write(&format!("{}.target.json", con.id()), &to_json(&con.target))?;
    Ok(EXIT_OK)
}

fn cmd_verify(ctx: &mut Ctx, a: &VerifyArgs) -> Result<i32, CliError> {
    let mut arch: NodeArchitecture = read_json(&a.arch)?;
    let target: FuncSpec = read_json(&a.target)?;
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(CliError::input(format!("tolerance {} must be positive", a.tol)));
    }
    if ctx.overrides_tolerances() {
        let base = *arch.config();
        let c = base.with_tolerances(ctx.cfg.rtol.unwrap_or(base.rtol), ctx.cfg.atol.unwrap_or(base.atol));
        c.validate()?;
        arch = arch.with_config(c);
    }
    let grid = ctx.grid(arch.input_domain())?;
    let report = verify_embedding(&arch, &target, &grid, a.tol)?;
    ctx.cite("the architecture's time-T map is compared with the target in the max norm at every grid point");
    ctx.write("report.json", &to_json(&report))?;
    ctx.write("table.csv", &report.table_csv())?;
    ctx.say(format_args!(
        "max_err = {} at {:?} ({} points, {} failed): {}",
        report.max_err,
        report.argmax,
        grid.len(),
        report.failures.len(),
        if report.pass { "PASS" } else { "FAIL" }
    ));
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::NonEmbeddable => "NON-EMBEDDABLE",
        Verdict::NoObstructionFound => "NO-OBSTRUCTION-FOUND",
    }
}

#[derive(Serialize)]
struct Perturbation {
    bound: f64,
    seed: u64,
    a: Vec<f64>,
    attempts: usize,
    perturbed: FuncSpec,
    diagnosis: DiagnosisReport,
}

#[derive(Serialize)]
struct DiagnoseOutput {
    #[serde(flatten)]
    report: DiagnosisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    perturbation: Option<Perturbation>,
}

fn print_verdicts(ctx: &mut Ctx, prefix: &str, r: &DiagnosisReport) {
    for (name, v) in [("node1", r.verdicts.node1), ("node2", r.verdicts.node2), ("node3", r.verdicts.node3)] {
        ctx.say(format_args!("{prefix}{name}: {}", verdict_str(v)));
    }
    for w in &r.witnesses {
        ctx.say(format_args!("{prefix}witness: {w}"));
    }
    if let Some(rec) = &r.recommendation {
        ctx.say(format_args!("{prefix}recommendation: {rec}"));
    }
}

fn cmd_diagnose(ctx: &mut Ctx, a: &DiagnoseArgs) -> Result<i32, CliError> {
    let phi: FuncSpec = read_json(&a.phi)?;
    let grid = ctx.grid(phi.domain())?;
    let report = diagnose(&phi, &grid).map_err(CliError::input)?;
    print_verdicts(ctx, "", &report);
    let perturbation = match a.perturb {
        None => None,
        Some(bound) => {
            if phi.n_out() != 1 {
                return Err(CliError::input("--perturb needs a scalar map"));
            }
            let m = morseify(&phi, bound, ctx.cfg.seed, &grid).map_err(CliError::input)?;
            let diagnosis = diagnose(&m.perturbed, &grid).map_err(CliError::input)?;
            ctx.say(format_args!("perturbed by a = {:?} after {} attempt(s)", m.a, m.attempts));
            print_verdicts(ctx, "perturbed ", &diagnosis);
            Some(Perturbation { bound, seed: ctx.cfg.seed, a: m.a, attempts: m.attempts, perturbed: m.perturbed, diagnosis })
        }
    };
    ctx.cite(
        "a component that is topological Morse with a topologically critical point rules out basic, \
         augmented and two-layer neural ODEs; a 1-D time-T map is strictly increasing and fixes the side \
         of every fixed point",
    );
    ctx.write("diagnosis.json", &to_json(&DiagnoseOutput { report, perturbation }))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SeriesOutput<T: Serialize> {
    kind: &'static str,
    #[serde(flatten)]
    series: PowerSeries,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_max: Option<f64>,
    trace: Vec<T>,
}

fn cmd_series(ctx: &mut Ctx, a: &SeriesArgs) -> Result<i32, CliError> {
    let json = if a.monomial {
        let c = a.c.ok_or_else(|| CliError::input("--monomial needs --c"))?;
        let alpha = a.alpha.ok_or_else(|| CliError::input("--monomial needs --alpha"))?;
        let cert = monomial_series_solution(c, alpha, a.order).map_err(CliError::input)?;
        ctx.cite("no nontrivial formal power series solves Julia's equation for c x^alpha with integer alpha >= 2");
        ctx.say(format_args!("all {} coefficients vanish: {}", a.order + 1, cert.series.is_zero()));
        to_json(&SeriesOutput { kind: "monomial-certificate", series: cert.series, m: None, residual_max: None, trace: cert.trace })
    } else {
        let path = a.phi.as_deref().ok_or_else(|| CliError::input("series needs --phi or --monomial"))?;
        let phi: PowerSeries = read_json(path)?;
        let il = iterative_logarithm(&phi, a.order).map_err(CliError::input)?;
        let work = a.order + il.m - 1;
        let residual = julia_series_residual(&phi.truncate(work), &il.series.truncate(work), work).map_err(CliError::input)?;
        ctx.cite("iterative logarithm: Phi' f = f o Phi matched order by order for Phi = x + b_m x^m + ...");
        for (i, v) in il.series.coeffs().iter().enumerate() {
            ctx.say(format_args!("c{i} = {v}"));
        }
        to_json(&SeriesOutput {
            kind: "iterative-logarithm",
            series: il.series,
            m: Some(il.m),
            residual_max: Some(residual.max_abs()),
            trace: il.trace,
        })
    };
    ctx.write("series.json", &json)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FlowOutput {
    x: Vec<f64>,
    t: f64,
    integrated: Vec<f64>,
    jabotinsky: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jabotinsky_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    difference: Option<f64>,
}

fn cmd_flow(ctx: &mut Ctx, a: &FlowArgs) -> Result<i32, CliError> {
    let spec: FuncSpec = read_json(&a.field)?;
    let field = VectorField::new(spec)?;
    let cfg = ctx.integrator()?;
    let integrated = time_t_map(&field, &a.x, a.t, &cfg)?;
    let (mut jabotinsky, mut jabotinsky_error) = (None, None);
    if field.dim() == 1 && field.is_autonomous() {
        match RFunction::new(field.spec()).and_then(|rf| jabotinsky_flow(&rf, a.x[0], a.t)) {
            Ok(v) => jabotinsky = Some(v),
            Err(e) => jabotinsky_error = Some(e.to_string()),
        }
    } else {
        jabotinsky_error = Some("closed form only for autonomous 1-D fields".into());
    }
    let difference = jabotinsky.map(|j| (j - integrated[0]).abs());
    ctx.cite("1-D flows are h(x, t) = r^-1(r(x) + t) with r' = 1/f");
    ctx.say(format_args!("integrated: {:?}", integrated));
    match (jabotinsky, &jabotinsky_error) {
        (Some(j), _) => ctx.say(format_args!("jabotinsky: {j}")),
        (None, Some(e)) => ctx.say(format_args!("jabotinsky: unavailable ({e})")),
        (None, None) => {}
    }
    let out = FlowOutput { x: a.x.clone(), t: a.t, integrated, jabotinsky, jabotinsky_error, difference };
    ctx.write("flow.json", &to_json(&out))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SuspendOutput {
    start: TorusPoint,
    s: f64,
    end: TorusPoint,
}

fn cmd_suspend(ctx: &mut Ctx, a: &SuspendArgs) -> Result<i32, CliError> {
    let torus: MappingTorus = read_json(&a.torus)?;
    if a.x.len() != torus.dim() {
        return Err(CliError::input(format!("x has {} entries, the torus fiber has {}", a.x.len(), torus.dim())));
    }
    let start = torus.canonicalize(&a.x, a.r)?;
    let end = torus.suspension_flow(&start, a.s)?;
    let csv = torus.trajectory_csv(&start, a.s, a.samples)?;
    ctx.cite("suspension flow on the mapping torus (Phi(x), 0) ~ (x, T); its time-T return map is Phi");
    ctx.say(format_args!("end: x = {:?}, r = {}, k = {}", end.x, end.r, end.k));
    ctx.write("suspension.json", &to_json(&SuspendOutput { start, s: a.s, end }))?;
    ctx.write("suspension.csv", &csv)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct TrajectoryOutput {
    #[serde(flatten)]
    status: Status,
    steps: usize,
    final_time: f64,
    final_state: Vec<f64>,
}

fn cmd_trajectory(ctx: &mut Ctx, a: &TrajectoryArgs) -> Result<i32, CliError> {
    let spec: FuncSpec = read_json(&a.field)?;
    let field = VectorField::new(spec)?;
    let traj = integrate(&field, &a.x, a.horizon, &ctx.integrator()?)?;
    ctx.cite("h' = f(h, t) integrated by adaptive Dormand-Prince 5(4)");
    let code = match traj.status {
        Status::Completed => {
            ctx.say(format_args!("status: completed, h(T) = {:?}", traj.final_state()));
            EXIT_OK
        }
        Status::BlewUp { t_star } => {
            ctx.say(format_args!("status: blew-up at t* = {}", fmt_f64(t_star)));
            EXIT_NUMERICAL
        }
        Status::StepLimit { t } => {
            ctx.say(format_args!("status: step-limit at t = {}", fmt_f64(t)));
            EXIT_NUMERICAL
        }
    };
    let summary = TrajectoryOutput {
        status: traj.status,
        steps: traj.len(),
        final_time: traj.final_time(),
        final_state: traj.final_state().to_vec(),
    };
    ctx.write("trajectory.json", &to_json(&summary))?;
    ctx.write("trajectory.csv", &traj.to_csv())?;
    Ok(code)
}
