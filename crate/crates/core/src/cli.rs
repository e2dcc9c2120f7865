//! Batch front end behind the `fkdv` binary.
//!
//! Every command reads an optional JSON [`RunConfig`], writes its artifacts
//! into the output directory and maps failures onto the exit codes below.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classification::{
    classify_case, evaluate_point, find_critical_speed, scan, theorem_verdict, ScanRow,
};
use crate::error::Error;
use crate::evolution::{
    instability_experiment, EvolutionConfig, ExperimentVerdict, DRIFT_WARNING, NONLINEAR_CFL_LIMIT,
};
use crate::functionals::{identity_tolerance, ModelParams, Sigma, STATIONARY_TOL};
use crate::ground_state::{
    default_grid, single_power_params, solve_double_power, speed_adapted, GroundState, SolverConfig,
};
use crate::io::{fmt_f64, fmt_opt, line_plot, write_csv, write_json, write_numeric_csv, write_profile_csv, Axes, Series};
use crate::kernels::{
    algebraic_window, compute_g, compute_k_km, exponential_window, fit_exponential, fit_power_law,
    g1_origin_check, g1_origin_constant, kernel_mass, kernel_tail_constant, log_spaced, KernelMethod,
    TailFit, TailModel,
};
use crate::spectral::{derivative, Field, Grid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_BLOW_UP: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "fkdv", version, about = "Ground states, criterion scans, kernels and evolution for fractional KdV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plots: bool,
    /// Worker threads for parallel scans and quadrature.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(long, short, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Compute one ground state.
    Solve,
    /// Theorem verdict and criterion sign at a list of speeds.
    Classify,
    /// Bracket the speed where the criterion changes sign.
    CriticalSpeed,
    /// Criterion over a parameter matrix.
    Scan,
    /// Tail-decay fits of a ground state.
    Decay,
    /// Resolvent and commutator kernels.
    Kernel,
    /// Dilation-perturbed evolution of a ground state.
    Evolve,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Classify => "classify",
            Command::CriticalSpeed => "critical-speed",
            Command::Scan => "scan",
            Command::Decay => "decay",
            Command::Kernel => "kernel",
            Command::Evolve => "evolve",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub sigma: Sigma,
    pub p: u32,
    pub q: u32,
    pub a: i8,
    pub c: f64,
    /// Replaces `(a, 1)` as the coefficients of `(phi^p, phi^q)`.
    pub coeffs: Option<(f64, f64)>,
    /// Solve `D^sigma phi + c phi = phi^p` instead; `q` and `a` are ignored.
    pub single_power: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            sigma: Sigma::TWO,
            p: 2,
            q: 3,
            a: 1,
            c: 1.0,
            coeffs: None,
            single_power: false,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> crate::Result<ModelParams> {
        if self.single_power {
            return single_power_params(self.sigma, self.p, self.c);
        }
        let m = ModelParams::new(self.sigma, self.p, self.q, self.a, self.c)?;
        match self.coeffs {
            Some((a1, a2)) => m.with_coeffs(a1, a2),
            None => Ok(m),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_length: f64,
    pub n: usize,
    /// Shrink the box by `c^{1/sigma}` before solving.
    pub adapt_to_speed: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            half_length: 60.0,
            n: 2048,
            adapt_to_speed: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_iter: usize,
    pub tol_residual: f64,
    pub stab_exponent: Option<f64>,
    pub damping: f64,
    pub stall_window: usize,
    pub identity_tol: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            max_iter: d.max_iter,
            tol_residual: d.tol_residual,
            stab_exponent: d.stab_exponent,
            damping: d.damping,
            stall_window: d.stall_window,
            identity_tol: d.identity_tol,
        }
    }
}

impl SolverSection {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iter: self.max_iter,
            tol_residual: self.tol_residual,
            stab_exponent: self.stab_exponent,
            damping: self.damping,
            initial_guess: None,
            stall_window: self.stall_window,
            identity_tol: self.identity_tol,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    /// Dilation parameter: the run starts from `phi^{1 - mu}`.
    pub mu: f64,
    /// Tube radius as a fraction of `||phi||_{H^{sigma/2}}`.
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub sample_stride: usize,
    pub frame_speed: f64,
    pub virial_scale: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            mu: 0.0,
            epsilon: 0.1,
            dt: 0.005,
            t_end: 10.0,
            dealias: true,
            sample_stride: 20,
            frame_speed: 0.0,
            virial_scale: None,
            snapshot_times: Vec::new(),
        }
    }
}

impl EvolveSection {
    pub fn config(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            t_end: self.t_end,
            dealias: self.dealias,
            sample_stride: self.sample_stride,
            perturbation: None,
            frame_speed: self.frame_speed,
            tube_epsilon: self.epsilon,
            virial_scale: self.virial_scale,
            snapshot_times: self.snapshot_times.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub speeds: Vec<f64>,
}

impl Default for ClassifySection {
    fn default() -> Self {
        ClassifySection {
            speeds: vec![0.5, 1.0, 5.0],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalSection {
    pub hint: (f64, f64),
    /// The criterion is re-checked at this multiple of the upper end.
    pub check_factor: f64,
}

impl Default for CriticalSection {
    fn default() -> Self {
        CriticalSection {
            hint: (0.5, 2.0),
            check_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub sigma: Vec<Sigma>,
    pub pq: Vec<(u32, u32)>,
    pub a: Vec<i8>,
    pub c: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecaySource {
    /// Solve the model.
    GroundState,
    /// Sample `2 / (1 + x^2)` at `sigma = 1`.
    BenjaminOno,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRequest {
    /// The fit the decay theory predicts: exponential at `sigma = 2`, algebraic below.
    Auto,
    /// The predicted fit and the other one.
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySection {
    pub source: DecaySource,
    pub orders: Vec<u32>,
    pub fits: FitRequest,
    pub window: Option<(f64, f64)>,
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection {
            source: DecaySource::GroundState,
            orders: vec![0, 1],
            fits: FitRequest::Auto,
            window: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub sigma: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub k_km: Vec<(u32, u32)>,
    pub k_km_sigma: f64,
    pub origin: Vec<f64>,
    pub mass: bool,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            sigma: vec![1.0, 1.25, 1.5, 1.75, 2.0],
            lo: 1e-2,
            hi: 1e3,
            points: 61,
            k_km: vec![(1, 1), (2, 1), (2, 2)],
            k_km_sigma: 1.5,
            origin: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            mass: true,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: Option<GridSection>,
    pub solver: SolverSection,
    pub evolution: EvolveSection,
    pub classify: ClassifySection,
    pub critical_speed: CriticalSection,
    pub scan: ScanSection,
    pub decay: DecaySection,
    pub kernel: KernelSection,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::Config(format!("config: {e}")))
    }

    /// Checks every section the command reads before any computation.
    pub fn validate(&self, command: Command) -> Result<(), Failure> {
        let cfg = |e: Error| Failure::Config(e.to_string());
        let needs_model = !matches!(command, Command::Scan | Command::Kernel);
        if needs_model {
            let params = self.model.params().map_err(cfg)?;
            let solves = command != Command::Decay || self.decay.source == DecaySource::GroundState;
            if !self.model.single_power && solves {
                crate::ground_state::expected_sign(&params).map_err(cfg)?;
            }
            self.grid(self.model.sigma, self.model.c).map_err(cfg)?;
        }
        self.solver.config().validate().map_err(cfg)?;
        match command {
            Command::Evolve => {
                let ec = self.evolution.config();
                ec.validate().map_err(cfg)?;
                if !(self.evolution.mu.abs() <= 0.05) {
                    return Err(Failure::Config(format!(
                        "evolution.mu must satisfy |mu| <= 0.05, got {}",
                        self.evolution.mu
                    )));
                }
            }
            Command::Classify => {
                if self.classify.speeds.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
                    return Err(Failure::Config("classify.speeds must be positive".into()));
                }
            }
            Command::CriticalSpeed => {
                let (lo, hi) = self.critical_speed.hint;
                if !(lo > 0.0 && hi > lo) {
                    return Err(Failure::Config("critical_speed.hint must satisfy 0 < lo < hi".into()));
                }
                if !(self.critical_speed.check_factor >= 1.0) {
                    return Err(Failure::Config("critical_speed.check_factor must be at least 1".into()));
                }
            }
            Command::Scan => {
                if self.scan.c.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
                    return Err(Failure::Config("scan.c must be positive".into()));
                }
                if self.scan.a.iter().any(|&a| a != 1 && a != -1) {
                    return Err(Failure::Config("scan.a entries must be +1 or -1".into()));
                }
            }
            Command::Decay => {
                if self.decay.orders.iter().any(|&l| l > 1) {
                    return Err(Failure::Config("decay.orders must be 0 or 1".into()));
                }
                if self.decay.source == DecaySource::BenjaminOno && self.model.sigma != Sigma::ONE {
                    return Err(Failure::Config("the Benjamin-Ono source needs sigma = 1".into()));
                }
                if let Some((lo, hi)) = self.decay.window {
                    if !(lo > 0.0 && hi > lo) {
                        return Err(Failure::Config("decay.window must satisfy 0 < lo < hi".into()));
                    }
                }
            }
            Command::Kernel => {
                let k = &self.kernel;
                if !(k.lo > 0.0 && k.hi > k.lo && k.points >= 2) {
                    return Err(Failure::Config("kernel needs 0 < lo < hi and at least 2 points".into()));
                }
                if k.sigma.iter().chain([&k.k_km_sigma]).any(|s| !(1.0..=2.0).contains(s)) {
                    return Err(Failure::Config("kernel sigma values must lie in [1, 2]".into()));
                }
                if k.k_km.iter().any(|&(kk, m)| kk < 1 || m < 1 || m > kk) {
                    return Err(Failure::Config("kernel.k_km pairs need 1 <= m <= k".into()));
                }
                if k.origin.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                    return Err(Failure::Config("kernel.origin points must lie in (0, 1)".into()));
                }
            }
            Command::Solve => {}
        }
        Ok(())
    }

    /// Box for the model at speed `c`. Without a grid section the unit-speed
    /// default box is shrunk to the profile width.
    pub fn grid(&self, sigma: Sigma, c: f64) -> crate::Result<Grid> {
        match &self.grid {
            Some(g) => {
                let grid = Grid::new(g.half_length, g.n)?;
                if g.adapt_to_speed {
                    speed_adapted(&grid, sigma.value(), c)
                } else {
                    Ok(grid)
                }
            }
            None => speed_adapted(&default_grid(sigma), sigma.value(), c),
        }
    }

    /// Box for commands that adapt per speed themselves.
    fn unit_grid(&self, sigma: Sigma) -> crate::Result<Grid> {
        match &self.grid {
            Some(g) => Grid::new(g.half_length, g.n),
            None => Ok(default_grid(sigma)),
        }
    }
}

/// Why a command stopped; each kind has its own exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
    Verification(String),
    BlowUp(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::Verification(_) => EXIT_VERIFY,
            Failure::BlowUp(_) => EXIT_BLOW_UP,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Verification(m) | Failure::BlowUp(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        let mut inner = &e;
        while let Error::AtSpeed { source, .. } = inner {
            inner = source;
        }
        match inner {
            Error::NotStationary { .. }
            | Error::NotConverged { .. }
            | Error::Diverged { .. }
            | Error::SignChange { .. }
            | Error::IdentityViolation { .. }
            | Error::ModulationLost(_) => Failure::Solver(msg),
            Error::NoCrossing { .. } | Error::FitRejected(_) | Error::WindowTooDeep { .. } | Error::Quadrature { .. } => {
                Failure::Verification(msg)
            }
            _ => Failure::Config(msg),
        }
    }
}

#[derive(Serialize)]
struct Tolerances {
    stationary_residual: f64,
    identity: f64,
    solver_residual: f64,
    kernel_relative: f64,
    tail_exponent_relative: f64,
    exponential_fit_residual: f64,
    drift_warning: f64,
    nonlinear_cfl_limit: f64,
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    tolerances: Tolerances,
    result: T,
}

struct Context {
    config: RunConfig,
    command: Command,
    out: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest<T: Serialize>(&self, name: &str, result: T) -> Result<(), Failure> {
        let c = &self.config;
        let m = Manifest {
            command: self.command.name(),
            version: env!("CARGO_PKG_VERSION"),
            config: c,
            tolerances: Tolerances {
                stationary_residual: STATIONARY_TOL,
                identity: c.solver.identity_tol.unwrap_or_else(|| identity_tolerance(c.model.sigma)),
                solver_residual: c.solver.tol_residual,
                kernel_relative: 1e-6,
                tail_exponent_relative: 0.05,
                exponential_fit_residual: 0.02,
                drift_warning: DRIFT_WARNING,
                nonlinear_cfl_limit: NONLINEAR_CFL_LIMIT,
            },
            result,
        };
        write_json(&self.path(name), &m).map_err(io_failure)
    }

    fn plots(&self) -> bool {
        self.config.emit_plots
    }
}

fn io_failure(e: Error) -> Failure {
    Failure::Config(format!("writing artifacts: {e}"))
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_CONFIG;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.output {
        config.output_dir = out.clone();
    }
    if cli.plots {
        config.emit_plots = true;
    }
    if config.output_dir.as_os_str().is_empty() {
        config.output_dir = PathBuf::from("fkdv-output");
    }
    config.validate(cli.command)?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", config.output_dir.display())))?;
    let ctx = Context {
        out: config.output_dir.clone(),
        config,
        command: cli.command,
    };
    match cli.command {
        Command::Solve => cmd_solve(&ctx),
        Command::Classify => cmd_classify(&ctx),
        Command::CriticalSpeed => cmd_critical_speed(&ctx),
        Command::Scan => cmd_scan(&ctx),
        Command::Decay => cmd_decay(&ctx),
        Command::Kernel => cmd_kernel(&ctx),
        Command::Evolve => cmd_evolve(&ctx),
    }
}

fn solve_model(ctx: &Context) -> Result<GroundState, Failure> {
    let c = &ctx.config;
    let params = c.model.params()?;
    let grid = c.grid(c.model.sigma, c.model.c)?;
    Ok(solve_double_power(&params, &grid, &c.solver.config())?)
}

fn profile_plot(path: &Path, title: &str, u: &Field) -> Result<(), Failure> {
    let pts = u.grid().nodes().into_iter().zip(u.values().iter().copied()).collect();
    line_plot(path, title, &[Series { label: "profile", points: pts }], Axes::default()).map_err(io_failure)
}

#[derive(Serialize)]
struct SolveResult<'a> {
    converged: bool,
    iterations: usize,
    sign: f64,
    report: &'a crate::functionals::FunctionalReport,
    params: &'a ModelParams,
    half_length: f64,
    n: usize,
    energy_norm: f64,
    residual_history: &'a [f64],
}

fn cmd_solve(ctx: &Context) -> Result<(), Failure> {
    let gs = solve_model(ctx)?;
    write_profile_csv(&ctx.path("profile.csv"), &gs.profile).map_err(io_failure)?;
    let grid = gs.profile.grid();
    ctx.manifest(
        "solve.json",
        SolveResult {
            converged: gs.converged,
            iterations: gs.iterations,
            sign: gs.sign(),
            report: &gs.report,
            params: &gs.params,
            half_length: grid.half_length(),
            n: grid.len(),
            energy_norm: gs.energy_norm(),
            residual_history: &gs.residual_history,
        },
    )?;
    if ctx.plots() {
        profile_plot(&ctx.path("profile.svg"), "ground state", &gs.profile)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyRow {
    c: f64,
    criterion: f64,
    sign: i8,
    residual: f64,
    nehari: f64,
    pohozaev: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct ClassifyResult {
    case: String,
    verdict: String,
    rows: Vec<ClassifyRow>,
}

fn cmd_classify(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config;
    let m = &c.model;
    let verdict = theorem_verdict(m.sigma, m.p, m.q, m.a)?;
    let base = c.unit_grid(m.sigma)?;
    let solver = c.solver.config();
    let params = c.model.params()?;
    let mut rows = Vec::new();
    for &speed in &c.classify.speeds {
        let pt = evaluate_point(&params.with_speed(speed)?, &base, &solver, None)?;
        let rep = &pt.state.report;
        rows.push(ClassifyRow {
            c: speed,
            criterion: pt.criterion,
            sign: pt.sign(),
            residual: rep.residual,
            nehari: rep.nehari_relative(speed),
            pohozaev: rep.pohozaev_relative(m.sigma.value()),
            iterations: pt.state.iterations,
        });
    }
    write_csv(
        &ctx.path("classify.csv"),
        &["c", "criterion", "sign", "residual", "nehari", "pohozaev"],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.c),
                fmt_f64(r.criterion),
                r.sign.to_string(),
                fmt_f64(r.residual),
                fmt_f64(r.nehari),
                fmt_f64(r.pohozaev),
            ]
        }),
    )
    .map_err(io_failure)?;
    if ctx.plots() && !rows.is_empty() {
        let pts = rows.iter().map(|r| (r.c, r.criterion)).collect();
        line_plot(&ctx.path("classify.svg"), "scaling criterion", &[Series { label: "criterion", points: pts }], Axes {
            log_x: true,
            log_y: false,
        })
        .map_err(io_failure)?;
    }
    ctx.manifest(
        "classify.json",
        ClassifyResult {
            case: classify_case(m.p, m.q, m.a).to_string(),
            verdict: verdict.to_string(),
            rows,
        },
    )
}

#[derive(Serialize)]
struct CriticalResult {
    verdict: String,
    c_lo: f64,
    c_hi: f64,
    relative_width: f64,
    criterion_lo: f64,
    criterion_hi: f64,
    sign_change_verified: bool,
    check_speed: f64,
    criterion_at_check: f64,
    multiple_crossings: bool,
    evaluations: Vec<(f64, f64)>,
}

fn cmd_critical_speed(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config;
    let m = &c.model;
    let params = m.params()?;
    let base = c.unit_grid(m.sigma)?;
    let solver = c.solver.config();
    let bracket = find_critical_speed(&params, c.critical_speed.hint, &base, &solver)?;
    let check_speed = c.critical_speed.check_factor * bracket.c_hi;
    let check = evaluate_point(&params.with_speed(check_speed)?, &base, &solver, None)?;
    let verdict = theorem_verdict(m.sigma, m.p, m.q, m.a)?;
    let verified = bracket.criterion_lo >= 0.0 && bracket.criterion_hi < 0.0;
    let result = CriticalResult {
        verdict: verdict.to_string(),
        c_lo: bracket.c_lo,
        c_hi: bracket.c_hi,
        relative_width: bracket.relative_width(),
        criterion_lo: bracket.criterion_lo,
        criterion_hi: bracket.criterion_hi,
        sign_change_verified: verified,
        check_speed,
        criterion_at_check: check.criterion,
        multiple_crossings: bracket.multiple_crossings,
        evaluations: bracket.evaluations.clone(),
    };
    write_numeric_csv(
        &ctx.path("critical_speed.csv"),
        &["c", "criterion"],
        &bracket.evaluations.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>(),
    )
    .map_err(io_failure)?;
    if ctx.plots() {
        line_plot(
            &ctx.path("critical_speed.svg"),
            "criterion near the critical speed",
            &[Series { label: "criterion", points: bracket.evaluations.clone() }],
            Axes { log_x: true, log_y: false },
        )
        .map_err(io_failure)?;
    }
    let ok = verified && check.criterion < 0.0 && result.relative_width <= 1e-3;
    ctx.manifest("critical_speed.json", result)?;
    if !ok {
        return Err(Failure::Verification(
            "bracket is wider than 1e-3, lacks a verified sign change, or the criterion is not negative beyond it"
                .into(),
        ));
    }
    Ok(())
}

pub const SCAN_HEADER: [&str; 12] = [
    "sigma", "p", "q", "a", "c", "case", "verdict", "criterion", "residual", "nehari", "pohozaev", "status",
];

fn scan_record(r: &ScanRow) -> Vec<String> {
    vec![
        r.sigma.to_string(),
        r.p.to_string(),
        r.q.to_string(),
        r.a.to_string(),
        fmt_f64(r.c),
        r.case.to_string(),
        r.verdict.clone(),
        fmt_opt(r.criterion),
        fmt_opt(r.residual),
        fmt_opt(r.nehari),
        fmt_opt(r.pohozaev),
        r.status.clone(),
    ]
}

#[derive(Serialize)]
struct ScanResult<'a> {
    rows: usize,
    failures: usize,
    grid: Option<(f64, usize)>,
    per_row: &'a [ScanRow],
}

fn cmd_scan(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config;
    let s = &c.scan;
    let grid = match &c.grid {
        Some(g) => Some(Grid::new(g.half_length, g.n)?),
        None => None,
    };
    let rows = scan(&s.sigma, &s.pq, &s.a, &s.c, grid.as_ref(), &c.solver.config());
    write_csv(&ctx.path("scan.csv"), &SCAN_HEADER, rows.iter().map(scan_record)).map_err(io_failure)?;
    ctx.manifest(
        "scan.json",
        ScanResult {
            rows: rows.len(),
            failures: rows.iter().filter(|r| r.status != "ok").count(),
            grid: grid.map(|g| (g.half_length(), g.len())),
            per_row: &rows,
        },
    )
}

#[derive(Serialize)]
struct FitOutcome {
    l: u32,
    kind: &'static str,
    /// This is the fit the decay theory predicts.
    predicted: bool,
    accepted: bool,
    fit: Option<TailFit>,
    message: Option<String>,
}

fn algebraic_outcome(u: &Field, sigma: f64, l: u32, window: (f64, f64), model: TailModel, predicted: bool) -> FitOutcome {
    match fit_power_law(u, sigma, l, window, model) {
        Ok(fit) => {
            let accepted = fit.relative_error() <= 0.05;
            let message = (!accepted).then(|| format!("exponent {:.4} against {:.4}", fit.exponent, fit.expected));
            FitOutcome { l, kind: "algebraic", predicted, accepted, fit: Some(fit), message }
        }
        Err(e) => FitOutcome { l, kind: "algebraic", predicted, accepted: false, fit: None, message: Some(e.to_string()) },
    }
}

fn exponential_outcome(u: &Field, l: u32, window: (f64, f64), predicted: bool) -> FitOutcome {
    match fit_exponential(u, l, window) {
        Ok(fit) => {
            let accepted = fit.exponent < 0.0 && fit.residual <= 0.02;
            let message = (!accepted).then(|| format!("rate {:.4}, residual {:.3e}", fit.exponent, fit.residual));
            FitOutcome { l, kind: "exponential", predicted, accepted, fit: Some(fit), message }
        }
        Err(e) => FitOutcome { l, kind: "exponential", predicted, accepted: false, fit: None, message: Some(e.to_string()) },
    }
}

#[derive(Serialize)]
struct DecayResult {
    source: DecaySource,
    pass: bool,
    fits: Vec<FitOutcome>,
}

fn cmd_decay(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config;
    let sigma = c.model.sigma.value();
    let (profile, model) = match c.decay.source {
        DecaySource::GroundState => (solve_model(ctx)?.profile, TailModel::Periodic),
        DecaySource::BenjaminOno => {
            let grid = c.grid(c.model.sigma, 1.0)?;
            (Field::from_fn(&grid, |x| 2.0 / (1.0 + x * x)), TailModel::FreeSpace)
        }
    };
    let exponential = sigma >= 2.0;
    let mut fits = Vec::new();
    let mut samples = Vec::new();
    for &l in &c.decay.orders {
        let alg_window = c.decay.window.unwrap_or_else(|| algebraic_window(&profile));
        let exp_window = c.decay.window.unwrap_or_else(|| exponential_window(&profile));
        if exponential {
            fits.push(exponential_outcome(&profile, l, exp_window, true));
            if c.decay.fits == FitRequest::Both {
                fits.push(algebraic_outcome(&profile, sigma, l, alg_window, model, false));
            }
        } else {
            fits.push(algebraic_outcome(&profile, sigma, l, alg_window, model, true));
            if c.decay.fits == FitRequest::Both {
                fits.push(exponential_outcome(&profile, l, alg_window, false));
            }
        }
        let field = if l == 0 { profile.clone() } else { derivative(&profile) };
        let window = if exponential { exp_window } else { alg_window };
        let grid = profile.grid();
        for j in grid.len() / 2..grid.len() {
            let x = grid.node(j);
            if x >= window.0 && x <= window.1 {
                samples.push(vec![l as f64, x, field.values()[j].abs()]);
            }
        }
    }
    write_numeric_csv(&ctx.path("decay.csv"), &["l", "x", "magnitude"], &samples).map_err(io_failure)?;
    if ctx.plots() {
        let series: Vec<Series> = c
            .decay
            .orders
            .iter()
            .map(|&l| Series {
                label: if l == 0 { "|u|" } else { "|u'|" },
                points: samples.iter().filter(|r| r[0] == l as f64).map(|r| (r[1], r[2])).collect(),
            })
            .collect();
        let axes = Axes { log_x: !exponential, log_y: true };
        line_plot(&ctx.path("decay.svg"), "tail decay", &series, axes).map_err(io_failure)?;
    }
    let pass = fits.iter().filter(|f| f.predicted).all(|f| f.accepted);
    let failed: Vec<String> = fits
        .iter()
        .filter(|f| f.predicted && !f.accepted)
        .map(|f| format!("l = {} {} fit: {}", f.l, f.kind, f.message.clone().unwrap_or_default()))
        .collect();
    ctx.manifest("decay.json", DecayResult { source: c.decay.source, pass, fits })?;
    if !pass {
        return Err(Failure::Verification(failed.join("; ")));
    }
    Ok(())
}

#[derive(Serialize)]
struct KernelSigmaResult {
    sigma: f64,
    all_converged: bool,
    positive: bool,
    mass: Option<f64>,
    closed_form_error: Option<f64>,
    plateau: Option<TailFit>,
    plateau_message: Option<String>,
    pass: bool,
}

#[derive(Serialize)]
struct KkmResult {
    k: u32,
    m: u32,
    sigma: f64,
    /// Max of `x^{1+sigma} |K|` over the top decade and the decade below it.
    weighted_top: f64,
    weighted_below: f64,
    bounded: bool,
}

#[derive(Serialize)]
struct OriginResult {
    rows: Vec<crate::kernels::OriginRow>,
    constant: f64,
    within_bound: bool,
    monotone: bool,
}

#[derive(Serialize)]
struct KernelResult {
    pass: bool,
    kernels: Vec<KernelSigmaResult>,
    k_km: Vec<KkmResult>,
    origin: Option<OriginResult>,
}

fn cmd_kernel(ctx: &Context) -> Result<(), Failure> {
    let k = &ctx.config.kernel;
    let points = log_spaced(k.lo, k.hi, k.points);
    let mut rows = Vec::new();
    let mut per_sigma = Vec::new();
    let mut series = Vec::new();
    for &sigma in &k.sigma {
        let sample = compute_g(sigma, &points)?;
        for i in 0..points.len() {
            rows.push(vec![
                fmt_f64(sigma),
                fmt_f64(points[i]),
                fmt_f64(sample.values[i]),
                fmt_f64(sample.errors[i]),
                sample.converged[i].to_string(),
            ]);
        }
        let is_two = sigma == 2.0;
        // The exponential kernel underflows the quadrature noise floor far out.
        let trusted: Vec<usize> = (0..points.len()).filter(|&i| !is_two || points[i] <= 20.0).collect();
        let all_converged = trusted.iter().all(|&i| sample.converged[i]);
        let positive = trusted.iter().all(|&i| sample.values[i] > 0.0);
        let mass = if k.mass { Some(kernel_mass(sigma)?) } else { None };
        let closed_form_error = is_two.then(|| {
            trusted
                .iter()
                .map(|&i| (sample.values[i] / (0.5 * (-points[i]).exp()) - 1.0).abs())
                .fold(0.0, f64::max)
        });
        let (plateau, plateau_message) = match kernel_tail_constant(&sample) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let plateau_ok = if is_two {
            plateau.is_none()
        } else {
            plateau.as_ref().is_some_and(|f| f.residual <= 0.02)
        };
        let pass = all_converged
            && positive
            && mass.is_none_or(|m| (m - 1.0).abs() <= 1e-4)
            && closed_form_error.is_none_or(|e| e <= 1e-6)
            && plateau_ok;
        series.push((
            sigma,
            trusted
                .iter()
                .map(|&i| (points[i], sample.values[i]))
                .collect::<Vec<_>>(),
        ));
        per_sigma.push(KernelSigmaResult {
            sigma,
            all_converged,
            positive,
            mass,
            closed_form_error,
            plateau,
            plateau_message,
            pass,
        });
    }
    write_csv(&ctx.path("kernel_g.csv"), &["sigma", "x", "value", "error", "converged"], rows).map_err(io_failure)?;

    let mut kkm_rows = Vec::new();
    let mut kkm = Vec::new();
    for &(kk, m) in &k.k_km {
        let sample = compute_k_km(kk, m, k.k_km_sigma, &points, KernelMethod::OscillatoryQuadrature)?;
        let weighted: Vec<f64> = points
            .iter()
            .zip(&sample.values)
            .map(|(x, v)| x.powf(1.0 + k.k_km_sigma) * v.abs())
            .collect();
        for i in 0..points.len() {
            kkm_rows.push(vec![
                kk as f64,
                m as f64,
                k.k_km_sigma,
                points[i],
                sample.values[i],
                weighted[i],
            ]);
        }
        let top = k.hi / 10.0;
        let below = top / 10.0;
        let max_in = |a: f64, b: f64| {
            points
                .iter()
                .zip(&weighted)
                .filter(|(x, _)| **x >= a * (1.0 - 1e-12) && **x <= b * (1.0 + 1e-12))
                .fold(0.0_f64, |acc, (_, w)| acc.max(*w))
        };
        let weighted_top = max_in(top, k.hi);
        let weighted_below = max_in(below, top);
        kkm.push(KkmResult {
            k: kk,
            m,
            sigma: k.k_km_sigma,
            weighted_top,
            weighted_below,
            bounded: weighted_top.is_finite() && weighted_top <= 1.1 * weighted_below,
        });
    }
    write_numeric_csv(&ctx.path("kernel_kkm.csv"), &["k", "m", "sigma", "x", "value", "weighted"], &kkm_rows)
        .map_err(io_failure)?;

    let origin = if k.origin.is_empty() {
        None
    } else {
        let mut pts = k.origin.clone();
        pts.sort_by(|a, b| b.total_cmp(a));
        let table = g1_origin_check(&pts)?;
        write_numeric_csv(
            &ctx.path("origin.csv"),
            &["x", "g1", "ratio", "bound"],
            &table.iter().map(|r| vec![r.x, r.g1, r.ratio, r.bound]).collect::<Vec<_>>(),
        )
        .map_err(io_failure)?;
        let within_bound = table.iter().all(|r| r.converged && (r.ratio - 1.0).abs() <= r.bound);
        let monotone = table.windows(2).all(|w| (w[1].ratio - 1.0).abs() < (w[0].ratio - 1.0).abs());
        Some(OriginResult {
            rows: table,
            constant: g1_origin_constant(),
            within_bound,
            monotone,
        })
    };

    if ctx.plots() {
        let labels: Vec<String> = series.iter().map(|(s, _)| format!("sigma = {s}")).collect();
        let plotted: Vec<Series> = series
            .iter()
            .zip(&labels)
            .map(|((_, pts), l)| Series { label: l, points: pts.clone() })
            .collect();
        line_plot(&ctx.path("kernel.svg"), "resolvent kernel", &plotted, Axes { log_x: true, log_y: true })
            .map_err(io_failure)?;
    }
    let pass = per_sigma.iter().all(|r| r.pass)
        && kkm.iter().all(|r| r.bounded)
        && origin.as_ref().is_none_or(|o| o.within_bound && o.monotone);
    ctx.manifest(
        "kernel.json",
        KernelResult {
            pass,
            kernels: per_sigma,
            k_km: kkm,
            origin,
        },
    )?;
    if !pass {
        return Err(Failure::Verification("kernel checks failed; see kernel.json".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvolveResult<'a> {
    verdict: &'a ExperimentVerdict,
    mu: f64,
    epsilon: f64,
    ground_state_norm: f64,
    action_initial: f64,
    action_ground_state: f64,
    action_decreased: bool,
    virial_drift: f64,
    max_energy_drift: f64,
    max_mass_drift: f64,
    max_tube_distance: f64,
    modulation_lost_at: Option<f64>,
    /// Last finite sample time when the run blew up.
    blow_up: Option<f64>,
    nonlinear_cfl: f64,
    warnings: &'a [String],
}

fn cmd_evolve(ctx: &Context) -> Result<(), Failure> {
    let c = &ctx.config;
    let gs = solve_model(ctx)?;
    let ec = c.evolution.config();
    let ex = instability_experiment(&gs, c.evolution.mu, c.evolution.epsilon, &ec)?;
    let tr = &ex.trajectory;
    let rows: Vec<Vec<f64>> = (0..tr.times.len())
        .map(|i| {
            vec![
                tr.times[i],
                tr.energy_drift[i],
                tr.mass_drift[i],
                tr.shift[i],
                tr.tube_distance[i],
                tr.virial[i],
            ]
        })
        .collect();
    write_numeric_csv(
        &ctx.path("trajectory.csv"),
        &["t", "energy_drift", "mass_drift", "z", "tube_distance", "virial"],
        &rows,
    )
    .map_err(io_failure)?;
    if !tr.snapshots.is_empty() {
        let snaps: Vec<Vec<f64>> = tr
            .snapshots
            .iter()
            .flat_map(|(t, u)| {
                u.grid()
                    .nodes()
                    .into_iter()
                    .zip(u.values().to_vec())
                    .map(move |(x, v)| vec![*t, x, v])
            })
            .collect();
        write_numeric_csv(&ctx.path("snapshots.csv"), &["t", "x", "value"], &snaps).map_err(io_failure)?;
    }
    if ctx.plots() {
        let norm = gs.energy_norm();
        let pts = tr.times.iter().zip(&tr.tube_distance).map(|(&t, &d)| (t, d / norm)).collect();
        line_plot(&ctx.path("tube.svg"), "relative tube distance", &[Series { label: "distance", points: pts }], Axes {
            log_x: false,
            log_y: true,
        })
        .map_err(io_failure)?;
        if !tr.snapshots.is_empty() {
            let peak = gs.profile.max_abs();
            let labels: Vec<String> = tr.snapshots.iter().map(|(t, _)| format!("t = {t}")).collect();
            let series: Vec<Series> = tr
                .snapshots
                .iter()
                .enumerate()
                .zip(&labels)
                .map(|((i, (_, u)), l)| Series {
                    label: l,
                    points: u
                        .grid()
                        .nodes()
                        .into_iter()
                        .zip(u.values())
                        .map(|(x, v)| (x, v + 0.5 * peak * i as f64))
                        .collect(),
                })
                .collect();
            line_plot(&ctx.path("waterfall.svg"), "snapshots", &series, Axes::default()).map_err(io_failure)?;
        }
    }
    let max = |v: &[f64]| v.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    ctx.manifest(
        "evolve.json",
        EvolveResult {
            verdict: &ex.verdict,
            mu: ex.mu,
            epsilon: ex.epsilon,
            ground_state_norm: gs.energy_norm(),
            action_initial: ex.action_initial,
            action_ground_state: ex.action_ground_state,
            action_decreased: ex.action_decreased,
            virial_drift: ex.virial_drift,
            max_energy_drift: max(&tr.energy_drift),
            max_mass_drift: max(&tr.mass_drift),
            max_tube_distance: tr.max_tube_distance(),
            modulation_lost_at: tr.modulation_lost_at,
            blow_up: tr.blow_up,
            nonlinear_cfl: tr.nonlinear_cfl,
            warnings: &tr.warnings,
        },
    )?;
    // An escape can precede the blow-up, so the trajectory decides the exit code.
    let blow_up = match ex.verdict {
        ExperimentVerdict::BlowUp { time } => Some(time),
        _ => tr.blow_up,
    };
    if let Some(time) = blow_up {
        return Err(Failure::BlowUp(format!("non-finite state; last valid time {time}")));
    }
    Ok(())
}
