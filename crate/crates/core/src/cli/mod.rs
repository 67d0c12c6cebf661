//! Command-line front end: `solve`, `check` and `verify`.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anisotropy::conditions::{check_firey_sphere, check_flow_main_condition, check_guanma, GuanMaReport};
use crate::anisotropy::PrescribedData;
use crate::barrier::{find_spherical_barriers, BarrierPair};
use crate::curvfun::{structure_report, StructureReport, Verdict};
use crate::error::{Error, Result};
use crate::flow::{run, target_scale, FlowResult, ProblemSpec, Shape};
use crate::profile::{Grid, SupportProfile};
use crate::verify::{gauge_fixed_gap, residual, verify_profile, InvariantCheck, VerificationReport};
pub use config::{Overrides, RunConfig, StructureProperty};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

const EXPRESSION_HELP: &str = "\
Expressions: numbers, theta, s, absx; + - * / ^ (right associative), unary minus,
parentheses; functions sin cos tan sinh cosh exp log sqrt abs; constants pi, e. Angles in radians.
Log level: CURVEFLOW_LOG=error|info|debug.
Exit codes: 0 success, 1 configuration or domain error, 2 no convergence or failed check.";

#[derive(Debug, Parser)]
#[command(name = "curveflow", version, about = "Prescribed-curvature solver by curvature flows", after_help = EXPRESSION_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the flow to a steady state and write result, profile and history.
    Solve {
        #[arg(long, required_unless_present = "sweep")]
        config: Option<PathBuf>,
        /// Solve every config matching the pattern, in parallel.
        #[arg(long, conflicts_with = "config")]
        sweep: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate structure and admissibility conditions.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare a solved profile with residual, oracle and Firey checks.
    Verify {
        /// `result.json` written by `solve`, or a `theta,s` profile CSV.
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            grid: self.grid,
            tol: self.tol,
            max_steps: self.max_steps,
            seed: self.seed,
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("CURVEFLOW_LOG", "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Solve { config, sweep, common } => {
            let o = common.overrides();
            match (config, sweep) {
                (_, Some(pattern)) => sweep_solve(&pattern, &o),
                (Some(path), None) => exit_code(cmd_solve(&path, &o).map(|s| s.result.converged)),
                (None, None) => EXIT_ERROR,
            }
        }
        Command::Check { config, common } => exit_code(cmd_check(&config, &common.overrides()).map(|c| c.passed)),
        Command::Verify { result, config, common } => {
            exit_code(cmd_verify(&result, &config, &common.overrides()).map(|v| v.report.passed))
        }
    }
}

fn exit_code(outcome: Result<bool>) -> i32 {
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NOT_CONVERGED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(o);
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDocument {
    pub config: RunConfig,
    pub problem: ProblemSpec,
    pub result: FlowResult,
}

/// Run metadata kept out of the deterministic result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub created_unix: u64,
    pub wall_time_seconds: f64,
    pub version: String,
}

pub fn history_csv(result: &FlowResult) -> String {
    let mut out = String::from("step,t,dt,residual,speed,min_radius,max_radius,pinching_b,pinching_ratio\n");
    for h in &result.history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            h.step, h.t, h.dt, h.residual, h.speed, h.min_radius, h.max_radius, h.pinching_b, h.pinching_ratio
        ));
    }
    out
}

/// Solves one config; artifacts are written even without convergence.
pub fn cmd_solve(path: &Path, o: &Overrides) -> Result<SolveDocument> {
    let cfg = load(path, o)?;
    solve_config(cfg)
}

pub fn solve_config(cfg: RunConfig) -> Result<SolveDocument> {
    let started = Instant::now();
    let (problem, _) = cfg.build()?;
    let initial = cfg.initial_shape(&problem)?;
    info!(
        "solving {:?} n = {} on {:?}, barriers [{}, {}]",
        problem.mode,
        problem.n(),
        problem.space.kind,
        problem.barriers.r_lower,
        problem.barriers.r_upper
    );
    let result = run(&problem, initial, &cfg.numerics.run_options())?;
    info!(
        "{} (residual {:e}, {} steps)",
        result.message, result.residual, result.steps
    );
    let out = &cfg.outputs;
    write_text(&out.path(&out.profile), &result.profile.to_csv())?;
    write_text(&out.path(&out.history), &history_csv(&result))?;
    let doc = SolveDocument {
        config: cfg.clone(),
        problem,
        result,
    };
    write_json(&out.path(&out.result), &doc)?;
    let meta = RunMeta {
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    write_json(&out.path(&out.meta), &meta)?;
    if !doc.result.converged {
        error!("no convergence: {}", doc.result.message);
    }
    Ok(doc)
}

/// Solves every matching config concurrently, each into `<out>/<stem>`.
pub fn sweep_solve(pattern: &str, o: &Overrides) -> i32 {
    let paths: Vec<PathBuf> = match glob::glob(pattern) {
        Ok(it) => it.filter_map(|p| p.ok()).collect(),
        Err(e) => {
            eprintln!("error: bad sweep pattern `{pattern}`: {e}");
            return EXIT_ERROR;
        }
    };
    if paths.is_empty() {
        eprintln!("error: no config matches `{pattern}`");
        return EXIT_ERROR;
    }
    let codes: Vec<i32> = paths
        .par_iter()
        .map(|path| {
            let outcome = load(path, &Overrides { out: None, ..o.clone() }).and_then(|mut cfg| {
                let stem = path.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
                let base = o.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone());
                cfg.outputs.dir = base.join(stem);
                solve_config(cfg).map(|d| d.result.converged)
            });
            match outcome {
                Ok(true) => EXIT_OK,
                Ok(false) => EXIT_NOT_CONVERGED,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    EXIT_ERROR
                }
            }
        })
        .collect();
    codes.into_iter().max().unwrap_or(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureOutcome {
    pub report: StructureReport,
    pub expected: Vec<(StructureProperty, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireyOutcome {
    pub finite_limits: Verdict,
    pub closed_integral: Verdict,
    pub positive_g: Verdict,
    pub g_min: f64,
    pub g_max: f64,
}

/// Contents of `check.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckDocument {
    pub config: RunConfig,
    pub structure: Option<StructureOutcome>,
    pub flow_main: Option<Verdict>,
    pub guanma: Option<GuanMaReport>,
    pub firey: Option<FireyOutcome>,
    pub barriers: Option<BarrierPair>,
    pub passed: bool,
}

fn has(report: &StructureReport, p: StructureProperty) -> bool {
    match p {
        StructureProperty::InverseConcave => report.inverse_concave.holds,
        StructureProperty::Concave => report.concave.holds,
        StructureProperty::DualVanishes => report.dual_vanishes_on_boundary.vanishes,
        StructureProperty::DualNonVanishing => !report.dual_vanishes_on_boundary.vanishes,
        StructureProperty::LambdaEps => report.lambda_eps.is_some_and(|l| l.holds),
    }
}

fn problem_data(cfg: &RunConfig) -> Result<PrescribedData> {
    match &cfg.problem.data {
        Some(form) => PrescribedData::new(cfg.problem.function.n, form.clone()),
        None => Ok(cfg.build()?.1.expect("manufactured config").data),
    }
}

pub fn cmd_check(path: &Path, o: &Overrides) -> Result<CheckDocument> {
    let cfg = load(path, o)?;
    let checks = &cfg.checks;
    let function = cfg.problem.function;
    let n = function.n;
    let mut passed = true;

    let structure = checks.structure.as_ref().map(|s| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.numerics.seed);
        let report = structure_report(&function, s.samples, s.eps, &mut rng);
        let expected: Vec<_> = s.expect.iter().map(|p| (*p, has(&report, *p))).collect();
        passed &= expected.iter().all(|(_, ok)| *ok);
        StructureOutcome { report, expected }
    });

    let flow_main = match checks.flow_main {
        Some(sampling) => {
            let v = check_flow_main_condition(&problem_data(&cfg)?, &cfg.problem.space, sampling)?;
            passed &= v.holds;
            Some(v)
        }
        None => None,
    };

    let guanma = match &checks.guanma {
        Some(g) => {
            let phi = match &g.phi {
                Some(p) => p.clone(),
                None => problem_data(&cfg)?
                    .phi()
                    .cloned()
                    .ok_or_else(|| Error::Config("guanma check needs `phi` for this data family".into()))?,
            };
            let grid = Grid::for_dimension(n, g.grid.unwrap_or(cfg.numerics.grid))?;
            let r = check_guanma(&phi, g.variant, n, grid)?;
            passed &= r.holds;
            Some(r)
        }
        None => None,
    };

    let firey = match &checks.firey {
        Some(f) => {
            let grid = Grid::for_dimension(n, f.grid.unwrap_or(cfg.numerics.grid))?;
            let r = check_firey_sphere(&f.psi, n, f.k, grid)?;
            passed &= r.finite_limits.holds && r.closed_integral.holds && r.positive_g.holds;
            let g = &r.profile.g;
            Some(FireyOutcome {
                finite_limits: r.finite_limits,
                closed_integral: r.closed_integral,
                positive_g: r.positive_g,
                g_min: g.iter().copied().fold(f64::INFINITY, f64::min),
                g_max: g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        }
        None => None,
    };

    let barriers = if checks.barriers {
        let data = problem_data(&cfg)?;
        let scale = target_scale(&function, &data)?;
        match find_spherical_barriers(&cfg.problem.space, &function, &data, scale) {
            Ok(b) => Some(b),
            Err(Error::NoBarrier(msg)) => {
                error!("no barrier: {msg}");
                passed = false;
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let doc = CheckDocument {
        config: cfg.clone(),
        structure,
        flow_main,
        guanma,
        firey,
        barriers,
        passed,
    };
    write_json(&cfg.outputs.path(&cfg.outputs.check), &doc)?;
    Ok(doc)
}

/// Contents of `verify.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDocument {
    pub config: RunConfig,
    pub report: VerificationReport,
}

fn read_shape(path: &Path, problem: &ProblemSpec, grid: Grid) -> Result<Shape> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let p = SupportProfile::from_csv(grid.domain, problem.n(), &text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        return Ok(Shape::Support(p));
    }
    let doc: SolveDocument =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(doc.result.profile)
}

pub fn cmd_verify(result_path: &Path, config_path: &Path, o: &Overrides) -> Result<VerifyDocument> {
    let cfg = load(config_path, o)?;
    let (problem, pair) = cfg.build()?;
    let shape = read_shape(result_path, &problem, cfg.grid()?)?;
    let mut report = verify_profile(&problem, &shape, &cfg.verify.options())?;
    if let (Some(pair), Shape::Support(p)) = (&pair, &shape) {
        if p.grid() == pair.s_star.grid() {
            let exact = residual(&problem, &Shape::Support(pair.s_star.clone()))?.sup;
            report
                .invariants
                .push(InvariantCheck::below("exact solution residual", exact, 1e-10));
            let gap = gauge_fixed_gap(&p.values, &pair.s_star.values, p.grid());
            report
                .invariants
                .push(InvariantCheck::below("exact solution gap", gap, cfg.verify.oracle_tol));
        }
        report.passed = report.invariants.iter().all(|c| c.passed);
    }
    let doc = VerifyDocument {
        config: cfg.clone(),
        report,
    };
    write_json(&cfg.outputs.path(&cfg.outputs.verify), &doc)?;
    Ok(doc)
}
