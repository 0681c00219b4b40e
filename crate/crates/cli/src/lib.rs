//! The `gensol` command line: every operation of the core crate as a
//! subcommand over a shared scenario schema.
//!
//! Exit codes: 0 on success, 1 on a domain error or a failed estimate check,
//! 2 on a configuration or usage error. Failures print one JSON object with a
//! stable `code` to stderr.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gensol_core::analysis::{
    classify_system, epsilon_sweep, uniqueness_experiment, verify_estimates, verify_solution, ClassifierConfig,
    SweepSettings, VerificationReport,
};
use gensol_core::characteristics::trace_characteristic;
use gensol_core::mollifier::Mollifier;
use gensol_core::output;
use gensol_core::scenario::ScenarioConfig;
use gensol_core::solver::solve;
use gensol_core::Error;

#[derive(Debug, Parser)]
#[command(name = "gensol", version, about = "Semilinear hyperbolic systems with nonlocal boundary conditions")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `experiment.output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a mollifier of class A_q and verify its moments.
    Mollifier {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        radius: f64,
        /// CSV destination; a JSON sidecar is written next to it.
        #[arg(long)]
        emit: PathBuf,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Trace one backward characteristic to its exit.
    Trace {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// 1-based component.
        #[arg(long)]
        component: usize,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        t: f64,
    },
    /// Solve the scenario at its configured epsilon.
    Solve(ScenarioArgs),
    /// Solve across the epsilon grid and fit growth orders.
    Sweep(ScenarioArgs),
    /// Compare two mollifiers across the epsilon grid.
    Unique(ScenarioArgs),
    /// Classify the growth of the source gradient over the configured radii.
    Classify(ScenarioArgs),
    /// Check contraction and a priori estimates; exit 1 when any check fails.
    Verify(ScenarioArgs),
}

/// A failure with its exit code and machine-readable code.
#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            exit: if e.is_config() { 2 } else { 1 },
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn io(path: &Path, e: impl fmt::Display, exit: i32) -> Self {
        Self {
            exit,
            code: "io".into(),
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "code": self.code, "exit_code": self.exit, "message": self.message }).to_string()
    }
}

type Outcome = std::result::Result<(), Failure>;

struct Ctx {
    verbose: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("gensol: {}", msg.as_ref());
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let f = Failure {
                exit: 2,
                code: "usage".into(),
                message: e.to_string().trim_end().to_string(),
            };
            eprintln!("{}", f.to_json());
            return 2;
        }
    };
    let ctx = Ctx { verbose: cli.verbose };
    if let Some(n) = cli.threads {
        if n == 0 {
            let f = Failure {
                exit: 2,
                code: "usage".into(),
                message: "--threads must be at least 1".into(),
            };
            eprintln!("{}", f.to_json());
            return 2;
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command, &ctx) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.exit
        }
    }
}

fn dispatch(cmd: Command, ctx: &Ctx) -> Outcome {
    match cmd {
        Command::Mollifier {
            q,
            radius,
            emit,
            points,
        } => mollifier(q, radius, &emit, points, ctx),
        Command::Trace {
            scenario,
            component,
            x,
            t,
        } => trace(&scenario, component, x, t, ctx),
        Command::Solve(a) => solve_cmd(&a, ctx),
        Command::Sweep(a) => sweep_cmd(&a, ctx),
        Command::Unique(a) => unique_cmd(&a, ctx),
        Command::Classify(a) => classify_cmd(&a, ctx),
        Command::Verify(a) => verify_cmd(&a, ctx),
    }
}

fn load(path: &Path) -> std::result::Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e, 2))?;
    Ok(ScenarioConfig::from_json(&text)?)
}

fn out_dir(a: &ScenarioArgs, cfg: &ScenarioConfig) -> std::result::Result<PathBuf, Failure> {
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.experiment.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e, 1))?;
    Ok(dir)
}

/// Writes through a temporary file in the same directory and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Outcome {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e, 1))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Failure::io(&dir, e, 1))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Failure::io(path, e, 1))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error, 1))?;
    Ok(())
}

fn settings(cfg: &ScenarioConfig) -> SweepSettings {
    SweepSettings {
        solve: cfg.solve_config(),
        probes: cfg.probes(),
        component: cfg.component(),
        diagnostics: cfg.diagnostics(),
    }
}

fn require_grid(cfg: &ScenarioConfig) -> std::result::Result<Vec<f64>, Failure> {
    cfg.eps_grid()?
        .ok_or_else(|| Error::Config("regularization.eps_grid is required".into()).into())
}

fn mollifier(q: usize, radius: f64, emit: &Path, points: usize, ctx: &Ctx) -> Outcome {
    let m = Mollifier::build(q, radius).map_err(|e| match e {
        Error::InvalidArgument(msg) => Failure::from(Error::Config(msg)),
        other => other.into(),
    })?;
    let report = m.verify_moments();
    ctx.note(format!("q = {q}, radius = {radius}, moments passed: {}", report.passed));
    write_atomic(emit, &output::mollifier_csv(&m, points))?;
    write_atomic(&emit.with_extension("json"), &output::to_json(&report))?;
    if !report.passed {
        return Err(Failure {
            exit: 1,
            code: "moment_check_failed".into(),
            message: format!("mass error {:e}, moment error {:e}", report.mass_error, report.max_moment_error),
        });
    }
    Ok(())
}

fn trace(a: &ScenarioArgs, component: usize, x: f64, t: f64, ctx: &Ctx) -> Outcome {
    let cfg = load(&a.config)?;
    let n = cfg.problem.n;
    if component < 1 || component > n {
        return Err(Error::Config(format!("component {component} outside 1..={n}")).into());
    }
    let sys = cfg.freeze()?;
    let tr = trace_characteristic(&sys, component - 1, x, t, cfg.numerics.trace_tol)?;
    ctx.note(format!("exit {:?} at tau = {}", tr.exit_kind, tr.exit_time));
    let dir = out_dir(a, &cfg)?;
    write_atomic(&dir.join("trace.csv"), &output::trace_csv(&tr))?;
    write_atomic(&dir.join("trace.json"), &output::to_json(&tr))
}

fn solve_cmd(a: &ScenarioArgs, ctx: &Ctx) -> Outcome {
    let cfg = load(&a.config)?;
    let sys = cfg.freeze()?;
    ctx.note(format!("solving '{}' to T = {}", cfg.label(), cfg.horizon()));
    let (grid, report) = solve(&sys, cfg.horizon(), &cfg.solve_config())?;
    ctx.note(format!(
        "{} slabs, sup {:.6e}, bound {:.6e}",
        report.plan.slab_count, report.sup_achieved, report.apriori_bound
    ));
    let dir = out_dir(a, &cfg)?;
    for i in 0..grid.n {
        write_atomic(&dir.join(format!("U{}.csv", i + 1)), &output::field_csv(&grid, i))?;
        if let Some(d) = output::derivative_csv(&grid, i) {
            write_atomic(&dir.join(format!("dU{}_dx.csv", i + 1)), &d)?;
        }
    }
    write_atomic(&dir.join("V.csv"), &output::boundary_csv(&grid))?;
    write_atomic(&dir.join("report.json"), &output::to_json(&report))
}

fn sweep_cmd(a: &ScenarioArgs, ctx: &Ctx) -> Outcome {
    let cfg = load(&a.config)?;
    let grid = require_grid(&cfg)?;
    ctx.note(format!("sweeping '{}' over {} values of epsilon", cfg.label(), grid.len()));
    let res = epsilon_sweep(&cfg.spec()?, &cfg.mollifier()?, &grid, cfg.horizon(), &settings(&cfg))?;
    ctx.note(format!("fitted solution order {:.4}", res.solution_growth.fitted_order));
    let dir = out_dir(a, &cfg)?;
    write_atomic(&dir.join("sweep.csv"), &output::sweep_csv(&res))?;
    write_atomic(&dir.join("sweep.json"), &output::to_json(&res))
}

fn unique_cmd(a: &ScenarioArgs, ctx: &Ctx) -> Outcome {
    let cfg = load(&a.config)?;
    let grid = require_grid(&cfg)?;
    let psi = cfg
        .second_mollifier()?
        .ok_or_else(|| Failure::from(Error::Config("regularization.second_mollifier is required".into())))?;
    let res = uniqueness_experiment(&cfg.spec()?, &cfg.mollifier()?, &psi, &grid, cfg.horizon(), &settings(&cfg))?;
    ctx.note(format!("decay order {:.4}", res.decay_order()));
    let dir = out_dir(a, &cfg)?;
    write_atomic(&dir.join("unique.csv"), &output::uniqueness_csv(&res))?;
    write_atomic(&dir.join("unique.json"), &output::to_json(&res))
}

fn classify_cmd(a: &ScenarioArgs, ctx: &Ctx) -> Outcome {
    let cfg = load(&a.config)?;
    let radii = cfg
        .radii()?
        .ok_or_else(|| Failure::from(Error::Config("experiment.radii is required".into())))?;
    let mut ccfg = ClassifierConfig::default();
    if let Some(t) = cfg.experiment.classify_threshold {
        ccfg.threshold = t;
    }
    let sys = cfg.freeze()?;
    let res = classify_system(&sys, cfg.horizon(), &radii, &ccfg)?;
    ctx.note(format!("verdict {:?}", res.verdict));
    let dir = out_dir(a, &cfg)?;
    write_atomic(&dir.join("classify.csv"), &output::classify_csv(&res))?;
    write_atomic(&dir.join("classify.json"), &output::to_json(&res))
}

fn verify_cmd(a: &ScenarioArgs, ctx: &Ctx) -> Outcome {
    let cfg = load(&a.config)?;
    let report = match cfg.eps_grid()? {
        Some(grid) => {
            let res = epsilon_sweep(&cfg.spec()?, &cfg.mollifier()?, &grid, cfg.horizon(), &settings(&cfg))?;
            verify_estimates(&res)
        }
        None => {
            let sys = cfg.freeze()?;
            let (grid, rep) = solve(&sys, cfg.horizon(), &cfg.solve_config())?;
            let row = verify_solution(&sys, &grid, &rep)?;
            VerificationReport {
                label: cfg.label().to_string(),
                passed: row.passed,
                rows: vec![row],
            }
        }
    };
    let dir = out_dir(a, &cfg)?;
    write_atomic(&dir.join("verify.csv"), &verify_csv(&report))?;
    write_atomic(&dir.join("verify.json"), &output::to_json(&report))?;
    ctx.note(format!("{} rows, passed: {}", report.rows.len(), report.passed));
    if report.passed {
        Ok(())
    } else {
        let failed = report.rows.iter().filter(|r| !r.passed).count();
        Err(Failure {
            exit: 1,
            code: "estimate_failed".into(),
            message: format!("{failed} of {} estimate checks failed", report.rows.len()),
        })
    }
}

fn verify_csv(r: &VerificationReport) -> String {
    use gensol_core::numfmt::fmt_f64;
    let mut out = String::from(
        "eps,converged,contraction_ok,sup_achieved,apriori_bound,apriori_ok,derivative_sup,derivative_bound,derivative_ok,passed\n",
    );
    for row in &r.rows {
        let (dm, db, dok) = match &row.derivative {
            Some(d) => (fmt_f64(d.measured), fmt_f64(d.bound), d.satisfied.to_string()),
            None => Default::default(),
        };
        out.push_str(
            &[
                if row.eps.is_finite() { fmt_f64(row.eps) } else { String::new() },
                row.converged.to_string(),
                row.contraction_ok.to_string(),
                fmt_f64(row.sup_achieved),
                fmt_f64(row.apriori_bound),
                row.apriori_ok.to_string(),
                dm,
                db,
                dok,
                row.passed.to_string(),
            ]
            .join(","),
        );
        out.push('\n');
    }
    out
}
