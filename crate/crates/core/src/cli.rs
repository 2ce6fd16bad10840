//! Command-line front end. Every command writes its result to `--out` (or
//! stdout) and maps the outcome to an exit code: 0 success, 1 no certificate
//! or no convergence, 2 usage or input error.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::charroots::{classify_solutions, find_real_roots, CharProblem, Convention, ScanOptions};
use crate::construct::{construct, ConstructError, IterationOptions};
use crate::criteria::{
    check_all, oscillation_note, render_report, sweep_region, CriteriaOptions, RegionAxes,
};
use crate::model::{validate_spec, Bounds, ProblemSpec, Sign, SignPattern, SpecFile, Window};
use crate::simulate::{classify_trajectory, relax, RelaxOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    NoResult = 1,
    InputError = 2,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Report,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxesArg {
    /// Unknowns of the two-inequality system for fixed bounds.
    Xy,
    /// Autonomous coefficients with fixed delay and advance.
    Ab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    /// `x = e^{λt}`.
    Plus,
    /// `x = e^{−λt}`.
    Minus,
}

#[derive(Debug, Parser)]
#[command(
    name = "nonosc",
    version,
    about = "Nonoscillation analysis for mixed delay-advance equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the standing hypotheses a, b >= 0 and g(t) <= t <= h(t).
    Validate(WindowArgs),
    /// Evaluate every sufficient condition and print one block per certificate.
    CheckAll(WindowArgs),
    /// Build a monotone positive solution by the fixed-point iteration.
    Construct(ConstructArgs),
    /// Real roots of the characteristic quasi-polynomial of an autonomous equation.
    Roots(RootsArgs),
    /// Feasibility sweep of the two-inequality system.
    Region(RegionArgs),
    /// Integrate the initial-value problem by waveform relaxation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "report")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// JSON spec file.
    pub spec: PathBuf,
    /// Window start; defaults to the spec's t0.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Window end; defaults to t1 + 100.
    #[arg(long = "T")]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Margin for comparisons against 1/e.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    /// Autonomous JSON spec; alternatively give --a, --b, --tau, --sigma.
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub delta1: i64,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub delta2: i64,
    #[arg(long, value_enum, default_value = "minus")]
    pub convention: ConventionArg,
    #[arg(long = "scan-lo", default_value_t = -60.0, allow_hyphen_values = true)]
    pub scan_lo: f64,
    #[arg(long = "scan-hi", default_value_t = 60.0, allow_hyphen_values = true)]
    pub scan_hi: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long, value_enum)]
    pub axes: AxesArg,
    /// a1,a2,b1,b2,tau,sigma (xy mode).
    #[arg(long, value_delimiter = ',')]
    pub bounds: Option<Vec<f64>>,
    /// Delay for ab mode.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Advance for ab mode.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// lo,hi of the first axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub range1: Vec<f64>,
    /// lo,hi of the second axis.
    #[arg(long, value_delimiter = ',', required = true)]
    pub range2: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub res: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON spec file with optional phi and x0.
    pub spec: PathBuf,
    /// Horizon; defaults to t0 + 20.
    #[arg(long = "T")]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Sweep tolerance; defaults to 1e-10 max(|x0|, 1).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-sweeps", default_value_t = 200)]
    pub max_sweeps: usize,
    /// Start of the classification window; defaults to t0.
    #[arg(long)]
    pub t1: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Resolved window, step and tolerance for the spec-driven commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec_path: PathBuf,
    pub window: Window<f64>,
    pub step: f64,
    pub tol: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

/// Usage or input error with its diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure(pub String);

pub type Outcome = Result<(String, Exit), Failure>;

fn input_error<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure(format!("{context}: {e}"))
}

fn load_spec(path: &Path) -> Result<(SpecFile, ProblemSpec<f64>), Failure> {
    let file = SpecFile::load(path).map_err(input_error(&path.display().to_string()))?;
    let spec = file
        .spec()
        .map_err(input_error(&path.display().to_string()))?;
    Ok((file, spec))
}

fn check_step(step: f64) -> Result<(), Failure> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Failure(format!("--step must be positive, got {step}")))
    }
}

fn resolve(args: &WindowArgs, t0: f64) -> Result<RunConfig, Failure> {
    let t1 = args.t1.unwrap_or(t0);
    let t_end = args.t_end.unwrap_or(t1 + 100.0);
    if !(t1 < t_end) {
        return Err(Failure(format!("window needs t1 < T, got [{t1}, {t_end}]")));
    }
    check_step(args.step)?;
    Ok(RunConfig {
        spec_path: args.spec.clone(),
        window: Window::new(t1, t_end),
        step: args.step,
        tol: args.tol,
        format: args.output.format,
        out: args.output.out.clone(),
    })
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<String, Failure> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(input_error("csv"))?;
    String::from_utf8(buf).map_err(input_error("csv"))
}

pub fn cmd_validate(args: &WindowArgs) -> Outcome {
    let (_, spec) = load_spec(&args.spec)?;
    let cfg = resolve(args, spec.t0)?;
    let report = validate_spec(&spec, cfg.window, cfg.window.samples_for_step(cfg.step));
    let text = match cfg.format {
        Format::Report => report.to_string(),
        Format::Csv => {
            let mut s = String::from("hypothesis,passed,first_violation\n");
            for c in &report.checks {
                let at = c.first_violation.map(|t| t.to_string()).unwrap_or_default();
                s.push_str(&format!(
                    "{:?},{},{}\n",
                    c.hypothesis,
                    u8::from(c.passed),
                    at
                ));
            }
            s
        }
    };
    Ok((
        text,
        if report.passed() {
            Exit::Success
        } else {
            Exit::NoResult
        },
    ))
}

pub fn cmd_check(args: &WindowArgs) -> Outcome {
    let (_, spec) = load_spec(&args.spec)?;
    let cfg = resolve(args, spec.t0)?;
    let report = validate_spec(&spec, cfg.window, cfg.window.samples_for_step(cfg.step));
    if !report.passed() {
        return Err(Failure(format!(
            "spec does not satisfy the standing hypotheses\n{report}"
        )));
    }
    let mut opts = CriteriaOptions {
        step: cfg.step,
        ..CriteriaOptions::default()
    };
    if let Some(tol) = cfg.tol {
        opts.mu = tol;
    }
    let certs = check_all(&spec, cfg.window, &opts).map_err(input_error("check-all"))?;
    let exit = if certs.iter().any(|c| c.holds()) {
        Exit::Success
    } else {
        Exit::NoResult
    };
    let text = match cfg.format {
        Format::Report => {
            let mut s = render_report(&certs);
            if spec.pattern() == SignPattern::PositiveDelay {
                let note =
                    oscillation_note(&spec, cfg.window, &opts).map_err(input_error("check-all"))?;
                s.push_str(&format!("\nnote: {note}\n"));
            }
            s
        }
        Format::Csv => {
            let mut s = String::from("condition,verdict,witness,caveats\n");
            for c in &certs {
                let witness = c
                    .witness
                    .as_ref()
                    .map(|w| w.to_string())
                    .unwrap_or_default();
                let caveats: Vec<String> = c.caveats.iter().map(|c| c.to_string()).collect();
                s.push_str(&format!(
                    "{},{},\"{}\",{}\n",
                    c.id,
                    c.verdict,
                    witness,
                    caveats.join(";")
                ));
            }
            s
        }
    };
    Ok((text, exit))
}

pub fn cmd_construct(args: &ConstructArgs) -> Outcome {
    let (_, spec) = load_spec(&args.window.spec)?;
    let cfg = resolve(&args.window, spec.t0)?;
    let opts = IterationOptions {
        tol: cfg.tol.unwrap_or(1e-8),
        max_iter: args.max_iter,
    };
    match construct(&spec, cfg.window, cfg.step, &opts, None) {
        Ok((starter, res)) => {
            let text = match cfg.format {
                Format::Report => format!("starter: {starter}\n{}", res.summary()),
                Format::Csv => csv_string(|buf| res.write_csv(buf))?,
            };
            Ok((
                text,
                if res.converged {
                    Exit::Success
                } else {
                    Exit::NoResult
                },
            ))
        }
        Err(e @ (ConstructError::WrongSignPattern(_) | ConstructError::Grid(_))) => {
            Err(Failure(e.to_string()))
        }
        Err(e) => Ok((format!("no construction: {e}\n"), Exit::NoResult)),
    }
}

/// `(a, b, τ, σ)` when the coefficients are constant and the deviations are fixed shifts.
fn autonomous_constants(spec: &ProblemSpec<f64>) -> Option<(f64, f64, f64, f64)> {
    if !(spec.a.is_constant() && spec.b.is_constant()) {
        return None;
    }
    let probes = [0.0, 1.0, 2.5, 7.0];
    let shift = |f: &dyn Fn(f64) -> f64| {
        let d0 = f(probes[0]);
        probes
            .iter()
            .all(|&t| (f(t) - d0).abs() <= 1e-12 * (1.0 + d0.abs()))
            .then_some(d0)
    };
    let tau = shift(&|t| t - spec.g(t))?;
    let sigma = shift(&|t| spec.h(t) - t)?;
    Some((spec.a(0.0), spec.b(0.0), tau, sigma))
}

pub fn cmd_roots(args: &RootsArgs) -> Outcome {
    let (a, b, tau, sigma, d1, d2) = match &args.spec {
        Some(path) => {
            let (_, spec) = load_spec(path)?;
            let (a, b, tau, sigma) = autonomous_constants(&spec).ok_or_else(|| {
                Failure("roots needs constant a, b and g = t - tau, h = t + sigma".into())
            })?;
            (a, b, tau, sigma, spec.delta1, spec.delta2)
        }
        None => {
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| Failure(format!("missing --{name} (or a spec file)")))
            };
            let sign = |v: i64, name: &str| {
                Sign::from_int(v).ok_or_else(|| Failure(format!("--{name} must be 1 or -1")))
            };
            (
                need(args.a, "a")?,
                need(args.b, "b")?,
                need(args.tau, "tau")?,
                need(args.sigma, "sigma")?,
                sign(args.delta1, "delta1")?,
                sign(args.delta2, "delta2")?,
            )
        }
    };
    if !(args.scan_lo < args.scan_hi) {
        return Err(Failure(format!(
            "scan range needs lo < hi, got [{}, {}]",
            args.scan_lo, args.scan_hi
        )));
    }
    let convention = match args.convention {
        ConventionArg::Plus => Convention::PlusExponent,
        ConventionArg::Minus => Convention::MinusExponent,
    };
    let problem = CharProblem::new(a, b, tau, sigma, SignPattern::of(d1, d2), convention);
    let roots = find_real_roots(&problem, &ScanOptions::on(args.scan_lo, args.scan_hi));
    let exit = if roots.roots.is_empty() {
        Exit::NoResult
    } else {
        Exit::Success
    };
    let text = match args.output.format {
        Format::Csv => csv_string(|buf| roots.write_csv(buf))?,
        Format::Report => {
            let modes = classify_solutions(&roots, &problem);
            let mut s = format!(
                "equation: a = {a}, b = {b}, tau = {tau}, sigma = {sigma}, delta1 = {:+}, delta2 = {:+}\n",
                d1.as_int(),
                d2.as_int()
            );
            s.push_str(&format!("scanned: [{}, {}]\n", args.scan_lo, args.scan_hi));
            for r in &roots.roots {
                s.push_str(&format!(
                    "root: {} (residual {:e}, {})\n",
                    r.lambda, r.residual, r.class
                ));
            }
            if roots.roots.is_empty() {
                s.push_str("root: none\n");
            }
            if roots.truncated {
                s.push_str("flag: root list truncated\n");
            }
            for t in &roots.near_tangencies {
                s.push_str(&format!("flag: near tangency at {t}\n"));
            }
            s.push_str(&format!(
                "decaying positive solution: {}\n",
                modes.has_decaying_positive_solution
            ));
            s.push_str(&format!(
                "growing positive solution: {}\n",
                modes.has_growing_positive_solution
            ));
            s
        }
    };
    Ok((text, exit))
}

pub fn cmd_region(args: &RegionArgs) -> Outcome {
    if args.bounds.as_ref().is_some_and(|v| v.len() != 6) {
        return Err(Failure(
            "--bounds takes six values a1,a2,b1,b2,tau,sigma".into(),
        ));
    }
    if args.range1.len() != 2 || args.range2.len() != 2 {
        return Err(Failure(
            "--range1 and --range2 take two values lo,hi".into(),
        ));
    }
    let template = match (args.axes, &args.bounds, args.tau, args.sigma) {
        (AxesArg::Xy, Some(v), _, _) => Bounds::from_constants(v[0], v[1], v[2], v[3], v[4], v[5]),
        (AxesArg::Xy, None, _, _) => {
            return Err(Failure(
                "xy mode needs --bounds a1,a2,b1,b2,tau,sigma".into(),
            ))
        }
        (AxesArg::Ab, _, Some(tau), Some(sigma)) => Bounds::autonomous(0.0, 0.0, tau, sigma),
        (AxesArg::Ab, Some(v), None, None) => Bounds::autonomous(0.0, 0.0, v[4], v[5]),
        (AxesArg::Ab, _, _, _) => return Err(Failure("ab mode needs --tau and --sigma".into())),
    };
    let axes = match args.axes {
        AxesArg::Xy => RegionAxes::InequalityVariables,
        AxesArg::Ab => RegionAxes::Coefficients,
    };
    let region = sweep_region(
        &template,
        axes,
        (args.range1[0], args.range1[1]),
        (args.range2[0], args.range2[1]),
        args.res,
        &CriteriaOptions::default(),
    )
    .map_err(input_error("region"))?;
    let feasible = region.count_feasible();
    let exit = if feasible > 0 {
        Exit::Success
    } else {
        Exit::NoResult
    };
    let text = match args.output.format {
        Format::Csv => csv_string(|buf| region.write_csv(buf))?,
        Format::Report => {
            let (n1, n2) = axes.names();
            let mut s = format!(
                "axes: {n1} in [{}, {}], {n2} in [{}, {}], resolution {}\n",
                args.range1[0], args.range1[1], args.range2[0], args.range2[1], args.res
            );
            s.push_str(&format!(
                "cells: {}\n",
                region.axis1.len() * region.axis2.len()
            ));
            s.push_str(&format!("feasible: {feasible}\n"));
            if let Some(c) = region.comparison {
                s.push_str(&format!(
                    "below line a*tau + b*sigma = 1/e: {} feasible, {} infeasible\n",
                    c.below_feasible, c.below_infeasible
                ));
                s.push_str(&format!(
                    "on or above the line: {} feasible, {} infeasible\n",
                    c.above_feasible, c.above_infeasible
                ));
            }
            s
        }
    };
    Ok((text, exit))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let file = SpecFile::load(&args.spec).map_err(input_error(&args.spec.display().to_string()))?;
    let ivp = file
        .ivp::<f64>()
        .map_err(input_error(&args.spec.display().to_string()))?;
    check_step(args.step)?;
    let t0 = ivp.spec.t0;
    let t_end = args.t_end.unwrap_or(t0 + 20.0);
    if !(t_end > t0) {
        return Err(Failure(format!("horizon needs T > t0, got T = {t_end}")));
    }
    let opts = RelaxOptions {
        step: args.step,
        tol: args.tol,
        max_sweeps: args.max_sweeps,
        ..RelaxOptions::default()
    };
    let tr = relax(&ivp, t_end, &opts).map_err(input_error("simulate"))?;
    let class = classify_trajectory(&tr, args.t1.unwrap_or(t0)).map_err(input_error("simulate"))?;
    let text = match args.output.format {
        Format::Csv => csv_string(|buf| tr.write_csv(buf))?,
        Format::Report => tr.summary(class),
    };
    Ok((
        text,
        if tr.converged {
            Exit::Success
        } else {
            Exit::NoResult
        },
    ))
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> io::Result<()> {
    match out {
        Some(path) => File::create(path)?.write_all(text.as_bytes()),
        None => stdout.write_all(text.as_bytes()),
    }
}

/// Runs a parsed command, writing results and diagnostics to the given streams.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Exit {
    let (outcome, out) = match &cli.command {
        Command::Validate(a) => (cmd_validate(a), a.output.out.as_deref()),
        Command::CheckAll(a) => (cmd_check(a), a.output.out.as_deref()),
        Command::Construct(a) => (cmd_construct(a), a.window.output.out.as_deref()),
        Command::Roots(a) => (cmd_roots(a), a.output.out.as_deref()),
        Command::Region(a) => (cmd_region(a), a.output.out.as_deref()),
        Command::Simulate(a) => (cmd_simulate(a), a.output.out.as_deref()),
    };
    match outcome {
        Ok((text, exit)) => match emit(&text, out, stdout) {
            Ok(()) => exit,
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                Exit::InputError
            }
        },
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            Exit::InputError
        }
    }
}
