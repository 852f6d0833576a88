//! Command-line front end: parse an instance file, dispatch the matching
//! solver, and emit machine-parseable results.
//!
//! Output contract: key-value lines on stdout, traces as CSV, reports as
//! JSON. Exit code 0 means solved/feasible, 1 means infeasible (with a
//! certificate on stdout), 2 means a usage or solver error. Every printed
//! solution or certificate is re-validated against the instance after
//! printing; a validation failure turns the run into exit code 2.

pub mod formats;
pub mod report;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fracopt::dmdp::solve_dmdp;
use fracopt::fraccomb::min_ratio;
use fracopt::gaingraph::{ArcId, GainGraph, NodeId, Walk};
use fracopt::generate;
use fracopt::m2vpi::{
    recover_finite_solution, reduce_2vpi, solve_m2vpi, InfeasibilityEvidence, NoRootKind,
    PhaseReport, RecoveryOutcome, Side, SolveOutcome,
};
use fracopt::newton::trace_to_csv;
use fracopt::numerics::{ext_add_mul, ext_sign_diff, sign, Sign};
use fracopt::sfm::set_sum;
use fracopt::{ArithMode, ExtScalar, Method, NewtonConfig, Scalar, Tolerance};

use formats::Instance;
use report::RunReport;

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Solvers for fractional and parametric optimization over gain graphs.
#[derive(Parser)]
#[command(name = "fracopt", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a monotone two-variable-per-inequality system.
    #[command(name = "solve-m2vpi")]
    SolveM2vpi {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Convert unbounded labels into an explicit finite solution.
        #[arg(long)]
        recover_finite: bool,
    },
    /// Solve a general two-variable-per-inequality system.
    #[command(name = "solve-2vpi")]
    Solve2vpi {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Compute optimal total costs of a deterministic Markov decision process.
    #[command(name = "solve-dmdp")]
    SolveDmdp {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Minimize h(S)/a(S) over sets with a(S) > 0 (parametric submodular).
    #[command(name = "solve-sfm")]
    SolveSfm {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Minimize cᵀx/dᵀx over an explicit 0/1 domain.
    #[command(name = "min-ratio")]
    MinRatio {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Run both iteration policies on one instance and compare them.
    Compare {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Emit a seeded random instance (NEWTON_FRAC_SEED overrides --seed).
    Gen {
        format: GenFormat,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Size cap: nodes (graph formats), dimensions (min-ratio), ground
        /// set (sfm).
        #[arg(long)]
        max_n: Option<usize>,
        /// Size cap: arcs (m2vpi), out-degree (dmdp), domain vectors
        /// (min-ratio).
        #[arg(long)]
        max_m: Option<usize>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ArithArg {
    Rational,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lookahead,
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFormat {
    M2vpi,
    #[value(name = "2vpi")]
    Tvpi,
    Dmdp,
    Sfm,
    #[value(name = "min-ratio")]
    MinRatio,
}

#[derive(Args)]
struct SolveOpts {
    /// Arithmetic for parsing and solving.
    #[arg(long, value_enum, default_value_t = ArithArg::Rational)]
    arith: ArithArg,
    /// Tolerance for zero tests and comparisons (float mode).
    #[arg(long)]
    eps: Option<f64>,
    /// Iteration policy (compare runs both and ignores this).
    #[arg(long, value_enum, default_value_t = MethodArg::Lookahead)]
    method: MethodArg,
    /// Write the iteration trace as CSV to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Cap on accepted iterates per root search.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Write a JSON run report to this path.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl SolveOpts {
    fn mode(&self) -> ArithMode {
        match self.arith {
            ArithArg::Rational => ArithMode::Rational,
            ArithArg::Float => ArithMode::Float,
        }
    }

    fn method(&self) -> Method {
        match self.method {
            MethodArg::Lookahead => Method::LookAhead,
            MethodArg::Standard => Method::Standard,
        }
    }

    fn method_name(&self) -> &'static str {
        match self.method {
            MethodArg::Lookahead => "lookahead",
            MethodArg::Standard => "standard",
        }
    }

    fn config(&self) -> NewtonConfig {
        self.config_for(self.method())
    }

    fn config_for(&self, method: Method) -> NewtonConfig {
        let mut cfg = NewtonConfig::with_method(method);
        if let Some(k) = self.max_iters {
            cfg.max_iters = k;
        }
        if let Some(eps) = self.eps {
            cfg.tol = Tolerance { eps_zero: eps, eps_cmp: eps };
        }
        cfg
    }
}

/// Parse arguments and execute; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_ERROR,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::SolveM2vpi { file, opts, recover_finite } => {
            cmd_m2vpi(&file, &opts, recover_finite)
        }
        Command::Solve2vpi { file, opts } => cmd_2vpi(&file, &opts),
        Command::SolveDmdp { file, opts } => cmd_dmdp(&file, &opts),
        Command::SolveSfm { file, opts } => cmd_sfm(&file, &opts),
        Command::MinRatio { file, opts } => cmd_min_ratio(&file, &opts),
        Command::Compare { file, opts } => cmd_compare(&file, &opts),
        Command::Gen { format, seed, max_n, max_m } => cmd_gen(format, seed, max_n, max_m),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

fn read_instance(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn located<T>(path: &Path, parsed: Result<T, formats::ParseError>) -> Result<T> {
    parsed.map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn show_ext(x: &ExtScalar) -> String {
    match x {
        ExtScalar::Finite(s) => s.to_string(),
        ExtScalar::PosInf => "inf".into(),
    }
}

fn show_vec<T: Display>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn show_walk(w: &Walk) -> String {
    if w.is_empty() {
        "-".into()
    } else {
        show_vec(w.arcs.iter())
    }
}

fn print_infeasible(phase: usize, node: NodeId, side: Side, evidence: &InfeasibilityEvidence) {
    println!("INFEASIBLE");
    println!("phase {phase} node {node} side {}", report::side_name(side));
    match evidence {
        InfeasibilityEvidence::ViolatedAfterGrapevine { arc, labels } => {
            println!("evidence violated_arc");
            println!("arc {arc}");
            println!("labels {}", show_vec(labels.iter().map(show_ext)));
        }
        InfeasibilityEvidence::NonContractingPath { path, delta, f_value } => {
            println!("evidence non_contracting_path");
            println!("path {}", show_walk(path));
            println!("delta {delta}");
            println!("f {f_value}");
        }
        InfeasibilityEvidence::NewtonNoRoot { delta, kind } => {
            println!("evidence newton_no_root");
            println!("delta {delta}");
            match kind {
                NoRootKind::ValueUnbounded { cycle, path } => {
                    println!("kind value_unbounded");
                    println!("cycle {}", show_walk(cycle));
                    println!("path {}", show_walk(path));
                }
                NoRootKind::NonNegativeGradient { path, f_value } => {
                    println!("kind nonnegative_gradient");
                    println!("path {}", show_walk(path));
                    println!("f {f_value}");
                }
            }
        }
        InfeasibilityEvidence::NegativeUnitGainCycle { cycle } => {
            println!("evidence negative_unit_gain_cycle");
            println!("cycle {}", show_walk(cycle));
        }
    }
}

fn multiphase_trace_csv(phases: &[PhaseReport]) -> String {
    let mut out = String::from("phase,node,i,delta,f,g,lookahead_attempted,lookahead_success\n");
    for p in phases {
        let Some(newton) = &p.newton else { continue };
        for (idx, rec) in newton.result.trace.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                p.phase,
                p.node,
                idx + 1,
                rec.delta,
                rec.value,
                rec.gradient,
                rec.lookahead_attempted as u8,
                rec.lookahead_success as u8,
            ));
        }
    }
    out
}

fn write_trace(path: &Path, csv: &str) -> Result<()> {
    std::fs::write(path, csv).with_context(|| format!("writing trace to {}", path.display()))
}

/// Substitute a finite point into every arc constraint.
fn check_point_satisfies(g: &GainGraph, y: &[Scalar], tol: &Tolerance) -> Result<()> {
    for a in 0..g.arc_count() {
        let arc = g.arc(a);
        let slack = &(&arc.cost + &(&arc.gamma * &y[arc.head])) - &y[arc.tail];
        if sign(&slack, tol) == Sign::Neg {
            bail!("emitted solution failed re-validation: arc {a} is violated");
        }
    }
    Ok(())
}

/// A policy arc must leave its node and be tight wherever the value is
/// finite.
fn check_policy(g: &GainGraph, labels: &[ExtScalar], policy: &[ArcId], tol: &Tolerance) -> Result<()> {
    if policy.len() != g.node_count() {
        bail!("emitted policy failed re-validation: wrong length");
    }
    for (v, &a) in policy.iter().enumerate() {
        let arc = g.arc(a);
        if arc.tail != v {
            bail!("emitted policy failed re-validation: arc {a} does not leave node {v}");
        }
        if labels[v].is_finite() {
            let bound = ext_add_mul(&arc.cost, &arc.gamma, &labels[arc.head]);
            if ext_sign_diff(&labels[v], &bound, tol.eps_cmp) != Sign::Zero {
                bail!("emitted policy failed re-validation: arc {a} is not tight at node {v}");
            }
        }
    }
    Ok(())
}

struct Finish<'a> {
    file: &'a Path,
    solver: &'static str,
    method: &'static str,
    verdict: &'static str,
    wall_ms: f64,
    oracle_calls: Option<usize>,
}

/// Write the trace CSV and JSON report, as requested.
fn finish(opts: &SolveOpts, meta: Finish, trace_csv: &str, phases: Vec<report::PhaseIterations>) -> Result<()> {
    if let Some(path) = &opts.trace {
        write_trace(path, trace_csv)?;
    }
    if let Some(path) = &opts.report {
        let rep = RunReport {
            instance: meta.file.display().to_string(),
            solver: meta.solver,
            method: meta.method,
            verdict: meta.verdict.to_string(),
            phase_iterations: phases,
            oracle_calls: meta.oracle_calls,
            wall_time_ms: meta.wall_ms,
            trace_path: opts.trace.as_ref().map(|p| p.display().to_string()),
        };
        report::write(&rep, path)?;
    }
    Ok(())
}

fn verdict_name(code: i32) -> &'static str {
    if code == EXIT_FEASIBLE {
        "feasible"
    } else {
        "infeasible"
    }
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

fn cmd_m2vpi(file: &Path, opts: &SolveOpts, recover: bool) -> Result<i32> {
    let text = read_instance(file)?;
    let g = located(file, formats::parse_m2vpi(&text, opts.mode()))?;
    let cfg = opts.config();
    let start = Instant::now();
    let rep = solve_m2vpi(&g, &cfg).context("solver failed")?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let code = match &rep.outcome {
        SolveOutcome::MaxSolution { labels } => {
            if recover {
                match recover_finite_solution(&g, &cfg).context("recovery failed")? {
                    RecoveryOutcome::Point { y } => {
                        println!("FEASIBLE");
                        println!("{}", show_vec(y.iter()));
                        check_point_satisfies(&g, &y, &cfg.tol)?;
                    }
                    RecoveryOutcome::Infeasible { .. } => {
                        bail!("recovery and the primary solve disagree on feasibility")
                    }
                }
            } else {
                println!("FEASIBLE");
                println!("{}", show_vec(labels.iter().map(show_ext)));
                rep.outcome
                    .validate(&g, &cfg.tol)
                    .map_err(|e| anyhow!("emitted solution failed re-validation: {e}"))?;
            }
            EXIT_FEASIBLE
        }
        SolveOutcome::Infeasible { phase, node, side, evidence } => {
            print_infeasible(*phase, *node, *side, evidence);
            rep.outcome
                .validate(&g, &cfg.tol)
                .map_err(|e| anyhow!("emitted certificate failed re-validation: {e}"))?;
            EXIT_INFEASIBLE
        }
    };
    let meta = Finish {
        file,
        solver: "m2vpi",
        method: opts.method_name(),
        verdict: verdict_name(code),
        wall_ms,
        oracle_calls: None,
    };
    finish(opts, meta, &multiphase_trace_csv(&rep.phases), report::phases_to_iterations(&rep.phases))?;
    Ok(code)
}

fn cmd_2vpi(file: &Path, opts: &SolveOpts) -> Result<i32> {
    let text = read_instance(file)?;
    let sys = located(file, formats::parse_2vpi(&text, opts.mode()))?;
    let cfg = opts.config();
    let start = Instant::now();
    let red = match reduce_2vpi(&sys) {
        Ok(red) => red,
        Err(e) => {
            println!("INFEASIBLE");
            println!("evidence trivial_row");
            println!("detail {e}");
            let meta = Finish {
                file,
                solver: "2vpi",
                method: opts.method_name(),
                verdict: "infeasible",
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                oracle_calls: None,
            };
            finish(opts, meta, &multiphase_trace_csv(&[]), Vec::new())?;
            return Ok(EXIT_INFEASIBLE);
        }
    };
    let rep = solve_m2vpi(&red.graph, &cfg).context("solver failed")?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let code = match &rep.outcome {
        SolveOutcome::MaxSolution { .. } => {
            match recover_finite_solution(&red.graph, &cfg).context("recovery failed")? {
                RecoveryOutcome::Point { y } => {
                    let point = red.back_map(&y);
                    println!("FEASIBLE");
                    println!("{}", show_vec(point.iter()));
                    if !sys.satisfied_by(&point, &cfg.tol) {
                        bail!("emitted solution failed re-validation");
                    }
                }
                RecoveryOutcome::Infeasible { .. } => {
                    bail!("recovery and the primary solve disagree on feasibility")
                }
            }
            EXIT_FEASIBLE
        }
        SolveOutcome::Infeasible { phase, node, side, evidence } => {
            // The certificate lives in the reduced monotone system: variable
            // u splits into nodes 2u (upper copy) and 2u+1 (negated copy).
            print_infeasible(*phase, *node, *side, evidence);
            rep.outcome
                .validate(&red.graph, &cfg.tol)
                .map_err(|e| anyhow!("emitted certificate failed re-validation: {e}"))?;
            EXIT_INFEASIBLE
        }
    };
    let meta = Finish {
        file,
        solver: "2vpi",
        method: opts.method_name(),
        verdict: verdict_name(code),
        wall_ms,
        oracle_calls: None,
    };
    finish(opts, meta, &multiphase_trace_csv(&rep.phases), report::phases_to_iterations(&rep.phases))?;
    Ok(code)
}

fn cmd_dmdp(file: &Path, opts: &SolveOpts) -> Result<i32> {
    let text = read_instance(file)?;
    let inst = located(file, formats::parse_dmdp(&text, opts.mode()))?;
    let cfg = opts.config();
    let start = Instant::now();
    let rep = solve_dmdp(&inst, &cfg).context("solver failed")?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let code = match &rep.outcome {
        SolveOutcome::MaxSolution { labels } => {
            println!("FEASIBLE");
            println!("{}", show_vec(labels.iter().map(show_ext)));
            let policy = rep.policy.as_ref().context("feasible run must carry a policy")?;
            println!("policy: {}", show_vec(policy.iter()));
            rep.outcome
                .validate(inst.graph(), &cfg.tol)
                .map_err(|e| anyhow!("emitted solution failed re-validation: {e}"))?;
            check_policy(inst.graph(), labels, policy, &cfg.tol)?;
            EXIT_FEASIBLE
        }
        SolveOutcome::Infeasible { phase, node, side, evidence } => {
            print_infeasible(*phase, *node, *side, evidence);
            rep.outcome
                .validate(inst.graph(), &cfg.tol)
                .map_err(|e| anyhow!("emitted certificate failed re-validation: {e}"))?;
            EXIT_INFEASIBLE
        }
    };
    let meta = Finish {
        file,
        solver: "dmdp",
        method: opts.method_name(),
        verdict: verdict_name(code),
        wall_ms,
        oracle_calls: None,
    };
    finish(opts, meta, &multiphase_trace_csv(&rep.phases), report::phases_to_iterations(&rep.phases))?;
    Ok(code)
}

fn mask_elements(mask: u32) -> String {
    let elems: Vec<usize> = (0..32).filter(|i| mask & (1 << i) != 0).collect();
    show_vec(elems.iter())
}

fn cmd_sfm(file: &Path, opts: &SolveOpts) -> Result<i32> {
    let text = read_instance(file)?;
    let (h, a) = located(file, formats::parse_sfm(&text, opts.mode()))?;
    let cfg = opts.config();
    let start = Instant::now();
    let res = fracopt::sfm::parametric_sfm(h.as_ref(), &a, &cfg).context("solver failed")?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    println!("delta_star {}", res.delta_star);
    println!("witness {}", mask_elements(res.witness));
    println!("iterations {}", res.iterations);
    println!("sfm_calls {}", res.sfm_calls);
    let h_star = h.eval(res.witness);
    let a_star = set_sum(&a, res.witness);
    if sign(&a_star, &cfg.tol) != Sign::Pos {
        bail!("emitted optimum failed re-validation: witness has nonpositive direction mass");
    }
    if sign(&(&h_star - &(&res.delta_star * &a_star)), &cfg.tol) != Sign::Zero {
        bail!("emitted optimum failed re-validation: witness does not attain delta_star");
    }
    let meta = Finish {
        file,
        solver: "sfm",
        method: opts.method_name(),
        verdict: "solved",
        wall_ms,
        oracle_calls: Some(res.sfm_calls),
    };
    finish(opts, meta, &trace_to_csv(&res.result.trace), report::single_phase(res.iterations))?;
    Ok(EXIT_FEASIBLE)
}

fn dot(w: &[Scalar], x: &[bool], mode: ArithMode) -> Scalar {
    let mut acc = Scalar::zero(mode);
    for (wi, &xi) in w.iter().zip(x) {
        if xi {
            acc = &acc + wi;
        }
    }
    acc
}

fn cmd_min_ratio(file: &Path, opts: &SolveOpts) -> Result<i32> {
    let text = read_instance(file)?;
    let mode = opts.mode();
    let (domain, c, d) = located(file, formats::parse_min_ratio(&text, mode))?;
    let cfg = opts.config();
    let start = Instant::now();
    let res = min_ratio(&c, &d, &domain, &cfg).context("solver failed")?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    println!("delta_star {}", res.delta_star);
    let bits: String = res.witness.iter().map(|&b| if b { '1' } else { '0' }).collect();
    println!("witness {bits}");
    println!("iterations {}", res.iterations);
    let num = dot(&c, &res.witness, mode);
    let den = dot(&d, &res.witness, mode);
    if sign(&den, &cfg.tol) != Sign::Pos {
        bail!("emitted optimum failed re-validation: witness has nonpositive denominator");
    }
    if sign(&(&num - &(&res.delta_star * &den)), &cfg.tol) != Sign::Zero {
        bail!("emitted optimum failed re-validation: witness does not attain delta_star");
    }
    let meta = Finish {
        file,
        solver: "min-ratio",
        method: opts.method_name(),
        verdict: "solved",
        wall_ms,
        oracle_calls: None,
    };
    finish(opts, meta, &trace_to_csv(&res.result.trace), report::single_phase(res.iterations))?;
    Ok(EXIT_FEASIBLE)
}

// ---------------------------------------------------------------------------
// Method comparison.
// ---------------------------------------------------------------------------

fn phase_iters(phases: &[PhaseReport], k: usize) -> usize {
    phases
        .get(k)
        .and_then(|p| p.newton.as_ref())
        .map_or(0, |n| n.result.iterations())
}

/// Print verdict and per-phase iteration counts for both methods; verdicts
/// (and labels, in rational mode) must agree.
fn compare_multiphase(
    mode: ArithMode,
    accelerated: (&SolveOutcome, &[PhaseReport]),
    plain: (&SolveOutcome, &[PhaseReport]),
) -> Result<i32> {
    let (la_out, la_phases) = accelerated;
    let (st_out, st_phases) = plain;
    let la_feasible = matches!(la_out, SolveOutcome::MaxSolution { .. });
    let st_feasible = matches!(st_out, SolveOutcome::MaxSolution { .. });
    if la_feasible != st_feasible {
        bail!("methods disagree on feasibility");
    }
    if mode == ArithMode::Rational {
        if let (
            SolveOutcome::MaxSolution { labels: la_labels },
            SolveOutcome::MaxSolution { labels: st_labels },
        ) = (la_out, st_out)
        {
            if la_labels != st_labels {
                bail!("methods disagree on the maximal solution");
            }
        }
    }
    println!("verdict {}", if la_feasible { "FEASIBLE" } else { "INFEASIBLE" });
    let rows = la_phases.len().max(st_phases.len());
    let mut la_total = 0;
    let mut st_total = 0;
    for k in 0..rows {
        let p = la_phases.get(k).or_else(|| st_phases.get(k)).expect("k < rows");
        let la = phase_iters(la_phases, k);
        let st = phase_iters(st_phases, k);
        la_total += la;
        st_total += st;
        println!(
            "phase {} node {} side {} lookahead {la} standard {st}",
            p.phase,
            p.node,
            report::side_name(p.side),
        );
    }
    println!("total lookahead {la_total} standard {st_total}");
    Ok(if la_feasible { EXIT_FEASIBLE } else { EXIT_INFEASIBLE })
}

/// `delta_star` equality plus iteration counts for the single-search solvers.
fn compare_single(
    mode: ArithMode,
    tol: &Tolerance,
    la: (&Scalar, usize),
    st: (&Scalar, usize),
) -> Result<i32> {
    let agree = match mode {
        ArithMode::Rational => la.0 == st.0,
        ArithMode::Float => sign(&(la.0 - st.0), tol) == Sign::Zero,
    };
    if !agree {
        bail!("methods disagree on delta_star: {} vs {}", la.0, st.0);
    }
    println!("delta_star {}", la.0);
    println!("phase 0 lookahead {} standard {}", la.1, st.1);
    println!("total lookahead {} standard {}", la.1, st.1);
    Ok(EXIT_FEASIBLE)
}

fn cmd_compare(file: &Path, opts: &SolveOpts) -> Result<i32> {
    let text = read_instance(file)?;
    let mode = opts.mode();
    let la_cfg = opts.config_for(Method::LookAhead);
    let st_cfg = opts.config_for(Method::Standard);
    let start = Instant::now();
    let (code, solver, trace_csv, phases, oracle_calls) =
        match located(file, formats::parse_instance(&text, mode))? {
            Instance::M2vpi(g) => {
                let la = solve_m2vpi(&g, &la_cfg).context("solver failed")?;
                let st = solve_m2vpi(&g, &st_cfg).context("solver failed")?;
                let code =
                    compare_multiphase(mode, (&la.outcome, &la.phases), (&st.outcome, &st.phases))?;
                let csv = multiphase_trace_csv(&la.phases);
                let iters = report::phases_to_iterations(&la.phases);
                (code, "m2vpi", csv, iters, None)
            }
            Instance::Tvpi(sys) => match reduce_2vpi(&sys) {
                Err(e) => {
                    println!("verdict INFEASIBLE");
                    println!("detail {e}");
                    println!("total lookahead 0 standard 0");
                    (EXIT_INFEASIBLE, "2vpi", multiphase_trace_csv(&[]), Vec::new(), None)
                }
                Ok(red) => {
                    let la = solve_m2vpi(&red.graph, &la_cfg).context("solver failed")?;
                    let st = solve_m2vpi(&red.graph, &st_cfg).context("solver failed")?;
                    let code = compare_multiphase(
                        mode,
                        (&la.outcome, &la.phases),
                        (&st.outcome, &st.phases),
                    )?;
                    let csv = multiphase_trace_csv(&la.phases);
                    let iters = report::phases_to_iterations(&la.phases);
                    (code, "2vpi", csv, iters, None)
                }
            },
            Instance::Dmdp(inst) => {
                let la = solve_dmdp(&inst, &la_cfg).context("solver failed")?;
                let st = solve_dmdp(&inst, &st_cfg).context("solver failed")?;
                let code =
                    compare_multiphase(mode, (&la.outcome, &la.phases), (&st.outcome, &st.phases))?;
                let csv = multiphase_trace_csv(&la.phases);
                let iters = report::phases_to_iterations(&la.phases);
                (code, "dmdp", csv, iters, None)
            }
            Instance::Sfm { h, a } => {
                let la =
                    fracopt::sfm::parametric_sfm(h.as_ref(), &a, &la_cfg).context("solver failed")?;
                let st =
                    fracopt::sfm::parametric_sfm(h.as_ref(), &a, &st_cfg).context("solver failed")?;
                let code = compare_single(
                    mode,
                    &la_cfg.tol,
                    (&la.delta_star, la.iterations),
                    (&st.delta_star, st.iterations),
                )?;
                let csv = trace_to_csv(&la.result.trace);
                (code, "sfm", csv, report::single_phase(la.iterations), Some(la.sfm_calls))
            }
            Instance::MinRatio { domain, c, d } => {
                let la = min_ratio(&c, &d, &domain, &la_cfg).context("solver failed")?;
                let st = min_ratio(&c, &d, &domain, &st_cfg).context("solver failed")?;
                let code = compare_single(
                    mode,
                    &la_cfg.tol,
                    (&la.delta_star, la.iterations),
                    (&st.delta_star, st.iterations),
                )?;
                let csv = trace_to_csv(&la.result.trace);
                (code, "min-ratio", csv, report::single_phase(la.iterations), None)
            }
        };
    let meta = Finish {
        file,
        solver,
        method: "both",
        verdict: if code == EXIT_FEASIBLE { "feasible" } else { "infeasible" }.into(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        oracle_calls,
    };
    finish(opts, meta, &trace_csv, phases)?;
    Ok(code)
}

// ---------------------------------------------------------------------------
// Instance generation.
// ---------------------------------------------------------------------------

fn cmd_gen(format: GenFormat, seed: u64, max_n: Option<usize>, max_m: Option<usize>) -> Result<i32> {
    let seed = match std::env::var("NEWTON_FRAC_SEED") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|_| anyhow!("NEWTON_FRAC_SEED must be an unsigned integer, got `{s}`"))?,
        Err(_) => seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match format {
        GenFormat::M2vpi => formats::emit_m2vpi(&generate::random_m2vpi(
            &mut rng,
            max_n.unwrap_or(6),
            max_m.unwrap_or(12),
        )),
        GenFormat::Tvpi => formats::emit_2vpi(&generate::random_2vpi(&mut rng, max_n.unwrap_or(5))),
        GenFormat::Dmdp => formats::emit_dmdp(&generate::random_dmdp(
            &mut rng,
            max_n.unwrap_or(6),
            max_m.unwrap_or(3),
        )),
        GenFormat::Sfm => {
            let (h, a) = generate::random_sfm(&mut rng, max_n.unwrap_or(8));
            formats::emit_sfm_table(h.as_ref(), &a)
        }
        GenFormat::MinRatio => {
            let (domain, c, d) =
                generate::random_min_ratio(&mut rng, max_n.unwrap_or(8), max_m.unwrap_or(40));
            formats::emit_min_ratio(&domain, &c, &d)
        }
    };
    print!("{out}");
    Ok(EXIT_FEASIBLE)
}
