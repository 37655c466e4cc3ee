//! Command-line front end: factor group targets over generator pairs,
//! synthesize control schedules, simulate them, and interrogate system
//! structure. Machine-readable JSON goes to stdout; human-readable tables go
//! to stderr under --verbose. Exit codes: 0 on success, 2 when a requested
//! verification fails (residual over tolerance, target not reachable), 1 on
//! any other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;
use spinsteer::matrix::SquareMatrix;
use spinsteer::schedule::{FactorSequence, PulseSchedule};
use spinsteer::sim::{simulate, SimSystem};
use spinsteer::so3::factorize_so3;
use spinsteer::su2::{
    control_authority, factorize_theorem2, lowenthal_order, pad_to_time, psi_of_control,
    steer_theorem3, Su2Problem,
};
use spinsteer::synth::{synth_full, SynthKnobs, TwoSpinTarget};
use spinsteer::twospin::SpinSystem;
use spinsteer::{Error, NumericPolicy};

#[derive(Parser)]
#[command(
    name = "spinsteer",
    version,
    about = "Exact control-schedule synthesis and simulation for one- and two-spin systems"
)]
struct Cli {
    /// Tolerance for pass/fail verification checks; also replaces the
    /// membership tolerance of the numeric policy.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Print human-readable tables on stderr alongside the JSON output.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factor a group target into alternating one-parameter subgroup legs.
    #[command(subcommand)]
    Decompose(DecomposeCmd),
    /// Build a control schedule that reaches a target.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Propagate a schedule from the identity and report the endpoint.
    Simulate(SimulateArgs),
    /// Numeric studies of the factorization parameters.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Report the controllability class of a two-spin system.
    Classify(ClassifyArgs),
    /// Large-time reachability membership test for a two-spin target.
    Reach(ReachArgs),
}

#[derive(Subcommand)]
enum DecomposeCmd {
    /// Factor an SU(2) target over the rails A + MB and A - MB.
    Su2(DecomposeSu2Args),
    /// Factor a rotation target over two fixed rotation generators.
    So3(DecomposeSo3Args),
}

#[derive(Args)]
struct DecomposeSu2Args {
    /// Drift generator file (2x2 traceless skew-Hermitian, matrix JSON).
    #[arg(long = "A")]
    a: PathBuf,
    /// Control generator file.
    #[arg(long = "B")]
    b: PathBuf,
    /// Control bound; rails run at min(M, authority).
    #[arg(long = "M")]
    m: f64,
    /// Target group element file.
    #[arg(long)]
    target: PathBuf,
}

#[derive(Args)]
struct DecomposeSo3Args {
    /// First rotation generator file (3x3 real skew, matrix JSON).
    #[arg(long = "Z1")]
    z1: PathBuf,
    /// Second rotation generator file.
    #[arg(long = "Z2")]
    z2: PathBuf,
    /// Target rotation file.
    #[arg(long)]
    target: PathBuf,
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Bang-bang schedule for a single spin, verified by forward simulation.
    OneSpin(SynthOneSpinArgs),
    /// Lab-frame schedule for a homonuclear Ising pair.
    TwoSpin(SynthTwoSpinArgs),
}

#[derive(Args)]
struct SynthOneSpinArgs {
    /// Drift generator file.
    #[arg(long = "A")]
    a: PathBuf,
    /// Control generator file.
    #[arg(long = "B")]
    b: PathBuf,
    /// Control bound.
    #[arg(long = "M")]
    m: f64,
    /// Target group element file.
    #[arg(long)]
    target: PathBuf,
    /// Stretch the schedule to end at exactly this time.
    #[arg(long = "T")]
    t: Option<f64>,
}

#[derive(Args)]
struct SynthTwoSpinArgs {
    /// Two-spin system file ({gamma1, gamma2, j, uz, m_bound, abc}).
    #[arg(long)]
    system: PathBuf,
    /// Block-diagonal special-unitary factor of the target (matrix JSON).
    #[arg(long = "Sf")]
    sf: PathBuf,
    /// Exchange phase time of the target (scaled units, >= 0).
    #[arg(long = "Tf")]
    tf: f64,
    /// Window count per steering block (defaults to the minimum feasible).
    #[arg(long)]
    nbar: Option<u32>,
    /// Total window count (defaults to the smallest nonnegative-padding fit).
    #[arg(long)]
    n: Option<i64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// System file: either two-spin parameters or {"A": ..., "B": ...}.
    #[arg(long)]
    system: PathBuf,
    /// Schedule file ({"segments": [...]}).
    #[arg(long)]
    schedule: PathBuf,
    /// Optional target to compare the endpoint against.
    #[arg(long)]
    target: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Tabulate the generator-pair cosine and factor count over a bound grid.
    Psi(AnalyzePsiArgs),
}

#[derive(Args)]
struct AnalyzePsiArgs {
    /// Drift generator file.
    #[arg(long = "A")]
    a: PathBuf,
    /// Control generator file.
    #[arg(long = "B")]
    b: PathBuf,
    /// Logarithmic bound grid "lo:hi:count", e.g. "0.01:100:200".
    #[arg(long)]
    grid: String,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Two-spin system file.
    #[arg(long)]
    system: PathBuf,
}

#[derive(Args)]
struct ReachArgs {
    /// Two-spin system file.
    #[arg(long)]
    system: PathBuf,
    /// Lab-frame duration at which reachability is tested.
    #[arg(long = "T")]
    t: f64,
    /// Target propagator file.
    #[arg(long)]
    target: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("--grid {0}: expected \"lo:hi:count\" with 0 < lo < hi and count >= 2")]
    Grid(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A command either passes or names the verification that failed; failures
/// still emit their JSON first so the caller can inspect the numbers.
enum Outcome {
    Pass,
    VerificationFailed(String),
}

/// System file for `simulate`: two-spin parameters or a one-spin generator
/// pair, told apart by their fields.
#[derive(Deserialize)]
#[serde(untagged)]
enum SystemFile {
    TwoSpin(SpinSystem),
    OneSpin {
        #[serde(rename = "A")]
        a: SquareMatrix,
        #[serde(rename = "B")]
        b: SquareMatrix,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed(what)) => {
            eprintln!("verification failed: {what}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Lib(Error::Verification(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let mut policy = NumericPolicy::default();
    if let Some(tol) = cli.tol {
        policy.membership_tol = tol;
    }
    match &cli.command {
        Cmd::Decompose(DecomposeCmd::Su2(args)) => decompose_su2(cli, &policy, args),
        Cmd::Decompose(DecomposeCmd::So3(args)) => decompose_so3(cli, &policy, args),
        Cmd::Synth(SynthCmd::OneSpin(args)) => synth_one_spin(cli, &policy, args),
        Cmd::Synth(SynthCmd::TwoSpin(args)) => synth_two_spin(cli, &policy, args),
        Cmd::Simulate(args) => run_simulate(cli, &policy, args),
        Cmd::Analyze(AnalyzeCmd::Psi(args)) => analyze_psi(cli, args),
        Cmd::Classify(args) => classify(cli, &policy, args),
        Cmd::Reach(args) => reach(cli, &policy, args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(value: &serde_json::Value) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn verdict(ok: bool, what: &str) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::VerificationFailed(what.to_string())
    }
}

/// Factor-sequence verification summary: residual of the replayed product,
/// factor count, and the order-of-generation bound it must respect.
fn verify_block(
    sequence: &FactorSequence,
    residual: f64,
    psi: f64,
    tol: f64,
) -> serde_json::Value {
    let order = lowenthal_order(psi).ok();
    json!({
        "residual": residual,
        "factor_count": sequence.factor_count(),
        "order": order,
        "max_factors": order.map(|s| s + 1),
        "tol": tol,
        "ok": residual <= tol,
    })
}

fn print_sequence_table(seq: &FactorSequence) {
    eprintln!("{:>4}  {:<6} {:>18}  {:>12}", "step", "gen", "duration", "kbar");
    for (i, s) in seq.steps.iter().enumerate() {
        let kbar = s
            .kbar
            .map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        eprintln!("{i:>4}  {:<6} {:>18.12}  {kbar:>12}", format!("{:?}", s.gen), s.t);
    }
}

fn decompose_su2(
    cli: &Cli,
    policy: &NumericPolicy,
    args: &DecomposeSu2Args,
) -> Result<Outcome, CliError> {
    let a: SquareMatrix = read_json(&args.a)?;
    let b: SquareMatrix = read_json(&args.b)?;
    let xf: SquareMatrix = read_json(&args.target)?;
    let problem = Su2Problem::new(a.clone(), b.clone(), args.m)?;

    let k = problem.control_authority();
    let amp = if k.is_finite() && k > 0.0 {
        args.m.min(k)
    } else {
        args.m
    };
    let z1 = a.add(&b.scale(amp))?;
    let z2 = a.sub(&b.scale(amp))?;
    let fact = factorize_theorem2(&z1, &z2, &xf, policy)?;
    let schedule = steer_theorem3(&problem, &xf, policy)?;

    let psi = psi_of_control(&a, &b, amp);
    let tol = cli.tol.unwrap_or(1e-9);
    let verify = verify_block(&fact.sequence, fact.sequence.residual, psi, tol);
    let ok = fact.sequence.residual <= tol;
    emit(&json!({
        "group": "su2",
        "amp": amp,
        "authority": k,
        "psi": psi,
        "m": fact.m,
        "t1": fact.t1,
        "t2": fact.t2,
        "t3": fact.t3,
        "phi": fact.phi,
        "euler": { "alpha": fact.euler.alpha, "beta": fact.euler.beta, "gamma": fact.euler.gamma },
        "sequence": serde_json::to_value(&fact.sequence)?,
        "schedule": serde_json::to_value(&schedule)?,
        "verify": verify,
    }))?;
    if cli.verbose {
        eprintln!(
            "factored target with m = {} blocks at rail {amp:.6} (psi = {psi:.6})",
            fact.m
        );
        print_sequence_table(&fact.sequence);
        eprintln!(
            "schedule: {} segments, total time {:.9}, peak control {:.6}",
            schedule.segments.len(),
            schedule.total_time(),
            schedule.peak_control()
        );
    }
    Ok(verdict(ok, "factor-sequence residual over tolerance"))
}

fn decompose_so3(
    cli: &Cli,
    policy: &NumericPolicy,
    args: &DecomposeSo3Args,
) -> Result<Outcome, CliError> {
    let z1: SquareMatrix = read_json(&args.z1)?;
    let z2: SquareMatrix = read_json(&args.z2)?;
    let xf: SquareMatrix = read_json(&args.target)?;
    let fact = factorize_so3(&z1, &z2, &xf, policy)?;
    let residual = fact.sequence.product()?.dist(&xf);
    let psi = spinsteer::su2::psi_angle(&z1, &z2)?;

    let tol = cli.tol.unwrap_or(1e-9);
    let verify = verify_block(&fact.sequence, residual, psi, tol);
    emit(&json!({
        "group": "so3",
        "psi": psi,
        "m": fact.m,
        "x": fact.x,
        "phi2": fact.phi2,
        "y": fact.y,
        "euler": { "alpha": fact.euler.alpha, "beta": fact.euler.beta, "gamma": fact.euler.gamma },
        "sequence": serde_json::to_value(&fact.sequence)?,
        "verify": verify,
    }))?;
    if cli.verbose {
        eprintln!(
            "factored rotation with m = {} blocks (psi = {psi:.6})",
            fact.m
        );
        print_sequence_table(&fact.sequence);
    }
    Ok(verdict(
        residual <= tol,
        "factor-sequence residual over tolerance",
    ))
}

fn synth_one_spin(
    cli: &Cli,
    policy: &NumericPolicy,
    args: &SynthOneSpinArgs,
) -> Result<Outcome, CliError> {
    let a: SquareMatrix = read_json(&args.a)?;
    let b: SquareMatrix = read_json(&args.b)?;
    let xf: SquareMatrix = read_json(&args.target)?;
    let problem = Su2Problem::new(a.clone(), b.clone(), args.m)?;
    let mut schedule = steer_theorem3(&problem, &xf, policy)?;
    if let Some(t) = args.t {
        schedule = pad_to_time(&problem, &schedule, t, policy)?;
    }

    // The schedule is certified by exact forward simulation.
    let res = simulate(&SimSystem::Su2 { a, b }, &schedule, Some(&xf), policy)?;
    let residual = res.residual_to_target.unwrap_or(0.0);
    let tol = cli.tol.unwrap_or(1e-8);
    emit(&json!({
        "schedule": serde_json::to_value(&schedule)?,
        "total_time": schedule.total_time(),
        "peak_control": schedule.peak_control(),
        "verify": { "residual": residual, "tol": tol, "ok": residual <= tol },
    }))?;
    if cli.verbose {
        eprintln!(
            "{} segments, total time {:.9}, peak control {:.6}, endpoint residual {residual:.3e}",
            schedule.segments.len(),
            schedule.total_time(),
            schedule.peak_control()
        );
    }
    Ok(verdict(residual <= tol, "simulated endpoint misses the target"))
}

fn synth_two_spin(
    cli: &Cli,
    policy: &NumericPolicy,
    args: &SynthTwoSpinArgs,
) -> Result<Outcome, CliError> {
    let sys: SpinSystem = read_json(&args.system)?;
    let sf: SquareMatrix = read_json(&args.sf)?;
    let target = TwoSpinTarget::new(args.tf, sf)?;
    let knobs = SynthKnobs {
        nbar: args.nbar,
        n: args.n,
    };
    let synth = synth_full(&sys, &target, &knobs, policy)?;

    let tol = cli.tol.unwrap_or(1e-8);
    let ok = synth.residual <= tol;
    emit(&json!({
        "synthesis": serde_json::to_value(&synth)?,
        "verify": { "residual": synth.residual, "tol": tol, "ok": ok },
    }))?;
    if cli.verbose {
        eprintln!(
            "windows: nbar = {}, n = {}; scaled duration {:.9} (declared {:.9}); \
             lab duration {:.9}",
            synth.nbar, synth.n, synth.scaled_total, synth.declared_total, synth.lab_total
        );
        eprintln!(
            "schedule: {} segments, peak control {:.6} (bound {:.6}), replay residual {:.3e}",
            synth.schedule.segments.len(),
            synth.schedule.peak_control(),
            sys.m_bound(),
            synth.residual
        );
    }
    Ok(verdict(ok, "replayed factor product misses the frame target"))
}

fn run_simulate(
    cli: &Cli,
    policy: &NumericPolicy,
    args: &SimulateArgs,
) -> Result<Outcome, CliError> {
    let system: SystemFile = read_json(&args.system)?;
    let schedule: PulseSchedule = read_json(&args.schedule)?;
    let target: Option<SquareMatrix> = match &args.target {
        Some(path) => Some(read_json(path)?),
        None => None,
    };

    // Bound violations are warnings, not errors: the simulation is exact
    // either way, but the schedule would not be realizable on the hardware.
    let sim_system = match system {
        SystemFile::TwoSpin(sys) => {
            let bound = sys.m_bound();
            let over: Vec<usize> = schedule
                .segments
                .iter()
                .enumerate()
                .filter(|(_, seg)| seg.peak_control() > bound + 1e-9)
                .map(|(i, _)| i)
                .collect();
            if !over.is_empty() {
                eprintln!(
                    "warning: control bound {bound} exceeded at segment(s) {over:?}"
                );
            }
            SimSystem::TwoSpin(sys)
        }
        SystemFile::OneSpin { a, b } => SimSystem::Su2 { a, b },
    };

    let res = simulate(&sim_system, &schedule, target.as_ref(), policy)?;
    let tol = cli.tol.unwrap_or(1e-8);
    let ok = res.residual_to_target.is_none_or(|r| r <= tol);
    let mut value = serde_json::to_value(&res)?;
    if target.is_some() {
        value["verify"] = json!({
            "residual": res.residual_to_target,
            "tol": tol,
            "ok": ok,
        });
    }
    emit(&value)?;
    if cli.verbose {
        eprintln!(
            "{} segments over {:.9}; unitarity drift {:.3e}{}",
            res.segments.len(),
            schedule.total_time(),
            res.unitarity_drift,
            res.residual_to_target
                .map_or_else(String::new, |r| format!("; target residual {r:.3e}"))
        );
    }
    Ok(verdict(ok, "simulated endpoint misses the target"))
}

fn analyze_psi(cli: &Cli, args: &AnalyzePsiArgs) -> Result<Outcome, CliError> {
    let a: SquareMatrix = read_json(&args.a)?;
    let b: SquareMatrix = read_json(&args.b)?;

    let parts: Vec<&str> = args.grid.split(':').collect();
    let bad = || CliError::Grid(args.grid.clone());
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(bad());
    }

    let k = control_authority(&a, &b);
    let rows: Vec<serde_json::Value> = (0..count)
        .map(|i| {
            let m = lo * (hi / lo).powf(i as f64 / (count - 1) as f64);
            let psi = psi_of_control(&a, &b, m);
            let order = lowenthal_order(psi).ok();
            json!({ "m": m, "abs_psi": psi.abs(), "order": order })
        })
        .collect();

    if cli.verbose {
        eprintln!("{:>18}  {:>18}  {:>6}", "M", "|psi(M)|", "s");
        for row in &rows {
            let order = row["order"]
                .as_u64()
                .map_or_else(|| "-".to_string(), |s| s.to_string());
            eprintln!(
                "{:>18.9} {:>18.12}  {order:>6}",
                row["m"].as_f64().unwrap_or(f64::NAN),
                row["abs_psi"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }
    emit(&json!({ "authority": k, "rows": rows }))?;
    Ok(Outcome::Pass)
}

fn classify(cli: &Cli, policy: &NumericPolicy, args: &ClassifyArgs) -> Result<Outcome, CliError> {
    let sys: SpinSystem = read_json(&args.system)?;
    let class = sys.classify(policy)?;
    emit(&json!({
        "class": serde_json::to_value(class)?,
        "algebra_dim": class.algebra_dim(),
    }))?;
    if cli.verbose {
        eprintln!("{class:?} (dynamical algebra dimension {})", class.algebra_dim());
    }
    Ok(Outcome::Pass)
}

fn reach(cli: &Cli, policy: &NumericPolicy, args: &ReachArgs) -> Result<Outcome, CliError> {
    let sys: SpinSystem = read_json(&args.system)?;
    let xf: SquareMatrix = read_json(&args.target)?;
    let member = sys.member_large_time(&xf, args.t, policy)?;
    let t_min = 36.0 * std::f64::consts::PI / sys.j().abs();
    emit(&json!({
        "member": member,
        "t": args.t,
        "t_min": t_min,
        "tol": policy.membership_tol,
    }))?;
    if cli.verbose {
        eprintln!(
            "target {} the reachable set at t = {} (pattern valid from t = {t_min:.6})",
            if member { "is in" } else { "is NOT in" },
            args.t
        );
    }
    Ok(verdict(member, "target is outside the large-time reachable set"))
}
