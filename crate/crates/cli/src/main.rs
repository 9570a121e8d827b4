//! `dgbo`: command-line front end for the experiments.
//!
//! Exit codes: 0 success, 1 internal or I/O error, 2 invalid input,
//! 3 a numerical invariant or checked bound failed.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use dgbo::combinatorics::randomized_lemma_check;
use dgbo::diagnostics::{
    counterexample_scan, normal_form_residual, predicted_smoothing, smoothing_table, NormalFormOptions, Summary,
};
use dgbo::resonance::PartitionConstants;
use dgbo::scan::{bound_scan, ScanReport};
use dgbo::solver::{conserved_quantities, integrate, load_trajectory, save_trajectory, Trajectory};
use dgbo::spectral::hs_norm;

use config::{Config, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "dgbo", version, about = "Dispersive equation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    common: Common,
    /// Read a trajectory saved by `simulate` instead of integrating the
    /// `simulation` section.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the `simulation` section and save the trajectory.
    Simulate(Common),
    /// Smoothing table of the nonlinear part against the free evolution.
    Smoothing(TrajectoryArgs),
    /// Residual of the normal-form identity along a trajectory.
    Normalform(TrajectoryArgs),
    /// Growth of the quadratic Duhamel term on two-mode data.
    Counterexample(Common),
    /// Seeded randomized check of the exact algebraic identities.
    LemmaCheck(Common),
    /// Brute-force bound scans.
    Scan(Common),
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<dgbo::Error>() {
            Some(e) => core_code(e),
            None if err.downcast_ref::<serde_json::Error>().is_some() => 2,
            None => 1,
        };
        Failure { code, err }
    }
}

impl From<dgbo::Error> for Failure {
    fn from(e: dgbo::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn core_code(e: &dgbo::Error) -> u8 {
    use dgbo::Error::*;
    match e {
        InvalidParameter(_)
        | ZeroFrequency(_)
        | IndexOutOfRange { .. }
        | LengthMismatch { .. }
        | AliasingBudget { .. }
        | InsufficientSnapshots(_) => 2,
        BlowUp { .. } | InvariantViolation(_) | RealityViolation { .. } => 3,
        Io(_) | Json(_) => 1,
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        err: anyhow!(msg.into()),
    }
}

fn violated(msg: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        err: anyhow!(msg.into()),
    }
}

type Run<T> = std::result::Result<T, Failure>;

struct Session {
    cfg: Config,
    out: PathBuf,
    seed: u64,
    consts: PartitionConstants,
    provenance: serde_json::Value,
}

fn prepare(common: &Common, command: &str) -> Run<Session> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!(e))?;
    }
    let bytes = fs::read(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))
        .map_err(|err| Failure { code: 2, err })?;
    let cfg: Config = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing {}", common.config.display()))
        .map_err(|err| Failure { code: 2, err })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(invalid(format!(
            "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    let consts = cfg.partition_constants.unwrap_or_default();
    consts.validate()?;
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    let digest = Sha256::digest(&bytes);
    let provenance = json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "dgbo",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_sha256": digest.iter().map(|b| format!("{b:02x}")).collect::<String>(),
        "seed": seed,
        "partition_constants": consts,
    });
    Ok(Session {
        cfg,
        out: common.out.clone(),
        seed,
        consts,
        provenance,
    })
}

fn write(path: &Path, contents: &str) -> Run<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_summary(ctx: &Session, summary: &Summary) -> Run<()> {
    let mut value = serde_json::to_value(summary).map_err(anyhow::Error::from)?;
    value["provenance"] = ctx.provenance.clone();
    write(
        &ctx.out.join("summary.json"),
        &serde_json::to_string_pretty(&value).map_err(anyhow::Error::from)?,
    )
}

fn run_simulation(ctx: &Session) -> Run<(Trajectory, Vec<f64>)> {
    let section = ctx
        .cfg
        .simulation
        .as_ref()
        .ok_or_else(|| invalid("config has no `simulation` section"))?;
    section.sim.validate()?;
    let g = section.initial.build(&section.sim, ctx.seed)?;
    Ok((integrate(&section.sim, &g)?, section.norms.clone()))
}

fn obtain_trajectory(ctx: &Session, saved: Option<&Path>) -> Run<Trajectory> {
    match saved {
        Some(dir) => {
            let (traj, _) = load_trajectory(dir).map_err(|e| match e {
                dgbo::Error::Io(_) | dgbo::Error::Json(_) => Failure {
                    code: 2,
                    err: anyhow!("cannot read trajectory {}: {e}", dir.display()),
                },
                e => e.into(),
            })?;
            Ok(traj)
        }
        None => Ok(run_simulation(ctx)?.0),
    }
}

fn simulate(common: &Common) -> Run<()> {
    let ctx = prepare(common, "simulate")?;
    let (traj, norms) = run_simulation(&ctx)?;
    save_trajectory(&traj, &ctx.out, &ctx.consts, &norms)?;
    let sim = &traj.config;
    let q0 = conserved_quantities(traj.initial(), &sim.poly, &sim.sym);
    let (mut mass, mut energy) = (0.0f64, 0.0f64);
    for s in &traj.states {
        let q = conserved_quantities(s, &sim.poly, &sim.sym);
        mass = mass.max((q.mass - q0.mass).abs() / q0.mass.abs().max(f64::MIN_POSITIVE));
        energy = energy.max((q.energy - q0.energy).abs() / q0.energy.abs().max(f64::MIN_POSITIVE));
    }
    let final_norms: Vec<f64> = norms.iter().map(|&s| hs_norm(traj.last(), s)).collect();
    write_summary(
        &ctx,
        &Summary {
            experiment: "simulate".into(),
            params: serde_json::to_value(ctx.cfg.simulation.as_ref()).map_err(anyhow::Error::from)?,
            fitted_exponents: json!({}),
            residuals: json!({
                "max_relative_mass_drift": mass,
                "max_relative_energy_drift": energy,
                "final_hs_norms": norms.iter().zip(&final_norms).map(|(s, n)| json!({"s": s, "norm": n})).collect::<Vec<_>>(),
            }),
            pass: None,
        },
    )
}

fn smoothing(args: &TrajectoryArgs) -> Run<()> {
    let ctx = prepare(&args.common, "smoothing")?;
    let section = ctx
        .cfg
        .smoothing
        .clone()
        .ok_or_else(|| invalid("config has no `smoothing` section"))?;
    if section.a_grid.is_empty() {
        return Err(invalid("smoothing.a_grid is empty"));
    }
    let traj = obtain_trajectory(&ctx, args.trajectory.as_deref())?;
    let table = smoothing_table(&traj, traj.initial(), section.s, &section.a_grid);
    write(&ctx.out.join("smoothing.csv"), &table.to_csv())?;
    let degree = traj.config.poly.coefficients.len();
    let predicted = if degree >= 2 {
        Some(predicted_smoothing(degree, table.alpha, section.s))
    } else {
        None
    };
    let last = table.rows.last();
    write_summary(
        &ctx,
        &Summary {
            experiment: "smoothing".into(),
            params: json!({ "s": section.s, "a_grid": section.a_grid, "num_modes": table.num_modes, "alpha": table.alpha, "degree": degree }),
            fitted_exponents: json!({ "predicted_smoothing": predicted }),
            residuals: json!({
                "final_diff_norms": last.map(|r| r.diff_norms.clone()),
                "final_free_norms": last.map(|r| r.free_norms.clone()),
                "final_tail_gain": last.map(|r| r.tail_gain),
            }),
            pass: None,
        },
    )
}

fn normalform(args: &TrajectoryArgs) -> Run<()> {
    let ctx = prepare(&args.common, "normalform")?;
    let section = ctx
        .cfg
        .normalform
        .clone()
        .ok_or_else(|| invalid("config has no `normalform` section"))?;
    let traj = obtain_trajectory(&ctx, args.trajectory.as_deref())?;
    let opts = NormalFormOptions {
        depth_n: section.depth_n,
        depth_m: section.depth_m,
        s: section.s,
        consts: ctx.consts,
        truncation_check: section.truncation_check,
    };
    let report = normal_form_residual(&traj, &opts)?;
    write(&ctx.out.join("normalform.csv"), &report.to_csv())?;
    let pass = section.max_residual.map(|m| report.max_identity_residual <= m);
    write_summary(
        &ctx,
        &Summary {
            experiment: "normalform".into(),
            params: json!({
                "depth_n": report.depth_n,
                "depth_m": report.depth_m,
                "s": report.s,
                "num_modes": report.num_modes,
                "max_residual": section.max_residual,
                "tuple_counts": report.tuple_counts,
            }),
            fitted_exponents: json!({}),
            residuals: json!({
                "max_identity_residual": report.max_identity_residual,
                "max_truncation_residual": report.max_truncation_residual,
                "r1_level0_max": report.r1_level0_max,
            }),
            pass,
        },
    )?;
    if pass == Some(false) {
        return Err(violated(format!(
            "identity residual {:e} exceeds max_residual {:e}",
            report.max_identity_residual,
            section.max_residual.unwrap_or_default()
        )));
    }
    Ok(())
}

fn counterexample(common: &Common) -> Run<()> {
    let ctx = prepare(common, "counterexample")?;
    let section = ctx
        .cfg
        .counterexample
        .clone()
        .ok_or_else(|| invalid("config has no `counterexample` section"))?;
    let table = counterexample_scan(&section.n_list, section.s, section.a, &section.sym)?;
    write(&ctx.out.join("counterexample.csv"), &table.to_csv())?;
    write_summary(
        &ctx,
        &Summary {
            experiment: "counterexample".into(),
            params: json!({ "n_list": section.n_list, "s": table.s, "a": table.a, "alpha": table.alpha }),
            fitted_exponents: json!({ "fitted": table.fitted_exponent, "predicted": table.predicted_exponent }),
            residuals: json!({ "exponent_error": table.fitted_exponent - table.predicted_exponent }),
            pass: None,
        },
    )
}

fn lemma_check(common: &Common) -> Run<()> {
    let ctx = prepare(common, "lemma-check")?;
    let section = ctx
        .cfg
        .lemma_check
        .clone()
        .ok_or_else(|| invalid("config has no `lemma_check` section"))?;
    let report = randomized_lemma_check(
        ctx.seed,
        section.trials,
        section.zero_sum_max_n,
        section.multiset_max_m,
        section.multiset_trials,
    )?;
    let mut csv = String::from("check,trials,violations\n");
    for (name, t) in [
        ("zero_sum", &report.zero_sum),
        ("multiset", &report.multiset),
        ("max_equiv", &report.max_equiv),
    ] {
        csv.push_str(&format!("{name},{},{}\n", t.trials, t.violations));
    }
    write(&ctx.out.join("lemma_check.csv"), &csv)?;
    let violations = report.violations();
    write_summary(
        &ctx,
        &Summary {
            experiment: "lemma-check".into(),
            params: serde_json::to_value(&section).map_err(anyhow::Error::from)?,
            fitted_exponents: json!({}),
            residuals: serde_json::to_value(&report).map_err(anyhow::Error::from)?,
            pass: Some(violations == 0),
        },
    )?;
    if violations > 0 {
        return Err(violated(format!("{violations} identity violations")));
    }
    Ok(())
}

fn scan(common: &Common) -> Run<()> {
    let ctx = prepare(common, "scan")?;
    let section = ctx.cfg.scan.clone().ok_or_else(|| invalid("config has no `scan` section"))?;
    if section.requests.is_empty() || section.syms.is_empty() {
        return Err(invalid("scan needs at least one request and one symbol"));
    }
    let mut reports = Vec::new();
    for sym in &section.syms {
        sym.validate()?;
        for req in &section.requests {
            reports.push(bound_scan(req, sym, &ctx.consts)?);
        }
    }
    write(&ctx.out.join("scan.csv"), &ScanReport::to_csv(&reports))?;
    let violations: u64 = reports.iter().map(|r| r.violations).sum();
    write_summary(
        &ctx,
        &Summary {
            experiment: "scan".into(),
            params: serde_json::to_value(&section).map_err(anyhow::Error::from)?,
            fitted_exponents: json!({}),
            residuals: serde_json::to_value(&reports).map_err(anyhow::Error::from)?,
            pass: Some(violations == 0),
        },
    )?;
    if violations > 0 {
        return Err(violated(format!("{violations} tuples violate the scanned bounds")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Smoothing(a) => smoothing(a),
        Command::Normalform(a) => normalform(a),
        Command::Counterexample(c) => counterexample(c),
        Command::LemmaCheck(c) => lemma_check(c),
        Command::Scan(c) => scan(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
