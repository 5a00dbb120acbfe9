//! Command-line front end.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::dump::MatrixDump;
use crate::error::{Error, Result};
use crate::metrics::{fidelity, nullifier_matrix, nullifier_variances, purity_check};
use crate::model_effective::{effective_steady, EffectiveFlags};
use crate::model_full::{assemble, steady_covariance, SteadyDump};
use crate::pipeline::{evaluate_point, PointStatus};
use crate::sweep::{optimize_chain, run_sweep, write_csv};
use crate::synthesis::PlanDump;
use crate::target::{check_constraints, target_covariance, TargetDump};

#[derive(Debug, Parser)]
#[command(
    name = "omcluster",
    version,
    about = "Steady-state cluster states of driven optomechanical arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Write a JSON (or CSV for `sweep`) artifact here.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the coupling plan with constraint and adiabaticity reports.
    Synthesize(Common),
    /// Solve the full model at one parameter point.
    Steady(Common),
    /// Sweep the grid from the `[sweep]` section and write CSV.
    Sweep(Common),
    /// Maximize the fidelity over (J0, J) within the `[optimize]` bounds.
    Optimize(Common),
    /// Ideal-model oracle and full-versus-effective comparison.
    Validate(Common),
    /// Target covariance and nullifier matrix.
    DumpTarget(Common),
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Unstable { .. } => 3,
        Error::Constraint(_) | Error::BareCouplingInfeasible { .. } | Error::Synthesis(_) => 4,
        _ => 1,
    }
}

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Validation { .. } => "validation",
        Error::BranchCut { .. } => "branch-cut",
        Error::SingularSuperoperator { .. } => "singular-superoperator",
        Error::Dimension(_) => "dimension",
        Error::Constraint(_) => "constraint",
        Error::Unstable { .. } => "unstable",
        Error::Synthesis(_) => "synthesis",
        Error::BareCouplingInfeasible { .. } => "bare-coupling-infeasible",
        Error::Optimization(_) => "optimization",
        Error::Config(_) => "config",
        Error::Numerical(_) => "numerical",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// One line, `error code=<n> kind=<kind> message="<text>"`.
pub fn error_line(err: &Error) -> String {
    let msg = err
        .to_string()
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', " ");
    format!(
        "error code={} kind={} message=\"{}\"",
        exit_code(err),
        error_kind(err),
        msg
    )
}

struct Report(String);

impl Report {
    fn new() -> Self {
        Report(String::new())
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key} = {value}");
    }

    fn sci(&mut self, key: &str, value: f64) {
        self.kv(key, format!("{value:.9e}"));
    }
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(p) = path {
        let mut w = BufWriter::new(File::create(p)?);
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(())
}

fn constraint_gate(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let spec = cfg.target_spec()?;
    let c = check_constraints(&spec);
    rep.sci("constraint.phase_residual", c.phase_residual);
    rep.sci("constraint.anticommutator_residual", c.anticommutator_residual);
    if !c.realizable() {
        print!("{}", rep.0);
        return Err(Error::Constraint(format!(
            "target is not realizable (phase residual {:.3e}, anticommutator residual {:.3e})",
            c.phase_residual, c.anticommutator_residual
        )));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synthesize(c) => synthesize_cmd(c),
        Command::Steady(c) => steady_cmd(c),
        Command::Sweep(c) => sweep_cmd(c),
        Command::Optimize(c) => optimize_cmd(c),
        Command::Validate(c) => validate_cmd(c),
        Command::DumpTarget(c) => dump_target_cmd(c),
    }
}

fn synthesize_cmd(c: Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let mut rep = Report::new();
    constraint_gate(&cfg, &mut rep)?;
    let scenario = cfg.scenario()?;
    let (plan, params) = scenario.prepare()?;
    let adi = crate::model_effective::adiabatic_report(&plan, &scenario.thresholds);
    rep.kv("n", plan.n());
    rep.kv("m", plan.m());
    rep.kv("policy", plan.policy);
    rep.kv(
        "detuning_signs",
        plan.detunings
            .iter()
            .map(|d| if *d > 0.0 { "+" } else { "-" })
            .collect::<Vec<_>>()
            .join(""),
    );
    rep.kv("detunings", format!("{:?}", plan.detunings));
    rep.kv("delta_omega", format!("{:?}", plan.delta_omega));
    rep.sci("round_trip_residual", plan.round_trip_residual);
    rep.sci("wj_residual", plan.wj_residual);
    rep.sci("g0_rotation", plan.g0_rotation);
    rep.sci("phi0", params.phi0);
    rep.sci("adiabatic.coupling_ratio", adi.coupling_ratio);
    rep.sci("adiabatic.dissipation_ratio", adi.dissipation_ratio);
    rep.sci("adiabatic.y_over_w", adi.y_over_w);
    rep.kv("adiabatic.valid", adi.valid);
    print!("{}", rep.0);
    let dump: PlanDump = plan.to_dump();
    write_json(&c.output, &dump)
}

#[derive(Serialize)]
struct SteadyArtifact {
    fidelity: f64,
    nullifier_variances: Vec<f64>,
    m: usize,
    steady: SteadyDump,
}

fn steady_cmd(c: Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let mut rep = Report::new();
    constraint_gate(&cfg, &mut rep)?;
    let outcome = evaluate_point(&cfg.scenario()?)?;
    rep.kv("m", outcome.plan.m());
    rep.sci("stability_margin", outcome.stability_margin);
    let metrics = match (outcome.status, outcome.metrics) {
        (PointStatus::Stable, Some(m)) => m,
        _ => {
            print!("{}", rep.0);
            return Err(Error::Unstable {
                margin: outcome.stability_margin,
            });
        }
    };
    rep.sci("fidelity", metrics.fidelity);
    rep.sci("max_nullifier_var", metrics.max_nullifier());
    rep.sci("min_nullifier_var", metrics.min_nullifier());
    rep.sci("min_symplectic", metrics.steady.min_symplectic);
    rep.kv("physical", metrics.steady.physical);
    rep.sci("lyapunov_residual", metrics.steady.lyapunov_residual);
    rep.sci("adiabatic.coupling_ratio", outcome.adiabatic.coupling_ratio);
    rep.sci("adiabatic.dissipation_ratio", outcome.adiabatic.dissipation_ratio);
    rep.sci("adiabatic.y_over_w", outcome.adiabatic.y_over_w);
    print!("{}", rep.0);
    write_json(
        &c.output,
        &SteadyArtifact {
            fidelity: metrics.fidelity,
            nullifier_variances: metrics.nullifier_variances.clone(),
            m: outcome.plan.m(),
            steady: metrics.steady.to_dump(),
        },
    )
}

fn sweep_cmd(c: Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let mut rep = Report::new();
    constraint_gate(&cfg, &mut rep)?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    let records = run_sweep(&cfg.scenario()?, sweep.axes, &sweep.a.values()?, &sweep.b.values()?)?;
    match c.output.or(sweep.output) {
        Some(path) => {
            write_csv(BufWriter::new(File::create(&path)?), sweep.axes, &records)?;
            let stable = records
                .iter()
                .filter(|r| r.status == crate::sweep::RecordStatus::Stable)
                .count();
            rep.kv("points", records.len());
            rep.kv("stable", stable);
            rep.kv("output", path.display());
            print!("{}", rep.0);
        }
        None => write_csv(std::io::stdout().lock(), sweep.axes, &records)?,
    }
    Ok(())
}

fn optimize_cmd(c: Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let mut rep = Report::new();
    constraint_gate(&cfg, &mut rep)?;
    let opt_cfg = cfg
        .optimize
        .clone()
        .ok_or_else(|| Error::Config("missing [optimize] section".into()))?;
    let best = optimize_chain(&cfg.scenario()?, opt_cfg.bounds(), opt_cfg.options())?;
    rep.sci("j0", best.j0);
    rep.sci("j", best.j);
    rep.sci("fidelity", best.fidelity);
    rep.sci("grid_fidelity", best.grid_fidelity);
    rep.kv("evaluations", best.evaluations);
    print!("{}", rep.0);
    write_json(&c.output, &best)
}

#[derive(Serialize)]
struct ValidationArtifact {
    ideal_fidelity: f64,
    full_vs_effective: Option<f64>,
    round_trip_residual: f64,
}

fn validate_cmd(c: Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let mut rep = Report::new();
    constraint_gate(&cfg, &mut rep)?;
    let scenario = cfg.scenario()?;
    let (plan, params) = scenario.prepare()?;
    rep.sci("round_trip_residual", plan.round_trip_residual);

    let target = target_covariance(&scenario.spec);
    let ideal = effective_steady(&plan, &params, EffectiveFlags::ideal())?;
    let ideal_fidelity = fidelity(&ideal.covariance, &target)?;
    rep.sci("ideal_fidelity", ideal_fidelity);
    rep.kv("ideal_oracle_pass", ideal_fidelity >= 1.0 - 1e-6);

    let full = steady_covariance(&assemble(&params, &plan)?, scenario.time);
    let eff = effective_steady(&plan, &params, EffectiveFlags::realistic());
    let relerr = match (full, eff) {
        (Ok(f), Ok(e)) => {
            let err = (&f.covariance - &e.covariance).norm() / f.covariance.norm();
            rep.sci("full_vs_effective_relerr", err);
            rep.kv("adiabatic_agreement_pass", err <= 0.05);
            Some(err)
        }
        (Err(Error::Unstable { margin }), _) | (_, Err(Error::Unstable { margin })) => {
            rep.sci("unstable_margin", margin);
            None
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let adi = crate::model_effective::adiabatic_report(&plan, &scenario.thresholds);
    rep.sci("adiabatic.coupling_ratio", adi.coupling_ratio);
    rep.sci("adiabatic.dissipation_ratio", adi.dissipation_ratio);
    rep.sci("adiabatic.y_over_w", adi.y_over_w);
    rep.kv("adiabatic.valid", adi.valid);
    print!("{}", rep.0);
    write_json(
        &c.output,
        &ValidationArtifact {
            ideal_fidelity,
            full_vs_effective: relerr,
            round_trip_residual: plan.round_trip_residual,
        },
    )
}

#[derive(Serialize)]
struct TargetArtifact {
    target: TargetDump,
    covariance: MatrixDump,
    nullifiers: MatrixDump,
    nullifier_variances: Vec<f64>,
    edges: Vec<(usize, usize)>,
}

fn dump_target_cmd(c: Common) -> Result<()> {
    let cfg = RunConfig::load(&c.config)?;
    let spec = cfg.target_spec()?;
    let e = target_covariance(&spec);
    let q = nullifier_matrix(&spec.graph, &spec.theta)?;
    let vars = nullifier_variances(&e, &q)?;
    let purity = purity_check(&e)?;
    let report = check_constraints(&spec);
    let mut rep = Report::new();
    rep.kv("n", spec.n());
    rep.sci("z", spec.z);
    rep.sci("det", purity.det);
    rep.sci("min_symplectic", purity.min_symplectic);
    rep.kv("realizable", report.realizable());
    rep.kv("nullifier_variances", format!("{vars:?}"));
    print!("{}", rep.0);
    let artifact = TargetArtifact {
        target: spec.to_dump(),
        covariance: MatrixDump::from_real(&e),
        nullifiers: MatrixDump::from_real(&q.q),
        nullifier_variances: vars,
        edges: spec.graph.edges().into_iter().map(|(a, b)| (a + 1, b + 1)).collect(),
    };
    write_json(&c.output, &artifact)
}
