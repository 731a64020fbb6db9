//! `nlgate` — command-line harness for the non-local gate simulator.
//!
//! Subcommands: `truth-table`, `bell`, `budget`, `phase-audit`, `sweep`.
//! Every run is fully determined by the resolved config (file + `NLGATE_*`
//! environment overrides + flags) and the seed; identical inputs produce
//! byte-identical outputs.
//!
//! Exit codes: 0 success, 2 config error, 3 herald starvation.

mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nlgate::imperfections::error_budget;
use nlgate::protocol::{phase_audit, Runner};
use nlgate::rng::substream;
use nlgate::tomography::{
    bell_analytic, bell_experiment, truth_table_analytic, truth_table_experiment, BellInput,
    TRUTH_BASIS_LABELS, TRUTH_IDEAL_OUTPUT,
};
use nlgate::Error as CoreError;

use config::{apply_env_overrides, apply_sweep_parameter, config_hash, FileConfig, Format};
use report::{matrix_series, Provenance, ReportBundle};

#[derive(Parser)]
#[command(
    name = "nlgate",
    version,
    about = "Simulator of a heralded non-local CNOT gate between two atom-cavity modules"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Heralded CNOT truth table (conditional output populations)
    TruthTable(RunArgs),
    /// Bell-state generation with full two-qubit state tomography
    Bell(RunArgs),
    /// Per-cause error budget against the all-off baseline
    Budget(RunArgs),
    /// Gate-phase audit (γ = 0, α = β, eigenstate preservation)
    PhaseAudit(RunArgs),
    /// Sweep one numeric parameter over a grid
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heralded events per truth-table input / Monte Carlo draws per budget cell
    #[arg(long)]
    shots: Option<u64>,
    /// Heralded events per Bell input
    #[arg(long)]
    heralds: Option<u64>,
    /// Closed-form expectation values instead of sampled counts
    #[arg(long)]
    analytic: bool,
    /// Output formats
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Parameter name (see docs/config-schema.md for the registry)
    #[arg(long)]
    parameter: Option<String>,
    /// Comma-separated grid values
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

enum CliError {
    Config(String),
    Starvation(String),
    Other(String),
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::HeraldStarvation { .. } => CliError::Starvation(e.to_string()),
            CoreError::Config(_) | CoreError::InvalidParameter(_) | CoreError::TruncationWeight { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::TruthTable(args) => run_experiment(args, "truth-table"),
        Cmd::Bell(args) => run_experiment(args, "bell"),
        Cmd::Budget(args) => run_experiment(args, "budget"),
        Cmd::PhaseAudit(args) => run_experiment(args, "phase-audit"),
        Cmd::Sweep(args) => run_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Starvation(msg)) => {
            eprintln!("herald starvation: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

struct Resolved {
    file: FileConfig,
    runner: Runner,
    canonical: String,
    hash: String,
}

fn resolve(args: &RunArgs) -> Result<Resolved, CliError> {
    let mut file = FileConfig::load(&args.config)?;
    apply_env_overrides(&mut file)?;
    if let Some(seed) = args.seed {
        file.run.seed = seed;
    }
    if let Some(out) = &args.out {
        file.run.out_dir = out.clone();
    }
    if let Some(shots) = args.shots {
        file.run.shots = shots;
    }
    if let Some(heralds) = args.heralds {
        file.run.heralds_target = heralds;
    }
    if args.analytic {
        file.run.analytic = true;
    }
    if let Some(formats) = &args.format {
        file.run.formats = formats.clone();
    }

    let cfg = file.to_protocol_config()?;
    let imp = file.to_imperfections()?;
    let canonical = file.canonical_toml();
    let hash = config_hash(&canonical);
    Ok(Resolved {
        file,
        runner: Runner::Physical { cfg, imp },
        canonical,
        hash,
    })
}

fn bundle(res: &Resolved, experiment: &str) -> Result<ReportBundle, CliError> {
    let mut b = ReportBundle::create(
        &res.file.run.out_dir,
        Provenance::new(experiment, &res.hash, res.file.run.seed),
    )?;
    b.write_raw("config.resolved.toml", &res.canonical)?;
    Ok(b)
}

fn wants(res: &Resolved, f: Format) -> bool {
    res.file.run.formats.contains(&f)
}

fn run_experiment(args: &RunArgs, experiment: &str) -> Result<(), CliError> {
    let res = resolve(args)?;
    match experiment {
        "truth-table" => truth_table(&res),
        "bell" => bell(&res),
        "budget" => budget(&res),
        "phase-audit" => audit(&res),
        _ => unreachable!(),
    }
}

fn truth_table(res: &Resolved) -> Result<(), CliError> {
    let run = &res.file.run;
    let result = if run.analytic {
        truth_table_analytic(&res.runner, run.shots as usize, run.seed)?
    } else {
        truth_table_experiment(&res.runner, run.shots, run.seed, run.attempts_cap)?
    };

    let mut b = bundle(res, "truth-table")?;
    if wants(res, Format::Json) {
        let table: Vec<Vec<f64>> = result.table.p.iter().map(|r| r.to_vec()).collect();
        b.write_result(json!({
            "mode": if run.analytic { "analytic" } else { "sampled" },
            "fidelity": result.fidelity,
            "fidelity_err": result.fidelity_err,
            "success_probability": result.success_probability,
            "heralds_per_input": result.heralds_per_input,
            "attempts": result.attempts,
            "inputs": TRUTH_BASIS_LABELS,
            "ideal_outputs": TRUTH_IDEAL_OUTPUT,
            "table": table,
        }))?;
    }
    if wants(res, Format::Csv) {
        let mut csv = String::from("input,output,probability,ideal\n");
        for (i, row) in result.table.p.iter().enumerate() {
            for (o, p) in row.iter().enumerate() {
                let ideal = if TRUTH_IDEAL_OUTPUT[i] == o { 1.0 } else { 0.0 };
                csv.push_str(&format!(
                    "{},{},{:.6},{}\n",
                    TRUTH_BASIS_LABELS[i], TRUTH_BASIS_LABELS[o], p, ideal
                ));
            }
        }
        b.write_csv("truth_table.csv", &csv)?;
        b.write_csv("plot_fig2_truth_table.csv", &csv)?;
    }
    println!(
        "truth-table fidelity {:.4} ± {:.4} (success probability {:.5})",
        result.fidelity, result.fidelity_err, result.success_probability
    );
    Ok(())
}

fn bell(res: &Resolved) -> Result<(), CliError> {
    let run = &res.file.run;
    let mut results = Vec::new();
    let mut json_entries = Vec::new();
    let mut fidelities_csv = String::from("input,target,fidelity,std_err,heralds,success_probability\n");
    let mut real_csv = String::from("state,row,col,value\n");
    let mut imag_csv = String::from("state,row,col,value\n");

    let mut starved: Option<CliError> = None;
    for (i, input) in BellInput::ALL.into_iter().enumerate() {
        use rand::Rng;
        let sub_seed: u64 = substream(run.seed, &["bell", input.key()], i as u64).random();
        let outcome = if run.analytic {
            bell_analytic(&res.runner, input, run.shots as usize, sub_seed).map(
                |(rho, fidelity, std_err)| (rho, fidelity, std_err, 0u64, None),
            )
        } else {
            bell_experiment(&res.runner, input, run.heralds_target, sub_seed, run.attempts_cap)
                .map(|r| {
                    let counts = r.counts.to_csv();
                    (r.rho, r.fidelity, r.std_err, r.heralds, Some((counts, r.success_probability)))
                })
        };
        match outcome {
            Ok((rho, fidelity, std_err, heralds, extra)) => {
                let success = extra.as_ref().map(|(_, s)| *s).unwrap_or(f64::NAN);
                fidelities_csv.push_str(&format!(
                    "{},{},{:.6},{:.6},{},{}\n",
                    input.key(),
                    input.target_name(),
                    fidelity,
                    std_err,
                    heralds,
                    if success.is_nan() { "-".into() } else { format!("{success:.6}") },
                ));
                matrix_series(&mut real_csv, input.target_name(), rho.matrix(), false);
                matrix_series(&mut imag_csv, input.target_name(), rho.matrix(), true);
                json_entries.push(json!({
                    "input": input.key(),
                    "target": input.target_name(),
                    "fidelity": fidelity,
                    "std_err": std_err,
                    "heralds": heralds,
                    "rho": rho.to_json(),
                }));
                results.push((input, fidelity, extra));
            }
            Err(CoreError::HeraldStarvation { .. }) if starved.is_none() => {
                let e = outcome_err(input);
                starved = Some(e);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mean: f64 = results.iter().map(|(_, f, _)| f).sum::<f64>() / results.len().max(1) as f64;
    let mut b = bundle(res, "bell")?;
    if wants(res, Format::Json) {
        b.write_result(json!({
            "mode": if run.analytic { "analytic" } else { "sampled" },
            "mean_fidelity": mean,
            "states": json_entries,
            "partial": starved.is_some(),
        }))?;
    }
    if wants(res, Format::Csv) {
        b.write_csv("bell_fidelities.csv", &fidelities_csv)?;
        b.write_csv("plot_fig3_real.csv", &real_csv)?;
        b.write_csv("plot_figs1_imag.csv", &imag_csv)?;
        for (input, _, extra) in &results {
            if let Some((counts, _)) = extra {
                b.write_csv(&format!("counts_{}.csv", input.key()), counts)?;
            }
        }
    }
    if let Some(e) = starved {
        return Err(e);
    }
    println!("mean Bell fidelity {mean:.4}");
    Ok(())
}

fn outcome_err(input: BellInput) -> CliError {
    CliError::Starvation(format!(
        "bell input {} could not reach the herald target; partial report written",
        input.key()
    ))
}

fn budget(res: &Resolved) -> Result<(), CliError> {
    let (cfg, imp) = match &res.runner {
        Runner::Physical { cfg, imp } => (cfg.clone(), *imp),
        _ => unreachable!(),
    };
    let run = &res.file.run;
    let budget = error_budget(&cfg, &imp, run.shots as usize, run.seed)?;

    let mut b = bundle(res, "budget")?;
    if wants(res, Format::Json) {
        b.write_result(json!({
            "baseline_truth": budget.baseline_truth,
            "baseline_bell": budget.baseline_bell,
            "rows": budget.to_json()["rows"].clone(),
            "total": budget.to_json()["total"].clone(),
        }))?;
    }
    if wants(res, Format::Csv) {
        b.write_csv("budget.csv", &budget.to_csv())?;
    }
    println!(
        "budget: all-on truth {:.4}, bell {:.4}",
        budget.baseline_truth - budget.total.delta_f_truth,
        budget.baseline_bell - budget.total.delta_f_bell
    );
    Ok(())
}

fn audit(res: &Resolved) -> Result<(), CliError> {
    let run = &res.file.run;
    let audit = phase_audit(&res.runner, run.audit_draws as usize, run.seed)?;
    let mut b = bundle(res, "phase-audit")?;
    if wants(res, Format::Json) {
        b.write_result(json!({
            "gamma_zero_fidelity": audit.gamma_zero_fidelity,
            "alpha_equals_beta_fidelity": audit.alpha_equals_beta_fidelity,
            "eigenstate_preservation": audit.eigenstate_preservation,
        }))?;
    }
    if wants(res, Format::Csv) {
        b.write_csv(
            "phase_audit.csv",
            &format!(
                "gamma_zero_fidelity,alpha_equals_beta_fidelity,eigenstate_preservation\n{:.6},{:.6},{:.6}\n",
                audit.gamma_zero_fidelity,
                audit.alpha_equals_beta_fidelity,
                audit.eigenstate_preservation
            ),
        )?;
    }
    println!(
        "phase audit: ({:.4}, {:.4}, {:.4})",
        audit.gamma_zero_fidelity, audit.alpha_equals_beta_fidelity, audit.eigenstate_preservation
    );
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let res = resolve(&args.run)?;
    let (parameter, mut grid) = match (&args.parameter, &args.grid, &res.file.sweep) {
        (Some(p), Some(g), _) => (p.clone(), g.clone()),
        (None, None, Some(s)) => (s.parameter.clone(), s.grid.clone()),
        (Some(p), None, Some(s)) => (p.clone(), s.grid.clone()),
        (None, Some(g), Some(s)) => (s.parameter.clone(), g.clone()),
        _ => {
            return Err(CliError::Config(
                "sweep needs --parameter and --grid (or a [sweep] config section)".into(),
            ))
        }
    };
    if grid.is_empty() {
        return Err(CliError::Config("empty sweep grid".into()));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite-or-inf grid"));

    let run = &res.file.run;
    let draws = run.shots as usize;
    let mut csv = String::from(
        "parameter,value,success_probability,truth_fidelity,bell_fidelity_mean,f_phi_plus,f_psi_plus,f_phi_minus,f_psi_minus\n",
    );
    let mut points = Vec::new();
    for (idx, &value) in grid.iter().enumerate() {
        let mut file = res.file.clone();
        apply_sweep_parameter(&mut file, &parameter, value)?;
        let cfg = file.to_protocol_config()?;
        let imp = file.to_imperfections()?;
        let runner = Runner::Physical { cfg, imp };
        use rand::Rng;
        let sub_seed: u64 = substream(run.seed, &["sweep", &parameter], idx as u64).random();

        let truth = truth_table_analytic(&runner, draws, sub_seed)?;
        let mut bells = Vec::new();
        for input in BellInput::ALL {
            bells.push(bell_analytic(&runner, input, draws, sub_seed)?.1);
        }
        let bell_mean = bells.iter().sum::<f64>() / 4.0;
        csv.push_str(&format!(
            "{},{},{:.6e},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            parameter,
            value,
            truth.success_probability,
            truth.fidelity,
            bell_mean,
            bells[0],
            bells[1],
            bells[2],
            bells[3]
        ));
        points.push(json!({
            "value": value,
            "success_probability": truth.success_probability,
            "truth_fidelity": truth.fidelity,
            "bell_fidelity_mean": bell_mean,
            "bell_fidelities": bells,
        }));
    }

    let mut b = bundle(&res, "sweep")?;
    if wants(&res, Format::Json) {
        b.write_result(json!({
            "parameter": parameter,
            "points": points,
        }))?;
    }
    if wants(&res, Format::Csv) {
        b.write_csv("sweep.csv", &csv)?;
    }
    println!("sweep over {parameter}: {} points", grid.len());
    Ok(())
}
