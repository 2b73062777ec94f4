//! Subcommand implementations and the CLI error-to-exit-code mapping.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rayon::prelude::*;
use serde_json::json;

use dpgossip::analysis::{fit_rate, high_prob_check, oracle_complexity};
use dpgossip::config::{parse_config, ConfigError, RunConfig};
use dpgossip::network::{build_network, Network};
use dpgossip::privacy::{cumulative_budget, PrivacyLedger};
use dpgossip::problems::{make_problem, Problem};
use dpgossip::rng::{derive_stream, Purpose};
use dpgossip::simulator::{run, validate_assumption4, Assumption4Report, Record, SimError};

use crate::io::{fmt_f64, trajectory_csv, read_trajectory, write_atomic};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Sim(SimError),
    Io { path: String, source: std::io::Error },
    Csv { path: String, source: csv::Error },
    Format { path: String, reason: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        CliError::Csv { path: path.display().to_string(), source }
    }

    /// Exit-code contract: 2 config error, 4 numerical divergence,
    /// 1 anything else (I/O, malformed artifacts).
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Sim(SimError::NumericalDivergence { .. }) => 4,
            CliError::Sim(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config: {e}"),
            CliError::Sim(e) => write!(f, "simulation: {e}"),
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
            CliError::Csv { path, source } => write!(f, "{path}: {source}"),
            CliError::Format { path, reason } => write!(f, "{path}: {reason}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}

fn build_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let mut rng = derive_stream(cfg.problem.data_seed, 0, 0, Purpose::Data);
    make_problem(
        cfg.problem_kind()?,
        cfg.problem.dim,
        cfg.network.n,
        cfg.problem.samples_per_node,
        cfg.problem.sample_bound,
        &mut rng,
    )
    .map_err(|e| CliError::Format { path: "problem".into(), reason: e.to_string() })
}

fn build_net(cfg: &RunConfig) -> Result<Network, CliError> {
    Ok(build_network(cfg.network.n, &cfg.topology()?, cfg.weight_rule()?)
        .map_err(ConfigError::Network)?)
}

fn assumption4_json(report: &Assumption4Report) -> serde_json::Value {
    json!({
        "gamma": report.gamma,
        "all_hold": report.all_hold(),
        "conditions": report.conditions.iter().map(|c| json!({
            "name": c.name,
            "holds": c.holds,
            "slack": c.slack,
        })).collect::<Vec<_>>(),
        "feasible_a2_interval": report.feasible_a2_interval,
        "feasible_a1_interval": report.feasible_a1_interval,
    })
}

/// The sidecar payload every artifact carries: the fully resolved config
/// plus the effective master seed.
fn sidecar(cfg: &RunConfig, master_seed: u64) -> serde_json::Value {
    json!({ "config": cfg, "master_seed": master_seed })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Format { path: path.display().to_string(), reason: e.to_string() })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Slope of log(mean gap) vs log(k) over the last half of the trajectory.
fn last_half_slope(records: &[Record]) -> Option<f64> {
    let start = records.len() / 2;
    let points: Vec<(f64, f64)> =
        records[start..].iter().map(|r| (r.k as f64, r.mean_gap)).collect();
    fit_rate(&points).ok().map(|f| f.slope)
}

pub fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<ExitCode, CliError> {
    let cfg = load_config(config)?;
    let spec = cfg.run_spec(seed)?;
    let net = build_net(&cfg)?;
    let problem = build_problem(&cfg)?;
    let report = validate_assumption4(&spec.schedules, &net, &problem, cfg.privacy.sigma_exp)?;
    let (traj, ledger) = run(&net, &problem, &spec)?;

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_atomic(&out.join("run.csv"), trajectory_csv(&traj.records).as_bytes())?;
    let summary = json!({
        "final_gap": traj.final_mean_gap(),
        "slope": last_half_slope(&traj.records),
        "cum_eps": ledger.cum_epsilon,
        "delta_hat": ledger.delta_hat,
        "assumption4": assumption4_json(&report),
        "sidecar": sidecar(&cfg, spec.seed),
    });
    write_json(&out.join("run.summary.json"), &summary)?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_sweep(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<ExitCode, CliError> {
    let cfg = load_config(config)?;
    let base_seed = seed.unwrap_or(cfg.run.seed);
    let (deltas, sigmas, n_seeds) = match &cfg.sweep {
        Some(s) => (
            if s.deltas.is_empty() { vec![cfg.quantizer.delta] } else { s.deltas.clone() },
            if s.sigma_exps.is_empty() { vec![cfg.privacy.sigma_exp] } else { s.sigma_exps.clone() },
            s.seeds.max(1),
        ),
        None => (vec![cfg.quantizer.delta], vec![cfg.privacy.sigma_exp], 1),
    };

    // each cell is a fully resolved config; indices (not float values) name
    // the files so the layout is stable across formatting choices
    let mut cells = Vec::new();
    for (di, &delta) in deltas.iter().enumerate() {
        for (si, &sigma) in sigmas.iter().enumerate() {
            for rep in 0..n_seeds {
                let mut cell_cfg = cfg.clone();
                cell_cfg.quantizer.delta = delta;
                cell_cfg.privacy.sigma_exp = sigma;
                cell_cfg.run.seed = base_seed.wrapping_add(rep as u64);
                cell_cfg.sweep = None;
                cells.push((di, si, rep, cell_cfg));
            }
        }
    }

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Format { path: "rayon".into(), reason: e.to_string() })?;
    let results: Vec<Result<(usize, usize, usize, f64, String), CliError>> =
        pool.install(|| {
            cells
                .par_iter()
                .map(|(di, si, rep, cell_cfg)| {
                    let spec = cell_cfg.run_spec(None)?;
                    let net = build_net(cell_cfg)?;
                    let problem = build_problem(cell_cfg)?;
                    let (traj, _) = run(&net, &problem, &spec)?;
                    let name = format!("cell_d{di}_s{si}_r{rep}.csv");
                    write_atomic(&out.join(&name), trajectory_csv(&traj.records).as_bytes())?;
                    write_json(
                        &out.join(format!("cell_d{di}_s{si}_r{rep}.sidecar.json")),
                        &sidecar(cell_cfg, spec.seed),
                    )?;
                    Ok((*di, *si, *rep, traj.final_mean_gap(), name))
                })
                .collect()
        });

    let mut index = String::from("delta,sigma_exp,seed,final_gap,file\n");
    let mut rows: Vec<(usize, usize, usize, f64, String)> = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    rows.sort_by_key(|&(di, si, rep, _, _)| (di, si, rep));
    for (di, si, rep, final_gap, name) in rows {
        let _ = writeln!(
            index,
            "{},{},{},{},{}",
            fmt_f64(deltas[di]),
            fmt_f64(sigmas[si]),
            base_seed.wrapping_add(rep as u64),
            fmt_f64(final_gap),
            name
        );
    }
    write_atomic(&out.join("index.csv"), index.as_bytes())?;
    write_json(&out.join("sweep.sidecar.json"), &sidecar(&cfg, base_seed))?;
    Ok(ExitCode::SUCCESS)
}

fn ledger_csv(ledger: &PrivacyLedger) -> String {
    let mut out = String::from("k,delta_k,sensitivity,c_k,epsilon_k,cum_epsilon\n");
    for e in &ledger.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.k,
            fmt_f64(e.delta_k),
            fmt_f64(e.sensitivity),
            fmt_f64(e.c_k),
            fmt_f64(e.epsilon_k),
            fmt_f64(e.cum_epsilon),
        );
    }
    out
}

pub fn cmd_budget(config: &Path, out: &Path) -> Result<ExitCode, CliError> {
    let cfg = load_config(config)?;
    let schedules = cfg.schedules()?;
    let sched = cfg.privacy_schedule()?;
    let ledger = cumulative_budget(cfg.run.horizon, &schedules, &sched, cfg.privacy.delta_sum_start)
        .map_err(ConfigError::Privacy)?;

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_atomic(&out.join("budget.csv"), ledger_csv(&ledger).as_bytes())?;
    let summary = json!({
        "cum_epsilon": ledger.cum_epsilon,
        "delta_hat": ledger.delta_hat,
        "cum_delta": ledger.cum_delta,
        "sidecar": sidecar(&cfg, cfg.run.seed),
    });
    write_json(&out.join("budget.summary.json"), &summary)?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_validate(config: &Path, out: &Path) -> Result<ExitCode, CliError> {
    let cfg = load_config(config)?;
    let schedules = cfg.schedules()?;
    let net = build_net(&cfg)?;
    let problem = build_problem(&cfg)?;
    let report = validate_assumption4(&schedules, &net, &problem, cfg.privacy.sigma_exp)?;

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let payload = json!({
        "assumption4": assumption4_json(&report),
        "sidecar": sidecar(&cfg, cfg.run.seed),
    });
    write_json(&out.join("validate.json"), &payload)?;
    if report.all_hold() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("validation failed: one or more feasibility conditions do not hold");
        Ok(ExitCode::from(3))
    }
}

pub fn cmd_analyze(
    inputs: &[PathBuf],
    out: &Path,
    delta_star: f64,
    eta: Option<f64>,
) -> Result<ExitCode, CliError> {
    let mut trajectories = Vec::with_capacity(inputs.len());
    for path in inputs {
        trajectories.push((path.clone(), read_trajectory(path)?));
    }
    let min_len = trajectories.iter().map(|(_, t)| t.len()).min().unwrap_or(0);
    if min_len == 0 {
        return Err(CliError::Format {
            path: "analyze".into(),
            reason: "no trajectory rows to analyze".into(),
        });
    }

    // ensemble mean gap per iteration across all inputs
    let m = trajectories.len() as f64;
    let mean_gaps: Vec<f64> = (0..min_len)
        .map(|k| trajectories.iter().map(|(_, t)| t[k].mean_gap).sum::<f64>() / m)
        .collect();
    let start = min_len / 2;
    let fit_points: Vec<(f64, f64)> = (start..min_len).map(|k| (k as f64, mean_gaps[k])).collect();
    let fit = fit_rate(&fit_points).ok();

    let final_gaps: Vec<f64> =
        trajectories.iter().map(|(_, t)| t.last().unwrap().mean_gap).collect();
    let tail = high_prob_check(&final_gaps, delta_star).ok();

    // samples per round is constant; the first record already holds one
    // round's worth (n * gamma_hat)
    let per_round = trajectories[0].1[0].samples;
    let probe = eta.map(|eta| {
        let oc = oracle_complexity(&mean_gaps, eta, per_round as usize, 1);
        json!({
            "eta": oc.eta,
            "n_eta": oc.n_eta,
            "total_samples": oc.total_samples,
            "reached": oc.n_eta.is_some(),
        })
    });

    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let report = json!({
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "ensemble_size": trajectories.len(),
        "final_gaps": final_gaps,
        "rate_fit": fit.map(|f| json!({
            "slope": f.slope,
            "intercept": f.intercept,
            "residual_rms": f.residual_rms,
            "points": f.points,
        })),
        "high_prob": tail.map(|t| json!({
            "delta_star": delta_star,
            "mean": t.mean,
            "threshold": t.threshold,
            "exceed_fraction": t.exceed_fraction,
            "tolerance": t.tolerance,
            "pass": t.pass,
        })),
        "oracle_complexity": probe,
    });
    write_json(&out.join("analyze.json"), &report)?;
    Ok(ExitCode::SUCCESS)
}
