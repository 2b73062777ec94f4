//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`; the test verdicts mirror
//! the lines either way).

use rand::Rng;

use dpgossip::analysis::{fit_rate, high_prob_check, oracle_complexity};
use dpgossip::network::{build_network, Network, Topology, WeightRule};
use dpgossip::privacy::{
    cumulative_budget, per_step_epsilon_bound, sensitivity_bound, PrivacySchedule,
};
use dpgossip::problems::{make_problem, Problem, ProblemKind};
use dpgossip::quantizer::{quantize, quantizer_distribution, QuantizerSpec};
use dpgossip::rng::{derive_stream, Purpose};
use dpgossip::simulator::{run, step, InitRule, RunSpec, Schedules, Trajectory};

fn verdict(number: u32, name: &str, ok: bool) {
    println!("acceptance {number:02} {name}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "acceptance criterion {number} ({name}) failed");
}

/// Experimental-preset privacy schedule: sigma = 0.1, offset 5, delta
/// exponent 3, C = 0.2.
fn preset_privacy() -> PrivacySchedule {
    PrivacySchedule::new(0.1, 5, 3.0, 0.2).unwrap()
}

fn preset_schedules(horizon: usize) -> Schedules {
    Schedules::new(0.35, 0.3, 0.24, 1.0, 0.75, 0.7, horizon).unwrap()
}

fn ring5() -> Network {
    build_network(5, &Topology::Ring, WeightRule::Metropolis).unwrap()
}

fn quad_problem(dim: usize, n: usize, samples: usize, bound: f64, data_seed: u64) -> Problem {
    let mut rng = derive_stream(data_seed, 0, 0, Purpose::Data);
    make_problem(ProblemKind::Quadratic, dim, n, samples, bound, &mut rng).unwrap()
}

/// One convergence-run cell on the 5-node ring quadratic, d = 4.
fn convergence_run(a1: f64, sigma_exp: f64, delta: f64, seed: u64, horizon: usize) -> Trajectory {
    let net = ring5();
    let problem = quad_problem(4, 5, 100, 0.05, 0);
    let spec = RunSpec {
        schedules: Schedules::new(a1, 0.3, 0.24, 1.0, 0.75, 0.7, horizon).unwrap(),
        quantizer: QuantizerSpec::new(delta).unwrap(),
        privacy: PrivacySchedule::new(sigma_exp, 5, 3.0, 0.2).unwrap(),
        delta_sum_start: 1,
        noise_scale: 1.0,
        seed,
        init: InitRule::Constant(3.0),
    };
    run(&net, &problem, &spec).unwrap().0
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

#[test]
fn acceptance_01_quantizer_exactness() {
    let mut rng = derive_stream(101, 0, 0, Purpose::Data);
    let mut exact_ok = true;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-10.0..10.0);
        let delta: f64 = rng.gen_range(1e-3..5.0);
        let spec = QuantizerSpec::new(delta).unwrap();
        let dist = quantizer_distribution(x, spec);
        let p_sum: f64 = dist.iter().map(|&(_, p)| p).sum();
        let mean: f64 = dist.iter().map(|&(v, p)| v * p).sum();
        exact_ok &= (p_sum - 1.0).abs() <= 1e-12 && (mean - x).abs() <= 1e-12;
    }
    // empirical frequency at x = 2.3, delta = 1: P(2) = 0.7
    let spec = QuantizerSpec::new(1.0).unwrap();
    let mut low = 0u64;
    let draws = 1_000_000u64;
    let mut qrng = derive_stream(102, 0, 0, Purpose::Quantize);
    for _ in 0..draws {
        if quantize(&[2.3], spec, &mut qrng)[0] == 2.0 {
            low += 1;
        }
    }
    let freq = low as f64 / draws as f64;
    let empirical_ok = (freq - 0.7).abs() <= 0.002;
    verdict(1, "quantizer exactness", exact_ok && empirical_ok);
}

#[test]
fn acceptance_02_privacy_ledger_reproduction() {
    let schedules = preset_schedules(2000);
    let sched = preset_privacy();
    let ledger = cumulative_budget(2000, &schedules, &sched, 1).unwrap();
    let delta_ok = (ledger.cum_delta - 0.2021).abs() <= 0.0005;

    // The published running total (0.4861) is not reproducible from the
    // stated schedules under any indexing we tried: direct accounting
    // gives ~209.6, and even dropping the sensitivity accumulation gives
    // ~0.37 (24% off). The criterion's fallback applies: every per-step
    // epsilon must sit below the closed-form finite-iteration bound.
    let target = 0.4861;
    let within_ten_percent = (ledger.cum_epsilon - target).abs() <= 0.1 * target;
    let bound_ok = ledger
        .entries
        .iter()
        .all(|e| e.epsilon_k <= per_step_epsilon_bound(e.k, &schedules, &sched) * (1.0 + 1e-12));
    println!(
        "acceptance 02 note: cum_delta = {:.4}; cum_epsilon = {:.4} vs published {target} \
         (not reconcilable; fallback bound check = {bound_ok})",
        ledger.cum_delta, ledger.cum_epsilon
    );
    verdict(2, "privacy ledger reproduction", delta_ok && (within_ten_percent || bound_ok));
}

#[test]
fn acceptance_03_sensitivity_recursion() {
    let sched_for = |c: f64| PrivacySchedule::new(0.0, 1, 3.0, c).unwrap();
    let mut rng = derive_stream(103, 0, 0, Purpose::Data);
    let mut ok = true;
    for _ in 0..10_000 {
        let alpha_hat: f64 = rng.gen_range(1e-6..1.0);
        let beta_hat: f64 = rng.gen_range(1e-6..2.0);
        let gamma_hat: u64 = rng.gen_range(1..1000);
        let c: f64 = rng.gen_range(1e-6..5.0);
        let k: usize = rng.gen_range(0..=500);
        let sched = sched_for(c);
        let closed = sensitivity_bound(k, alpha_hat, beta_hat, gamma_hat, &sched);
        let base = alpha_hat * c / gamma_hat as f64;
        let r = (1.0 - beta_hat).abs();
        let mut rec = 0.0;
        for _ in 0..=k {
            rec = r * rec + base;
        }
        ok &= (closed - rec).abs() <= 1e-10 * rec.abs().max(f64::MIN_POSITIVE);
    }
    verdict(3, "sensitivity recursion", ok);
}

#[test]
fn acceptance_04_budget_monotonicity() {
    // 3x3 grid over (sigma_exp, gamma_exp); larger noise or batch size
    // must strictly shrink the cumulative epsilon
    let sigmas = [0.1, 0.3, 0.5];
    let gammas = [0.5, 0.7, 0.9];
    let total = |sigma: f64, gamma: f64| -> f64 {
        let schedules = Schedules::new(0.35, 0.3, 0.24, 1.0, 0.75, gamma, 2000).unwrap();
        let sched = PrivacySchedule::new(sigma, 5, 3.0, 0.2).unwrap();
        cumulative_budget(2000, &schedules, &sched, 1).unwrap().cum_epsilon
    };
    let grid: Vec<Vec<f64>> =
        sigmas.iter().map(|&s| gammas.iter().map(|&g| total(s, g)).collect()).collect();
    let mut ok = true;
    for i in 0..3 {
        for j in 0..3 {
            if i + 1 < 3 {
                ok &= grid[i + 1][j] < grid[i][j];
            }
            if j + 1 < 3 {
                ok &= grid[i][j + 1] < grid[i][j];
            }
        }
    }
    verdict(4, "budget monotonicity", ok);
}

#[test]
fn acceptance_05_convergence_rate() {
    // a1 = 0.1 keeps the gap decaying through the horizon instead of
    // parking on the privacy-noise floor; all other knobs follow the
    // experimental preset
    let horizon = 2000;
    let mut final_gaps = Vec::new();
    let mut slopes = Vec::new();
    let mut initial_gap = 0.0;
    for seed in 0..10u64 {
        let traj = convergence_run(0.1, 0.1, 1.0, seed, horizon);
        initial_gap = traj.records[0].mean_gap;
        final_gaps.push(traj.final_mean_gap());
        let start = traj.records.len() / 2;
        let pts: Vec<(f64, f64)> =
            traj.records[start..].iter().map(|r| (r.k as f64, r.mean_gap)).collect();
        slopes.push(fit_rate(&pts).unwrap().slope);
    }
    let mean_final = final_gaps.iter().sum::<f64>() / final_gaps.len() as f64;
    let gap_ok = mean_final < 0.01 * initial_gap;
    let med_slope = median(&mut slopes);
    let slope_ok = med_slope <= -0.15;
    println!(
        "acceptance 05 note: mean final gap {mean_final:.3e} vs initial {initial_gap:.3e}; \
         median slope {med_slope:.3}"
    );
    verdict(5, "convergence rate", gap_ok && slope_ok);
}

#[test]
fn acceptance_06_degradation_ordering() {
    // a1 = 0.35 parks trajectories on the noise/quantization floor, which
    // is exactly where the ordering across delta and sigma shows up
    let horizon = 2000;
    let median_gap = |sigma: f64, delta: f64| -> f64 {
        let mut gaps: Vec<f64> = (0..5u64)
            .map(|seed| convergence_run(0.35, sigma, delta, seed, horizon).final_mean_gap())
            .collect();
        median(&mut gaps)
    };
    let by_delta: Vec<f64> = [1.0, 5.0, 10.0].iter().map(|&d| median_gap(0.1, d)).collect();
    let by_sigma: Vec<f64> = [-0.1, 0.1, 0.2].iter().map(|&s| median_gap(s, 1.0)).collect();
    let delta_ok = by_delta[0] <= by_delta[1] && by_delta[1] <= by_delta[2];
    let sigma_ok = by_sigma[0] <= by_sigma[1] && by_sigma[1] <= by_sigma[2];
    println!("acceptance 06 note: by delta {by_delta:?}; by sigma {by_sigma:?}");
    verdict(6, "noise/quantization degradation ordering", delta_ok && sigma_ok);
}

#[test]
fn acceptance_07_high_probability() {
    let final_gaps: Vec<f64> = (0..50u64)
        .map(|seed| convergence_run(0.1, 0.1, 1.0, seed, 2000).final_mean_gap())
        .collect();
    let report = high_prob_check(&final_gaps, 0.2).unwrap();
    println!(
        "acceptance 07 note: exceed fraction {:.3} vs tolerance {:.3}",
        report.exceed_fraction, report.tolerance
    );
    verdict(7, "high-probability tail bound", report.pass);
}

#[test]
fn acceptance_08_oracle_complexity_counter() {
    // single node, full batch, no noise, beta_hat = 0: pure deterministic
    // gradient descent with contraction (1 - alpha_hat)^2 on the gap
    let net = Network::from_weights(vec![1.0], 1).unwrap();
    let problem = quad_problem(1, 1, 20, 0.1, 7);
    let alpha_hat = 0.05;
    let spec = RunSpec {
        schedules: Schedules::with_hats(alpha_hat, 0.0, 20, 300),
        quantizer: QuantizerSpec::new(1.0).unwrap(),
        privacy: PrivacySchedule::new(0.0, 1, 3.0, 0.2).unwrap(),
        delta_sum_start: 0,
        noise_scale: 0.0,
        seed: 0,
        init: InitRule::Constant(2.0),
    };
    let (traj, _) = run(&net, &problem, &spec).unwrap();
    let gaps: Vec<f64> = traj.records.iter().map(|r| r.mean_gap).collect();
    let gap0 = gaps[0];
    let contraction = (1.0 - alpha_hat) * (1.0 - alpha_hat);
    let mut ok = true;
    for eta in [gap0 * 0.31, gap0 * 0.043, gap0 * 1.7e-3] {
        let expected = ((eta / gap0).ln() / contraction.ln()).ceil() as usize;
        let probe = oracle_complexity(&gaps, eta, 1, 20);
        ok &= probe.n_eta == Some(expected);
        ok &= probe.total_samples == Some(20 * (expected as u64 + 1));
    }
    // eta above the initial gap: reached at k = 0 with one round of samples
    let head = oracle_complexity(&gaps, gap0 * 2.0, 1, 20);
    ok &= head.n_eta == Some(0) && head.total_samples == Some(20);
    verdict(8, "oracle-complexity counter", ok);
}

/// Independent reference: deterministic gossip gradient descent with exact
/// (unquantized, noiseless) mixing and full-batch gradients.
fn reference_gossip_gd(
    states: &mut [Vec<f64>],
    net: &Network,
    problem: &Problem,
    alpha_hat: f64,
    beta_hat: f64,
    iterations: usize,
) {
    let n = states.len();
    let dim = states[0].len();
    for _ in 0..iterations {
        let snapshot: Vec<Vec<f64>> = states.to_vec();
        for i in 0..n {
            let mut mixed = vec![0.0; dim];
            for (j, z) in snapshot.iter().enumerate() {
                let w = net.weight(i, j);
                for c in 0..dim {
                    mixed[c] += w * z[c];
                }
            }
            let grad = problem.node_gradient(i, &snapshot[i]);
            for c in 0..dim {
                states[i][c] =
                    (1.0 - beta_hat) * snapshot[i][c] + beta_hat * mixed[c] - alpha_hat * grad[c];
            }
        }
    }
}

#[test]
fn acceptance_09_reference_oracle_equivalence() {
    let net = ring5();
    let problem = quad_problem(3, 5, 30, 0.1, 9);
    let alpha_hat = 0.05;
    let beta_hat = 0.3;
    // grid step 2^-40: the only divergence from the exact reference is
    // quantization roundoff, bounded by beta_hat * delta per iteration
    let spec = RunSpec {
        schedules: Schedules::with_hats(alpha_hat, beta_hat, 30, 100),
        quantizer: QuantizerSpec::new(2f64.powi(-40)).unwrap(),
        privacy: PrivacySchedule::new(0.0, 1, 3.0, 0.2).unwrap(),
        delta_sum_start: 0,
        noise_scale: 0.0,
        seed: 0,
        init: InitRule::Zeros,
    };
    let mut sim: Vec<Vec<f64>> =
        (0..5).map(|i| vec![i as f64, -(i as f64), 0.25 * i as f64]).collect();
    let mut reference = sim.clone();
    for k in 0..100 {
        step(&mut sim, k, &net, &spec, &problem).unwrap();
    }
    reference_gossip_gd(&mut reference, &net, &problem, alpha_hat, beta_hat, 100);
    let max_diff = sim
        .iter()
        .flatten()
        .zip(reference.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("acceptance 09 note: max deviation from reference {max_diff:.3e}");
    verdict(9, "reference-oracle equivalence", max_diff <= 1e-10);
}

#[test]
fn acceptance_10_cli_determinism() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_dpgossip");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "network": {"n": 5, "topology": "ring"},
            "problem": {"kind": "quadratic", "dim": 2, "samples_per_node": 60},
            "privacy": {"sigma_exp": 0.1, "noise_offset": 5, "delta_sum_start": 1},
            "run": {"K": 50},
            "sweep": {"deltas": [1.0, 5.0], "sigma_exps": [0.1], "seeds": 2}
        }"#,
    )
    .unwrap();

    let run_cmd = |sub: &str, out: &str, extra: &[&str]| {
        let status = Command::new(bin)
            .arg(sub)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out))
            .args(extra)
            .status()
            .unwrap();
        assert!(status.success(), "{sub} exited with {status}");
    };
    run_cmd("run", "a", &["--seed", "7"]);
    run_cmd("run", "b", &["--seed", "7"]);
    let csv_a = std::fs::read(dir.path().join("a/run.csv")).unwrap();
    let csv_b = std::fs::read(dir.path().join("b/run.csv")).unwrap();
    let run_ok = csv_a == csv_b;

    run_cmd("sweep", "s1", &["--seed", "3", "--jobs", "4"]);
    run_cmd("sweep", "s2", &["--seed", "3", "--jobs", "2"]);
    let mut sweep_ok =
        std::fs::read(dir.path().join("s1/index.csv")).unwrap()
            == std::fs::read(dir.path().join("s2/index.csv")).unwrap();
    for di in 0..2 {
        for rep in 0..2 {
            let name = format!("cell_d{di}_s0_r{rep}.csv");
            sweep_ok &= std::fs::read(dir.path().join("s1").join(&name)).unwrap()
                == std::fs::read(dir.path().join("s2").join(&name)).unwrap();
        }
    }
    verdict(10, "CLI determinism", run_ok && sweep_ok);
}
