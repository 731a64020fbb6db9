//! Calibration scans for the nominal imperfection defaults.
//!
//! The published per-cause budget and end-to-end fidelities constrain the
//! free nuisance parameters (SPAM flip probability, misalignment angle,
//! lock jitter, mode matching, dephasing windows). This tool prints the
//! observables those defaults are frozen against:
//!
//! ```text
//! cargo run --release -p nlgate --example calibrate -- budget
//! cargo run --release -p nlgate --example calibrate -- success
//! cargo run --release -p nlgate --example calibrate -- tomo-floor
//! ```

use nlgate::hilbert::kets;
use nlgate::imperfections::{error_budget, ImperfectionParams};
use nlgate::protocol::{phase_audit, ProtocolConfig, Runner, ShotParams};
use nlgate::rng::substream;
use nlgate::tomography::{bell_experiment, BellInput};

fn success_scan() {
    let imp = ImperfectionParams::nominal();
    let input = kets::up_x("atom-a").tensor(&kets::up_x("atom-b")).unwrap();
    for m in [0.85, 0.9, 0.92, 0.95, 0.97, 1.0] {
        let mut cfg = ProtocolConfig::nominal();
        cfg.module_a.mode_match = m;
        cfg.module_b.mode_match = m;
        let runner = Runner::Physical { cfg, imp };
        let out = runner.channel(&input, &ShotParams::nominal()).unwrap();
        println!(
            "mode_match {m:.2}: success = {:.5} (chain estimate 0.00601, ratio {:.3})",
            out.success_probability,
            out.success_probability / 0.006006
        );
    }
}

fn budget_scan() {
    let cfg = ProtocolConfig::nominal();
    let imp = ImperfectionParams::nominal();
    let budget = error_budget(&cfg, &imp, 3000, 20260810).unwrap();
    println!(
        "baseline: truth {:.4} bell {:.4}",
        budget.baseline_truth, budget.baseline_bell
    );
    for row in budget.rows.iter().chain(std::iter::once(&budget.total)) {
        println!(
            "{:42} truth {:+.4} ± {:.4}   bell {:+.4} ± {:.4}",
            row.cause, row.delta_f_truth, row.delta_f_truth_err, row.delta_f_bell, row.delta_f_bell_err
        );
    }
    println!(
        "all-on: truth {:.4} (target 0.851±0.03)  bell {:.4} (target 0.766±0.03)",
        budget.baseline_truth - budget.total.delta_f_truth,
        budget.baseline_bell - budget.total.delta_f_bell
    );
    let audit = phase_audit(&Runner::nominal(), 3000, 20260810).unwrap();
    println!(
        "phase audit: gamma {:.4} alpha-beta {:.4} preservation {:.4} (target 0.986±0.01)",
        audit.gamma_zero_fidelity, audit.alpha_equals_beta_fidelity, audit.eigenstate_preservation
    );
}

fn tomo_floor() {
    use rand::Rng;
    let mut fs = Vec::new();
    for seed in 0..20u64 {
        let s: u64 = substream(seed, &["tomo-floor"], 0).random();
        let r = bell_experiment(&Runner::Ideal, BellInput::UpUp, 3000, s, 1_000_000).unwrap();
        fs.push(r.fidelity);
    }
    fs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = fs.iter().sum::<f64>() / fs.len() as f64;
    println!(
        "ideal-runner 3000-herald tomography fidelity: mean {:.4}, min {:.4}, p5 {:.4}, max {:.4}",
        mean,
        fs[0],
        fs[1],
        fs[fs.len() - 1]
    );
}

fn tomo_random() {
    use nlgate::hilbert::trace_distance;
    use nlgate::tomography::{all_settings, random_density, reconstruct, simulate_counts};
    use rand::Rng;
    // 3000 total shots spread over the nine settings, 100 random states
    let mut rng = substream(99, &["tomo-random"], 0);
    let mut tds = Vec::new();
    for i in 0..100u64 {
        let rho = random_density(&mut rng);
        let seed: u64 = rng.random();
        let counts = simulate_counts(&rho, &all_settings(), 3000 / 9, seed ^ i).unwrap();
        let rec = reconstruct(&counts).unwrap();
        tds.push(trace_distance(&rec, &rho).unwrap());
    }
    tds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "3000-shot reconstruction trace distance: mean {:.4}, p50 {:.4}, p95 {:.4}, max {:.4}",
        tds.iter().sum::<f64>() / tds.len() as f64,
        tds[49],
        tds[94],
        tds[99]
    );
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "budget".into());
    match mode.as_str() {
        "success" => success_scan(),
        "tomo-floor" => tomo_floor(),
        "tomo-random" => tomo_random(),
        _ => budget_scan(),
    }
}
