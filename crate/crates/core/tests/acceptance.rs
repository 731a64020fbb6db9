//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them).
//!
//! Criteria 1, 2, 9 and 10 are property checks of the implementation;
//! criteria 3–8 reproduce the published figures of merit through the
//! simulation model at their stated tolerances.

mod support;

use nlgate::hilbert::{fidelity_pure, kets, trace_distance};
use nlgate::imperfections::{error_budget, Cause, EnableFlags, ImperfectionParams};
use nlgate::optics::{reflection_amplitude, CavityParams};
use nlgate::protocol::{
    imperfection_view, phase_audit, run_ideal, run_physical_truncated, ProtocolConfig, Runner,
    ShotParams, Source,
};
use nlgate::rng::substream;
use nlgate::tomography::{
    all_settings, bell_analytic, random_density, random_pure_state, reconstruct, simulate_counts,
    truth_table_analytic, BellInput, TRUTH_IDEAL_OUTPUT,
};

use support::oracle::run_fock_oracle;

fn report(criterion: &str, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_ideal_gate_exactness() {
    let truth = truth_table_analytic(&Runner::Ideal, 1, 0).unwrap();
    let mut worst_truth = 1.0f64;
    for (i, row) in truth.table.p.iter().enumerate() {
        worst_truth = worst_truth.min(row[TRUTH_IDEAL_OUTPUT[i]]);
    }

    let mut worst_bell = 1.0f64;
    for input in BellInput::ALL {
        let out = run_ideal(&input.input_state()).unwrap();
        for det in [&out.a, &out.d] {
            let f = fidelity_pure(&det.1.to_density(), &input.target()).unwrap();
            worst_bell = worst_bell.min(f);
        }
    }
    report(
        "01 ideal-gate exactness",
        (1.0 - worst_truth) < 1e-10 && (1.0 - worst_bell) < 1e-10,
        &format!(
            "min correct-output probability {worst_truth:.12}, min Bell fidelity {worst_bell:.12}"
        ),
    );
}

#[test]
fn criterion_02_herald_symmetry() {
    let mut rng = substream(2026, &["acceptance", "herald"], 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let input = random_pure_state(&mut rng);
        let out = run_ideal(&input).unwrap();
        worst = worst.max((out.a.0 - 0.5).abs()).max((out.d.0 - 0.5).abs());
    }
    report(
        "02 herald symmetry",
        worst < 1e-10,
        &format!("max |P(detector) − ½| = {worst:.3e} over 100 random inputs"),
    );
}

#[test]
fn criterion_03_reflectivity_consistency() {
    // Table-S1 parameters against the quoted 60% / 55% reflectivities,
    // within ±0.07 (the open-question tolerance: the paper does not say
    // whether the quoted values are coupled or bare).
    let ra = reflection_amplitude(&CavityParams::module_a_nominal(), true).norm_sqr();
    let rb = reflection_amplitude(&CavityParams::module_b_nominal(), false).norm_sqr();
    let ok = (ra - 0.60f64).abs() <= 0.07 && (rb - 0.55f64).abs() <= 0.07;
    report(
        "03 reflectivity consistency",
        ok,
        &format!("|r_coupled,a|² = {ra:.3} vs 0.60, |r_bare,b|² = {rb:.3} vs 0.55"),
    );
}

#[test]
fn criterion_04_success_probability() {
    // herald rate of the nominal config against the paper's chain estimate
    // 0.07 × 0.60 × 0.52 × 0.55 × 0.50 ≈ 0.006, averaged over lock jitter
    let runner = Runner::nominal();
    let input = kets::up_x("atom-a").tensor(&kets::up_x("atom-b")).unwrap();
    let mut rng = substream(2026, &["acceptance", "success"], 0);
    let draws = 2000;
    let mut p = 0.0;
    for _ in 0..draws {
        let shot = runner.sample_shot(&mut rng);
        p += runner.channel(&input, &shot).unwrap().success_probability / draws as f64;
    }
    let chain = 0.07 * 0.60 * 0.52 * 0.55 * 0.50;
    let ratio = p / chain;
    report(
        "04 success probability",
        (1.0 / 1.2..=1.2).contains(&ratio) && (ratio - 1.0).abs() <= 0.20,
        &format!("success {p:.5} vs chain estimate {chain:.5} (ratio {ratio:.3})"),
    );
}

/// Fidelities of one single-cause cell, analytic (no sampling noise except
/// jitter cells).
fn cause_cell(cause: Cause) -> (f64, f64) {
    let cfg = ProtocolConfig::nominal();
    let mut imp = ImperfectionParams::nominal();
    imp.enable = EnableFlags::none();
    match cause {
        Cause::WeakCoherent => imp.enable.weak_coherent = true,
        Cause::Decoherence => imp.enable.decoherence = true,
        _ => unreachable!("only the acceptance-pinned causes"),
    }
    let runner = Runner::Physical { cfg, imp };
    let truth = truth_table_analytic(&runner, 1, 11).unwrap();
    let mut bell = 0.0;
    for input in BellInput::ALL {
        bell += bell_analytic(&runner, input, 1, 12).unwrap().1 / 4.0;
    }
    (truth.fidelity, bell)
}

#[test]
fn criterion_05_weak_coherent_error() {
    // drops vs the ideal gate with only the n̄ = 0.07 coherent source (and
    // the always-present loss chain) enabled
    let (f_truth, f_bell) = cause_cell(Cause::WeakCoherent);
    let (d_truth, d_bell) = (1.0 - f_truth, 1.0 - f_bell);
    let ok = (d_bell - 0.038f64).abs() <= 0.015 && (d_truth - 0.023f64).abs() <= 0.015;
    report(
        "05 weak-coherent error",
        ok,
        &format!(
            "truth drop {:.3}% (target 2.3 ± 1.5), Bell drop {:.3}% (target 3.8 ± 1.5)",
            100.0 * d_truth,
            100.0 * d_bell
        ),
    );
}

#[test]
fn criterion_06_decoherence_asymmetry() {
    let (f_truth, f_bell) = cause_cell(Cause::Decoherence);
    let (d_truth, d_bell) = (1.0 - f_truth, 1.0 - f_bell);
    // the qualitative asymmetry (truth ≪ bell) is the hard pass/fail
    let ok = (d_bell - 0.032f64).abs() <= 0.015 && d_truth < 0.005 && d_truth < d_bell / 5.0;
    report(
        "06 decoherence asymmetry",
        ok,
        &format!(
            "truth drop {:.3}% (< 0.5), Bell drop {:.3}% (target 3.2 ± 1.5)",
            100.0 * d_truth,
            100.0 * d_bell
        ),
    );
}

#[test]
fn criterion_07_full_budget_end_to_end() {
    // all nominal imperfections on, SPAM and dark rates at their calibrated
    // defaults (a calibration check, not an independent replication)
    let budget = error_budget(
        &ProtocolConfig::nominal(),
        &ImperfectionParams::nominal(),
        4000,
        2026,
    )
    .unwrap();
    let truth = budget.baseline_truth - budget.total.delta_f_truth;
    let bell = budget.baseline_bell - budget.total.delta_f_bell;
    let ok = (truth - 0.851f64).abs() <= 0.03 && (bell - 0.766f64).abs() <= 0.03;
    report(
        "07 full budget end-to-end",
        ok,
        &format!(
            "truth fidelity {:.3} (target 0.851 ± 0.03), mean Bell fidelity {:.3} (target 0.766 ± 0.03)",
            truth, bell
        ),
    );
}

#[test]
fn criterion_08_phase_audit() {
    let ideal = phase_audit(&Runner::Ideal, 1, 0).unwrap();
    let ideal_ok = (ideal.gamma_zero_fidelity - 1.0).abs() < 1e-10
        && (ideal.alpha_equals_beta_fidelity - 1.0).abs() < 1e-10
        && (ideal.eigenstate_preservation - 1.0).abs() < 1e-10;

    let nominal = phase_audit(&Runner::nominal(), 3000, 2026).unwrap();
    let pres_ok = (nominal.eigenstate_preservation - 0.986f64).abs() <= 0.01;
    report(
        "08 phase audit",
        ideal_ok && pres_ok,
        &format!(
            "ideal ({:.6}, {:.6}, {:.6}); nominal eigenstate preservation {:.4} (target 0.986 ± 0.01)",
            ideal.gamma_zero_fidelity,
            ideal.alpha_equals_beta_fidelity,
            ideal.eigenstate_preservation,
            nominal.eigenstate_preservation
        ),
    );
}

#[test]
fn criterion_09_oracle_equivalence() {
    // coherent-amplitude path vs brute-force truncated-Fock evolution,
    // n̄ ∈ {0.01, 0.07, 0.3}, cutoff 5, 20 random atomic inputs
    let cutoff = 5;
    let mut worst_td: f64 = 0.0;
    let mut worst_dp: f64 = 0.0;
    let mut rng = substream(2026, &["acceptance", "oracle"], 0);
    for mean_n in [0.01, 0.07, 0.3] {
        let mut cfg = ProtocolConfig::nominal();
        cfg.source = Source::Coherent { mean_n };
        cfg.module_a.cavity.delta_c = std::f64::consts::TAU * 0.2;
        cfg.module_b.cavity.delta_c = -std::f64::consts::TAU * 0.3;
        cfg.feedback_enabled = false;
        let mut imp = ImperfectionParams::nominal();
        imp.enable = EnableFlags::none();
        imp.enable.weak_coherent = true;
        imp.enable.polarization = true;
        imp.enable.mode_matching = true;
        imp.pol_misalign_theta = 0.05;

        for _ in 0..20 {
            let rho = random_pure_state(&mut rng).to_density();
            let shot = ShotParams::nominal();
            let analytic = run_physical_truncated(&rho, &cfg, &imp, &shot, cutoff).unwrap();
            let view = imperfection_view(&cfg, &imp);
            let (probs, post_a, post_d) = run_fock_oracle(&rho, &cfg, &view, &shot, mean_n, cutoff);
            worst_dp = worst_dp
                .max((analytic.herald_a.probability - probs.p_a).abs())
                .max((analytic.herald_d.probability - probs.p_d).abs());
            worst_td = worst_td
                .max(trace_distance(&analytic.herald_a.post_state, &post_a).unwrap())
                .max(trace_distance(&analytic.herald_d.post_state, &post_d).unwrap());
        }
    }
    report(
        "09 oracle equivalence",
        worst_td < 1e-8 && worst_dp < 1e-10,
        &format!("max trace distance {worst_td:.3e}, max herald-probability deviation {worst_dp:.3e}"),
    );
}

#[test]
fn criterion_10_tomography_self_consistency() {
    // exact forward probabilities → trace distance 1e-8
    let mut rng = substream(2026, &["acceptance", "tomo"], 0);
    let mut worst_exact: f64 = 0.0;
    for _ in 0..100 {
        let rho = random_density(&mut rng);
        let mut table = nlgate::tomography::CountTable::default();
        for s in all_settings() {
            let p = nlgate::tomography::born_probabilities(&rho, &s).unwrap();
            let mut counts = [0u64; 4];
            for (i, ct) in counts.iter_mut().enumerate() {
                *ct = (p[i] * 1e12).round() as u64;
            }
            table.entries.push(nlgate::tomography::SettingCounts { setting: s, counts });
        }
        let rec = reconstruct(&table).unwrap();
        worst_exact = worst_exact.max(trace_distance(&rec, &rho).unwrap());
    }

    // 3000 shots per tomography setting → 95th-percentile trace distance
    use rand::Rng;
    let mut tds = Vec::with_capacity(100);
    for i in 0..100u64 {
        let rho = random_density(&mut rng);
        let seed: u64 = rng.random();
        let counts = simulate_counts(&rho, &all_settings(), 3000, seed ^ i).unwrap();
        let rec = reconstruct(&counts).unwrap();
        tds.push(trace_distance(&rec, &rho).unwrap());
    }
    tds.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let p95 = tds[94];
    report(
        "10 tomography self-consistency",
        worst_exact < 1e-8 && p95 < 0.06,
        &format!("exact-probability max trace distance {worst_exact:.3e}; 3000-shot p95 {p95:.4}"),
    );
}
