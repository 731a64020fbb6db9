//! Experimental error channels, per-shot parameter fluctuations and the
//! per-cause error budget.
//!
//! Each imperfection is a named cause that can be toggled independently:
//!
//! | cause            | knob(s)                                  |
//! |------------------|------------------------------------------|
//! | weak_coherent    | the coherent source of the protocol config |
//! | spam             | `spam_error` (z-basis flip per qubit per prepare-or-measure step) |
//! | polarization     | `pol_misalign_theta` (one rotation per interface) |
//! | mode_matching    | the per-module `mode_match` of the protocol config |
//! | detuning_jitter  | `delta_lock_sigma` (per-shot Gaussian cavity-lock error) |
//! | decoherence      | `t2_*_us` and the dephasing windows      |
//! | dark_counts      | `dark_click_prob` per detector per shot  |
//!
//! The budget reruns the truth-table and Bell experiments with one cause on
//! at a time (against an all-off baseline) and reports the fidelity drops;
//! these are expectation values computed from the heralded channel directly
//! ("analytic-weighted shots"), so only causes with per-shot randomness
//! (detuning jitter) carry statistical error bars.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::hilbert::{apply_density, DensityOp, HilbertLabel, LinearOp};
use crate::protocol::{ProtocolConfig, Runner, ShotParams, Timings};
use crate::rng::substream;
use crate::tomography::{bell_analytic, truth_table_analytic, BellInput};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Per-cause switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnableFlags {
    pub weak_coherent: bool,
    pub spam: bool,
    pub polarization: bool,
    pub mode_matching: bool,
    pub detuning_jitter: bool,
    pub decoherence: bool,
    pub dark_counts: bool,
}

impl EnableFlags {
    pub fn none() -> Self {
        Self {
            weak_coherent: false,
            spam: false,
            polarization: false,
            mode_matching: false,
            detuning_jitter: false,
            decoherence: false,
            dark_counts: false,
        }
    }

    pub fn all() -> Self {
        Self {
            weak_coherent: true,
            spam: true,
            polarization: true,
            mode_matching: true,
            detuning_jitter: true,
            decoherence: true,
            dark_counts: true,
        }
    }
}

/// Every error knob of the imperfection model. Angular frequencies are
/// 2π·MHz, times are µs.
///
/// The default values of `nominal()` are calibrated once against the
/// published end-to-end fidelities and then frozen; they are model inputs,
/// not independently measured constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImperfectionParams {
    pub enable: EnableFlags,
    /// z-basis bit-flip probability per qubit at each prepare-or-measure
    /// boundary.
    pub spam_error: f64,
    /// Polarization-plane misalignment per interface (after module a and
    /// before detection), radians.
    pub pol_misalign_theta: f64,
    /// Std-dev of the per-shot, per-module cavity-lock detuning error
    /// (angular, 2π·MHz).
    pub delta_lock_sigma: f64,
    pub t2_a_us: f64,
    pub t2_b_us: f64,
    /// Dephasing window of atom-a; spans the feedback. Defaults to
    /// `gate_duration + feedback_wait` when unset.
    pub dephase_window_a_us: Option<f64>,
    /// Dephasing window of atom-b. Defaults to `gate_duration` when unset.
    pub dephase_window_b_us: Option<f64>,
    /// Dark-click probability per detector per shot.
    pub dark_click_prob: f64,
    /// Gaussian dephasing envelope exp(−(t/T2)²) when true (quasi-static
    /// field noise); exponential exp(−t/T2) otherwise.
    pub gaussian_dephasing: bool,
}

impl ImperfectionParams {
    /// Everything off and every knob at its ideal value.
    pub fn none() -> Self {
        Self {
            enable: EnableFlags::none(),
            spam_error: 0.0,
            pol_misalign_theta: 0.0,
            delta_lock_sigma: 0.0,
            t2_a_us: f64::INFINITY,
            t2_b_us: f64::INFINITY,
            dephase_window_a_us: None,
            dephase_window_b_us: None,
            dark_click_prob: 0.0,
            gaussian_dephasing: true,
        }
    }

    /// The calibrated working point used for the end-to-end comparisons.
    pub fn nominal() -> Self {
        Self {
            enable: EnableFlags::all(),
            spam_error: 0.0035,
            pol_misalign_theta: 0.155,
            delta_lock_sigma: std::f64::consts::TAU * 0.79,
            t2_a_us: 400.0,
            t2_b_us: 400.0,
            dephase_window_a_us: None,
            dephase_window_b_us: None,
            dark_click_prob: 1e-5,
            gaussian_dephasing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("spam_error", self.spam_error),
            ("dark_click_prob", self.dark_click_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.delta_lock_sigma < 0.0 {
            return Err(Error::InvalidParameter("delta_lock_sigma negative".into()));
        }
        if !(self.t2_a_us > 0.0) || !(self.t2_b_us > 0.0) {
            return Err(Error::InvalidParameter("T2 must be positive".into()));
        }
        if self.pol_misalign_theta.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidParameter(
                "pol_misalign_theta outside (−π/2, π/2)".into(),
            ));
        }
        for w in [self.dephase_window_a_us, self.dephase_window_b_us]
            .into_iter()
            .flatten()
        {
            if w < 0.0 {
                return Err(Error::InvalidParameter("negative dephasing window".into()));
            }
        }
        Ok(())
    }

    /// Effective dephasing windows (atom-a, atom-b) in µs.
    pub fn dephase_windows(&self, timings: &Timings) -> (f64, f64) {
        (
            self.dephase_window_a_us
                .unwrap_or(timings.gate_duration_us + timings.feedback_wait_us),
            self.dephase_window_b_us.unwrap_or(timings.gate_duration_us),
        )
    }

    /// Coherence decay factor over `t` for coherence time `t2`.
    pub fn dephasing_factor(&self, t: f64, t2: f64) -> f64 {
        if t2.is_infinite() {
            return 1.0;
        }
        if self.gaussian_dephasing {
            (-(t / t2).powi(2)).exp()
        } else {
            (-t / t2).exp()
        }
    }
}

/// Pure dephasing of one atom: off-diagonal elements in its z basis decay
/// by exp(−(t/T2)²) (Gaussian envelope) or exp(−t/T2); populations and
/// trace are untouched.
pub fn dephasing_channel(
    rho: &DensityOp,
    t_us: f64,
    t2_us: f64,
    target: &str,
    gaussian: bool,
) -> Result<DensityOp> {
    if t_us < 0.0 {
        return Err(Error::InvalidParameter("negative dephasing time".into()));
    }
    if !(t2_us > 0.0) {
        return Err(Error::InvalidParameter("T2 must be positive".into()));
    }
    let f = if t2_us.is_infinite() {
        1.0
    } else if gaussian {
        (-(t_us / t2_us).powi(2)).exp()
    } else {
        (-t_us / t2_us).exp()
    };
    scale_target_coherences(rho, target, f)
}

fn scale_target_coherences(rho: &DensityOp, target: &str, f: f64) -> Result<DensityOp> {
    let label = rho.label().clone();
    let pos = label.position(target)?;
    let strides = label.strides();
    let dim_t = label.subsystems()[pos].dim;
    let stride = strides[pos];
    let dim = label.dim();
    let comp = |idx: usize| (idx / stride) % dim_t;
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        if comp(i) != comp(j) {
            rho.matrix()[(i, j)] * c(f, 0.0)
        } else {
            rho.matrix()[(i, j)]
        }
    });
    Ok(DensityOp::new_unchecked(label, m))
}

fn pauli_x() -> LinearOp {
    let x = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    LinearOp::unitary(HilbertLabel::single("flip", 2), x).expect("X is unitary")
}

/// SPAM error model: independently for every qubit in the label, the
/// z-basis populations are flipped with probability `p`. Applied at the
/// prepare and at the measure boundary of an experiment.
pub fn spam_channel(rho: &DensityOp, p: f64) -> Result<DensityOp> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("flip probability {p}")));
    }
    let x = pauli_x();
    let mut out = rho.clone();
    let names: Vec<String> = rho.label().names().iter().map(|s| s.to_string()).collect();
    for name in &names {
        let flipped = apply_density(&x, &out, &[name])?;
        let m = out.matrix() * c(1.0 - p, 0.0) + flipped.matrix() * c(p, 0.0);
        out = DensityOp::new_unchecked(rho.label().clone(), m);
    }
    Ok(out)
}

/// The channel equivalent of flipping each qubit's readout outcome with
/// probability `p` in whatever basis it is measured: every single-qubit
/// Pauli expectation shrinks by (1 − 2p). This is what a tomographic
/// estimate converges to under measurement flips.
pub fn measurement_flip_channel(rho: &DensityOp, p: f64) -> Result<DensityOp> {
    if p == 0.0 {
        return Ok(rho.clone());
    }
    let s = 1.0 - 2.0 * p;
    let paulis = [
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
    ];
    let mut out = rho.clone();
    let names: Vec<String> = rho.label().names().iter().map(|n| n.to_string()).collect();
    for name in &names {
        // s·ρ + (1 − s)·(this qubit depolarized); depolarization is the
        // average of conjugation by I, X, Y, Z.
        let mut dep = out.matrix().clone();
        for pm in &paulis {
            let op = LinearOp::unitary(HilbertLabel::single("pauli", 2), pm.clone())?;
            dep += apply_density(&op, &out, &[name])?.matrix();
        }
        dep /= c(4.0, 0.0);
        let m = out.matrix() * c(s, 0.0) + dep * c(1.0 - s, 0.0);
        out = DensityOp::new_unchecked(rho.label().clone(), m);
    }
    Ok(out)
}

/// Draw the concrete per-shot parameters: per-module cavity-lock detuning
/// errors, Gaussian with std `delta_lock_sigma`, independent per module.
/// Deterministic given the generator state; all other parameters pass
/// through unchanged.
pub fn sample_shot_params(imp: &ImperfectionParams, rng: &mut impl rand::Rng) -> ShotParams {
    if !imp.enable.detuning_jitter || imp.delta_lock_sigma == 0.0 {
        return ShotParams::nominal();
    }
    let normal = Normal::new(0.0, imp.delta_lock_sigma).expect("valid sigma");
    ShotParams {
        delta_c_offset_a: normal.sample(rng),
        delta_c_offset_b: normal.sample(rng),
    }
}

/// The error causes, in the row order of the published imperfection table,
/// plus dark counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cause {
    WeakCoherent,
    Spam,
    Polarization,
    ModeMatching,
    DetuningJitter,
    Decoherence,
    DarkCounts,
}

impl Cause {
    pub const ALL: [Cause; 7] = [
        Cause::WeakCoherent,
        Cause::Spam,
        Cause::Polarization,
        Cause::ModeMatching,
        Cause::DetuningJitter,
        Cause::Decoherence,
        Cause::DarkCounts,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Cause::WeakCoherent => "Weak coherent states and losses",
            Cause::Spam => "State-preparation and measurement",
            Cause::Polarization => "Polarization effects",
            Cause::ModeMatching => "Mode matching",
            Cause::DetuningJitter => "Atom-cavity detunings and lock widths",
            Cause::Decoherence => "Atomic decoherence",
            Cause::DarkCounts => "Dark counts",
        }
    }

    fn enable_alone(&self) -> EnableFlags {
        let mut flags = EnableFlags::none();
        match self {
            Cause::WeakCoherent => flags.weak_coherent = true,
            Cause::Spam => flags.spam = true,
            Cause::Polarization => flags.polarization = true,
            Cause::ModeMatching => flags.mode_matching = true,
            Cause::DetuningJitter => flags.detuning_jitter = true,
            Cause::Decoherence => flags.decoherence = true,
            Cause::DarkCounts => flags.dark_counts = true,
        }
        flags
    }
}

/// One budget row: fidelity drops (truth table, Bell mean) for a cause.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorBudgetRow {
    pub cause: String,
    pub delta_f_truth: f64,
    pub delta_f_truth_err: f64,
    pub delta_f_bell: f64,
    pub delta_f_bell_err: f64,
}

/// The assembled per-cause budget.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorBudget {
    pub baseline_truth: f64,
    pub baseline_bell: f64,
    pub rows: Vec<ErrorBudgetRow>,
    /// All causes on simultaneously (interactions included).
    pub total: ErrorBudgetRow,
}

#[derive(Clone, Copy)]
struct CellResult {
    f_truth: f64,
    f_truth_err: f64,
    f_bell: f64,
    f_bell_err: f64,
}

fn run_cell(
    cfg: &ProtocolConfig,
    imp: &ImperfectionParams,
    flags: EnableFlags,
    shots: usize,
    seed: u64,
    tag: &str,
) -> Result<CellResult> {
    let mut cell_imp = *imp;
    cell_imp.enable = flags;
    let runner = Runner::Physical {
        cfg: cfg.clone(),
        imp: cell_imp,
    };
    let draws = if runner.jitter_enabled() { shots } else { 1 };

    let truth = truth_table_analytic(&runner, draws, hash_seed(seed, tag, "truth"))?;
    let mut f_bell = 0.0;
    let mut var_bell = 0.0;
    for input in BellInput::ALL {
        let (_, f, err) = bell_analytic(&runner, input, draws, hash_seed(seed, tag, input.key()))?;
        f_bell += f / 4.0;
        var_bell += err * err / 16.0;
    }
    Ok(CellResult {
        f_truth: truth.fidelity,
        f_truth_err: truth.fidelity_err,
        f_bell,
        f_bell_err: var_bell.sqrt(),
    })
}

fn hash_seed(seed: u64, tag: &str, sub: &str) -> u64 {
    use rand::Rng;
    substream(seed, &["budget", tag, sub], 0).random()
}

/// Build the full error budget: for each cause, the truth-table and
/// Bell-state experiments run with the cause alone against the all-off
/// baseline, plus the all-on total. `shots_per_cell` Monte Carlo draws are
/// spent only on cells with per-shot randomness.
pub fn error_budget(
    cfg: &ProtocolConfig,
    imp: &ImperfectionParams,
    shots_per_cell: usize,
    seed: u64,
) -> Result<ErrorBudget> {
    imp.validate()?;
    if shots_per_cell == 0 {
        return Err(Error::UnderSampled("shots_per_cell = 0".into()));
    }

    let baseline = run_cell(cfg, imp, EnableFlags::none(), shots_per_cell, seed, "baseline")?;

    let mut rows = Vec::with_capacity(Cause::ALL.len());
    for cause in Cause::ALL {
        let cell = run_cell(
            cfg,
            imp,
            cause.enable_alone(),
            shots_per_cell,
            seed,
            cause.label(),
        )?;
        rows.push(make_row(cause.label(), &baseline, &cell)?);
    }

    let all_on = run_cell(cfg, imp, EnableFlags::all(), shots_per_cell, seed, "total")?;
    let total = make_row("Total (all causes)", &baseline, &all_on)?;

    Ok(ErrorBudget {
        baseline_truth: baseline.f_truth,
        baseline_bell: baseline.f_bell,
        rows,
        total,
    })
}

fn make_row(label: &str, baseline: &CellResult, cell: &CellResult) -> Result<ErrorBudgetRow> {
    let row = ErrorBudgetRow {
        cause: label.to_string(),
        delta_f_truth: baseline.f_truth - cell.f_truth,
        delta_f_truth_err: (baseline.f_truth_err.powi(2) + cell.f_truth_err.powi(2)).sqrt(),
        delta_f_bell: baseline.f_bell - cell.f_bell,
        delta_f_bell_err: (baseline.f_bell_err.powi(2) + cell.f_bell_err.powi(2)).sqrt(),
    };
    for (d, e) in [
        (row.delta_f_truth, row.delta_f_truth_err),
        (row.delta_f_bell, row.delta_f_bell_err),
    ] {
        if d < -0.005 {
            return Err(Error::UnderSampled(format!(
                "budget delta for '{label}' is {d:.4}, below the −0.005 noise floor"
            )));
        }
        if e > 0.005 {
            return Err(Error::UnderSampled(format!(
                "budget stderr for '{label}' is {e:.4} > 0.005; increase shots_per_cell"
            )));
        }
    }
    Ok(row)
}

impl ErrorBudget {
    /// CSV with the fixed published row order, dark counts and the total
    /// appended.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cause,dF_truth,dF_truth_err,dF_bell,dF_bell_err\n");
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                row.cause,
                row.delta_f_truth,
                row.delta_f_truth_err,
                row.delta_f_bell,
                row.delta_f_bell_err
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("budget serializes")
    }

    pub fn row(&self, cause: Cause) -> &ErrorBudgetRow {
        &self.rows[Cause::ALL.iter().position(|c| c == &cause).expect("cause")]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::kets;
    use crate::rng::substream;

    #[test]
    fn dephasing_limits() {
        let rho = kets::up_x("atom-a").to_density();
        // t = 0 is the identity channel
        let same = dephasing_channel(&rho, 0.0, 400.0, "atom-a", true).unwrap();
        assert!((same.matrix()[(0, 1)] - rho.matrix()[(0, 1)]).norm() < 1e-15);
        // t → ∞ fully dephases |↑x⟩⟨↑x| to I/2
        let gone = dephasing_channel(&rho, 1e9, 400.0, "atom-a", true).unwrap();
        assert!(gone.matrix()[(0, 1)].norm() < 1e-15);
        assert!((gone.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dephasing_gate_window_factor() {
        // off-diagonal factor exp(−(22/400)²) ≈ 0.9970
        let rho = kets::up_x("atom-a").to_density();
        let out = dephasing_channel(&rho, 22.0, 400.0, "atom-a", true).unwrap();
        let factor = out.matrix()[(0, 1)].re / rho.matrix()[(0, 1)].re;
        assert!((factor - 0.996_98).abs() < 1e-4, "factor {factor}");
        assert!((out.trace() - rho.trace()).abs() < 1e-12);
    }

    #[test]
    fn dephasing_infinite_t2_is_identity() {
        let rho = kets::up_x("atom-a").to_density();
        let out = dephasing_channel(&rho, 22.0, f64::INFINITY, "atom-a", true).unwrap();
        assert!((out.matrix()[(0, 1)] - rho.matrix()[(0, 1)]).norm() < 1e-15);
    }

    #[test]
    fn spam_limits() {
        let rho = kets::up_z("atom-a").to_density();
        let same = spam_channel(&rho, 0.0).unwrap();
        assert!((same.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        // p = 1 flips |↑z⟩⟨↑z| to |↓z⟩⟨↓z|
        let flipped = spam_channel(&rho, 1.0).unwrap();
        assert!((flipped.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!(flipped.matrix()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn spam_preserves_x_eigenstates() {
        // a z-basis population flip leaves |↑x⟩⟨↑x| invariant
        let rho = kets::up_x("atom-a").to_density();
        let out = spam_channel(&rho, 0.3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((out.matrix()[(i, j)] - rho.matrix()[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn channels_preserve_trace_and_positivity() {
        let mut rng = substream(21, &["imperfections", "channels"], 0);
        for _ in 0..100 {
            let rho = crate::tomography::random_density(&mut rng);
            for out in [
                spam_channel(&rho, 0.23).unwrap(),
                dephasing_channel(&rho, 50.0, 300.0, "atom-a", true).unwrap(),
                dephasing_channel(&rho, 50.0, 300.0, "atom-b", false).unwrap(),
                measurement_flip_channel(&rho, 0.1).unwrap(),
            ] {
                assert!((out.trace() - rho.trace()).abs() < 1e-10);
                let min = out.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
                assert!(min > -1e-10, "negative eigenvalue {min}");
            }
        }
    }

    #[test]
    fn shot_sampling_is_deterministic_and_gated() {
        let mut imp = ImperfectionParams::nominal();
        imp.delta_lock_sigma = std::f64::consts::TAU * 0.5;

        let a: Vec<ShotParams> = {
            let mut rng = substream(5, &["shots"], 0);
            (0..10).map(|_| sample_shot_params(&imp, &mut rng)).collect()
        };
        let b: Vec<ShotParams> = {
            let mut rng = substream(5, &["shots"], 0);
            (0..10).map(|_| sample_shot_params(&imp, &mut rng)).collect()
        };
        assert_eq!(a, b);

        imp.enable.detuning_jitter = false;
        let mut rng = substream(5, &["shots"], 1);
        assert_eq!(sample_shot_params(&imp, &mut rng), ShotParams::nominal());

        let mut zero = ImperfectionParams::nominal();
        zero.delta_lock_sigma = 0.0;
        assert_eq!(sample_shot_params(&zero, &mut rng), ShotParams::nominal());
    }

    #[test]
    fn shot_sampling_std_matches_sigma() {
        let imp = ImperfectionParams::nominal();
        let sigma = imp.delta_lock_sigma;
        let mut rng = substream(6, &["shots", "std"], 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let s = sample_shot_params(&imp, &mut rng);
            sum += s.delta_c_offset_a;
            sum2 += s.delta_c_offset_a * s.delta_c_offset_a;
        }
        let mean = sum / n as f64;
        let std = (sum2 / n as f64 - mean * mean).sqrt();
        assert!(
            (std - sigma).abs() / sigma < 0.02,
            "sample std {std} vs sigma {sigma}"
        );
    }

    #[test]
    fn budget_all_causes_off_is_flat() {
        let mut imp = ImperfectionParams::nominal();
        imp.enable = EnableFlags::none();
        // toggling causes changes nothing when the budget's own flags are
        // what vary; every row compares a single cause against the all-off
        // baseline, so with ideal knob values all rows vanish
        let mut flat = imp;
        flat.spam_error = 0.0;
        flat.pol_misalign_theta = 0.0;
        flat.delta_lock_sigma = 0.0;
        flat.t2_a_us = f64::INFINITY;
        flat.t2_b_us = f64::INFINITY;
        flat.dark_click_prob = 0.0;
        let mut cfg = ProtocolConfig::nominal();
        cfg.source = crate::protocol::Source::SinglePhoton;
        cfg.module_a.mode_match = 1.0;
        cfg.module_b.mode_match = 1.0;
        let budget = error_budget(&cfg, &flat, 10, 33).unwrap();
        for row in &budget.rows {
            assert!(
                row.delta_f_truth.abs() < 1e-9,
                "{}: {}",
                row.cause,
                row.delta_f_truth
            );
            assert!(row.delta_f_bell.abs() < 1e-9);
        }
        assert!(budget.total.delta_f_bell.abs() < 1e-9);
    }
}
