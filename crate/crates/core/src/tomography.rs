//! Finite-shot measurement simulation, two-qubit state reconstruction and
//! the truth-table / Bell-state experiments.
//!
//! Local bases are realized the way the apparatus does it: a z readout is
//! direct, an x readout applies the inverse of T^y_{π/2} first, a y readout
//! applies T^x_{π/2} first. Reconstruction is linear inversion from Pauli
//! expectation estimates followed by projection to the nearest (Frobenius)
//! positive-semidefinite unit-trace matrix by eigenvalue truncation with
//! trace redistribution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hilbert::{
    apply_density, fidelity_pure, kets, DensityOp, HilbertLabel, LinearOp, QuantumState,
};
use crate::protocol::{bell, Runner, ShotParams};
use crate::rng::{categorical, substream};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-qubit measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn key(&self) -> &'static str {
        match self {
            Basis::X => "x",
            Basis::Y => "y",
            Basis::Z => "z",
        }
    }

    pub fn from_key(s: &str) -> Result<Self> {
        match s.trim() {
            "x" => Ok(Basis::X),
            "y" => Ok(Basis::Y),
            "z" => Ok(Basis::Z),
            other => Err(Error::Config(format!("unknown basis '{other}'"))),
        }
    }
}

/// One tomography setting: local bases of atom-a and atom-b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasurementSetting {
    pub basis_a: Basis,
    pub basis_b: Basis,
}

/// All nine distinct two-qubit settings, in a fixed row order.
pub fn all_settings() -> Vec<MeasurementSetting> {
    let mut v = Vec::with_capacity(9);
    for a in Basis::ALL {
        for b in Basis::ALL {
            v.push(MeasurementSetting { basis_a: a, basis_b: b });
        }
    }
    v
}

/// The pre-readout rotation for a basis: U such that a subsequent z readout
/// measures that basis (U† Z U = σ_basis). x uses the inverse of T^y_{π/2},
/// y uses T^x_{π/2}, z needs no pulse.
pub fn readout_rotation(basis: Basis) -> LinearOp {
    use crate::optics::{qubit_rotation, RotationAngle, RotationAxis};
    match basis {
        Basis::Z => LinearOp::identity(HilbertLabel::single("atom", 2)),
        Basis::X => qubit_rotation(RotationAxis::Y, RotationAngle::HalfPi, true),
        Basis::Y => qubit_rotation(RotationAxis::X, RotationAngle::HalfPi, false),
    }
}

/// Born probabilities of the four outcomes {↑↑, ↑↓, ↓↑, ↓↓} for a local
/// measurement setting on a two-atom state.
pub fn born_probabilities(rho: &DensityOp, setting: &MeasurementSetting) -> Result<[f64; 4]> {
    if rho.label() != &HilbertLabel::two_atoms() {
        return Err(Error::DimensionMismatch("two-atom state required".into()));
    }
    let mut rotated = apply_density(&readout_rotation(setting.basis_a), rho, &["atom-a"])?;
    rotated = apply_density(&readout_rotation(setting.basis_b), &rotated, &["atom-b"])?;
    let mut p = [0.0; 4];
    for (i, pi) in p.iter_mut().enumerate() {
        *pi = rotated.matrix()[(i, i)].re.max(0.0);
    }
    Ok(p)
}

/// Mix outcome probabilities with independent per-qubit readout flips.
pub fn flip_outcome_probs(p: [f64; 4], flip: f64) -> [f64; 4] {
    if flip == 0.0 {
        return p;
    }
    let keep = 1.0 - flip;
    let mut out = [0.0; 4];
    for (o, po) in p.iter().enumerate() {
        for (q, oq) in out.iter_mut().enumerate() {
            let fa = if (o / 2) == (q / 2) { keep } else { flip };
            let fb = if (o % 2) == (q % 2) { keep } else { flip };
            *oq += po * fa * fb;
        }
    }
    out
}

/// Counts for one setting, outcomes ordered {↑↑, ↑↓, ↓↑, ↓↓}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SettingCounts {
    pub setting: MeasurementSetting,
    pub counts: [u64; 4],
}

/// A full tomography count table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountTable {
    pub entries: Vec<SettingCounts>,
}

impl CountTable {
    pub fn total_shots(&self) -> u64 {
        self.entries.iter().map(|e| e.counts.iter().sum::<u64>()).sum()
    }

    fn find_mut(&mut self, setting: MeasurementSetting) -> &mut SettingCounts {
        if let Some(i) = self.entries.iter().position(|e| e.setting == setting) {
            return &mut self.entries[i];
        }
        self.entries.push(SettingCounts { setting, counts: [0; 4] });
        self.entries.last_mut().expect("just pushed")
    }

    pub fn record(&mut self, setting: MeasurementSetting, outcome: usize) {
        self.find_mut(setting).counts[outcome] += 1;
    }

    /// CSV schema: `setting_a,setting_b,n_uu,n_ud,n_du,n_dd`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting_a,setting_b,n_uu,n_ud,n_du,n_dd\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.setting.basis_a.key(),
                e.setting.basis_b.key(),
                e.counts[0],
                e.counts[1],
                e.counts[2],
                e.counts[3]
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 6 {
                return Err(Error::Config(format!(
                    "count-table line {} has {} fields, expected 6",
                    i + 1,
                    parts.len()
                )));
            }
            let setting = MeasurementSetting {
                basis_a: Basis::from_key(parts[0])?,
                basis_b: Basis::from_key(parts[1])?,
            };
            let mut counts = [0u64; 4];
            for (k, c) in counts.iter_mut().enumerate() {
                *c = parts[k + 2]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad count '{}'", parts[k + 2])))?;
            }
            entries.push(SettingCounts { setting, counts });
        }
        Ok(Self { entries })
    }
}

/// Multinomial sampling of measurement counts from Born probabilities,
/// deterministic per seed.
pub fn simulate_counts(
    rho: &DensityOp,
    settings: &[MeasurementSetting],
    shots_per_setting: u64,
    seed: u64,
) -> Result<CountTable> {
    let mut table = CountTable::default();
    for (i, s) in settings.iter().enumerate() {
        let p = born_probabilities(rho, s)?;
        let mut rng = substream(seed, &["counts", s.basis_a.key(), s.basis_b.key()], i as u64);
        let entry = table.find_mut(*s);
        for _ in 0..shots_per_setting {
            entry.counts[categorical(&mut rng, &p)] += 1;
        }
    }
    Ok(table)
}

fn pauli(basis: Basis) -> DMatrix<C64> {
    match basis {
        Basis::X => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        Basis::Y => DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        Basis::Z => DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
    }
}

const OUTCOME_SIGN: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// Linear-inversion reconstruction from a count table, then projection to
/// the nearest positive-semidefinite unit-trace matrix.
pub fn reconstruct(counts: &CountTable) -> Result<DensityOp> {
    // every one of the nine settings must be present with shots
    for a in Basis::ALL {
        for b in Basis::ALL {
            let found = counts
                .entries
                .iter()
                .find(|e| e.setting.basis_a == a && e.setting.basis_b == b);
            match found {
                Some(e) if e.counts.iter().sum::<u64>() > 0 => {}
                _ => {
                    return Err(Error::MissingSettings(format!(
                        "no counts for setting ({}, {})",
                        a.key(),
                        b.key()
                    )))
                }
            }
        }
    }

    let freq = |e: &SettingCounts| -> (f64, [f64; 4]) {
        let n: u64 = e.counts.iter().sum();
        let nf = n as f64;
        let mut f = [0.0; 4];
        for (i, &ct) in e.counts.iter().enumerate() {
            f[i] = ct as f64 / nf;
        }
        (nf, f)
    };

    // two-qubit correlators
    let mut e2 = [[0.0; 3]; 3];
    for e in &counts.entries {
        let (_, f) = freq(e);
        let (i, j) = (basis_index(e.setting.basis_a), basis_index(e.setting.basis_b));
        e2[i][j] = f
            .iter()
            .enumerate()
            .map(|(o, p)| OUTCOME_SIGN[o].0 * OUTCOME_SIGN[o].1 * p)
            .sum();
    }
    // single-qubit expectations, shot-weighted over compatible settings
    let mut e1a = [0.0; 3];
    let mut e1b = [0.0; 3];
    let mut w1a = [0.0; 3];
    let mut w1b = [0.0; 3];
    for e in &counts.entries {
        let (n, f) = freq(e);
        let ia = basis_index(e.setting.basis_a);
        let ib = basis_index(e.setting.basis_b);
        let ma: f64 = f.iter().enumerate().map(|(o, p)| OUTCOME_SIGN[o].0 * p).sum();
        let mb: f64 = f.iter().enumerate().map(|(o, p)| OUTCOME_SIGN[o].1 * p).sum();
        e1a[ia] += n * ma;
        w1a[ia] += n;
        e1b[ib] += n * mb;
        w1b[ib] += n;
    }
    for i in 0..3 {
        e1a[i] /= w1a[i];
        e1b[i] /= w1b[i];
    }

    let id = DMatrix::<C64>::identity(2, 2);
    let mut m = id.kronecker(&id);
    for (i, ba) in Basis::ALL.iter().enumerate() {
        m += pauli(*ba).kronecker(&id) * c(e1a[i], 0.0);
        m += id.kronecker(&pauli(*ba)) * c(e1b[i], 0.0);
        for (j, bb) in Basis::ALL.iter().enumerate() {
            m += pauli(*ba).kronecker(&pauli(*bb)) * c(e2[i][j], 0.0);
        }
    }
    m /= c(4.0, 0.0);

    let projected = psd_project(&m);
    DensityOp::new(HilbertLabel::two_atoms(), projected)
}

fn basis_index(b: Basis) -> usize {
    match b {
        Basis::X => 0,
        Basis::Y => 1,
        Basis::Z => 2,
    }
}

/// Project a Hermitian unit-trace matrix to the nearest (Frobenius)
/// positive-semidefinite unit-trace matrix: zero out negative eigenvalues
/// from the bottom and redistribute their weight over the rest.
pub fn psd_project(m: &DMatrix<C64>) -> DMatrix<C64> {
    let sym = (m + m.adjoint()) / c(2.0, 0.0);
    let eig = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let mut lam: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mut k = lam.len();
    let mut acc = 0.0;
    while k > 0 && lam[k - 1] + acc / (k as f64) < 0.0 {
        acc += lam[k - 1];
        lam[k - 1] = 0.0;
        k -= 1;
    }
    let shift = if k > 0 { acc / k as f64 } else { 0.0 };
    for l in lam.iter_mut().take(k) {
        *l += shift;
    }

    let dim = m.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    for (rank, &i) in idx.iter().enumerate() {
        if lam[rank] == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        out += (v * v.adjoint()) * c(lam[rank], 0.0);
    }
    out
}

/// Truth-table inputs |↑z↑x⟩, |↑z↓x⟩, |↓z↑x⟩, |↓z↓x⟩.
pub fn truth_inputs() -> [QuantumState; 4] {
    let mk = |a: QuantumState, b: QuantumState| a.tensor(&b).expect("truth input");
    [
        mk(kets::up_z("atom-a"), kets::up_x("atom-b")),
        mk(kets::up_z("atom-a"), kets::down_x("atom-b")),
        mk(kets::down_z("atom-a"), kets::up_x("atom-b")),
        mk(kets::down_z("atom-a"), kets::down_x("atom-b")),
    ]
}

/// Ideal CNOT output cell for each input row.
pub const TRUTH_IDEAL_OUTPUT: [usize; 4] = [0, 1, 3, 2];

pub const TRUTH_BASIS_LABELS: [&str; 4] = ["uz_ux", "uz_dx", "dz_ux", "dz_dx"];

/// 4×4 table of conditional output probabilities in the z⊗x readout.
#[derive(Clone, Debug)]
pub struct TruthTable {
    pub p: [[f64; 4]; 4],
}

impl TruthTable {
    pub fn validate_rows(&self) -> Result<()> {
        for (i, row) in self.p.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::NonPhysical(format!(
                    "truth-table row {i} sums to {s}"
                )));
            }
        }
        Ok(())
    }

    /// Mean over inputs of the ideal-output population.
    pub fn fidelity(&self) -> f64 {
        (0..4).map(|i| self.p[i][TRUTH_IDEAL_OUTPUT[i]]).sum::<f64>() / 4.0
    }
}

/// Result of a truth-table experiment.
#[derive(Clone, Debug)]
pub struct TruthTableResult {
    pub table: TruthTable,
    pub fidelity: f64,
    /// Bootstrap standard error (0 for deterministic analytic runs).
    pub fidelity_err: f64,
    /// Heralded events per input (sampled runs; zero in analytic mode).
    pub heralds_per_input: [u64; 4],
    /// Protocol attempts used (sampled runs) or shot-parameter draws
    /// (analytic runs).
    pub attempts: u64,
    pub success_probability: f64,
}

const TRUTH_SETTING: MeasurementSetting = MeasurementSetting {
    basis_a: Basis::Z,
    basis_b: Basis::X,
};

/// Simulated truth-table experiment: prepare each input, run the heralded
/// protocol attempt by attempt, and accumulate z⊗x readouts over heralded
/// shots only. `shots_per_input` is the number of heralded events collected
/// per input.
pub fn truth_table_experiment(
    runner: &Runner,
    shots_per_input: u64,
    seed: u64,
    attempts_cap: u64,
) -> Result<TruthTableResult> {
    if shots_per_input == 0 {
        return Err(Error::UnderSampled("shots_per_input = 0".into()));
    }
    let inputs = truth_inputs();
    let flip = runner.readout_flip_p();
    let mut table = [[0.0; 4]; 4];
    let mut heralds_per_input = [0u64; 4];
    let mut attempts_total = 0u64;

    for (i, input) in inputs.iter().enumerate() {
        let mut rng = substream(seed, &["truth-table", TRUTH_BASIS_LABELS[i]], i as u64);
        let cached = if runner.jitter_enabled() {
            None
        } else {
            Some(runner.channel(input, &ShotParams::nominal())?)
        };
        starvation_check(
            cached.as_ref().map(|o| o.success_probability),
            shots_per_input,
            attempts_cap,
        )?;

        let mut heralds = 0u64;
        let mut attempts = 0u64;
        let mut counts = [0u64; 4];
        while heralds < shots_per_input {
            attempts += 1;
            if attempts > attempts_cap {
                return Err(starvation(heralds, attempts, shots_per_input, attempts_cap));
            }
            let owned;
            let out = match &cached {
                Some(o) => o,
                None => {
                    let shot = runner.sample_shot(&mut rng);
                    owned = runner.channel(input, &shot)?;
                    &owned
                }
            };
            let u: f64 = rng.random();
            let post = if u < out.herald_a.probability {
                &out.herald_a.post_state
            } else if u < out.success_probability {
                &out.herald_d.post_state
            } else {
                continue;
            };
            let probs = flip_outcome_probs(born_probabilities(post, &TRUTH_SETTING)?, flip);
            counts[categorical(&mut rng, &probs)] += 1;
            heralds += 1;
        }
        for (o, &ct) in counts.iter().enumerate() {
            table[i][o] = ct as f64 / heralds as f64;
        }
        heralds_per_input[i] = heralds;
        attempts_total += attempts;
    }

    let table = TruthTable { p: table };
    table.validate_rows()?;
    let fidelity = table.fidelity();
    // binomial error of the mean correct-output population
    let var: f64 = (0..4)
        .map(|i| {
            let p = table.p[i][TRUTH_IDEAL_OUTPUT[i]];
            p * (1.0 - p) / heralds_per_input[i] as f64
        })
        .sum::<f64>()
        / 16.0;
    Ok(TruthTableResult {
        fidelity,
        fidelity_err: var.sqrt(),
        table,
        heralds_per_input,
        attempts: attempts_total,
        success_probability: (4 * shots_per_input) as f64 / attempts_total as f64,
    })
}

fn starvation_check(p: Option<f64>, target: u64, cap: u64) -> Result<()> {
    if let Some(p) = p {
        if p <= 0.0 || target as f64 / p > cap as f64 {
            return Err(Error::HeraldStarvation {
                p,
                target: target as usize,
                needed: if p > 0.0 { target as f64 / p } else { f64::INFINITY },
                cap: cap as f64,
            });
        }
    }
    Ok(())
}

fn starvation(heralds: u64, attempts: u64, target: u64, cap: u64) -> Error {
    let p = heralds as f64 / attempts as f64;
    Error::HeraldStarvation {
        p,
        target: target as usize,
        needed: if p > 0.0 { target as f64 / p } else { f64::INFINITY },
        cap: cap as f64,
    }
}

/// Expected truth table from the heralded channel directly: exact when the
/// runner has no per-shot randomness, otherwise a herald-weighted average
/// over `draws` shot-parameter draws.
pub fn truth_table_analytic(runner: &Runner, draws: usize, seed: u64) -> Result<TruthTableResult> {
    let n = if runner.jitter_enabled() { draws.max(1) } else { 1 };
    let inputs = truth_inputs();
    let flip = runner.readout_flip_p();
    let mut rng = substream(seed, &["truth-analytic"], 0);

    let mut rows = [[0.0; 4]; 4];
    let mut success = 0.0;
    // per-draw samples of (herald weight, correct-output probability) for
    // the bootstrap over parameter fluctuations
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(n);
    for _ in 0..n {
        let shot = runner.sample_shot(&mut rng);
        let mut w_draw = 0.0;
        let mut f_draw = 0.0;
        for (i, input) in inputs.iter().enumerate() {
            let out = runner.channel(input, &shot)?;
            let p = out.success_probability;
            if p <= 0.0 {
                continue;
            }
            let mix = out.heralded_mixture()?;
            let probs = flip_outcome_probs(born_probabilities(&mix, &TRUTH_SETTING)?, flip);
            for (o, &po) in probs.iter().enumerate() {
                rows[i][o] += p * po;
            }
            success += p / (4 * n) as f64;
            w_draw += p;
            f_draw += p * probs[TRUTH_IDEAL_OUTPUT[i]];
        }
        samples.push((w_draw, f_draw));
    }
    for row in rows.iter_mut() {
        let s: f64 = row.iter().sum();
        if s <= 0.0 {
            return Err(Error::HeraldStarvation {
                p: 0.0,
                target: 1,
                needed: f64::INFINITY,
                cap: n as f64,
            });
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    let table = TruthTable { p: rows };
    let fidelity = table.fidelity();
    let fidelity_err = if n > 1 {
        bootstrap_ratio_stderr(&samples, 200, substream(seed, &["truth-analytic", "boot"], 0))
    } else {
        0.0
    };
    Ok(TruthTableResult {
        fidelity,
        fidelity_err,
        table,
        heralds_per_input: [0; 4],
        attempts: n as u64,
        success_probability: success,
    })
}

fn bootstrap_ratio_stderr(
    samples: &[(f64, f64)],
    resamples: usize,
    mut rng: impl Rng,
) -> f64 {
    let n = samples.len();
    let mut vals = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut w = 0.0;
        let mut s = 0.0;
        for _ in 0..n {
            let (wi, si) = samples[rng.random_range(0..n)];
            w += wi;
            s += si;
        }
        if w > 0.0 {
            vals.push(s / w);
        }
    }
    stddev(&vals)
}

fn stddev(vals: &[f64]) -> f64 {
    if vals.len() < 2 {
        return 0.0;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    var.sqrt()
}

/// The four Bell-sequence inputs, each atom prepared along ±x.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellInput {
    /// |↑x↑x⟩ → |Φ+⟩
    UpUp,
    /// |↑x↓x⟩ → |Ψ+⟩
    UpDown,
    /// |↓x↑x⟩ → |Φ−⟩
    DownUp,
    /// |↓x↓x⟩ → |Ψ−⟩
    DownDown,
}

impl BellInput {
    pub const ALL: [BellInput; 4] = [
        BellInput::UpUp,
        BellInput::UpDown,
        BellInput::DownUp,
        BellInput::DownDown,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            BellInput::UpUp => "ux_ux",
            BellInput::UpDown => "ux_dx",
            BellInput::DownUp => "dx_ux",
            BellInput::DownDown => "dx_dx",
        }
    }

    pub fn input_state(&self) -> QuantumState {
        let (a, b) = match self {
            BellInput::UpUp => (kets::up_x("atom-a"), kets::up_x("atom-b")),
            BellInput::UpDown => (kets::up_x("atom-a"), kets::down_x("atom-b")),
            BellInput::DownUp => (kets::down_x("atom-a"), kets::up_x("atom-b")),
            BellInput::DownDown => (kets::down_x("atom-a"), kets::down_x("atom-b")),
        };
        a.tensor(&b).expect("bell input")
    }

    /// The ideal output Bell state.
    pub fn target(&self) -> QuantumState {
        match self {
            BellInput::UpUp => bell::phi_plus(),
            BellInput::UpDown => bell::psi_plus(),
            BellInput::DownUp => bell::phi_minus(),
            BellInput::DownDown => bell::psi_minus(),
        }
    }

    pub fn target_name(&self) -> &'static str {
        match self {
            BellInput::UpUp => "phi_plus",
            BellInput::UpDown => "psi_plus",
            BellInput::DownUp => "phi_minus",
            BellInput::DownDown => "psi_minus",
        }
    }
}

/// Result of one Bell-state generation-and-tomography experiment.
#[derive(Clone, Debug)]
pub struct TomographyResult {
    pub input: BellInput,
    pub rho: DensityOp,
    pub fidelity: f64,
    /// Nonparametric bootstrap standard error over heralded events.
    pub std_err: f64,
    pub counts: CountTable,
    pub heralds: u64,
    pub attempts: u64,
    pub success_probability: f64,
}

/// Run the protocol until `heralds_target` heralded events, measuring each
/// post-herald state in a uniformly random tomography setting, then
/// reconstruct and report the fidelity with the ideal Bell state plus its
/// bootstrap error (200 resamples).
pub fn bell_experiment(
    runner: &Runner,
    input: BellInput,
    heralds_target: u64,
    seed: u64,
    attempts_cap: u64,
) -> Result<TomographyResult> {
    if heralds_target == 0 {
        return Err(Error::UnderSampled("heralds_target = 0".into()));
    }
    let settings = all_settings();
    let state_in = input.input_state();
    let flip = runner.readout_flip_p();
    let mut rng = substream(seed, &["bell", input.key()], 0);

    let cached = if runner.jitter_enabled() {
        None
    } else {
        Some(runner.channel(&state_in, &ShotParams::nominal())?)
    };
    starvation_check(
        cached.as_ref().map(|o| o.success_probability),
        heralds_target,
        attempts_cap,
    )?;

    let mut events: Vec<(usize, usize)> = Vec::with_capacity(heralds_target as usize);
    let mut attempts = 0u64;
    while (events.len() as u64) < heralds_target {
        attempts += 1;
        if attempts > attempts_cap {
            return Err(starvation(events.len() as u64, attempts, heralds_target, attempts_cap));
        }
        let owned;
        let out = match &cached {
            Some(o) => o,
            None => {
                let shot = runner.sample_shot(&mut rng);
                owned = runner.channel(&state_in, &shot)?;
                &owned
            }
        };
        let u: f64 = rng.random();
        let post = if u < out.herald_a.probability {
            &out.herald_a.post_state
        } else if u < out.success_probability {
            &out.herald_d.post_state
        } else {
            continue;
        };
        let si = rng.random_range(0..settings.len());
        let probs = flip_outcome_probs(born_probabilities(post, &settings[si])?, flip);
        let o = categorical(&mut rng, &probs);
        events.push((si, o));
    }

    let build = |ev: &[(usize, usize)]| -> CountTable {
        let mut t = CountTable::default();
        for &(si, o) in ev {
            t.record(settings[si], o);
        }
        t
    };
    let counts = build(&events);
    let rho = reconstruct(&counts)?;
    let target = input.target();
    let fidelity = fidelity_pure(&rho, &target)?;

    // nonparametric bootstrap over heralded events
    let mut boot_rng = substream(seed, &["bell", input.key(), "bootstrap"], 0);
    let mut boots = Vec::with_capacity(200);
    for _ in 0..200 {
        let resample: Vec<(usize, usize)> = (0..events.len())
            .map(|_| events[boot_rng.random_range(0..events.len())])
            .collect();
        if let Ok(r) = reconstruct(&build(&resample)) {
            boots.push(fidelity_pure(&r, &target)?);
        }
    }

    Ok(TomographyResult {
        input,
        rho,
        fidelity,
        std_err: stddev(&boots),
        counts,
        heralds: events.len() as u64,
        attempts,
        success_probability: events.len() as f64 / attempts as f64,
    })
}

/// Expected Bell-state fidelity as a tomographic estimate would converge to
/// it: the herald-weighted post state passed through the readout-flip
/// channel. Returns (herald-averaged state, fidelity, bootstrap stderr).
pub fn bell_analytic(
    runner: &Runner,
    input: BellInput,
    draws: usize,
    seed: u64,
) -> Result<(DensityOp, f64, f64)> {
    let n = if runner.jitter_enabled() { draws.max(1) } else { 1 };
    let state_in = input.input_state();
    let target = input.target();
    let flip = runner.readout_flip_p();
    let mut rng = substream(seed, &["bell-analytic", input.key()], 0);

    let mut acc = DMatrix::<C64>::zeros(4, 4);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut w_total = 0.0;
    for _ in 0..n {
        let shot = runner.sample_shot(&mut rng);
        let out = runner.channel(&state_in, &shot)?;
        let p = out.success_probability;
        if p <= 0.0 {
            samples.push((0.0, 0.0));
            continue;
        }
        let mix = crate::imperfections::measurement_flip_channel(&out.heralded_mixture()?, flip)?;
        let f = fidelity_pure(&mix, &target)?;
        acc += mix.matrix() * c(p, 0.0);
        w_total += p;
        samples.push((p, p * f));
    }
    if w_total <= 0.0 {
        return Err(Error::HeraldStarvation {
            p: 0.0,
            target: 1,
            needed: f64::INFINITY,
            cap: n as f64,
        });
    }
    let avg = DensityOp::new_unchecked(HilbertLabel::two_atoms(), acc / c(w_total, 0.0));
    let fidelity = fidelity_pure(&avg, &target)?;
    let err = if n > 1 {
        bootstrap_ratio_stderr(&samples, 200, substream(seed, &["bell-analytic", "boot"], 0))
    } else {
        0.0
    };
    Ok((avg, fidelity, err))
}

/// Haar-like random pure two-atom state.
pub fn random_pure_state(rng: &mut impl Rng) -> QuantumState {
    let v = DVector::from_vec(
        (0..4)
            .map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect::<Vec<_>>(),
    );
    let n = v.norm();
    QuantumState::new(HilbertLabel::two_atoms(), v / c(n, 0.0)).expect("random state")
}

/// Random physical two-atom density operator (Ginibre ensemble).
pub fn random_density(rng: &mut impl Rng) -> DensityOp {
    let g = DMatrix::from_fn(4, 4, |_, _| {
        c(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let m = &g * g.adjoint();
    let t = m.trace().re;
    DensityOp::new(HilbertLabel::two_atoms(), m / c(t, 0.0)).expect("ginibre state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::trace_distance;

    #[test]
    fn born_probabilities_track_bases() {
        // |↑z↑z⟩ in the (z, z) setting: all weight on ↑↑
        let rho = truth_inputs()[0].to_density();
        let p = born_probabilities(
            &rho,
            &MeasurementSetting { basis_a: Basis::Z, basis_b: Basis::X },
        )
        .unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12, "{p:?}");

        // |Φ+⟩ in its natural (z, x) setting is perfectly correlated
        let phi = bell::phi_plus().to_density();
        let p = born_probabilities(
            &phi,
            &MeasurementSetting { basis_a: Basis::Z, basis_b: Basis::X },
        )
        .unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[3] - 0.5).abs() < 1e-12, "{p:?}");
        assert!(p[1].abs() < 1e-12 && p[2].abs() < 1e-12);
    }

    #[test]
    fn simulate_counts_basics() {
        let rho = kets::up_z("atom-a")
            .tensor(&kets::up_z("atom-b"))
            .unwrap()
            .to_density();
        let zz = [MeasurementSetting { basis_a: Basis::Z, basis_b: Basis::Z }];
        let t = simulate_counts(&rho, &zz, 1000, 7).unwrap();
        assert_eq!(t.entries[0].counts, [1000, 0, 0, 0]);

        // maximally mixed: each outcome 2500 ± 150 out of 10⁴ (3σ bound)
        let mixed = DensityOp::maximally_mixed(HilbertLabel::two_atoms());
        let t = simulate_counts(&mixed, &zz, 10_000, 8).unwrap();
        for &ct in &t.entries[0].counts {
            assert!((ct as f64 - 2500.0).abs() < 150.0, "{ct}");
        }
    }

    #[test]
    fn simulate_counts_deterministic_per_seed() {
        let mixed = DensityOp::maximally_mixed(HilbertLabel::two_atoms());
        let settings = all_settings();
        let a = simulate_counts(&mixed, &settings, 500, 42).unwrap();
        let b = simulate_counts(&mixed, &settings, 500, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn count_table_csv_round_trip() {
        let mixed = DensityOp::maximally_mixed(HilbertLabel::two_atoms());
        let t = simulate_counts(&mixed, &all_settings(), 200, 3).unwrap();
        let back = CountTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn reconstruct_exact_probabilities() {
        // infinite-shot limit encoded as large exact-proportion counts
        let psi = bell::psi_minus();
        let rho = psi.to_density();
        let mut table = CountTable::default();
        for s in all_settings() {
            let p = born_probabilities(&rho, &s).unwrap();
            let mut counts = [0u64; 4];
            for (i, c) in counts.iter_mut().enumerate() {
                *c = (p[i] * 1e12).round() as u64;
            }
            table.entries.push(SettingCounts { setting: s, counts });
        }
        let rec = reconstruct(&table).unwrap();
        assert!(trace_distance(&rec, &rho).unwrap() < 1e-9);
    }

    #[test]
    fn reconstruct_requires_all_settings() {
        let rho = bell::phi_plus().to_density();
        let some: Vec<MeasurementSetting> = all_settings().into_iter().take(5).collect();
        let t = simulate_counts(&rho, &some, 100, 1).unwrap();
        assert!(matches!(reconstruct(&t), Err(Error::MissingSettings(_))));
    }

    #[test]
    fn reconstruct_survives_adversarial_counts() {
        // all counts in one bin per setting: linear inversion alone would be
        // wildly unphysical, projection must fix it
        let mut t = CountTable::default();
        for s in all_settings() {
            t.entries.push(SettingCounts { setting: s, counts: [50, 0, 0, 0] });
        }
        let rho = reconstruct(&t).unwrap();
        rho.validate().unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psd_projection_is_noop_on_physical_states() {
        let mut rng = substream(31, &["tomo", "psd"], 0);
        for _ in 0..20 {
            let rho = random_density(&mut rng);
            let proj = psd_project(rho.matrix());
            for i in 0..4 {
                for j in 0..4 {
                    assert!((proj[(i, j)] - rho.matrix()[(i, j)]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reconstruction_left_inverse_on_random_states() {
        // spec invariant: trace distance < 1e-8 on exact forward
        // probabilities for 100 random physical states
        let mut rng = substream(32, &["tomo", "inverse"], 0);
        for _ in 0..100 {
            let rho = random_density(&mut rng);
            let mut table = CountTable::default();
            for s in all_settings() {
                let p = born_probabilities(&rho, &s).unwrap();
                let mut counts = [0u64; 4];
                for (i, c) in counts.iter_mut().enumerate() {
                    *c = (p[i] * 1e12).round() as u64;
                }
                table.entries.push(SettingCounts { setting: s, counts });
            }
            let rec = reconstruct(&table).unwrap();
            assert!(trace_distance(&rec, &rho).unwrap() < 1e-8);
        }
    }

    #[test]
    fn truth_table_ideal_runner() {
        let r = truth_table_experiment(&Runner::Ideal, 200, 11, 1_000_000).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        for i in 0..4 {
            assert!((r.table.p[i][TRUTH_IDEAL_OUTPUT[i]] - 1.0).abs() < 1e-12);
        }
        r.table.validate_rows().unwrap();
        // |↓z↓x⟩ maps to |↓z↑x⟩
        assert!((r.table.p[3][2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truth_table_analytic_matches_ideal() {
        let r = truth_table_analytic(&Runner::Ideal, 1, 5).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        assert_eq!(r.fidelity_err, 0.0);
    }

    #[test]
    fn bell_experiment_ideal_runner_close_to_unity() {
        // finite-shot floor of linear inversion + PSD projection at 3000
        // random-setting heralds: fidelity 0.984 ± 0.008 over seeds
        let r = bell_experiment(&Runner::Ideal, BellInput::UpUp, 3000, 13, 1_000_000).unwrap();
        assert!(r.fidelity > 0.96, "fidelity {}", r.fidelity);
        assert!(r.std_err < 0.02);
        assert_eq!(r.heralds, 3000);
        // imaginary parts bounded by shot noise: 3σ with σ ≈ 1/√(shots/9)
        let sigma = 3.0 * (9.0 / 3000.0f64).sqrt();
        for i in 0..4 {
            for j in 0..4 {
                assert!(r.rho.matrix()[(i, j)].im.abs() < sigma);
            }
        }
    }

    #[test]
    fn bell_analytic_ideal_is_exact() {
        for input in BellInput::ALL {
            let (rho, f, err) = bell_analytic(&Runner::Ideal, input, 1, 0).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "{input:?}: {f}");
            assert_eq!(err, 0.0);
            assert!((rho.trace() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn truth_fidelity_invariant_under_target_phase() {
        // fidelity estimates use |⟨ψ|ρ|ψ⟩| which ignores a global phase on ψ
        let psi = bell::phi_plus();
        let phased = QuantumState::new(
            HilbertLabel::two_atoms(),
            psi.amplitudes() * C64::from_polar(1.0, 1.234),
        )
        .unwrap();
        let rho = psi.to_density();
        let f1 = fidelity_pure(&rho, &psi).unwrap();
        let f2 = fidelity_pure(&rho, &phased).unwrap();
        assert!((f1 - f2).abs() < 1e-12);
    }
}
