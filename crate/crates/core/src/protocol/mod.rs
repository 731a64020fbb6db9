//! The heralded non-local gate.
//!
//! Protocol sequence: a photon in |R⟩ passes a −λ/4 plate (→ |A⟩), reflects
//! from module a, passes a +λ/4 plate, reflects from module b, and is
//! detected in the A/D linear basis. The detection heralds the gate; an A
//! outcome triggers Z-gate feedback on the first atom (a π pulse around y
//! followed by a π pulse around x). Either herald realizes a controlled-
//! PHASE gate on the two atoms, i.e. a CNOT when the second qubit is read
//! in the x basis.
//!
//! [`run_ideal`] is the lossless pure-state protocol. [`run_physical`]
//! models the real chain: weak-coherent source, physical reflection
//! amplitudes, losses, mode matching, misalignment, detuning jitter,
//! threshold detectors with dark counts, dephasing and SPAM.

mod amplitude;

pub use amplitude::Truncation;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::hilbert::{
    apply, apply_density, fidelity_pure, kets, DensityOp, HilbertLabel, LinearOp, QuantumState,
};
use crate::imperfections::{sample_shot_params, spam_channel, ImperfectionParams};
use crate::optics::{
    detection_basis_change, ideal_reflection, mode_matched_amplitude, polarization_misalignment,
    qubit_rotation, reflection_amplitudes, waveplate, CavityParams, RotationAngle, RotationAxis,
    WaveplateSign,
};
use crate::rng::substream;
use crate::{Error, Result};

use amplitude::{herald_weights, HeraldWeights, ModuleAmplitudes, ModuleSide, OpticalChain, SourceAmps};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Photon source driving the protocol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    /// One photon per attempt, the ideal ancilla.
    SinglePhoton,
    /// Attenuated laser pulse with Poissonian photon statistics.
    Coherent { mean_n: f64 },
}

/// Polarization basis of the heralding detection. The protocol is defined
/// for the A/D linear basis; the variant exists so configs state it
/// explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DetectionBasis {
    #[default]
    LinearAD,
}

/// One atom-cavity module: its cQED constants plus the transversal overlap
/// between the fiber mode and the resonator mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModuleConfig {
    pub cavity: CavityParams,
    pub mode_match: f64,
}

/// Protocol durations, µs. `feedback_wait` is the extra time the first atom
/// must stay coherent while the herald is communicated and the feedback
/// pulses run; it only enters through dephasing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timings {
    pub gate_duration_us: f64,
    pub feedback_wait_us: f64,
}

/// Full description of the physical protocol hardware.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub source: Source,
    /// Photon-number cutoff used by the truncated-basis cross-checks; the
    /// analytic amplitude path itself is exact. Must leave a neglected
    /// Poisson weight below 1e-9 for a coherent source.
    pub fock_cutoff: usize,
    pub module_a: ModuleConfig,
    pub module_b: ModuleConfig,
    /// Transmission from the source to module a.
    pub eta_pre: f64,
    /// Transmission of the link between the modules (fiber, optics,
    /// circulator).
    pub eta_link: f64,
    /// Detection efficiency after module b, including the circulator.
    pub eta_det: f64,
    pub detection_basis: DetectionBasis,
    pub feedback_enabled: bool,
    pub timings: Timings,
}

impl ProtocolConfig {
    /// The published working point: n̄ = 0.07 coherent pulses, Table-S1
    /// cavities, 52% link and 50% detection efficiency, 22 µs gate.
    pub fn nominal() -> Self {
        Self {
            source: Source::Coherent { mean_n: 0.07 },
            fock_cutoff: 12,
            module_a: ModuleConfig {
                cavity: CavityParams::module_a_nominal(),
                mode_match: 0.95,
            },
            module_b: ModuleConfig {
                cavity: CavityParams::module_b_nominal(),
                mode_match: 0.95,
            },
            eta_pre: 1.0,
            eta_link: 0.52,
            eta_det: 0.50,
            detection_basis: DetectionBasis::LinearAD,
            feedback_enabled: true,
            timings: Timings {
                gate_duration_us: 22.0,
                feedback_wait_us: 78.0,
            },
        }
    }

    /// Ideal limit: single photon, lossless strongly-coupled cavities, unit
    /// efficiencies.
    pub fn ideal() -> Self {
        Self {
            source: Source::SinglePhoton,
            fock_cutoff: 12,
            module_a: ModuleConfig {
                cavity: CavityParams::idealized(),
                mode_match: 1.0,
            },
            module_b: ModuleConfig {
                cavity: CavityParams::idealized(),
                mode_match: 1.0,
            },
            eta_pre: 1.0,
            eta_link: 1.0,
            eta_det: 1.0,
            detection_basis: DetectionBasis::LinearAD,
            feedback_enabled: true,
            timings: Timings {
                gate_duration_us: 22.0,
                feedback_wait_us: 0.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, eta) in [
            ("eta_pre", self.eta_pre),
            ("eta_link", self.eta_link),
            ("eta_det", self.eta_det),
        ] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {eta} outside [0, 1]"
                )));
            }
        }
        for (name, m) in [
            ("module_a.mode_match", self.module_a.mode_match),
            ("module_b.mode_match", self.module_b.mode_match),
        ] {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::InvalidParameter(format!("{name} = {m} outside [0, 1]")));
            }
        }
        self.module_a.cavity.validate()?;
        self.module_b.cavity.validate()?;
        if self.timings.gate_duration_us < 0.0 || self.timings.feedback_wait_us < 0.0 {
            return Err(Error::InvalidParameter("negative timing".into()));
        }
        if let Source::Coherent { mean_n } = self.source {
            if !(mean_n >= 0.0) {
                return Err(Error::InvalidParameter(format!("mean_n = {mean_n} negative")));
            }
            let tail = poisson_tail(mean_n, self.fock_cutoff);
            if tail > 1e-9 {
                return Err(Error::TruncationWeight {
                    cutoff: self.fock_cutoff,
                    weight: tail,
                });
            }
        }
        Ok(())
    }
}

/// Poisson weight above `cutoff` photons for mean `mean_n`.
pub fn poisson_tail(mean_n: f64, cutoff: usize) -> f64 {
    let mut kept = 0.0;
    let mut term = (-mean_n).exp();
    for k in 0..=cutoff {
        if k > 0 {
            term *= mean_n / k as f64;
        }
        kept += term;
    }
    (1.0 - kept).max(0.0)
}

/// Which detector clicked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    A,
    D,
}

/// One heralded branch of the protocol output.
#[derive(Clone, Debug)]
pub struct HeraldedOutcome {
    pub detected: bool,
    pub detector: Detector,
    /// Probability of this herald per protocol attempt.
    pub probability: f64,
    /// Renormalized conditional state of atom-a ⊗ atom-b.
    pub post_state: DensityOp,
}

/// Full outcome distribution of one physical protocol attempt.
#[derive(Clone, Debug)]
pub struct PhysicalOutcome {
    pub herald_a: HeraldedOutcome,
    pub herald_d: HeraldedOutcome,
    /// Conditional atomic state when neither detector clicks (the
    /// unheralded ensemble a dark count lets through).
    pub no_click_state: DensityOp,
    /// P(herald A) + P(herald D).
    pub success_probability: f64,
}

impl PhysicalOutcome {
    /// Herald-weighted mixture of both post states: the ensemble an
    /// experiment that accepts either detector sees.
    pub fn heralded_mixture(&self) -> Result<DensityOp> {
        let p = self.success_probability;
        if p <= 0.0 {
            return Err(Error::NonPhysical("no heralds to mix".into()));
        }
        let m = self.herald_a.post_state.matrix() * c(self.herald_a.probability / p, 0.0)
            + self.herald_d.post_state.matrix() * c(self.herald_d.probability / p, 0.0);
        DensityOp::new(self.herald_a.post_state.label().clone(), m)
    }
}

/// Concrete per-shot parameter draw (quasi-static within one attempt).
/// Offsets are angular (2π·MHz) and shift the probe–cavity detunings.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ShotParams {
    pub delta_c_offset_a: f64,
    pub delta_c_offset_b: f64,
}

impl ShotParams {
    pub fn nominal() -> Self {
        Self::default()
    }
}

fn check_two_atom_input(input: &QuantumState) -> Result<()> {
    if input.label() != &HilbertLabel::two_atoms() {
        return Err(Error::DimensionMismatch(format!(
            "protocol input must live on atom-a ⊗ atom-b, got {:?}",
            input.label().names()
        )));
    }
    if (input.norm_sq() - 1.0).abs() > 1e-9 {
        return Err(Error::NonPhysical(format!(
            "protocol input must be normalized, norm² = {}",
            input.norm_sq()
        )));
    }
    Ok(())
}

/// Contract the polarization subsystem (last in the label) against a
/// detector ket, leaving the two-atom branch amplitudes.
fn contract_photon(full: &QuantumState, pol: &QuantumState) -> QuantumState {
    let pol_amps = pol.amplitudes();
    let n_atoms = 4;
    let mut amps = DVector::zeros(n_atoms);
    for s in 0..n_atoms {
        let mut acc = c(0.0, 0.0);
        for p in 0..2 {
            acc += pol_amps[p].conj() * full.amplitudes()[2 * s + p];
        }
        amps[s] = acc;
    }
    QuantumState::new(HilbertLabel::two_atoms(), amps).expect("contracted branch")
}

/// Outcome map of the ideal lossless protocol.
#[derive(Clone, Debug)]
pub struct IdealOutcome {
    /// D herald: no feedback needed.
    pub d: (f64, QuantumState),
    /// A herald: Z-gate feedback applied to atom-a.
    pub a: (f64, QuantumState),
}

impl IdealOutcome {
    pub fn get(&self, det: Detector) -> &(f64, QuantumState) {
        match det {
            Detector::A => &self.a,
            Detector::D => &self.d,
        }
    }
}

/// The ideal protocol: photon |R⟩ → −λ/4 plate → reflection (module a) →
/// +λ/4 plate → reflection (module b) → A/D detection → conditional
/// feedback. Both heralds occur with probability ½ for every input and both
/// realize the reference CNOT after feedback.
pub fn run_ideal(input: &QuantumState) -> Result<IdealOutcome> {
    check_two_atom_input(input)?;
    let full = input.tensor(&kets::pol_r())?;
    let full = apply(&waveplate(WaveplateSign::Minus), &full, &["polarization"])?;
    let full = apply(&ideal_reflection(), &full, &["atom-a", "polarization"])?;
    let full = apply(&waveplate(WaveplateSign::Plus), &full, &["polarization"])?;
    let full = apply(&ideal_reflection(), &full, &["atom-b", "polarization"])?;

    let branch = |pol: &QuantumState, det: Detector| -> Result<(f64, QuantumState)> {
        let atoms = contract_photon(&full, pol);
        let p = atoms.norm_sq();
        let atoms = apply_feedback(&atoms, det)?;
        Ok((p, atoms.normalized()?))
    };
    Ok(IdealOutcome {
        d: branch(&kets::pol_d(), Detector::D)?,
        a: branch(&kets::pol_a(), Detector::A)?,
    })
}

/// The conditional feedback rotation: `i·T^x_π·T^y_π` (an effective Z gate)
/// on atom-a for an A herald, identity for a D herald.
pub fn feedback_op() -> LinearOp {
    let x = qubit_rotation(RotationAxis::X, RotationAngle::Pi, false);
    let y = qubit_rotation(RotationAxis::Y, RotationAngle::Pi, false);
    let m = (x.matrix() * y.matrix()) * C64::i();
    LinearOp::unitary(HilbertLabel::single("atom", 2), m).expect("feedback is unitary")
}

/// Apply the herald-conditioned feedback to a state containing atom-a.
pub fn apply_feedback(state: &QuantumState, outcome: Detector) -> Result<QuantumState> {
    match outcome {
        Detector::D => {
            state.label().position("atom-a")?;
            Ok(state.clone())
        }
        Detector::A => apply(&feedback_op(), state, &["atom-a"]),
    }
}

/// The reference CNOT, expressed in the product basis |↑z↑x⟩, |↑z↓x⟩,
/// |↓z↑x⟩, |↓z↓x⟩ (control read in z, target in x).
pub fn reference_cnot() -> LinearOp {
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
        ],
    );
    LinearOp::unitary(HilbertLabel::two_atoms(), m).expect("CNOT is unitary")
}

/// Truth-table-compatible unitary with free phases (all zero for the ideal
/// gate), in the same z⊗x basis as [`reference_cnot`].
pub fn gate_phase_unitary(alpha: f64, beta: f64, gamma: f64) -> LinearOp {
    let z = c(0.0, 0.0);
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            c(1.0, 0.0), z, z, z,
            z, C64::from_polar(1.0, alpha), z, z,
            z, z, z, C64::from_polar(1.0, beta),
            z, z, C64::from_polar(1.0, gamma), z,
        ],
    );
    LinearOp::unitary(HilbertLabel::two_atoms(), m).expect("phase unitary")
}

/// Basis change from z⊗x coordinates to z⊗z coordinates: I ⊗ H. Self-inverse.
pub fn zx_basis_change() -> LinearOp {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(h, 0.0), c(-h, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0), c(h, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0), c(-h, 0.0),
        ],
    );
    LinearOp::unitary(HilbertLabel::two_atoms(), m).expect("basis change")
}

/// Convert an operator given on z⊗x coordinates into z⊗z coordinates.
pub fn zx_op_to_zz(op: &LinearOp) -> LinearOp {
    let b = zx_basis_change();
    b.compose(op)
        .and_then(|m| m.compose(&b))
        .expect("basis conversion")
}

/// [`reference_cnot`] on z⊗z coordinates: the controlled-PHASE gate
/// diag(1, 1, 1, −1).
pub fn cnot_zz() -> LinearOp {
    zx_op_to_zz(&reference_cnot())
}

/// The four Bell states on z⊗z coordinates of atom-a ⊗ atom-b, written in
/// the hybrid z/x form the gate produces.
pub mod bell {
    use super::*;

    fn bell_state(amps: [f64; 4]) -> QuantumState {
        QuantumState::from_slice(
            HilbertLabel::two_atoms(),
            &[
                c(amps[0] * 0.5, 0.0),
                c(amps[1] * 0.5, 0.0),
                c(amps[2] * 0.5, 0.0),
                c(amps[3] * 0.5, 0.0),
            ],
        )
        .expect("bell state")
    }

    /// |Φ+⟩ = (|↑z↑x⟩ + |↓z↓x⟩)/√2.
    pub fn phi_plus() -> QuantumState {
        bell_state([1.0, 1.0, 1.0, -1.0])
    }

    /// |Ψ+⟩ = (|↑z↓x⟩ + |↓z↑x⟩)/√2.
    pub fn psi_plus() -> QuantumState {
        bell_state([1.0, -1.0, 1.0, 1.0])
    }

    /// |Φ−⟩ = (|↑z↑x⟩ − |↓z↓x⟩)/√2.
    pub fn phi_minus() -> QuantumState {
        bell_state([1.0, 1.0, -1.0, 1.0])
    }

    /// |Ψ−⟩ = (|↑z↓x⟩ − |↓z↑x⟩)/√2.
    pub fn psi_minus() -> QuantumState {
        bell_state([1.0, -1.0, -1.0, -1.0])
    }
}

fn resolve_source(cfg: &ProtocolConfig, imp: &ImperfectionParams) -> SourceAmps {
    if !imp.enable.weak_coherent {
        return SourceAmps::SinglePhoton;
    }
    match cfg.source {
        Source::SinglePhoton => SourceAmps::SinglePhoton,
        // A removable singularity at n̄ = 0: the click-conditioned state has
        // a well-defined limit, reached here by clamping to a tiny mean.
        Source::Coherent { mean_n } => SourceAmps::Coherent {
            mean_n: mean_n.max(1e-12),
            trunc: Truncation::Exact,
        },
    }
}

/// The effective optical settings after the per-cause enable flags are
/// applied: a disabled cause pins its knob to the ideal value. Shared by
/// the production amplitude path and external cross-checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImperfectionView {
    pub theta: f64,
    pub mode_match_a: f64,
    pub mode_match_b: f64,
    pub dark: f64,
    pub spam: f64,
}

pub fn imperfection_view(cfg: &ProtocolConfig, imp: &ImperfectionParams) -> ImperfectionView {
    ImperfectionView {
        theta: if imp.enable.polarization {
            imp.pol_misalign_theta
        } else {
            0.0
        },
        mode_match_a: if imp.enable.mode_matching {
            cfg.module_a.mode_match
        } else {
            1.0
        },
        mode_match_b: if imp.enable.mode_matching {
            cfg.module_b.mode_match
        } else {
            1.0
        },
        dark: if imp.enable.dark_counts {
            imp.dark_click_prob
        } else {
            0.0
        },
        spam: if imp.enable.spam { imp.spam_error } else { 0.0 },
    }
}

fn build_chain(cfg: &ProtocolConfig, imp: &ImperfectionParams, shot: &ShotParams) -> Result<OpticalChain> {
    let view = imperfection_view(cfg, imp);
    let theta = view.theta;
    let mm_a = view.mode_match_a;
    let mm_b = view.mode_match_b;
    let cav_a = cfg
        .module_a
        .cavity
        .with_cavity_detuning_offset(shot.delta_c_offset_a);
    let cav_b = cfg
        .module_b
        .cavity
        .with_cavity_detuning_offset(shot.delta_c_offset_b);
    let ra = reflection_amplitudes(&cav_a)?;
    let rb = reflection_amplitudes(&cav_b)?;
    let amps_a = ModuleAmplitudes {
        coupled: mode_matched_amplitude(ra.r_coupled, mm_a),
        bare: mode_matched_amplitude(ra.r_bare, mm_a),
    };
    let amps_b = ModuleAmplitudes {
        coupled: mode_matched_amplitude(rb.r_coupled, mm_b),
        bare: mode_matched_amplitude(rb.r_bare, mm_b),
    };
    let misalign = if theta != 0.0 {
        Some(polarization_misalignment(theta)?)
    } else {
        None
    };

    // Misalignment is physical only where it fails to commute with the
    // R/L-diagonal reflections: at the module-a output before the λ/4
    // plate (fiber-compensation error seen by module b) and in front of
    // the detection setup.
    let mut chain = OpticalChain::new();
    chain.apply_polarization(&waveplate(WaveplateSign::Minus));
    chain.apply_loss(cfg.eta_pre);
    chain.apply_module(&amps_a, ModuleSide::A);
    if let Some(op) = &misalign {
        chain.apply_polarization(op);
    }
    chain.apply_polarization(&waveplate(WaveplateSign::Plus));
    chain.apply_loss(cfg.eta_link);
    chain.apply_module(&amps_b, ModuleSide::B);
    if let Some(op) = &misalign {
        chain.apply_polarization(op);
    }
    chain.apply_loss(cfg.eta_det);
    chain.apply_polarization(&detection_basis_change());
    Ok(chain)
}

/// Entrywise product ρ ∘ w with the weight convention of
/// [`amplitude::herald_weights`]. Returns the (unnormalized) matrix and its
/// trace.
fn condition(rho: &DMatrix<C64>, w: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let m = DMatrix::from_fn(4, 4, |s, sp| rho[(s, sp)] * w[(s, sp)]);
    let t = m.trace();
    (m, t.re)
}

fn dephase_atoms(
    m: &DMatrix<C64>,
    imp: &ImperfectionParams,
    timings: &Timings,
) -> DMatrix<C64> {
    if !imp.enable.decoherence {
        return m.clone();
    }
    let (ta, tb) = imp.dephase_windows(timings);
    let fa = imp.dephasing_factor(ta, imp.t2_a_us);
    let fb = imp.dephasing_factor(tb, imp.t2_b_us);
    DMatrix::from_fn(4, 4, |s, sp| {
        let mut v = m[(s, sp)];
        if (s < 2) != (sp < 2) {
            v *= c(fa, 0.0);
        }
        if (s % 2) != (sp % 2) {
            v *= c(fb, 0.0);
        }
        v
    })
}

fn finish_branch(
    un: DMatrix<C64>,
    p: f64,
    det: Detector,
    cfg: &ProtocolConfig,
    imp: &ImperfectionParams,
) -> Result<HeraldedOutcome> {
    let label = HilbertLabel::two_atoms();
    let mut m = un;
    if cfg.feedback_enabled && det == Detector::A {
        let rho = DensityOp::new_unchecked(label.clone(), m);
        m = apply_density(&feedback_op(), &rho, &["atom-a"])?
            .matrix()
            .clone();
    }
    m = dephase_atoms(&m, imp, &cfg.timings);
    let post_state = if p > 1e-300 {
        let rho = DensityOp::new_unchecked(label.clone(), m / c(p, 0.0));
        rho.validate().map_err(|e| {
            Error::NonPhysical(format!(
                "conditional state after {det:?} herald is unphysical ({e}); \
                 this signals a phase-convention bug"
            ))
        })?;
        rho
    } else {
        DensityOp::maximally_mixed(label)
    };
    Ok(HeraldedOutcome {
        detected: p > 1e-300,
        detector: det,
        probability: p,
        post_state,
    })
}

/// Run the physical protocol on a pure two-atom input.
pub fn run_physical(
    input: &QuantumState,
    cfg: &ProtocolConfig,
    imp: &ImperfectionParams,
    shot: &ShotParams,
) -> Result<PhysicalOutcome> {
    check_two_atom_input(input)?;
    run_physical_density(&input.to_density(), cfg, imp, shot)
}

/// Run the physical protocol on a two-atom density-operator input.
pub fn run_physical_density(
    rho_in: &DensityOp,
    cfg: &ProtocolConfig,
    imp: &ImperfectionParams,
    shot: &ShotParams,
) -> Result<PhysicalOutcome> {
    let source = resolve_source(cfg, imp);
    run_physical_impl(rho_in, cfg, imp, shot, source)
}

/// Like [`run_physical`], but with the coherent-state overlap exponentials
/// truncated at `cutoff` photons. This is the cross-validation entry point:
/// it computes exactly the object a brute-force density-matrix evolution in
/// a Fock space truncated at `cutoff` photons produces.
pub fn run_physical_truncated(
    rho_in: &DensityOp,
    cfg: &ProtocolConfig,
    imp: &ImperfectionParams,
    shot: &ShotParams,
    cutoff: usize,
) -> Result<PhysicalOutcome> {
    let source = match resolve_source(cfg, imp) {
        SourceAmps::Coherent { mean_n, .. } => SourceAmps::Coherent {
            mean_n,
            trunc: Truncation::Photons(cutoff),
        },
        s => s,
    };
    run_physical_impl(rho_in, cfg, imp, shot, source)
}

fn run_physical_impl(
    rho_in: &DensityOp,
    cfg: &ProtocolConfig,
    imp: &ImperfectionParams,
    shot: &ShotParams,
    source: SourceAmps,
) -> Result<PhysicalOutcome> {
    cfg.validate()?;
    imp.validate()?;
    if rho_in.label() != &HilbertLabel::two_atoms() {
        return Err(Error::DimensionMismatch(
            "protocol input must live on atom-a ⊗ atom-b".into(),
        ));
    }

    let view = imperfection_view(cfg, imp);
    let rho0 = if view.spam > 0.0 {
        spam_channel(rho_in, view.spam)?
    } else {
        rho_in.clone()
    };

    let chain = build_chain(cfg, imp, shot)?;
    let HeraldWeights { a, d, none } = herald_weights(&chain, source);
    let dark = view.dark;

    // A detector registers on a real click or a dark click; a herald also
    // needs the other detector silent. Dark heralds admit the unheralded
    // (no-click) ensemble.
    let effective = |w_click: &DMatrix<C64>| -> DMatrix<C64> {
        DMatrix::from_fn(4, 4, |s, sp| {
            c(1.0 - dark, 0.0) * (w_click[(s, sp)] + c(dark, 0.0) * none[(s, sp)])
        })
    };

    let (un_a, p_a) = condition(rho0.matrix(), &effective(&a));
    let (un_d, p_d) = condition(rho0.matrix(), &effective(&d));
    let herald_a = finish_branch(un_a, p_a, Detector::A, cfg, imp)?;
    let herald_d = finish_branch(un_d, p_d, Detector::D, cfg, imp)?;

    let (un_none, p_none) = condition(rho0.matrix(), &none);
    let no_click_state = if p_none > 1e-300 {
        DensityOp::new_unchecked(
            HilbertLabel::two_atoms(),
            dephase_atoms(&un_none, imp, &cfg.timings) / c(p_none, 0.0),
        )
    } else {
        DensityOp::maximally_mixed(HilbertLabel::two_atoms())
    };

    Ok(PhysicalOutcome {
        success_probability: herald_a.probability + herald_d.probability,
        herald_a,
        herald_d,
        no_click_state,
    })
}

/// A gate implementation the experiments can drive.
#[derive(Clone, Debug)]
pub enum Runner {
    /// The lossless pure-state protocol.
    Ideal,
    /// The full physical model.
    Physical {
        cfg: ProtocolConfig,
        imp: ImperfectionParams,
    },
    /// An injected two-atom unitary (z⊗z coordinates) with a deterministic
    /// D herald; used by the phase audit.
    Unitary { op: LinearOp },
}

impl Runner {
    pub fn nominal() -> Self {
        Runner::Physical {
            cfg: ProtocolConfig::nominal(),
            imp: ImperfectionParams::nominal(),
        }
    }

    /// Whether per-shot parameters fluctuate (detuning jitter on).
    pub fn jitter_enabled(&self) -> bool {
        match self {
            Runner::Physical { imp, .. } => {
                imp.enable.detuning_jitter && imp.delta_lock_sigma > 0.0
            }
            _ => false,
        }
    }

    /// Per-qubit probability that a readout outcome is flipped.
    pub fn readout_flip_p(&self) -> f64 {
        match self {
            Runner::Physical { imp, .. } if imp.enable.spam => imp.spam_error,
            _ => 0.0,
        }
    }

    pub fn sample_shot(&self, rng: &mut impl rand::Rng) -> ShotParams {
        match self {
            Runner::Physical { imp, .. } => sample_shot_params(imp, rng),
            _ => ShotParams::nominal(),
        }
    }

    /// The heralded channel for a pure two-atom input at fixed shot
    /// parameters.
    pub fn channel(&self, input: &QuantumState, shot: &ShotParams) -> Result<PhysicalOutcome> {
        match self {
            Runner::Ideal => {
                let out = run_ideal(input)?;
                let mk = |det: Detector, p: f64, s: &QuantumState| HeraldedOutcome {
                    detected: true,
                    detector: det,
                    probability: p,
                    post_state: s.to_density(),
                };
                Ok(PhysicalOutcome {
                    herald_a: mk(Detector::A, out.a.0, &out.a.1),
                    herald_d: mk(Detector::D, out.d.0, &out.d.1),
                    no_click_state: DensityOp::maximally_mixed(HilbertLabel::two_atoms()),
                    success_probability: out.a.0 + out.d.0,
                })
            }
            Runner::Physical { cfg, imp } => run_physical(input, cfg, imp, shot),
            Runner::Unitary { op } => {
                check_two_atom_input(input)?;
                let post = apply(op, input, &["atom-a", "atom-b"])?;
                Ok(PhysicalOutcome {
                    herald_a: HeraldedOutcome {
                        detected: false,
                        detector: Detector::A,
                        probability: 0.0,
                        post_state: DensityOp::maximally_mixed(HilbertLabel::two_atoms()),
                    },
                    herald_d: HeraldedOutcome {
                        detected: true,
                        detector: Detector::D,
                        probability: 1.0,
                        post_state: post.normalized()?.to_density(),
                    },
                    no_click_state: DensityOp::maximally_mixed(HilbertLabel::two_atoms()),
                    success_probability: 1.0,
                })
            }
        }
    }
}

/// The three phase-audit figures: fidelity of the |↑x↑x⟩ output with |Φ+⟩
/// (tests γ = 0), fidelity of the |↑x↓x⟩ output with |Ψ+⟩ (tests α = β),
/// and the probability that |↑z↑z⟩ survives the protocol unchanged as seen
/// by the z⊗z readout (tests α = 0).
#[derive(Clone, Copy, Debug)]
pub struct PhaseAudit {
    pub gamma_zero_fidelity: f64,
    pub alpha_equals_beta_fidelity: f64,
    pub eigenstate_preservation: f64,
}

/// Run the phase audit. `draws` Monte Carlo shot-parameter draws are used
/// when the runner has detuning jitter; otherwise a single evaluation is
/// exact.
pub fn phase_audit(runner: &Runner, draws: usize, seed: u64) -> Result<PhaseAudit> {
    let n = if runner.jitter_enabled() { draws.max(1) } else { 1 };
    let mut rng = substream(seed, &["phase-audit"], 0);

    let in_xx = kets::up_x("atom-a").tensor(&kets::up_x("atom-b"))?;
    let in_xd = kets::up_x("atom-a").tensor(&kets::down_x("atom-b"))?;
    let in_zz = kets::up_z("atom-a").tensor(&kets::up_z("atom-b"))?;
    let flip = runner.readout_flip_p();

    let mut acc = [(0.0, 0.0); 3];
    for _ in 0..n {
        let shot = runner.sample_shot(&mut rng);
        for (slot, input) in [(0usize, &in_xx), (1, &in_xd), (2, &in_zz)] {
            let out = runner.channel(input, &shot)?;
            let p = out.success_probability;
            if p <= 0.0 {
                continue;
            }
            let mix = out.heralded_mixture()?;
            let f = match slot {
                0 => fidelity_pure(&mix, &bell::phi_plus())?,
                1 => fidelity_pure(&mix, &bell::psi_plus())?,
                _ => {
                    // z⊗z readout with per-qubit outcome flips
                    let diag: Vec<f64> = (0..4).map(|i| mix.matrix()[(i, i)].re).collect();
                    let keep = (1.0 - flip) * (1.0 - flip);
                    let one = flip * (1.0 - flip);
                    diag[0] * keep + (diag[1] + diag[2]) * one + diag[3] * flip * flip
                }
            };
            acc[slot].0 += p * f;
            acc[slot].1 += p;
        }
    }

    for (_, w) in &acc {
        if *w <= 0.0 {
            return Err(Error::HeraldStarvation {
                p: 0.0,
                target: 1,
                needed: f64::INFINITY,
                cap: n as f64,
            });
        }
    }
    Ok(PhaseAudit {
        gamma_zero_fidelity: acc[0].0 / acc[0].1,
        alpha_equals_beta_fidelity: acc[1].0 / acc[1].1,
        eigenstate_preservation: acc[2].0 / acc[2].1,
    })
}
