//! Optical-element and atom-cavity physics.
//!
//! All rates are angular frequencies in units of 2π·MHz. The reflection of a
//! quasi-monochromatic probe from a single-sided cavity is the steady-state
//! input-output result
//!
//! ```text
//! r = 1 − 2 κ_r / (κ + iΔ_c + g_eff² / (γ + iΔ_a))
//! ```
//!
//! with `g_eff = g` when the atom couples to the probe (atom in |↑z⟩ and
//! polarization |R⟩) and `g_eff = 0` otherwise. On resonance a coupled atom
//! blocks the cavity and the photon reflects with `r ≈ +1`, while the bare
//! cavity response is `r ≈ −1`: a relative π phase, realizing a Z gate
//! between photon and atom. For `κ_r = κ` and zero detuning the bare
//! response is exactly −1.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::hilbert::{HilbertLabel, LinearOp};
use crate::{Error, Result};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;
const TAU: f64 = std::f64::consts::TAU;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Per-module cavity-QED constants and probe detunings, all angular
/// (2π·MHz).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityParams {
    /// Qubit-cavity coupling g.
    pub g: f64,
    /// Total cavity field decay rate κ.
    pub kappa: f64,
    /// Cavity decay into the outcoupling mode κ_r.
    pub kappa_r: f64,
    /// Atomic polarization decay rate γ.
    pub gamma: f64,
    /// Probe–cavity detuning Δ_c.
    pub delta_c: f64,
    /// Probe–atom detuning Δ_a.
    pub delta_a: f64,
}

impl CavityParams {
    /// Build from linear-frequency MHz values (multiplied by 2π internally),
    /// the unit convention of the harness config file.
    pub fn from_linear_mhz(
        g_mhz: f64,
        kappa_mhz: f64,
        kappa_r_mhz: f64,
        gamma_mhz: f64,
        delta_c_mhz: f64,
        delta_a_mhz: f64,
    ) -> Result<Self> {
        let p = Self {
            g: TAU * g_mhz,
            kappa: TAU * kappa_mhz,
            kappa_r: TAU * kappa_r_mhz,
            gamma: TAU * gamma_mhz,
            delta_c: TAU * delta_c_mhz,
            delta_a: TAU * delta_a_mhz,
        };
        p.validate()?;
        Ok(p)
    }

    /// Module a: g = 2π·7.6, κ = 2π·2.5, κ_r = 2π·2.3, γ = 2π·3 MHz.
    pub fn module_a_nominal() -> Self {
        Self::from_linear_mhz(7.6, 2.5, 2.3, 3.0, 0.0, 0.0).expect("nominal module a")
    }

    /// Module b: g = 2π·7.6, κ = 2π·2.8, κ_r = 2π·2.4, γ = 2π·3 MHz.
    pub fn module_b_nominal() -> Self {
        Self::from_linear_mhz(7.6, 2.8, 2.4, 3.0, 0.0, 0.0).expect("nominal module b")
    }

    /// Lossless limit: κ_r = κ, no detuning, coupling strong enough that
    /// |r_coupled − 1| and |r_bare + 1| are below 1e-12. Used to recover the
    /// ideal protocol from the physical one.
    pub fn idealized() -> Self {
        Self::from_linear_mhz(1e8, 2.5, 2.5, 3.0, 0.0, 0.0).expect("idealized cavity")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) || !(self.kappa > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(
                "cavity rates g, kappa, gamma must be positive".into(),
            ));
        }
        if !(self.kappa_r > 0.0 && self.kappa_r <= self.kappa) {
            return Err(Error::InvalidParameter(
                "kappa_r must satisfy 0 < kappa_r <= kappa".into(),
            ));
        }
        Ok(())
    }

    /// The same cavity with the probe–cavity detuning shifted (lock jitter).
    pub fn with_cavity_detuning_offset(&self, offset: f64) -> Self {
        Self {
            delta_c: self.delta_c + offset,
            ..*self
        }
    }
}

/// The two reflection responses of one module.
#[derive(Clone, Copy, Debug)]
pub struct ReflectionAmplitudes {
    /// Atom in |↑z⟩ and photon |R⟩: the coupled, normal-mode-split response.
    pub r_coupled: C64,
    /// Every other atom/polarization combination: empty-cavity response.
    pub r_bare: C64,
}

/// Steady-state reflection amplitude of a single-sided cavity.
pub fn reflection_amplitude(p: &CavityParams, coupled: bool) -> C64 {
    let g_eff = if coupled { p.g } else { 0.0 };
    let denom = c(p.kappa, p.delta_c) + c(g_eff * g_eff, 0.0) / c(p.gamma, p.delta_a);
    c(1.0, 0.0) - c(2.0 * p.kappa_r, 0.0) / denom
}

/// Both responses of a module, with passivity checked (|r| ≤ 1).
pub fn reflection_amplitudes(p: &CavityParams) -> Result<ReflectionAmplitudes> {
    p.validate()?;
    let amps = ReflectionAmplitudes {
        r_coupled: reflection_amplitude(p, true),
        r_bare: reflection_amplitude(p, false),
    };
    for (name, r) in [("coupled", amps.r_coupled), ("bare", amps.r_bare)] {
        if r.norm() > 1.0 + 1e-12 {
            return Err(Error::NonPhysical(format!(
                "{name} reflection amplitude |r| = {} exceeds 1",
                r.norm()
            )));
        }
    }
    Ok(amps)
}

fn atom_pol_label() -> HilbertLabel {
    HilbertLabel::new(&[("atom", 2), ("polarization", 2)]).expect("atom ⊗ polarization")
}

/// The ideal lossless reflection: diagonal (+1, −1, −1, −1) in the basis
/// {|↑z R⟩, |↑z L⟩, |↓z R⟩, |↓z L⟩}. Only a coupled atom with |R⟩ light
/// avoids the π phase of entering the resonator.
pub fn ideal_reflection() -> LinearOp {
    let d = [1.0, -1.0, -1.0, -1.0];
    let m = DMatrix::from_fn(4, 4, |i, j| if i == j { c(d[i], 0.0) } else { c(0.0, 0.0) });
    LinearOp::unitary(atom_pol_label(), m).expect("ideal reflection is unitary")
}

/// Coherent admixture of the cavity response with mirror-like reflection of
/// the non-mode-matched light: `√m · r + (1 − √m) · (+1)`.
pub fn mode_matched_amplitude(r: C64, mode_match: f64) -> C64 {
    let sm = mode_match.sqrt();
    c(sm, 0.0) * r + c(1.0 - sm, 0.0)
}

/// The physical (lossy, detuned, partially mode-matched) reflection map on
/// atom ⊗ polarization. Diagonal but generally non-unitary: sub-unit entries
/// encode photon loss into the cavity and the atom.
pub fn physical_reflection(p: &CavityParams, mode_match: f64) -> Result<LinearOp> {
    if !(0.0..=1.0).contains(&mode_match) {
        return Err(Error::InvalidParameter(format!(
            "mode_match {mode_match} outside [0, 1]"
        )));
    }
    let amps = reflection_amplitudes(p)?;
    let a_coupled = mode_matched_amplitude(amps.r_coupled, mode_match);
    let a_bare = mode_matched_amplitude(amps.r_bare, mode_match);
    let d = [a_coupled, a_bare, a_bare, a_bare];
    let m = DMatrix::from_fn(4, 4, |i, j| if i == j { d[i] } else { c(0.0, 0.0) });
    LinearOp::new(atom_pol_label(), m)
}

/// Quarter-wave plate orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveplateSign {
    /// T_{λ/4} = (1/√2) [[−i, 1], [1, −i]]; maps |A⟩→|R⟩, |D⟩→|L⟩.
    Plus,
    /// T_{−λ/4} = (1/√2) [[i, 1], [1, i]]; maps |R⟩→|A⟩.
    Minus,
}

/// Quarter-wave plate transformation on the polarization qubit.
pub fn waveplate(sign: WaveplateSign) -> LinearOp {
    let s = match sign {
        WaveplateSign::Plus => -1.0,
        WaveplateSign::Minus => 1.0,
    };
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            c(0.0, s * SQRT_HALF),
            c(SQRT_HALF, 0.0),
            c(SQRT_HALF, 0.0),
            c(0.0, s * SQRT_HALF),
        ],
    );
    LinearOp::unitary(HilbertLabel::polarization(), m).expect("waveplate is unitary")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
}

/// The protocol only ever uses π and π/2 pulses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationAngle {
    Pi,
    HalfPi,
}

/// Raman-pulse rotation of one atomic qubit:
///
/// ```text
/// T^y_{π/2} = (1/√2) [[1, −1], [1, 1]]    T^x_{π/2} = (1/√2) [[1, −i], [−i, 1]]
/// T^y_{π}   = [[0, −1], [1, 0]]           T^x_{π}   = [[0, −i], [−i, 0]]
/// ```
///
/// With `inverse` the adjoint pulse is returned.
pub fn qubit_rotation(axis: RotationAxis, angle: RotationAngle, inverse: bool) -> LinearOp {
    let m = match (axis, angle) {
        (RotationAxis::Y, RotationAngle::HalfPi) => DMatrix::from_row_slice(
            2,
            2,
            &[
                c(SQRT_HALF, 0.0),
                c(-SQRT_HALF, 0.0),
                c(SQRT_HALF, 0.0),
                c(SQRT_HALF, 0.0),
            ],
        ),
        (RotationAxis::X, RotationAngle::HalfPi) => DMatrix::from_row_slice(
            2,
            2,
            &[
                c(SQRT_HALF, 0.0),
                c(0.0, -SQRT_HALF),
                c(0.0, -SQRT_HALF),
                c(SQRT_HALF, 0.0),
            ],
        ),
        (RotationAxis::Y, RotationAngle::Pi) => DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ),
        (RotationAxis::X, RotationAngle::Pi) => DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.0)],
        ),
    };
    let m = if inverse { m.adjoint() } else { m };
    LinearOp::unitary(HilbertLabel::single("atom", 2), m).expect("rotation is unitary")
}

/// Rotation of the linear-polarization plane by `theta`: diag(e^{−iθ},
/// e^{iθ}) in the R/L basis, which carries |A⟩ toward |D⟩ (Malus law
/// cos²θ). θ = 0 is the identity.
pub fn polarization_misalignment(theta: f64) -> Result<LinearOp> {
    if !(theta.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "misalignment angle {theta} outside (−π/2, π/2)"
        )));
    }
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from_polar(1.0, -theta),
            c(0.0, 0.0),
            c(0.0, 0.0),
            C64::from_polar(1.0, theta),
        ],
    );
    LinearOp::unitary(HilbertLabel::polarization(), m)
}

/// Basis change from R/L amplitudes to A/D amplitudes: rows ⟨A| = (−i, 1)/√2
/// and ⟨D| = (1, −i)/√2. The detection setup measures in this basis.
pub fn detection_basis_change() -> LinearOp {
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            c(0.0, -SQRT_HALF),
            c(SQRT_HALF, 0.0),
            c(SQRT_HALF, 0.0),
            c(0.0, -SQRT_HALF),
        ],
    );
    LinearOp::unitary(HilbertLabel::polarization(), m).expect("detection basis change is unitary")
}
