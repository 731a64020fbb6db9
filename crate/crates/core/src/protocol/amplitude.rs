//! Per-atomic-branch optical amplitude tracking.
//!
//! Conditioned on a two-atom computational basis pair, every element of the
//! optical chain is linear on the two polarization modes, so each atomic
//! branch keeps the photonic field in a (multimode) coherent product state.
//! We propagate, per branch, the two system-mode amplitudes for unit input
//! plus one amplitude per loss channel opened along the way. Conditional
//! atomic states after threshold detection then follow exactly from
//! coherent-state overlaps; with a photon-number cutoff the exponentials in
//! those overlaps become truncated exponential series, which is the same
//! object the brute-force Fock-space evolution computes.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::hilbert::LinearOp;

/// Atomic basis pairs in two-atom flat order: ↑↑, ↑↓, ↓↑, ↓↓.
pub(crate) const N_BRANCH: usize = 4;

fn atom_a_is_up(branch: usize) -> bool {
    branch < 2
}

fn atom_b_is_up(branch: usize) -> bool {
    branch % 2 == 0
}

/// Which atom a reflection acts on.
#[derive(Clone, Copy, Debug)]
pub(crate) enum ModuleSide {
    A,
    B,
}

/// Unit-input amplitudes of one atomic branch: two system modes plus the
/// accumulated loss-mode amplitudes. The chain is an isometry, so
/// `|sys|² + Σ|env|² = 1` throughout.
#[derive(Clone, Debug)]
pub(crate) struct BranchAmps {
    pub sys: [C64; 2],
    pub env: Vec<C64>,
}

#[derive(Clone, Debug)]
pub(crate) struct OpticalChain {
    pub branches: [BranchAmps; 4],
}

/// Mode-matched reflection entries of one module.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ModuleAmplitudes {
    /// Applied to |R⟩ when the relevant atom is in |↑z⟩.
    pub coupled: C64,
    /// Applied otherwise.
    pub bare: C64,
}

impl OpticalChain {
    /// Fresh chain with the photon in |R⟩.
    pub fn new() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let b = BranchAmps {
            sys: [one, zero],
            env: Vec::new(),
        };
        Self {
            branches: [b.clone(), b.clone(), b.clone(), b],
        }
    }

    /// Apply a polarization-only 2×2 operator (same for every branch).
    pub fn apply_polarization(&mut self, op: &LinearOp) {
        let m = op.matrix();
        debug_assert_eq!(m.nrows(), 2);
        for b in &mut self.branches {
            let [r, l] = b.sys;
            b.sys = [m[(0, 0)] * r + m[(0, 1)] * l, m[(1, 0)] * r + m[(1, 1)] * l];
        }
    }

    /// Scalar transmission `eta` (intensity) on both modes; opens one loss
    /// channel per mode.
    pub fn apply_loss(&mut self, eta: f64) {
        debug_assert!((0.0..=1.0).contains(&eta));
        let t = eta.sqrt();
        let r = (1.0 - eta).max(0.0).sqrt();
        for b in &mut self.branches {
            b.env.push(b.sys[0] * r);
            b.env.push(b.sys[1] * r);
            b.sys[0] *= t;
            b.sys[1] *= t;
        }
    }

    /// Reflection from one module: a branch-dependent diagonal on the
    /// polarization modes, with the lost fraction going to fresh loss modes.
    ///
    /// The coupled response loses photons almost exclusively through atomic
    /// spontaneous emission (g²/γ ≫ κ − κ_r for these cavities), the bare
    /// response through mirror scattering; those are orthogonal baths, so
    /// each polarization mode opens two loss channels and a branch feeds
    /// only the one matching its response.
    pub fn apply_module(&mut self, amps: &ModuleAmplitudes, side: ModuleSide) {
        let zero = C64::new(0.0, 0.0);
        for (s, b) in self.branches.iter_mut().enumerate() {
            let up = match side {
                ModuleSide::A => atom_a_is_up(s),
                ModuleSide::B => atom_b_is_up(s),
            };
            let d_r = if up { amps.coupled } else { amps.bare };
            let d_l = amps.bare;
            // R mode: (coupled-loss channel, bare-loss channel)
            if up {
                b.env.push(b.sys[0] * loss_coeff(d_r));
                b.env.push(zero);
            } else {
                b.env.push(zero);
                b.env.push(b.sys[0] * loss_coeff(d_r));
            }
            // L mode always sees the bare response
            b.env.push(b.sys[1] * loss_coeff(d_l));
            b.sys[0] *= d_r;
            b.sys[1] *= d_l;
        }
    }

    /// `|sys|² + Σ|env|²`, which must stay 1 for every branch.
    #[cfg(test)]
    pub fn total_weight(&self, branch: usize) -> f64 {
        let b = &self.branches[branch];
        b.sys.iter().map(|z| z.norm_sqr()).sum::<f64>()
            + b.env.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

fn loss_coeff(d: C64) -> C64 {
    C64::new((1.0 - d.norm_sqr()).max(0.0).sqrt(), 0.0)
}

/// Photon-number treatment of the coherent-state overlap exponentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Full exponentials; exact for all mean photon numbers.
    Exact,
    /// Truncated exponential series Σ_{n≤N} z^n/n!, matching an input state
    /// projected onto at most N photons.
    Photons(usize),
}

fn ee(z: C64, trunc: Truncation) -> C64 {
    match trunc {
        Truncation::Exact => z.exp(),
        Truncation::Photons(n) => {
            let mut sum = C64::new(1.0, 0.0);
            let mut term = C64::new(1.0, 0.0);
            for k in 1..=n {
                term = term * z / C64::new(k as f64, 0.0);
                sum += term;
            }
            sum
        }
    }
}

/// Entrywise weights for the conditional two-atom state after detection.
/// `w[(s, s')]` multiplies the input matrix element ρ_{ss'}; Hermitian by
/// construction.
#[derive(Clone, Debug)]
pub(crate) struct HeraldWeights {
    /// Real click on detector A, detector D silent.
    pub a: DMatrix<C64>,
    /// Real click on detector D, detector A silent.
    pub d: DMatrix<C64>,
    /// No click on either detector.
    pub none: DMatrix<C64>,
}

/// The photon source feeding the chain.
#[derive(Clone, Copy, Debug)]
pub(crate) enum SourceAmps {
    SinglePhoton,
    Coherent { mean_n: f64, trunc: Truncation },
}

/// Assemble herald weights from a finished chain (system modes already
/// rotated to A/D detector amplitudes).
pub(crate) fn herald_weights(chain: &OpticalChain, source: SourceAmps) -> HeraldWeights {
    let mut a = DMatrix::zeros(N_BRANCH, N_BRANCH);
    let mut d = DMatrix::zeros(N_BRANCH, N_BRANCH);
    let mut none = DMatrix::zeros(N_BRANCH, N_BRANCH);

    for s in 0..N_BRANCH {
        for sp in 0..N_BRANCH {
            let bs = &chain.branches[s];
            let bsp = &chain.branches[sp];
            // cross-overlaps conj(v_{s'}) · v_s, split by mode group
            let ca = bs.sys[0] * bsp.sys[0].conj();
            let cd = bs.sys[1] * bsp.sys[1].conj();
            let ce: C64 = bs
                .env
                .iter()
                .zip(bsp.env.iter())
                .map(|(x, y)| x * y.conj())
                .sum();
            match source {
                SourceAmps::SinglePhoton => {
                    a[(s, sp)] = ca;
                    d[(s, sp)] = cd;
                    none[(s, sp)] = ce;
                }
                SourceAmps::Coherent { mean_n, trunc } => {
                    let n = C64::new(mean_n, 0.0);
                    let damp = C64::new((-mean_n).exp(), 0.0);
                    let t = |x: f64, y: f64| {
                        damp * ee(n * (ce + C64::new(x, 0.0) * ca + C64::new(y, 0.0) * cd), trunc)
                    };
                    let t00 = t(0.0, 0.0);
                    a[(s, sp)] = t(1.0, 0.0) - t00;
                    d[(s, sp)] = t(0.0, 1.0) - t00;
                    none[(s, sp)] = t00;
                }
            }
        }
    }
    HeraldWeights { a, d, none }
}
