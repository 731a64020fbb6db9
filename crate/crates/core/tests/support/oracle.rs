//! Brute-force density-matrix evolution of the physical protocol in a
//! photon-number-truncated Fock space.
//!
//! This is the independent cross-check for the production amplitude path:
//! the optical state lives explicitly on Fock_R ⊗ Fock_L (dimension
//! (cutoff+1)² per mode pair), every element is applied as a matrix channel,
//! and detection is an explicit POVM. Nothing here touches the
//! coherent-overlap formulas under test.
//!
//! Every protocol element is diagonal in the two-atom basis, so the joint
//! state is stored as 16 field blocks B[s][s'] with
//! ρ = Σ |s⟩⟨s'| ⊗ B[s][s'].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use nlgate::hilbert::{DensityOp, HilbertLabel, LinearOp};
use nlgate::optics::{
    detection_basis_change, mode_matched_amplitude, polarization_misalignment,
    reflection_amplitudes, waveplate, WaveplateSign,
};
use nlgate::protocol::{ImperfectionView, ProtocolConfig, ShotParams};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub struct FockOracle {
    cutoff: usize,
    fdim: usize,
    /// B[s][s'] with s = 2·(atom-a is ↓) + (atom-b is ↓)
    blocks: Vec<Vec<DMatrix<C64>>>,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOutcome {
    pub p_a: f64,
    pub p_d: f64,
    pub p_none: f64,
}

impl FockOracle {
    fn idx(&self, n_r: usize, n_l: usize) -> usize {
        n_r * (self.cutoff + 1) + n_l
    }

    /// Initial state: atoms in `rho_atoms`, field in the (unnormalized)
    /// projection of a coherent state with mean photon number `mean_n` onto
    /// at most `cutoff` photons, all in the R mode.
    pub fn new(rho_atoms: &DensityOp, mean_n: f64, cutoff: usize) -> Self {
        let fdim = (cutoff + 1) * (cutoff + 1);
        let mut phi = DVector::<C64>::zeros(fdim);
        let alpha = mean_n.sqrt();
        let mut amp = (-mean_n / 2.0).exp();
        let mut fact = 1.0f64;
        for n in 0..=cutoff {
            if n > 0 {
                fact *= n as f64;
                amp = (-mean_n / 2.0).exp() * alpha.powi(n as i32) / fact.sqrt();
            }
            phi[n * (cutoff + 1)] = c(amp, 0.0);
        }
        let field = &phi * phi.adjoint();
        let blocks = (0..4)
            .map(|s| {
                (0..4)
                    .map(|sp| &field * rho_atoms.matrix()[(s, sp)])
                    .collect()
            })
            .collect();
        Self { cutoff, fdim, blocks }
    }

    /// Two-mode passive transformation Γ(U) induced by a 2×2 polarization
    /// unitary, applied to every block.
    pub fn apply_polarization(&mut self, u: &LinearOp) {
        let g = self.gamma(u);
        let gd = g.adjoint();
        for row in &mut self.blocks {
            for b in row.iter_mut() {
                *b = &g * &*b * &gd;
            }
        }
    }

    fn gamma(&self, u: &LinearOp) -> DMatrix<C64> {
        let m = u.matrix();
        let (u_rr, u_rl) = (m[(0, 0)], m[(0, 1)]);
        let (u_lr, u_ll) = (m[(1, 0)], m[(1, 1)]);
        let n = self.cutoff;
        let mut g = DMatrix::<C64>::identity(self.fdim, self.fdim);
        let binom = binomial_table(n);
        let factorial: Vec<f64> = (0..=n).scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
        for n_r in 0..=n {
            for n_l in 0..=(n - n_r) {
                let col = self.idx(n_r, n_l);
                for x in g.column_mut(col).iter_mut() {
                    *x = c(0.0, 0.0);
                }
                // (Σ U_{iR} a_i†)^{n_r} (Σ U_{iL} a_i†)^{n_l} |00⟩ / √(n_r! n_l!)
                for j in 0..=n_r {
                    for k in 0..=n_l {
                        let p = j + k;
                        let q = n_r + n_l - p;
                        let coeff = c(binom[n_r][j], 0.0)
                            * c(binom[n_l][k], 0.0)
                            * u_rr.powu(j as u32)
                            * u_lr.powu((n_r - j) as u32)
                            * u_rl.powu(k as u32)
                            * u_ll.powu((n_l - k) as u32)
                            * c(
                                (factorial[p] * factorial[q] / (factorial[n_r] * factorial[n_l]))
                                    .sqrt(),
                                0.0,
                            );
                        g[(self.idx(p, q), col)] += coeff;
                    }
                }
            }
        }
        g
    }

    /// Single-mode attenuation Kraus operator E_k(d) on the truncated Fock
    /// space: lose exactly k photons through a beamsplitter with (complex)
    /// transmission amplitude d.
    fn kraus(&self, d: C64, k: usize) -> DMatrix<C64> {
        let n = self.cutoff;
        let binom = binomial_table(n);
        let loss = (1.0 - d.norm_sqr()).max(0.0).sqrt();
        let mut e = DMatrix::<C64>::zeros(n + 1, n + 1);
        for src in k..=n {
            e[(src - k, src)] =
                c(binom[src][k].sqrt(), 0.0) * d.powu((src - k) as u32) * c(loss.powi(k as i32), 0.0);
        }
        e
    }

    fn expand_r(&self, e: &DMatrix<C64>) -> DMatrix<C64> {
        e.kronecker(&DMatrix::<C64>::identity(self.cutoff + 1, self.cutoff + 1))
    }

    fn expand_l(&self, e: &DMatrix<C64>) -> DMatrix<C64> {
        DMatrix::<C64>::identity(self.cutoff + 1, self.cutoff + 1).kronecker(e)
    }

    /// Uniform (branch-independent) attenuation of both modes: a shared
    /// bath per mode.
    pub fn apply_loss(&mut self, eta: f64) {
        let d = c(eta.sqrt(), 0.0);
        let kraus_r: Vec<DMatrix<C64>> =
            (0..=self.cutoff).map(|k| self.expand_r(&self.kraus(d, k))).collect();
        let kraus_l: Vec<DMatrix<C64>> =
            (0..=self.cutoff).map(|k| self.expand_l(&self.kraus(d, k))).collect();
        for row in &mut self.blocks {
            for b in row.iter_mut() {
                *b = shared_channel(b, &kraus_r, &kraus_r);
                *b = shared_channel(b, &kraus_l, &kraus_l);
            }
        }
    }

    /// Reflection from one module. The R mode sees the coupled response for
    /// an atom in |↑z⟩ and the bare response otherwise; the L mode always
    /// sees the bare response. Coupled-branch loss (atomic emission) and
    /// bare-branch loss (mirror scattering) go to orthogonal baths, so
    /// blocks between a coupled and a bare branch keep only the
    /// zero-photons-lost Kraus cross term.
    pub fn apply_module(&mut self, coupled: C64, bare: C64, module_a: bool) {
        let kraus_c: Vec<DMatrix<C64>> =
            (0..=self.cutoff).map(|k| self.expand_r(&self.kraus(coupled, k))).collect();
        let kraus_b: Vec<DMatrix<C64>> =
            (0..=self.cutoff).map(|k| self.expand_r(&self.kraus(bare, k))).collect();
        let kraus_l: Vec<DMatrix<C64>> =
            (0..=self.cutoff).map(|k| self.expand_l(&self.kraus(bare, k))).collect();
        let is_up = |s: usize| if module_a { s < 2 } else { s % 2 == 0 };
        for s in 0..4 {
            for sp in 0..4 {
                let b = &mut self.blocks[s][sp];
                let (left, right) = (is_up(s), is_up(sp));
                *b = match (left, right) {
                    (true, true) => shared_channel(b, &kraus_c, &kraus_c),
                    (false, false) => shared_channel(b, &kraus_b, &kraus_b),
                    (true, false) => &kraus_c[0] * &*b * kraus_b[0].adjoint(),
                    (false, true) => &kraus_b[0] * &*b * kraus_c[0].adjoint(),
                };
                *b = shared_channel(b, &kraus_l, &kraus_l);
            }
        }
    }

    /// Threshold detection on the rotated (A, D) mode pair. Returns event
    /// probabilities and the conditional (renormalized) atomic states for
    /// the two heralds.
    pub fn detect(&self, rho_atoms_label: &HilbertLabel) -> (OracleOutcome, DensityOp, DensityOp) {
        let mut w_a = DMatrix::<C64>::zeros(4, 4);
        let mut w_d = DMatrix::<C64>::zeros(4, 4);
        let mut w_none = DMatrix::<C64>::zeros(4, 4);
        for s in 0..4 {
            for sp in 0..4 {
                let b = &self.blocks[s][sp];
                // click on A (any n ≥ 1 in the A slot), D slot empty
                let mut a = c(0.0, 0.0);
                for n in 1..=self.cutoff {
                    a += b[(self.idx(n, 0), self.idx(n, 0))];
                }
                let mut d = c(0.0, 0.0);
                for m in 1..=self.cutoff {
                    d += b[(self.idx(0, m), self.idx(0, m))];
                }
                w_a[(s, sp)] = a;
                w_d[(s, sp)] = d;
                w_none[(s, sp)] = b[(self.idx(0, 0), self.idx(0, 0))];
            }
        }
        let p_a = w_a.trace().re;
        let p_d = w_d.trace().re;
        let p_none = w_none.trace().re;
        let norm = |m: DMatrix<C64>, p: f64| {
            DensityOp::new(rho_atoms_label.clone(), m / c(p.max(1e-300), 0.0))
                .expect("oracle conditional state is physical")
        };
        (
            OracleOutcome { p_a, p_d, p_none },
            norm(w_a, p_a),
            norm(w_d, p_d),
        )
    }
}

fn shared_channel(
    b: &DMatrix<C64>,
    kraus_left: &[DMatrix<C64>],
    kraus_right: &[DMatrix<C64>],
) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(b.nrows(), b.ncols());
    for (el, er) in kraus_left.iter().zip(kraus_right.iter()) {
        out += el * b * er.adjoint();
    }
    out
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = 1.0;
        for j in 1..=i {
            row[j] = row[j - 1] * ((i - j + 1) as f64) / (j as f64);
        }
    }
    t
}

/// Run the full optical chain of the physical protocol in the truncated
/// Fock space and return herald probabilities and conditional atomic states
/// (no feedback, no atomic-side channels — pure optics plus detection).
pub fn run_fock_oracle(
    rho_atoms: &DensityOp,
    cfg: &ProtocolConfig,
    view: &ImperfectionView,
    shot: &ShotParams,
    mean_n: f64,
    cutoff: usize,
) -> (OracleOutcome, DensityOp, DensityOp) {
    let mut oracle = FockOracle::new(rho_atoms, mean_n, cutoff);
    oracle.apply_polarization(&waveplate(WaveplateSign::Minus));
    oracle.apply_loss(cfg.eta_pre);

    let cav_a = cfg
        .module_a
        .cavity
        .with_cavity_detuning_offset(shot.delta_c_offset_a);
    let ra = reflection_amplitudes(&cav_a).expect("valid module a");
    oracle.apply_module(
        mode_matched_amplitude(ra.r_coupled, view.mode_match_a),
        mode_matched_amplitude(ra.r_bare, view.mode_match_a),
        true,
    );
    if view.theta != 0.0 {
        oracle.apply_polarization(&polarization_misalignment(view.theta).expect("theta"));
    }
    oracle.apply_polarization(&waveplate(WaveplateSign::Plus));
    oracle.apply_loss(cfg.eta_link);

    let cav_b = cfg
        .module_b
        .cavity
        .with_cavity_detuning_offset(shot.delta_c_offset_b);
    let rb = reflection_amplitudes(&cav_b).expect("valid module b");
    oracle.apply_module(
        mode_matched_amplitude(rb.r_coupled, view.mode_match_b),
        mode_matched_amplitude(rb.r_bare, view.mode_match_b),
        false,
    );
    if view.theta != 0.0 {
        oracle.apply_polarization(&polarization_misalignment(view.theta).expect("theta"));
    }
    oracle.apply_loss(cfg.eta_det);
    oracle.apply_polarization(&detection_basis_change());
    oracle.detect(rho_atoms.label())
}
