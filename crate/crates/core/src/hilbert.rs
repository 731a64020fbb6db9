//! Labeled tensor-product Hilbert spaces.
//!
//! States, operators and density matrices here carry a [`HilbertLabel`]
//! naming their subsystems, so composite operations (tensor products,
//! partial traces, applying an operator to a named subset) are checked by
//! name and dimension rather than by index arithmetic at every call site.
//!
//! Conventions used throughout the crate:
//! - atoms are qubits with basis `|↑z⟩ = (1, 0)`, `|↓z⟩ = (0, 1)`;
//! - photon polarization is a qubit with basis `|R⟩ = (1, 0)`, `|L⟩ = (0, 1)`;
//! - subsystem order in a label is significant (row-major index layout,
//!   first subsystem most significant);
//! - states may be sub-normalized: conditional branches carry their success
//!   probability as the squared norm, and renormalization happens exactly
//!   once, at herald acceptance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Tolerance for Hermiticity and idempotency checks.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance on negative density-operator eigenvalues.
pub const EIGENVALUE_TOL: f64 = 1e-10;
/// Tolerance on norms and traces.
pub const NORM_TOL: f64 = 1e-12;

/// One named subsystem of a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subsystem {
    pub name: String,
    pub dim: usize,
}

/// An ordered list of named subsystems; the index layout is row-major with
/// the first subsystem most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertLabel {
    subsystems: Vec<Subsystem>,
}

impl HilbertLabel {
    pub fn new(subsystems: &[(&str, usize)]) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidParameter("empty subsystem list".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (name, dim) in subsystems {
            if *dim == 0 {
                return Err(Error::InvalidParameter(format!(
                    "subsystem {name} has dimension 0"
                )));
            }
            if !seen.insert(*name) {
                return Err(Error::NameCollision((*name).into()));
            }
        }
        Ok(Self {
            subsystems: subsystems
                .iter()
                .map(|(n, d)| Subsystem {
                    name: (*n).into(),
                    dim: *d,
                })
                .collect(),
        })
    }

    pub fn single(name: &str, dim: usize) -> Self {
        Self::new(&[(name, dim)]).expect("single subsystem label")
    }

    /// A single atomic qubit.
    pub fn atom(name: &str) -> Self {
        Self::single(name, 2)
    }

    /// The photon polarization qubit.
    pub fn polarization() -> Self {
        Self::single("polarization", 2)
    }

    /// The two stationary qubits, `atom-a` (first reflection) then `atom-b`.
    pub fn two_atoms() -> Self {
        Self::new(&[("atom-a", 2), ("atom-b", 2)]).expect("two-atom label")
    }

    /// atom-a ⊗ atom-b ⊗ polarization, the full ideal-protocol space.
    pub fn atoms_and_photon() -> Self {
        Self::new(&[("atom-a", 2), ("atom-b", 2), ("polarization", 2)])
            .expect("atoms+photon label")
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    /// Total dimension (product of subsystem dimensions).
    pub fn dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSubsystem(name.into()))
    }

    /// Row-major strides, one per subsystem.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.subsystems.len()];
        for i in (0..self.subsystems.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].dim;
        }
        strides
    }

    /// Concatenate two labels; subsystem names must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut subsystems = self.subsystems.clone();
        for s in &other.subsystems {
            if subsystems.iter().any(|t| t.name == s.name) {
                return Err(Error::NameCollision(s.name.clone()));
            }
            subsystems.push(s.clone());
        }
        Ok(Self { subsystems })
    }

    /// The label restricted to `names`, preserving this label's order.
    /// Every requested name must exist.
    pub fn restricted(&self, names: &[&str]) -> Result<Self> {
        for n in names {
            self.position(n)?;
        }
        let subsystems: Vec<Subsystem> = self
            .subsystems
            .iter()
            .filter(|s| names.contains(&s.name.as_str()))
            .cloned()
            .collect();
        if subsystems.is_empty() {
            return Err(Error::InvalidParameter("empty restriction".into()));
        }
        Ok(Self { subsystems })
    }

    pub fn names(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.name.as_str()).collect()
    }
}

/// Flat-index bookkeeping for operations that act on a subset of subsystems.
///
/// `target_offsets[t]` is the flat-index contribution of target multi-index
/// `t` (targets enumerated in the order given, first target most
/// significant); `rest_offsets` enumerates the flat-index contributions of
/// all non-target subsystems.
pub(crate) struct TargetMap {
    pub target_offsets: Vec<usize>,
    pub rest_offsets: Vec<usize>,
    pub dim_t: usize,
}

impl TargetMap {
    pub fn build(label: &HilbertLabel, targets: &[&str]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidParameter("empty target list".into()));
        }
        let mut positions = Vec::with_capacity(targets.len());
        for t in targets {
            let p = label.position(t)?;
            if positions.contains(&p) {
                return Err(Error::NameCollision(format!("duplicate target {t}")));
            }
            positions.push(p);
        }
        let strides = label.strides();
        let t_dims: Vec<usize> = positions
            .iter()
            .map(|&p| label.subsystems()[p].dim)
            .collect();
        let dim_t: usize = t_dims.iter().product();

        let mut target_offsets = vec![0usize; dim_t];
        for (t, off) in target_offsets.iter_mut().enumerate() {
            let mut rem = t;
            for i in (0..positions.len()).rev() {
                let comp = rem % t_dims[i];
                rem /= t_dims[i];
                *off += comp * strides[positions[i]];
            }
        }

        let rest: Vec<usize> = (0..label.subsystems().len())
            .filter(|p| !positions.contains(p))
            .collect();
        let dim_r: usize = rest.iter().map(|&p| label.subsystems()[p].dim).product();
        let mut rest_offsets = vec![0usize; dim_r];
        for (r, off) in rest_offsets.iter_mut().enumerate() {
            let mut rem = r;
            for &p in rest.iter().rev() {
                let d = label.subsystems()[p].dim;
                let comp = rem % d;
                rem /= d;
                *off += comp * strides[p];
            }
        }

        Ok(Self {
            target_offsets,
            rest_offsets,
            dim_t,
        })
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:+.9e},{:+.9e}", z.re, z.im)
}

fn dump_matrix(m: &DMatrix<C64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_c(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// A (possibly sub-normalized) pure state over a labeled space.
#[derive(Clone, Debug)]
pub struct QuantumState {
    label: HilbertLabel,
    amps: DVector<C64>,
}

impl QuantumState {
    /// Build a state, checking the length and `0 ≤ ⟨ψ|ψ⟩ ≤ 1 + 1e-12`.
    pub fn new(label: HilbertLabel, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != label.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state length {} vs label dimension {}",
                amps.len(),
                label.dim()
            )));
        }
        let n = amps.norm_squared();
        if n > 1.0 + NORM_TOL {
            return Err(Error::NonPhysical(format!("squared norm {n} exceeds 1")));
        }
        Ok(Self { label, amps })
    }

    pub fn from_slice(label: HilbertLabel, amps: &[C64]) -> Result<Self> {
        Self::new(label, DVector::from_column_slice(amps))
    }

    /// The computational basis state with the given flat index.
    pub fn basis(label: HilbertLabel, index: usize) -> Self {
        let dim = label.dim();
        assert!(index < dim, "basis index out of range");
        let mut amps = DVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Self { label, amps }
    }

    pub fn label(&self) -> &HilbertLabel {
        &self.label
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n <= 0.0 {
            return Err(Error::NonPhysical("cannot normalize the zero state".into()));
        }
        Ok(Self {
            label: self.label.clone(),
            amps: &self.amps / C64::new(n.sqrt(), 0.0),
        })
    }

    /// Kronecker product; subsystem names must be disjoint. Norms multiply.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let label = self.label.tensor(&other.label)?;
        let mut amps = DVector::zeros(label.dim());
        let db = other.amps.len();
        for (i, a) in self.amps.iter().enumerate() {
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * db + j] = a * b;
            }
        }
        Ok(Self { label, amps })
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        self.check_same_label(other)?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn to_density(&self) -> DensityOp {
        let m = &self.amps * self.amps.adjoint();
        DensityOp {
            label: self.label.clone(),
            matrix: m,
        }
    }

    fn check_same_label(&self, other: &Self) -> Result<()> {
        if self.label != other.label {
            return Err(Error::DimensionMismatch(format!(
                "labels differ: {:?} vs {:?}",
                self.label.names(),
                other.label.names()
            )));
        }
        Ok(())
    }

    /// Textual dump, one amplitude per line as `re,im`, for golden-file tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for a in self.amps.iter() {
            out.push_str(&fmt_c(*a));
            out.push('\n');
        }
        out
    }
}

/// A linear operator over a labeled space, with an explicit unitarity claim.
#[derive(Clone, Debug)]
pub struct LinearOp {
    label: HilbertLabel,
    matrix: DMatrix<C64>,
    unitary: bool,
}

impl LinearOp {
    /// An operator with no unitarity claim.
    pub fn new(label: HilbertLabel, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != label.dim() || !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix vs label dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                label.dim()
            )));
        }
        Ok(Self {
            label,
            matrix,
            unitary: false,
        })
    }

    /// An operator claimed unitary; the claim is verified to
    /// `‖U†U − I‖_max < 1e-10`.
    pub fn unitary(label: HilbertLabel, matrix: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::new(label, matrix)?;
        let gram = op.matrix.adjoint() * &op.matrix;
        let dev = max_dev_from_identity(&gram);
        if dev >= HERMITICITY_TOL {
            return Err(Error::NonPhysical(format!(
                "unitarity claim violated, ‖U†U − I‖_max = {dev:.3e}"
            )));
        }
        op.unitary = true;
        Ok(op)
    }

    pub fn identity(label: HilbertLabel) -> Self {
        let dim = label.dim();
        Self {
            label,
            matrix: DMatrix::identity(dim, dim),
            unitary: true,
        }
    }

    pub fn label(&self) -> &HilbertLabel {
        &self.label
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn adjoint(&self) -> Self {
        Self {
            label: self.label.clone(),
            matrix: self.matrix.adjoint(),
            unitary: self.unitary,
        }
    }

    /// Kronecker product; subsystem names must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            label: self.label.tensor(&other.label)?,
            matrix: self.matrix.kronecker(&other.matrix),
            unitary: self.unitary && other.unitary,
        })
    }

    /// `self · other` on the same label.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.label != other.label {
            return Err(Error::DimensionMismatch("composition label mismatch".into()));
        }
        Ok(Self {
            label: self.label.clone(),
            matrix: &self.matrix * &other.matrix,
            unitary: self.unitary && other.unitary,
        })
    }

    /// Textual dump, one row per line, entries `re,im` separated by spaces.
    pub fn dump(&self) -> String {
        dump_matrix(&self.matrix)
    }
}

fn max_dev_from_identity(m: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((m[(i, j)] - C64::new(expect, 0.0)).norm());
        }
    }
    dev
}

/// A density operator over a labeled space. May be sub-normalized
/// (trace = branch probability) but must be Hermitian and positive.
#[derive(Clone, Debug)]
pub struct DensityOp {
    label: HilbertLabel,
    matrix: DMatrix<C64>,
}

impl DensityOp {
    /// Build and validate: Hermitian within 1e-10, eigenvalues ≥ −1e-10,
    /// trace in (0, 1 + 1e-10].
    pub fn new(label: HilbertLabel, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != label.dim() || !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix vs label dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                label.dim()
            )));
        }
        let op = Self { label, matrix };
        op.validate()?;
        Ok(op)
    }

    /// Build without validation, for internal sub-normalized branch
    /// bookkeeping where intermediate traces may be zero.
    pub(crate) fn new_unchecked(label: HilbertLabel, matrix: DMatrix<C64>) -> Self {
        Self { label, matrix }
    }

    pub fn from_pure(state: &QuantumState) -> Self {
        state.to_density()
    }

    pub fn maximally_mixed(label: HilbertLabel) -> Self {
        let dim = label.dim();
        let m = DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
        Self { label, matrix: m }
    }

    pub fn label(&self) -> &HilbertLabel {
        &self.label
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn renormalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::NonPhysical(
                "cannot renormalize a zero-trace operator".into(),
            ));
        }
        Ok(Self {
            label: self.label.clone(),
            matrix: &self.matrix / C64::new(t, 0.0),
        })
    }

    /// Hermiticity, positivity and trace checks per the type invariants.
    pub fn validate(&self) -> Result<()> {
        let dev = hermiticity_deviation(&self.matrix);
        if dev >= HERMITICITY_TOL {
            return Err(Error::NonPhysical(format!(
                "not Hermitian, max |ρ − ρ†| = {dev:.3e}"
            )));
        }
        let t = self.trace();
        if t <= 0.0 || t > 1.0 + EIGENVALUE_TOL {
            return Err(Error::NonPhysical(format!("trace {t} outside (0, 1]")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -EIGENVALUE_TOL {
            return Err(Error::NonPhysical(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Real eigenvalues of the (Hermitian) matrix, unordered.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Nested JSON array of `[re, im]` pairs, row-major.
    pub fn to_json(&self) -> serde_json::Value {
        matrix_to_json(&self.matrix)
    }

    /// Textual dump, one row per line, entries `re,im` separated by spaces.
    pub fn dump(&self) -> String {
        dump_matrix(&self.matrix)
    }
}

/// Nested JSON array of `[re, im]` pairs, row-major.
pub fn matrix_to_json(m: &DMatrix<C64>) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = (0..m.nrows())
        .map(|i| {
            let row: Vec<serde_json::Value> = (0..m.ncols())
                .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                .collect();
            serde_json::Value::Array(row)
        })
        .collect();
    serde_json::Value::Array(rows)
}

pub(crate) fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues of a Hermitian matrix (symmetrized first to wash out
/// floating-point asymmetry).
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let sym = (m + m.adjoint()) / C64::new(2.0, 0.0);
    sym.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Apply `op` to the named target subsystems of a state, identity elsewhere.
/// The operator dimension must match the product of target dimensions, with
/// targets enumerated in the order given.
pub fn apply(op: &LinearOp, state: &QuantumState, targets: &[&str]) -> Result<QuantumState> {
    let tm = TargetMap::build(state.label(), targets)?;
    if op.matrix().nrows() != tm.dim_t {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} vs target dimension {}",
            op.matrix().nrows(),
            tm.dim_t
        )));
    }
    let x = state.amplitudes();
    let mut y = DVector::zeros(x.len());
    let m = op.matrix();
    for &r in &tm.rest_offsets {
        for tp in 0..tm.dim_t {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..tm.dim_t {
                acc += m[(tp, t)] * x[r + tm.target_offsets[t]];
            }
            y[r + tm.target_offsets[tp]] = acc;
        }
    }
    Ok(QuantumState {
        label: state.label.clone(),
        amps: y,
    })
}

/// Apply `op` to the named targets of a density operator: `ρ → M ρ M†`
/// with `M = op ⊗ identity`. Not trace-preserving unless `op` is unitary.
pub fn apply_density(op: &LinearOp, rho: &DensityOp, targets: &[&str]) -> Result<DensityOp> {
    let full = expand_to_full(op, rho.label(), targets)?;
    let m = full.matrix();
    Ok(DensityOp {
        label: rho.label.clone(),
        matrix: m * &rho.matrix * m.adjoint(),
    })
}

/// Embed `op` acting on `targets` into the full space of `label`.
pub fn expand_to_full(op: &LinearOp, label: &HilbertLabel, targets: &[&str]) -> Result<LinearOp> {
    let tm = TargetMap::build(label, targets)?;
    if op.matrix().nrows() != tm.dim_t {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} vs target dimension {}",
            op.matrix().nrows(),
            tm.dim_t
        )));
    }
    let dim = label.dim();
    let mut full = DMatrix::zeros(dim, dim);
    let m = op.matrix();
    for &r in &tm.rest_offsets {
        for tp in 0..tm.dim_t {
            for t in 0..tm.dim_t {
                full[(r + tm.target_offsets[tp], r + tm.target_offsets[t])] = m[(tp, t)];
            }
        }
    }
    Ok(LinearOp {
        label: label.clone(),
        matrix: full,
        unitary: op.unitary,
    })
}

/// Partial trace keeping the named subsystems (in their original label
/// order; the argument is treated as a set).
pub fn partial_trace(rho: &DensityOp, keep: &[&str]) -> Result<DensityOp> {
    let keep_label = rho.label().restricted(keep)?;
    let keep_names = keep_label.names();
    let tm = TargetMap::build(rho.label(), &keep_names)?;
    let dim_k = tm.dim_t;
    let mut out = DMatrix::zeros(dim_k, dim_k);
    let m = rho.matrix();
    for k in 0..dim_k {
        for kp in 0..dim_k {
            let mut acc = C64::new(0.0, 0.0);
            for &r in &tm.rest_offsets {
                acc += m[(r + tm.target_offsets[k], r + tm.target_offsets[kp])];
            }
            out[(k, kp)] = acc;
        }
    }
    Ok(DensityOp {
        label: keep_label,
        matrix: out,
    })
}

/// Project the named targets of a (possibly sub-normalized) state with the
/// idempotent operator `proj`. Returns the *non-renormalized* branch and its
/// conditional probability `‖P ψ‖² / ‖ψ‖²`.
pub fn project(
    state: &QuantumState,
    proj: &LinearOp,
    targets: &[&str],
) -> Result<(QuantumState, f64)> {
    let p2 = proj.matrix() * proj.matrix();
    let mut dev: f64 = 0.0;
    for i in 0..p2.nrows() {
        for j in 0..p2.ncols() {
            dev = dev.max((p2[(i, j)] - proj.matrix()[(i, j)]).norm());
        }
    }
    if dev >= HERMITICITY_TOL {
        return Err(Error::NonIdempotentProjector(dev));
    }
    let norm_in = state.norm_sq();
    if norm_in <= 0.0 {
        return Err(Error::NonPhysical("projecting the zero state".into()));
    }
    let branch = apply(proj, state, targets)?;
    let p = branch.norm_sq() / norm_in;
    Ok((branch, p))
}

/// Fidelity `F = ⟨ψ|ρ|ψ⟩` of a density operator with a normalized pure
/// target, clipped to `[0, 1]`.
pub fn fidelity_pure(rho: &DensityOp, target: &QuantumState) -> Result<f64> {
    if rho.label() != target.label() {
        return Err(Error::DimensionMismatch(format!(
            "labels differ: {:?} vs {:?}",
            rho.label().names(),
            target.label().names()
        )));
    }
    if (target.norm_sq() - 1.0).abs() > 1e-9 {
        return Err(Error::NonPhysical(format!(
            "fidelity target is not normalized (norm² = {})",
            target.norm_sq()
        )));
    }
    let v = target.amplitudes();
    let f = (v.adjoint() * rho.matrix() * v)[(0, 0)];
    if f.im.abs() >= HERMITICITY_TOL {
        return Err(Error::NonPhysical(format!(
            "fidelity has imaginary residue {:.3e}",
            f.im
        )));
    }
    Ok(f.re.clamp(0.0, 1.0))
}

/// Trace distance `½ ‖a − b‖₁` between two density operators.
pub fn trace_distance(a: &DensityOp, b: &DensityOp) -> Result<f64> {
    if a.label() != b.label() {
        return Err(Error::DimensionMismatch("trace distance label mismatch".into()));
    }
    let diff = a.matrix() - b.matrix();
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// Canonical single-subsystem kets.
pub mod kets {
    use super::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn ket2(label: HilbertLabel, a0: C64, a1: C64) -> QuantumState {
        QuantumState::from_slice(label, &[a0, a1]).expect("qubit ket")
    }

    /// |↑z⟩ = (1, 0) on the named atom.
    pub fn up_z(name: &str) -> QuantumState {
        ket2(HilbertLabel::atom(name), C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    /// |↓z⟩ = (0, 1).
    pub fn down_z(name: &str) -> QuantumState {
        ket2(HilbertLabel::atom(name), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    /// |↑x⟩ = (|↑z⟩ + |↓z⟩)/√2.
    pub fn up_x(name: &str) -> QuantumState {
        ket2(
            HilbertLabel::atom(name),
            C64::new(SQRT_HALF, 0.0),
            C64::new(SQRT_HALF, 0.0),
        )
    }

    /// |↓x⟩ = (|↑z⟩ − |↓z⟩)/√2.
    pub fn down_x(name: &str) -> QuantumState {
        ket2(
            HilbertLabel::atom(name),
            C64::new(SQRT_HALF, 0.0),
            C64::new(-SQRT_HALF, 0.0),
        )
    }

    /// |↑y⟩ = (|↑z⟩ + i|↓z⟩)/√2.
    pub fn up_y(name: &str) -> QuantumState {
        ket2(
            HilbertLabel::atom(name),
            C64::new(SQRT_HALF, 0.0),
            C64::new(0.0, SQRT_HALF),
        )
    }

    /// |R⟩ = (1, 0), right-circular polarization.
    pub fn pol_r() -> QuantumState {
        ket2(
            HilbertLabel::polarization(),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        )
    }

    /// |L⟩ = (0, 1), left-circular polarization.
    pub fn pol_l() -> QuantumState {
        ket2(
            HilbertLabel::polarization(),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        )
    }

    /// |A⟩ = (i|R⟩ + |L⟩)/√2.
    pub fn pol_a() -> QuantumState {
        ket2(
            HilbertLabel::polarization(),
            C64::new(0.0, SQRT_HALF),
            C64::new(SQRT_HALF, 0.0),
        )
    }

    /// |D⟩ = (|R⟩ + i|L⟩)/√2, orthogonal to |A⟩.
    pub fn pol_d() -> QuantumState {
        ket2(
            HilbertLabel::polarization(),
            C64::new(SQRT_HALF, 0.0),
            C64::new(0.0, SQRT_HALF),
        )
    }
}
