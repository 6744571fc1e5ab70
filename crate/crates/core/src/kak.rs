//! Circuit compiler over CNOT and single-qubit rotations.
//!
//! Factorizes unitaries as G = K3 A K1 for the orthogonal (AI) and
//! block-diagonal (AIII) involutions, decomposes two-qubit gates through the
//! magic basis, and recursively splits larger unitaries with the quantum
//! Shannon decomposition.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Deserialize;
use thiserror::Error;

use crate::numkit::{self, c, ComplexMatrix, NumError, RealMatrix};

/// Largest register `circuit_to_unitary` will expand densely.
pub const MAX_DENSE_QUBITS: usize = 10;

const UNITARY_TOL: f64 = 1e-8;
const FIXED_POINT_TOL: f64 = 1e-12;
const DROP_ANGLE: f64 = 1e-13;
const CLASS_TOL: f64 = 1e-9;
const MATCH_TOL: f64 = 1e-6;
const TINY_SINE: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KakError {
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("dimension {0} is not a power of two")]
    DimNotPowerOfTwo(usize),
    #[error("{qubits} qubits exceeds the cap of {cap}")]
    QubitCapExceeded { qubits: usize, cap: usize },
    #[error("degenerate eigenspace could not be resolved: {0}")]
    DegenerateClusterFailure(String),
    #[error("invalid involution: {0}")]
    InvalidInvolution(String),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("circuit JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Numeric(NumError),
}

impl From<NumError> for KakError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::NonUnitary { deviation } => KakError::NonUnitary { deviation },
            NumError::DegenerateClusterFailure { residual } => {
                KakError::DegenerateClusterFailure(format!("residual {residual:.3e}"))
            }
            other => KakError::Numeric(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Cnot,
    Rx,
    Ry,
    Rz,
    /// Global phase e^{i angle}; the target is bookkeeping only.
    Phase,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Cnot => "cnot",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Phase => "phase",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "cnot" => GateKind::Cnot,
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "phase" => GateKind::Phase,
            _ => return None,
        })
    }
}

/// Maps an angle into (-2 pi, 2 pi]; rotations have period 4 pi.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(4.0 * PI);
    if t > 2.0 * PI {
        t - 4.0 * PI
    } else {
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub control: Option<usize>,
    pub target: usize,
    pub angle: Option<f64>,
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Self {
        Gate { kind: GateKind::Cnot, control: Some(control), target, angle: None }
    }

    pub fn rotation(kind: GateKind, target: usize, angle: f64) -> Self {
        debug_assert!(kind != GateKind::Cnot);
        Gate { kind, control: None, target, angle: Some(wrap_angle(angle)) }
    }

    pub fn rx(target: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Rx, target, angle)
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Ry, target, angle)
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Rz, target, angle)
    }

    pub fn phase(target: usize, angle: f64) -> Self {
        Self::rotation(GateKind::Phase, target, angle)
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self.kind, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    /// 2x2 matrix of a rotation gate.
    pub fn matrix(&self) -> Option<ComplexMatrix> {
        let t = self.angle?;
        let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
        let z = c(0.0, 0.0);
        Some(match self.kind {
            GateKind::Rx => {
                ComplexMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)])
            }
            GateKind::Ry => {
                ComplexMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0)])
            }
            GateKind::Rz => ComplexMatrix::from_row_slice(
                2,
                2,
                &[Complex64::from_polar(1.0, -t / 2.0), z, z, Complex64::from_polar(1.0, t / 2.0)],
            ),
            _ => return None,
        })
    }

    fn shifted(&self, offset: usize) -> Gate {
        Gate { control: self.control.map(|q| q + offset), target: self.target + offset, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
    cnot_count: usize,
    one_qubit_count: usize,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Circuit { qubits, gates: Vec::new(), cnot_count: 0, one_qubit_count: 0 }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn cnot_count(&self) -> usize {
        self.cnot_count
    }

    /// Number of X/Y/Z rotations; global phase gates are not counted.
    pub fn one_qubit_count(&self) -> usize {
        self.one_qubit_count
    }

    /// Counts recomputed from the gate list.
    pub fn recount(&self) -> (usize, usize) {
        let cnots = self.gates.iter().filter(|g| g.kind == GateKind::Cnot).count();
        let rots = self.gates.iter().filter(|g| g.is_rotation()).count();
        (cnots, rots)
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), KakError> {
        if gate.target >= self.qubits {
            return Err(KakError::InvalidGate(format!("target {} out of range", gate.target)));
        }
        match (gate.kind, gate.control, gate.angle) {
            (GateKind::Cnot, Some(ctl), None) => {
                if ctl >= self.qubits || ctl == gate.target {
                    return Err(KakError::InvalidGate(format!(
                        "bad control {ctl} for target {}",
                        gate.target
                    )));
                }
                self.cnot_count += 1;
            }
            (GateKind::Cnot, _, _) => {
                return Err(KakError::InvalidGate("cnot needs a control and no angle".into()))
            }
            (_, None, Some(a)) if a.is_finite() => {
                if gate.is_rotation() {
                    self.one_qubit_count += 1;
                }
            }
            _ => {
                return Err(KakError::InvalidGate(format!(
                    "{} needs a finite angle and no control",
                    gate.kind.name()
                )))
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    fn push_shifted(&mut self, gate: Gate, offset: usize) {
        self.push(gate.shifted(offset)).expect("compiler emitted an out-of-range gate");
    }

    /// Appends another circuit acting on qubits `offset..offset + other.qubits`.
    pub fn append(&mut self, other: &Circuit, offset: usize) -> Result<(), KakError> {
        if offset + other.qubits > self.qubits {
            return Err(KakError::DimMismatch { expected: self.qubits, found: offset + other.qubits });
        }
        for g in &other.gates {
            self.push(g.shifted(offset))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{{\"qubits\": {}, \"gates\": [", self.qubits);
        for (i, g) in self.gates.iter().enumerate() {
            out.push_str(if i == 0 { "\n  " } else { ",\n  " });
            match g.kind {
                GateKind::Cnot => {
                    let _ = write!(
                        out,
                        "{{\"kind\": \"cnot\", \"control\": {}, \"target\": {}}}",
                        g.control.unwrap_or(0),
                        g.target
                    );
                }
                k => {
                    let _ = write!(
                        out,
                        "{{\"kind\": \"{}\", \"target\": {}, \"angle\": {:.16e}}}",
                        k.name(),
                        g.target,
                        g.angle.unwrap_or(0.0)
                    );
                }
            }
        }
        if !self.gates.is_empty() {
            out.push('\n');
        }
        out.push_str("]}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Circuit, KakError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct GateJson {
            kind: String,
            control: Option<usize>,
            target: usize,
            angle: Option<f64>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct CircuitJson {
            qubits: usize,
            gates: Vec<GateJson>,
        }
        let parsed: CircuitJson = serde_json::from_str(text).map_err(|e| KakError::Json(e.to_string()))?;
        if parsed.qubits == 0 {
            return Err(KakError::Json("qubits must be positive".into()));
        }
        let mut circuit = Circuit::new(parsed.qubits);
        for g in parsed.gates {
            let kind = GateKind::parse(&g.kind)
                .ok_or_else(|| KakError::Json(format!("unknown gate kind {:?}", g.kind)))?;
            let angle = match (kind, g.angle) {
                (GateKind::Cnot, a) => a,
                (_, Some(a)) => Some(wrap_angle(a)),
                (_, None) => None,
            };
            circuit.push(Gate { kind, control: g.control, target: g.target, angle })?;
        }
        Ok(circuit)
    }
}

fn apply_gate_left(m: &mut ComplexMatrix, gate: &Gate, qubits: usize) {
    let dim = m.nrows();
    let cols = m.ncols();
    let tmask = 1usize << (qubits - 1 - gate.target);
    match gate.kind {
        GateKind::Cnot => {
            let cmask = 1usize << (qubits - 1 - gate.control.unwrap_or(0));
            for i in 0..dim {
                if i & cmask != 0 && i & tmask == 0 {
                    m.swap_rows(i, i | tmask);
                }
            }
        }
        GateKind::Phase => {
            let ph = Complex64::from_polar(1.0, gate.angle.unwrap_or(0.0));
            m.iter_mut().for_each(|z| *z *= ph);
        }
        _ => {
            let g = gate.matrix().expect("rotation gate carries an angle");
            for i in 0..dim {
                if i & tmask == 0 {
                    let j = i | tmask;
                    for k in 0..cols {
                        let (a, b) = (m[(i, k)], m[(j, k)]);
                        m[(i, k)] = g[(0, 0)] * a + g[(0, 1)] * b;
                        m[(j, k)] = g[(1, 0)] * a + g[(1, 1)] * b;
                    }
                }
            }
        }
    }
}

/// Product of the gate matrices, first gate applied first.
pub fn circuit_to_unitary(circuit: &Circuit) -> Result<ComplexMatrix, KakError> {
    if circuit.qubits > MAX_DENSE_QUBITS {
        return Err(KakError::QubitCapExceeded { qubits: circuit.qubits, cap: MAX_DENSE_QUBITS });
    }
    let mut m = numkit::identity(1 << circuit.qubits);
    for g in &circuit.gates {
        apply_gate_left(&mut m, g, circuit.qubits);
    }
    Ok(m)
}

fn check_unitary(u: &ComplexMatrix) -> Result<(), KakError> {
    if u.nrows() != u.ncols() {
        return Err(KakError::DimMismatch { expected: u.nrows(), found: u.ncols() });
    }
    let deviation = numkit::unitarity_deviation(u);
    if deviation.is_nan() || deviation > UNITARY_TOL {
        return Err(KakError::NonUnitary { deviation });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Involutions and KAK factors

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvolutionKind {
    /// Theta(X) = conj(X); K is the real orthogonal group.
    AI,
    /// Theta(X) = J X J with J = diag(I_p, -I_r); K is block diagonal.
    AIII { p: usize, r: usize },
}

impl InvolutionKind {
    /// AIII with equal blocks.
    pub fn aiii_even(dim: usize) -> Result<Self, KakError> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(KakError::InvalidInvolution(format!("dimension {dim} has no equal split")));
        }
        Ok(InvolutionKind::AIII { p: dim / 2, r: dim / 2 })
    }

    fn check_dim(&self, dim: usize) -> Result<(), KakError> {
        match *self {
            InvolutionKind::AI => Ok(()),
            InvolutionKind::AIII { p, r } => {
                if p == 0 || r == 0 {
                    return Err(KakError::InvalidInvolution("AIII blocks must be non-empty".into()));
                }
                if p + r != dim {
                    return Err(KakError::DimMismatch { expected: p + r, found: dim });
                }
                Ok(())
            }
        }
    }
}

/// Applies the involution to a group or algebra element.
pub fn theta_group(kind: InvolutionKind, x: &ComplexMatrix) -> Result<ComplexMatrix, KakError> {
    if x.nrows() != x.ncols() {
        return Err(KakError::DimMismatch { expected: x.nrows(), found: x.ncols() });
    }
    kind.check_dim(x.nrows())?;
    Ok(match kind {
        InvolutionKind::AI => x.map(|z| z.conj()),
        InvolutionKind::AIII { p, .. } => {
            let mut y = x.clone();
            for i in 0..x.nrows() {
                for j in 0..x.ncols() {
                    if (i < p) != (j < p) {
                        y[(i, j)] = -y[(i, j)];
                    }
                }
            }
            y
        }
    })
}

/// Splits an algebra element into its +1 (k) and -1 (m) eigenparts under the involution.
pub fn split_algebra(
    kind: InvolutionKind,
    x: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix), KakError> {
    let t = theta_group(kind, x)?;
    Ok(((x + &t).scale(0.5), (x - &t).scale(0.5)))
}

/// Theta(G^dag) G.
pub fn m_squared(g: &ComplexMatrix, kind: InvolutionKind) -> Result<ComplexMatrix, KakError> {
    check_unitary(g)?;
    Ok(theta_group(kind, &g.adjoint())? * g)
}

#[derive(Debug, Clone)]
pub struct KAKFactors {
    pub k3: ComplexMatrix,
    pub a: ComplexMatrix,
    pub k1: ComplexMatrix,
    pub kind: InvolutionKind,
}

impl KAKFactors {
    pub fn product(&self) -> ComplexMatrix {
        &self.k3 * &self.a * &self.k1
    }
}

pub fn kak_factor(g: &ComplexMatrix, kind: InvolutionKind) -> Result<KAKFactors, KakError> {
    check_unitary(g)?;
    let n = g.nrows();
    kind.check_dim(n)?;
    if (theta_group(kind, g)? - g).norm() < FIXED_POINT_TOL {
        return Ok(KAKFactors { k3: g.clone(), a: numkit::identity(n), k1: numkit::identity(n), kind });
    }
    match kind {
        InvolutionKind::AI => {
            let (k3, d, k1) = kak_ai(g)?;
            Ok(KAKFactors {
                k3: numkit::to_complex(&k3),
                a: ComplexMatrix::from_diagonal(&DVector::from_vec(d)),
                k1: numkit::to_complex(&k1),
                kind,
            })
        }
        InvolutionKind::AIII { p, r } => {
            let cs = csd(g, p)?;
            let k3 = block_diag(&cs.l0, &cs.l1);
            let k1 = block_diag(&cs.r0, &cs.r1);
            let mut a = numkit::identity(n);
            let k = p.min(r);
            // Index i pairs with p + i; the sine sign flips when the blocks were swapped.
            for i in 0..k {
                let (top, bot) = (i, p + i);
                let sign = if p <= r { 1.0 } else { -1.0 };
                a[(top, top)] = c(cs.c[i], 0.0);
                a[(bot, bot)] = c(cs.c[i], 0.0);
                a[(top, bot)] = c(-sign * cs.s[i], 0.0);
                a[(bot, top)] = c(sign * cs.s[i], 0.0);
            }
            Ok(KAKFactors { k3, a, k1, kind })
        }
    }
}

fn block_diag(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, r) = (a.nrows(), b.nrows());
    let mut m = ComplexMatrix::zeros(p + r, p + r);
    m.view_mut((0, 0), (p, p)).copy_from(a);
    m.view_mut((p, p), (r, r)).copy_from(b);
    m
}

/// G = K3 diag(d) K1 with real orthogonal K3, K1 and d the principal square roots of the
/// eigenvalues of G^T G, sorted by eigenphase.
fn kak_ai(g: &ComplexMatrix) -> Result<(RealMatrix, Vec<Complex64>, RealMatrix), KakError> {
    let n = g.nrows();
    let s = g.transpose() * g;
    let x = s.map(|z| z.re);
    let y = s.map(|z| z.im);
    let mut o = numkit::commuting_pair_eig(&x, &y)?;
    for j in 0..n {
        let lead = o.column(j).iter().copied().find(|v| v.abs() > 1e-12).unwrap_or(1.0);
        if lead < 0.0 {
            o.column_mut(j).neg_mut();
        }
    }
    let oc = numkit::to_complex(&o);
    let dm = oc.transpose() * &s * &oc;
    let theta: Vec<f64> = (0..n).map(|j| numkit::principal_phase(dm[(j, j)])).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && theta[order[end]] - theta[order[end - 1]] < numkit::CLUSTER_GAP {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| {
            o.column(a)
                .iter()
                .zip(o.column(b).iter())
                .map(|(u, v)| u.total_cmp(v))
                .find(|ord| ord.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        start = end;
    }
    let mut os = RealMatrix::zeros(n, n);
    let mut d = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        os.set_column(k, &o.column(j));
        d.push(Complex64::from_polar(1.0, theta[j] / 2.0));
    }
    let osc = numkit::to_complex(&os);
    let dinv = ComplexMatrix::from_diagonal(&DVector::from_iterator(n, d.iter().map(|z| z.conj())));
    let k = g * &osc * dinv * osc.transpose();
    let imag = k.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if imag > 1e-6 {
        return Err(KakError::DegenerateClusterFailure(format!(
            "orthogonal factor has imaginary part {imag:.3e}"
        )));
    }
    let kr = k.map(|z| z.re);
    Ok((kr * &os, d, os.transpose()))
}

/// Cosine-sine blocks: G = diag(l0, l1) CS diag(r0, r1).
struct Csd {
    l0: ComplexMatrix,
    l1: ComplexMatrix,
    r0: ComplexMatrix,
    r1: ComplexMatrix,
    c: Vec<f64>,
    s: Vec<f64>,
}

fn permute(m: &ComplexMatrix, sigma: &[usize]) -> ComplexMatrix {
    let n = m.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(sigma[i], sigma[j])] = m[(i, j)];
        }
    }
    out
}

fn csd(g: &ComplexMatrix, p: usize) -> Result<Csd, KakError> {
    let n = g.nrows();
    let r = n - p;
    if p <= r {
        return csd_upper(g, p);
    }
    let sigma: Vec<usize> = (0..n).map(|i| (i + p) % n).collect();
    let mut inverse = vec![0; n];
    for (i, &s) in sigma.iter().enumerate() {
        inverse[s] = i;
    }
    let swapped = csd_upper(&permute(g, &inverse), r)?;
    Ok(Csd { l0: swapped.l1, l1: swapped.l0, r0: swapped.r1, r1: swapped.r0, c: swapped.c, s: swapped.s })
}

/// Orthonormal basis of C^dim whose listed columns follow the given vectors in order.
fn fill_basis(vectors: &[Option<DVector<Complex64>>], dim: usize) -> ComplexMatrix {
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(dim);
    let mut slots: Vec<Option<usize>> = vec![None; vectors.len()];
    let project = |w: &mut DVector<Complex64>, basis: &[DVector<Complex64>]| {
        for _ in 0..2 {
            for b in basis {
                let proj = b.dotc(w);
                w.axpy(-proj, b, c(1.0, 0.0));
            }
        }
    };
    for (k, v) in vectors.iter().enumerate() {
        if let Some(v) = v {
            let mut w = v.clone();
            project(&mut w, &basis);
            let norm = w.norm();
            if norm > 0.5 {
                slots[k] = Some(basis.len());
                basis.push(w.unscale(norm));
            }
        }
    }
    let mut unit = 0;
    let mut next_unit = |basis: &Vec<DVector<Complex64>>| -> DVector<Complex64> {
        loop {
            let mut w = DVector::from_element(dim, c(0.0, 0.0));
            w[unit] = c(1.0, 0.0);
            unit += 1;
            project(&mut w, basis);
            let norm = w.norm();
            if norm > 0.5 {
                return w.unscale(norm);
            }
        }
    };
    for slot in slots.iter_mut() {
        if slot.is_none() {
            let w = next_unit(&basis);
            *slot = Some(basis.len());
            basis.push(w);
        }
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (k, slot) in slots.iter().enumerate() {
        out.set_column(k, &basis[slot.unwrap()]);
    }
    for k in vectors.len()..dim {
        let w = next_unit(&basis);
        out.set_column(k, &w);
        basis.push(w);
    }
    out
}

fn csd_upper(g: &ComplexMatrix, p: usize) -> Result<Csd, KakError> {
    let n = g.nrows();
    let r = n - p;
    let g00 = g.view((0, 0), (p, p)).clone_owned();
    let g01 = g.view((0, p), (p, r)).clone_owned();
    let g10 = g.view((p, 0), (r, p)).clone_owned();
    let g11 = g.view((p, p), (r, r)).clone_owned();

    let (mut l0, cvals, mut r0) = numkit::svd(&g00)?;
    let mut cos: Vec<f64> = cvals.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let mut sin = vec![0.0; p];
    let t = &g10 * r0.adjoint();
    let (big, small): (Vec<usize>, Vec<usize>) = (0..p).partition(|&i| cos[i] > FRAC_1_SQRT_2);
    let mut cols: Vec<Option<DVector<Complex64>>> = vec![None; p];
    for &i in &small {
        sin[i] = (1.0 - cos[i] * cos[i]).sqrt();
        cols[i] = Some(t.column(i).unscale(sin[i]));
    }
    if !big.is_empty() {
        let ta = ComplexMatrix::from_fn(r, big.len(), |row, j| t[(row, big[j])]);
        let (pa, sig, qh) = numkit::svd(&ta)?;
        let r0a = ComplexMatrix::from_fn(big.len(), p, |j, col| r0[(big[j], col)]);
        let l0a = ComplexMatrix::from_fn(p, big.len(), |row, j| l0[(row, big[j])]);
        let r0a = &qh * r0a;
        let l0a = l0a * qh.adjoint();
        for (j, &i) in big.iter().enumerate() {
            r0.set_row(i, &r0a.row(j));
            l0.set_column(i, &l0a.column(j));
            sin[i] = sig[j].min(1.0);
            cos[i] = (1.0 - sin[i] * sin[i]).sqrt();
            cols[i] = if sig[j] > TINY_SINE { Some(pa.column(j).clone_owned()) } else { None };
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| sin[b].total_cmp(&sin[a]));
    let ordered: Vec<Option<DVector<Complex64>>> = order.iter().map(|&i| cols[i].clone()).collect();
    let filled = fill_basis(&ordered, r);
    let mut l1 = filled.clone();
    for (k, &i) in order.iter().enumerate() {
        l1.set_column(i, &filled.column(k));
    }
    let l1p = l1.columns(0, p).clone_owned();
    let cdiag = ComplexMatrix::from_diagonal(&DVector::from_iterator(p, cos.iter().map(|&x| c(x, 0.0))));
    let sdiag = ComplexMatrix::from_diagonal(&DVector::from_iterator(p, sin.iter().map(|&x| c(x, 0.0))));
    let top = cdiag * l1p.adjoint() * &g11 - sdiag * l0.adjoint() * &g01;
    let mut r1 = ComplexMatrix::zeros(r, r);
    r1.view_mut((0, 0), (p, r)).copy_from(&top);
    if r > p {
        let rest = l1.columns(p, r - p).adjoint() * &g11;
        r1.view_mut((p, 0), (r - p, r)).copy_from(&rest);
    }
    let r1 = numkit::polar(&r1)?;
    Ok(Csd { l0, l1, r0, r1, c: cos, s: sin })
}

// ---------------------------------------------------------------------------
// Single-qubit Euler decomposition

/// Rotations (time order) and global phase alpha with U = e^{i alpha} RZ(beta) RY(gamma) RZ(delta).
fn euler(u: &ComplexMatrix) -> (Vec<(GateKind, f64)>, f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let alpha = det.arg() / 2.0;
    let v = u * Complex64::from_polar(1.0, -alpha);
    let gamma = 2.0 * v[(1, 0)].norm().atan2(v[(0, 0)].norm());
    let sum = if v[(1, 1)].norm() > 1e-15 { 2.0 * v[(1, 1)].arg() } else { 0.0 };
    let diff = if v[(1, 0)].norm() > 1e-15 { 2.0 * v[(1, 0)].arg() } else { 0.0 };
    let beta = (sum + diff) / 2.0;
    let delta = (sum - diff) / 2.0;
    let keep = |a: f64| wrap_angle(a).abs() > DROP_ANGLE;
    let mut rots = Vec::with_capacity(3);
    if keep(gamma) {
        if keep(delta) {
            rots.push((GateKind::Rz, delta));
        }
        rots.push((GateKind::Ry, gamma));
        if keep(beta) {
            rots.push((GateKind::Rz, beta));
        }
    } else if keep(sum) {
        rots.push((GateKind::Rz, sum));
    }
    (rots, alpha)
}

fn push_euler(circuit: &mut Circuit, u: &ComplexMatrix, target: usize) -> f64 {
    let (rots, alpha) = euler(u);
    for (kind, angle) in rots {
        circuit.push_shifted(Gate::rotation(kind, target, angle), 0);
    }
    alpha
}

/// Euler ZYZ decomposition of a single-qubit unitary, global phase as a PHASE gate.
pub fn zyz(u: &ComplexMatrix) -> Result<Circuit, KakError> {
    if u.shape() != (2, 2) {
        return Err(KakError::DimMismatch { expected: 2, found: u.nrows() });
    }
    check_unitary(u)?;
    let mut circuit = Circuit::new(1);
    let alpha = push_euler(&mut circuit, u, 0);
    if alpha.abs() > 1e-15 {
        circuit.push_shifted(Gate::phase(0, alpha), 0);
    }
    Ok(circuit)
}

// ---------------------------------------------------------------------------
// Two-qubit decomposition

/// Columns are the magic basis; conjugation maps SU(2) x SU(2) onto SO(4).
pub fn magic_basis() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    let (o, z) = (c(s, 0.0), c(0.0, 0.0));
    let i = c(0.0, s);
    ComplexMatrix::from_row_slice(4, 4, &[o, z, z, i, z, i, o, z, z, i, -o, z, o, z, z, -i])
}

/// Real orthogonal O3, O1 with det +1 and diagonal d: Um = O3 diag(d) O1.
fn so4_kak(um: &ComplexMatrix) -> Result<(RealMatrix, Vec<Complex64>, RealMatrix), KakError> {
    let (mut o3, mut d, mut o1) = if (um.map(|z| z.conj()) - um).norm() < FIXED_POINT_TOL {
        (um.map(|z| z.re), vec![c(1.0, 0.0); 4], RealMatrix::identity(4, 4))
    } else {
        kak_ai(um)?
    };
    if o3.determinant() < 0.0 {
        o3.column_mut(0).neg_mut();
        d[0] = -d[0];
    }
    if o1.determinant() < 0.0 {
        o1.row_mut(0).neg_mut();
        d[0] = -d[0];
    }
    Ok((o3, d, o1))
}

fn su4_normalize(u: &ComplexMatrix) -> ComplexMatrix {
    let det = u.determinant();
    u * Complex64::from_polar(1.0, -det.arg() / 4.0)
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                for d in 0..4 {
                    let p = [a, b, cc, d];
                    if (0..4).all(|k| p.contains(&k)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Splits K = A (x) B into its factors (qubit 0 carries A).
fn tensor_factors(k: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let mut best = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let norm = k.view((2 * i, 2 * j), (2, 2)).norm();
            if norm > best.2 {
                best = (i, j, norm);
            }
        }
    }
    let blk = k.view((2 * best.0, 2 * best.1), (2, 2)).clone_owned();
    let det = blk.determinant();
    let b = blk / det.sqrt();
    let a = ComplexMatrix::from_fn(2, 2, |i, j| {
        let sub = k.view((2 * i, 2 * j), (2, 2));
        (b.adjoint() * sub).trace() / 2.0
    });
    (a, b)
}

fn template(cnots: usize, lambda: &[f64; 4], mu: &[Complex64; 4]) -> Circuit {
    let mut t = Circuit::new(2);
    match cnots {
        0 => {}
        1 => t.push_shifted(Gate::cnot(0, 1), 0),
        2 => {
            let (i, k) = conjugate_pairing(mu).expect("two-CNOT class has a conjugate pairing");
            let (p, q) = (mu[i].arg() / 2.0, mu[k].arg() / 2.0);
            let (u, v) = ((p + q) / 2.0, (p - q) / 2.0);
            t.push_shifted(Gate::cnot(0, 1), 0);
            t.push_shifted(Gate::rx(0, -2.0 * u), 0);
            t.push_shifted(Gate::rz(1, -2.0 * v), 0);
            t.push_shifted(Gate::cnot(0, 1), 0);
        }
        _ => {
            let x = lambda;
            let a = (x[0] + x[1] - x[2] - x[3]) / 4.0;
            let b = (-x[0] + x[1] - x[2] + x[3]) / 4.0;
            let cc = (x[0] - x[1] - x[2] + x[3]) / 4.0;
            t.push_shifted(Gate::cnot(1, 0), 0);
            t.push_shifted(Gate::rz(0, PI / 2.0 - 2.0 * cc), 0);
            t.push_shifted(Gate::ry(1, 2.0 * a - PI / 2.0), 0);
            t.push_shifted(Gate::cnot(0, 1), 0);
            t.push_shifted(Gate::ry(1, PI / 2.0 - 2.0 * b), 0);
            t.push_shifted(Gate::cnot(1, 0), 0);
        }
    }
    t
}

/// Indices (i, k) such that mu splits into conjugate pairs {i, j}, {k, l}.
fn conjugate_pairing(mu: &[Complex64; 4]) -> Option<(usize, usize)> {
    for (i, j, k, l) in [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)] {
        if (mu[i] * mu[j] - 1.0).norm() < CLASS_TOL && (mu[k] * mu[l] - 1.0).norm() < CLASS_TOL {
            return Some((i, k));
        }
    }
    None
}

/// Minimum CNOT count from the spectrum of Um^T Um for Um in SU(4).
fn cnot_class(mu: &[Complex64; 4]) -> usize {
    for sign in [1.0, -1.0] {
        if mu.iter().all(|m| (m * sign - 1.0).norm() < CLASS_TOL) {
            return 0;
        }
    }
    let plus_i = mu.iter().filter(|m| (*m - c(0.0, 1.0)).norm() < CLASS_TOL).count();
    let minus_i = mu.iter().filter(|m| (*m - c(0.0, -1.0)).norm() < CLASS_TOL).count();
    if plus_i == 2 && minus_i == 2 {
        return 1;
    }
    if conjugate_pairing(mu).is_some() {
        return 2;
    }
    3
}

/// Two-qubit synthesis with at most three CNOTs.
pub fn kak_two_qubit(u: &ComplexMatrix) -> Result<Circuit, KakError> {
    if u.shape() != (4, 4) {
        return Err(KakError::DimMismatch { expected: 4, found: u.nrows() });
    }
    check_unitary(u)?;
    let b = magic_basis();
    let bd = b.adjoint();
    let um = &bd * su4_normalize(u) * &b;
    let (o3, d, o1) = so4_kak(&um)?;
    let mu: [Complex64; 4] = [d[0] * d[0], d[1] * d[1], d[2] * d[2], d[3] * d[3]];
    let cnots = cnot_class(&mu);

    let mut lambda = [d[0].arg(), d[1].arg(), d[2].arg(), d[3].arg()];
    let total: f64 = lambda.iter().sum();
    if ((total / PI).round() as i64).rem_euclid(2) == 1 {
        lambda[0] += PI;
    }
    let tmpl = template(cnots, &lambda, &mu);
    let v = su4_normalize(&circuit_to_unitary(&tmpl)?);

    let mut matched = None;
    'outer: for k in 0..4 {
        let vk = &v * Complex64::new(0.0, 1.0).powu(k);
        let vm = &bd * vk * &b;
        let (q3, dv, q1) = so4_kak(&vm)?;
        let nu: Vec<Complex64> = dv.iter().map(|z| z * z).collect();
        for perm in permutations4() {
            let err = (0..4).map(|j| (mu[j] - nu[perm[j]]).norm()).fold(0.0, f64::max);
            if err < MATCH_TOL {
                matched = Some((q3, dv, q1, perm));
                break 'outer;
            }
        }
    }
    let (q3, dv, q1, perm) = matched.ok_or_else(|| {
        KakError::DegenerateClusterFailure("template spectrum does not match the target".into())
    })?;
    let mut pm = RealMatrix::zeros(4, 4);
    let mut e = RealMatrix::zeros(4, 4);
    for j in 0..4 {
        pm[(j, perm[j])] = 1.0;
        let ratio = d[j] / dv[perm[j]];
        e[(perm[j], perm[j])] = if ratio.re >= 0.0 { 1.0 } else { -1.0 };
    }
    let mut f = RealMatrix::identity(4, 4);
    if (&o3 * &pm * q3.transpose()).determinant() < 0.0 {
        f[(0, 0)] = -1.0;
    }
    let l = &o3 * &pm * &f * q3.transpose();
    let r = q1.transpose() * &e * &f * pm.transpose() * &o1;
    let (la, lb) = tensor_factors(&(&b * numkit::to_complex(&l) * &bd));
    let (ra, rb) = tensor_factors(&(&b * numkit::to_complex(&r) * &bd));

    let mut out = Circuit::new(2);
    if cnots == 0 {
        push_euler(&mut out, &(&la * &ra), 0);
        push_euler(&mut out, &(&lb * &rb), 1);
    } else {
        push_euler(&mut out, &ra, 0);
        push_euler(&mut out, &rb, 1);
        out.append(&tmpl, 0)?;
        push_euler(&mut out, &la, 0);
        push_euler(&mut out, &lb, 1);
    }
    let w = circuit_to_unitary(&out)?;
    let overlap = (w.adjoint() * u).trace();
    let phase = overlap.arg();
    if phase.abs() > 1e-15 {
        out.push_shifted(Gate::phase(0, phase), 0);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Quantum Shannon decomposition

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Uniformly controlled rotation on `target`; `angles[j]` applies when the controls read j,
/// with bit b of j carried by `controls[b]`.
fn multiplexed_rotation(
    circuit: &mut Circuit,
    kind: GateKind,
    target: usize,
    controls: &[usize],
    angles: &[f64],
) {
    let k = controls.len();
    let n = 1usize << k;
    debug_assert_eq!(angles.len(), n);
    for i in 0..n {
        let gi = gray(i);
        let phi: f64 = angles
            .iter()
            .enumerate()
            .map(|(j, &t)| if (j & gi).count_ones().is_multiple_of(2) { t } else { -t })
            .sum::<f64>()
            / n as f64;
        circuit.push_shifted(Gate::rotation(kind, target, phi), 0);
        if k > 0 {
            let bit = (gi ^ gray((i + 1) % n)).trailing_zeros() as usize;
            circuit.push_shifted(Gate::cnot(controls[bit], target), 0);
        }
    }
}

fn qsd_into(circuit: &mut Circuit, u: &ComplexMatrix, offset: usize) -> Result<(), KakError> {
    let q = u.nrows().trailing_zeros() as usize;
    match q {
        0 => {
            let ph = u[(0, 0)].arg();
            if ph.abs() > 1e-15 {
                circuit.push_shifted(Gate::phase(offset.min(circuit.qubits - 1), ph), 0);
            }
            Ok(())
        }
        1 => circuit.append(&zyz(u)?, offset),
        2 => circuit.append(&kak_two_qubit(u)?, offset),
        _ => {
            let half = u.nrows() / 2;
            let cs = csd(u, half)?;
            let controls: Vec<usize> = (0..q - 1).map(|b| offset + q - 1 - b).collect();
            demultiplex(circuit, &cs.r0, &cs.r1, offset, &controls)?;
            let angles: Vec<f64> = cs.c.iter().zip(&cs.s).map(|(&co, &si)| 2.0 * si.atan2(co)).collect();
            multiplexed_rotation(circuit, GateKind::Ry, offset, &controls, &angles);
            demultiplex(circuit, &cs.l0, &cs.l1, offset, &controls)
        }
    }
}

/// diag(x0, x1) = (I (x) V) diag(D, D^dag) (I (x) W) with the middle a multiplexed RZ.
fn demultiplex(
    circuit: &mut Circuit,
    x0: &ComplexMatrix,
    x1: &ComplexMatrix,
    offset: usize,
    controls: &[usize],
) -> Result<(), KakError> {
    let (phases, v) = numkit::unitary_eig(&(x0 * x1.adjoint()))?;
    let n = phases.len();
    let dhalf = ComplexMatrix::from_diagonal(&DVector::from_iterator(
        n,
        phases.iter().map(|&t| Complex64::from_polar(1.0, t / 2.0)),
    ));
    let w = dhalf * v.adjoint() * x1;
    qsd_into(circuit, &w, offset + 1)?;
    let angles: Vec<f64> = phases.iter().map(|&t| -t).collect();
    multiplexed_rotation(circuit, GateKind::Rz, offset, controls, &angles);
    qsd_into(circuit, &v, offset + 1)
}

/// Compiles a 2^q x 2^q unitary into CNOTs and rotations.
pub fn qsd(u: &ComplexMatrix) -> Result<Circuit, KakError> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(KakError::DimMismatch { expected: n, found: u.ncols() });
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(KakError::DimNotPowerOfTwo(n));
    }
    check_unitary(u)?;
    let q = n.trailing_zeros() as usize;
    let mut circuit = Circuit::new(q);
    qsd_into(&mut circuit, u, 0)?;
    Ok(circuit)
}

/// CNOT count of `qsd` on a generic q-qubit unitary.
pub fn qsd_cnot_count(q: usize) -> usize {
    match q {
        0 | 1 => 0,
        2 => 3,
        _ => 4 * qsd_cnot_count(q - 1) + 3 * (1 << (q - 1)),
    }
}

/// (23/48) 4^q - (3/2) 2^q + 4/3 as an exact rational.
pub fn cnot_bound(q: u32) -> BigRational {
    let four = BigInt::from(4).pow(q);
    let two = BigInt::from(2).pow(q);
    BigRational::new(BigInt::from(23) * four - BigInt::from(72) * two + BigInt::from(64), BigInt::from(48))
}

/// Rule-of-thumb compile time in seconds, 2^{2.5 (q - 4.5)}.
pub fn timing_estimate(q: u32) -> f64 {
    2f64.powf(2.5 * (q as f64 - 4.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        numkit::frob_dist(a, b).unwrap()
    }

    fn cnot01() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(i, j)] = c(1.0, 0.0);
        }
        m
    }

    #[test]
    fn wrap_keeps_range() {
        assert_eq!(wrap_angle(2.0 * PI), 2.0 * PI);
        assert!((wrap_angle(3.0 * PI) + PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.5), 0.5);
        assert!((wrap_angle(-2.0 * PI) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn empty_circuit_is_identity() {
        assert_eq!(circuit_to_unitary(&Circuit::new(3)).unwrap(), numkit::identity(8));
    }

    #[test]
    fn cnot_matrix() {
        let mut circ = Circuit::new(2);
        circ.push(Gate::cnot(0, 1)).unwrap();
        assert_eq!(circuit_to_unitary(&circ).unwrap(), cnot01());
    }

    #[test]
    fn push_validates() {
        let mut circ = Circuit::new(2);
        assert!(circ.push(Gate::cnot(1, 1)).is_err());
        assert!(circ.push(Gate::rz(2, 0.1)).is_err());
        assert!(circ
            .push(Gate { kind: GateKind::Rz, control: Some(0), target: 1, angle: Some(0.1) })
            .is_err());
        assert!(circ
            .push(Gate { kind: GateKind::Cnot, control: Some(0), target: 1, angle: Some(0.1) })
            .is_err());
        assert_eq!(circ.recount(), (0, 0));
    }

    #[test]
    fn qubit_cap() {
        assert!(matches!(circuit_to_unitary(&Circuit::new(11)), Err(KakError::QubitCapExceeded { .. })));
    }

    #[test]
    fn theta_examples() {
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let k = InvolutionKind::AIII { p: 1, r: 1 };
        assert_eq!(theta_group(k, &x).unwrap(), -x.clone());
        assert_eq!(theta_group(InvolutionKind::AI, &x).unwrap(), x);
        let d = ComplexMatrix::from_row_slice(2, 2, &[c(0.3, 0.2), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.5)]);
        assert_eq!(theta_group(k, &d).unwrap(), d);
        assert!(matches!(theta_group(k, &numkit::identity(3)), Err(KakError::DimMismatch { .. })));
    }

    #[test]
    fn m_squared_of_diagonal_phase() {
        let (a, b) = (0.4, -1.1);
        let g = ComplexMatrix::from_row_slice(
            2,
            2,
            &[Complex64::from_polar(1.0, a), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, b)],
        );
        let m2 = m_squared(&g, InvolutionKind::AI).unwrap();
        assert!((m2[(0, 0)] - Complex64::from_polar(1.0, 2.0 * a)).norm() < 1e-15);
        assert!((m2[(1, 1)] - Complex64::from_polar(1.0, 2.0 * b)).norm() < 1e-15);
    }

    #[test]
    fn kak_identity_and_orthogonal() {
        let f = kak_factor(&numkit::identity(4), InvolutionKind::AI).unwrap();
        assert_eq!(
            (f.k3.clone(), f.a.clone(), f.k1.clone()),
            (numkit::identity(4), numkit::identity(4), numkit::identity(4))
        );
        let f = kak_factor(&numkit::identity(4), InvolutionKind::AIII { p: 2, r: 2 }).unwrap();
        assert_eq!(f.a, numkit::identity(4));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = numkit::to_complex(&numkit::random_orthogonal(4, &mut rng));
        let f = kak_factor(&o, InvolutionKind::AI).unwrap();
        assert_eq!(f.a, numkit::identity(4));
        assert!(dist(&(&f.k3 * &f.k1), &o) < 1e-14);
    }

    #[test]
    fn kak_random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3, 4, 5, 8] {
            let g = numkit::random_unitary(n, &mut rng);
            let kinds = [
                InvolutionKind::AI,
                InvolutionKind::AIII { p: 1, r: n - 1 },
                InvolutionKind::AIII { p: n - 1, r: 1 },
                InvolutionKind::AIII { p: n / 2, r: n - n / 2 },
            ];
            for kind in kinds {
                let f = kak_factor(&g, kind).unwrap();
                assert!(dist(&f.product(), &g) < 1e-12, "{kind:?} n={n}");
                assert!(dist(&theta_group(kind, &f.k3).unwrap(), &f.k3) < 1e-12);
                assert!(dist(&theta_group(kind, &f.k1).unwrap(), &f.k1) < 1e-12);
                let a = &f.a;
                assert!(dist(&theta_group(kind, a).unwrap(), &a.adjoint()) < 1e-12);
            }
        }
    }

    #[test]
    fn csd_handles_block_swap_and_partial_swap() {
        let mut swap = ComplexMatrix::zeros(8, 8);
        for i in 0..8 {
            swap[(i, (i + 4) % 8)] = c(1.0, 0.0);
        }
        let mut partial = numkit::identity(8);
        partial.swap_rows(1, 5);
        for g in [swap, partial] {
            let f = kak_factor(&g, InvolutionKind::AIII { p: 4, r: 4 }).unwrap();
            assert!(dist(&f.product(), &g) < 1e-13);
        }
    }

    #[test]
    fn zyz_examples() {
        let c0 = zyz(&numkit::identity(2)).unwrap();
        assert!(c0.gates().is_empty());
        let rz = Gate::rz(0, 0.73).matrix().unwrap();
        let c1 = zyz(&rz).unwrap();
        assert_eq!(c1.gates().len(), 1);
        assert_eq!(c1.gates()[0].kind, GateKind::Rz);
        assert!((c1.gates()[0].angle.unwrap() - 0.73).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = numkit::random_unitary(2, &mut rng);
            let circ = zyz(&u).unwrap();
            assert!(circ.one_qubit_count() <= 3);
            assert!(dist(&circuit_to_unitary(&circ).unwrap(), &u) < 1e-10);
        }
    }

    #[test]
    fn magic_basis_maps_locals_to_so4() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let special = |u: ComplexMatrix| {
            let det = u.determinant();
            u * Complex64::from_polar(1.0, -det.arg() / 2.0)
        };
        let a = special(numkit::random_unitary(2, &mut rng));
        let b = special(numkit::random_unitary(2, &mut rng));
        let mb = magic_basis();
        let o = mb.adjoint() * a.kronecker(&b) * &mb;
        assert!(o.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn two_qubit_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = numkit::random_unitary(2, &mut rng);
        let b = numkit::random_unitary(2, &mut rng);
        let local = a.kronecker(&b);
        let circ = kak_two_qubit(&local).unwrap();
        assert_eq!(circ.cnot_count(), 0);
        assert!(dist(&circuit_to_unitary(&circ).unwrap(), &local) < 1e-10);

        let circ = kak_two_qubit(&cnot01()).unwrap();
        assert_eq!(circ.cnot_count(), 1);
        assert!(dist(&circuit_to_unitary(&circ).unwrap(), &cnot01()) < 1e-10);

        let dressed = &local * cnot01() * b.kronecker(&a);
        let circ = kak_two_qubit(&dressed).unwrap();
        assert_eq!(circ.cnot_count(), 1);
        assert!(dist(&circuit_to_unitary(&circ).unwrap(), &dressed) < 1e-10);

        let mut two = Circuit::new(2);
        two.push(Gate::cnot(0, 1)).unwrap();
        two.push(Gate::rx(0, 0.3)).unwrap();
        two.push(Gate::rz(1, -1.1)).unwrap();
        two.push(Gate::cnot(0, 1)).unwrap();
        let target = &local * circuit_to_unitary(&two).unwrap();
        let circ = kak_two_qubit(&target).unwrap();
        assert_eq!(circ.cnot_count(), 2);
        assert!(dist(&circuit_to_unitary(&circ).unwrap(), &target) < 1e-10);

        let mut swap = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(i, j)] = c(1.0, 0.0);
        }
        let circ = kak_two_qubit(&swap).unwrap();
        assert_eq!(circ.cnot_count(), 3);
        assert!(dist(&circuit_to_unitary(&circ).unwrap(), &swap) < 1e-10);
    }

    #[test]
    fn two_qubit_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let u = numkit::random_unitary(4, &mut rng);
            let circ = kak_two_qubit(&u).unwrap();
            assert!(circ.cnot_count() <= 3);
            assert!(circ.one_qubit_count() <= 15);
            assert!(dist(&circuit_to_unitary(&circ).unwrap(), &u) < 1e-10);
        }
    }

    #[test]
    fn multiplexor_matches_block_diagonal() {
        let mut circ = Circuit::new(3);
        let angles = [0.3, -1.2, 2.0, 0.7];
        multiplexed_rotation(&mut circ, GateKind::Ry, 0, &[2, 1], &angles);
        let m = circuit_to_unitary(&circ).unwrap();
        for (j, &t) in angles.iter().enumerate() {
            let blk = ComplexMatrix::from_fn(2, 2, |a, b| m[(a * 4 + j, b * 4 + j)]);
            assert!(dist(&blk, &Gate::ry(0, t).matrix().unwrap()) < 1e-14);
        }
        assert_eq!(circ.cnot_count(), 4);
    }

    #[test]
    fn qsd_counts_follow_recursion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for q in 1..=4usize {
            let u = numkit::random_unitary(1 << q, &mut rng);
            let circ = qsd(&u).unwrap();
            assert_eq!(circ.cnot_count(), qsd_cnot_count(q));
            assert_eq!(circ.recount(), (circ.cnot_count(), circ.one_qubit_count()));
            assert!(dist(&circuit_to_unitary(&circ).unwrap(), &u) < 1e-9, "q={q}");
        }
        assert_eq!([2, 3, 4, 5].map(qsd_cnot_count), [3, 24, 120, 528]);
    }

    #[test]
    fn qsd_rejects_bad_dims() {
        assert!(matches!(qsd(&numkit::identity(3)), Err(KakError::DimNotPowerOfTwo(3))));
        assert!(matches!(qsd(&(numkit::identity(4) * c(2.0, 0.0))), Err(KakError::NonUnitary { .. })));
    }

    #[test]
    fn bound_values() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(cnot_bound(1), r(1, 4));
        assert_eq!(cnot_bound(2), r(3, 1));
        assert_eq!(cnot_bound(3), r(20, 1));
    }

    #[test]
    fn timing_values() {
        assert!((timing_estimate(7) - 2f64.powf(6.25)).abs() < 1e-12);
        assert!((timing_estimate(4) - 2f64.powf(-1.25)).abs() < 1e-15);
        assert!((timing_estimate(8) - 430.539).abs() < 1e-3);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let circ = qsd(&numkit::random_unitary(8, &mut rng)).unwrap();
        let back = Circuit::from_json(&circ.to_json()).unwrap();
        assert_eq!(back, circ);
        let v: serde_json::Value = serde_json::from_str(&circ.to_json()).unwrap();
        assert_eq!(v["qubits"], 3);
        assert!(v["gates"][0].as_object().unwrap().contains_key("kind"));
        assert!(
            Circuit::from_json("{\"qubits\": 1, \"gates\": [{\"kind\": \"cz\", \"target\": 0}]}").is_err()
        );
    }
}
