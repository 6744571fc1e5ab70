//! Statevector simulation and iterative phase estimation with a single readout qubit.
//!
//! Qubit 0 is the most significant bit of the basis index.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numkit::{self, c, ComplexMatrix, NumError};

const NORM_TOL: f64 = 1e-10;
const EIGENSTATE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("gate is not unitary (deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("state is not an eigenvector of H (residual {0:.3e})")]
    NotAnEigenstate(f64),
    #[error("eigenvalue {eigenvalue} lies outside the window [{low}, {high})")]
    WindowViolation { eigenvalue: f64, low: f64, high: f64 },
    #[error("window margin must lie in (0, 1), got {0}")]
    InvalidMargin(f64),
    #[error("need at least one bit and, in sampled mode, at least one shot")]
    InvalidParameters,
    #[error(transparent)]
    Numeric(#[from] NumError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state |index>.
    pub fn basis(qubits: usize, index: usize) -> Result<Self, SimError> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(SimError::IndexOutOfRange { index, qubits });
        }
        let mut amplitudes = vec![c(0.0, 0.0); dim];
        amplitudes[index] = c(1.0, 0.0);
        Ok(Self { qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(SimError::DimMismatch { expected: dim.next_power_of_two().max(1), found: dim });
        }
        let state = Self { qubits: dim.trailing_zeros() as usize, amplitudes };
        let n2 = state.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized(n2));
        }
        Ok(state)
    }

    /// Zero-pads to `qubits` and normalizes.
    pub fn from_vector_padded(v: &[Complex64], qubits: usize) -> Result<Self, SimError> {
        let dim = 1usize << qubits;
        if v.len() > dim {
            return Err(SimError::DimMismatch { expected: dim, found: v.len() });
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(SimError::NotNormalized(0.0));
        }
        let mut amplitudes = vec![c(0.0, 0.0); dim];
        for (a, z) in amplitudes.iter_mut().zip(v) {
            *a = z / norm;
        }
        Ok(Self { qubits, amplitudes })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// |self> (x) |other>, self on the more significant qubits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        StateVector { qubits: self.qubits + other.qubits, amplitudes }
    }

    fn check_index(&self, index: usize) -> Result<(), SimError> {
        if index >= self.qubits {
            return Err(SimError::IndexOutOfRange { index, qubits: self.qubits });
        }
        Ok(())
    }

    fn bit_mask(&self, qubit: usize) -> usize {
        1 << (self.qubits - 1 - qubit)
    }

    /// Probability that `qubit` reads 0.
    pub fn prob_zero(&self, qubit: usize) -> Result<f64, SimError> {
        self.check_index(qubit)?;
        let mask = self.bit_mask(qubit);
        Ok(self.amplitudes.iter().enumerate().filter(|(i, _)| i & mask == 0).map(|(_, z)| z.norm_sqr()).sum())
    }
}

pub fn hadamard() -> ComplexMatrix {
    let s = 0.5f64.sqrt();
    ComplexMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

/// diag(1, e^{i omega}).
pub fn phase_gate(omega: f64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, omega)],
    )
}

pub fn apply_1q(state: &StateVector, gate: &ComplexMatrix, target: usize) -> Result<StateVector, SimError> {
    state.check_index(target)?;
    if gate.shape() != (2, 2) {
        return Err(SimError::DimMismatch { expected: 2, found: gate.nrows() });
    }
    let deviation = numkit::unitarity_deviation(gate);
    if deviation > 1e-10 {
        return Err(SimError::NonUnitary { deviation });
    }
    let mask = state.bit_mask(target);
    let mut out = state.amplitudes.clone();
    for i in 0..out.len() {
        if i & mask == 0 {
            let a0 = state.amplitudes[i];
            let a1 = state.amplitudes[i | mask];
            out[i] = gate[(0, 0)] * a0 + gate[(0, 1)] * a1;
            out[i | mask] = gate[(1, 0)] * a0 + gate[(1, 1)] * a1;
        }
    }
    Ok(StateVector { qubits: state.qubits, amplitudes: out })
}

/// Applies `u` to every qubit except `control` (in their original order) when `control` is 1.
pub fn apply_controlled_u(
    state: &StateVector,
    u: &ComplexMatrix,
    control: usize,
) -> Result<StateVector, SimError> {
    state.check_index(control)?;
    let reg = state.qubits - 1;
    let reg_dim = 1usize << reg;
    if u.nrows() != reg_dim || u.ncols() != reg_dim {
        return Err(SimError::DimMismatch { expected: reg_dim, found: u.nrows() });
    }
    let cmask = state.bit_mask(control);
    let low_bits = state.qubits - 1 - control;
    let low_mask = (1usize << low_bits) - 1;
    let full = |r: usize| -> usize {
        let high = (r >> low_bits) << (low_bits + 1);
        high | cmask | (r & low_mask)
    };
    let mut out = state.amplitudes.clone();
    let sub: Vec<Complex64> = (0..reg_dim).map(|r| state.amplitudes[full(r)]).collect();
    for r in 0..reg_dim {
        let mut acc = c(0.0, 0.0);
        for (s, amp) in sub.iter().enumerate() {
            acc += u[(r, s)] * amp;
        }
        out[full(r)] = acc;
    }
    Ok(StateVector { qubits: state.qubits, amplitudes: out })
}

/// Readout probabilities (p0, p1) after the controlled phase e^{-i phi} and a Hadamard.
pub fn phase_kernel_prob(phi: f64) -> (f64, f64) {
    let p0 = ((1.0 + phi.cos()) / 2.0).clamp(0.0, 1.0);
    (p0, 1.0 - p0)
}

fn measure_with<R: Rng>(
    state: &StateVector,
    readout: usize,
    rng: &mut R,
) -> Result<(u8, StateVector), SimError> {
    let p0 = state.prob_zero(readout)?;
    let bit = if rng.gen::<f64>() < p0 { 0u8 } else { 1u8 };
    let mask = state.bit_mask(readout);
    let keep = if bit == 0 { p0 } else { 1.0 - p0 };
    let scale = 1.0 / keep.sqrt();
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, z)| if ((i & mask != 0) as u8) == bit { z * scale } else { c(0.0, 0.0) })
        .collect();
    Ok((bit, StateVector { qubits: state.qubits, amplitudes }))
}

/// Projective measurement of one qubit, reproducible for a given seed.
pub fn measure_readout(
    state: &StateVector,
    readout: usize,
    rng_seed: u64,
) -> Result<(u8, StateVector), SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    measure_with(state, readout, &mut rng)
}

/// Purity tr(rho^2) of the reduced state of one qubit.
pub fn reduced_purity(state: &StateVector, qubit: usize) -> Result<f64, SimError> {
    state.check_index(qubit)?;
    let mask = state.bit_mask(qubit);
    let (mut p0, mut p1, mut coh) = (0.0, 0.0, c(0.0, 0.0));
    for (i, z) in state.amplitudes.iter().enumerate() {
        if i & mask == 0 {
            let w = state.amplitudes[i | mask];
            p0 += z.norm_sqr();
            p1 += w.norm_sqr();
            coh += z * w.conj();
        }
    }
    Ok(p0 * p0 + p1 * p1 + 2.0 * coh.norm_sqr())
}

/// Time scale and energy offset mapping a spectrum into phases [0, 2 pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindow {
    pub tau: f64,
    pub shift: f64,
    /// The spectrum had zero width and the fallback window was used.
    pub zero_range: bool,
}

impl EnergyWindow {
    pub fn new(tau: f64, shift: f64) -> Self {
        Self { tau, shift, zero_range: false }
    }

    pub fn width(&self) -> f64 {
        2.0 * PI / self.tau
    }

    /// Phase (lambda - shift) tau.
    pub fn phase_of(&self, energy: f64) -> f64 {
        (energy - self.shift) * self.tau
    }

    pub fn contains(&self, energy: f64) -> bool {
        let x = self.phase_of(energy);
        (0.0..2.0 * PI).contains(&x)
    }
}

pub fn energy_window(h: &ComplexMatrix, margin: f64) -> Result<EnergyWindow, SimError> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(SimError::InvalidMargin(margin));
    }
    let spec = numkit::herm_eig(h)?;
    let lo = spec.eigenvalues[0];
    let hi = *spec.eigenvalues.last().unwrap();
    let range = hi - lo;
    if range <= 1e-12 * lo.abs().max(hi.abs()).max(1.0) {
        return Ok(EnergyWindow { tau: 1.0, shift: lo - PI, zero_range: true });
    }
    Ok(EnergyWindow {
        tau: 2.0 * PI / (range * (1.0 + 2.0 * margin)),
        shift: lo - margin * range,
        zero_range: false,
    })
}

/// Embeds H into a 2^qubits space; unused levels sit at the middle of the window.
pub fn pad_hamiltonian(
    h: &ComplexMatrix,
    window: &EnergyWindow,
    qubits: usize,
) -> Result<ComplexMatrix, SimError> {
    let dim = 1usize << qubits;
    let d = h.nrows();
    if d > dim {
        return Err(SimError::DimMismatch { expected: dim, found: d });
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    out.view_mut((0, 0), (d, d)).copy_from(h);
    let filler = window.shift + PI / window.tau;
    for i in d..dim {
        out[(i, i)] = c(filler, 0.0);
    }
    Ok(out)
}

/// Smallest q with 2^q >= d.
pub fn qubits_for_dim(d: usize) -> usize {
    d.max(1).next_power_of_two().trailing_zeros() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpeaMode {
    /// Each bit takes the more likely outcome.
    Exact,
    /// Each bit is a majority vote over `shots` samples.
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimate {
    /// Binary fraction digits, most significant first.
    pub bits: Vec<u8>,
    pub phi: f64,
    pub energy: f64,
    pub shots_used: u64,
}

impl PhaseEstimate {
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
    }

    pub fn record(&self) -> String {
        format!(
            "bits={} phi={} energy={} shots={}",
            self.bit_string(),
            self.phi,
            self.energy,
            self.shots_used
        )
    }
}

impl fmt::Display for PhaseEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.record())
    }
}

/// 2 pi times the binary fraction 0.b1 b2 ... bp.
pub fn phase_from_bits(bits: &[u8]) -> f64 {
    let mut frac = 0.0;
    let mut w = 0.5;
    for &b in bits {
        frac += w * b as f64;
        w /= 2.0;
    }
    2.0 * PI * frac
}

/// Reads the eigenphase of exp(-i (H - shift) tau) for `eigenstate`, least significant bit first.
pub fn ipea_estimate(
    h: &ComplexMatrix,
    eigenstate: &StateVector,
    p: usize,
    mode: IpeaMode,
    window: &EnergyWindow,
) -> Result<PhaseEstimate, SimError> {
    if p == 0 || matches!(mode, IpeaMode::Sampled { shots: 0, .. }) {
        return Err(SimError::InvalidParameters);
    }
    let spec = numkit::herm_eig(h)?;
    for &lambda in &spec.eigenvalues {
        if !window.contains(lambda) {
            return Err(SimError::WindowViolation {
                eigenvalue: lambda,
                low: window.shift,
                high: window.shift + window.width(),
            });
        }
    }
    let d = h.nrows();
    let reg = qubits_for_dim(d);
    if eigenstate.amplitudes().len() != 1 << reg {
        return Err(SimError::DimMismatch { expected: 1 << reg, found: eigenstate.amplitudes().len() });
    }
    let psi = &eigenstate.amplitudes()[..d];
    if eigenstate.amplitudes()[d..].iter().any(|z| z.norm() > EIGENSTATE_TOL) {
        return Err(SimError::NotAnEigenstate(f64::INFINITY));
    }
    let v = nalgebra::DVector::from_column_slice(psi);
    let hv = h * &v;
    let rq = v.dotc(&hv);
    let residual = (&hv - &v * rq).norm();
    if residual > EIGENSTATE_TOL * h.norm().max(1.0) {
        return Err(SimError::NotAnEigenstate(residual));
    }

    let hp = if d == 1 << reg { h.clone() } else { pad_hamiltonian(h, window, reg)? };
    let pspec = numkit::herm_eig(&hp)?;
    let base: Vec<f64> = pspec.eigenvalues.iter().map(|&l| window.phase_of(l)).collect();
    let power = |k: u32| -> ComplexMatrix {
        let scale = 2f64.powi(k as i32);
        let vals: Vec<Complex64> =
            base.iter().map(|&ph| Complex64::from_polar(1.0, -(ph * scale).rem_euclid(2.0 * PI))).collect();
        numkit::spectral_apply(&pspec.eigenvectors, &vals)
    };

    let start = StateVector::basis(1, 0)?.tensor(eigenstate);
    let had = hadamard();
    let mut rng = match mode {
        IpeaMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        IpeaMode::Exact => None,
    };
    let mut bits = vec![0u8; p];
    let mut shots_used = 0u64;
    for k in (1..=p).rev() {
        let mut omega = 0.0;
        let mut w = 0.25;
        for &b in &bits[k..] {
            omega += w * b as f64;
            w /= 2.0;
        }
        let mut s = apply_1q(&start, &had, 0)?;
        s = apply_controlled_u(&s, &power((k - 1) as u32), 0)?;
        s = apply_1q(&s, &phase_gate(2.0 * PI * omega), 0)?;
        s = apply_1q(&s, &had, 0)?;
        bits[k - 1] = match (&mode, rng.as_mut()) {
            (IpeaMode::Sampled { shots, .. }, Some(r)) => {
                let p0 = s.prob_zero(0)?;
                let ones = (0..*shots).filter(|_| r.gen::<f64>() >= p0).count() as u64;
                shots_used += shots;
                (2 * ones > *shots) as u8
            }
            _ => {
                let p0 = s.prob_zero(0)?;
                (p0 < 0.5) as u8
            }
        };
    }
    let phi = phase_from_bits(&bits);
    Ok(PhaseEstimate { energy: phi / window.tau + window.shift, bits, phi, shots_used })
}
