//! Historical datasets: Boys' beryllium basis, orbitals, configuration state functions
//! and CI matrices, plus the qubit-count survey tables.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::kak::{self, KakError};
use crate::numkit::{self, c, ComplexMatrix, NumError, RealMatrix};
use crate::simulator::{self, IpeaMode, SimError, StateVector};

/// Spin-orbital modes of the Boys basis: sA, sB, sC and three pA components, two spins each.
pub const BOYS_MODES: usize = 12;
/// Largest register used for CSF Fock states.
pub const MAX_CSF_MODES: usize = 12;
/// Largest IPEA precision accepted by `run_boys_pipeline`.
pub const MAX_PIPELINE_BITS: usize = 24;
/// Window margin for the pipeline's phase estimation.
pub const PIPELINE_MARGIN: f64 = 0.1;
/// Compiled circuits must reproduce the evolution operator to this Frobenius distance.
pub const ROUND_TRIP_TOL: f64 = 1e-7;
/// Published optimal three-qubit circuit size, reported for comparison.
pub const REFERENCE_CNOTS: usize = 44;
pub const REFERENCE_ONE_QUBIT: usize = 63;

const NORM_FLOOR: f64 = 1e-12;
const DEPENDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VintageError {
    #[error("orbitals are linearly dependent (smallest overlap eigenvalue {0:.3e})")]
    LinearlyDependentBasis(f64),
    #[error("antisymmetrization annihilates the configuration {0}")]
    NormCollapse(String),
    #[error("{modes} modes exceeds the cap of {cap}")]
    ModeCapExceeded { modes: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("compiled circuit misses the target by {0:.3e}")]
    RoundTrip(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Kak(#[from] KakError),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

/// Radial function r^(A + l) exp(-a r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOrbital {
    pub power: u32,
    pub l: u32,
    pub exponent: f64,
    pub label: &'static str,
}

impl RadialOrbital {
    pub const fn new(power: u32, l: u32, exponent: f64, label: &'static str) -> Self {
        RadialOrbital { power, l, exponent, label }
    }
}

pub const SA: RadialOrbital = RadialOrbital::new(0, 0, 4.0, "sA");
pub const SB: RadialOrbital = RadialOrbital::new(1, 0, 1.0, "sB");
pub const SC: RadialOrbital = RadialOrbital::new(0, 0, 3.0, "sC");
pub const PA: RadialOrbital = RadialOrbital::new(0, 1, 1.0, "pA");

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Integral of r^(A + B + 2l) exp(-(a + b) r) r^2 dr; zero for different l.
pub fn radial_overlap(o1: &RadialOrbital, o2: &RadialOrbital) -> f64 {
    if o1.l != o2.l {
        return 0.0;
    }
    let n = o1.power + o2.power + 2 * o1.l + 2;
    factorial(n) / (o1.exponent + o2.exponent).powi(n as i32 + 1)
}

pub fn overlap_matrix(orbitals: &[RadialOrbital]) -> RealMatrix {
    RealMatrix::from_fn(orbitals.len(), orbitals.len(), |i, j| radial_overlap(&orbitals[i], &orbitals[j]))
}

/// Lower-triangular coefficients: row i expresses phi_i in the raw orbitals.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSchmidt {
    pub coefficients: RealMatrix,
    /// 1/sqrt(<psi_i|psi_i>) for each unnormalized intermediate.
    pub norms: Vec<f64>,
}

pub fn gram_schmidt(orbitals: &[RadialOrbital]) -> Result<GramSchmidt, VintageError> {
    let s = overlap_matrix(orbitals);
    let n = orbitals.len();
    if n == 0 {
        return Err(VintageError::InvalidParameter("no orbitals".into()));
    }
    let (evals, _) = numkit::real_sym_eig(&s)?;
    let scale = s.diagonal().amax();
    if evals[0] <= DEPENDENCE_TOL * scale {
        return Err(VintageError::LinearlyDependentBasis(evals[0]));
    }
    let inner = |x: &[f64], y: &[f64]| -> f64 {
        (0..n).map(|i| (0..n).map(|j| x[i] * s[(i, j)] * y[j]).sum::<f64>()).sum()
    };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for k in 0..n {
        let mut psi = vec![0.0; n];
        psi[k] = 1.0;
        for phi in &rows {
            let proj = inner(phi, &psi);
            psi.iter_mut().zip(phi).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = inner(&psi, &psi).sqrt();
        if norm <= DEPENDENCE_TOL.sqrt() * scale.sqrt() {
            return Err(VintageError::LinearlyDependentBasis(norm * norm));
        }
        norms.push(1.0 / norm);
        rows.push(psi.iter().map(|v| v / norm).collect());
    }
    Ok(GramSchmidt { coefficients: RealMatrix::from_fn(n, n, |i, j| rows[i][j]), norms })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantCheck {
    pub label: &'static str,
    pub published: f64,
    pub computed: f64,
    pub matched: bool,
}

/// Compares the published orthonormalization constants of the s and p orbitals with ours.
pub fn published_constant_checks() -> Result<Vec<ConstantCheck>, VintageError> {
    let gs = gram_schmidt(&[SA, SB, SC])?;
    let cm = &gs.coefficients;
    let pa = gram_schmidt(&[PA])?;
    let entries = [
        ("phi1 sA coefficient", 16.0, cm[(0, 0)]),
        ("phi2 normalization", 1.173302451, gs.norms[1]),
        ("phi2 sA coefficient (subtracted)", 2.883508103, -cm[(1, 0)]),
        ("phi3 sA coefficient", -69.59716965, cm[(2, 0)]),
        ("phi3 sB coefficient (subtracted)", 0.5968868832, -cm[(2, 1)]),
        ("phi3 normalization", 47.60738095, gs.norms[2]),
        ("phi4 normalization", 1.154700538, pa.norms[0]),
    ];
    Ok(entries
        .into_iter()
        .map(|(label, published, computed)| ConstantCheck {
            label,
            published,
            computed,
            matched: (published - computed).abs() <= 1e-6,
        })
        .collect())
}

/// Clebsch-Gordan coefficient <l l m1 m2 | 0 0>.
pub fn cg_singlet(l: u32, m1: i32, m2: i32) -> f64 {
    let li = l as i32;
    if m1.abs() > li || m2.abs() > li || m1 != -m2 {
        return 0.0;
    }
    let sign = if (li - m1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign / f64::from(2 * l + 1).sqrt()
}

/// Coefficients of |m, -m> in the orbital singlet, for m = l, l-1, ..., -l.
pub fn singlet_pair_state(l: u32) -> Vec<f64> {
    let li = l as i32;
    (-li..=li).rev().map(|m| cg_singlet(l, m, -m)).collect()
}

/// Spatial functions of the Boys basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoysOrbital {
    SA,
    SB,
    SC,
    PA,
}

impl BoysOrbital {
    pub fn radial(self) -> RadialOrbital {
        match self {
            BoysOrbital::SA => SA,
            BoysOrbital::SB => SB,
            BoysOrbital::SC => SC,
            BoysOrbital::PA => PA,
        }
    }

    pub fn l(self) -> u32 {
        self.radial().l
    }

    pub fn label(self) -> &'static str {
        self.radial().label
    }
}

/// Spatial slot: sA, sB, sC, then pA with m = +1, 0, -1.
fn spatial_slot(orb: BoysOrbital, m: i32) -> usize {
    match orb {
        BoysOrbital::SA => 0,
        BoysOrbital::SB => 1,
        BoysOrbital::SC => 2,
        BoysOrbital::PA => (4 - m) as usize,
    }
}

/// Mode index; spin up is the even mode of each spatial slot.
pub fn boys_mode(orb: BoysOrbital, m: i32, spin_up: bool) -> usize {
    2 * spatial_slot(orb, m) + usize::from(!spin_up)
}

/// Two singlet-coupled pairs of equal-l orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Csf {
    pub pairs: [(BoysOrbital, BoysOrbital); 2],
}

impl Csf {
    pub fn new(
        first: (BoysOrbital, BoysOrbital),
        second: (BoysOrbital, BoysOrbital),
    ) -> Result<Self, VintageError> {
        for (a, b) in [first, second] {
            if a.l() != b.l() {
                return Err(VintageError::InvalidParameter(format!(
                    "cannot couple {} and {} to an orbital singlet",
                    a.label(),
                    b.label()
                )));
            }
        }
        Ok(Csf { pairs: [first, second] })
    }

    pub fn label(&self) -> String {
        self.pairs.iter().map(|(a, b)| format!("({}{})1S", a.label(), b.label())).collect()
    }
}

impl fmt::Display for Csf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The ten CSFs of the compact mapping, in qubit-state order.
pub fn boys_csfs() -> Vec<Csf> {
    use BoysOrbital::*;
    [
        ((SA, SA), (SB, SB)),
        ((SB, SB), (SC, SC)),
        ((SA, SA), (SB, SC)),
        ((SA, SC), (SB, SB)),
        ((SA, SA), (PA, PA)),
        ((SA, SC), (PA, PA)),
        ((SA, SA), (SC, SC)),
        ((SA, SB), (SC, SC)),
        ((SB, SB), (PA, PA)),
        ((SA, SB), (PA, PA)),
    ]
    .into_iter()
    .map(|(a, b)| Csf { pairs: [a, b] })
    .collect()
}

/// Fock-space vector as a sparse map from basis index to amplitude.
type Sparse = std::collections::BTreeMap<usize, Complex64>;

fn create(mode: usize, modes: usize, state: &Sparse) -> Sparse {
    let bit = 1usize << (modes - 1 - mode);
    let mut out = Sparse::new();
    for (&i, &amp) in state {
        if i & bit != 0 {
            continue;
        }
        let above = if mode == 0 { 0 } else { (i >> (modes - mode)).count_ones() };
        let sign = if above % 2 == 0 { 1.0 } else { -1.0 };
        *out.entry(i | bit).or_insert(c(0.0, 0.0)) += amp * sign;
    }
    out
}

/// Applies the singlet pair creator sum_m cg (a+_{X m up} a+_{Y -m down} - a+_{X m down} a+_{Y -m up}).
fn create_pair(x: BoysOrbital, y: BoysOrbital, modes: usize, state: &Sparse) -> Sparse {
    let l = x.l() as i32;
    let mut out = Sparse::new();
    for m in -l..=l {
        let w = cg_singlet(x.l(), m, -m);
        for (sx, sign) in [(true, 1.0), (false, -1.0)] {
            let inner = create(boys_mode(y, -m, !sx), modes, state);
            let outer = create(boys_mode(x, m, sx), modes, &inner);
            for (k, v) in outer {
                *out.entry(k).or_insert(c(0.0, 0.0)) += v * (w * sign);
            }
        }
    }
    out
}

/// Normalized occupation-number state of a CSF over `modes` spin-orbitals.
pub fn csf_fock_state(csf: &Csf, modes: usize) -> Result<StateVector, VintageError> {
    if modes > MAX_CSF_MODES {
        return Err(VintageError::ModeCapExceeded { modes, cap: MAX_CSF_MODES });
    }
    if modes < BOYS_MODES {
        return Err(VintageError::InvalidParameter(format!("the Boys basis needs {BOYS_MODES} modes")));
    }
    let mut state = Sparse::new();
    state.insert(0, c(1.0, 0.0));
    for &(x, y) in csf.pairs.iter().rev() {
        state = create_pair(x, y, modes, &state);
    }
    let norm = state.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < NORM_FLOOR {
        return Err(VintageError::NormCollapse(csf.label()));
    }
    let mut amps = vec![c(0.0, 0.0); 1 << modes];
    for (k, v) in state {
        amps[k] = v / norm;
    }
    Ok(StateVector::from_amplitudes(amps)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoysMatrix {
    Six,
    Ten,
}

impl BoysMatrix {
    pub fn name(self) -> &'static str {
        match self {
            BoysMatrix::Six => "six",
            BoysMatrix::Ten => "ten",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            BoysMatrix::Six => 6,
            BoysMatrix::Ten => 10,
        }
    }
}

impl std::str::FromStr for BoysMatrix {
    type Err = VintageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "six" | "6" => Ok(BoysMatrix::Six),
            "ten" | "10" => Ok(BoysMatrix::Ten),
            other => Err(VintageError::InvalidParameter(format!("unknown matrix {other:?}"))),
        }
    }
}

#[rustfmt::skip]
const BOYS_SIX: [[f64; 6]; 6] = [
    [0.0, 0.3967, 0.2488, -0.9416, -0.1361, 0.0],
    [0.3967, 17.0628, -0.1257, -0.5601, 0.0, 0.0],
    [0.2488, -0.1257, 5.0387, 0.1499, -0.0099, 0.0196],
    [-0.9416, -0.5601, 0.1499, 8.7275, 0.0, -0.1361],
    [-0.1361, 0.0, -0.0099, 0.0, 0.3677, -0.9502],
    [0.0, 0.0, 0.0196, -0.1361, -0.9502, 9.1242],
];

/// Rows as printed; entry (7, 9) disagrees in sign with (9, 7).
#[rustfmt::skip]
pub const BOYS_TEN_RAW: [[f64; 10]; 10] = [
    [-14.4577, 0.3967, 0.2488, -0.9416, -0.1361, 0.0, 0.0541, 0.0986, -0.1361, 0.0276],
    [0.3967, 2.6051, -0.1257, -0.5601, 0.0, 0.0, 0.0220, -0.1958, -0.0317, 0.0],
    [0.2488, -0.1257, -9.419, 0.1499, -0.0099, 0.0196, 0.3534, 1.0192, 0.0, 0.0070],
    [-0.9416, -0.5601, 0.1499, -5.7302, 0.0, -0.1361, 0.0269, -0.8085, 0.0, -0.1780],
    [-0.1361, 0.0, -0.0099, 0.0, -14.09, -0.9502, -0.0132, 0.0, 0.0220, -0.2816],
    [0.0, 0.0, 0.0196, -0.1361, -0.9502, -5.3335, 0.0215, 0.0070, -0.0269, 0.0407],
    [0.0541, 0.0220, 0.3534, 0.0269, -0.0132, 0.0215, -3.7904, 1.3259, 0.0, 0.0],
    [0.0986, -0.1958, 1.0192, -0.8085, 0.0, 0.0070, 1.3259, 1.5002, 0.0, -0.0946],
    [-0.1361, -0.0317, 0.0, 0.0, 0.0220, -0.0269, 0.0, 0.0, -4.1937, 0.0032],
    [0.0276, 0.0, 0.0070, -0.1780, -0.2816, 0.0407, 0.0, 0.0946, 0.0032, -10.1121],
];

/// Boys CI matrix in Hartree; the ten-state matrix is symmetrized from its lower triangle.
pub fn boys_matrix(which: BoysMatrix) -> RealMatrix {
    match which {
        BoysMatrix::Six => RealMatrix::from_fn(6, 6, |i, j| BOYS_SIX[i][j]),
        BoysMatrix::Ten => RealMatrix::from_fn(10, 10, |i, j| BOYS_TEN_RAW[i.max(j)][i.min(j)]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoysReport {
    pub matrix: BoysMatrix,
    pub eigenvalue: f64,
    pub ipea_energy: f64,
    pub bits: usize,
    pub cnot_count: Option<usize>,
    pub one_qubit_count: Option<usize>,
    #[serde(skip)]
    pub window_width: f64,
    #[serde(skip)]
    pub phase_bits: String,
    #[serde(skip)]
    pub round_trip_error: Option<f64>,
}

impl BoysReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "matrix: {}\neigenvalue: {:.12}\nipea_energy: {:.12}\nbits: {}\nphase_bits: {}\nwindow_width: {:.12}\n",
            self.matrix.name(),
            self.eigenvalue,
            self.ipea_energy,
            self.bits,
            self.phase_bits,
            self.window_width
        );
        if let (Some(cx), Some(one), Some(err)) =
            (self.cnot_count, self.one_qubit_count, self.round_trip_error)
        {
            out.push_str(&format!(
                "cnot_count: {cx}\none_qubit_count: {one}\nround_trip_error: {err:.3e}\nreference: {REFERENCE_CNOTS} CNOT, {REFERENCE_ONE_QUBIT} one-qubit (optimal three-qubit circuit)\n"
            ));
        }
        out
    }
}

/// Classical ground energy, exact-mode IPEA readout and, optionally, a compiled evolution operator.
pub fn run_boys_pipeline(which: BoysMatrix, p: usize, compile: bool) -> Result<BoysReport, VintageError> {
    if p == 0 || p > MAX_PIPELINE_BITS {
        return Err(VintageError::InvalidParameter(format!("bits must lie in 1..={MAX_PIPELINE_BITS}")));
    }
    let h = numkit::to_complex(&boys_matrix(which));
    let spec = numkit::herm_eig(&h)?;
    let eigenvalue = spec.eigenvalues[0];
    let window = simulator::energy_window(&h, PIPELINE_MARGIN)?;
    let qubits = simulator::qubits_for_dim(h.nrows());
    let ground: Vec<Complex64> = spec.eigenvectors.column(0).iter().copied().collect();
    let state = StateVector::from_vector_padded(&ground, qubits)?;
    let est = simulator::ipea_estimate(&h, &state, p, IpeaMode::Exact, &window)?;
    let mut report = BoysReport {
        matrix: which,
        eigenvalue,
        ipea_energy: est.energy,
        bits: p,
        cnot_count: None,
        one_qubit_count: None,
        window_width: window.width(),
        phase_bits: est.bit_string(),
        round_trip_error: None,
    };
    if compile {
        let padded = simulator::pad_hamiltonian(&h, &window, qubits)?;
        let u = numkit::expm_hermitian(&padded, window.tau)?;
        let circuit = kak::qsd(&u)?;
        let err = numkit::frob_dist(&kak::circuit_to_unitary(&circuit)?, &u)?;
        if err >= ROUND_TRIP_TOL {
            return Err(VintageError::RoundTrip(err));
        }
        report.cnot_count = Some(circuit.cnot_count());
        report.one_qubit_count = Some(circuit.one_qubit_count());
        report.round_trip_error = Some(err);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoadmapRow {
    pub year: u32,
    pub system: &'static str,
    pub qubits: &'static [u32],
    /// Configuration counts stated for the calculation, where given.
    pub configs: &'static [u64],
}

const fn row(year: u32, system: &'static str, qubits: &'static [u32], configs: &'static [u64]) -> RoadmapRow {
    RoadmapRow { year, system, qubits, configs }
}

pub fn roadmap_table() -> Vec<RoadmapRow> {
    vec![
        row(1933, "H2", &[1], &[]),
        row(1950, "Be", &[3, 4], &[6, 10]),
        row(1952, "He", &[2], &[4]),
        row(1955, "He", &[2, 3], &[3, 6]),
        row(1956, "BH", &[5], &[23]),
        row(1956, "H2O", &[7], &[96]),
        row(1957, "LiH", &[3, 4, 5], &[6, 10, 20]),
        row(1957, "BeH+", &[3, 4, 5], &[6, 10, 20]),
        row(1960, "Be", &[6], &[37]),
        row(1960, "CH2", &[19], &[]),
        row(1963, "H2", &[3, 4, 5, 6], &[8, 15, 21, 33]),
        row(1966, "HeH", &[3], &[7]),
        row(1966, "Li2", &[3], &[7]),
        row(1967, "H2O", &[10], &[]),
        row(1967, "H2O", &[24], &[]),
        row(1967, "H2O", &[38, 39], &[]),
        row(1968, "H2O", &[39, 46], &[]),
        row(1968, "Be", &[11], &[1492]),
        row(1969, "Li, Be+, B++", &[9, 10], &[]),
        row(1969, "BH, FH", &[12, 14], &[]),
        row(1970, "H2O", &[23], &[]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterScfRow {
    pub calculation: &'static str,
    pub method: &'static str,
    pub basis_size: Option<u32>,
    pub energy: f64,
    pub qubits: Option<u32>,
}

pub fn water_scf_table() -> Vec<WaterScfRow> {
    let r = |calculation, method, basis_size, energy, qubits| WaterScfRow {
        calculation,
        method,
        basis_size,
        energy,
        qubits,
    };
    vec![
        r("Reeves and Boys", "MC STO", None, -75.776, None),
        r("McWeeny and Ohno", "MC STO", Some(7), -75.761, Some(10)),
        r("Moccia", "OC STO", Some(28), -75.992, Some(36)),
        r("Harrison", "MC GLF", Some(14), -76.002, Some(24)),
        r("Moskowitz and Harrison", "MC GTO", Some(36), -76.034, Some(39)),
        r("Ritchie and King", "MC CGF", Some(38), -76.034, Some(38)),
        r("1968 survey", "MC GLF", Some(32), -76.044, Some(39)),
        r("1968 survey", "MC GTO", Some(56), -76.002, Some(46)),
    ]
}

fn list(xs: &[impl ToString]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn opt(x: Option<u32>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn roadmap_text() -> String {
    let mut out = format!("{:<6}{:<16}{:<12}{}\n", "year", "system", "qubits", "configs");
    for r in roadmap_table() {
        let configs = if r.configs.is_empty() { "-".to_string() } else { list(r.configs) };
        out.push_str(&format!("{:<6}{:<16}{:<12}{}\n", r.year, r.system, list(r.qubits), configs));
    }
    out
}

pub fn roadmap_csv() -> String {
    let mut out = String::from("year,system,qubits,configs\n");
    for r in roadmap_table() {
        out.push_str(&format!(
            "{},\"{}\",\"{}\",\"{}\"\n",
            r.year,
            r.system,
            list(r.qubits),
            list(r.configs)
        ));
    }
    out
}

pub fn water_scf_text() -> String {
    let mut out = format!("{:<24}{:<8}{:<7}{:<10}{}\n", "calculation", "method", "basis", "energy", "qubits");
    for r in water_scf_table() {
        out.push_str(&format!(
            "{:<24}{:<8}{:<7}{:<10.3}{}\n",
            r.calculation,
            r.method,
            opt(r.basis_size),
            r.energy,
            opt(r.qubits)
        ));
    }
    out
}

pub fn water_scf_csv() -> String {
    let mut out = String::from("calculation,method,basis_size,energy,qubits\n");
    for r in water_scf_table() {
        let o = |x: Option<u32>| x.map_or(String::new(), |v| v.to_string());
        out.push_str(&format!(
            "\"{}\",{},{},{:.3},{}\n",
            r.calculation,
            r.method,
            o(r.basis_size),
            r.energy,
            o(r.qubits)
        ));
    }
    out
}

/// Overlaps between the normalized Fock states of the ten CSFs.
pub fn csf_overlaps() -> Result<ComplexMatrix, VintageError> {
    let states: Vec<StateVector> =
        boys_csfs().iter().map(|csf| csf_fock_state(csf, BOYS_MODES)).collect::<Result<_, _>>()?;
    Ok(ComplexMatrix::from_fn(states.len(), states.len(), |i, j| {
        states[i].amplitudes().iter().zip(states[j].amplitudes()).map(|(a, b)| a.conj() * b).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::qubits_for_configs;
    use crate::jw::{total_number, total_spin_squared};

    /// Cyclic Jacobi rotations, independent of the library eigensolver.
    fn jacobi_eigenvalues(m: &RealMatrix) -> Vec<f64> {
        let mut a = m.clone();
        let n = a.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].powi(2))
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * cs;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = cs * akp - sn * akq;
                        a[(k, q)] = sn * akp + cs * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = cs * apk - sn * aqk;
                        a[(q, k)] = sn * apk + cs * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    const SIX_GROUND: f64 = -0.163436706327;
    const TEN_GROUND: f64 = -14.624036173146;

    #[test]
    fn overlaps() {
        assert_eq!(radial_overlap(&SA, &SA), 1.0 / 256.0);
        assert!((radial_overlap(&SA, &SB) - 0.0096).abs() < 1e-15);
        assert_eq!(radial_overlap(&SB, &SB), 0.75);
        assert!((radial_overlap(&SA, &SC) - 2.0 / 343.0).abs() < 1e-16);
        assert!((radial_overlap(&SB, &SC) - 6.0 / 256.0).abs() < 1e-16);
        assert!((radial_overlap(&SC, &SC) - 2.0 / 216.0).abs() < 1e-16);
        assert_eq!(radial_overlap(&SA, &PA), 0.0);
    }

    #[test]
    fn orthonormalization() {
        let gs = gram_schmidt(&[SA, SB, SC]).unwrap();
        let s = overlap_matrix(&[SA, SB, SC]);
        let g = &gs.coefficients * s * gs.coefficients.transpose();
        assert!((g - RealMatrix::identity(3, 3)).amax() < 1e-10);
        assert_eq!(gram_schmidt(&[SA]).unwrap().coefficients[(0, 0)], 16.0);
        assert!(matches!(gram_schmidt(&[SA, SA]), Err(VintageError::LinearlyDependentBasis(_))));
        for check in published_constant_checks().unwrap() {
            assert!(check.matched, "{check:?}");
        }
    }

    #[test]
    fn singlet_coupling() {
        assert_eq!(cg_singlet(0, 0, 0), 1.0);
        assert!((cg_singlet(1, 1, -1) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(cg_singlet(1, 0, 1), 0.0);
        let p = singlet_pair_state(1);
        let r = 1.0 / 3f64.sqrt();
        assert!((p[0] - r).abs() < 1e-15 && (p[1] + r).abs() < 1e-15 && (p[2] - r).abs() < 1e-15);
        for l in 0..=4 {
            let n: f64 = singlet_pair_state(l).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn csf_states_are_singlets() {
        let s2 = total_spin_squared(6).unwrap();
        let num = total_number(12).unwrap();
        for csf in boys_csfs() {
            let st = csf_fock_state(&csf, BOYS_MODES).unwrap();
            let amps = st.amplitudes();
            assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
            let s2v = s2.apply(amps).unwrap();
            assert!(s2v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-9, "{csf}");
            let nv = num.apply(amps).unwrap();
            let resid: f64 = nv.iter().zip(amps).map(|(a, b)| (a - b * 4.0).norm_sqr()).sum();
            assert!(resid.sqrt() < 1e-9, "{csf}");
        }
    }

    #[test]
    fn csf_structure() {
        use BoysOrbital::*;
        let closed = csf_fock_state(&Csf::new((SA, SA), (SB, SB)).unwrap(), 12).unwrap();
        assert_eq!(closed.amplitudes().iter().filter(|z| z.norm() > 1e-12).count(), 1);
        let p = csf_fock_state(&Csf::new((SA, SA), (PA, PA)).unwrap(), 12).unwrap();
        assert_eq!(p.amplitudes().iter().filter(|z| z.norm() > 1e-12).count(), 3);
        assert!(matches!(
            csf_fock_state(&Csf::new((SA, SA), (SA, SA)).unwrap(), 12),
            Err(VintageError::NormCollapse(_))
        ));
        assert!(Csf::new((SA, PA), (SB, SB)).is_err());
        assert!(matches!(csf_fock_state(&boys_csfs()[0], 14), Err(VintageError::ModeCapExceeded { .. })));
        assert_eq!(boys_csfs()[9].label(), "(sAsB)1S(pApA)1S");
    }

    #[test]
    fn matrices() {
        let six = boys_matrix(BoysMatrix::Six);
        assert_eq!(six[(1, 1)], 17.0628);
        assert_eq!(six, six.transpose());
        let ten = boys_matrix(BoysMatrix::Ten);
        assert_eq!(ten[(0, 0)], -14.4577);
        assert_eq!((ten[(4, 5)], ten[(5, 4)]), (-0.9502, -0.9502));
        assert_eq!((ten[(7, 9)], ten[(9, 7)]), (0.0946, 0.0946));
        assert_eq!(ten, ten.transpose());
        let asym: Vec<(usize, usize)> = (0..10)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .filter(|&(i, j)| BOYS_TEN_RAW[i][j] != BOYS_TEN_RAW[j][i])
            .collect();
        assert_eq!(asym, vec![(9, 7)]);
    }

    #[test]
    fn ground_energies_match_independent_oracle() {
        for (which, frozen) in [(BoysMatrix::Six, SIX_GROUND), (BoysMatrix::Ten, TEN_GROUND)] {
            let m = boys_matrix(which);
            let oracle = jacobi_eigenvalues(&m)[0];
            assert!((oracle - frozen).abs() < 1e-11, "{oracle}");
            let (lib, _) = numkit::real_sym_eig(&m).unwrap();
            assert!((lib[0] - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn pipeline() {
        let rep = run_boys_pipeline(BoysMatrix::Six, 20, true).unwrap();
        assert!((rep.eigenvalue - SIX_GROUND).abs() < 1e-10);
        assert!((rep.ipea_energy - rep.eigenvalue).abs() <= 2f64.powi(-18) * rep.window_width);
        assert!(rep.round_trip_error.unwrap() < ROUND_TRIP_TOL);
        let json = rep.to_json();
        assert!(json.starts_with("{\"matrix\":\"six\",\"eigenvalue\":"));
        assert!(json.contains("\"bits\":20"));
        assert!(run_boys_pipeline(BoysMatrix::Six, 25, false).is_err());
        let plain = run_boys_pipeline(BoysMatrix::Ten, 12, false).unwrap();
        assert_eq!(plain.cnot_count, None);
        assert!(plain.to_json().contains("\"cnot_count\":null"));
    }

    #[test]
    fn roadmap_consistency() {
        for r in roadmap_table().iter().filter(|r| !r.configs.is_empty()) {
            let mut q: Vec<u32> = r.configs.iter().map(|&n| qubits_for_configs(n).unwrap()).collect();
            q.sort_unstable();
            q.dedup();
            assert_eq!(q, r.qubits, "{} {}", r.year, r.system);
        }
        let t = roadmap_table();
        assert!(t.iter().any(|r| r.year == 1956 && r.system == "H2O" && r.qubits == [7]));
        assert!(t.iter().any(|r| r.year == 1968 && r.system == "Be" && r.qubits == [11]));
        let w = water_scf_table();
        assert!(w.iter().any(|r| r.calculation == "Moskowitz and Harrison"
            && r.energy == -76.034
            && r.qubits == Some(39)));
        assert!(roadmap_csv().starts_with("year,system,qubits,configs\n1933,"));
    }
}
