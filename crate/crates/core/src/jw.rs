//! Pauli-string algebra and the Jordan-Wigner image of fermionic operators.
//!
//! Mode j is qubit j; qubit 0 is the most significant bit of a basis index.
//! Spin-orbital modes are orbital-major: mode 2i is orbital i spin-up, 2i+1 spin-down.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::numkit::{self, c, ComplexMatrix, NumError, RealMatrix};

/// Coefficients below this magnitude are dropped from a `PauliSum`.
pub const PRUNE_TOL: f64 = 1e-14;
/// Largest register `pauli_to_matrix` expands densely.
pub const MAX_DENSE_QUBITS: usize = 10;
/// Largest register accepted by `trotter_approx`.
pub const MAX_TROTTER_QUBITS: usize = 8;
/// Largest mode count for `total_spin_squared`.
pub const MAX_SPIN_MODES: usize = 12;

const SYMMETRY_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JwError {
    #[error("index {index} out of range for {bound} modes")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("qubit counts differ: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("{qubits} qubits exceeds the cap of {cap}")]
    QubitCapExceeded { qubits: usize, cap: usize },
    #[error("integrals violate symmetry: {0}")]
    AsymmetricIntegrals(String),
    #[error("operator is not Hermitian (imaginary coefficient {0:.3e})")]
    NonHermitian(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Numeric(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// a * b = phase * result.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Pauli) -> (Complex64, Pauli) {
        use Pauli::*;
        let i = c(0.0, 1.0);
        match (self, other) {
            (I, p) | (p, I) => (c(1.0, 0.0), p),
            (a, b) if a == b => (c(1.0, 0.0), I),
            (X, Y) => (i, Z),
            (Y, Z) => (i, X),
            (Z, X) => (i, Y),
            (Y, X) => (-i, Z),
            (Z, Y) => (-i, X),
            (X, Z) => (-i, Y),
            _ => unreachable!(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
        let entries = match self {
            Pauli::I => [o, z, z, o],
            Pauli::X => [z, o, o, z],
            Pauli::Y => [z, -i, i, z],
            Pauli::Z => [o, z, z, -o],
        };
        ComplexMatrix::from_row_slice(2, 2, &entries)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    coeff: Complex64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coeff: Complex64) -> Self {
        PauliString { letters, coeff }
    }

    pub fn identity(qubits: usize) -> Self {
        PauliString { letters: vec![Pauli::I; qubits], coeff: c(1.0, 0.0) }
    }

    pub fn qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    pub fn mul(&self, other: &PauliString) -> Result<PauliString, JwError> {
        if self.qubits() != other.qubits() {
            return Err(JwError::DimMismatch { left: self.qubits(), right: other.qubits() });
        }
        let (phase, letters) = mul_letters(&self.letters, &other.letters);
        Ok(PauliString { letters, coeff: phase * self.coeff * other.coeff })
    }

    pub fn label(&self) -> String {
        label(&self.letters)
    }
}

fn label(letters: &[Pauli]) -> String {
    letters.iter().map(|p| p.symbol()).collect()
}

fn mul_letters(a: &[Pauli], b: &[Pauli]) -> (Complex64, Vec<Pauli>) {
    let mut phase = c(1.0, 0.0);
    let letters = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (ph, p) = x.mul(y);
            phase *= ph;
            p
        })
        .collect();
    (phase, letters)
}

/// Flip mask, phase mask and Y count of a string for basis-state action.
fn masks(letters: &[Pauli]) -> (usize, usize, u32) {
    let q = letters.len();
    let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
    for (k, p) in letters.iter().enumerate() {
        let bit = 1usize << (q - 1 - k);
        match p {
            Pauli::I => {}
            Pauli::X => x |= bit,
            Pauli::Y => {
                x |= bit;
                z |= bit;
                ny += 1;
            }
            Pauli::Z => z |= bit,
        }
    }
    (x, z, ny)
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: BTreeMap<Vec<Pauli>, Complex64>,
}

impl PauliSum {
    pub fn zero(qubits: usize) -> Self {
        PauliSum { qubits, terms: BTreeMap::new() }
    }

    pub fn identity(qubits: usize, coeff: Complex64) -> Self {
        let mut s = Self::zero(qubits);
        s.add_term(vec![Pauli::I; qubits], coeff);
        s
    }

    pub fn from_string(s: &PauliString) -> Self {
        let mut out = Self::zero(s.qubits());
        out.add_term(s.letters.clone(), s.coeff);
        out
    }

    /// Sum holding a single letter `p` on qubit `j`.
    pub fn single(qubits: usize, j: usize, p: Pauli, coeff: Complex64) -> Result<Self, JwError> {
        if j >= qubits {
            return Err(JwError::IndexOutOfRange { index: j, bound: qubits });
        }
        let mut letters = vec![Pauli::I; qubits];
        letters[j] = p;
        let mut s = Self::zero(qubits);
        s.add_term(letters, coeff);
        Ok(s)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Pauli], Complex64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn strings(&self) -> Vec<PauliString> {
        self.terms.iter().map(|(k, v)| PauliString::new(k.clone(), *v)).collect()
    }

    pub fn coeff(&self, letters: &[Pauli]) -> Complex64 {
        self.terms.get(letters).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn coeff_of(&self, label: &str) -> Complex64 {
        let letters: Option<Vec<Pauli>> = label
            .chars()
            .map(|ch| match ch {
                'I' => Some(Pauli::I),
                'X' => Some(Pauli::X),
                'Y' => Some(Pauli::Y),
                'Z' => Some(Pauli::Z),
                _ => None,
            })
            .collect();
        letters.map(|l| self.coeff(&l)).unwrap_or(c(0.0, 0.0))
    }

    /// Adds to a term, dropping it if the result falls below the pruning threshold.
    pub fn add_term(&mut self, letters: Vec<Pauli>, coeff: Complex64) {
        debug_assert_eq!(letters.len(), self.qubits);
        let entry = self.terms.entry(letters.clone()).or_insert(c(0.0, 0.0));
        *entry += coeff;
        if entry.norm() < PRUNE_TOL {
            self.terms.remove(&letters);
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, v| v.norm() >= PRUNE_TOL);
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum, JwError> {
        if self.qubits != other.qubits {
            return Err(JwError::DimMismatch { left: self.qubits, right: other.qubits });
        }
        let mut out = self.clone();
        out.add_assign_scaled(other, c(1.0, 0.0));
        Ok(out)
    }

    fn add_assign_scaled(&mut self, other: &PauliSum, scale: Complex64) {
        for (k, v) in &other.terms {
            *self.terms.entry(k.clone()).or_insert(c(0.0, 0.0)) += v * scale;
        }
        self.prune();
    }

    pub fn scale(&self, s: Complex64) -> PauliSum {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| *v *= s);
        out.prune();
        out
    }

    pub fn adjoint(&self) -> PauliSum {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum, JwError> {
        pauli_mul(self, other)
    }

    /// Largest imaginary part among the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, v| acc.max(v.im.abs()))
    }

    /// Pauli strings are Hermitian, so the sum is Hermitian iff all coefficients are real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// Applies the operator to a state vector of length 2^qubits.
    pub fn apply(&self, state: &[Complex64]) -> Result<Vec<Complex64>, JwError> {
        let dim = 1usize << self.qubits;
        if state.len() != dim {
            return Err(JwError::DimMismatch { left: dim, right: state.len() });
        }
        let mut out = vec![c(0.0, 0.0); dim];
        for (letters, coeff) in &self.terms {
            let (x, z, ny) = masks(letters);
            let base = coeff * i_pow(ny);
            for (i, amp) in state.iter().enumerate() {
                if *amp == c(0.0, 0.0) {
                    continue;
                }
                let sign = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                out[i ^ x] += base * sign * amp;
            }
        }
        Ok(out)
    }

    /// <state| self |state>.
    pub fn expectation(&self, state: &[Complex64]) -> Result<Complex64, JwError> {
        let applied = self.apply(state)?;
        Ok(state.iter().zip(&applied).map(|(a, b)| a.conj() * b).sum())
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, v)) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            if v.im == 0.0 {
                write!(f, "{:+.12e} {}", v.re, label(k))?;
            } else {
                write!(f, "({:+.12e}{:+.12e}i) {}", v.re, v.im, label(k))?;
            }
        }
        Ok(())
    }
}

pub fn pauli_mul(a: &PauliSum, b: &PauliSum) -> Result<PauliSum, JwError> {
    if a.qubits != b.qubits {
        return Err(JwError::DimMismatch { left: a.qubits, right: b.qubits });
    }
    let mut out = PauliSum::zero(a.qubits);
    for (ka, va) in &a.terms {
        for (kb, vb) in &b.terms {
            let (phase, letters) = mul_letters(ka, kb);
            *out.terms.entry(letters).or_insert(c(0.0, 0.0)) += phase * va * vb;
        }
    }
    out.prune();
    Ok(out)
}

/// Z^{(x) j} (x) (X + iY)/2 (x) I^{(x) (q - j - 1)}.
pub fn jw_lowering(j: usize, q: usize) -> Result<PauliSum, JwError> {
    if j >= q {
        return Err(JwError::IndexOutOfRange { index: j, bound: q });
    }
    let mut out = PauliSum::zero(q);
    for (p, coeff) in [(Pauli::X, c(0.5, 0.0)), (Pauli::Y, c(0.0, 0.5))] {
        let mut letters = vec![Pauli::I; q];
        letters[..j].fill(Pauli::Z);
        letters[j] = p;
        out.add_term(letters, coeff);
    }
    Ok(out)
}

pub fn jw_raising(j: usize, q: usize) -> Result<PauliSum, JwError> {
    Ok(jw_lowering(j, q)?.adjoint())
}

/// a+_j a_j = (I - Z_j)/2.
pub fn number_operator(j: usize, q: usize) -> Result<PauliSum, JwError> {
    let mut n = PauliSum::identity(q, c(0.5, 0.0));
    n = n.add(&PauliSum::single(q, j, Pauli::Z, c(-0.5, 0.0))?)?;
    Ok(n)
}

/// Total particle number over all q modes.
pub fn total_number(q: usize) -> Result<PauliSum, JwError> {
    let mut n = PauliSum::zero(q);
    for j in 0..q {
        n = n.add(&number_operator(j, q)?)?;
    }
    Ok(n)
}

pub fn pauli_to_matrix(s: &PauliSum) -> Result<ComplexMatrix, JwError> {
    if s.qubits > MAX_DENSE_QUBITS {
        return Err(JwError::QubitCapExceeded { qubits: s.qubits, cap: MAX_DENSE_QUBITS });
    }
    let dim = 1usize << s.qubits;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (letters, coeff) in &s.terms {
        let (x, z, ny) = masks(letters);
        let base = coeff * i_pow(ny);
        for i in 0..dim {
            let sign = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(i ^ x, i)] += base * sign;
        }
    }
    Ok(m)
}

/// One- and two-electron integrals over spin-orbitals (Hartree).
#[derive(Debug, Clone, PartialEq)]
pub struct FermionIntegrals {
    norb: usize,
    nelec: usize,
    h1: RealMatrix,
    h2: Vec<f64>,
    enuc: f64,
}

impl FermionIntegrals {
    /// `h2` is row-major over (p, q, r, s) and holds <pq|rs>.
    pub fn new(norb: usize, nelec: usize, h1: RealMatrix, h2: Vec<f64>, enuc: f64) -> Result<Self, JwError> {
        if h1.shape() != (norb, norb) {
            return Err(JwError::DimMismatch { left: norb, right: h1.nrows() });
        }
        if h2.len() != norb.pow(4) {
            return Err(JwError::DimMismatch { left: norb.pow(4), right: h2.len() });
        }
        if nelec > norb {
            return Err(JwError::InvalidParameter(format!("{nelec} electrons in {norb} spin-orbitals")));
        }
        let ints = FermionIntegrals { norb, nelec, h1, h2, enuc };
        ints.validate()?;
        Ok(ints)
    }

    fn validate(&self) -> Result<(), JwError> {
        let n = self.norb;
        for p in 0..n {
            for q in 0..n {
                if (self.h1[(p, q)] - self.h1[(q, p)]).abs() > SYMMETRY_TOL {
                    return Err(JwError::AsymmetricIntegrals(format!("h1[{p}][{q}] != h1[{q}][{p}]")));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h2(p, q, r, s);
                        if (v - self.h2(q, p, s, r)).abs() > SYMMETRY_TOL {
                            return Err(JwError::AsymmetricIntegrals(format!(
                                "<{p}{q}|{r}{s}> != <{q}{p}|{s}{r}>"
                            )));
                        }
                        if (v - self.h2(r, s, p, q)).abs() > SYMMETRY_TOL {
                            return Err(JwError::AsymmetricIntegrals(format!(
                                "<{p}{q}|{r}{s}> != <{r}{s}|{p}{q}>"
                            )));
                        }
                    }
                }
            }
        }
        if !self.enuc.is_finite() || self.h1.iter().chain(&self.h2).any(|v| !v.is_finite()) {
            return Err(JwError::InvalidParameter("non-finite integral".into()));
        }
        Ok(())
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn nelec(&self) -> usize {
        self.nelec
    }

    pub fn enuc(&self) -> f64 {
        self.enuc
    }

    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[(p, q)]
    }

    pub fn h1_matrix(&self) -> &RealMatrix {
        &self.h1
    }

    /// <pq|rs>.
    pub fn h2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.norb;
        self.h2[((p * n + q) * n + r) * n + s]
    }

    /// Same integrals with h1 shifted by `shift` on the diagonal.
    pub fn with_h1_shift(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for p in 0..self.norb {
            out.h1[(p, p)] += shift;
        }
        out
    }

    /// Dense random integrals with the required permutational symmetries.
    pub fn random<R: Rng + ?Sized>(norb: usize, nelec: usize, rng: &mut R) -> Result<Self, JwError> {
        let mut h1 = RealMatrix::from_fn(norb, norb, |_, _| rng.gen_range(-1.0..1.0));
        h1 = (&h1 + h1.transpose()).scale(0.5);
        let n = norb;
        let raw: Vec<f64> = (0..n.pow(4)).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let at = |p: usize, q: usize, r: usize, s: usize| raw[((p * n + q) * n + r) * n + s];
        let mut h2 = vec![0.0; n.pow(4)];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        h2[((p * n + q) * n + r) * n + s] =
                            (at(p, q, r, s) + at(q, p, s, r) + at(r, s, p, q) + at(s, r, q, p)) / 4.0;
                    }
                }
            }
        }
        let enuc = rng.gen_range(-1.0..1.0);
        Self::new(norb, nelec, h1, h2, enuc)
    }

    /// Parses the integral file format: a header "NORB=.. NELEC=.. ENUC=.." and lines
    /// "value p q r s" with 1-based indices, "p q 0 0" for h1 and "0 0 0 0" for a constant.
    pub fn parse(text: &str) -> Result<Self, JwError> {
        let mut header: Option<(usize, usize, f64)> = None;
        let mut h1_entries: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
        let mut h2_entries: BTreeMap<(usize, usize, usize, usize), (f64, usize)> = BTreeMap::new();
        let mut constant: Option<f64> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let perr = |message: String| JwError::Parse { line, message };
            if header.is_none() {
                let (mut norb, mut nelec, mut enuc) = (None, None, None);
                for tok in body.split(|ch: char| ch.is_whitespace() || ch == ',') {
                    if tok.is_empty() {
                        continue;
                    }
                    let (key, val) = tok
                        .split_once('=')
                        .ok_or_else(|| perr(format!("expected KEY=VALUE, got {tok:?}")))?;
                    match key.trim().to_ascii_uppercase().as_str() {
                        "NORB" => norb = Some(val.parse::<usize>().map_err(|e| perr(format!("NORB: {e}")))?),
                        "NELEC" => {
                            nelec = Some(val.parse::<usize>().map_err(|e| perr(format!("NELEC: {e}")))?)
                        }
                        "ENUC" => enuc = Some(val.parse::<f64>().map_err(|e| perr(format!("ENUC: {e}")))?),
                        other => return Err(perr(format!("unknown header key {other:?}"))),
                    }
                }
                match (norb, nelec, enuc) {
                    (Some(n), Some(e), Some(v)) if n > 0 => header = Some((n, e, v)),
                    _ => return Err(perr("header needs NORB>0, NELEC and ENUC".into())),
                }
                continue;
            }
            let norb = header.unwrap().0;
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(perr(format!("expected 5 fields, found {}", toks.len())));
            }
            let value: f64 = toks[0].parse().map_err(|e| perr(format!("value: {e}")))?;
            if !value.is_finite() {
                return Err(perr("non-finite value".into()));
            }
            let mut idxs = [0usize; 4];
            for (k, t) in toks[1..].iter().enumerate() {
                idxs[k] = t.parse().map_err(|e| perr(format!("index {t:?}: {e}")))?;
                if idxs[k] > norb {
                    return Err(perr(format!("index {} exceeds NORB={norb}", idxs[k])));
                }
            }
            match idxs {
                [0, 0, 0, 0] => {
                    if constant.replace(value).is_some() {
                        return Err(perr("duplicate constant entry".into()));
                    }
                }
                [p, q, 0, 0] if p > 0 && q > 0 => {
                    if h1_entries.insert((p - 1, q - 1), (value, line)).is_some() {
                        return Err(perr(format!("duplicate one-electron entry {p} {q}")));
                    }
                }
                [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => {
                    if h2_entries.insert((p - 1, q - 1, r - 1, s - 1), (value, line)).is_some() {
                        return Err(perr(format!("duplicate two-electron entry {p} {q} {r} {s}")));
                    }
                }
                _ => return Err(perr(format!("malformed index pattern {idxs:?}"))),
            }
        }
        let (norb, nelec, enuc) =
            header.ok_or(JwError::Parse { line: 0, message: "missing header".into() })?;
        let mut h1 = RealMatrix::zeros(norb, norb);
        let value_of = |e: Option<&(f64, usize)>| e.map_or(0.0, |x| x.0);
        for (&(p, q), &(v, line)) in &h1_entries {
            if (v - value_of(h1_entries.get(&(q, p)))).abs() > SYMMETRY_TOL {
                return Err(JwError::AsymmetricIntegrals(format!(
                    "line {line}: h1 entry {} {} has no matching {} {}",
                    p + 1,
                    q + 1,
                    q + 1,
                    p + 1
                )));
            }
        }
        for (&(p, q, r, s), &(v, line)) in &h2_entries {
            for partner in [(q, p, s, r), (r, s, p, q)] {
                if (v - value_of(h2_entries.get(&partner))).abs() > SYMMETRY_TOL {
                    let (a, b, c2, d) = partner;
                    return Err(JwError::AsymmetricIntegrals(format!(
                        "line {line}: h2 entry {} {} {} {} has no matching {} {} {} {}",
                        p + 1,
                        q + 1,
                        r + 1,
                        s + 1,
                        a + 1,
                        b + 1,
                        c2 + 1,
                        d + 1
                    )));
                }
            }
        }
        for ((p, q), (v, _)) in h1_entries {
            h1[(p, q)] = v;
        }
        let mut h2 = vec![0.0; norb.pow(4)];
        for ((p, q, r, s), (v, _)) in h2_entries {
            h2[((p * norb + q) * norb + r) * norb + s] = v;
        }
        Self::new(norb, nelec, h1, h2, enuc + constant.unwrap_or(0.0))
    }

    /// Inverse of `parse`, listing every nonzero entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("NORB={} NELEC={} ENUC={:.17e}\n", self.norb, self.nelec, self.enuc);
        for p in 0..self.norb {
            for q in 0..self.norb {
                if self.h1[(p, q)] != 0.0 {
                    out.push_str(&format!("{:.17e} {} {} 0 0\n", self.h1[(p, q)], p + 1, q + 1));
                }
            }
        }
        let n = self.norb;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h2(p, q, r, s);
                        if v != 0.0 {
                            out.push_str(&format!("{v:.17e} {} {} {} {}\n", p + 1, q + 1, r + 1, s + 1));
                        }
                    }
                }
            }
        }
        out
    }
}

/// H = enuc + sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r.
pub fn build_hamiltonian(ints: &FermionIntegrals) -> Result<PauliSum, JwError> {
    let n = ints.norb;
    let lower: Vec<PauliSum> = (0..n).map(|j| jw_lowering(j, n)).collect::<Result<_, _>>()?;
    let raise: Vec<PauliSum> = lower.iter().map(PauliSum::adjoint).collect();
    let mut h = PauliSum::identity(n, c(ints.enuc, 0.0));
    for (p, rp) in raise.iter().enumerate() {
        for (q, lq) in lower.iter().enumerate() {
            let v = ints.h1(p, q);
            if v != 0.0 {
                h.add_assign_scaled(&pauli_mul(rp, lq)?, c(v, 0.0));
            }
        }
    }
    let mut creators: Vec<Option<PauliSum>> = vec![None; n * n];
    let mut annihilators: Vec<Option<PauliSum>> = vec![None; n * n];
    for p in 0..n {
        for q in 0..n {
            if p != q {
                creators[p * n + q] = Some(pauli_mul(&raise[p], &raise[q])?);
                annihilators[p * n + q] = Some(pauli_mul(&lower[p], &lower[q])?);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            let Some(cre) = &creators[p * n + q] else { continue };
            for r in 0..n {
                for s in 0..n {
                    let v = ints.h2(p, q, r, s);
                    let Some(ann) = &annihilators[s * n + r] else { continue };
                    if v != 0.0 {
                        h.add_assign_scaled(&pauli_mul(cre, ann)?, c(0.5 * v, 0.0));
                    }
                }
            }
        }
    }
    let imag = h.max_imag();
    if imag > IMAG_TOL {
        return Err(JwError::NonHermitian(imag));
    }
    h.terms.values_mut().for_each(|v| v.im = 0.0);
    h.prune();
    Ok(h)
}

fn check_order(order: u8) -> Result<(), JwError> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(JwError::InvalidParameter(format!("Trotter order must be 1 or 2, got {order}")))
    }
}

fn term_exponential(term: &PauliSum, t: f64) -> Result<ComplexMatrix, JwError> {
    if !term.is_hermitian(IMAG_TOL) {
        return Err(JwError::NonHermitian(term.max_imag()));
    }
    if term.len() == 1 {
        let (letters, coeff) = term.terms().next().unwrap();
        let theta = coeff.re * t;
        let p = pauli_to_matrix(&PauliSum::from_string(&PauliString::new(letters.to_vec(), c(1.0, 0.0))))?;
        let dim = p.nrows();
        return Ok(numkit::identity(dim) * c(theta.cos(), 0.0) - p * c(0.0, theta.sin()));
    }
    Ok(numkit::expm_hermitian(&pauli_to_matrix(term)?, t)?)
}

/// Dense Trotter-Suzuki approximation of exp(-i (sum_k h_k) t) with n steps.
pub fn trotter_approx(terms: &[PauliSum], t: f64, n: usize, order: u8) -> Result<ComplexMatrix, JwError> {
    check_order(order)?;
    if n == 0 {
        return Err(JwError::InvalidParameter("step count must be positive".into()));
    }
    let q = terms.first().map(|s| s.qubits).ok_or_else(|| JwError::InvalidParameter("no terms".into()))?;
    if q > MAX_TROTTER_QUBITS {
        return Err(JwError::QubitCapExceeded { qubits: q, cap: MAX_TROTTER_QUBITS });
    }
    if let Some(bad) = terms.iter().find(|s| s.qubits != q) {
        return Err(JwError::DimMismatch { left: q, right: bad.qubits });
    }
    let dt = t / n as f64;
    let dim = 1usize << q;
    let mut step = numkit::identity(dim);
    if order == 1 {
        for term in terms {
            step = term_exponential(term, dt)? * step;
        }
    } else {
        let halves: Vec<ComplexMatrix> =
            terms.iter().map(|term| term_exponential(term, dt / 2.0)).collect::<Result<_, _>>()?;
        for u in &halves {
            step = u * step;
        }
        for u in halves.iter().rev() {
            step = u * step;
        }
    }
    let mut out = numkit::identity(dim);
    for _ in 0..n {
        out = &step * out;
    }
    Ok(out)
}

/// Exact exp(-i (sum_k h_k) t) for comparison with `trotter_approx`.
pub fn exact_evolution(terms: &[PauliSum], t: f64) -> Result<ComplexMatrix, JwError> {
    let q = terms.first().map(|s| s.qubits).ok_or_else(|| JwError::InvalidParameter("no terms".into()))?;
    let mut total = PauliSum::zero(q);
    for term in terms {
        total = total.add(term)?;
    }
    Ok(numkit::expm_hermitian(&pauli_to_matrix(&total)?, t)?)
}

/// Gate count of the occupation-number mapping: 2^p A (2K)^5.
pub fn direct_gate_count(k: usize, p: u32, a: f64) -> Result<f64, JwError> {
    if k == 0 || p == 0 {
        return Err(JwError::InvalidParameter("K and p must be positive".into()));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(JwError::InvalidParameter(format!("prefactor must be positive, got {a}")));
    }
    Ok(2f64.powi(p as i32) * a * ((2 * k) as f64).powi(5))
}

/// S^2 = S- S+ + Sz (Sz + 1) over k spatial orbitals (2k modes).
pub fn total_spin_squared(k: usize) -> Result<PauliSum, JwError> {
    let q = 2 * k;
    if q > MAX_SPIN_MODES {
        return Err(JwError::QubitCapExceeded { qubits: q, cap: MAX_SPIN_MODES });
    }
    if k == 0 {
        return Err(JwError::InvalidParameter("need at least one orbital".into()));
    }
    let mut s_plus = PauliSum::zero(q);
    let mut s_z = PauliSum::zero(q);
    for i in 0..k {
        let (up, down) = (2 * i, 2 * i + 1);
        s_plus = s_plus.add(&pauli_mul(&jw_raising(up, q)?, &jw_lowering(down, q)?)?)?;
        s_z = s_z.add(&number_operator(up, q)?.scale(c(0.5, 0.0)))?;
        s_z = s_z.add(&number_operator(down, q)?.scale(c(-0.5, 0.0)))?;
    }
    let s_minus = s_plus.adjoint();
    let sz_shift = s_z.add(&PauliSum::identity(q, c(1.0, 0.0)))?;
    let s2 = pauli_mul(&s_minus, &s_plus)?.add(&pauli_mul(&s_z, &sz_shift)?)?;
    let mut out = s2;
    out.terms.values_mut().for_each(|v| v.im = 0.0);
    out.prune();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(q: usize, bits: &str) -> Vec<Complex64> {
        let idx = usize::from_str_radix(bits, 2).unwrap();
        let mut v = vec![c(0.0, 0.0); 1 << q];
        v[idx] = c(1.0, 0.0);
        v
    }

    #[test]
    fn pauli_table() {
        let x = PauliSum::single(1, 0, Pauli::X, c(1.0, 0.0)).unwrap();
        let y = PauliSum::single(1, 0, Pauli::Y, c(1.0, 0.0)).unwrap();
        let xy = pauli_mul(&x, &y).unwrap();
        assert_eq!(xy.len(), 1);
        assert_eq!(xy.coeff_of("Z"), c(0.0, 1.0));
        let id = PauliSum::identity(1, c(1.0, 0.0));
        assert_eq!(pauli_mul(&x, &id).unwrap(), x);
        for a in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
            for b in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
                let (ph, p) = a.mul(b);
                let lhs = a.matrix() * b.matrix();
                assert!((lhs - p.matrix() * ph).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn string_product_phase() {
        let a = PauliString::new(vec![Pauli::X, Pauli::Z], c(2.0, 0.0));
        let b = PauliString::new(vec![Pauli::Y, Pauli::Z], c(0.0, 1.0));
        let ab = a.mul(&b).unwrap();
        assert_eq!(ab.label(), "ZI");
        assert_eq!(ab.coeff(), c(0.0, 1.0) * c(2.0, 0.0) * c(0.0, 1.0));
        assert!(a.mul(&PauliString::identity(3)).is_err());
    }

    #[test]
    fn lowering_single_mode() {
        let a = jw_lowering(0, 1).unwrap();
        assert_eq!(a.coeff_of("X"), c(0.5, 0.0));
        assert_eq!(a.coeff_of("Y"), c(0.0, 0.5));
        let m = pauli_to_matrix(&a).unwrap();
        assert_eq!(m[(0, 1)], c(1.0, 0.0));
        assert_eq!(m[(1, 0)], c(0.0, 0.0));
        assert!(jw_lowering(1, 1).is_err());
    }

    #[test]
    fn lowering_sign_rule() {
        let a1 = jw_lowering(1, 2).unwrap();
        let out = a1.apply(&basis(2, "11")).unwrap();
        assert_eq!(out, basis(2, "10").iter().map(|z| -z).collect::<Vec<_>>());
        let aa = pauli_mul(&a1, &a1).unwrap();
        assert!(aa.is_empty());
    }

    #[test]
    fn pins_bit_order() {
        let z0 = PauliSum::single(2, 0, Pauli::Z, c(1.0, 0.0)).unwrap();
        let m = pauli_to_matrix(&z0).unwrap();
        let d: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(d, vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(pauli_to_matrix(&PauliSum::identity(3, c(1.0, 0.0))).unwrap(), numkit::identity(8));
        assert!(matches!(
            pauli_to_matrix(&PauliSum::identity(11, c(1.0, 0.0))),
            Err(JwError::QubitCapExceeded { .. })
        ));
    }

    #[test]
    fn pruning() {
        let mut s = PauliSum::zero(1);
        s.add_term(vec![Pauli::X], c(1.0, 0.0));
        s.add_term(vec![Pauli::X], c(-1.0 + 1e-16, 0.0));
        assert!(s.is_empty());
    }

    #[test]
    fn hopping_term() {
        let mut h1 = RealMatrix::zeros(2, 2);
        h1[(0, 1)] = 0.7;
        h1[(1, 0)] = 0.7;
        let ints = FermionIntegrals::new(2, 1, h1, vec![0.0; 16], 0.0).unwrap();
        let h = build_hamiltonian(&ints).unwrap();
        assert_eq!(h.len(), 2);
        assert!((h.coeff_of("XX") - c(0.35, 0.0)).norm() < 1e-15);
        assert!((h.coeff_of("YY") - c(0.35, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_one_body_is_number_form() {
        let eps = [0.3, -1.2, 2.5];
        let h1 = RealMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&eps));
        let ints = FermionIntegrals::new(3, 1, h1, vec![0.0; 81], 0.0).unwrap();
        let h = build_hamiltonian(&ints).unwrap();
        assert!((h.coeff_of("III").re - eps.iter().sum::<f64>() / 2.0).abs() < 1e-15);
        assert!((h.coeff_of("IZI").re - 0.6).abs() < 1e-15);
        assert!((h.coeff_of("ZII").re + 0.15).abs() < 1e-15);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn integral_validation() {
        let mut h1 = RealMatrix::zeros(2, 2);
        h1[(0, 1)] = 0.1;
        assert!(matches!(
            FermionIntegrals::new(2, 1, h1, vec![0.0; 16], 0.0),
            Err(JwError::AsymmetricIntegrals(_))
        ));
        let mut h2 = vec![0.0; 16];
        h2[1] = 0.2;
        assert!(matches!(
            FermionIntegrals::new(2, 1, RealMatrix::zeros(2, 2), h2, 0.0),
            Err(JwError::AsymmetricIntegrals(_))
        ));
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ints = FermionIntegrals::random(4, 2, &mut rng).unwrap();
        let back = FermionIntegrals::parse(&ints.to_text()).unwrap();
        assert_eq!(back, ints);
        let dup = "NORB=2 NELEC=1 ENUC=0\n0.5 1 1 0 0\n0.5 1 1 0 0\n";
        assert!(matches!(FermionIntegrals::parse(dup), Err(JwError::Parse { line: 3, .. })));
        let bad = "NORB=2 NELEC=1 ENUC=0\n0.5 1 x 0 0\n";
        assert!(matches!(FermionIntegrals::parse(bad), Err(JwError::Parse { line: 2, .. })));
        let asym = "NORB=2 NELEC=1 ENUC=0\n0.5 1 2 0 0\n";
        assert!(matches!(FermionIntegrals::parse(asym), Err(JwError::AsymmetricIntegrals(_))));
        let konst = "NORB=1 NELEC=1 ENUC=1.5\n0.25 0 0 0 0\n";
        assert_eq!(FermionIntegrals::parse(konst).unwrap().enuc(), 1.75);
    }

    #[test]
    fn trotter_basics() {
        let z0 = PauliSum::single(2, 0, Pauli::Z, c(0.4, 0.0)).unwrap();
        let z1 = PauliSum::single(2, 1, Pauli::Z, c(-0.9, 0.0)).unwrap();
        let exact = exact_evolution(&[z0.clone(), z1.clone()], 1.3).unwrap();
        for n in [1, 3] {
            let approx = trotter_approx(&[z0.clone(), z1.clone()], 1.3, n, 1).unwrap();
            assert!((approx - &exact).norm() < 1e-13);
        }
        let id = trotter_approx(std::slice::from_ref(&z0), 0.0, 2, 2).unwrap();
        assert!((id - numkit::identity(4)).norm() < 1e-15);
        assert!(trotter_approx(std::slice::from_ref(&z0), 1.0, 0, 1).is_err());
        assert!(trotter_approx(&[z0], 1.0, 1, 3).is_err());
    }

    #[test]
    fn direct_count() {
        assert_eq!(direct_gate_count(5, 1, 1.0).unwrap(), 200000.0);
        assert!(direct_gate_count(5, 1, 0.0).is_err());
        let r = direct_gate_count(3, 3, 1.0).unwrap() / direct_gate_count(3, 1, 1.0).unwrap();
        assert_eq!(r, 4.0);
    }

    #[test]
    fn spin_examples() {
        let s2 = total_spin_squared(1).unwrap();
        let up = basis(2, "10");
        assert!((s2.expectation(&up).unwrap().re - 0.75).abs() < 1e-14);
        // (|up, down> - |down, up>)/sqrt 2 across two orbitals: modes (0 up, 3 down) and (1 down, 2 up)
        let s2 = total_spin_squared(2).unwrap();
        let mut singlet = vec![c(0.0, 0.0); 16];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        singlet[0b1001] = c(r, 0.0);
        singlet[0b0110] = c(-r, 0.0);
        let out = s2.apply(&singlet).unwrap();
        assert!(out.iter().all(|z| z.norm() < 1e-14));
        assert!(total_spin_squared(7).is_err());
    }

    /// Creation operator built directly on occupation bitstrings.
    fn dense_creation(j: usize, q: usize) -> ComplexMatrix {
        let dim = 1 << q;
        let mut m = ComplexMatrix::zeros(dim, dim);
        let bit = 1 << (q - 1 - j);
        for i in 0..dim {
            if i & bit == 0 {
                let above = (i >> (q - j)).count_ones();
                m[(i | bit, i)] = c(if above.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0);
            }
        }
        m
    }

    #[test]
    fn anticommutation() {
        for q in 1..=4 {
            let cre: Vec<ComplexMatrix> =
                (0..q).map(|j| pauli_to_matrix(&jw_raising(j, q).unwrap()).unwrap()).collect();
            for j in 0..q {
                assert!((&cre[j] - dense_creation(j, q)).norm() < 1e-15);
                for k in 0..q {
                    let ann = cre[k].adjoint();
                    let ac = &cre[j] * &ann + &ann * &cre[j];
                    let expect =
                        if j == k { numkit::identity(1 << q) } else { ComplexMatrix::zeros(1 << q, 1 << q) };
                    assert!((ac - expect).norm() < 1e-14);
                    let cc = &cre[j] * &cre[k] + &cre[k] * &cre[j];
                    assert!(cc.norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn hamiltonian_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let ints = FermionIntegrals::random(n, 2, &mut rng).unwrap();
        let h = pauli_to_matrix(&build_hamiltonian(&ints).unwrap()).unwrap();
        let cre: Vec<ComplexMatrix> = (0..n).map(|j| dense_creation(j, n)).collect();
        let ann: Vec<ComplexMatrix> = cre.iter().map(|m| m.adjoint()).collect();
        let mut oracle = numkit::identity(1 << n) * c(ints.enuc(), 0.0);
        for p in 0..n {
            for q in 0..n {
                oracle += &cre[p] * &ann[q] * c(ints.h1(p, q), 0.0);
                for r in 0..n {
                    for s in 0..n {
                        oracle += &cre[p] * &cre[q] * &ann[s] * &ann[r] * c(0.5 * ints.h2(p, q, r, s), 0.0);
                    }
                }
            }
        }
        assert!((h - oracle).norm() < 1e-12);
    }

    #[test]
    fn term_count_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let small = build_hamiltonian(&FermionIntegrals::random(4, 2, &mut rng).unwrap()).unwrap().len();
        let large = build_hamiltonian(&FermionIntegrals::random(6, 2, &mut rng).unwrap()).unwrap().len();
        let ratio = large as f64 / small as f64;
        assert!((3.0..=7.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn number_operator_counts() {
        let n = total_number(3).unwrap();
        assert!((n.expectation(&basis(3, "101")).unwrap().re - 2.0).abs() < 1e-15);
    }
}
