//! Configuration interaction over Slater determinants and compact-mapping resource counts.

use std::fmt;

use thiserror::Error;

use crate::jw::{direct_gate_count, FermionIntegrals, JwError};
use crate::numkit::{self, ComplexMatrix, NumError, RealMatrix};

/// Largest spin-orbital count accepted by `enumerate_configs`.
pub const MAX_MODES: usize = 24;
/// Largest determinant space `enumerate_configs` will build.
pub const MAX_CONFIGS: u128 = 1 << 20;
/// Largest 2K for `vandermonde_check`.
pub const MAX_VANDERMONDE_MODES: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CiError {
    #[error("{count} configurations exceeds the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("configurations hold {left} and {right} electrons")]
    UnequalParticleNumber { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Jw(#[from] JwError),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

/// Exact binomial coefficient; zero when k > n.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn ceil_log2(n: u128) -> u32 {
    if n <= 1 {
        0
    } else {
        128 - (n - 1).leading_zeros()
    }
}

/// Occupied spin-orbitals of a determinant, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    pub fn new(occupied: Vec<usize>, modes: usize) -> Result<Self, CiError> {
        if occupied.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CiError::InvalidConfiguration(format!("{occupied:?} is not strictly increasing")));
        }
        if let Some(&last) = occupied.last() {
            if last >= modes {
                return Err(CiError::InvalidConfiguration(format!("orbital {last} outside {modes} modes")));
            }
        }
        Ok(Configuration(occupied))
    }

    pub fn occupied(&self) -> &[usize] {
        &self.0
    }

    pub fn electrons(&self) -> usize {
        self.0.len()
    }

    /// Index of the matching occupation-number basis state (mode 0 is the most significant bit).
    pub fn basis_index(&self, modes: usize) -> usize {
        self.0.iter().fold(0, |acc, &j| acc | 1 << (modes - 1 - j))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.0.iter().map(|j| j.to_string()).collect();
        write!(f, "({})", inner.join(","))
    }
}

/// All N-electron determinants over 2K spin-orbitals in lexicographic order.
pub fn enumerate_configs(two_k: usize, n: usize) -> Result<Vec<Configuration>, CiError> {
    if two_k > MAX_MODES {
        return Err(CiError::InvalidParameter(format!("{two_k} spin-orbitals exceeds {MAX_MODES}")));
    }
    if n > two_k {
        return Err(CiError::InvalidParameter(format!("{n} electrons in {two_k} spin-orbitals")));
    }
    let count = binomial(two_k, n);
    if count > MAX_CONFIGS {
        return Err(CiError::CapExceeded { count, cap: MAX_CONFIGS });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(Configuration(cur.clone()));
        let Some(i) = (0..n).rev().find(|&i| cur[i] < two_k - n + i) else { break };
        cur[i] += 1;
        for j in i + 1..n {
            cur[j] = cur[j - 1] + 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Number of orbitals occupied in A but not in B.
    pub degree: usize,
    pub diff_a: Vec<usize>,
    pub diff_b: Vec<usize>,
    /// Parity of moving the differing orbitals to the front of both determinants.
    pub sign: f64,
}

/// Transpositions needed to move the differing orbitals to the front, in order.
fn front_parity(occ: &[usize], diff: &[usize]) -> i64 {
    diff.iter().enumerate().map(|(k, d)| occ.iter().position(|o| o == d).unwrap() as i64 - k as i64).sum()
}

pub fn align_and_sign(a: &Configuration, b: &Configuration) -> Result<Alignment, CiError> {
    if a.electrons() != b.electrons() {
        return Err(CiError::UnequalParticleNumber { left: a.electrons(), right: b.electrons() });
    }
    let diff_a: Vec<usize> = a.0.iter().copied().filter(|x| b.0.binary_search(x).is_err()).collect();
    let diff_b: Vec<usize> = b.0.iter().copied().filter(|x| a.0.binary_search(x).is_err()).collect();
    let moves = front_parity(&a.0, &diff_a) + front_parity(&b.0, &diff_b);
    let sign = if moves % 2 == 0 { 1.0 } else { -1.0 };
    Ok(Alignment { degree: diff_a.len(), diff_a, diff_b, sign })
}

/// <pq||rs> = <pq|rs> - <pq|sr>.
fn antisym(ints: &FermionIntegrals, p: usize, q: usize, r: usize, s: usize) -> f64 {
    ints.h2(p, q, r, s) - ints.h2(p, q, s, r)
}

/// <A|H|B> by Slater's rules, excluding the constant energy.
pub fn slater_element(a: &Configuration, b: &Configuration, ints: &FermionIntegrals) -> Result<f64, CiError> {
    let al = align_and_sign(a, b)?;
    for occ in [a, b] {
        if occ.0.last().is_some_and(|&j| j >= ints.norb()) {
            return Err(CiError::InvalidConfiguration(format!("{occ} outside {} modes", ints.norb())));
        }
    }
    let value = match al.degree {
        0 => {
            let occ = &a.0;
            let one: f64 = occ.iter().map(|&p| ints.h1(p, p)).sum();
            let mut two = 0.0;
            for &p in occ {
                for &q in occ {
                    two += antisym(ints, p, q, p, q);
                }
            }
            one + 0.5 * two
        }
        1 => {
            let (m, p) = (al.diff_a[0], al.diff_b[0]);
            let common = a.0.iter().filter(|&&n| n != m);
            al.sign * (ints.h1(m, p) + common.map(|&n| antisym(ints, m, n, p, n)).sum::<f64>())
        }
        2 => {
            let (m, n) = (al.diff_a[0], al.diff_a[1]);
            let (p, q) = (al.diff_b[0], al.diff_b[1]);
            al.sign * antisym(ints, m, n, p, q)
        }
        _ => 0.0,
    };
    Ok(value)
}

/// CI matrix in the determinant basis, with rows labelled by their configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct CIMatrix {
    configs: Vec<Configuration>,
    values: RealMatrix,
}

impl CIMatrix {
    pub fn new(configs: Vec<Configuration>, values: RealMatrix) -> Result<Self, CiError> {
        if values.shape() != (configs.len(), configs.len()) {
            return Err(CiError::DimMismatch { expected: configs.len(), found: values.nrows() });
        }
        if (&values - values.transpose()).amax() > 1e-12 {
            return Err(CiError::InvalidParameter("CI matrix is not symmetric".into()));
        }
        Ok(CIMatrix { configs, values })
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn values(&self) -> &RealMatrix {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>, CiError> {
        Ok(numkit::real_sym_eig(&self.values)?.0)
    }

    /// Matrix text followed by a comment line listing the configurations.
    pub fn to_text(&self) -> String {
        let mut out = numkit::write_matrix(&numkit::to_complex(&self.values));
        let labels: Vec<String> = self.configs.iter().map(|c| c.to_string()).collect();
        out.push_str("# configs ");
        out.push_str(&labels.join(" "));
        out.push('\n');
        out
    }

    pub fn parse(text: &str, modes: usize) -> Result<Self, CiError> {
        let m = numkit::parse_matrix(text)?;
        let (line, sidecar) = text
            .lines()
            .enumerate()
            .find_map(|(i, l)| l.trim().strip_prefix("# configs").map(|rest| (i + 1, rest.trim())))
            .ok_or(CiError::Parse { line: 0, message: "missing configuration line".into() })?;
        let perr = |message: String| CiError::Parse { line, message };
        let mut configs = Vec::new();
        for tok in sidecar.split_whitespace() {
            let inner = tok
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| perr(format!("bad configuration {tok:?}")))?;
            let occ: Vec<usize> = if inner.is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|x| x.parse().map_err(|_| perr(format!("bad orbital {x:?}"))))
                    .collect::<Result<_, _>>()?
            };
            configs.push(Configuration::new(occ, modes)?);
        }
        if m.iter().any(|z| z.im != 0.0) {
            return Err(perr("CI matrix entries must be real".into()));
        }
        Self::new(configs, m.map(|z| z.re))
    }
}

pub fn build_ci_matrix(ints: &FermionIntegrals, n: usize) -> Result<CIMatrix, CiError> {
    let configs = enumerate_configs(ints.norb(), n)?;
    let dim = configs.len();
    let mut values = RealMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let v = slater_element(&configs[i], &configs[j], ints)?;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
        values[(i, i)] += ints.enuc();
    }
    CIMatrix::new(configs, values)
}

/// Restriction of a Fock-space operator to the given determinants.
pub fn sector_project(fock: &ComplexMatrix, configs: &[Configuration]) -> Result<ComplexMatrix, CiError> {
    let dim = fock.nrows();
    if !dim.is_power_of_two() || fock.ncols() != dim {
        return Err(CiError::DimMismatch { expected: dim.next_power_of_two(), found: dim });
    }
    let modes = dim.trailing_zeros() as usize;
    if let Some(bad) = configs.iter().find(|c| c.0.last().is_some_and(|&j| j >= modes)) {
        return Err(CiError::InvalidConfiguration(format!("{bad} outside {modes} modes")));
    }
    let idx: Vec<usize> = configs.iter().map(|c| c.basis_index(modes)).collect();
    Ok(ComplexMatrix::from_fn(configs.len(), configs.len(), |i, j| fock[(idx[i], idx[j])]))
}

/// Qubits needed to index every N-electron determinant over 2k spin-orbitals.
pub fn compact_qubits(k: usize, n: usize) -> Result<u32, CiError> {
    if n > 2 * k {
        return Err(CiError::InvalidParameter(format!("{n} electrons in {} spin-orbitals", 2 * k)));
    }
    Ok(ceil_log2(binomial(2 * k, n)))
}

/// ceil(log2 n); a single configuration needs no qubits.
pub fn qubits_for_configs(n: u64) -> Result<u32, CiError> {
    if n == 0 {
        return Err(CiError::InvalidParameter("need at least one configuration".into()));
    }
    Ok(ceil_log2(n as u128))
}

/// Checks C(2K, N) = sum_n C(N, n) C(2K - N, n) in exact arithmetic.
pub fn vandermonde_check(k: usize, n: usize) -> Result<bool, CiError> {
    let two_k = 2 * k;
    if two_k > MAX_VANDERMONDE_MODES || n > two_k {
        return Err(CiError::InvalidParameter(format!("need N <= 2K <= {MAX_VANDERMONDE_MODES}")));
    }
    let sum: u128 = (0..=n).map(|j| binomial(n, j) * binomial(two_k - n, j)).sum();
    Ok(sum == binomial(two_k, n))
}

/// p C(2k, N)^2.
pub fn compact_gate_count(k: usize, n: usize, p: u32) -> Result<f64, CiError> {
    if k == 0 || p == 0 {
        return Err(CiError::InvalidParameter("k and p must be positive".into()));
    }
    if n > 2 * k {
        return Err(CiError::InvalidParameter(format!("{n} electrons in {} spin-orbitals", 2 * k)));
    }
    let c = binomial(2 * k, n) as f64;
    Ok(p as f64 * c * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverParams {
    pub electrons: usize,
    pub prefactor: f64,
    pub bits: u32,
    pub q_min: usize,
    pub q_max: usize,
}

impl Default for CrossoverParams {
    fn default() -> Self {
        CrossoverParams { electrons: 5, prefactor: 1.0, bits: 5, q_min: 6, q_max: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverRow {
    pub q: usize,
    pub g_compact: f64,
    pub g_direct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverTable {
    pub rows: Vec<CrossoverRow>,
    /// First q where the direct mapping is cheaper.
    pub crossover: Option<usize>,
}

impl CrossoverTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,g_compact,g_direct\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.q, r.g_compact, r.g_direct));
        }
        out
    }
}

/// Compact and direct gate counts at every even q in range.
pub fn crossover_scan(params: &CrossoverParams) -> Result<CrossoverTable, CiError> {
    let CrossoverParams { electrons, prefactor, bits, q_min, q_max } = *params;
    if electrons == 0 || bits == 0 || !(prefactor > 0.0 && prefactor.is_finite()) {
        return Err(CiError::InvalidParameter("electrons, bits and prefactor must be positive".into()));
    }
    if q_min < electrons || q_min > q_max {
        return Err(CiError::InvalidParameter(format!(
            "qubit range {q_min}..={q_max} must be ordered and start at or above {electrons}"
        )));
    }
    let mut rows = Vec::new();
    for q in (q_min..=q_max).filter(|q| q % 2 == 0) {
        let k = q / 2;
        rows.push(CrossoverRow {
            q,
            g_compact: compact_gate_count(k, electrons, bits)?,
            g_direct: direct_gate_count(k, bits, prefactor)?,
        });
    }
    let crossover = rows.iter().find(|r| r.g_direct < r.g_compact).map(|r| r.q);
    Ok(CrossoverTable { rows, crossover })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jw::{build_hamiltonian, pauli_to_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(v: &[usize]) -> Configuration {
        Configuration(v.to_vec())
    }

    #[test]
    fn enumeration() {
        let got: Vec<Vec<usize>> = enumerate_configs(4, 2).unwrap().into_iter().map(|c| c.0).collect();
        assert_eq!(got, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(enumerate_configs(6, 0).unwrap(), vec![cfg(&[])]);
        assert_eq!(enumerate_configs(12, 4).unwrap().len(), 495);
        assert_eq!(enumerate_configs(3, 3).unwrap(), vec![cfg(&[0, 1, 2])]);
        assert!(matches!(enumerate_configs(24, 12), Err(CiError::CapExceeded { .. })));
        assert!(Configuration::new(vec![1, 1], 4).is_err());
        assert!(Configuration::new(vec![0, 4], 4).is_err());
    }

    #[test]
    fn alignment_examples() {
        let al = align_and_sign(&cfg(&[0, 1]), &cfg(&[0, 1])).unwrap();
        assert_eq!((al.degree, al.sign), (0, 1.0));
        let al = align_and_sign(&cfg(&[0, 1]), &cfg(&[0, 2])).unwrap();
        assert_eq!((al.degree, al.diff_a.clone(), al.diff_b.clone(), al.sign), (1, vec![1], vec![2], 1.0));
        let al = align_and_sign(&cfg(&[0, 1]), &cfg(&[1, 2])).unwrap();
        assert_eq!(al.sign, -1.0);
        assert!(align_and_sign(&cfg(&[0]), &cfg(&[0, 1])).is_err());
        for (a, b) in [(cfg(&[0, 2, 3]), cfg(&[1, 3, 4])), (cfg(&[0, 1, 5]), cfg(&[2, 3, 5]))] {
            assert_eq!(align_and_sign(&a, &b).unwrap().sign, align_and_sign(&b, &a).unwrap().sign);
        }
    }

    #[test]
    fn rules_on_simple_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ints = FermionIntegrals::random(6, 3, &mut rng).unwrap();
        assert_eq!(slater_element(&cfg(&[0, 1, 2]), &cfg(&[3, 4, 5]), &ints).unwrap(), 0.0);
        let h1 = RealMatrix::from_fn(4, 4, |i, j| if i == j { i as f64 + 0.5 } else { 0.1 });
        let one_body = FermionIntegrals::new(4, 2, h1, vec![0.0; 256], 0.0).unwrap();
        assert_eq!(slater_element(&cfg(&[1, 3]), &cfg(&[1, 3]), &one_body).unwrap(), 1.5 + 3.5);
    }

    #[test]
    fn matches_fock_space_sector() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (modes, n) in [(4, 2), (6, 3), (6, 1)] {
            let ints = FermionIntegrals::random(modes, n, &mut rng).unwrap();
            let fock = pauli_to_matrix(&build_hamiltonian(&ints).unwrap()).unwrap();
            let ci = build_ci_matrix(&ints, n).unwrap();
            let proj = sector_project(&fock, ci.configs()).unwrap();
            let diff = (numkit::to_complex(ci.values()) - proj).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(diff < 1e-10, "modes {modes} n {n} diff {diff}");
        }
    }

    #[test]
    fn edge_sectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ints = FermionIntegrals::random(4, 2, &mut rng).unwrap();
        let empty = build_ci_matrix(&ints, 0).unwrap();
        assert_eq!(empty.values()[(0, 0)], ints.enuc());
        let full = build_ci_matrix(&ints, 4).unwrap();
        let fock = pauli_to_matrix(&build_hamiltonian(&ints).unwrap()).unwrap();
        assert!((full.values()[(0, 0)] - fock[(15, 15)].re).abs() < 1e-12);
    }

    #[test]
    fn projection_basics() {
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(8, |i, _| numkit::c(i as f64, 0.0)));
        let all: Vec<Configuration> = (0..=3).flat_map(|n| enumerate_configs(3, n).unwrap()).collect();
        let p = sector_project(&d, &all).unwrap();
        assert!((p.diagonal().map(|z| z.re).sum() - 28.0).abs() < 1e-15);
        assert!(sector_project(&ComplexMatrix::zeros(6, 6), &all).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ci = build_ci_matrix(&FermionIntegrals::random(4, 2, &mut rng).unwrap(), 2).unwrap();
        assert_eq!(CIMatrix::parse(&ci.to_text(), 4).unwrap(), ci);
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(compact_qubits(5, 5).unwrap(), 8);
        assert_eq!(compact_qubits(6, 4).unwrap(), 9);
        assert_eq!(compact_qubits(3, 0).unwrap(), 0);
        for (n, q) in [(1, 0), (4, 2), (6, 3), (10, 4), (20, 5), (23, 5), (37, 6), (96, 7), (1492, 11)] {
            assert_eq!(qubits_for_configs(n).unwrap(), q, "n = {n}");
        }
        assert!(qubits_for_configs(0).is_err());
    }

    #[test]
    fn vandermonde() {
        assert_eq!(binomial(4, 2), 6);
        assert!(vandermonde_check(2, 2).unwrap());
        assert!(vandermonde_check(6, 4).unwrap());
        assert!(vandermonde_check(3, 0).unwrap());
        assert!(vandermonde_check(16, 2).is_err());
    }

    #[test]
    fn gate_counts_and_crossover() {
        assert_eq!(compact_gate_count(1, 1, 1).unwrap(), 4.0);
        assert_eq!(compact_gate_count(5, 5, 10).unwrap(), 635040.0);
        assert_eq!(compact_gate_count(5, 5, 20).unwrap(), 2.0 * 635040.0);
        let table = crossover_scan(&CrossoverParams::default()).unwrap();
        assert_eq!(table.crossover, Some(14));
        let q10 = table.rows.iter().find(|r| r.q == 10).unwrap();
        assert_eq!((q10.g_compact, q10.g_direct), (317520.0, 3.2e6));
        assert!(table.rows.iter().all(|r| r.q % 2 == 0));
        let csv = table.to_csv();
        assert!(csv.starts_with("q,g_compact,g_direct\n6,"));
        assert!(csv.contains("\n10,317520,3200000\n"));
        let heavy = crossover_scan(&CrossoverParams { prefactor: 100.0, ..Default::default() }).unwrap();
        assert!(heavy.crossover.is_none_or(|q| q >= 14));
        assert!(crossover_scan(&CrossoverParams { q_min: 4, ..Default::default() }).is_err());
    }
}
