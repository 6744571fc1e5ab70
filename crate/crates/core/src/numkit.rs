//! Dense complex linear algebra: Hermitian and unitary eigendecompositions,
//! matrix exponential, logarithm and square root on the principal branch.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealMatrix = DMatrix<f64>;

/// Largest dimension accepted by the dense kernels.
pub const MAX_DIM: usize = 1 << 12;

/// Hermiticity tolerance applied when an operation receives a matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unitarity tolerance for matrices that must be exactly unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Looser unitarity tolerance for logarithm and square root inputs.
pub const UNITARY_INPUT_TOL: f64 = 1e-8;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const CLUSTER_GAP: f64 = 1e-9;

const PAIR_MIX_1: f64 = 0.577_215_664_901_532_9;
const PAIR_MIX_2: f64 = -1.324_717_957_244_746;
const PAIR_CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },
    #[error("matrix is not unitary (||M^dag M - I||_F = {deviation:.3e})")]
    NonUnitary { deviation: f64 },
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {0} exceeds the dense cap")]
    TooLarge(usize),
    #[error("simultaneous diagonalization failed (off-diagonal residual {residual:.3e})")]
    DegenerateClusterFailure { residual: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Real ascending eigenvalues with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Principal square root of a unitary.
#[derive(Debug, Clone)]
pub struct UnitarySqrt {
    pub root: ComplexMatrix,
    /// Set when some eigenphase sat within 1e-9 of pi, where the branch choice is arbitrary.
    pub branch_ambiguous: bool,
}

fn check_square<T>(m: &DMatrix<T>) -> Result<usize, NumError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(NumError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() > MAX_DIM {
        return Err(NumError::TooLarge(m.nrows()));
    }
    Ok(m.nrows())
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm of M^dag M - I.
pub fn unitarity_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - identity(n)).norm()
}

pub fn check_hermitian(m: &ComplexMatrix, tol: f64) -> Result<(), NumError> {
    check_square(m)?;
    let deviation = hermitian_deviation(m);
    if deviation > tol {
        return Err(NumError::NonHermitian { deviation });
    }
    Ok(())
}

pub fn check_unitary(m: &ComplexMatrix, tol: f64) -> Result<(), NumError> {
    check_square(m)?;
    let deviation = unitarity_deviation(m);
    if deviation.is_nan() || deviation > tol {
        return Err(NumError::NonUnitary { deviation });
    }
    Ok(())
}

pub fn frob_dist(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, NumError> {
    if a.shape() != b.shape() {
        return Err(NumError::DimMismatch { left: a.nrows(), right: b.nrows() });
    }
    Ok((a - b).norm())
}

/// Kronecker product with the first factor on the more significant index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| c(x, 0.0))
}

fn orthonormalize_columns<T: ComplexField<RealField = f64>>(v: &mut DMatrix<T>, cols: &[usize]) {
    for (k, &j) in cols.iter().enumerate() {
        for _ in 0..2 {
            for &i in &cols[..k] {
                let proj = v.column(i).dotc(&v.column(j));
                let ci = v.column(i).clone_owned();
                v.column_mut(j).axpy(-proj, &ci, T::one());
            }
        }
        let norm = v.column(j).norm();
        if norm > 0.0 {
            v.column_mut(j).unscale_mut(norm);
        }
    }
}

/// Scalars with a dense self-adjoint eigensolver and SVD.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    /// Eigenvalues ascending with matching eigenvector columns.
    fn self_adjoint_eigen(m: &DMatrix<Self>) -> Option<(Vec<f64>, DMatrix<Self>)>;
    /// Thin SVD with singular values descending.
    fn thin_svd(m: &DMatrix<Self>) -> Option<(DMatrix<Self>, Vec<f64>, DMatrix<Self>)>;
}

macro_rules! faer_scalar {
    ($t:ty, $re:expr) => {
        impl Scalar for $t {
            fn self_adjoint_eigen(m: &DMatrix<Self>) -> Option<(Vec<f64>, DMatrix<Self>)> {
                let fm = faer::Mat::<$t>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
                let eig = fm.self_adjoint_eigen(faer::Side::Lower).ok()?;
                let (u, s) = (eig.U(), eig.S());
                let values = (0..m.nrows()).map(|i| $re(s.column_vector()[i])).collect();
                Some((values, DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| u[(i, j)])))
            }

            fn thin_svd(m: &DMatrix<Self>) -> Option<(DMatrix<Self>, Vec<f64>, DMatrix<Self>)> {
                let fm = faer::Mat::<$t>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
                let dec = fm.thin_svd().ok()?;
                let (u, s, v) = (dec.U(), dec.S(), dec.V());
                let k = m.nrows().min(m.ncols());
                let values = (0..k).map(|i| $re(s.column_vector()[i])).collect();
                let um = DMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]);
                let vh = DMatrix::from_fn(k, m.ncols(), |i, j| v[(j, i)].conjugate());
                Some((um, values, vh))
            }
        }
    };
}

faer_scalar!(f64, |x: f64| x);
faer_scalar!(Complex64, |x: Complex64| x.re);

fn sym_eig<T: Scalar>(m: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>), NumError> {
    let n = m.nrows();
    let (values, mut vectors) = T::self_adjoint_eigen(m).ok_or(NumError::NoConvergence)?;
    let scale = values.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < CLUSTER_GAP * scale {
            end += 1;
        }
        let cols: Vec<usize> = (start..end).collect();
        orthonormalize_columns(&mut vectors, &cols);
        start = end;
    }
    Ok((values, vectors))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(h: &ComplexMatrix) -> Result<Spectrum, NumError> {
    check_hermitian(h, HERMITIAN_TOL)?;
    let sym = (h + h.adjoint()).scale(0.5);
    let (eigenvalues, eigenvectors) = sym_eig(&sym)?;
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Eigendecomposition of a real symmetric matrix with real orthogonal eigenvectors.
pub fn real_sym_eig(m: &RealMatrix) -> Result<(Vec<f64>, RealMatrix), NumError> {
    check_square(m)?;
    let sym = (m + m.transpose()).scale(0.5);
    sym_eig(&sym)
}

fn max_offdiag<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].clone().modulus());
            }
        }
    }
    worst
}

/// Simultaneously diagonalizes two commuting Hermitian (or real symmetric) matrices.
///
/// Returns a unitary V with V^dag a V and V^dag b V both diagonal. When `T` is
/// real the result is real orthogonal.
pub fn commuting_pair_eig<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>, NumError> {
    let n = check_square(a)?;
    if b.shape() != a.shape() {
        return Err(NumError::DimMismatch { left: n, right: b.nrows() });
    }
    let mix = |x: &DMatrix<T>, y: &DMatrix<T>, t: f64| -> DMatrix<T> {
        let m = x + y.map(|v| v.scale(t));
        (&m + m.adjoint()).map(|v| v.scale(0.5))
    };
    let (values, mut v) = sym_eig(&mix(a, b, PAIR_MIX_1))?;
    let scale = (a.norm() + b.norm()).max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < PAIR_CLUSTER_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            let vc = v.columns(start, end - start).clone_owned();
            let ac = vc.adjoint() * a * &vc;
            let bc = vc.adjoint() * b * &vc;
            let (_, w) = sym_eig(&mix(&ac, &bc, PAIR_MIX_2))?;
            let refined = vc * w;
            v.columns_mut(start, end - start).copy_from(&refined);
            let cols: Vec<usize> = (start..end).collect();
            orthonormalize_columns(&mut v, &cols);
        }
        start = end;
    }
    let residual = max_offdiag(&(v.adjoint() * a * &v)).max(max_offdiag(&(v.adjoint() * b * &v)));
    if residual > 1e-8 * scale {
        return Err(NumError::DegenerateClusterFailure { residual });
    }
    Ok(v)
}

/// Thin SVD m = U diag(s) Vh with singular values descending.
pub fn svd(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix), NumError> {
    Complex64::thin_svd(m).ok_or(NumError::NoConvergence)
}

/// Unitary polar factor U Vh of a square matrix.
pub fn polar(m: &ComplexMatrix) -> Result<ComplexMatrix, NumError> {
    let (u, _, vt) = svd(m)?;
    Ok(u * vt)
}

/// Principal argument in (-pi, pi], snapping values within `CLUSTER_GAP` of -pi to +pi.
pub fn principal_phase(z: Complex64) -> f64 {
    let theta = z.arg();
    if theta <= -PI + CLUSTER_GAP {
        theta + 2.0 * PI
    } else {
        theta
    }
}

/// Eigenphases (principal branch, ascending) and eigenvectors of a unitary.
pub fn unitary_eig(u: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), NumError> {
    check_unitary(u, UNITARY_INPUT_TOL)?;
    let ud = u.adjoint();
    let h1 = (u + &ud).scale(0.5);
    let h2 = (u - &ud) * c(0.0, -0.5);
    let v = commuting_pair_eig(&h1, &h2)?;
    let d = v.adjoint() * u * &v;
    let n = u.nrows();
    let phases: Vec<f64> = (0..n).map(|i| principal_phase(d[(i, i)])).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| phases[x].total_cmp(&phases[y]));
    let mut sorted = ComplexMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        sorted.set_column(k, &v.column(i));
    }
    Ok((order.iter().map(|&i| phases[i]).collect(), sorted))
}

/// V diag(f(lambda)) V^dag.
pub fn spectral_apply(v: &ComplexMatrix, values: &[Complex64]) -> ComplexMatrix {
    let mut scaled = v.clone();
    for (j, &val) in values.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= val);
    }
    scaled * v.adjoint()
}

/// exp(-i H t).
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, NumError> {
    let spec = herm_eig(h)?;
    let phases: Vec<Complex64> =
        spec.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * t)).collect();
    Ok(spectral_apply(&spec.eigenvectors, &phases))
}

/// Hermitian generator H with U = exp(-i H), eigenphases on (-pi, pi].
pub fn logm_unitary(u: &ComplexMatrix) -> Result<ComplexMatrix, NumError> {
    let (phases, v) = unitary_eig(u)?;
    let vals: Vec<Complex64> = phases.iter().map(|&t| c(-t, 0.0)).collect();
    let h = spectral_apply(&v, &vals);
    Ok((&h + h.adjoint()).scale(0.5))
}

/// Principal square root of a unitary.
pub fn sqrtm_unitary(u: &ComplexMatrix) -> Result<UnitarySqrt, NumError> {
    let (phases, v) = unitary_eig(u)?;
    let branch_ambiguous = phases.iter().any(|t| t.abs() > PI - CLUSTER_GAP);
    let vals: Vec<Complex64> = phases.iter().map(|&t| Complex64::from_polar(1.0, t / 2.0)).collect();
    Ok(UnitarySqrt { root: spectral_apply(&v, &vals), branch_ambiguous })
}

/// Serializes as "dim" followed by dim^2 lines "re im", row-major.
pub fn write_matrix(m: &ComplexMatrix) -> String {
    let n = m.nrows();
    let mut out = String::new();
    let _ = writeln!(out, "{n}");
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            let _ = writeln!(out, "{:.16e} {:.16e}", z.re, z.im);
        }
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix, NumError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first_line, header) =
        lines.next().ok_or(NumError::Parse { line: 1, message: "empty input".into() })?;
    let dim: usize = header.parse().map_err(|_| NumError::Parse {
        line: first_line,
        message: format!("expected dimension, found {header:?}"),
    })?;
    if dim == 0 {
        return Err(NumError::Parse { line: first_line, message: "dimension must be positive".into() });
    }
    if dim > MAX_DIM {
        return Err(NumError::TooLarge(dim));
    }
    let mut values = Vec::with_capacity(dim * dim);
    let mut last_line = first_line;
    for (line, body) in lines {
        last_line = line;
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(NumError::Parse { line, message: format!("expected \"re im\", found {body:?}") });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| NumError::Parse { line, message: format!("invalid number {s:?}") })
        };
        values.push(c(parse(parts[0])?, parse(parts[1])?));
    }
    if values.len() != dim * dim {
        return Err(NumError::Parse {
            line: last_line,
            message: format!("expected {} entries, found {}", dim * dim, values.len()),
        });
    }
    Ok(ComplexMatrix::from_row_slice(dim, dim, &values))
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Complex Gaussian matrix with unit-variance entries.
pub fn random_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let s = 0.5f64.sqrt();
    ComplexMatrix::from_fn(n, n, |_, _| c(s * gaussian(rng), s * gaussian(rng)))
}

/// Haar-random unitary via QR with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let qr = random_ginibre(n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_ginibre(n, rng);
    (&g + g.adjoint()).scale(0.5)
}

pub fn random_real_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RealMatrix {
    let g = RealMatrix::from_fn(n, n, |_, _| gaussian(rng));
    (&g + g.transpose()).scale(0.5)
}

pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RealMatrix {
    let g = RealMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
