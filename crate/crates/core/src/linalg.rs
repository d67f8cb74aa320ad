//! Dense Hermitian linear algebra and the basic state types.
//!
//! Every operator here is a small dense `D×D` complex matrix. Hermitian
//! operators also have a real coordinate representation of length `D²`
//! (diagonal entries, then `√2·Re` and `√2·Im` of each upper off-diagonal
//! entry) in which the trace inner product `tr{AB}` becomes the Euclidean dot
//! product. The operator-space algorithms (Gram-Schmidt, decompositions,
//! Gram matrices) work in those coordinates.

use std::fmt;
use std::ops::{Add, Deref, Mul, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Construction tolerance on `|A - A†|`, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Global positivity tolerance for density matrices.
pub const PSD_TOL: f64 = 1e-9;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-9;
/// Eigenvalues below this are treated as exact zeros in `ν log ν`.
pub const ZERO_EIGENVALUE: f64 = 1e-14;
/// Smallest eigenvalue for which a matrix logarithm is considered defined.
pub const LOG_RANK_TOL: f64 = 1e-12;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        Self::with_tolerance(mat, HERMITIAN_TOL)
    }

    /// Accepts `mat` if its anti-Hermitian part is below `tol` relative to the
    /// largest entry, and stores the Hermitian part.
    pub fn with_tolerance(mat: CMatrix, tol: f64) -> Result<Self> {
        if mat.nrows() == 0 || mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = mat.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let deviation = hermitian_deviation(&mat);
        if deviation > tol * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::from_matrix_unchecked(mat))
    }

    /// Symmetrizes `mat` without checking how far from Hermitian it was.
    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        let herm = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
        Self { mat: herm }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut mat = CMatrix::zeros(n, n);
        for (j, &v) in values.iter().enumerate() {
            mat[(j, j)] = Complex64::new(v, 0.0);
        }
        Self { mat }
    }

    /// `|v⟩⟨v|` without normalization.
    pub fn outer(v: &CVector) -> Self {
        Self::from_matrix_unchecked(v * v.adjoint())
    }

    /// Builds an operator from real `(re, im)` row-major arrays.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = re.len();
        if im.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: im.len(),
            });
        }
        let mut mat = CMatrix::zeros(n, n);
        for j in 0..n {
            if re[j].len() != n || im[j].len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: re[j].len().min(im[j].len()),
                });
            }
            for k in 0..n {
                mat[(j, k)] = Complex64::new(re[j][k], im[j][k]);
            }
        }
        Self::with_tolerance(mat, tol)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|j| self.mat[(j, j)].re).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mat: &self.mat * Complex64::new(factor, 0.0),
        }
    }

    /// `self + factor * other`, in place.
    pub fn add_scaled(&mut self, factor: f64, other: &HermitianOperator) {
        let f = Complex64::new(factor, 0.0);
        self.mat.zip_apply(&other.mat, |a, b| *a += f * b);
    }

    /// Hilbert-Schmidt norm `sqrt(tr{A²})`.
    pub fn hs_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real coordinates in which the trace inner product is the dot product.
    pub fn real_coords(&self) -> DVector<f64> {
        let d = self.dim();
        let mut v = DVector::zeros(d * d);
        for j in 0..d {
            v[j] = self.mat[(j, j)].re;
        }
        let mut idx = d;
        for j in 0..d {
            for k in (j + 1)..d {
                let z = self.mat[(j, k)];
                v[idx] = SQRT2 * z.re;
                v[idx + 1] = SQRT2 * z.im;
                idx += 2;
            }
        }
        v
    }

    /// Inverse of [`HermitianOperator::real_coords`].
    pub fn from_real_coords(dim: usize, coords: &DVector<f64>) -> Result<Self> {
        if coords.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: coords.len(),
            });
        }
        let mut mat = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            mat[(j, j)] = Complex64::new(coords[j], 0.0);
        }
        let mut idx = dim;
        for j in 0..dim {
            for k in (j + 1)..dim {
                let z = Complex64::new(coords[idx] / SQRT2, coords[idx + 1] / SQRT2);
                mat[(j, k)] = z;
                mat[(k, j)] = z.conj();
                idx += 2;
            }
        }
        Ok(Self { mat })
    }

    /// `V A V†` for a (possibly rectangular) `V`.
    pub fn congruence(&self, v: &CMatrix) -> Self {
        Self::from_matrix_unchecked(v * &self.mat * v.adjoint())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        if self.mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(self.mat.symmetric_eigenvalues().min())
    }
}

impl fmt::Display for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mat)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scaled(rhs)
    }
}

fn hermitian_deviation(mat: &CMatrix) -> f64 {
    let n = mat.nrows();
    let mut dev = 0.0_f64;
    for j in 0..n {
        for k in j..n {
            dev = dev.max((mat[(j, k)] - mat[(k, j)].conj()).norm());
        }
    }
    dev
}

/// A unit-trace positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let trace = op.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { trace });
        }
        let min = op.min_eigenvalue()?;
        if min < -PSD_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self { op })
    }

    /// Divides a positive operator by its trace.
    pub fn normalized(op: HermitianOperator) -> Result<Self> {
        let trace = op.trace();
        if !(trace > 0.0) {
            return Err(Error::InvalidTrace { trace });
        }
        Self::new(op.scaled(1.0 / trace))
    }

    pub(crate) fn from_op_unchecked(op: HermitianOperator) -> Self {
        Self { op }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: HermitianOperator::identity(dim).scaled(1.0 / dim as f64),
        }
    }

    /// Projector onto the normalized vector `psi`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate("zero state vector".into()));
        }
        let unit = psi.unscale(norm);
        Ok(Self {
            op: HermitianOperator::outer(&unit),
        })
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self {
            op: HermitianOperator::diagonal(&diag),
        }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn purity(&self) -> f64 {
        self.op.hs_norm().powi(2)
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

/// Tensor-product factorization `D = d_1 · d_2 · … · d_m` of a Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsystemDims {
    factors: Vec<usize>,
}

impl SubsystemDims {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::InvalidDims(format!("{factors:?}")));
        }
        Ok(Self { factors })
    }

    pub fn two_qubits() -> Self {
        Self {
            factors: vec![2, 2],
        }
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn total(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn last(&self) -> usize {
        self.factors.len() - 1
    }

    fn check(&self, dim: usize, which: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::InvalidDims(format!(
                "factors {:?} do not multiply to {dim}",
                self.factors
            )));
        }
        if which >= self.factors.len() {
            return Err(Error::InvalidDims(format!(
                "subsystem {which} out of range for {:?}",
                self.factors
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for SubsystemDims {
    type Error = Error;

    fn try_from(factors: Vec<usize>) -> Result<Self> {
        Self::new(factors)
    }
}

impl From<SubsystemDims> for Vec<usize> {
    fn from(dims: SubsystemDims) -> Self {
        dims.factors
    }
}

impl FromStr for SubsystemDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidDims(s.to_string()))?;
        Self::new(factors)
    }
}

impl fmt::Display for SubsystemDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigensystem {
    /// `Σ_j v_j f(λ_j) v_j†`.
    pub fn rebuild(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fl = Complex64::new(f(lambda), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        HermitianOperator::from_matrix_unchecked(scaled * self.vectors.adjoint())
    }
}

fn check_same_dim(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `tr{AB}`, real for Hermitian arguments.
pub fn trace_inner_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(trace_product_unchecked(a, b))
}

pub(crate) fn trace_product_unchecked(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    // tr{AB} = Σ_jk A_jk B_kj = Σ_jk A_jk conj(B_jk)
    a.mat
        .iter()
        .zip(b.mat.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

pub fn hermitian_eigensystem(a: &HermitianOperator) -> Result<Eigensystem> {
    if a.mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eig = SymmetricEigen::try_new(a.mat.clone(), 1e-15, 10_000).ok_or(Error::EigenFailure)?;
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigensystem { values, vectors })
}

/// Lower Cholesky factor of a Hermitian matrix, `None` unless positive definite.
pub fn cholesky(a: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let pivot = diag.sqrt();
        l[(j, j)] = Complex64::new(pivot, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / pivot;
        }
    }
    Some(l)
}

/// True iff `A + shift·I` admits a Cholesky factorization.
pub fn is_positive_semidefinite(a: &HermitianOperator, shift: f64) -> bool {
    if shift == 0.0 {
        return cholesky(&a.mat).is_some();
    }
    let mut m = a.mat.clone();
    for j in 0..a.dim() {
        m[(j, j)] += Complex64::new(shift, 0.0);
    }
    cholesky(&m).is_some()
}

/// `-Σ ν log ν` over eigenvalues, clamping values in `[-PSD_TOL, 0)` to zero.
pub(crate) fn entropy_of_spectrum(values: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &nu in values {
        if nu < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: nu });
        }
        if nu > ZERO_EIGENVALUE {
            s -= nu * nu.ln();
        }
    }
    Ok(s)
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&hermitian_eigensystem(rho)?.values)
}

/// Partial transpose of the `which`-th tensor factor.
pub fn partial_transpose(
    a: &HermitianOperator,
    dims: &SubsystemDims,
    which: usize,
) -> Result<HermitianOperator> {
    let n = a.dim();
    dims.check(n, which)?;
    let stride: usize = dims.factors[which + 1..].iter().product();
    let d = dims.factors[which];
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        let di = (i / stride) % d;
        for j in 0..n {
            let dj = (j / stride) % d;
            let i2 = i - di * stride + dj * stride;
            let j2 = j - dj * stride + di * stride;
            out[(i2, j2)] = a.mat[(i, j)];
        }
    }
    Ok(HermitianOperator { mat: out })
}

/// `sqrt(tr{(A-B)²})`.
pub fn hilbert_schmidt_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(a.mat
        .iter()
        .zip(b.mat.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Eigenbasis logarithm of a full-rank state.
pub fn matrix_log(rho: &DensityMatrix) -> Result<HermitianOperator> {
    let eig = hermitian_eigensystem(rho)?;
    if eig.values[0] <= LOG_RANK_TOL {
        return Err(Error::RankDeficient {
            min_eigenvalue: eig.values[0],
        });
    }
    Ok(eig.rebuild(f64::ln))
}

/// Eigenbasis exponential.
pub fn matrix_exp(a: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(hermitian_eigensystem(a)?.rebuild(f64::exp))
}

/// `A^{-1/2}` of a positive definite operator.
pub fn inverse_sqrt(a: &HermitianOperator) -> Result<HermitianOperator> {
    let eig = hermitian_eigensystem(a)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::RankDeficient {
            min_eigenvalue: eig.values[0],
        });
    }
    Ok(eig.rebuild(|x| 1.0 / x.sqrt()))
}
