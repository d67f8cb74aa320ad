//! Random matrix ensembles: Ginibre, Wishart-normalized states, Haar vectors.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, DensityMatrix, HermitianOperator, SubsystemDims};

/// `D×D` matrix with independent standard-normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// `X†X / tr{X†X}`.
pub fn wishart_from(x: &CMatrix) -> DensityMatrix {
    let q = HermitianOperator::from_matrix_unchecked(x.adjoint() * x);
    let t = q.trace();
    DensityMatrix::from_op_unchecked(q.scaled(1.0 / t))
}

/// Random full-rank state from the normalized Wishart construction.
pub fn random_wishart<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    wishart_from(&ginibre(dim, rng))
}

/// `(X + X†)/2` with `X` Ginibre; used as a random linear objective.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let x = ginibre(dim, rng);
    HermitianOperator::from_matrix_unchecked((&x + x.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Haar-distributed unit vector.
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v.unscale(n)
}

/// Singular values of the amplitude matrix of `psi` across the cut between
/// the first factor and the rest, sorted descending.
pub fn schmidt_coefficients(psi: &CVector, dims: &SubsystemDims) -> Vec<f64> {
    let da = dims.factors()[0];
    let db = dims.total() / da;
    let m = CMatrix::from_fn(da, db, |a, b| psi[a * db + b]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

const REJECTION_BUDGET: usize = 10_000;

/// Haar-random pure state; with `require_entangled`, redraws until the
/// reduced state of the first factor has purity below `1 - 1e-6`.
pub fn random_pure_state<R: Rng + ?Sized>(
    dims: &SubsystemDims,
    rng: &mut R,
    require_entangled: bool,
) -> Result<DensityMatrix> {
    Ok(DensityMatrix::pure(&random_pure_vector(
        dims,
        rng,
        require_entangled,
    )?)?)
}

pub fn random_pure_vector<R: Rng + ?Sized>(
    dims: &SubsystemDims,
    rng: &mut R,
    require_entangled: bool,
) -> Result<CVector> {
    for _ in 0..REJECTION_BUDGET {
        let psi = haar_vector(dims.total(), rng);
        if !require_entangled || dims.len() < 2 {
            return Ok(psi);
        }
        let purity: f64 = schmidt_coefficients(&psi, dims)
            .iter()
            .map(|s| s.powi(4))
            .sum();
        if purity < 1.0 - 1e-6 {
            return Ok(psi);
        }
    }
    Err(Error::Degenerate(
        "entangled pure state rejection budget exhausted".into(),
    ))
}

/// `ρ_A ⊗ ρ_B ⊗ …` with each factor a Haar-random pure state.
pub fn random_product_state<R: Rng + ?Sized>(dims: &SubsystemDims, rng: &mut R) -> DensityMatrix {
    let mut psi = CVector::from_element(1, Complex64::new(1.0, 0.0));
    for &d in dims.factors() {
        psi = psi.kronecker(&haar_vector(d, rng));
    }
    DensityMatrix::from_op_unchecked(HermitianOperator::outer(&psi))
}
