//! Closed-form reference values computed without the library's solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use tomoset::likelihood::Pom;
use tomoset::linalg::{trace_inner_product, CMatrix, CVector, HermitianOperator};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn paulis() -> [HermitianOperator; 3] {
    let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    [x, y, z].map(|m| HermitianOperator::new(m).unwrap())
}

/// Optimum of `tr{ρH}` over qubit states with `tr{ρΠ_j} = p_j`. Writing
/// `ρ = (I + r·σ)/2`, the data fix `B r = d`; the feasible set is a disc or
/// segment of the Bloch ball around the minimum-norm solution `r_0`, and the
/// optimum is `h_0 + h·r_0 ± sqrt(1 − |r_0|²)·|P_N h|`.
pub fn bloch_optimum(pom: &Pom, p: &[f64], h: &HermitianOperator, maximize: bool) -> f64 {
    let s = paulis();
    let k = pom.len();
    let b = DMatrix::from_fn(k, 3, |j, a| trace_inner_product(&pom.outcomes()[j], &s[a]).unwrap());
    let d = DVector::from_fn(k, |j, _| 2.0 * p[j] - pom.outcomes()[j].trace());
    let hv = DVector::from_fn(3, |a, _| trace_inner_product(h, &s[a]).unwrap() / 2.0);
    let e = SymmetricEigen::new(b.transpose() * &b);
    let scale = e.eigenvalues.amax().max(1.0);
    let btd = b.transpose() * &d;
    let mut r0 = DVector::zeros(3);
    let mut null_part = 0.0;
    for a in 0..3 {
        let v = e.eigenvectors.column(a);
        if e.eigenvalues[a].abs() <= 1e-12 * scale {
            null_part += v.dot(&hv).powi(2);
        } else {
            r0 += v * (v.dot(&btd) / e.eigenvalues[a]);
        }
    }
    let radius = (1.0 - r0.norm_squared()).max(0.0).sqrt();
    let sign = if maximize { 1.0 } else { -1.0 };
    h.trace() / 2.0 + hv.dot(&r0) + sign * radius * null_part.sqrt()
}

pub fn phi_plus() -> CVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
}

pub fn psi_minus() -> CVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)])
}

/// `-Σ ν log ν` from a fresh eigen-decomposition of the real embedding.
pub fn entropy(op: &HermitianOperator) -> f64 {
    spectrum(op)
        .into_iter()
        .filter(|&v| v > 1e-14)
        .map(|v| -v * v.ln())
        .sum()
}

/// Eigenvalues via the real symmetric embedding `[[Re, -Im], [Im, Re]]`,
/// which lists every eigenvalue twice.
pub fn spectrum(op: &HermitianOperator) -> Vec<f64> {
    let n = op.dim();
    let m = op.matrix();
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut v: Vec<f64> = SymmetricEigen::new(big).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn min_eigenvalue(op: &HermitianOperator) -> f64 {
    spectrum(op)[0]
}
