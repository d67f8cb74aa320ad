//! Trace-orthonormal operator basis split into the span of the measurement
//! outcomes and its orthogonal complement.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::BasisConfig;
use crate::error::{Error, Result};
use crate::io::MatrixDoc;
use crate::likelihood::Pom;
use crate::linalg::{trace_product_unchecked, HermitianOperator};
use crate::random::random_wishart;

/// Rank of the cosine Gram matrix `M_jk = tr{A_j A_k} / (‖A_j‖‖A_k‖)` of the
/// nonzero operators: the number of singular values above `tol` times the
/// largest one.
pub fn rank_of_operator_set(ops: &[HermitianOperator], tol: f64) -> Result<usize> {
    let first = ops.first().ok_or(Error::Empty("operator set"))?;
    for op in ops {
        if op.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: op.dim(),
            });
        }
    }
    let nonzero: Vec<&HermitianOperator> = ops.iter().filter(|op| op.hs_norm() > 0.0).collect();
    let norms: Vec<f64> = nonzero.iter().map(|op| op.hs_norm()).collect();
    let n = nonzero.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let v = trace_product_unchecked(nonzero[j], nonzero[k]) / (norms[j] * norms[k]);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    Ok(rank_of_gram(m, tol))
}

pub(crate) fn rank_of_gram(m: DMatrix<f64>, tol: f64) -> usize {
    let values: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .collect();
    let max = values.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > tol * max).count()
}

/// Coefficients of an operator in an [`OperatorBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct OperatorBasis {
    dim: usize,
    measured: Vec<HermitianOperator>,
    unmeasured: Vec<HermitianOperator>,
    /// Columns are real coordinates of the measured operators.
    measured_coords: DMatrix<f64>,
    unmeasured_coords: DMatrix<f64>,
}

/// Incremental modified Gram-Schmidt with one re-orthogonalization pass.
struct Orthonormalizer {
    vectors: Vec<DVector<f64>>,
    tol: f64,
}

impl Orthonormalizer {
    fn new(tol: f64) -> Self {
        Self {
            vectors: Vec::new(),
            tol,
        }
    }

    fn project_out(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &self.vectors {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        w
    }

    /// Appends the normalized residual of `v`; false if `v` is dependent.
    fn push(&mut self, v: &DVector<f64>) -> bool {
        let norm = v.norm();
        if norm == 0.0 {
            return false;
        }
        let w = self.project_out(v);
        let wn = w.norm();
        if wn < self.tol * norm {
            return false;
        }
        self.vectors.push(w / wn);
        true
    }
}

impl OperatorBasis {
    /// Gram-Schmidt on the outcomes, completed with random positive operators.
    pub fn build<R: Rng + ?Sized>(pom: &Pom, rng: &mut R, cfg: &BasisConfig) -> Result<Self> {
        let dim = pom.dim();
        let total = dim * dim;
        let mut gs = Orthonormalizer::new(cfg.independence_tol);
        for pi in pom.outcomes() {
            gs.push(&pi.real_coords());
        }
        let d_meas = gs.vectors.len();
        let identity = HermitianOperator::identity(dim).real_coords();
        let residual = gs.project_out(&identity).norm();
        if residual > 1e-8 * identity.norm() {
            return Err(Error::Degenerate(format!(
                "identity is not in the outcome span (residual {residual:.3e})"
            )));
        }
        while gs.vectors.len() < total {
            let mut placed = false;
            for _ in 0..cfg.retry_budget {
                let seed = random_wishart(dim, rng);
                if gs.push(&seed.real_coords()) {
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Degenerate(format!(
                    "could not complete basis beyond {} of {total} directions",
                    gs.vectors.len()
                )));
            }
        }
        let unmeasured = gs.vectors.split_off(d_meas);
        Self::from_coords(dim, gs.vectors, unmeasured)
    }

    fn from_coords(
        dim: usize,
        measured: Vec<DVector<f64>>,
        unmeasured: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let to_ops = |vs: &[DVector<f64>]| -> Result<Vec<HermitianOperator>> {
            vs.iter()
                .map(|v| HermitianOperator::from_real_coords(dim, v))
                .collect()
        };
        let to_mat = |vs: &[DVector<f64>]| {
            if vs.is_empty() {
                DMatrix::zeros(dim * dim, 0)
            } else {
                DMatrix::from_columns(vs)
            }
        };
        Ok(Self {
            dim,
            measured: to_ops(&measured)?,
            unmeasured: to_ops(&unmeasured)?,
            measured_coords: to_mat(&measured),
            unmeasured_coords: to_mat(&unmeasured),
        })
    }

    /// Rebuilds a basis from explicit blocks, checking orthonormality to `1e-8`.
    pub fn from_blocks(
        measured: Vec<HermitianOperator>,
        unmeasured: Vec<HermitianOperator>,
    ) -> Result<Self> {
        let dim = measured
            .first()
            .or(unmeasured.first())
            .ok_or(Error::Empty("basis"))?
            .dim();
        let all: Vec<&HermitianOperator> = measured.iter().chain(unmeasured.iter()).collect();
        if all.len() != dim * dim {
            return Err(Error::Degenerate(format!(
                "basis has {} operators, expected {}",
                all.len(),
                dim * dim
            )));
        }
        for (j, a) in all.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.dim(),
                });
            }
            for (k, b) in all.iter().enumerate().skip(j) {
                let target = if j == k { 1.0 } else { 0.0 };
                if (trace_product_unchecked(a, b) - target).abs() > 1e-8 {
                    return Err(Error::Degenerate("basis is not orthonormal".into()));
                }
            }
        }
        let m: Vec<_> = measured.iter().map(|o| o.real_coords()).collect();
        let u: Vec<_> = unmeasured.iter().map(|o| o.real_coords()).collect();
        Self::from_coords(dim, m, u)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn d_meas(&self) -> usize {
        self.measured.len()
    }

    pub fn d_unmeas(&self) -> usize {
        self.unmeasured.len()
    }

    pub fn measured(&self) -> &[HermitianOperator] {
        &self.measured
    }

    pub fn unmeasured(&self) -> &[HermitianOperator] {
        &self.unmeasured
    }

    pub fn is_complete(&self) -> bool {
        self.unmeasured.is_empty()
    }

    pub(crate) fn unmeasured_coords(&self) -> &DMatrix<f64> {
        &self.unmeasured_coords
    }

    fn check_dim(&self, op: &HermitianOperator) -> Result<()> {
        if op.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: op.dim(),
            });
        }
        Ok(())
    }

    pub fn decompose(&self, op: &HermitianOperator) -> Result<Decomposition> {
        self.check_dim(op)?;
        let v = op.real_coords();
        let a = self.measured_coords.tr_mul(&v);
        let b = self.unmeasured_coords.tr_mul(&v);
        Ok(Decomposition {
            a: a.iter().copied().collect(),
            b: b.iter().copied().collect(),
        })
    }

    pub fn reconstruct(&self, d: &Decomposition) -> Result<HermitianOperator> {
        if d.a.len() != self.d_meas() || d.b.len() != self.d_unmeas() {
            return Err(Error::DimensionMismatch {
                expected: self.d_meas() + self.d_unmeas(),
                found: d.a.len() + d.b.len(),
            });
        }
        let v = &self.measured_coords * DVector::from_column_slice(&d.a)
            + &self.unmeasured_coords * DVector::from_column_slice(&d.b);
        HermitianOperator::from_real_coords(self.dim, &v)
    }

    /// `Σ_j a_j Γ^meas_j`: the part of `op` fixed by the measurement.
    pub fn measured_projection(&self, op: &HermitianOperator) -> Result<HermitianOperator> {
        self.check_dim(op)?;
        let v = op.real_coords();
        let p = &self.measured_coords * self.measured_coords.tr_mul(&v);
        HermitianOperator::from_real_coords(self.dim, &p)
    }

    /// Unmeasured coefficients `b_j = tr{Γ^unmeas_j A}`.
    pub fn unmeasured_part(&self, op: &HermitianOperator) -> Result<DVector<f64>> {
        self.check_dim(op)?;
        Ok(self.unmeasured_coords.tr_mul(&op.real_coords()))
    }

    pub fn to_docs(&self) -> Vec<BasisEntry> {
        let tag = |block: &str, ops: &[HermitianOperator]| -> Vec<BasisEntry> {
            ops.iter()
                .map(|o| BasisEntry {
                    block: block.to_string(),
                    matrix: MatrixDoc::from(o),
                })
                .collect()
        };
        let mut out = tag("measured", &self.measured);
        out.extend(tag("unmeasured", &self.unmeasured));
        out
    }

    pub fn from_docs(entries: &[BasisEntry]) -> Result<Self> {
        let mut measured = Vec::new();
        let mut unmeasured = Vec::new();
        for e in entries {
            let op = e.matrix.to_operator()?;
            match e.block.as_str() {
                "measured" => measured.push(op),
                "unmeasured" => unmeasured.push(op),
                other => return Err(Error::Degenerate(format!("unknown basis block {other:?}"))),
            }
        }
        Self::from_blocks(measured, unmeasured)
    }
}

/// One tagged entry of an exported basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisEntry {
    pub block: String,
    #[serde(flatten)]
    pub matrix: MatrixDoc,
}

/// Convenience wrapper over [`OperatorBasis::build`].
pub fn build_basis<R: Rng + ?Sized>(pom: &Pom, rng: &mut R, cfg: &BasisConfig) -> Result<OperatorBasis> {
    OperatorBasis::build(pom, rng, cfg)
}

pub fn decompose(op: &HermitianOperator, basis: &OperatorBasis) -> Result<Decomposition> {
    basis.decompose(op)
}

pub fn measured_projection(op: &HermitianOperator, basis: &OperatorBasis) -> Result<HermitianOperator> {
    basis.measured_projection(op)
}

/// Orthonormal basis (real coordinates) of the complement of `span` in `R^n`.
pub(crate) fn orthonormal_complement(span: &[DVector<f64>], n: usize, tol: f64) -> Vec<DVector<f64>> {
    let mut gs = Orthonormalizer::new(tol);
    for v in span {
        gs.push(v);
    }
    let start = gs.vectors.len();
    for j in 0..n {
        if gs.vectors.len() == n {
            break;
        }
        gs.push(&DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 }));
    }
    gs.vectors.split_off(start)
}
