//! The ML convex set `{ρ ⪰ 0 : tr{ρΠ_j} = p̂_j}` and linear optimization over it.
//!
//! States in the set are written as `ρ(b) = V (σ_0 + Σ_k b_k K_k) V†` where
//! `V` spans the support of the anchor estimator, `σ_0 = V†ρ_anchor V`, and the
//! `K_k` are trace-orthonormal Hermitian directions orthogonal to every
//! compressed outcome `V†Π_jV`. Equality constraints then hold for any `b`; only
//! positivity binds. When the anchor has full rank `V = I` and the `K_k` are the
//! unmeasured basis operators.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, orthonormal_complement, rank_of_operator_set, OperatorBasis};
use crate::config::{BasisConfig, Config, SdpConfig};
use crate::error::{Error, Result};
use crate::io::MatrixDoc;
use crate::likelihood::{probabilities, Pom, PomDoc};
use crate::linalg::{
    cholesky, hermitian_eigensystem, hilbert_schmidt_distance, CMatrix, DensityMatrix,
    HermitianOperator,
};
use crate::random::random_hermitian;
use crate::sdp::{self, BarrierOptions, Lmi};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        }
    }
}

impl FromStr for Sense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Sense::Max),
            "min" => Ok(Sense::Min),
            other => Err(Error::InvalidData(format!("unknown sense {other:?}"))),
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Max => "max",
            Sense::Min => "min",
        })
    }
}

/// Affine chart of the convex set around the anchor.
#[derive(Clone, Debug)]
pub(crate) struct Face {
    /// `D×r` isometry; `None` when the anchor has full rank.
    v: Option<CMatrix>,
    pub(crate) sigma0: CMatrix,
    pub(crate) directions: Vec<CMatrix>,
    /// Columns are real coordinates of the directions in `r×r` space.
    coords: DMatrix<f64>,
}

impl Face {
    fn new(anchor: &DensityMatrix, basis: &OperatorBasis, pom: &Pom, tol: f64) -> Result<Self> {
        let eig = hermitian_eigensystem(anchor)?;
        let dim = anchor.dim();
        let support: Vec<usize> = (0..dim).filter(|&j| eig.values[j] > tol).collect();
        if support.len() == dim {
            let directions = basis
                .unmeasured()
                .iter()
                .map(|g| g.matrix().clone())
                .collect();
            return Ok(Self {
                v: None,
                sigma0: anchor.matrix().clone(),
                directions,
                coords: basis.unmeasured_coords().clone(),
            });
        }
        let r = support.len();
        let v = CMatrix::from_fn(dim, r, |i, k| eig.vectors[(i, support[k])]);
        let sigma = HermitianOperator::from_matrix_unchecked(v.adjoint() * anchor.matrix() * &v);
        let sigma = sigma.scaled(1.0 / sigma.trace());
        let span: Vec<DVector<f64>> = pom
            .outcomes()
            .iter()
            .map(|p| HermitianOperator::from_matrix_unchecked(v.adjoint() * p.matrix() * &v).real_coords())
            .collect();
        let cols = orthonormal_complement(&span, r * r, BasisConfig::default().independence_tol);
        let mut directions = Vec::with_capacity(cols.len());
        for c in &cols {
            directions.push(HermitianOperator::from_real_coords(r, c)?.into_matrix());
        }
        let coords = if cols.is_empty() {
            DMatrix::zeros(r * r, 0)
        } else {
            DMatrix::from_columns(&cols)
        };
        Ok(Self {
            v: Some(v),
            sigma0: sigma.into_matrix(),
            directions,
            coords,
        })
    }

    /// Number of free directions.
    pub(crate) fn len(&self) -> usize {
        self.directions.len()
    }

    pub(crate) fn local(&self, b: &DVector<f64>) -> CMatrix {
        Lmi {
            f0: &self.sigma0,
            fk: &self.directions,
        }
        .eval(b)
    }

    pub(crate) fn lift(&self, local: CMatrix) -> HermitianOperator {
        match &self.v {
            None => HermitianOperator::from_matrix_unchecked(local),
            Some(v) => HermitianOperator::from_matrix_unchecked(v * local * v.adjoint()),
        }
    }

    fn compress(&self, op: &HermitianOperator) -> HermitianOperator {
        match &self.v {
            None => op.clone(),
            Some(v) => HermitianOperator::from_matrix_unchecked(v.adjoint() * op.matrix() * v),
        }
    }

    /// Full `D×D` operator at chart coordinates `b`.
    pub(crate) fn point(&self, b: &DVector<f64>) -> HermitianOperator {
        self.lift(self.local(b))
    }

    /// Chart coordinates of a state in the set.
    pub(crate) fn coordinates(&self, rho: &HermitianOperator) -> DVector<f64> {
        let delta = self.compress(rho).real_coords()
            - HermitianOperator::from_matrix_unchecked(self.sigma0.clone()).real_coords();
        self.coords.tr_mul(&delta)
    }

    /// Smallest eigenvalue of the compressed operator at `b`.
    pub(crate) fn min_eigenvalue(&self, b: &DVector<f64>) -> Result<f64> {
        HermitianOperator::from_matrix_unchecked(self.local(b)).min_eigenvalue()
    }

    /// Cholesky test on the compressed operator at `b`.
    pub(crate) fn is_positive(&self, b: &DVector<f64>) -> bool {
        cholesky(&self.local(b)).is_some()
    }

    /// Objective coefficients `tr{H V K_k V†}`.
    fn objective(&self, h: &HermitianOperator) -> DVector<f64> {
        self.coords.tr_mul(&self.compress(h).real_coords())
    }
}

/// The ML convex set together with the accumulated linearly independent members.
#[derive(Clone, Debug)]
pub struct ConvexSetModel {
    pom: Pom,
    target_probs: Vec<f64>,
    basis: OperatorBasis,
    members: Vec<DensityMatrix>,
    probes: Vec<DensityMatrix>,
    face: Face,
    rank_tol: f64,
}

#[derive(Clone, Debug)]
pub struct LinearOptResult {
    pub optimizer: DensityMatrix,
    pub value: f64,
    pub certified_gap: f64,
    pub newton_steps: usize,
}

/// Outcome of a batch of boundary-state optimizations.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CollectReport {
    pub optimizations: usize,
    pub added: usize,
    pub failures: Vec<String>,
    pub rank: usize,
}

/// On-disk model: the measurement, the anchor estimator and any further
/// members, which are re-screened on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDoc {
    pub pom: PomDoc,
    pub anchor: MatrixDoc,
    #[serde(default)]
    pub members: Vec<MatrixDoc>,
}

impl ConvexSetModel {
    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            pom: self.pom.to_doc(),
            anchor: MatrixDoc::from(self.anchor()),
            members: self.members[1..].iter().map(MatrixDoc::from).collect(),
        }
    }

    /// Rebuilds the model with a fresh operator basis; members that are not
    /// feasible or not independent are rejected.
    pub fn from_doc<R: Rng + ?Sized>(doc: &ModelDoc, rng: &mut R, cfg: &Config) -> Result<Self> {
        let pom = Pom::from_doc(&doc.pom)?;
        let basis = build_basis(&pom, rng, &cfg.basis)?;
        let mut model = Self::new(pom, basis, doc.anchor.to_density()?, &cfg.sdp)?;
        for m in &doc.members {
            let rho = m.to_density()?;
            let residual = model.constraint_residual(&rho)?;
            if residual > cfg.sdp.feasibility_tol {
                return Err(Error::Infeasible { residual });
            }
            if !model.try_append(rho)? {
                return Err(Error::Degenerate("stored members are linearly dependent".into()));
            }
        }
        Ok(model)
    }

    /// Set of states sharing the outcome probabilities of `anchor`, which
    /// becomes the first member.
    pub fn new(pom: Pom, basis: OperatorBasis, anchor: DensityMatrix, cfg: &SdpConfig) -> Result<Self> {
        if pom.dim() != basis.dim() || anchor.dim() != pom.dim() {
            return Err(Error::DimensionMismatch {
                expected: pom.dim(),
                found: if anchor.dim() != pom.dim() {
                    anchor.dim()
                } else {
                    basis.dim()
                },
            });
        }
        let face = Face::new(&anchor, &basis, &pom, cfg.face_tol)?;
        let anchor = if face.v.is_some() {
            DensityMatrix::from_op_unchecked(face.point(&DVector::zeros(face.len())))
        } else {
            anchor
        };
        let target_probs = probabilities(&anchor, &pom)?;
        Ok(Self {
            pom,
            target_probs,
            basis,
            members: vec![anchor],
            probes: Vec::new(),
            face,
            rank_tol: BasisConfig::default().rank_tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.pom.dim()
    }

    pub fn pom(&self) -> &Pom {
        &self.pom
    }

    pub fn target_probs(&self) -> &[f64] {
        &self.target_probs
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn members(&self) -> &[DensityMatrix] {
        &self.members
    }

    /// The first member, which every chart is centered on.
    pub fn anchor(&self) -> &DensityMatrix {
        &self.members[0]
    }

    /// Every optimizer returned by [`ConvexSetModel::collect_members`], accepted or not.
    pub fn probes(&self) -> &[DensityMatrix] {
        &self.probes
    }

    /// Free directions of the set around the anchor.
    pub fn free_dimension(&self) -> usize {
        self.face.len()
    }

    pub fn max_members(&self) -> usize {
        self.face.len() + 1
    }

    pub(crate) fn face(&self) -> &Face {
        &self.face
    }

    /// Largest deviation `|tr{ρΠ_j} − p̂_j|`.
    pub fn constraint_residual(&self, rho: &HermitianOperator) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (pi, p) in self.pom.outcomes().iter().zip(&self.target_probs) {
            worst = worst.max((crate::linalg::trace_inner_product(rho, pi)? - p).abs());
        }
        Ok(worst)
    }

    /// Appends `rho` if it raises the rank of the member set.
    pub fn try_append(&mut self, rho: DensityMatrix) -> Result<bool> {
        if self.members.len() >= self.max_members() {
            return Ok(false);
        }
        let mut ops: Vec<HermitianOperator> = self.members.iter().map(|m| m.op().clone()).collect();
        ops.push(rho.op().clone());
        if rank_of_operator_set(&ops, self.rank_tol)? == ops.len() {
            self.members.push(rho);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub(crate) fn push_member_unchecked(&mut self, rho: DensityMatrix) {
        self.members.push(rho);
    }

    pub(crate) fn record_probe(&mut self, rho: DensityMatrix) {
        self.probes.push(rho);
    }

    /// Runs `optimize_linear` per operator (both senses when configured) and
    /// screens each optimizer into the member set.
    pub fn collect_members(&mut self, hs: &[HermitianOperator], cfg: &SdpConfig) -> CollectReport {
        let mut report = CollectReport::default();
        let senses: &[Sense] = if cfg.both_senses {
            &[Sense::Max, Sense::Min]
        } else {
            &[Sense::Max]
        };
        for h in hs {
            for &sense in senses {
                report.optimizations += 1;
                match optimize_linear(h, sense, self, cfg) {
                    Ok(res) => {
                        self.probes.push(res.optimizer.clone());
                        match self.try_append(res.optimizer) {
                            Ok(true) => report.added += 1,
                            Ok(false) => {}
                            Err(e) => report.failures.push(e.to_string()),
                        }
                    }
                    Err(e) => report.failures.push(e.to_string()),
                }
            }
        }
        report.rank = self.members.len();
        report
    }

    /// Random-operator probing until the member count stops growing for
    /// `plateau_patience` consecutive operators, the member budget is reached
    /// or `budget` operators have been used.
    pub fn probe_until_plateau<R: Rng + ?Sized>(
        &mut self,
        budget: usize,
        rng: &mut R,
        cfg: &SdpConfig,
    ) -> CollectReport {
        let mut total = CollectReport::default();
        let mut idle = 0;
        for _ in 0..budget {
            if self.members.len() >= self.max_members() || idle >= cfg.plateau_patience {
                break;
            }
            let h = random_hermitian(self.dim(), rng);
            let r = self.collect_members(std::slice::from_ref(&h), cfg);
            idle = if r.added > 0 { 0 } else { idle + 1 };
            total.optimizations += r.optimizations;
            total.added += r.added;
            total.failures.extend(r.failures);
        }
        total.rank = self.members.len();
        total
    }
}

/// Free-function form of [`ConvexSetModel::collect_members`].
pub fn collect_members(
    hs: &[HermitianOperator],
    mut model: ConvexSetModel,
    cfg: &SdpConfig,
) -> (ConvexSetModel, CollectReport) {
    let report = model.collect_members(hs, cfg);
    (model, report)
}

/// Maximizes or minimizes `tr{ρH}` over the convex set.
pub fn optimize_linear(
    h: &HermitianOperator,
    sense: Sense,
    model: &ConvexSetModel,
    cfg: &SdpConfig,
) -> Result<LinearOptResult> {
    if h.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: h.dim(),
        });
    }
    let face = &model.face;
    let c = face.objective(h) * sense.sign();
    let scale = h.hs_norm().max(f64::MIN_POSITIVE);
    let (local, gap, steps) = if face.len() == 0 || c.norm() <= 1e-14 * scale {
        (face.sigma0.clone(), 0.0, 0)
    } else {
        let lmi = Lmi {
            f0: &face.sigma0,
            fk: &face.directions,
        };
        let opts = BarrierOptions {
            gap_tol: 0.1 * cfg.gap_tol,
            max_newton_steps: cfg.max_newton_steps,
            ..BarrierOptions::default()
        };
        let sol = sdp::maximize(&lmi, &c, DVector::zeros(face.len()), &opts)?;
        (lmi.eval(&sol.x), sol.gap, sol.newton_steps)
    };
    let op = face.lift(local);
    let residual = model.constraint_residual(&op)?;
    if residual > cfg.feasibility_tol {
        return Err(Error::Infeasible { residual });
    }
    let optimizer = DensityMatrix::new(op)?;
    let value = crate::linalg::trace_inner_product(&optimizer, h)?;
    Ok(LinearOptResult {
        optimizer,
        value,
        certified_gap: gap,
        newton_steps: steps,
    })
}

/// Whether the anchor and the first `probe_count` recorded probes are, on
/// average, closer than `threshold` in Hilbert-Schmidt distance.
pub fn is_singleton(model: &ConvexSetModel, probe_count: usize, threshold: f64) -> Result<bool> {
    let take = probe_count.min(model.probes.len());
    if take < probe_count || take + 1 < 2 {
        return Err(Error::Empty("recorded probes"));
    }
    let states: Vec<&DensityMatrix> = std::iter::once(model.anchor())
        .chain(model.probes.iter().take(take))
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for j in 0..states.len() {
        for k in (j + 1)..states.len() {
            sum += hilbert_schmidt_distance(states[j], states[k])?;
            pairs += 1;
        }
    }
    Ok(sum / (pairs as f64) < threshold)
}
