//! Decomposable entanglement witnesses `W = Q^{T_j}` and the incomplete-data verdict.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Config, WitnessKind};
use crate::convexset::{optimize_linear, ConvexSetModel, Sense};
use crate::error::{Error, Result};
use crate::linalg::{partial_transpose, CMatrix, DensityMatrix, HermitianOperator, SubsystemDims};
use crate::sdp::{self, BarrierOptions, Lmi};
use nalgebra::DVector;
use num_complex::Complex64;
pub use crate::random::random_wishart;
use crate::random::random_pure_state;

/// `Q^{T_which}`; non-negative on every separable state when `Q ⪰ 0`.
pub fn decomposable_witness(
    q: &DensityMatrix,
    dims: &SubsystemDims,
    which: usize,
) -> Result<HermitianOperator> {
    partial_transpose(q, dims, which)
}

/// Draws the positive operator `Q` a witness is built from.
pub fn random_witness_seed<R: Rng + ?Sized>(
    kind: WitnessKind,
    dims: &SubsystemDims,
    rng: &mut R,
) -> Result<DensityMatrix> {
    match kind {
        WitnessKind::Wishart => Ok(random_wishart(dims.total(), rng)),
        WitnessKind::EntangledPure => random_pure_state(dims, rng, true),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Entangled,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub id: usize,
    pub max_value: f64,
    pub certified_gap: f64,
    /// Index of the optimizer in the model's members when it was appended.
    pub member: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessReport {
    pub entries: Vec<WitnessEntry>,
    pub verdict: Verdict,
    pub witness_count: usize,
    pub margin: f64,
    /// Witness ids whose optimization failed, with the error.
    pub failures: Vec<(usize, String)>,
}

impl WitnessReport {
    /// Whether any of the first `n` witnesses detects entanglement.
    pub fn detected_within(&self, n: usize) -> bool {
        self.entries
            .iter()
            .any(|e| e.id < n && e.max_value < -self.margin)
    }

    /// Smallest witness index that detects entanglement.
    pub fn first_detection(&self) -> Option<usize> {
        self.entries
            .iter()
            .filter(|e| e.max_value < -self.margin)
            .map(|e| e.id)
            .min()
    }
}

/// Maximizes `tr{ρW}` over the convex set for `num_witnesses` random witnesses.
/// Every optimizer is also offered to the model as a new member.
pub fn certify_entanglement<R: Rng + ?Sized>(
    model: &mut ConvexSetModel,
    dims: &SubsystemDims,
    num_witnesses: usize,
    rng: &mut R,
    cfg: &Config,
) -> Result<WitnessReport> {
    if num_witnesses == 0 {
        return Err(Error::Empty("witness set"));
    }
    if dims.total() != model.dim() {
        return Err(Error::InvalidDims(format!(
            "subsystems {dims} do not multiply to {}",
            model.dim()
        )));
    }
    let which = cfg.witness.subsystem.unwrap_or(dims.len() - 1);
    let margin = cfg.witness.margin;
    let mut entries = Vec::with_capacity(num_witnesses);
    let mut failures = Vec::new();
    for id in 0..num_witnesses {
        let q = random_witness_seed(cfg.witness.kind, dims, rng)?;
        let w = decomposable_witness(&q, dims, which)?;
        match optimize_linear(&w, Sense::Max, model, &cfg.sdp) {
            Ok(res) => {
                let before = model.members().len();
                model.record_probe(res.optimizer.clone());
                let member = match model.try_append(res.optimizer) {
                    Ok(true) => Some(before),
                    _ => None,
                };
                entries.push(WitnessEntry {
                    id,
                    max_value: res.value,
                    certified_gap: res.certified_gap,
                    member,
                });
            }
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    let verdict = if entries.iter().any(|e| e.max_value < -margin) {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    };
    Ok(WitnessReport {
        entries,
        verdict,
        witness_count: num_witnesses,
        margin,
        failures,
    })
}

fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// `max λ_min(ρ^{T_which})` over the convex set. A non-negative value means
/// the set holds a state with positive partial transpose, which no
/// decomposable witness can exclude; for two qubits and qubit-qutrit systems
/// it means no witness at all can certify entanglement from these data.
pub fn ppt_margin(model: &ConvexSetModel, dims: &SubsystemDims, which: usize) -> Result<f64> {
    let dim = model.dim();
    if dims.total() != dim {
        return Err(Error::InvalidDims(format!("subsystems {dims} do not multiply to {dim}")));
    }
    let face = model.face();
    let pt = |m: &CMatrix| -> Result<CMatrix> {
        Ok(partial_transpose(&face.lift(m.clone()), dims, which)?.into_matrix())
    };
    let anchor_pt = partial_transpose(model.anchor(), dims, which)?;
    let shift = 1.0 - anchor_pt.min_eigenvalue()?;
    let identity = CMatrix::identity(dim, dim);
    let f0 = block_diag(
        &face.sigma0,
        &(anchor_pt.into_matrix() + &identity * Complex64::new(shift, 0.0)),
    );
    let r = face.sigma0.nrows();
    let mut fk = face
        .directions
        .iter()
        .map(|k| Ok(block_diag(k, &pt(k)?)))
        .collect::<Result<Vec<_>>>()?;
    fk.push(block_diag(&CMatrix::zeros(r, r), &identity));
    let n = fk.len();
    let mut c = DVector::zeros(n);
    c[n - 1] = -1.0;
    let sol = sdp::maximize(&Lmi { f0: &f0, fk: &fk }, &c, DVector::zeros(n), &BarrierOptions::default())?;
    Ok(-(shift + sol.x[n - 1]))
}
