//! Maximum-entropy selection among ML estimators, the `γ` exponential-form
//! residual, the SDP-driven pipeline and the steepest-ascent baseline.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, OperatorBasis};
use crate::config::{Config, EntropyConfig, SteepestAscentConfig};
use crate::convexset::{CollectReport, ConvexSetModel};
use crate::error::{Error, Result, Stage, StageExt};
use crate::io::MatrixDoc;
use crate::likelihood::{log_likelihood, ml_estimate, CountData, MlSolution, Pom};
use crate::linalg::{
    cholesky, entropy_of_spectrum, hermitian_eigensystem, matrix_log, CMatrix, DensityMatrix,
    HermitianOperator, SubsystemDims,
};
use crate::nelder_mead::{self, NmOptions};
use crate::witness::{certify_entanglement, WitnessReport};

const COMBINATION_TOL: f64 = 1e-12;
const CONDITIONAL_SHIFT: f64 = 1e-12;

/// Affine weights `t_j` with `Σ t_j = 1`; entries may be negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinationVector {
    t: Vec<f64>,
}

impl CombinationVector {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::Empty("combination weights"));
        }
        let s: f64 = t.iter().sum();
        if (s - 1.0).abs() > COMBINATION_TOL {
            return Err(Error::InvalidData(format!("weights sum to {s}, not 1")));
        }
        Ok(Self { t })
    }

    /// All weight on entry `k`.
    pub fn vertex(len: usize, k: usize) -> Self {
        let mut t = vec![0.0; len];
        t[k] = 1.0;
        Self { t }
    }

    /// `(x_1, …, x_{M−1}, 1 − Σ x)`.
    pub fn from_free(x: &DVector<f64>) -> Self {
        let mut t: Vec<f64> = x.iter().copied().collect();
        t.push(1.0 - x.sum());
        Self { t }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// `Σ t_j ρ_j`: unit trace and Hermitian, not necessarily positive.
pub fn combine(t: &CombinationVector, members: &[DensityMatrix]) -> Result<HermitianOperator> {
    if t.len() != members.len() {
        return Err(Error::DimensionMismatch {
            expected: members.len(),
            found: t.len(),
        });
    }
    let d = members[0].dim();
    let mut out = HermitianOperator::zeros(d);
    for (w, m) in t.as_slice().iter().zip(members) {
        if m.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.dim(),
            });
        }
        out.add_scaled(*w, m);
    }
    Ok(out)
}

fn combine_raw(t: &[f64], members: &[CMatrix]) -> CMatrix {
    let mut out = &members[0] * Complex64::new(t[0], 0.0);
    for (w, m) in t.iter().zip(members).skip(1) {
        out.zip_apply(m, |a, b| *a += b * Complex64::new(*w, 0.0));
    }
    out
}

fn conditional_entropy_raw(m: CMatrix, s0: f64) -> f64 {
    let mut shifted = m.clone();
    for j in 0..m.nrows() {
        shifted[(j, j)] += Complex64::new(CONDITIONAL_SHIFT, 0.0);
    }
    if cholesky(&shifted).is_none() {
        return s0;
    }
    let values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    entropy_of_spectrum(&values).unwrap_or(s0)
}

/// Von Neumann entropy of `combine(t)` where it is positive, `s0` elsewhere.
pub fn conditional_entropy(t: &CombinationVector, members: &[DensityMatrix], s0: f64) -> Result<f64> {
    let op = combine(t, members)?;
    Ok(conditional_entropy_raw(op.into_matrix(), s0))
}

#[derive(Clone, Debug)]
pub struct EntropyMaximum {
    pub t: CombinationVector,
    pub rho: DensityMatrix,
    pub entropy: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead ascent of the conditional entropy over affine combinations of
/// `members`, started at the member of largest entropy.
pub fn maximize_entropy(members: &[DensityMatrix], cfg: &EntropyConfig) -> Result<EntropyMaximum> {
    let m = members.len();
    if m == 0 {
        return Err(Error::Empty("member set"));
    }
    let d = members[0].dim();
    let s0 = cfg.s0.unwrap_or(-2.0 * (d as f64).ln());
    if s0 >= 0.0 {
        return Err(Error::InvalidData(format!("penalty entropy {s0} must be negative")));
    }
    let raw: Vec<CMatrix> = members.iter().map(|r| r.matrix().clone()).collect();
    let entropies: Vec<f64> = raw
        .iter()
        .map(|r| conditional_entropy_raw(r.clone(), s0))
        .collect();
    let best = (0..m)
        .max_by(|&a, &b| entropies[a].total_cmp(&entropies[b]))
        .expect("nonempty");
    if m == 1 {
        return Ok(EntropyMaximum {
            t: CombinationVector::vertex(1, 0),
            rho: members[0].clone(),
            entropy: entropies[0],
            evaluations: 0,
            converged: true,
        });
    }
    let n = m - 1;
    let objective = |x: &DVector<f64>| {
        let t = CombinationVector::from_free(x);
        conditional_entropy_raw(combine_raw(t.as_slice(), &raw), s0)
    };
    let opts = NmOptions {
        initial_step: cfg.initial_step,
        tol: cfg.tol,
        max_evaluations: cfg.max_evaluations.unwrap_or(2000 * n),
        adaptive: n > cfg.adaptive_above,
    };
    let mut x = DVector::zeros(n);
    if best < n {
        x[best] = 1.0;
    }
    let mut value = entropies[best];
    let mut evaluations = 0;
    let mut converged = false;
    for _ in 0..=cfg.restarts {
        let r = nelder_mead::maximize(objective, x.clone(), &opts);
        evaluations += r.evaluations;
        let gain = r.value - value;
        if r.value > value {
            x = r.x;
            value = r.value;
        }
        converged = r.converged;
        if r.converged && gain <= cfg.tol {
            break;
        }
    }
    if value <= s0 {
        return Err(Error::Degenerate("no positive combination found".into()));
    }
    let t = CombinationVector::from_free(&x);
    let rho = DensityMatrix::new(combine(&t, members)?)?;
    Ok(EntropyMaximum {
        t,
        rho,
        entropy: value,
        evaluations,
        converged,
    })
}

/// `sqrt(Σ_j tr{Γ^unmeas_j log ρ}²)`.
pub fn gamma_residual(rho: &DensityMatrix, basis: &OperatorBasis) -> Result<f64> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: rho.dim(),
        });
    }
    if basis.is_complete() {
        return Ok(0.0);
    }
    let log = matrix_log(rho)?;
    Ok(basis.unmeasured_part(&log)?.norm())
}

/// `γ`, or `None` when the estimator is rank deficient.
pub fn gamma_if_defined(rho: &DensityMatrix, basis: &OperatorBasis) -> Result<Option<f64>> {
    match gamma_residual(rho, basis) {
        Ok(g) => Ok(Some(g)),
        Err(Error::RankDeficient { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct MlmeResult {
    pub estimator: DensityMatrix,
    pub entropy: f64,
    pub gamma: Option<f64>,
    pub loglik: f64,
    pub members: usize,
    pub combination: CombinationVector,
    /// Objective evaluations spent on entropy maximization.
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlmeDoc {
    pub estimator: MatrixDoc,
    pub entropy: f64,
    pub gamma: Option<f64>,
    pub loglik: f64,
    pub members: usize,
    pub combination: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MlmeResult {
    pub fn to_doc(&self) -> MlmeDoc {
        MlmeDoc {
            estimator: MatrixDoc::from(&self.estimator),
            entropy: self.entropy,
            gamma: self.gamma,
            loglik: self.loglik,
            members: self.members,
            combination: self.combination.as_slice().to_vec(),
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// Entropy maximization over `members` followed by the `γ` diagnostic.
pub fn mlme_from_members(
    members: &[DensityMatrix],
    basis: &OperatorBasis,
    data: &CountData,
    pom: &Pom,
    cfg: &EntropyConfig,
) -> Result<MlmeResult> {
    let best = maximize_entropy(members, cfg).stage(Stage::EntropyMaximization)?;
    let gamma = gamma_if_defined(&best.rho, basis).stage(Stage::EntropyMaximization)?;
    let loglik = log_likelihood(data, &best.rho, pom)?;
    Ok(MlmeResult {
        entropy: best.entropy,
        gamma,
        loglik,
        members: members.len(),
        combination: best.t,
        iterations: best.evaluations,
        converged: best.converged,
        estimator: best.rho,
    })
}

/// Everything the SDP-driven pipeline produced.
#[derive(Clone, Debug)]
pub struct SdpMlmeOutput {
    pub result: MlmeResult,
    pub report: Option<WitnessReport>,
    pub collect: Option<CollectReport>,
    pub ml: MlSolution,
    pub model: ConvexSetModel,
}

/// ML estimation, boundary-state generation (witness-driven when `dims` is
/// given, random operators otherwise), then entropy maximization.
pub fn sdp_mlme<R: Rng + ?Sized>(
    data: &CountData,
    pom: &Pom,
    dims: Option<&SubsystemDims>,
    rng: &mut R,
    cfg: &Config,
) -> Result<SdpMlmeOutput> {
    let ml = ml_estimate(data, pom, &cfg.ml).stage(Stage::MaximumLikelihood)?;
    let basis = build_basis(pom, rng, &cfg.basis).stage(Stage::Basis)?;
    let mut model = ConvexSetModel::new(pom.clone(), basis, ml.rho_ml.clone(), &cfg.sdp)
        .stage(Stage::ConvexSet)?;
    let mut report = None;
    let mut collect = None;
    match dims {
        Some(dims) => {
            report = Some(
                certify_entanglement(&mut model, dims, cfg.witness.count, rng, cfg)
                    .stage(Stage::Witness)?,
            );
        }
        None if model.free_dimension() > 0 => {
            let budget = cfg
                .sdp
                .probe_count
                .unwrap_or(4 * model.basis().d_unmeas());
            collect = Some(model.probe_until_plateau(budget, rng, &cfg.sdp));
        }
        None => {}
    }
    let result = mlme_from_members(model.members(), model.basis(), data, pom, &cfg.entropy)?;
    Ok(SdpMlmeOutput {
        result,
        report,
        collect,
        ml,
        model,
    })
}

#[derive(Clone, Debug)]
pub struct SteepestAscentResult {
    pub estimator: DensityMatrix,
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct AscentPoint {
    a: CMatrix,
    rho: HermitianOperator,
    value: f64,
}

fn ascent_point(
    a: CMatrix,
    freqs: &[f64],
    pom: &Pom,
    lambda: f64,
    s_max: f64,
) -> Result<AscentPoint> {
    let q = HermitianOperator::from_matrix_unchecked(a.adjoint() * &a);
    let tau = q.trace();
    let rho = q.scaled(1.0 / tau);
    let a = a * Complex64::new(1.0 / tau.sqrt(), 0.0);
    let mut value = 0.0;
    for (f, pi) in freqs.iter().zip(pom.outcomes()) {
        if *f > 0.0 {
            let p = crate::linalg::trace_inner_product(&rho, pi)?;
            if p <= 0.0 {
                return Ok(AscentPoint {
                    a,
                    rho,
                    value: f64::NEG_INFINITY,
                });
            }
            value += f * p.ln();
        }
    }
    if lambda > 0.0 {
        let values = rho.matrix().symmetric_eigenvalues();
        let s: f64 = values
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| -v * v.ln())
            .sum();
        value += lambda * (s - s_max);
    }
    Ok(AscentPoint { a, rho, value })
}

/// Gradient of the objective with respect to `A` at a normalized point.
fn ascent_gradient(pt: &AscentPoint, freqs: &[f64], pom: &Pom, lambda: f64) -> Result<CMatrix> {
    let d = pom.dim();
    let mut g = HermitianOperator::zeros(d);
    for (f, pi) in freqs.iter().zip(pom.outcomes()) {
        if *f > 0.0 {
            let p = crate::linalg::trace_inner_product(&pt.rho, pi)?;
            g.add_scaled(f / p, pi);
        }
    }
    if lambda > 0.0 {
        let eig = hermitian_eigensystem(&pt.rho)?;
        let log = eig.rebuild(|v| v.max(1e-300).ln());
        g.add_scaled(-lambda, &log);
        g.add_scaled(-lambda, &HermitianOperator::identity(d));
    }
    let mean = crate::linalg::trace_inner_product(&g, &pt.rho)?;
    g.add_scaled(-mean, &HermitianOperator::identity(d));
    Ok(&pt.a * g.matrix() * Complex64::new(2.0, 0.0))
}

/// Gradient ascent on `λ(S(ρ) − log D) + Σ_j f_j log p_j` over
/// `ρ = A†A / tr{A†A}`, starting from the maximally mixed state.
pub fn steepest_ascent_mlme(
    data: &CountData,
    pom: &Pom,
    lambda: f64,
    cfg: &SteepestAscentConfig,
) -> Result<SteepestAscentResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidData(format!("lambda {lambda} must be non-negative")));
    }
    data.check(pom)?;
    let freqs = data.frequencies();
    let d = pom.dim();
    let s_max = (d as f64).ln();
    let run = || -> Result<SteepestAscentResult> {
        let mut pt = ascent_point(CMatrix::identity(d, d), &freqs, pom, lambda, s_max)?;
        let mut step: f64 = 1.0;
        let mut gnorm = f64::INFINITY;
        for it in 0..cfg.max_iterations {
            let grad = ascent_gradient(&pt, &freqs, pom, lambda)?;
            gnorm = grad.norm();
            if gnorm < cfg.tol {
                return Ok(SteepestAscentResult {
                    estimator: DensityMatrix::from_op_unchecked(pt.rho),
                    objective: pt.value,
                    gradient_norm: gnorm,
                    iterations: it,
                    converged: true,
                });
            }
            step = (step * 2.0).min(1e6);
            let mut accepted = false;
            while step > 1e-16 {
                let trial = ascent_point(&pt.a + &grad * Complex64::new(step, 0.0), &freqs, pom, lambda, s_max)?;
                if trial.value >= pt.value + 1e-4 * step * gnorm * gnorm {
                    pt = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok(SteepestAscentResult {
            estimator: DensityMatrix::from_op_unchecked(pt.rho),
            objective: pt.value,
            gradient_norm: gnorm,
            iterations: cfg.max_iterations,
            converged: false,
        })
    };
    run().stage(Stage::SteepestAscent)
}
