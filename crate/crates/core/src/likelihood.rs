//! Measurement model, log-likelihood, and the RρR maximum-likelihood iteration.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::rank_of_operator_set;
use crate::config::MlConfig;
use crate::error::{Error, Result};
use crate::io::MatrixDoc;
use crate::linalg::{
    cholesky, hermitian_eigensystem, trace_product_unchecked, CMatrix, DensityMatrix, HermitianOperator,
    PSD_TOL,
};

/// Probabilities at or below this are treated as zero when the outcome was observed.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1e-300;

/// Probability operator measurement: PSD outcomes summing to the identity.
#[derive(Clone, Debug)]
pub struct Pom {
    outcomes: Vec<HermitianOperator>,
}

impl Pom {
    pub fn new(outcomes: Vec<HermitianOperator>) -> Result<Self> {
        let first = outcomes.first().ok_or(Error::Empty("measurement outcomes"))?;
        let dim = first.dim();
        let mut sum = HermitianOperator::zeros(dim);
        for (j, pi) in outcomes.iter().enumerate() {
            if pi.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: pi.dim(),
                });
            }
            let min = pi.min_eigenvalue()?;
            if min < -PSD_TOL {
                return Err(Error::InvalidPom(format!(
                    "outcome {j} has eigenvalue {min:.3e}"
                )));
            }
            sum.add_scaled(1.0, pi);
        }
        let dev = (sum.matrix() - CMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        if dev > 1e-9 {
            return Err(Error::InvalidPom(format!(
                "outcomes sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self { outcomes })
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].dim()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[HermitianOperator] {
        &self.outcomes
    }

    /// Von Neumann measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        let outcomes = (0..dim)
            .map(|j| DensityMatrix::basis_state(dim, j).into_op())
            .collect();
        Self { outcomes }
    }

    pub fn to_doc(&self) -> PomDoc {
        PomDoc {
            dim: self.dim(),
            outcomes: self.outcomes.iter().map(MatrixDoc::from).collect(),
        }
    }

    pub fn from_doc(doc: &PomDoc) -> Result<Self> {
        let outcomes = doc
            .outcomes
            .iter()
            .map(|m| m.to_operator())
            .collect::<Result<Vec<_>>>()?;
        let pom = Self::new(outcomes)?;
        if pom.dim() != doc.dim {
            return Err(Error::DimensionMismatch {
                expected: doc.dim,
                found: pom.dim(),
            });
        }
        Ok(pom)
    }
}

/// On-disk measurement: `{"dim": D, "outcomes": [matrix, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PomDoc {
    pub dim: usize,
    pub outcomes: Vec<MatrixDoc>,
}

/// Observed data: integer counts, or exact frequencies with a symbolic total.
#[derive(Clone, Debug, PartialEq)]
pub struct CountData {
    weights: Vec<f64>,
    counts: Option<Vec<u64>>,
}

impl CountData {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidData("total count must be at least 1".into()));
        }
        Ok(Self {
            weights: counts.iter().map(|&n| n as f64).collect(),
            counts: Some(counts),
        })
    }

    /// Noise-free data: frequencies equal to the given probabilities.
    pub fn exact(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::Empty("frequencies"));
        }
        if frequencies.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::InvalidData("frequencies must be non-negative".into()));
        }
        let sum: f64 = frequencies.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidData(format!("frequencies sum to {sum}")));
        }
        Ok(Self {
            weights: frequencies,
            counts: None,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `n_j` for count data, `f_j` in exact mode.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.counts.is_none()
    }

    /// `N`, or 1 in exact mode.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total();
        self.weights.iter().map(|w| w / n).collect()
    }

    pub(crate) fn check(&self, pom: &Pom) -> Result<()> {
        if self.len() != pom.len() {
            return Err(Error::InvalidData(format!(
                "{} entries for {} outcomes",
                self.len(),
                pom.len()
            )));
        }
        Ok(())
    }

    pub fn to_doc(&self, pom_path: Option<String>) -> DataDoc {
        DataDoc {
            counts: self.counts.clone(),
            frequencies: if self.is_exact() {
                Some(self.weights.clone())
            } else {
                None
            },
            pom: pom_path,
        }
    }

    pub fn from_doc(doc: &DataDoc) -> Result<Self> {
        match (&doc.counts, &doc.frequencies) {
            (Some(c), _) => Self::from_counts(c.clone()),
            (None, Some(f)) => Self::exact(f.clone()),
            (None, None) => Err(Error::InvalidData("neither counts nor frequencies".into())),
        }
    }
}

/// On-disk data: `{"counts": [...], "pom": "<path>"}` or `{"frequencies": [...]}`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DataDoc {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frequencies: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pom: Option<String>,
}

/// `p_j = tr{ρΠ_j}`, negative round-off clamped to zero.
pub fn probabilities(rho: &DensityMatrix, pom: &Pom) -> Result<Vec<f64>> {
    if rho.dim() != pom.dim() {
        return Err(Error::DimensionMismatch {
            expected: pom.dim(),
            found: rho.dim(),
        });
    }
    Ok(probabilities_unchecked(rho, pom))
}

fn probabilities_unchecked(rho: &HermitianOperator, pom: &Pom) -> Vec<f64> {
    pom.outcomes
        .iter()
        .map(|pi| trace_product_unchecked(rho, pi).max(0.0))
        .collect()
}

fn loglik_of(weights: &[f64], probs: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&n, &p) in weights.iter().zip(probs) {
        if n == 0.0 {
            continue;
        }
        if p <= IMPOSSIBLE_PROBABILITY {
            return f64::NEG_INFINITY;
        }
        total += n * p.ln();
    }
    total
}

/// `Σ_j n_j log p_j`; `-∞` when an observed outcome has zero probability.
pub fn log_likelihood(data: &CountData, rho: &DensityMatrix, pom: &Pom) -> Result<f64> {
    data.check(pom)?;
    Ok(loglik_of(data.weights(), &probabilities(rho, pom)?))
}

/// Log-likelihood evaluated from probabilities instead of a state.
pub fn log_likelihood_of_probabilities(data: &CountData, probs: &[f64]) -> f64 {
    loglik_of(data.weights(), probs)
}

#[derive(Clone, Debug)]
pub struct MlSolution {
    pub rho_ml: DensityMatrix,
    pub probabilities: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖P(R − I)P‖` on the support `P` of the estimator.
    pub stationarity_residual: f64,
    /// Largest log-likelihood drop between accepted iterates.
    pub max_loglik_decrease: f64,
    /// Smallest eigenvalue seen at the periodic positivity audits.
    pub min_audited_eigenvalue: f64,
    /// Largest trace error seen at the periodic audits.
    pub max_audited_trace_error: f64,
}

/// `R = Σ_j (f_j / p_j) Π_j` over observed outcomes.
fn r_operator(freqs: &[f64], probs: &[f64], pom: &Pom) -> HermitianOperator {
    let mut r = HermitianOperator::zeros(pom.dim());
    for ((&f, &p), pi) in freqs.iter().zip(probs).zip(&pom.outcomes) {
        if f > 0.0 && p > IMPOSSIBLE_PROBABILITY {
            r.add_scaled(f / p, pi);
        }
    }
    r
}

fn support_residual(rho: &HermitianOperator, r: &HermitianOperator) -> Result<f64> {
    let eig = hermitian_eigensystem(rho)?;
    let d = rho.dim();
    let cols: Vec<usize> = (0..d).filter(|&j| eig.values[j] > 1e-10).collect();
    let mut p = CMatrix::zeros(d, cols.len());
    for (c, &j) in cols.iter().enumerate() {
        p.set_column(c, &eig.vectors.column(j));
    }
    let diff = r.matrix() - CMatrix::identity(d, d);
    let block = p.adjoint() * diff * &p;
    Ok(block.norm())
}

/// Linear inversion for informationally complete data; `Some` only when the
/// inverted operator is a state that reproduces the frequencies.
fn linear_inversion(freqs: &[f64], pom: &Pom) -> Option<DensityMatrix> {
    let d = pom.dim();
    let cols: Vec<DVector<f64>> = pom.outcomes.iter().map(|p| p.real_coords()).collect();
    let a = nalgebra::DMatrix::from_columns(&cols).transpose();
    let f = DVector::from_column_slice(freqs);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&f, 1e-12).ok()?;
    if (&a * &x - &f).amax() > 1e-12 {
        return None;
    }
    let op = HermitianOperator::from_real_coords(d, &x).ok()?;
    let eig = hermitian_eigensystem(&op).ok()?;
    if eig.values[0] < -PSD_TOL {
        return None;
    }
    let clamped = eig.rebuild(|v| v.max(0.0));
    let t = clamped.trace();
    Some(DensityMatrix::from_op_unchecked(clamped.scaled(1.0 / t)))
}

/// Maximum-likelihood estimate from the maximally mixed state.
pub fn ml_estimate(data: &CountData, pom: &Pom, cfg: &MlConfig) -> Result<MlSolution> {
    data.check(pom)?;
    let d = pom.dim();
    let freqs = data.frequencies();
    if rank_of_operator_set(pom.outcomes(), 1e-10)? == d * d {
        if let Some(rho) = linear_inversion(&freqs, pom) {
            let probs = probabilities_unchecked(&rho, pom);
            let r = r_operator(&freqs, &probs, pom);
            return Ok(MlSolution {
                loglik: loglik_of(data.weights(), &probs),
                stationarity_residual: support_residual(&rho, &r)?,
                probabilities: probs,
                rho_ml: rho,
                iterations: 0,
                converged: true,
                max_loglik_decrease: 0.0,
                min_audited_eigenvalue: 0.0,
                max_audited_trace_error: 0.0,
            });
        }
    }
    ml_estimate_from(data, pom, DensityMatrix::maximally_mixed(d), cfg)
}

/// RρR iteration from an arbitrary full-rank start, with step dilution
/// `ρ ← (1−ε)ρ + ε·RρR/tr{RρR}` and `ε` halved whenever the likelihood drops.
pub fn ml_estimate_from(
    data: &CountData,
    pom: &Pom,
    start: DensityMatrix,
    cfg: &MlConfig,
) -> Result<MlSolution> {
    data.check(pom)?;
    if start.dim() != pom.dim() {
        return Err(Error::DimensionMismatch {
            expected: pom.dim(),
            found: start.dim(),
        });
    }
    let freqs = data.frequencies();
    let rho = start.into_op();
    let probs = probabilities_unchecked(&rho, pom);
    // per-shot log-likelihood keeps the stopping rule independent of N
    let mut ascent = Ascent {
        loglik: loglik_of(&freqs, &probs),
        rho,
        probs,
        iterations: 0,
        converged: false,
        max_decrease: 0.0,
        min_eig: f64::INFINITY,
        max_trace_err: 0.0,
    };
    let warm = MlConfig {
        max_iterations: cfg.max_iterations.min(WARM_ITERATIONS),
        ..cfg.clone()
    };
    ascent.run(&freqs, pom, &warm)?;
    if let Some(better) = ascent.barrier_newton(&freqs, pom, cfg)? {
        ascent = better;
    }
    if !ascent.converged {
        let rest = MlConfig {
            max_iterations: cfg.max_iterations.saturating_sub(ascent.iterations),
            ..cfg.clone()
        };
        ascent.run(&freqs, pom, &rest)?;
        if let Some(better) = ascent.barrier_newton(&freqs, pom, cfg)? {
            ascent = better;
        }
    }
    if let Some(better) = ascent.polish(&freqs, pom, cfg)? {
        ascent = better;
    }
    // renormalize away accumulated round-off
    let rho = ascent.rho.scaled(1.0 / ascent.rho.trace());
    let rho = DensityMatrix::new(rho)?;
    let probs = probabilities_unchecked(&rho, pom);
    let r = r_operator(&freqs, &probs, pom);
    Ok(MlSolution {
        loglik: loglik_of(data.weights(), &probs),
        stationarity_residual: support_residual(&rho, &r)?,
        probabilities: probs,
        rho_ml: rho,
        iterations: ascent.iterations,
        converged: ascent.converged,
        max_loglik_decrease: ascent.max_decrease,
        min_audited_eigenvalue: ascent.min_eig,
        max_audited_trace_error: ascent.max_trace_err,
    })
}

/// Iterations over which the contraction rate of the steps is measured.
const RATE_WINDOW: usize = 10;

/// Geometric-tail estimate `δ q / (1 − q)` of the distance still to travel,
/// from the last step `δ` and the contraction rate `q` over the window.
fn remaining_change(recent: &VecDeque<f64>) -> f64 {
    let last = recent[recent.len() - 1];
    if recent.len() <= RATE_WINDOW || last == 0.0 {
        return last;
    }
    let q = (last / recent[0]).powf(1.0 / RATE_WINDOW as f64);
    if q < 1.0 {
        last * q / (1.0 - q)
    } else {
        f64::INFINITY
    }
}

const NEWTON_STEPS: usize = 200;

/// Barrier weights run from `BARRIER_START` down to `tol · BARRIER_END`.
const BARRIER_START: f64 = 1e-3;
const BARRIER_END: f64 = 1e-4;

/// Newton decrement, relative to `μ`, at which a barrier stage ends.
const BARRIER_PRECISION: f64 = 1e-3;

/// RρR iterations before the first Newton attempt.
const WARM_ITERATIONS: usize = 1000;

#[derive(Clone)]
struct Ascent {
    rho: HermitianOperator,
    probs: Vec<f64>,
    loglik: f64,
    iterations: usize,
    converged: bool,
    max_decrease: f64,
    min_eig: f64,
    max_trace_err: f64,
}

impl Ascent {
    /// Diluted RρR steps `ρ ← (1−ε)ρ + ε·RρR/tr{RρR}`.
    fn run(&mut self, freqs: &[f64], pom: &Pom, cfg: &MlConfig) -> Result<()> {
        let mut eps = 1.0_f64;
        let mut recent = VecDeque::with_capacity(RATE_WINDOW + 1);
        self.converged = false;
        for _ in 0..cfg.max_iterations {
            self.iterations += 1;
            let r = r_operator(freqs, &self.probs, pom);
            let rrr = HermitianOperator::from_matrix_unchecked(r.matrix() * self.rho.matrix() * r.matrix());
            let target = rrr.scaled(1.0 / rrr.trace());
            let mut accepted = None;
            let mut trial = eps;
            while trial >= 1e-12 {
                let mut cand = self.rho.scaled(1.0 - trial);
                cand.add_scaled(trial, &target);
                let cp = probabilities_unchecked(&cand, pom);
                let cl = loglik_of(freqs, &cp);
                if cl >= self.loglik - 1e-15 * self.loglik.abs() {
                    accepted = Some((cand, cp, cl));
                    break;
                }
                trial *= 0.5;
            }
            let Some((cand, cp, cl)) = accepted else {
                self.converged = true;
                break;
            };
            eps = (2.0 * trial).min(1.0);
            let dp = cp
                .iter()
                .zip(&self.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            let dl = cl - self.loglik;
            self.max_decrease = self.max_decrease.max(-dl);
            self.rho = cand;
            self.probs = cp;
            self.loglik = cl;
            if self.iterations % cfg.check_every == 0 {
                let e = hermitian_eigensystem(&self.rho)?;
                self.min_eig = self.min_eig.min(e.values[0]);
                self.max_trace_err = self.max_trace_err.max((self.rho.trace() - 1.0).abs());
                if e.values[0] < -PSD_TOL {
                    return Err(Error::NotPositive {
                        min_eigenvalue: e.values[0],
                    });
                }
            }
            recent.push_back(dp);
            if recent.len() > RATE_WINDOW + 1 {
                recent.pop_front();
            }
            if dl.abs() < cfg.tol && remaining_change(&recent) < cfg.tol {
                self.converged = true;
                break;
            }
        }
        Ok(())
    }

    /// `λ_max(R) − 1`, an upper bound on the per-shot log-likelihood gap.
    fn optimality_gap(&self, freqs: &[f64], pom: &Pom) -> Result<f64> {
        let r = r_operator(freqs, &self.probs, pom);
        let values = hermitian_eigensystem(&r)?.values;
        Ok(values[values.len() - 1] - 1.0)
    }

    /// Barrier path following over all states, from a full-rank iterate.
    fn barrier_newton(&self, freqs: &[f64], pom: &Pom, cfg: &MlConfig) -> Result<Option<Ascent>> {
        // RρR may already sit numerically on the boundary; start from a
        // slightly mixed copy so the barrier Hessian is well conditioned
        let d = self.rho.dim();
        let mut start = self.rho.scaled(1.0 - BARRIER_START);
        start.add_scaled(BARRIER_START / d as f64, &HermitianOperator::identity(d));
        let Some((rho, steps)) = barrier_path(freqs, pom.outcomes(), &start, cfg)? else {
            return Ok(None);
        };
        self.adopt(rho, steps, freqs, pom, cfg)
    }

    /// RρR and the barrier path both leave small eigenvalues where the
    /// maximum is rank deficient. Near the end of the central path these
    /// satisfy `λ ≈ μ / (1 − ⟨v|R|v⟩)` while the support keeps
    /// `1 − ⟨v|R|v⟩ ≈ μ / λ`, so `λ < 1 − ⟨v|R|v⟩` separates them. Drop the
    /// former and follow the barrier path on the remaining support.
    fn polish(&self, freqs: &[f64], pom: &Pom, cfg: &MlConfig) -> Result<Option<Ascent>> {
        let d = self.rho.dim();
        let e = hermitian_eigensystem(&self.rho)?;
        let r = r_operator(freqs, &self.probs, pom).into_matrix();
        let keep: Vec<usize> = (0..d)
            .filter(|&j| {
                let v = e.vectors.column(j);
                let pull = (v.adjoint() * &r * v)[(0, 0)].re;
                e.values[j] >= 1.0 - pull
            })
            .collect();
        if keep.len() == d || keep.is_empty() {
            return Ok(None);
        }
        let mut frame = CMatrix::zeros(d, keep.len());
        for (c, &j) in keep.iter().enumerate() {
            frame.set_column(c, &e.vectors.column(j));
        }
        let compress = |op: &HermitianOperator| {
            HermitianOperator::from_matrix_unchecked(frame.adjoint() * op.matrix() * &frame)
        };
        let outcomes: Vec<HermitianOperator> = pom.outcomes.iter().map(compress).collect();
        let sigma = compress(&self.rho);
        let sigma = sigma.scaled(1.0 / sigma.trace());
        let Some((sigma, steps)) = barrier_path(freqs, &outcomes, &sigma, cfg)? else {
            return Ok(None);
        };
        let rho = HermitianOperator::from_matrix_unchecked(&frame * sigma.matrix() * frame.adjoint());
        self.adopt(rho, steps, freqs, pom, cfg)
    }

    /// Replaces the iterate when the likelihood does not drop.
    fn adopt(
        &self,
        rho: HermitianOperator,
        steps: usize,
        freqs: &[f64],
        pom: &Pom,
        cfg: &MlConfig,
    ) -> Result<Option<Ascent>> {
        let probs = probabilities_unchecked(&rho, pom);
        let loglik = loglik_of(freqs, &probs);
        if !(loglik >= self.loglik - 1e-15 * self.loglik.abs()) {
            return Ok(None);
        }
        let e = hermitian_eigensystem(&rho)?;
        let mut next = Ascent {
            min_eig: self.min_eig.min(e.values[0]),
            max_trace_err: self.max_trace_err.max((rho.trace() - 1.0).abs()),
            iterations: self.iterations + steps,
            rho,
            probs,
            loglik,
            ..self.clone()
        };
        next.converged |= next.optimality_gap(freqs, pom)? <= cfg.tol;
        Ok(Some(next))
    }
}

/// Damped Newton path following on `Σ_j f_j log p_j + μ log det σ` over all
/// traceless directions, with `μ` shrinking to zero. RρR can contract very
/// slowly on ill-conditioned measurements; this reaches the end of the
/// central path in a few dozen steps. The outcomes may be compressed to a
/// subspace. Returns the final state and the number of steps taken.
fn barrier_path(
    freqs: &[f64],
    outcomes: &[HermitianOperator],
    start: &HermitianOperator,
    cfg: &MlConfig,
) -> Result<Option<(HermitianOperator, usize)>> {
    let d = start.dim();
    let k = outcomes.len();
    let directions = traceless_directions(d)?;
    let n = directions.len();
    if n == 0 {
        return Ok(Some((start.clone(), 0)));
    }
    if cholesky(start.matrix()).is_none() {
        return Ok(None);
    }
    let probabilities = |sigma: &HermitianOperator| -> Vec<f64> {
        outcomes.iter().map(|pi| trace_product_unchecked(sigma, pi).max(0.0)).collect()
    };
    let objective = |sigma: &HermitianOperator, probs: &[f64], mu: f64| -> Option<f64> {
        let l = cholesky(sigma.matrix())?;
        let log_det: f64 = (0..d).map(|j| 2.0 * l[(j, j)].re.ln()).sum();
        Some(loglik_of(freqs, probs) + mu * log_det)
    };
    let m = DMatrix::from_fn(k, n, |i, j| trace_product_unchecked(&outcomes[i], &directions[j]));
    let mut sigma = start.clone();
    let mut probs = probabilities(&sigma);
    let mut mu = BARRIER_START;
    let mut steps = 0;
    // numerical trouble at small μ ends the path at the last centred point
    'path: while mu >= cfg.tol * BARRIER_END && steps < NEWTON_STEPS {
        while steps < NEWTON_STEPS {
            let Some(inv) = sigma.matrix().clone().try_inverse() else {
                break 'path;
            };
            let x: Vec<CMatrix> = directions.iter().map(|b| &inv * b.matrix()).collect();
            let w = DVector::from_fn(k, |i, _| if freqs[i] > 0.0 { freqs[i] / probs[i] } else { 0.0 });
            let g = m.transpose() * &w + DVector::from_fn(n, |a, _| mu * x[a].trace().re);
            let weighted = DMatrix::from_fn(k, n, |i, j| m[(i, j)] * w[i] / probs[i]);
            let mut h = m.transpose() * weighted;
            let xt: Vec<CMatrix> = x.iter().map(|xa| xa.transpose()).collect();
            for a in 0..n {
                for b in a..n {
                    let t = mu * xt[a].component_mul(&x[b]).sum().re;
                    h[(a, b)] += t;
                    if a != b {
                        h[(b, a)] += t;
                    }
                }
            }
            // Jacobi scaling keeps the factorization stable when μρ⁻¹ dominates
            let scale = DVector::from_fn(n, |a, _| 1.0 / h[(a, a)].sqrt());
            let h = DMatrix::from_fn(n, n, |a, b| h[(a, b)] * scale[a] * scale[b]);
            let Some(chol) = h.cholesky() else {
                break 'path;
            };
            let c = chol.solve(&g.component_mul(&scale)).component_mul(&scale);
            let decrement = g.dot(&c);
            if !(decrement > BARRIER_PRECISION * mu) {
                break;
            }
            let Some(f0) = objective(&sigma, &probs, mu) else {
                break 'path;
            };
            let mut delta = HermitianOperator::zeros(d);
            for (cj, dir) in c.iter().zip(&directions) {
                delta.add_scaled(*cj, dir);
            }
            let mut t = 1.0;
            let mut accepted = None;
            while t >= 1e-12 {
                let mut cand = sigma.clone();
                cand.add_scaled(t, &delta);
                let cp = probabilities(&cand);
                if objective(&cand, &cp, mu).is_some_and(|f| f >= f0 + 1e-4 * t * decrement) {
                    accepted = Some((cand, cp));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, next_probs)) = accepted else {
                break;
            };
            steps += 1;
            sigma = next;
            probs = next_probs;
        }
        mu *= 0.1;
    }
    Ok(Some((sigma, steps)))
}

/// Traceless Hermitian directions spanning the tangent space of the states.
fn traceless_directions(d: usize) -> Result<Vec<HermitianOperator>> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d * d {
        if j + 1 == d {
            continue;
        }
        let mut x = DVector::zeros(d * d);
        x[j] = 1.0;
        if j < d {
            x[d - 1] = -1.0;
        }
        out.push(HermitianOperator::from_real_coords(d, &x)?);
    }
    Ok(out)
}
