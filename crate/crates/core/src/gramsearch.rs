//! Deterministic generation of linearly independent ML estimators by
//! maximizing the smallest eigenvalue of their normalized Gram matrix.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::build_basis;
use crate::config::{Config, GramSearchConfig, PatternSearchConfig};
use crate::convexset::{is_singleton, optimize_linear, ConvexSetModel, Face, Sense};
use crate::entropy::{gamma_if_defined, mlme_from_members, CombinationVector, MlmeResult};
use crate::error::{Error, Result, Stage, StageExt};
use crate::likelihood::{log_likelihood, ml_estimate, CountData, MlSolution, Pom};
use crate::linalg::{
    cholesky, trace_product_unchecked, von_neumann_entropy, CMatrix, DensityMatrix,
    HermitianOperator,
};
use crate::random::random_hermitian;

/// `M_jk = tr{ρ_jρ_k} / sqrt(tr{ρ_j²} tr{ρ_k²})`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Smallest eigenvalue.
    pub fn sigma_min(&self) -> f64 {
        smallest_eigenvalue(self.entries.clone())
    }
}

fn smallest_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn normalized_gram(states: &[DensityMatrix]) -> Result<GramMatrix> {
    if states.is_empty() {
        return Err(Error::Empty("state list"));
    }
    let ops: Vec<&HermitianOperator> = states.iter().map(|s| s.op()).collect();
    gram_of(&ops).map(|entries| GramMatrix { entries })
}

fn gram_of(ops: &[&HermitianOperator]) -> Result<DMatrix<f64>> {
    let n = ops.len();
    let norms: Vec<f64> = ops.iter().map(|o| o.hs_norm()).collect();
    if norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate("zero Hilbert-Schmidt norm".into()));
    }
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = 1.0;
        for k in (j + 1)..n {
            let v = trace_product_unchecked(ops[j], ops[k]) / (norms[j] * norms[k]);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    Ok(m)
}

/// `σ_min` of the Gram matrix of fixed members plus one varying operator.
struct GramObjective<'a> {
    members: Vec<&'a HermitianOperator>,
    norms: Vec<f64>,
    base: DMatrix<f64>,
    /// Eigenvalues and eigenvectors of `base`.
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl<'a> GramObjective<'a> {
    fn new(members: &'a [DensityMatrix]) -> Result<Self> {
        let ops: Vec<&HermitianOperator> = members.iter().map(|m| m.op()).collect();
        let base = gram_of(&ops)?;
        let norms = ops.iter().map(|o| o.hs_norm()).collect();
        let eig = SymmetricEigen::new(base.clone());
        Ok(Self {
            members: ops,
            norms,
            base,
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    fn eval(&self, x: &HermitianOperator) -> f64 {
        let m = self.members.len();
        let nx = x.hs_norm();
        if !(nx > 0.0) {
            return 0.0;
        }
        let mut g = self.base.clone().resize(m + 1, m + 1, 0.0);
        g[(m, m)] = 1.0;
        for j in 0..m {
            let v = trace_product_unchecked(self.members[j], x) / (self.norms[j] * nx);
            g[(j, m)] = v;
            g[(m, j)] = v;
        }
        smallest_eigenvalue(g)
    }
}

/// Smallest root of `1 − μ − Σ w_i²/(λ_i − μ)`, the lowest eigenvalue of
/// `[[diag λ, w], [wᵀ, 1]]`, by safeguarded Newton from `guess`.
fn bordered_min_eigenvalue(lambda: &DVector<f64>, w: &DVector<f64>, guess: Option<f64>) -> f64 {
    let lmin = lambda.iter().copied().fold(1.0, f64::min);
    let wn = w.norm();
    let mut lo = lmin - wn - 1e-12;
    let mut hi = lmin;
    let f = |mu: f64| -> (f64, f64) {
        let mut val = 1.0 - mu;
        let mut der = -1.0;
        for (l, wi) in lambda.iter().zip(w.iter()) {
            let d = l - mu;
            val -= wi * wi / d;
            der -= wi * wi / (d * d);
        }
        (val, der)
    };
    if f(lo).0 < 0.0 {
        lo -= 1.0 + wn;
    }
    let mut mu = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => lo,
    };
    for _ in 0..200 {
        let (val, der) = f(mu);
        if val == 0.0 {
            return mu;
        }
        if val > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        let newton = mu - val / der;
        let next = if newton > lo && newton < hi && val.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - mu).abs() <= 1e-15 * (1.0 + mu.abs()) || hi - lo <= 1e-15 * (1.0 + lmin.abs()) {
            return next;
        }
        mu = next;
    }
    mu
}

/// The objective restricted to the chart: real coordinates `p0 + P b` of the
/// varying state, projected once onto the normalized members and expressed in
/// the eigenbasis `U` of their Gram matrix.
struct ChartObjective<'a> {
    gram: GramObjective<'a>,
    /// `Uᵀ R̂ p0` and `Uᵀ R̂ P`, with `R̂` the normalized member coordinates.
    u0: DVector<f64>,
    u: DMatrix<f64>,
    /// `|p0|²`, `Pᵀp0` and `PᵀP`.
    p0p0: f64,
    pp0: DVector<f64>,
    pp: DMatrix<f64>,
}

/// Cached quantities at one chart point.
#[derive(Clone)]
struct ChartPoint {
    b: DVector<f64>,
    local: CMatrix,
    u: DVector<f64>,
    ppb: DVector<f64>,
    norm2: f64,
}

impl<'a> ChartObjective<'a> {
    fn new(model: &'a ConvexSetModel) -> Result<Self> {
        let gram = GramObjective::new(model.members())?;
        let face = model.face();
        let p0 = face.lift(face.sigma0.clone()).real_coords();
        let n = face.len();
        let mut p = DMatrix::zeros(p0.len(), n);
        for (k, dir) in face.directions.iter().enumerate() {
            p.set_column(k, &face.lift(dir.clone()).real_coords());
        }
        let mut r = DMatrix::zeros(gram.members.len(), p0.len());
        for (j, m) in gram.members.iter().enumerate() {
            r.set_row(j, &(m.real_coords() / gram.norms[j]).transpose());
        }
        let ur = gram.vectors.transpose() * r;
        Ok(Self {
            u0: &ur * &p0,
            u: &ur * &p,
            p0p0: p0.norm_squared(),
            pp0: p.tr_mul(&p0),
            pp: p.tr_mul(&p),
            gram,
        })
    }

    fn point(&self, face: &Face, b: DVector<f64>) -> ChartPoint {
        let ppb = &self.pp * &b;
        ChartPoint {
            local: face.local(&b),
            u: &self.u0 + &self.u * &b,
            norm2: self.p0p0 + 2.0 * self.pp0.dot(&b) + b.dot(&ppb),
            ppb,
            b,
        }
    }

    /// The point `b + s e_k`, updated from `p`.
    fn step(&self, face: &Face, p: &ChartPoint, k: usize, s: f64) -> ChartPoint {
        let mut b = p.b.clone();
        b[k] += s;
        ChartPoint {
            b,
            local: &p.local + &face.directions[k] * Complex64::new(s, 0.0),
            u: &p.u + self.u.column(k) * s,
            ppb: &p.ppb + self.pp.column(k) * s,
            norm2: p.norm2 + 2.0 * s * (self.pp0[k] + p.ppb[k]) + s * s * self.pp[(k, k)],
        }
    }

    fn eval(&self, p: &ChartPoint, guess: Option<f64>) -> f64 {
        if !(p.norm2 > 0.0) {
            return 0.0;
        }
        bordered_min_eigenvalue(&self.gram.values, &(&p.u / p.norm2.sqrt()), guess)
    }
}

/// Result of one pattern search.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub candidate: DensityMatrix,
    pub sigma_min: f64,
    pub elapsed: Duration,
    pub evaluations: usize,
    pub timed_out: bool,
}

/// Decrease a step of length `h` must achieve to be accepted. Without it
/// the search can creep along flat curved ridges for millions of steps.
fn forcing(h: f64) -> f64 {
    1e-4 * h
}

const REPAIR_BISECTIONS: u32 = 60;
const REPAIR_EVALUATIONS: u32 = 2 * REPAIR_BISECTIONS + 10;

struct Search<'a> {
    model: &'a ConvexSetModel,
    objective: ChartObjective<'a>,
    deadline: Instant,
    /// Longest single evaluation so far; time is kept back for the repair step.
    slowest: Duration,
    evaluations: usize,
    timed_out: bool,
}

impl Search<'_> {
    /// Positivity violation `max(0, −λ_min)` at a chart point.
    fn violation(&self, p: &ChartPoint) -> Result<f64> {
        if cholesky(&p.local).is_some() {
            return Ok(0.0);
        }
        let op = HermitianOperator::from_matrix_unchecked(p.local.clone());
        Ok((-op.min_eigenvalue()?).max(0.0))
    }

    /// Augmented-Lagrangian merit (to be minimized). The penalty term is
    /// non-negative, so a point whose `−φ` already fails to beat `incumbent`
    /// is returned as `−φ` without measuring its violation.
    /// Returns the merit and `φ`.
    fn merit(
        &mut self,
        p: &ChartPoint,
        guess: Option<f64>,
        multiplier: f64,
        penalty: f64,
        incumbent: f64,
    ) -> Result<(f64, f64)> {
        self.evaluations += 1;
        let t0 = Instant::now();
        let phi = self.objective.eval(p, guess);
        if -phi >= incumbent {
            return Ok((-phi, phi));
        }
        let g = self.violation(p)?;
        self.slowest = self.slowest.max(t0.elapsed());
        let shifted = (g + multiplier / penalty).max(0.0);
        let merit = -phi + 0.5 * penalty * shifted * shifted - multiplier * multiplier / (2.0 * penalty);
        Ok((merit, phi))
    }

    fn expired(&mut self) -> bool {
        if Instant::now() + self.slowest * REPAIR_EVALUATIONS >= self.deadline {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Coordinate pattern search with opportunistic polling and
    /// Hooke-Jeeves pattern moves.
    fn poll_loop(
        &mut self,
        b: DVector<f64>,
        mut mesh: f64,
        multiplier: f64,
        penalty: f64,
        psc: &PatternSearchConfig,
    ) -> Result<DVector<f64>> {
        let face = self.model.face();
        let n = b.len();
        let mut current = self.objective.point(face, b);
        let (mut value, mut phi) = self.merit(&current, None, multiplier, penalty, f64::INFINITY)?;
        while mesh >= psc.mesh_floor && !self.expired() {
            let base = current.b.clone();
            let mut improved = false;
            'poll: for k in 0..n {
                for sign in [1.0, -1.0] {
                    if self.expired() {
                        break 'poll;
                    }
                    let trial = self.objective.step(face, &current, k, sign * mesh);
                    let (v, trial_phi) = self.merit(&trial, Some(phi), multiplier, penalty, value)?;
                    if v < value - forcing(mesh) {
                        current = trial;
                        value = v;
                        phi = trial_phi;
                        improved = true;
                        break 'poll;
                    }
                }
            }
            if improved {
                // extrapolate along the accepted move while it keeps paying off
                let mut stride = &current.b - &base;
                while !self.expired() {
                    let trial = self.objective.point(face, &current.b + &stride);
                    let (v, trial_phi) = self.merit(&trial, Some(phi), multiplier, penalty, value)?;
                    if !(v < value - forcing(stride.norm())) {
                        break;
                    }
                    current = trial;
                    value = v;
                    phi = trial_phi;
                    stride *= psc.expansion;
                }
                mesh *= psc.expansion;
            } else {
                mesh *= psc.contraction;
                current = self.objective.point(face, current.b);
            }
        }
        Ok(current.b)
    }
}

/// Pattern search over the set's chart for the state that keeps the Gram
/// matrix of `members ∪ {ρ}` as well conditioned as possible.
pub fn next_independent_estimator(
    model: &ConvexSetModel,
    psc: &PatternSearchConfig,
    start: &DensityMatrix,
) -> Result<Candidate> {
    if !(psc.mesh_floor > 0.0) || !(psc.time_cap > 0.0) {
        return Err(Error::InvalidData("mesh floor and time cap must be positive".into()));
    }
    let began = Instant::now();
    let face = model.face();
    let b0 = face.coordinates(start);
    if !face.is_positive(&b0) && face.min_eigenvalue(&b0)? < -1e-9 {
        return Err(Error::NotPositive {
            min_eigenvalue: face.min_eigenvalue(&b0)?,
        });
    }
    let mut search = Search {
        model,
        objective: ChartObjective::new(model)?,
        deadline: began + Duration::from_secs_f64(psc.time_cap),
        slowest: Duration::ZERO,
        evaluations: 0,
        timed_out: false,
    };
    let mut b = b0.clone();
    if face.len() > 0 {
        let mut multiplier = 0.0;
        let mut penalty = psc.penalty_init;
        let mut last_violation = f64::INFINITY;
        for outer in 0..psc.max_outer {
            let mesh = (psc.initial_mesh * psc.contraction.powi(outer as i32)).max(psc.mesh_floor);
            b = search.poll_loop(b, mesh, multiplier, penalty, psc)?;
            let g = search.violation(&search.objective.point(face, b.clone()))?;
            if g == 0.0 || search.expired() {
                break;
            }
            multiplier = (multiplier + penalty * g).max(0.0);
            if g > 0.25 * last_violation {
                penalty *= psc.penalty_growth;
            }
            last_violation = g;
        }
    }
    // pull a slightly infeasible result back toward the start
    if !face.is_positive(&b) {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..REPAIR_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let trial = &b0 + (&b - &b0) * mid;
            if face.is_positive(&trial) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        b = &b0 + (&b - &b0) * lo;
    }
    let op = face.point(&b);
    let sigma_min = search.objective.gram.eval(&op);
    let candidate = DensityMatrix::new(op).map_err(|_| Error::Degenerate("no positive candidate found".into()))?;
    Ok(Candidate {
        candidate,
        sigma_min,
        elapsed: began.elapsed(),
        evaluations: search.evaluations,
        timed_out: search.timed_out,
    })
}

/// Per-candidate bookkeeping from [`span_convex_set`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub sigma_min: f64,
    pub seconds: f64,
    pub evaluations: usize,
    pub timed_out: bool,
    pub accepted: bool,
}

/// Appends pattern-search candidates while they stay linearly independent.
pub fn span_convex_set(
    model: &mut ConvexSetModel,
    cfg: &GramSearchConfig,
    start: &DensityMatrix,
) -> Result<Vec<CandidateRecord>> {
    let mut records = Vec::new();
    while model.members().len() < model.max_members() {
        let c = next_independent_estimator(model, &cfg.pattern, start)?;
        let residual = model.constraint_residual(&c.candidate)?;
        let accepted = c.sigma_min > cfg.indep_tol && residual <= 1e-10;
        records.push(CandidateRecord {
            sigma_min: c.sigma_min,
            seconds: c.elapsed.as_secs_f64(),
            evaluations: c.evaluations,
            timed_out: c.timed_out,
            accepted,
        });
        if !accepted {
            break;
        }
        model.push_member_unchecked(c.candidate);
    }
    Ok(records)
}

/// Everything the pattern-search pipeline produced.
#[derive(Clone, Debug)]
pub struct PsMlmeOutput {
    pub result: MlmeResult,
    pub ml: MlSolution,
    pub singleton: bool,
    pub candidates: Vec<CandidateRecord>,
    pub model: ConvexSetModel,
}

/// ML estimation, a few boundary probes, the singleton short-circuit, Gram
/// pattern search and entropy maximization.
pub fn ps_mlme<R: Rng + ?Sized>(
    data: &CountData,
    pom: &Pom,
    rng: &mut R,
    cfg: &Config,
) -> Result<PsMlmeOutput> {
    let ml = ml_estimate(data, pom, &cfg.ml).stage(Stage::MaximumLikelihood)?;
    let basis = build_basis(pom, rng, &cfg.basis).stage(Stage::Basis)?;
    let mut model = ConvexSetModel::new(pom.clone(), basis.clone(), ml.rho_ml.clone(), &cfg.sdp)
        .stage(Stage::ConvexSet)?;
    let probes = cfg.gramsearch.probes.max(2);
    let senses: &[Sense] = if cfg.sdp.both_senses {
        &[Sense::Max, Sense::Min]
    } else {
        &[Sense::Max]
    };
    let mut recorded = 0;
    'probe: loop {
        let h = random_hermitian(pom.dim(), rng);
        for &sense in senses {
            let r = optimize_linear(&h, sense, &model, &cfg.sdp).stage(Stage::ConvexSet)?;
            model.record_probe(r.optimizer);
            recorded += 1;
            if recorded == probes {
                break 'probe;
            }
        }
    }
    let singleton = is_singleton(&model, probes, cfg.sdp.singleton_threshold).stage(Stage::ConvexSet)?;
    if singleton {
        let rho = ml.rho_ml.clone();
        let result = MlmeResult {
            entropy: von_neumann_entropy(&rho)?,
            gamma: gamma_if_defined(&rho, &basis)?,
            loglik: log_likelihood(data, &rho, pom)?,
            members: 1,
            combination: CombinationVector::vertex(1, 0),
            iterations: 0,
            converged: true,
            estimator: rho,
        };
        return Ok(PsMlmeOutput {
            result,
            ml,
            singleton,
            candidates: Vec::new(),
            model,
        });
    }
    let mut mixture = ml.rho_ml.op().clone();
    for p in model.probes() {
        mixture.add_scaled(1.0, p);
    }
    let start = DensityMatrix::normalized(mixture)?;
    let mut model = ConvexSetModel::new(pom.clone(), basis, start, &cfg.sdp).stage(Stage::ConvexSet)?;
    let start = model.anchor().clone();
    let candidates = span_convex_set(&mut model, &cfg.gramsearch, &start).stage(Stage::PatternSearch)?;
    let result = mlme_from_members(model.members(), model.basis(), data, pom, &cfg.entropy)?;
    Ok(PsMlmeOutput {
        result,
        ml,
        singleton,
        candidates,
        model,
    })
}
