//! Path-following barrier method for linear objectives under a linear matrix
//! inequality:
//!
//! ```text
//!     maximize   c·x
//!     subject to F(x) = F_0 + Σ_k x_k F_k ≻ 0
//! ```
//!
//! with `F_k` complex Hermitian. Each centering step maximizes
//! `t·c·x + log det F(x)` by damped Newton. On the central path
//! `Z = F(x)⁻¹ / t` is dual feasible with duality gap exactly `r / t`
//! (`r` the matrix size), which is the certificate reported on exit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, CMatrix};

pub(crate) struct Lmi<'a> {
    pub f0: &'a CMatrix,
    pub fk: &'a [CMatrix],
}

impl Lmi<'_> {
    fn size(&self) -> usize {
        self.f0.nrows()
    }

    pub fn eval(&self, x: &DVector<f64>) -> CMatrix {
        let mut f = self.f0.clone();
        for (xk, fk) in x.iter().zip(self.fk) {
            if *xk != 0.0 {
                f.zip_apply(fk, |a, b| *a += b * Complex64::new(*xk, 0.0));
            }
        }
        f
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BarrierOptions {
    /// Target bound on `r / t` at exit.
    pub gap_tol: f64,
    pub max_newton_steps: usize,
    /// Barrier parameter growth per outer iteration.
    pub growth: f64,
    /// Stop as soon as the objective exceeds this value.
    pub stop_above: Option<f64>,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            max_newton_steps: 2_000,
            growth: 10.0,
            stop_above: None,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct BarrierSolution {
    pub x: DVector<f64>,
    pub gap: f64,
    pub newton_steps: usize,
}

fn log_det_chol(l: &CMatrix) -> f64 {
    2.0 * (0..l.nrows()).map(|j| l[(j, j)].re.ln()).sum::<f64>()
}

/// Gradient of `log det F` and the Gram matrix `tr{F⁻¹F_k F⁻¹F_l}`.
fn barrier_derivatives(l: &CMatrix, fk: &[CMatrix]) -> (DVector<f64>, DMatrix<f64>) {
    let n = fk.len();
    let scaled: Vec<CMatrix> = fk
        .iter()
        .map(|f| {
            let y = l.solve_lower_triangular(f).expect("nonsingular factor");
            l.solve_lower_triangular(&y.adjoint())
                .expect("nonsingular factor")
        })
        .collect();
    let grad = DVector::from_fn(n, |k, _| {
        (0..l.nrows()).map(|j| scaled[k][(j, j)].re).sum::<f64>()
    });
    let mut gram = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            // tr{A_a A_b} for Hermitian A is Σ_ij A_a[ij] conj(A_b[ij])
            let v: f64 = scaled[a]
                .iter()
                .zip(scaled[b].iter())
                .map(|(p, q)| p.re * q.re + p.im * q.im)
                .sum();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    (grad, gram)
}

fn solve_spd(mut m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = (0..m.nrows()).map(|j| m[(j, j)]).fold(0.0_f64, f64::max);
    for attempt in 0..6 {
        if let Some(ch) = m.clone().cholesky() {
            return Some(ch.solve(rhs));
        }
        let reg = scale * 1e-14 * 10f64.powi(attempt * 2);
        for j in 0..m.nrows() {
            m[(j, j)] += reg;
        }
    }
    None
}

/// Maximizes `c·x` over `{x : F(x) ≻ 0}` starting from a strictly feasible `x0`.
pub(crate) fn maximize(
    lmi: &Lmi<'_>,
    c: &DVector<f64>,
    x0: DVector<f64>,
    opts: &BarrierOptions,
) -> Result<BarrierSolution> {
    let r = lmi.size() as f64;
    let mut x = x0;
    let mut l = cholesky(&lmi.eval(&x)).ok_or(Error::NotPositive {
        min_eigenvalue: 0.0,
    })?;
    let cnorm = c.norm();
    if cnorm == 0.0 || lmi.fk.is_empty() {
        return Ok(BarrierSolution {
            x,
            gap: 0.0,
            newton_steps: 0,
        });
    }
    let mut t = 1.0 / cnorm;
    let mut steps = 0;
    loop {
        // centering
        loop {
            if steps >= opts.max_newton_steps {
                return Err(Error::SolverStall { iterations: steps });
            }
            steps += 1;
            let (gb, gram) = barrier_derivatives(&l, lmi.fk);
            let grad = c * t + gb;
            let Some(dx) = solve_spd(gram, &grad) else {
                return Err(Error::SolverStall { iterations: steps });
            };
            let decrement = grad.dot(&dx);
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let phi0 = t * c.dot(&x) + log_det_chol(&l);
            let slope = decrement;
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-14 {
                let xn = &x + &dx * s;
                if let Some(ln) = cholesky(&lmi.eval(&xn)) {
                    let gain = t * c.dot(&xn) + log_det_chol(&ln) - phi0;
                    if gain > 0.0 && gain >= 0.25 * s * slope {
                        x = xn;
                        l = ln;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                // round-off floor: the decrement can no longer be realized
                break;
            }
            if let Some(stop) = opts.stop_above {
                if c.dot(&x) > stop {
                    return Ok(BarrierSolution {
                        x,
                        gap: f64::INFINITY,
                        newton_steps: steps,
                    });
                }
            }
        }
        let gap = r / t;
        if gap <= opts.gap_tol {
            return Ok(BarrierSolution {
                x,
                gap,
                newton_steps: steps,
            });
        }
        t *= opts.growth;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    /// maximize x subject to diag(1 - x, 1 + x) ≻ 0 has optimum 1.
    #[test]
    fn one_dimensional_interval() {
        let f0 = diag(&[1.0, 1.0]);
        let fk = vec![diag(&[-1.0, 1.0])];
        let lmi = Lmi { f0: &f0, fk: &fk };
        let c = DVector::from_vec(vec![1.0]);
        let sol = maximize(&lmi, &c, DVector::zeros(1), &BarrierOptions::default()).unwrap();
        assert!((c.dot(&sol.x) - 1.0).abs() < 1e-6);
        assert!(sol.gap <= 1e-7);
        let min = maximize(&lmi, &(-c), DVector::zeros(1), &BarrierOptions::default()).unwrap();
        assert!((min.x[0] + 1.0).abs() < 1e-6);
    }

    /// The unit disc as a 2×2 LMI: [[1+a, b],[b, 1-a]] ≻ 0 ⇔ a² + b² < 1.
    #[test]
    fn disc_linear_objective() {
        let f0 = diag(&[1.0, 1.0]);
        let mut fb = CMatrix::zeros(2, 2);
        fb[(0, 1)] = Complex64::new(1.0, 0.0);
        fb[(1, 0)] = Complex64::new(1.0, 0.0);
        let fk = vec![diag(&[1.0, -1.0]), fb];
        let lmi = Lmi { f0: &f0, fk: &fk };
        let c = DVector::from_vec(vec![0.6, -0.8]);
        let sol = maximize(&lmi, &c, DVector::zeros(2), &BarrierOptions::default()).unwrap();
        assert!((c.dot(&sol.x) - 1.0).abs() < 1e-6);
        assert!(c.dot(&sol.x) <= 1.0 + 1e-12);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let f0 = diag(&[1.0, -1.0]);
        let fk = vec![diag(&[1.0, 1.0])];
        let lmi = Lmi { f0: &f0, fk: &fk };
        let c = DVector::from_vec(vec![1.0]);
        assert!(maximize(&lmi, &c, DVector::zeros(1), &BarrierOptions::default()).is_err());
    }
}
