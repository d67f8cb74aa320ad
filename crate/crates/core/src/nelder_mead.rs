//! Nelder-Mead simplex maximization, with the dimension-adaptive coefficients
//! of Gao and Han for large search spaces.

use nalgebra::DVector;

#[derive(Clone, Copy, Debug)]
pub(crate) struct NmOptions {
    pub initial_step: f64,
    /// Simplex diameter and function spread tolerance.
    pub tol: f64,
    pub max_evaluations: usize,
    pub adaptive: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct NmResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Coefficients {
    reflect: f64,
    expand: f64,
    contract: f64,
    shrink: f64,
}

impl Coefficients {
    fn new(n: usize, adaptive: bool) -> Self {
        if adaptive {
            let n = n as f64;
            Self {
                reflect: 1.0,
                expand: 1.0 + 2.0 / n,
                contract: 0.75 - 1.0 / (2.0 * n),
                shrink: 1.0 - 1.0 / n,
            }
        } else {
            Self {
                reflect: 1.0,
                expand: 2.0,
                contract: 0.5,
                shrink: 0.5,
            }
        }
    }
}

/// Maximizes `f` from a simplex with base vertex `x0` and axis steps.
pub(crate) fn maximize<F>(mut f: F, x0: DVector<f64>, opts: &NmOptions) -> NmResult
where
    F: FnMut(&DVector<f64>) -> f64,
{
    let n = x0.len();
    if n == 0 {
        let value = f(&x0);
        return NmResult {
            x: x0,
            value,
            evaluations: 1,
            converged: true,
        };
    }
    let k = Coefficients::new(n, opts.adaptive);
    // minimize g = -f
    let mut evals = 0;
    let mut g = |x: &DVector<f64>, evals: &mut usize| {
        *evals += 1;
        -f(x)
    };
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = g(&x0, &mut evals);
    simplex.push((x0.clone(), v0));
    for j in 0..n {
        let mut x = x0.clone();
        x[j] += opts.initial_step;
        let v = g(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| (x - &simplex[0].0).amax())
            .fold(0.0_f64, f64::max);
        if diameter <= opts.tol && spread.abs() <= opts.tol {
            converged = true;
            break;
        }
        if evals >= opts.max_evaluations {
            break;
        }
        let mut centroid = DVector::zeros(n);
        for (x, _) in &simplex[..n] {
            centroid += x;
        }
        centroid /= n as f64;
        let worst = simplex[n].0.clone();
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;
        let f_worst = simplex[n].1;

        let xr = &centroid + (&centroid - &worst) * k.reflect;
        let fr = g(&xr, &mut evals);
        if fr < f_best {
            let xe = &centroid + (&xr - &centroid) * k.expand;
            let fe = g(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = &centroid + (&xr - &centroid) * k.contract;
            let fc = g(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = &centroid + (&worst - &centroid) * k.contract;
            let fc = g(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(f_worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = &best + (&vertex.0 - &best) * k.shrink;
            let v = g(&x, &mut evals);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    NmResult {
        x,
        value: -v,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(adaptive: bool) -> NmOptions {
        NmOptions {
            initial_step: 0.1,
            tol: 1e-10,
            max_evaluations: 200_000,
            adaptive,
        }
    }

    #[test]
    fn concave_quadratic() {
        let center = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let f = |x: &DVector<f64>| -(x - &center).norm_squared();
        let r = maximize(f, DVector::zeros(3), &opts(false));
        assert!(r.converged);
        assert!((&r.x - &center).amax() < 1e-6);
    }

    #[test]
    fn rosenbrock_valley() {
        let f = |x: &DVector<f64>| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = maximize(f, DVector::from_vec(vec![-1.2, 1.0]), &opts(false));
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn adaptive_in_high_dimension() {
        let n = 16;
        let center = DVector::from_fn(n, |j, _| (j as f64) * 0.05 - 0.3);
        let f = |x: &DVector<f64>| -(x - &center).norm_squared();
        let r = maximize(f, DVector::zeros(n), &opts(true));
        assert!((&r.x - &center).amax() < 1e-5);
    }

    #[test]
    fn flat_penalty_region_is_escaped_from_feasible_base() {
        // feasible disc of radius 1, constant penalty outside
        let f = |x: &DVector<f64>| {
            if x.norm() > 1.0 {
                -10.0
            } else {
                -(x[0] - 0.9).powi(2) - x[1].powi(2)
            }
        };
        let r = maximize(f, DVector::zeros(2), &opts(false));
        assert!(r.value > -1e-8);
    }
}
