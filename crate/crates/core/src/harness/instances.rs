//! Random problem instances: measurements and simulated data.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::basis::rank_of_operator_set;
use crate::error::{Error, Result};
use crate::likelihood::{probabilities, CountData, Pom};
use crate::linalg::{inverse_sqrt, DensityMatrix, HermitianOperator};
use crate::random::random_wishart;

const POM_REDRAWS: usize = 100;

/// `K` outcomes `Π_j = S^{-1/2} A_j S^{-1/2}` from random positive `A_j`,
/// redrawn until they are linearly independent.
pub fn random_pom<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Pom> {
    if outcomes < 2 || outcomes > dim * dim {
        return Err(Error::InvalidPom(format!(
            "{outcomes} outcomes requested for dimension {dim}"
        )));
    }
    for _ in 0..POM_REDRAWS {
        let parts: Vec<HermitianOperator> = (0..outcomes)
            .map(|_| random_wishart(dim, rng).into_op())
            .collect();
        let mut sum = HermitianOperator::zeros(dim);
        for a in &parts {
            sum.add_scaled(1.0, a);
        }
        let s = inverse_sqrt(&sum)?;
        let pis: Vec<HermitianOperator> = parts.iter().map(|a| a.congruence(s.matrix())).collect();
        if rank_of_operator_set(&pis, 1e-8)? == outcomes {
            return Pom::new(pis);
        }
    }
    Err(Error::Degenerate("random measurement redraw budget exhausted".into()))
}

/// Number of shots, or noise-free probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shots {
    Exact,
    Count(u64),
}

/// One multinomial draw of size `N`, or the exact probabilities.
pub fn sample_counts<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    pom: &Pom,
    shots: Shots,
    rng: &mut R,
) -> Result<CountData> {
    let p = probabilities(rho, pom)?;
    match shots {
        Shots::Exact => CountData::exact(p),
        Shots::Count(n) => {
            if n == 0 {
                return Err(Error::InvalidData("at least one shot is required".into()));
            }
            CountData::from_counts(multinomial(n, &p, rng))
        }
    }
}

fn multinomial<R: Rng + ?Sized>(n: u64, p: &[f64], rng: &mut R) -> Vec<u64> {
    let mut remaining = n;
    let mut mass: f64 = p.iter().sum();
    let mut out = Vec::with_capacity(p.len());
    for (j, &pj) in p.iter().enumerate() {
        if j + 1 == p.len() {
            out.push(remaining);
            break;
        }
        let q = if mass > 0.0 { (pj / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if remaining == 0 || q == 0.0 {
            0
        } else if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("valid binomial parameters")
                .sample(rng)
        };
        out.push(k);
        remaining -= k;
        mass -= pj;
    }
    out
}
