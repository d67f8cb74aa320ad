//! Seeded instance generation and the scaled figure reproductions.

mod fig1;
mod fig2;
mod instances;

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::MatrixDoc;
use crate::likelihood::{log_likelihood_of_probabilities, probabilities, CountData, Pom};
use crate::witness::Verdict;

pub use crate::random::random_pure_state;
pub use fig1::{run_fig1, Fig1Report, Fig1Row, Fig1Spec};
pub use fig2::{run_fig2, Fig2Report, Fig2Spec, Fig2Summary};
pub use instances::{random_pom, sample_counts, Shots};

/// Independent generator for stream `stream` of the root `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One labelled series of plot data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Series {
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
}

/// Wall time of one pipeline stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Everything recorded about one trial of one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub stream: u64,
    pub algorithm: String,
    pub dim: usize,
    pub members: usize,
    /// `γ` of the estimator built from the first `k` members, `k = 1, 2, …`.
    pub gamma: Vec<Option<f64>>,
    pub verdict: Option<Verdict>,
    pub first_detection: Option<usize>,
    /// Largest minimum eigenvalue of a partial transpose over the convex set;
    /// non-negative when no decomposable witness can certify entanglement.
    pub ppt_margin: Option<f64>,
    pub distances: Vec<Option<f64>>,
    pub timings: Vec<StageTime>,
    pub frequencies: Vec<f64>,
    pub ml_probabilities: Vec<f64>,
    pub ml_loglik: f64,
    pub estimator: Option<MatrixDoc>,
    pub failure: Option<String>,
}

impl TrialRecord {
    pub fn failed(seed: u64, stream: u64, algorithm: &str, dim: usize, error: &Error) -> Self {
        Self {
            seed,
            stream,
            algorithm: algorithm.into(),
            dim,
            members: 0,
            gamma: Vec::new(),
            verdict: None,
            first_detection: None,
            ppt_margin: None,
            distances: Vec::new(),
            timings: Vec::new(),
            frequencies: Vec::new(),
            ml_probabilities: Vec::new(),
            ml_loglik: f64::NAN,
            estimator: None,
            failure: Some(error.to_string()),
        }
    }

    /// Checks the stored estimator: a state that reproduces the ML
    /// probabilities within `prob_tol` and the ML log-likelihood per shot
    /// within `loglik_tol`.
    pub fn revalidate(&self, pom: &Pom, prob_tol: f64, loglik_tol: f64) -> Result<()> {
        let Some(doc) = &self.estimator else {
            return match &self.failure {
                Some(_) => Ok(()),
                None => Err(Error::InvalidData("trial has neither estimator nor failure".into())),
            };
        };
        let rho = doc.to_density()?;
        let p = probabilities(&rho, pom)?;
        if p.len() != self.ml_probabilities.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ml_probabilities.len(),
                found: p.len(),
            });
        }
        let residual = p
            .iter()
            .zip(&self.ml_probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual > prob_tol {
            return Err(Error::InvalidData(format!(
                "estimator misses the ML probabilities by {residual:e}"
            )));
        }
        let data = CountData::exact(self.frequencies.clone())?;
        let loglik = log_likelihood_of_probabilities(&data, &p);
        if (loglik - self.ml_loglik).abs() > loglik_tol {
            return Err(Error::InvalidData(format!(
                "estimator log-likelihood {loglik} differs from the ML value {}",
                self.ml_loglik
            )));
        }
        Ok(())
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
