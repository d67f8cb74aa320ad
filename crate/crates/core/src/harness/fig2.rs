//! Pattern-search MLME against the steepest-ascent baseline on full-rank
//! states and `⌊D²/2⌋`-outcome measurements: wall time and `γ` per dimension.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{mean, random_pom, sample_counts, trial_rng, write_csv, Series, Shots, StageTime, TrialRecord};
use crate::config::Config;
use crate::entropy::{gamma_if_defined, steepest_ascent_mlme};
use crate::error::Result;
use crate::gramsearch::ps_mlme;
use crate::io::{write_json, MatrixDoc};
use crate::likelihood::{log_likelihood_of_probabilities, CountData, Pom};
use crate::linalg::hilbert_schmidt_distance;
use crate::random::random_wishart;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Fig2Spec {
    pub dims: Vec<usize>,
    /// Outcome count per dimension; `⌊D²/2⌋` when absent.
    pub pom_outcomes: Option<usize>,
    pub num_states: usize,
    pub shots: Shots,
    pub seed: u64,
    pub lambda: f64,
}

impl Default for Fig2Spec {
    fn default() -> Self {
        Self {
            dims: vec![3, 4, 6, 8],
            pom_outcomes: None,
            num_states: 10,
            shots: Shots::Exact,
            seed: 2,
            lambda: 1e-5,
        }
    }
}

/// One row per dimension, trial and algorithm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Row {
    pub dim: usize,
    pub trial: usize,
    pub algorithm: String,
    pub gamma: Option<f64>,
    pub members: usize,
    pub candidates: usize,
    pub timed_out: usize,
    pub distance_to_other: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Summary {
    pub dim: usize,
    pub outcomes: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean_gamma_ps: Option<f64>,
    pub mean_gamma_sa: Option<f64>,
    pub mean_seconds_ps: Option<f64>,
    pub mean_seconds_sa: Option<f64>,
    pub max_candidate_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Report {
    pub spec: Fig2Spec,
    pub summaries: Vec<Fig2Summary>,
    pub rows: Vec<Fig2Row>,
    pub trials: Vec<TrialRecord>,
    pub seconds: f64,
}

struct Fig2Trial {
    ps: TrialRecord,
    sa: TrialRecord,
    rows: [Fig2Row; 2],
    max_candidate_seconds: f64,
}

pub fn run_fig2(spec: &Fig2Spec, cfg: &Config, out_dir: Option<&Path>) -> Result<Fig2Report> {
    let began = Instant::now();
    let mut summaries = Vec::with_capacity(spec.dims.len());
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for (di, &dim) in spec.dims.iter().enumerate() {
        let base = (di as u64 + 1) << 32;
        let outcomes = spec.pom_outcomes.unwrap_or(dim * dim / 2);
        let pom = random_pom(dim, outcomes, &mut trial_rng(spec.seed, base))?;
        let mut gamma_ps = Vec::new();
        let mut gamma_sa = Vec::new();
        let mut seconds_ps = Vec::new();
        let mut seconds_sa = Vec::new();
        let mut failures = 0;
        let mut max_candidate_seconds: f64 = 0.0;
        for trial in 0..spec.num_states {
            let stream = base + trial as u64 + 1;
            match fig2_trial(spec, &pom, stream, cfg) {
                Ok(mut t) => {
                    for r in &mut t.rows {
                        r.trial = trial;
                    }
                    gamma_ps.extend(t.ps.gamma.last().copied().flatten());
                    gamma_sa.extend(t.sa.gamma.last().copied().flatten());
                    seconds_ps.extend(t.ps.timings.iter().map(|s| s.seconds));
                    seconds_sa.extend(t.sa.timings.iter().map(|s| s.seconds));
                    max_candidate_seconds = max_candidate_seconds.max(t.max_candidate_seconds);
                    rows.extend(t.rows);
                    trials.push(t.ps);
                    trials.push(t.sa);
                }
                Err(e) => {
                    failures += 1;
                    rows.push(Fig2Row {
                        dim,
                        trial,
                        algorithm: "ps-mlme".into(),
                        gamma: None,
                        members: 0,
                        candidates: 0,
                        timed_out: 0,
                        distance_to_other: None,
                        failure: Some(e.to_string()),
                    });
                    trials.push(TrialRecord::failed(spec.seed, stream, "ps-mlme", dim, &e));
                }
            }
        }
        summaries.push(Fig2Summary {
            dim,
            outcomes,
            trials: spec.num_states,
            failures,
            mean_gamma_ps: mean(gamma_ps),
            mean_gamma_sa: mean(gamma_sa),
            mean_seconds_ps: mean(seconds_ps),
            mean_seconds_sa: mean(seconds_sa),
            max_candidate_seconds,
        });
    }
    let report = Fig2Report {
        spec: spec.clone(),
        summaries,
        rows,
        trials,
        seconds: began.elapsed().as_secs_f64(),
    };
    if let Some(dir) = out_dir {
        write_csv(&dir.join("fig2_trials.csv"), &report.rows)?;
        write_csv(&dir.join("fig2_summary.csv"), &report.accuracy_rows())?;
        write_csv(&dir.join("fig2_timing.csv"), &report.timing_rows())?;
        write_json(dir.join("fig2_trials.json"), &report.trials)?;
        write_json(dir.join("fig2_plot.json"), &report.plot_data())?;
    }
    Ok(report)
}

fn fig2_trial(spec: &Fig2Spec, pom: &Pom, stream: u64, cfg: &Config) -> Result<Fig2Trial> {
    let mut rng = trial_rng(spec.seed, stream);
    let dim = pom.dim();
    let truth = random_wishart(dim, &mut rng);
    let data = sample_counts(&truth, pom, spec.shots, &mut rng)?;
    let t0 = Instant::now();
    let ps = ps_mlme(&data, pom, &mut rng, cfg)?;
    let ps_seconds = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let sa = steepest_ascent_mlme(&data, pom, spec.lambda, &cfg.steepest_ascent)?;
    let sa_seconds = t0.elapsed().as_secs_f64();
    let sa_gamma = gamma_if_defined(&sa.estimator, ps.model.basis())?;
    let distance = hilbert_schmidt_distance(&ps.result.estimator, &sa.estimator)?;
    let freqs = data.frequencies();
    let ml_loglik = log_likelihood_of_probabilities(&CountData::exact(freqs.clone())?, &ps.ml.probabilities);
    let record = |algorithm: &str, gamma, members, seconds, estimator| TrialRecord {
        seed: spec.seed,
        stream,
        algorithm: algorithm.into(),
        dim,
        members,
        gamma: vec![gamma],
        verdict: None,
        first_detection: None,
        ppt_margin: None,
        distances: vec![Some(distance)],
        timings: vec![StageTime {
            stage: algorithm.into(),
            seconds,
        }],
        frequencies: freqs.clone(),
        ml_probabilities: ps.ml.probabilities.clone(),
        ml_loglik,
        estimator: Some(estimator),
        failure: None,
    };
    let timed_out = ps.candidates.iter().filter(|c| c.timed_out).count();
    let rows = [
        Fig2Row {
            dim,
            trial: 0,
            algorithm: "ps-mlme".into(),
            gamma: ps.result.gamma,
            members: ps.result.members,
            candidates: ps.candidates.len(),
            timed_out,
            distance_to_other: Some(distance),
            failure: None,
        },
        Fig2Row {
            dim,
            trial: 0,
            algorithm: "steepest-ascent".into(),
            gamma: sa_gamma,
            members: 0,
            candidates: 0,
            timed_out: 0,
            distance_to_other: Some(distance),
            failure: None,
        },
    ];
    Ok(Fig2Trial {
        max_candidate_seconds: ps.candidates.iter().map(|c| c.seconds).fold(0.0, f64::max),
        ps: record(
            "ps-mlme",
            ps.result.gamma,
            ps.result.members,
            ps_seconds,
            MatrixDoc::from(&ps.result.estimator),
        ),
        sa: record("steepest-ascent", sa_gamma, 0, sa_seconds, MatrixDoc::from(&sa.estimator)),
        rows,
    })
}

#[derive(Serialize)]
struct AccuracyRow {
    dim: usize,
    outcomes: usize,
    trials: usize,
    failures: usize,
    mean_gamma_ps: Option<f64>,
    mean_gamma_sa: Option<f64>,
}

#[derive(Serialize)]
struct TimingRow {
    dim: usize,
    mean_seconds_ps: Option<f64>,
    mean_seconds_sa: Option<f64>,
    max_candidate_seconds: f64,
}

#[derive(Serialize)]
struct Fig2Plot {
    probabilities: &'static str,
    seconds_ps: Series,
    seconds_sa: Series,
    gamma_ps: Series,
    gamma_sa: Series,
}

impl Fig2Report {
    fn accuracy_rows(&self) -> Vec<AccuracyRow> {
        self.summaries
            .iter()
            .map(|s| AccuracyRow {
                dim: s.dim,
                outcomes: s.outcomes,
                trials: s.trials,
                failures: s.failures,
                mean_gamma_ps: s.mean_gamma_ps,
                mean_gamma_sa: s.mean_gamma_sa,
            })
            .collect()
    }

    fn timing_rows(&self) -> Vec<TimingRow> {
        self.summaries
            .iter()
            .map(|s| TimingRow {
                dim: s.dim,
                mean_seconds_ps: s.mean_seconds_ps,
                mean_seconds_sa: s.mean_seconds_sa,
                max_candidate_seconds: s.max_candidate_seconds,
            })
            .collect()
    }

    fn plot_data(&self) -> Fig2Plot {
        let dims: Vec<f64> = self.summaries.iter().map(|s| s.dim as f64).collect();
        let series = |y_label: &str, f: &dyn Fn(&Fig2Summary) -> Option<f64>| Series {
            x_label: "dimension D".into(),
            y_label: y_label.into(),
            x: dims.clone(),
            y: self.summaries.iter().map(f).collect(),
        };
        Fig2Plot {
            probabilities: match self.spec.shots {
                Shots::Exact => "exact",
                Shots::Count(_) => "sampled",
            },
            seconds_ps: series("mean PS MLME seconds", &|s| s.mean_seconds_ps),
            seconds_sa: series("mean steepest-ascent seconds", &|s| s.mean_seconds_sa),
            gamma_ps: series("mean PS MLME gamma", &|s| s.mean_gamma_ps),
            gamma_sa: series("mean steepest-ascent gamma", &|s| s.mean_gamma_sa),
        }
    }
}
