//! Two-qubit entangled pure states under one shared eight-outcome measurement:
//! `γ` against member count, detection ratio against witness count, and
//! distance to the steepest-ascent estimate.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{mean, random_pom, sample_counts, trial_rng, write_csv, Series, Shots, StageTime, TrialRecord};
use crate::config::{Config, WitnessKind};
use crate::entropy::{mlme_from_members, sdp_mlme, steepest_ascent_mlme};
use crate::error::{Result, Stage, StageExt};
use crate::io::{write_json, MatrixDoc};
use crate::likelihood::{log_likelihood_of_probabilities, CountData, Pom};
use crate::linalg::{hilbert_schmidt_distance, SubsystemDims};
use crate::random::random_pure_state;
use crate::witness::{ppt_margin, Verdict};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Fig1Spec {
    pub dims: SubsystemDims,
    pub pom_outcomes: usize,
    pub num_states: usize,
    pub shots: Shots,
    pub seed: u64,
    pub witnesses: usize,
    pub witness_kind: WitnessKind,
    pub lambda: f64,
    pub steepest_ascent: bool,
}

impl Default for Fig1Spec {
    fn default() -> Self {
        Self {
            dims: SubsystemDims::two_qubits(),
            pom_outcomes: 8,
            num_states: 20,
            shots: Shots::Exact,
            seed: 1,
            witnesses: 500,
            witness_kind: WitnessKind::EntangledPure,
            lambda: 1e-5,
            steepest_ascent: true,
        }
    }
}

/// One row per trial and member count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig1Row {
    pub trial: usize,
    pub members: usize,
    pub gamma: Option<f64>,
    pub entropy: f64,
    pub distance_to_sa: Option<f64>,
}

#[derive(Serialize)]
struct TimingRow {
    trial: usize,
    stages: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig1Report {
    pub spec: Fig1Spec,
    /// Mean `γ` over trials with at least `k` members, `k = 1, 2, …`.
    pub mean_gamma: Vec<Option<f64>>,
    pub mean_distance_to_sa: Vec<Option<f64>>,
    /// Fraction of states detected within the first `w` witnesses, `w = 1, 2, …`.
    pub detection_ratio: Vec<f64>,
    pub max_members: usize,
    /// Trials whose convex set excludes every state with positive partial
    /// transpose; the detection ratio cannot exceed this fraction.
    pub detectable: usize,
    pub trials: Vec<TrialRecord>,
    pub rows: Vec<Fig1Row>,
    pub seconds: f64,
}

pub fn run_fig1(spec: &Fig1Spec, cfg: &Config, out_dir: Option<&Path>) -> Result<Fig1Report> {
    let began = Instant::now();
    let dim = spec.dims.total();
    let pom = random_pom(dim, spec.pom_outcomes, &mut trial_rng(spec.seed, 0))?;
    let mut cfg = cfg.clone();
    cfg.witness.kind = spec.witness_kind;
    cfg.witness.count = spec.witnesses;
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for trial in 0..spec.num_states {
        let stream = trial as u64 + 1;
        match fig1_trial(spec, &pom, stream, &cfg) {
            Ok((record, mut trial_rows)) => {
                for r in &mut trial_rows {
                    r.trial = trial;
                }
                trials.push(record);
                rows.extend(trial_rows);
            }
            Err(e) => trials.push(TrialRecord::failed(spec.seed, stream, "sdp-mlme", dim, &e)),
        }
    }
    let max_members = trials.iter().map(|t| t.members).max().unwrap_or(0);
    let timings: Vec<TimingRow> = trials
        .iter()
        .enumerate()
        .map(|(trial, t)| TimingRow {
            trial,
            stages: t
                .timings
                .iter()
                .map(|s| format!("{}={:.6}", s.stage, s.seconds))
                .collect::<Vec<_>>()
                .join(";"),
        })
        .collect();
    let mean_gamma = (1..=max_members)
        .map(|k| mean(rows.iter().filter(|r| r.members == k).filter_map(|r| r.gamma)))
        .collect();
    let mean_distance_to_sa = (1..=max_members)
        .map(|k| mean(rows.iter().filter(|r| r.members == k).filter_map(|r| r.distance_to_sa)))
        .collect();
    let n = spec.num_states.max(1) as f64;
    let detection_ratio = (1..=spec.witnesses)
        .map(|w| {
            trials
                .iter()
                .filter(|t| t.first_detection.is_some_and(|d| d < w))
                .count() as f64
                / n
        })
        .collect();
    let report = Fig1Report {
        spec: spec.clone(),
        mean_gamma,
        mean_distance_to_sa,
        detection_ratio,
        max_members,
        detectable: trials
            .iter()
            .filter(|t| t.ppt_margin.is_some_and(|m| m < 0.0))
            .count(),
        trials,
        rows,
        seconds: began.elapsed().as_secs_f64(),
    };
    if let Some(dir) = out_dir {
        write_csv(&dir.join("fig1_members.csv"), &report.rows)?;
        write_csv(&dir.join("fig1_trials.csv"), &report.summary_rows())?;
        write_json(dir.join("fig1_trials.json"), &report.trials)?;
        write_csv(&dir.join("fig1_timing.csv"), &timings)?;
        write_json(dir.join("fig1_plot.json"), &report.plot_data())?;
    }
    Ok(report)
}

fn fig1_trial(
    spec: &Fig1Spec,
    pom: &Pom,
    stream: u64,
    cfg: &Config,
) -> Result<(TrialRecord, Vec<Fig1Row>)> {
    let mut rng = trial_rng(spec.seed, stream);
    let truth = random_pure_state(&spec.dims, &mut rng, true)?;
    let data = sample_counts(&truth, pom, spec.shots, &mut rng)?;
    let t0 = Instant::now();
    let out = sdp_mlme(&data, pom, Some(&spec.dims), &mut rng, cfg)?;
    let mut timings = vec![StageTime {
        stage: "sdp-mlme".into(),
        seconds: t0.elapsed().as_secs_f64(),
    }];
    let sa = if spec.steepest_ascent {
        let t0 = Instant::now();
        let sa = steepest_ascent_mlme(&data, pom, spec.lambda, &cfg.steepest_ascent)?;
        timings.push(StageTime {
            stage: "steepest-ascent".into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        Some(sa)
    } else {
        None
    };
    let members = out.model.members();
    let mut rows = Vec::with_capacity(members.len());
    for k in 1..=members.len() {
        let r = mlme_from_members(&members[..k], out.model.basis(), &data, pom, &cfg.entropy)?;
        let distance_to_sa = match &sa {
            Some(sa) => Some(hilbert_schmidt_distance(&r.estimator, &sa.estimator)?),
            None => None,
        };
        rows.push(Fig1Row {
            trial: 0,
            members: k,
            gamma: r.gamma,
            entropy: r.entropy,
            distance_to_sa,
        });
    }
    let freqs = data.frequencies();
    let report = out.report.as_ref();
    let record = TrialRecord {
        seed: spec.seed,
        stream,
        algorithm: "sdp-mlme".into(),
        dim: pom.dim(),
        members: members.len(),
        gamma: rows.iter().map(|r| r.gamma).collect(),
        verdict: report.map(|r| r.verdict),
        first_detection: report.and_then(|r| r.first_detection()),
        ppt_margin: Some(ppt_margin(&out.model, &spec.dims, spec.dims.len() - 1).stage(Stage::Witness)?),
        distances: rows.iter().map(|r| r.distance_to_sa).collect(),
        timings,
        ml_loglik: log_likelihood_of_probabilities(&CountData::exact(freqs.clone())?, &out.ml.probabilities),
        frequencies: freqs,
        ml_probabilities: out.ml.probabilities.clone(),
        estimator: Some(MatrixDoc::from(&out.result.estimator)),
        failure: None,
    };
    Ok((record, rows))
}

#[derive(Serialize)]
struct TrialSummary {
    trial: usize,
    stream: u64,
    members: usize,
    entangled: bool,
    first_detection: Option<usize>,
    ppt_margin: Option<f64>,
    final_gamma: Option<f64>,
    failure: Option<String>,
}

#[derive(Serialize)]
struct Fig1Plot {
    probabilities: &'static str,
    gamma_vs_members: Series,
    detection_vs_witnesses: Series,
    distance_vs_members: Series,
}

impl Fig1Report {
    fn summary_rows(&self) -> Vec<TrialSummary> {
        self.trials
            .iter()
            .enumerate()
            .map(|(trial, t)| TrialSummary {
                trial,
                stream: t.stream,
                members: t.members,
                entangled: t.verdict == Some(Verdict::Entangled),
                first_detection: t.first_detection,
                ppt_margin: t.ppt_margin,
                final_gamma: t.gamma.last().copied().flatten(),
                failure: t.failure.clone(),
            })
            .collect()
    }

    fn plot_data(&self) -> Fig1Plot {
        let members: Vec<f64> = (1..=self.max_members).map(|k| k as f64).collect();
        Fig1Plot {
            probabilities: match self.spec.shots {
                Shots::Exact => "exact",
                Shots::Count(_) => "sampled",
            },
            gamma_vs_members: Series {
                x_label: "number of ML estimators".into(),
                y_label: "mean gamma".into(),
                x: members.clone(),
                y: self.mean_gamma.clone(),
            },
            detection_vs_witnesses: Series {
                x_label: "number of witnesses".into(),
                y_label: "fraction of states detected".into(),
                x: (1..=self.detection_ratio.len()).map(|w| w as f64).collect(),
                y: self.detection_ratio.iter().map(|&r| Some(r)).collect(),
            },
            distance_vs_members: Series {
                x_label: "number of ML estimators".into(),
                y_label: "mean Hilbert-Schmidt distance to steepest ascent".into(),
                x: members,
                y: self.mean_distance_to_sa.clone(),
            },
        }
    }
}
