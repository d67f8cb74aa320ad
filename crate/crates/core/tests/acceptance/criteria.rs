use std::time::{Duration, Instant};

use tomoset::basis::build_basis;
use tomoset::config::Config;
use tomoset::convexset::{optimize_linear, ConvexSetModel, Sense};
use tomoset::entropy::{sdp_mlme, steepest_ascent_mlme};
use tomoset::gramsearch::ps_mlme;
use tomoset::harness::{
    random_pom, run_fig1, run_fig2, sample_counts, trial_rng, Fig1Report, Fig1Spec, Fig2Spec, Shots,
};
use tomoset::likelihood::{ml_estimate, CountData, Pom};
use tomoset::linalg::{
    hilbert_schmidt_distance, partial_transpose, DensityMatrix, HermitianOperator, SubsystemDims,
};
use tomoset::random::{random_hermitian, random_product_state, random_wishart};
use tomoset::witness::{certify_entanglement, Verdict};

use crate::oracle::{bloch_optimum, phi_plus, psi_minus};
use crate::{check, Outcome};

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed())
}

pub fn disc_model() -> Outcome {
    let cfg = Config::default();
    let pom = Pom::computational(2);
    let mut worst = [0.0f64; 3];
    let mut slowest = Duration::ZERO;
    for (i, f0) in [0.5, 0.3, 0.85, 0.05, 0.62].into_iter().enumerate() {
        let data = CountData::exact(vec![f0, 1.0 - f0]).map_err(|e| e.to_string())?;
        let want = HermitianOperator::diagonal(&[f0, 1.0 - f0]);
        let mut rng = trial_rng(1, i as u64);
        let (sdp, t_sdp) = timed(|| sdp_mlme(&data, &pom, None, &mut rng, &cfg));
        let (ps, t_ps) = timed(|| ps_mlme(&data, &pom, &mut rng, &cfg));
        let (sa, t_sa) = timed(|| steepest_ascent_mlme(&data, &pom, 1e-5, &cfg.steepest_ascent));
        let estimates = [
            sdp.map_err(|e| e.to_string())?.result.estimator,
            ps.map_err(|e| e.to_string())?.result.estimator,
            sa.map_err(|e| e.to_string())?.estimator,
        ];
        for (w, est) in worst.iter_mut().zip(&estimates) {
            *w = w.max(hilbert_schmidt_distance(est, &want).map_err(|e| e.to_string())?);
        }
        slowest = slowest.max(t_sdp).max(t_ps).max(t_sa);
    }
    check(
        worst[0] < 1e-5 && worst[1] < 1e-5 && worst[2] < 1e-3 && slowest < Duration::from_secs(5),
        format!(
            "max distance sdp {:.1e} ps {:.1e} sa {:.1e}, slowest run {:.3} s",
            worst[0],
            worst[1],
            worst[2],
            slowest.as_secs_f64()
        ),
    )
}

pub fn complete_data() -> Outcome {
    let cfg = Config::default();
    let mut worst: f64 = 0.0;
    let mut members = Vec::new();
    for dim in 2..=4 {
        for trial in 0..3 {
            let mut rng = trial_rng(2, (dim * 10 + trial) as u64);
            let pom = random_pom(dim, dim * dim, &mut rng).map_err(|e| e.to_string())?;
            let truth = random_wishart(dim, &mut rng);
            let data = sample_counts(&truth, &pom, Shots::Exact, &mut rng).map_err(|e| e.to_string())?;
            let sdp = sdp_mlme(&data, &pom, None, &mut rng, &cfg).map_err(|e| e.to_string())?;
            let ps = ps_mlme(&data, &pom, &mut rng, &cfg).map_err(|e| e.to_string())?;
            for (est, ml, m) in [
                (&sdp.result.estimator, &sdp.ml.rho_ml, sdp.result.members),
                (&ps.result.estimator, &ps.ml.rho_ml, ps.result.members),
            ] {
                let to_truth = hilbert_schmidt_distance(est, &truth).map_err(|e| e.to_string())?;
                let to_ml = hilbert_schmidt_distance(est, ml).map_err(|e| e.to_string())?;
                worst = worst.max(to_truth).max(to_ml);
                members.push(m);
            }
        }
    }
    check(
        worst < 1e-5 && members.iter().all(|&m| m == 1),
        format!("D = 2..4, max distance {worst:.1e}, member counts {members:?}"),
    )
}

fn fig1_report() -> &'static Result<(Fig1Report, Duration), String> {
    static REPORT: std::sync::OnceLock<Result<(Fig1Report, Duration), String>> =
        std::sync::OnceLock::new();
    REPORT.get_or_init(|| {
        let (r, t) = timed(|| run_fig1(&Fig1Spec::default(), &Config::default(), None));
        r.map(|r| (r, t)).map_err(|e| e.to_string())
    })
}

pub fn fig1_gamma() -> Outcome {
    let (report, elapsed) = fig1_report().as_ref().map_err(Clone::clone)?;
    let gamma = &report.mean_gamma;
    let mut rises = Vec::new();
    for k in 1..gamma.len() {
        match (gamma[k - 1], gamma[k]) {
            (Some(a), Some(b)) if b <= a => {}
            (a, b) => rises.push(format!("{}->{}: {a:?} -> {b:?}", k, k + 1)),
        }
    }
    let at_nine = gamma.get(8).copied().flatten();
    let failures = report.trials.iter().filter(|t| t.failure.is_some()).count();
    let detail = format!(
        "mean gamma by member count {:?}; increases at {:?}; max members {}; failed trials {}; {:.0} s",
        gamma.iter().map(|g| g.map(|v| format!("{v:.2e}"))).collect::<Vec<_>>(),
        rises,
        report.max_members,
        failures,
        elapsed.as_secs_f64(),
    );
    check(
        rises.is_empty()
            && at_nine.is_some_and(|g| g < 1e-4)
            && report.max_members <= 9
            && failures == 0
            && *elapsed < Duration::from_secs(15 * 60),
        detail,
    )
}

pub fn fig1_detection() -> Outcome {
    let (report, _) = fig1_report().as_ref().map_err(Clone::clone)?;
    let ratio = &report.detection_ratio;
    let monotone = ratio.windows(2).all(|w| w[1] >= w[0]);
    let last = ratio.last().copied().unwrap_or(0.0);
    let detail = format!(
        "ratio at 1/10/100/500 witnesses {:?}; nondecreasing {monotone}; {} of {} sets exclude every PPT state",
        [0, 9, 99, 499].map(|i| ratio.get(i).copied()),
        report.detectable,
        report.spec.num_states,
    );
    check(monotone && ratio.len() == 500 && last >= 0.9, detail)
}

pub fn witness_soundness() -> Outcome {
    let cfg = Config::default();
    let dims = SubsystemDims::two_qubits();
    let mut entangled = Vec::new();
    let mut failures = 0;
    for trial in 0..200u64 {
        let mut rng = trial_rng(5, trial);
        let mut run = || -> tomoset::error::Result<Verdict> {
            let pom = random_pom(4, 8, &mut rng)?;
            let truth = random_product_state(&dims, &mut rng);
            let data = sample_counts(&truth, &pom, Shots::Exact, &mut rng)?;
            let ml = ml_estimate(&data, &pom, &cfg.ml)?;
            let basis = build_basis(&pom, &mut rng, &cfg.basis)?;
            let mut model = ConvexSetModel::new(pom, basis, ml.rho_ml, &cfg.sdp)?;
            let report = certify_entanglement(&mut model, &dims, 500, &mut rng, &cfg)?;
            failures += report.failures.len();
            Ok(report.verdict)
        };
        match run() {
            Ok(Verdict::Entangled) => entangled.push(trial),
            Ok(Verdict::Inconclusive) => {}
            Err(e) => return Err(format!("trial {trial}: {e}")),
        }
    }
    check(
        entangled.is_empty(),
        format!(
            "200 trials x 500 witnesses, entangled verdicts {entangled:?}, failed optimizations {failures}"
        ),
    )
}

pub fn singlet() -> Outcome {
    let cfg = Config::default();
    let dims = SubsystemDims::two_qubits();
    let mut rng = trial_rng(6, 0);
    let pom = random_pom(4, 16, &mut rng).map_err(|e| e.to_string())?;
    let truth = DensityMatrix::pure(&psi_minus()).map_err(|e| e.to_string())?;
    let data = sample_counts(&truth, &pom, Shots::Exact, &mut rng).map_err(|e| e.to_string())?;
    let ml = ml_estimate(&data, &pom, &cfg.ml).map_err(|e| e.to_string())?;
    let basis = build_basis(&pom, &mut rng, &cfg.basis).map_err(|e| e.to_string())?;
    let model = ConvexSetModel::new(pom, basis, ml.rho_ml, &cfg.sdp).map_err(|e| e.to_string())?;
    let q = DensityMatrix::pure(&phi_plus()).map_err(|e| e.to_string())?;
    let w = partial_transpose(&q, &dims, 1).map_err(|e| e.to_string())?;
    let r = optimize_linear(&w, Sense::Max, &model, &cfg.sdp).map_err(|e| e.to_string())?;
    let verdict = if r.value < -cfg.witness.margin {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    };
    check(
        (r.value + 0.5).abs() <= 1e-5 && verdict == Verdict::Entangled,
        format!("max value {:.9}, verdict {verdict:?}", r.value),
    )
}

pub fn bloch_oracle() -> Outcome {
    let cfg = Config::default();
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let mut rng = trial_rng(7, trial);
        let pom = match trial % 3 {
            0 => Pom::computational(2),
            k => random_pom(2, k as usize + 1, &mut rng).map_err(|e| e.to_string())?,
        };
        let truth = random_wishart(2, &mut rng);
        let basis = build_basis(&pom, &mut rng, &cfg.basis).map_err(|e| e.to_string())?;
        let model = ConvexSetModel::new(pom.clone(), basis, truth, &cfg.sdp).map_err(|e| e.to_string())?;
        let h = random_hermitian(2, &mut rng);
        for (sense, maximize) in [(Sense::Max, true), (Sense::Min, false)] {
            let got = optimize_linear(&h, sense, &model, &cfg.sdp).map_err(|e| e.to_string())?;
            let want = bloch_optimum(&pom, model.target_probs(), &h, maximize);
            worst = worst.max((got.value - want).abs());
        }
    }
    check(worst < 1e-6, format!("100 instances, both senses, max deviation {worst:.1e}"))
}

pub fn fig2() -> Outcome {
    let cfg = Config::default();
    let report = run_fig2(&Fig2Spec::default(), &cfg, None).map_err(|e| e.to_string())?;
    let cap = cfg.gramsearch.pattern.time_cap;
    let mut ok = report.summaries.len() == 4;
    let mut lines = Vec::new();
    for s in &report.summaries {
        let (Some(gp), Some(gs), Some(tp), Some(ts)) =
            (s.mean_gamma_ps, s.mean_gamma_sa, s.mean_seconds_ps, s.mean_seconds_sa)
        else {
            ok = false;
            lines.push(format!("D={} missing results", s.dim));
            continue;
        };
        ok &= s.failures == 0 && gp < gs && tp <= 100.0 * ts && s.max_candidate_seconds <= cap;
        lines.push(format!(
            "D={} gamma {gp:.1e} vs {gs:.1e}, time ratio {:.1}, slowest candidate {:.2} s, failures {}",
            s.dim,
            tp / ts,
            s.max_candidate_seconds,
            s.failures
        ));
    }
    check(ok, lines.join("; "))
}
