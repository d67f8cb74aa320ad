use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tomoset::config::Config;
use tomoset::convexset::{ConvexSetModel, ModelDoc};
use tomoset::entropy::{gamma_if_defined, sdp_mlme, steepest_ascent_mlme};
use tomoset::gramsearch::ps_mlme;
use tomoset::harness::{
    random_pom, run_fig1, run_fig2, sample_counts, trial_rng, Fig1Spec, Fig2Spec, Shots,
};
use tomoset::io::{read_json, write_json, MatrixDoc};
use tomoset::likelihood::{ml_estimate, CountData, DataDoc, Pom, PomDoc};
use tomoset::linalg::{von_neumann_entropy, DensityMatrix, SubsystemDims};
use tomoset::random::{random_product_state, random_pure_state, random_wishart};
use tomoset::witness::certify_entanglement;

#[derive(Parser)]
#[command(name = "tomoset", version, about = "Maximum-likelihood-maximum-entropy state estimation")]
struct Cli {
    /// Root seed for every random draw.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// JSON configuration; omitted fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs given as bare file names.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random measurement, true state and data set.
    Simulate(SimulateArgs),
    /// Maximum-likelihood estimate.
    Estimate(EstimateArgs),
    /// Boundary states of the ML convex set from random linear objectives.
    Boundary(BoundaryArgs),
    /// Entanglement certification with random decomposable witnesses.
    Certify(CertifyArgs),
    /// MLME estimator from SDP boundary states.
    MlmeSdp(MlmeSdpArgs),
    /// MLME estimator from pattern-search boundary states.
    MlmePs(MlmePsArgs),
    /// Steepest-ascent baseline.
    MlmeSa(MlmeSaArgs),
    /// Scaled two-qubit experiment: γ, detection ratio, distance to the baseline.
    Fig1(Fig1Args),
    /// Scaled timing and accuracy comparison across dimensions.
    Fig2(Fig2Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKind {
    Wishart,
    Pure,
    Entangled,
    Product,
}

#[derive(Args)]
struct SimulateArgs {
    /// Subsystem dimensions, e.g. `2,2`.
    #[arg(long, default_value = "2,2")]
    dims: SubsystemDims,
    #[arg(long, default_value_t = 8)]
    outcomes: usize,
    #[arg(long, value_enum, default_value_t = StateKind::Wishart)]
    state: StateKind,
    /// Number of shots; exact probabilities when omitted.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value = "pom.json")]
    pom_out: PathBuf,
    #[arg(long, default_value = "data.json")]
    data_out: PathBuf,
    #[arg(long, default_value = "truth.json")]
    truth_out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Measurement file; defaults to the path recorded in the data file.
    #[arg(long)]
    pom: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, default_value = "ml.json")]
    out: PathBuf,
    /// Also write the ML convex-set model anchored at the estimate.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of random objectives.
    #[arg(long, default_value_t = 16)]
    count: usize,
    #[arg(long, default_value = "members.json")]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, default_value = "2,2")]
    dims: SubsystemDims,
    #[arg(long, default_value_t = 500)]
    witnesses: usize,
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
}

#[derive(Args)]
struct MlmeSdpArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Subsystem dimensions; enables witness-driven boundary states.
    #[arg(long)]
    dims: Option<SubsystemDims>,
    #[arg(long, default_value = "est.json")]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MlmePsArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Wall-clock cap per candidate, in seconds.
    #[arg(long)]
    time_cap: Option<f64>,
    #[arg(long, default_value = "est.json")]
    out: PathBuf,
}

#[derive(Args)]
struct MlmeSaArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value = "est.json")]
    out: PathBuf,
}

#[derive(Args)]
struct Fig1Args {
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    witnesses: Option<usize>,
    /// Number of shots; exact probabilities when omitted.
    #[arg(long)]
    shots: Option<u64>,
    /// JSON experiment spec; flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct Fig2Args {
    /// Hilbert-space dimensions, e.g. `3,4,6,8`.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    spec: Option<PathBuf>,
}

struct Env {
    seed: u64,
    cfg: Config,
    out_dir: Option<PathBuf>,
}

impl Env {
    fn out(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Serialize)]
struct MlDoc {
    rho_ml: MatrixDoc,
    probabilities: Vec<f64>,
    loglik: f64,
    iterations: usize,
    converged: bool,
    stationarity_residual: f64,
}

#[derive(Serialize)]
struct EstimateDoc {
    estimator: MatrixDoc,
    entropy: f64,
    gamma: Option<f64>,
    loglik: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    converged: bool,
}

fn load_data(args: &DataArgs) -> Result<(CountData, Pom)> {
    let doc: DataDoc = read_json(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let data = CountData::from_doc(&doc)?;
    let pom_path = match (&args.pom, &doc.pom) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => {
            let p = PathBuf::from(p);
            match args.data.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        }
        (None, None) => bail!("no measurement given: pass --pom or record it in the data file"),
    };
    let pom_doc: PomDoc = read_json(&pom_path).with_context(|| format!("reading {}", pom_path.display()))?;
    Ok((data, Pom::from_doc(&pom_doc)?))
}

fn shots(n: Option<u64>) -> Shots {
    n.map_or(Shots::Exact, Shots::Count)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => read_json(path).with_context(|| format!("reading {}", path.display()))?,
        None => Config::default(),
    };
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir)?;
    }
    let ctx = Env {
        seed: cli.seed,
        cfg,
        out_dir: cli.out_dir,
    };
    let mut rng = trial_rng(ctx.seed, 0);
    match cli.command {
        Command::Simulate(a) => {
            let dim = a.dims.total();
            let pom = random_pom(dim, a.outcomes, &mut rng)?;
            let truth = match a.state {
                StateKind::Wishart => random_wishart(dim, &mut rng),
                StateKind::Pure => random_pure_state(&a.dims, &mut rng, false)?,
                StateKind::Entangled => random_pure_state(&a.dims, &mut rng, true)?,
                StateKind::Product => random_product_state(&a.dims, &mut rng),
            };
            let data = sample_counts(&truth, &pom, shots(a.shots), &mut rng)?;
            let pom_path = ctx.out(&a.pom_out);
            let data_path = ctx.out(&a.data_out);
            let recorded = match (pom_path.parent(), data_path.parent()) {
                (Some(pd), Some(dd)) if pd == dd => a.pom_out.file_name().map(PathBuf::from),
                _ => None,
            }
            .unwrap_or_else(|| pom_path.clone());
            write_json(&pom_path, &pom.to_doc())?;
            write_json(&data_path, &data.to_doc(Some(recorded.display().to_string())))?;
            write_json(ctx.out(&a.truth_out), &MatrixDoc::from(&truth))?;
        }
        Command::Estimate(a) => {
            let (data, pom) = load_data(&a.input)?;
            let ml = ml_estimate(&data, &pom, &ctx.cfg.ml)?;
            write_json(
                ctx.out(&a.out),
                &MlDoc {
                    rho_ml: MatrixDoc::from(&ml.rho_ml),
                    probabilities: ml.probabilities.clone(),
                    loglik: ml.loglik,
                    iterations: ml.iterations,
                    converged: ml.converged,
                    stationarity_residual: ml.stationarity_residual,
                },
            )?;
            if let Some(path) = a.model_out {
                let basis = tomoset::basis::build_basis(&pom, &mut rng, &ctx.cfg.basis)?;
                let model = ConvexSetModel::new(pom, basis, ml.rho_ml, &ctx.cfg.sdp)?;
                write_json(ctx.out(&path), &model.to_doc())?;
            }
        }
        Command::Boundary(a) => {
            let doc: ModelDoc = read_json(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
            let mut model = ConvexSetModel::from_doc(&doc, &mut rng, &ctx.cfg)?;
            let hs: Vec<_> = (0..a.count)
                .map(|_| tomoset::random::random_hermitian(model.dim(), &mut rng))
                .collect();
            let report = model.collect_members(&hs, &ctx.cfg.sdp);
            for f in &report.failures {
                eprintln!("optimization failed: {f}");
            }
            write_json(ctx.out(&a.out), &model.to_doc())?;
            println!("{} members (rank {})", model.members().len(), report.rank);
        }
        Command::Certify(a) => {
            let (data, pom) = load_data(&a.input)?;
            let ml = ml_estimate(&data, &pom, &ctx.cfg.ml)?;
            let basis = tomoset::basis::build_basis(&pom, &mut rng, &ctx.cfg.basis)?;
            let mut model = ConvexSetModel::new(pom, basis, ml.rho_ml, &ctx.cfg.sdp)?;
            let report = certify_entanglement(&mut model, &a.dims, a.witnesses, &mut rng, &ctx.cfg)?;
            write_json(ctx.out(&a.report), &report)?;
            println!("{:?}", report.verdict);
        }
        Command::MlmeSdp(a) => {
            let (data, pom) = load_data(&a.input)?;
            let out = sdp_mlme(&data, &pom, a.dims.as_ref(), &mut rng, &ctx.cfg)?;
            write_json(ctx.out(&a.out), &out.result.to_doc())?;
            if let Some(path) = a.report {
                match (&out.report, &out.collect) {
                    (Some(r), _) => write_json(ctx.out(&path), r)?,
                    (None, Some(c)) => write_json(ctx.out(&path), c)?,
                    (None, None) => write_json(ctx.out(&path), &serde_json::json!({ "singleton": true }))?,
                }
            }
        }
        Command::MlmePs(a) => {
            let (data, pom) = load_data(&a.input)?;
            let mut cfg = ctx.cfg.clone();
            if let Some(cap) = a.time_cap {
                cfg.gramsearch.pattern.time_cap = cap;
            }
            let out = ps_mlme(&data, &pom, &mut rng, &cfg)?;
            write_json(ctx.out(&a.out), &out.result.to_doc())?;
        }
        Command::MlmeSa(a) => {
            let (data, pom) = load_data(&a.input)?;
            let lambda = a.lambda.unwrap_or(ctx.cfg.steepest_ascent.lambda);
            let sa = steepest_ascent_mlme(&data, &pom, lambda, &ctx.cfg.steepest_ascent)?;
            let rho: &DensityMatrix = &sa.estimator;
            let basis = tomoset::basis::build_basis(&pom, &mut rng, &ctx.cfg.basis)?;
            write_json(
                ctx.out(&a.out),
                &EstimateDoc {
                    estimator: MatrixDoc::from(rho),
                    entropy: von_neumann_entropy(rho)?,
                    gamma: gamma_if_defined(rho, &basis)?,
                    loglik: tomoset::likelihood::log_likelihood(&data, rho, &pom)?,
                    members: None,
                    iterations: Some(sa.iterations),
                    converged: sa.converged,
                },
            )?;
        }
        Command::Fig1(a) => {
            let mut spec: Fig1Spec = match &a.spec {
                Some(p) => read_json(p)?,
                None => Fig1Spec {
                    seed: ctx.seed,
                    ..Fig1Spec::default()
                },
            };
            if let Some(n) = a.states {
                spec.num_states = n;
            }
            if let Some(w) = a.witnesses {
                spec.witnesses = w;
            }
            if a.shots.is_some() {
                spec.shots = shots(a.shots);
            }
            let report = run_fig1(&spec, &ctx.cfg, Some(&ctx.dir()))?;
            println!(
                "{} states, {} detected, {} detectable, mean gamma at {} members: {:?}",
                spec.num_states,
                report.detection_ratio.last().map_or(0.0, |r| r * spec.num_states as f64),
                report.detectable,
                report.max_members,
                report.mean_gamma.last().copied().flatten(),
            );
        }
        Command::Fig2(a) => {
            let mut spec: Fig2Spec = match &a.spec {
                Some(p) => read_json(p)?,
                None => Fig2Spec {
                    seed: ctx.seed,
                    ..Fig2Spec::default()
                },
            };
            if let Some(d) = a.dims {
                spec.dims = d;
            }
            if let Some(n) = a.states {
                spec.num_states = n;
            }
            if a.shots.is_some() {
                spec.shots = shots(a.shots);
            }
            let report = run_fig2(&spec, &ctx.cfg, Some(&ctx.dir()))?;
            for s in &report.summaries {
                println!(
                    "D={} gamma ps {:?} sa {:?} seconds ps {:?} sa {:?}",
                    s.dim, s.mean_gamma_ps, s.mean_gamma_sa, s.mean_seconds_ps, s.mean_seconds_sa
                );
            }
        }
    }
    Ok(())
}
