//! Tunable knobs for every stage, with serde support so a JSON file can
//! override any subset of the defaults.

use serde::{Deserialize, Serialize};

use crate::linalg::PSD_TOL;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Config {
    pub psd_tol: f64,
    pub basis: BasisConfig,
    pub ml: MlConfig,
    pub sdp: SdpConfig,
    pub witness: WitnessConfig,
    pub entropy: EntropyConfig,
    pub gramsearch: GramSearchConfig,
    pub steepest_ascent: SteepestAscentConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            psd_tol: PSD_TOL,
            basis: BasisConfig::default(),
            ml: MlConfig::default(),
            sdp: SdpConfig::default(),
            witness: WitnessConfig::default(),
            entropy: EntropyConfig::default(),
            gramsearch: GramSearchConfig::default(),
            steepest_ascent: SteepestAscentConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct BasisConfig {
    /// Relative post-projection norm below which a direction counts as dependent.
    pub independence_tol: f64,
    /// Relative singular-value cutoff for `rank_of_operator_set`.
    pub rank_tol: f64,
    /// Fresh random operators drawn per missing direction before giving up.
    pub retry_budget: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            independence_tol: 1e-8,
            rank_tol: 1e-8,
            retry_budget: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct MlConfig {
    pub tol: f64,
    pub max_iterations: usize,
    /// Positivity/trace audit period of the fixed-point iteration.
    pub check_every: usize,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 50_000,
            check_every: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SdpConfig {
    /// Certified optimality gap of `optimize_linear`.
    pub gap_tol: f64,
    /// Equality-constraint residual tolerance.
    pub feasibility_tol: f64,
    /// Eigenvalues of the anchor state at or below this define its null space.
    pub face_tol: f64,
    pub max_newton_steps: usize,
    /// Random operators used when probing the set; `None` means `4·D_unmeas`.
    pub probe_count: Option<usize>,
    /// Run both max and min senses per probe operator.
    pub both_senses: bool,
    /// Consecutive probes without a rank increase that count as a plateau.
    pub plateau_patience: usize,
    /// Mean pairwise distance under which the set counts as a single point.
    pub singleton_threshold: f64,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            feasibility_tol: 1e-7,
            face_tol: 1e-10,
            max_newton_steps: 2_000,
            probe_count: None,
            both_senses: true,
            plateau_patience: 20,
            singleton_threshold: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// `Q = X†X / tr{X†X}` with complex Gaussian `X`.
    Wishart,
    /// `Q = |ψ⟩⟨ψ|` for Haar-random entangled `|ψ⟩`.
    EntangledPure,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct WitnessConfig {
    /// A maximum below `-margin` proves entanglement.
    pub margin: f64,
    /// Transposed subsystem; `None` means the last one.
    pub subsystem: Option<usize>,
    pub kind: WitnessKind,
    /// Witnesses evaluated by `sdp_mlme` when subsystem dims are given.
    pub count: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            margin: 1e-5,
            subsystem: None,
            kind: WitnessKind::Wishart,
            count: 500,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EntropyConfig {
    /// Simplex diameter and function-spread tolerance.
    pub tol: f64,
    pub restarts: usize,
    pub initial_step: f64,
    /// Penalty value outside the PSD region; `None` means `-2 log D`.
    pub s0: Option<f64>,
    /// Evaluation budget per Nelder-Mead run; `None` means `2000·n`.
    pub max_evaluations: Option<usize>,
    /// Search dimension above which the adaptive coefficients are used.
    pub adaptive_above: usize,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restarts: 5,
            initial_step: 0.1,
            s0: None,
            max_evaluations: None,
            adaptive_above: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PatternSearchConfig {
    pub initial_mesh: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub mesh_floor: f64,
    /// Wall-clock cap per candidate search, in seconds.
    pub time_cap: f64,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub max_outer: usize,
}

impl Default for PatternSearchConfig {
    fn default() -> Self {
        Self {
            initial_mesh: 0.1,
            expansion: 2.0,
            contraction: 0.5,
            mesh_floor: 1e-6,
            time_cap: 5.0,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            max_outer: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GramSearchConfig {
    pub pattern: PatternSearchConfig,
    /// `σ_min` at or below this counts as a zero eigenvalue.
    pub indep_tol: f64,
    /// Boundary probes run before the singleton check.
    pub probes: usize,
}

impl Default for GramSearchConfig {
    fn default() -> Self {
        Self {
            pattern: PatternSearchConfig::default(),
            indep_tol: 1e-6,
            probes: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SteepestAscentConfig {
    pub lambda: f64,
    /// Stop once the gradient norm drops below this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SteepestAscentConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            tol: 1e-8,
            max_iterations: 20_000,
        }
    }
}
