//! JSON run configuration: strict parsing, defaults, and translation into
//! the typed pieces the simulator consumes.
//!
//! Unknown keys are rejected with a nearest-known-key suggestion so typos
//! surface immediately instead of silently falling back to defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NetworkError, Topology, WeightRule};
use crate::privacy::{PrivacyError, PrivacySchedule};
use crate::problems::ProblemKind;
use crate::quantizer::{QuantizerError, QuantizerSpec};
use crate::simulator::{InitRule, RunSpec, Schedules, SimError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown key `{key}` in section `{section}`{suggestion}")]
    UnknownKey { section: String, key: String, suggestion: String },
    #[error("invalid value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n: usize,
    /// "ring" | "complete" | "star" | "edge_list"
    pub topology: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    /// "metropolis" | "uniform_neighbor"
    #[serde(default = "default_weight_rule")]
    pub weights: String,
}

fn default_weight_rule() -> String {
    "metropolis".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// "quadratic" | "sine_quadratic"
    pub kind: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_samples_per_node")]
    pub samples_per_node: usize,
    /// Half-width of the per-sample perturbation around each node mean.
    #[serde(default = "default_sample_bound")]
    pub sample_bound: f64,
    /// Seed for the synthetic dataset, independent of the run seed.
    #[serde(default)]
    pub data_seed: u64,
}

fn default_dim() -> usize {
    1
}

fn default_samples_per_node() -> usize {
    100
}

fn default_sample_bound() -> f64 {
    0.1
}

/// Raw schedule coefficients and exponents; defaults follow the
/// experimental preset (a1=0.35, a2=0.3, a3=0.24, alpha=1, beta=0.75,
/// gamma=0.7).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_a1")]
    pub a1: f64,
    #[serde(default = "default_a2")]
    pub a2: f64,
    #[serde(default = "default_a3")]
    pub a3: f64,
    #[serde(default = "default_alpha_exp")]
    pub alpha_exp: f64,
    #[serde(default = "default_beta_exp")]
    pub beta_exp: f64,
    #[serde(default = "default_gamma_exp")]
    pub gamma_exp: f64,
}

fn default_a1() -> f64 {
    0.35
}

fn default_a2() -> f64 {
    0.3
}

fn default_a3() -> f64 {
    0.24
}

fn default_alpha_exp() -> f64 {
    1.0
}

fn default_beta_exp() -> f64 {
    0.75
}

fn default_gamma_exp() -> f64 {
    0.7
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            a1: default_a1(),
            a2: default_a2(),
            a3: default_a3(),
            alpha_exp: default_alpha_exp(),
            beta_exp: default_beta_exp(),
            gamma_exp: default_gamma_exp(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PrivacyConfig {
    /// Exponent sigma in `sigma_k = (k + noise_offset)^sigma_exp`.
    #[serde(default)]
    pub sigma_exp: f64,
    #[serde(default = "default_noise_offset")]
    pub noise_offset: u64,
    /// Exponent delta in `delta_k = 1/(k+1)^delta_exp`.
    #[serde(default = "default_delta_exp")]
    pub delta_exp: f64,
    /// Adjacency constant C bounding per-sample gradient swaps.
    #[serde(rename = "C", default = "default_clip")]
    pub clip: f64,
    /// Index at which the cumulative delta sum starts (0 or 1).
    #[serde(default)]
    pub delta_sum_start: usize,
    /// Multiplier on the injected noise std; 0 disables dynamics noise
    /// while leaving the accountant untouched.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
}

fn default_noise_offset() -> u64 {
    1
}

fn default_delta_exp() -> f64 {
    3.0
}

fn default_clip() -> f64 {
    0.2
}

fn default_noise_scale() -> f64 {
    1.0
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            sigma_exp: 0.0,
            noise_offset: default_noise_offset(),
            delta_exp: default_delta_exp(),
            clip: default_clip(),
            delta_sum_start: 0,
            noise_scale: default_noise_scale(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuantizerConfig {
    #[serde(default = "default_quant_delta")]
    pub delta: f64,
}

fn default_quant_delta() -> f64 {
    1.0
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        QuantizerConfig { delta: default_quant_delta() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Iteration horizon K; the loop records k = 0..=K.
    #[serde(rename = "K")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    /// "zeros" | {"constant": v} | {"uniform": [low, high]}
    #[serde(default)]
    pub init: InitConfig,
    /// Number of seeds averaged by ensemble-style analyses.
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
}

fn default_ensemble() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InitConfig {
    Zeros,
    Constant(f64),
    Uniform([f64; 2]),
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Zeros
    }
}

/// Optional parameter sweep: a Cartesian grid over quantizer steps and
/// noise exponents, repeated over `seeds` master seeds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub sigma_exps: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
}

fn default_seeds() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub privacy: PrivacyConfig,
    #[serde(default)]
    pub quantizer: QuantizerConfig,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Levenshtein distance, used only for typo suggestions in errors.
fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn nearest<'a>(key: &str, known: &[&'a str]) -> Option<&'a str> {
    known
        .iter()
        .map(|&k| (edit_distance(key, k), k))
        .min()
        .filter(|&(d, _)| d <= 3)
        .map(|(_, k)| k)
}

const SECTION_KEYS: &[(&str, &[&str])] = &[
    ("<root>", &["network", "problem", "schedule", "privacy", "quantizer", "run", "sweep"]),
    ("network", &["n", "topology", "edges", "weights"]),
    ("problem", &["kind", "dim", "samples_per_node", "sample_bound", "data_seed"]),
    ("schedule", &["a1", "a2", "a3", "alpha_exp", "beta_exp", "gamma_exp"]),
    ("privacy", &["sigma_exp", "noise_offset", "delta_exp", "C", "delta_sum_start", "noise_scale"]),
    ("quantizer", &["delta"]),
    ("run", &["K", "seed", "init", "ensemble"]),
    ("sweep", &["deltas", "sigma_exps", "seeds"]),
];

/// Walks the raw JSON looking for keys outside the schema, so the error can
/// carry a suggestion; serde's `deny_unknown_fields` alone only names the key.
fn check_unknown_keys(value: &serde_json::Value) -> Result<(), ConfigError> {
    let known_for = |section: &str| -> &[&str] {
        SECTION_KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[])
    };
    let check_obj = |section: &str, obj: &serde_json::Map<String, serde_json::Value>| {
        let known = known_for(section);
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                let suggestion = nearest(key, known)
                    .map(|s| format!(" (did you mean `{s}`?)"))
                    .unwrap_or_default();
                return Err(ConfigError::UnknownKey {
                    section: section.to_string(),
                    key: key.clone(),
                    suggestion,
                });
            }
        }
        Ok(())
    };
    if let Some(root) = value.as_object() {
        check_obj("<root>", root)?;
        for (section, sub) in root {
            if let Some(obj) = sub.as_object() {
                check_obj(section, obj)?;
            }
        }
    }
    Ok(())
}

/// Parses and validates a config from JSON text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: serde_json::Value = serde_json::from_str(text)?;
    check_unknown_keys(&raw)?;
    let cfg: RunConfig = serde_json::from_value(raw)?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.topology()?;
        self.weight_rule()?;
        self.problem_kind()?;
        if self.privacy.delta_sum_start > 1 {
            return Err(ConfigError::BadValue {
                key: "privacy.delta_sum_start".into(),
                reason: format!("must be 0 or 1, got {}", self.privacy.delta_sum_start),
            });
        }
        if !(self.privacy.noise_scale >= 0.0) {
            return Err(ConfigError::BadValue {
                key: "privacy.noise_scale".into(),
                reason: format!("must be >= 0, got {}", self.privacy.noise_scale),
            });
        }
        if let InitConfig::Uniform([low, high]) = self.run.init {
            if !(low <= high) {
                return Err(ConfigError::BadValue {
                    key: "run.init.uniform".into(),
                    reason: format!("requires low <= high, got [{low}, {high}]"),
                });
            }
        }
        Ok(())
    }

    pub fn topology(&self) -> Result<Topology, ConfigError> {
        match self.network.topology.as_str() {
            "ring" => Ok(Topology::Ring),
            "complete" => Ok(Topology::Complete),
            "star" => Ok(Topology::Star),
            "edge_list" => {
                let edges = self.network.edges.clone().ok_or_else(|| ConfigError::BadValue {
                    key: "network.edges".into(),
                    reason: "edge_list topology requires an `edges` array".into(),
                })?;
                Ok(Topology::EdgeList(edges))
            }
            other => Err(ConfigError::BadValue {
                key: "network.topology".into(),
                reason: format!("unknown topology `{other}`"),
            }),
        }
    }

    pub fn weight_rule(&self) -> Result<WeightRule, ConfigError> {
        match self.network.weights.as_str() {
            "metropolis" => Ok(WeightRule::Metropolis),
            "uniform_neighbor" => Ok(WeightRule::UniformNeighbor),
            other => Err(ConfigError::BadValue {
                key: "network.weights".into(),
                reason: format!("unknown weight rule `{other}`"),
            }),
        }
    }

    pub fn problem_kind(&self) -> Result<ProblemKind, ConfigError> {
        match self.problem.kind.as_str() {
            "quadratic" => Ok(ProblemKind::Quadratic),
            "sine_quadratic" => Ok(ProblemKind::SineQuadratic),
            other => Err(ConfigError::BadValue {
                key: "problem.kind".into(),
                reason: format!("unknown problem kind `{other}`"),
            }),
        }
    }

    pub fn schedules(&self) -> Result<Schedules, ConfigError> {
        Ok(Schedules::new(
            self.schedule.a1,
            self.schedule.a2,
            self.schedule.a3,
            self.schedule.alpha_exp,
            self.schedule.beta_exp,
            self.schedule.gamma_exp,
            self.run.horizon,
        )?)
    }

    pub fn privacy_schedule(&self) -> Result<PrivacySchedule, ConfigError> {
        Ok(PrivacySchedule::new(
            self.privacy.sigma_exp,
            self.privacy.noise_offset,
            self.privacy.delta_exp,
            self.privacy.clip,
        )?)
    }

    pub fn init_rule(&self) -> InitRule {
        match self.run.init {
            InitConfig::Zeros => InitRule::Zeros,
            InitConfig::Constant(v) => InitRule::Constant(v),
            InitConfig::Uniform([low, high]) => InitRule::Uniform { low, high },
        }
    }

    /// Assembles the simulator's run specification, applying `seed_override`
    /// when given (CLI `--seed` beats the config).
    pub fn run_spec(&self, seed_override: Option<u64>) -> Result<RunSpec, ConfigError> {
        Ok(RunSpec {
            schedules: self.schedules()?,
            quantizer: QuantizerSpec::new(self.quantizer.delta)?,
            privacy: self.privacy_schedule()?,
            delta_sum_start: self.privacy.delta_sum_start,
            noise_scale: self.privacy.noise_scale,
            seed: seed_override.unwrap_or(self.run.seed),
            init: self.init_rule(),
        })
    }
}
