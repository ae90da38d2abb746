//! Run configuration, read from TOML. Every section and key is optional;
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use ctsteps::{InitialStepVariance, ModelParams, Prior, SamplerConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Refined-grid time step (minutes).
    pub dt: f64,
    pub output_dir: PathBuf,
    pub initial_step_variance: StepVarianceConvention,
    /// Parameters used by `simulate` and `study`.
    pub truth: ParamValues,
    pub simulate: SimulateSection,
    pub sampler: SamplerSection,
    pub prior: PriorSection,
    pub study: StudySection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepVarianceConvention {
    Doubled,
    Stationary,
}

impl From<StepVarianceConvention> for InitialStepVariance {
    fn from(c: StepVarianceConvention) -> Self {
        match c {
            StepVarianceConvention::Doubled => InitialStepVariance::Doubled,
            StepVarianceConvention::Stationary => InitialStepVariance::Stationary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamValues {
    pub sigma_b2: f64,
    pub mu: f64,
    pub lambda: f64,
    pub sigma_s2: f64,
    pub sigma_e2: f64,
}

impl Default for ParamValues {
    fn default() -> Self {
        Self {
            sigma_b2: 1.0,
            mu: 26.0,
            lambda: 0.55,
            sigma_s2: 125.0,
            sigma_e2: 90.0,
        }
    }
}

impl From<ParamValues> for ModelParams {
    fn from(p: ParamValues) -> Self {
        ModelParams::from_array([p.sigma_b2, p.mu, p.lambda, p.sigma_s2, p.sigma_e2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub n_obs: usize,
    /// Minutes between observations; a whole number of grid steps.
    pub obs_interval: f64,
    pub origin: [f64; 2],
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            n_obs: 50,
            obs_interval: 2.0,
            origin: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    /// Retained iterations after burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub path_updates: usize,
    pub section_min: usize,
    pub section_max: usize,
    pub tune: bool,
    /// Integrate the steps out of the parameter update and redraw them exactly.
    pub collapse_steps: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_warmup: Option<usize>,
    /// Keep a path snapshot on every k-th retained sample; 0 keeps none.
    pub snapshot_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal_scales: Option<[f64; 5]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<ParamValues>,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let d = SamplerConfig::default();
        Self {
            iterations: d.n_iterations,
            burn_in: d.burn_in,
            thin: d.thin,
            path_updates: d.path_updates_per_param_update,
            section_min: d.section_len_min,
            section_max: d.section_len_max,
            tune: d.tune,
            collapse_steps: d.collapse_steps,
            path_warmup: None,
            snapshot_every: d.snapshot_every.unwrap_or(0),
            proposal_scales: None,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    /// Reject μ < k sqrt(σ_S² / 2λ).
    pub speed_constraint: bool,
    pub speed_k: f64,
    /// Upper bound on λ dt; 0 removes it.
    pub max_lambda_dt: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        let d = Prior::default();
        Self {
            speed_constraint: d.speed_k.is_some(),
            speed_k: d.speed_k.unwrap_or(2.0),
            max_lambda_dt: d.max_lambda_dt.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub replicates: usize,
    pub level: f64,
    /// Worker threads; all cores when 0.
    pub threads: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            replicates: 10,
            level: 0.9,
            threads: 0,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dt: 0.5,
            output_dir: PathBuf::from("out"),
            initial_step_variance: StepVarianceConvention::Doubled,
            truth: ParamValues::default(),
            simulate: SimulateSection::default(),
            sampler: SamplerSection::default(),
            prior: PriorSection::default(),
            study: StudySection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, so overrides change the hash.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn truth_params(&self) -> CliResult<ModelParams> {
        let p = ModelParams::from(self.truth);
        p.validate_for_simulation()
            .map_err(|e| CliError::Input(format!("truth: {e}")))?;
        Ok(p)
    }

    pub fn sampler_config(&self) -> CliResult<SamplerConfig> {
        let s = &self.sampler;
        let prior = Prior {
            speed_k: self.prior.speed_constraint.then_some(self.prior.speed_k),
            max_lambda_dt: (self.prior.max_lambda_dt > 0.0).then_some(self.prior.max_lambda_dt),
        };
        let config = SamplerConfig {
            n_iterations: s.iterations,
            burn_in: s.burn_in,
            thin: s.thin,
            path_updates_per_param_update: s.path_updates,
            section_len_min: s.section_min,
            section_len_max: s.section_max,
            proposal_scales: s.proposal_scales,
            tune: s.tune,
            path_warmup: s.path_warmup,
            prior,
            collapse_steps: s.collapse_steps,
            initial: s.initial.map(ModelParams::from),
            initial_path: None,
            initial_step_variance: self.initial_step_variance.into(),
            snapshot_every: (s.snapshot_every > 0).then_some(s.snapshot_every),
            seed: self.seed,
        };
        config
            .validate()
            .map_err(|e| CliError::Input(format!("sampler: {e}")))?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CliError::Input(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.study.level > 0.0 && self.study.level < 1.0) {
            return Err(CliError::Input(format!(
                "study level must be in (0, 1), got {}",
                self.study.level
            )));
        }
        self.sampler_config().map(|_| ())
    }

    /// Grid steps between simulated observations.
    pub fn steps_per_obs(&self) -> CliResult<usize> {
        let ratio = self.simulate.obs_interval / self.dt;
        let k = ratio.round();
        if !(k >= 1.0) || (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
            return Err(CliError::Input(format!(
                "observation interval {} is not a whole number of steps of {}",
                self.simulate.obs_interval, self.dt
            )));
        }
        Ok(k as usize)
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub iterations: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(n) = self.iterations {
            cfg.sampler.iterations = n;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
    }
}
