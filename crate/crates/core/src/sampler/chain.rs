use rand::SeedableRng;

use super::section::{section_update, SectionContext, SectionOutcome};
use super::{
    collapsed_param_update, draw_steps, origin_update, param_update, ChainState, Prior,
    SamplerConfig, TruncatedWalk, ENDPOINT_TOL,
};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ObservationSet, RefinedPath};
use crate::path::{init_path_from_obs, wrap_angle, SectionSampler};
use crate::ChainRng;

/// Acceptance-rate window for burn-in tuning.
const TUNE_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    /// 1-based iteration counted from the start of burn-in.
    pub iteration: usize,
    pub params: ModelParams,
    pub path: Option<RefinedPath>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl TraceSummary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        if v.is_empty() {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            sd: var.sqrt(),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainDiagnostics {
    pub iterations: usize,
    pub param_proposals: usize,
    pub param_accepts: usize,
    pub section_proposals: usize,
    pub section_accepts: usize,
    pub section_infeasible: usize,
    /// Accepted section updates that moved a fixed location by more than
    /// [`ENDPOINT_TOL`].
    pub constraint_violations: usize,
    pub max_endpoint_shift: f64,
    pub final_scales: [f64; 5],
    /// Summaries of the retained parameter draws.
    pub traces: [TraceSummary; 5],
}

impl ChainDiagnostics {
    pub fn param_accept_rate(&self) -> f64 {
        ratio(self.param_accepts, self.param_proposals)
    }

    pub fn section_accept_rate(&self) -> f64 {
        ratio(self.section_accepts, self.section_proposals)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Data-driven starting values from the straight-line interpolation:
/// σ_E² = 25, λ = 1, μ and σ_S² from segment speeds (matching the
/// stationary speed variance σ_S² / 2λ), σ_B² from squared turning angles
/// per unit time. λ and σ_S² are pulled inside the prior's restrictions
/// when needed.
pub fn initial_params(obs: &ObservationSet, prior: &Prior) -> ModelParams {
    let t = obs.times();
    let mut speeds = Vec::new();
    let mut headings = Vec::new();
    for i in 1..obs.len() {
        let [x0, y0] = obs.location(i - 1);
        let [x1, y1] = obs.location(i);
        speeds.push((x1 - x0).hypot(y1 - y0) / (t[i] - t[i - 1]));
        headings.push((y1 - y0).atan2(x1 - x0));
    }
    let n = speeds.len() as f64;
    let mu = (speeds.iter().sum::<f64>() / n).max(1e-3);
    let var = if speeds.len() > 1 {
        speeds.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut lambda: f64 = 1.0;
    if let Some(c) = prior.max_lambda_dt {
        lambda = lambda.min(0.5 * c / obs.dt());
    }
    let mut speed_var = var.max((0.1 * mu).powi(2));
    if let Some(k) = prior.speed_k {
        speed_var = speed_var.min((mu / (1.1 * k.max(1e-3))).powi(2));
    }
    let sigma_s2 = 2.0 * lambda * speed_var;

    let mut turn_sq = 0.0;
    let mut turn_time = 0.0;
    for i in 1..headings.len() {
        turn_sq += wrap_angle(headings[i] - headings[i - 1]).powi(2);
        turn_time += (t[i + 1] - t[i - 1]) / 2.0;
    }
    let sigma_b2 = if turn_time > 0.0 {
        (turn_sq / turn_time).max(1e-3)
    } else {
        0.1
    };
    ModelParams {
        sigma_b2,
        mu,
        lambda,
        sigma_s2,
        sigma_e2: 25.0,
    }
}

/// Run the Metropolis-within-Gibbs sampler from the interpolated path.
///
/// Fully determined by `obs` and `config` (including its seed).
pub fn run_chain(
    obs: &ObservationSet,
    config: &SamplerConfig,
) -> Result<(Vec<PosteriorSample>, ChainDiagnostics)> {
    config.validate()?;
    let mut rng = ChainRng::seed_from_u64(config.seed);
    let path = match &config.initial_path {
        Some(p) if p.len() != obs.n_steps() || p.dt() != obs.dt() => {
            return Err(Error::InvalidPath(format!(
                "starting path has {} steps of {}, observations need {} of {}",
                p.len(),
                p.dt(),
                obs.n_steps(),
                obs.dt()
            )))
        }
        Some(p) => p.clone(),
        None => init_path_from_obs(obs)?,
    };
    let start = config
        .initial
        .unwrap_or_else(|| initial_params(obs, &config.prior));
    start.validate()?;
    if config.prior.log_density(&start, obs.dt()) == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!(
            "starting parameters {start:?} are outside the prior's support"
        )));
    }
    let mut state = ChainState::new(start, path);
    let convention = config.initial_step_variance;
    if !state.log_likelihood(obs, convention).is_finite() {
        return Err(failure(0, "initial state has non-finite likelihood", state));
    }

    let ctx = SectionContext {
        sections: SectionSampler {
            min_len: config.section_len_min,
            max_len: config.section_len_max,
        },
        convention,
    };
    let mut base_scales = config
        .proposal_scales
        .unwrap_or_else(|| start.to_array().map(|v| 0.1 * v));
    let mut factor = 1.0;
    let mut walk = TruncatedWalk {
        scales: base_scales,
    };
    let tuning = config.tune && config.burn_in > 0;
    let mut burn_trace: Vec<[f64; 5]> = Vec::new();
    let mut window_accepts = 0;
    let mut next_reshape = 1;

    let mut diag = ChainDiagnostics::default();
    let mut samples = Vec::with_capacity(config.n_iterations / config.thin);
    let total = config.burn_in + config.n_iterations;

    let warmup = config.path_warmup();
    for it in 0..total {
        let mut accepted = false;
        if it >= warmup {
            accepted = if config.collapse_steps {
                match collapsed_param_update(
                    &mut state,
                    obs,
                    &walk,
                    &config.prior,
                    convention,
                    &mut rng,
                ) {
                    Ok(a) => a,
                    Err(e) => return Err(failure(it + 1, &e.to_string(), state)),
                }
            } else {
                param_update(&mut state, obs, &walk, &config.prior, convention, &mut rng)
            };
            diag.param_proposals += 1;
            diag.param_accepts += usize::from(accepted);
        } else if config.collapse_steps {
            let steps = draw_steps(state.path(), obs, state.params(), convention, &mut rng);
            if let Err(e) = steps.and_then(|s| state.set_steps(s)) {
                return Err(failure(it + 1, &e.to_string(), state));
            }
        }
        if let Err(e) = origin_update(&mut state, obs, &mut rng) {
            return Err(failure(it + 1, &e.to_string(), state));
        }

        for _ in 0..config.path_updates_per_param_update {
            diag.section_proposals += 1;
            match section_update(&mut state, obs, &ctx, &mut rng) {
                Ok(SectionOutcome::Accepted { endpoint_shift }) => {
                    diag.section_accepts += 1;
                    diag.max_endpoint_shift = diag.max_endpoint_shift.max(endpoint_shift);
                    if !(endpoint_shift <= ENDPOINT_TOL) {
                        diag.constraint_violations += 1;
                    }
                }
                Ok(SectionOutcome::Rejected) => {}
                Ok(SectionOutcome::Infeasible) => diag.section_infeasible += 1,
                Err(e) => return Err(failure(it + 1, &e.to_string(), state)),
            }
        }

        if tuning && it >= warmup && it < config.burn_in {
            burn_trace.push(state.params().to_array());
            window_accepts += usize::from(accepted);
            if (it + 1 - warmup) % TUNE_WINDOW == 0 {
                let rate = window_accepts as f64 / TUNE_WINDOW as f64;
                window_accepts = 0;
                if rate < 0.2 {
                    factor *= 0.7;
                } else if rate > 0.4 {
                    factor *= 1.4;
                }
                // Three times during burn-in, re-shape the walk from the
                // spread of the recent trace.
                if next_reshape <= 3
                    && it + 1 - warmup >= next_reshape * (config.burn_in - warmup) / 4
                    && burn_trace.len() >= 4 * TUNE_WINDOW
                {
                    next_reshape += 1;
                    let recent = &burn_trace[burn_trace.len() / 2..];
                    for (i, base) in base_scales.iter_mut().enumerate() {
                        let sd = TraceSummary::of(recent.iter().map(|p| p[i])).sd;
                        if sd.is_finite() && sd > 0.0 {
                            *base = sd;
                        }
                    }
                    factor = 2.38 / 5f64.sqrt();
                }
                walk.scales = base_scales.map(|s| s * factor);
            }
        }

        if it >= config.burn_in && (it + 1 - config.burn_in) % config.thin == 0 {
            let ll = state.log_likelihood(obs, convention);
            if !ll.is_finite() {
                return Err(failure(it + 1, "non-finite joint likelihood", state));
            }
            let keep_path = config
                .snapshot_every
                .is_some_and(|k| samples.len() % k == 0);
            samples.push(PosteriorSample {
                iteration: it + 1,
                params: *state.params(),
                path: keep_path.then(|| state.path().clone()),
            });
        }
    }

    diag.iterations = total;
    diag.final_scales = walk.scales;
    diag.traces =
        std::array::from_fn(|i| TraceSummary::of(samples.iter().map(|s| s.params.to_array()[i])));
    Ok((samples, diag))
}

fn failure(iteration: usize, message: &str, state: ChainState) -> Error {
    Error::ChainFailure {
        iteration,
        message: message.to_string(),
        state: Box::new(state),
    }
}
