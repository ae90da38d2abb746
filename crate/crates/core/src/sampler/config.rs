use crate::error::{Error, Result};
use crate::model::{InitialStepVariance, ModelParams, RefinedPath};

/// Prior on the parameters: flat on the positive orthant, with two
/// optional restrictions, both on by default.
///
/// * `speed_k`: `μ >= k sqrt(σ_S² / (2λ))`, so the stationary speed law puts
///   little mass on negative speeds. Default k = 2. Observations a few grid
///   steps apart pin down the variance of displacements between them, which
///   leaves a ridge along which σ_S² grows like λ²; this restriction is what
///   stops the posterior running up that ridge.
/// * `max_lambda_dt`: `λ dt <= c`, i.e. the grid resolves the speed
///   correlation time. Without an upper bound on λ the posterior is
///   improper: as λ grows the steps become independent and the likelihood
///   levels off at a positive constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub speed_k: Option<f64>,
    pub max_lambda_dt: Option<f64>,
}

impl Default for Prior {
    fn default() -> Self {
        Self {
            speed_k: Some(2.0),
            max_lambda_dt: Some(1.0),
        }
    }
}

impl Prior {
    /// Flat on all five parameters with no restriction.
    pub fn flat() -> Self {
        Self {
            speed_k: None,
            max_lambda_dt: None,
        }
    }

    pub fn log_density(&self, p: &ModelParams, dt: f64) -> f64 {
        if p.validate().is_err() {
            return f64::NEG_INFINITY;
        }
        if let Some(k) = self.speed_k {
            if p.mu < k * (p.sigma_s2 / (2.0 * p.lambda)).sqrt() {
                return f64::NEG_INFINITY;
            }
        }
        if let Some(c) = self.max_lambda_dt {
            if p.lambda * dt > c {
                return f64::NEG_INFINITY;
            }
        }
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Retained iterations after burn-in. One iteration is one parameter
    /// update followed by `path_updates_per_param_update` section updates.
    pub n_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub path_updates_per_param_update: usize,
    pub section_len_min: usize,
    pub section_len_max: usize,
    /// Random-walk standard deviations; 10% of the initial values if unset.
    pub proposal_scales: Option<[f64; 5]>,
    /// Adapt proposal scales during burn-in towards 20-40% acceptance.
    pub tune: bool,
    /// Leading burn-in iterations that update only the path, holding the
    /// parameters at their starting values. The interpolated starting path
    /// passes through every observation; updating σ_E² against it first
    /// drives it towards zero, where section updates almost never accept.
    /// Unset means a fifth of the burn-in.
    pub path_warmup: Option<usize>,
    pub prior: Prior,
    /// Update the parameters with the steps integrated out, then redraw
    /// all steps exactly. Without it the parameters move only as fast as
    /// section updates change the steps, which is slow for λ and σ_S².
    pub collapse_steps: bool,
    /// Starting parameters; data-driven if unset.
    pub initial: Option<ModelParams>,
    /// Starting path; the interpolated path if unset.
    pub initial_path: Option<RefinedPath>,
    pub initial_step_variance: InitialStepVariance,
    /// Keep a path snapshot on every k-th retained sample.
    pub snapshot_every: Option<usize>,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_iterations: 100_000,
            burn_in: 100_000,
            thin: 100,
            path_updates_per_param_update: 50,
            section_len_min: 5,
            section_len_max: 12,
            proposal_scales: None,
            tune: true,
            path_warmup: None,
            prior: Prior::default(),
            collapse_steps: true,
            initial: None,
            initial_path: None,
            initial_step_variance: InitialStepVariance::Doubled,
            snapshot_every: Some(10),
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn path_warmup(&self) -> usize {
        self.path_warmup.unwrap_or(self.burn_in / 5)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.thin == 0 {
            return bad("thin must be >= 1".into());
        }
        if self.section_len_min < 3 || self.section_len_max < self.section_len_min {
            return bad(format!(
                "section lengths [{}, {}] must satisfy 3 <= min <= max",
                self.section_len_min, self.section_len_max
            ));
        }
        if let Some(s) = self.proposal_scales {
            if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return bad(format!("proposal scales must be > 0, got {s:?}"));
            }
        }
        if let Some(k) = self.prior.speed_k {
            if !(k.is_finite() && k >= 0.0) {
                return bad(format!("speed prior constant must be >= 0, got {k}"));
            }
        }
        if let Some(c) = self.prior.max_lambda_dt {
            if !(c.is_finite() && c > 0.0) {
                return bad(format!("bound on lambda * dt must be > 0, got {c}"));
            }
        }
        if self.path_warmup.is_some_and(|w| w > self.burn_in) {
            return bad(format!(
                "path warm-up {:?} exceeds burn-in {}",
                self.path_warmup, self.burn_in
            ));
        }
        if self.snapshot_every == Some(0) {
            return bad("snapshot_every must be >= 1".into());
        }
        if let Some(p) = &self.initial {
            p.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_constraint() {
        let p = ModelParams::new(1.0, 26.0, 0.55, 125.0, 90.0).unwrap();
        assert_eq!(Prior::flat().log_density(&p, 0.5), 0.0);
        // sqrt(125 / 1.1) = 10.66
        let k2 = Prior {
            speed_k: Some(2.0),
            ..Prior::flat()
        };
        assert_eq!(k2.log_density(&p, 0.5), 0.0);
        let k25 = Prior {
            speed_k: Some(2.5),
            ..Prior::flat()
        };
        assert_eq!(k25.log_density(&p, 0.5), f64::NEG_INFINITY);
        let mut neg = p;
        neg.lambda = -1.0;
        assert_eq!(Prior::flat().log_density(&neg, 0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn reversion_rate_bound() {
        let mut p = ModelParams::new(1.0, 26.0, 0.55, 125.0, 90.0).unwrap();
        let prior = Prior::default();
        assert_eq!(prior.log_density(&p, 0.5), 0.0);
        p.lambda = 2.0;
        assert_eq!(prior.log_density(&p, 0.5), 0.0);
        p.lambda = 2.01;
        assert_eq!(prior.log_density(&p, 0.5), f64::NEG_INFINITY);
        assert_eq!(Prior::flat().log_density(&p, 0.5), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        let c = SamplerConfig {
            section_len_min: 2,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SamplerConfig {
            thin: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = SamplerConfig {
            proposal_scales: Some([1.0, 0.0, 1.0, 1.0, 1.0]),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
