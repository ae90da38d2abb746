use rand::Rng;
use rand_distr::StandardNormal;

use super::mh::{mh_step, TruncatedWalk};
use super::Prior;
use crate::error::Result;
use crate::model::error_log_likelihood_at;
use crate::model::{
    path_log_likelihood, InitialStepVariance, ModelParams, ObservationSet, RefinedPath,
};
use crate::path::reconstruct_locations;

/// Current parameters and refined path, with cached node locations.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    params: ModelParams,
    path: RefinedPath,
    locations: Vec<[f64; 2]>,
}

impl ChainState {
    pub fn new(params: ModelParams, path: RefinedPath) -> Self {
        let locations = reconstruct_locations(&path);
        Self {
            params,
            path,
            locations,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn path(&self) -> &RefinedPath {
        &self.path
    }

    pub fn locations(&self) -> &[[f64; 2]] {
        &self.locations
    }

    pub fn set_params(&mut self, params: ModelParams) {
        self.params = params;
    }

    /// Move the whole path so that node 0 sits at `origin`.
    pub fn set_origin(&mut self, origin: [f64; 2]) -> Result<()> {
        let old = self.path.origin();
        self.path.set_origin(origin)?;
        let shift = [origin[0] - old[0], origin[1] - old[1]];
        for l in &mut self.locations {
            l[0] += shift[0];
            l[1] += shift[1];
        }
        Ok(())
    }

    pub fn set_steps(&mut self, steps: Vec<f64>) -> Result<()> {
        self.path.set_steps(steps)?;
        self.locations = reconstruct_locations(&self.path);
        Ok(())
    }

    pub(crate) fn splice(&mut self, first: usize, bearings: &[f64], steps: &[f64]) -> Result<()> {
        self.path.splice(first, bearings, steps)?;
        self.locations = reconstruct_locations(&self.path);
        Ok(())
    }

    /// Joint log-likelihood of observations and path at the current state.
    pub fn log_likelihood(&self, obs: &ObservationSet, convention: InitialStepVariance) -> f64 {
        joint_log_likelihood_cached(&self.path, &self.locations, obs, &self.params, convention)
    }
}

/// log L(path | Φ) + log L(observations | path, Φ).
pub fn joint_log_likelihood(
    path: &RefinedPath,
    obs: &ObservationSet,
    params: &ModelParams,
    convention: InitialStepVariance,
) -> f64 {
    let locations = reconstruct_locations(path);
    joint_log_likelihood_cached(path, &locations, obs, params, convention)
}

fn joint_log_likelihood_cached(
    path: &RefinedPath,
    locations: &[[f64; 2]],
    obs: &ObservationSet,
    params: &ModelParams,
    convention: InitialStepVariance,
) -> f64 {
    let Ok(path_ll) = path_log_likelihood(path, params, convention) else {
        return f64::NEG_INFINITY;
    };
    path_ll + error_log_likelihood_at(locations, obs, params.sigma_e2)
}

/// Gibbs draw of the path origin with the shape of the path held fixed.
///
/// Under a flat prior every observation `z_i = origin + s_i + e_i`, with
/// `s_i` the offset of its node from node 0, so the origin is
/// N(mean(z_i - s_i), σ_E² / m) on each coordinate.
pub fn origin_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    obs: &ObservationSet,
    rng: &mut R,
) -> Result<()> {
    let o = state.path.origin();
    let m = obs.len() as f64;
    let mut centre = [0.0; 2];
    for (i, &k) in obs.grid_index().iter().enumerate() {
        let at = state.locations[k];
        centre[0] += (obs.xs()[i] - (at[0] - o[0])) / m;
        centre[1] += (obs.ys()[i] - (at[1] - o[1])) / m;
    }
    let sd = (state.params.sigma_e2 / m).sqrt();
    let origin = centre.map(|c| c + sd * rng.sample::<f64, _>(StandardNormal));
    state.set_origin(origin)
}

/// Metropolis-Hastings update of all five parameters at once, targeting
/// prior × joint likelihood. Returns whether the proposal was accepted.
pub fn param_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    obs: &ObservationSet,
    walk: &TruncatedWalk,
    prior: &Prior,
    convention: InitialStepVariance,
    rng: &mut R,
) -> bool {
    let log_target = |p: &[f64; 5]| {
        let params = ModelParams::from_array(*p);
        let lp = prior.log_density(&params, state.path.dt());
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + joint_log_likelihood_cached(&state.path, &state.locations, obs, &params, convention)
    };
    let current = state.params.to_array();
    let current_lt = log_target(&current);
    let (next, _, accepted) = mh_step(current, current_lt, walk, rng, log_target);
    state.params = ModelParams::from_array(next);
    accepted
}
