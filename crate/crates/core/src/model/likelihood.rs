use super::{
    initial_step_dist, step_transition, InitialBearing, InitialStepVariance, ModelParams, Normal1,
    ObservationSet, RefinedPath,
};
use crate::error::{Error, Result};
use crate::path::reconstruct_locations;

/// Log-likelihood of a refined path.
///
/// Sums the initial bearing and step densities and the bearing/step
/// transition densities for i >= 2. Steps are scored in ν-space, so the
/// 1/dt Jacobian of ν = ψ dt is included; it is a constant for fixed dt and
/// cancels in every Metropolis ratio.
pub fn path_log_likelihood(
    path: &RefinedPath,
    params: &ModelParams,
    convention: InitialStepVariance,
) -> Result<f64> {
    let dt = path.dt();
    let theta = path.bearings();
    let nu = path.steps();

    let mut ll = InitialBearing.circular_log_density()
        + initial_step_dist(params, dt, convention)?.log_pdf(nu[0]);
    if path.len() == 1 {
        return Ok(ll);
    }

    // Constants of the transition kernels, hoisted out of the loop.
    let probe = step_transition(0.0, params, dt)?;
    let decay = (-params.lambda * dt).exp();
    let step_mean = dt * params.mu;
    let bearing = Normal1::new(0.0, params.sigma_b2 * dt);
    let step = Normal1::new(0.0, probe.var);

    for i in 1..path.len() {
        ll += bearing.log_pdf(theta[i] - theta[i - 1]);
        ll += step.log_pdf(nu[i] - step_mean - decay * (nu[i - 1] - step_mean));
    }
    Ok(ll)
}

/// The bearing terms of [`path_log_likelihood`] alone.
pub fn bearing_log_likelihood(path: &RefinedPath, params: &ModelParams) -> f64 {
    let bearing = Normal1::new(0.0, params.sigma_b2 * path.dt());
    InitialBearing.circular_log_density()
        + path
            .bearings()
            .windows(2)
            .map(|w| bearing.log_pdf(w[1] - w[0]))
            .sum::<f64>()
}

/// Log-likelihood of the observations given the path as the true track:
/// independent N(0, σ_E²) errors on each coordinate.
pub fn error_log_likelihood(
    path: &RefinedPath,
    obs: &ObservationSet,
    params: &ModelParams,
) -> Result<f64> {
    if let Some(&k) = obs.grid_index().iter().find(|&&k| k > path.len()) {
        return Err(Error::InvalidObservations(format!(
            "observation at node {k} beyond path of {} steps",
            path.len()
        )));
    }
    let locations = reconstruct_locations(path);
    Ok(error_log_likelihood_at(&locations, obs, params.sigma_e2))
}

/// Error log-likelihood given precomputed node locations.
pub(crate) fn error_log_likelihood_at(
    locations: &[[f64; 2]],
    obs: &ObservationSet,
    sigma_e2: f64,
) -> f64 {
    let err = Normal1::new(0.0, sigma_e2);
    (0..obs.len())
        .map(|i| {
            let at = locations[obs.grid_index()[i]];
            err.log_pdf(obs.xs()[i] - at[0]) + err.log_pdf(obs.ys()[i] - at[1])
        })
        .sum()
}
