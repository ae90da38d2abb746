use rand::Rng;

use super::{
    bearing_transition, initial_step_dist, speed_transition, InitialBearing, InitialStepVariance,
    ModelParams, RefinedPath,
};
use crate::error::{Error, Result};

/// Forward-simulate `n_steps` bearings and steps.
///
/// θ_1 is uniform, ν_1 follows the initial step law; later values follow the
/// transition kernels, with the speed chain evolved as ψ = ν / dt.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &ModelParams,
    n_steps: usize,
    dt: f64,
    origin: [f64; 2],
    convention: InitialStepVariance,
    rng: &mut R,
) -> Result<RefinedPath> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    params.validate_for_simulation()?;

    let mut bearings = Vec::with_capacity(n_steps);
    let mut steps = Vec::with_capacity(n_steps);
    let mut theta = InitialBearing.sample(rng);
    let mut psi = initial_step_dist(params, dt, convention)?.sample(rng) / dt;
    bearings.push(theta);
    steps.push(psi * dt);
    for _ in 1..n_steps {
        theta = bearing_transition(theta, params, dt)?.sample(rng);
        psi = speed_transition(psi, params, dt)?.sample(rng);
        bearings.push(theta);
        steps.push(psi * dt);
    }
    RefinedPath::new(origin, dt, bearings, steps)
}
