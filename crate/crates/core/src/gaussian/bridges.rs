//! Joint laws of the bearing and step chains over a block of the grid,
//! free or pinned at one or both ends.
//!
//! Step laws are in ν-space. A ψ-space OU bridge is the same law scaled by
//! 1/dt, so nothing is lost by fixing ν-space here.

use nalgebra::{DMatrix, DVector};

use super::{condition_on_exact, GaussianSpec};
use crate::error::{Error, Result};
use crate::model::{step_transition, ModelParams, Normal1};

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument(
            "need at least one interior point".into(),
        ))
    } else {
        Ok(())
    }
}

/// Bearings at offsets 1..=n between pinned values at offsets 0 and n + 1.
///
/// Mean interpolates linearly; cov(i, j) = σ_B² dt · i (n + 1 - j) / (n + 1)
/// for i <= j.
pub fn brownian_bridge(
    theta_a: f64,
    theta_b: f64,
    n_interior: usize,
    sigma_b2: f64,
    dt: f64,
) -> Result<GaussianSpec> {
    check_len(n_interior)?;
    let span = (n_interior + 1) as f64;
    let mean = DVector::from_fn(n_interior, |i, _| {
        theta_a + (i + 1) as f64 / span * (theta_b - theta_a)
    });
    let cov = DMatrix::from_fn(n_interior, n_interior, |i, j| {
        let (lo, hi) = ((i.min(j) + 1) as f64, (i.max(j) + 1) as f64);
        sigma_b2 * dt * lo * (span - hi) / span
    });
    Ok(GaussianSpec::from_parts(mean, cov))
}

/// Bearings at offsets 1..=n after a pinned value at offset 0.
pub fn random_walk_forward(theta_a: f64, n: usize, sigma_b2: f64, dt: f64) -> Result<GaussianSpec> {
    check_len(n)?;
    let cov = DMatrix::from_fn(n, n, |i, j| sigma_b2 * dt * (i.min(j) + 1) as f64);
    Ok(GaussianSpec::from_parts(
        DVector::from_element(n, theta_a),
        cov,
    ))
}

/// Bearings at offsets 1..=n before a pinned value at offset n + 1, with no
/// information at the start: the walk run backwards from the anchor.
pub fn random_walk_backward(
    theta_b: f64,
    n: usize,
    sigma_b2: f64,
    dt: f64,
) -> Result<GaussianSpec> {
    check_len(n)?;
    let cov = DMatrix::from_fn(n, n, |i, j| sigma_b2 * dt * (n - i.max(j)) as f64);
    Ok(GaussianSpec::from_parts(
        DVector::from_element(n, theta_b),
        cov,
    ))
}

/// Joint law of `n` consecutive steps: the first distributed as `first`,
/// the rest following the exact AR(1) step transition.
pub fn step_chain_joint(
    first: Normal1,
    n: usize,
    params: &ModelParams,
    dt: f64,
) -> Result<GaussianSpec> {
    check_len(n)?;
    let kernel = step_transition(0.0, params, dt)?;
    let decay = (-params.lambda * dt).exp();
    let level = dt * params.mu;
    let mut mean = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    mean.push(first.mean);
    var.push(first.var);
    for i in 1..n {
        mean.push(level + decay * (mean[i - 1] - level));
        var.push(decay * decay * var[i - 1] + kernel.var);
    }
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let (lo, hi) = (i.min(j), i.max(j));
        decay.powi((hi - lo) as i32) * var[lo]
    });
    Ok(GaussianSpec::from_parts(DVector::from_vec(mean), cov))
}

/// Interior steps of the AR(1) step chain pinned at `nu_a` (offset 0) and
/// `nu_b` (offset n + 1), by conditioning the free chain on both ends.
pub fn ou_bridge(
    nu_a: f64,
    nu_b: f64,
    n_interior: usize,
    params: &ModelParams,
    dt: f64,
) -> Result<GaussianSpec> {
    check_len(n_interior)?;
    // The start law is irrelevant once pinned; the stationary law keeps the
    // joint well scaled.
    let stationary = dt * dt * params.sigma_s2 / (2.0 * params.lambda);
    let free = step_chain_joint(Normal1::new(nu_a, stationary), n_interior + 2, params, dt)?;
    let mut b = DMatrix::zeros(2, n_interior + 2);
    b[(0, 0)] = 1.0;
    b[(1, n_interior + 1)] = 1.0;
    let pinned = condition_on_exact(&free, &b, &DVector::from_column_slice(&[nu_a, nu_b]))?;
    Ok(pinned.marginal(1, n_interior))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 26.0, 0.55, 125.0, 90.0).unwrap()
    }

    #[test]
    fn bridge_midpoint_and_interpolation() {
        let b = brownian_bridge(0.0, 0.0, 1, 1.3, 0.5).unwrap();
        assert_eq!(b.mean()[0], 0.0);
        assert_relative_eq!(b.cov()[(0, 0)], 1.3 * 0.5 / 2.0, max_relative = 1e-15);

        let b = brownian_bridge(0.0, 4.0, 3, 1.0, 0.5).unwrap();
        assert_eq!(b.mean().as_slice(), &[1.0, 2.0, 3.0]);
        assert!(brownian_bridge(0.0, 1.0, 0, 1.0, 0.5).is_err());
    }

    #[test]
    fn backward_walk_mirrors_forward_walk() {
        let f = random_walk_forward(0.7, 4, 0.9, 0.5).unwrap();
        let b = random_walk_backward(0.7, 4, 0.9, 0.5).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b.cov()[(i, j)], f.cov()[(3 - i, 3 - j)]);
            }
        }
    }

    #[test]
    fn ou_bridge_through_mean_stays_at_mean() {
        let p = params();
        let dt = 0.5;
        let level = dt * p.mu;
        let b = ou_bridge(level, level, 5, &p, dt).unwrap();
        for m in b.mean().iter() {
            assert_relative_eq!(*m, level, max_relative = 1e-12);
        }
    }

    #[test]
    fn ou_bridge_decorrelated_limit() {
        let mut p = params();
        p.lambda = 80.0;
        let dt = 0.5;
        let b = ou_bridge(-40.0, 90.0, 3, &p, dt).unwrap();
        let stationary = dt * dt * p.sigma_s2 / (2.0 * p.lambda);
        for i in 0..3 {
            assert_relative_eq!(b.mean()[i], dt * p.mu, max_relative = 1e-9);
            assert_relative_eq!(b.cov()[(i, i)], stationary, max_relative = 1e-9);
        }
        assert!(b.cov()[(0, 1)].abs() < 1e-12 * stationary);
    }
}
