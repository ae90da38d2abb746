//! Steps integrated out given the bearings.
//!
//! With bearings and origin fixed, node locations are linear in the steps
//! and the steps are an AR(1) chain, so (step, x offset, y offset) is a
//! linear Gaussian state-space model. A Kalman filter gives the likelihood
//! of the observations with the steps marginalised; backward sampling
//! draws all steps from their exact conditional.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use super::mh::{mh_step, TruncatedWalk};
use super::{ChainState, Prior};
use crate::error::{Error, Result};
use crate::model::{
    bearing_log_likelihood, initial_step_dist, step_transition, InitialStepVariance, ModelParams,
    ObservationSet, RefinedPath,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Filtered means and covariances of (ν_k, x_k - x_0, y_k - y_0) for
/// k = 1..=n, and the log-likelihood of all observations.
struct Filtered {
    means: Vec<Vector3<f64>>,
    covs: Vec<Matrix3<f64>>,
    log_lik: f64,
}

fn unit(theta: f64) -> Vector3<f64> {
    Vector3::new(1.0, theta.cos(), theta.sin())
}

fn filter(
    path: &RefinedPath,
    obs: &ObservationSet,
    params: &ModelParams,
    convention: InitialStepVariance,
    keep: bool,
) -> Result<Filtered> {
    let dt = path.dt();
    let first = initial_step_dist(params, dt, convention)?;
    let q = step_transition(0.0, params, dt)?.var;
    let decay = (-params.lambda * dt).exp();
    let drift = dt * params.mu * (1.0 - decay);
    let e2 = params.sigma_e2;
    if !(e2 > 0.0) {
        return Err(Error::InvalidParam {
            name: "sigma_e2",
            value: e2,
        });
    }
    let origin = path.origin();
    let n = path.len();

    let mut observed = vec![None; n + 1];
    for (i, &k) in obs.grid_index().iter().enumerate() {
        observed[k] = Some(Vector2::new(
            obs.xs()[i] - origin[0],
            obs.ys()[i] - origin[1],
        ));
    }
    let mut log_lik = 0.0;
    if let Some(r) = observed[0] {
        log_lik -= LN_2PI + e2.ln() + r.norm_squared() / (2.0 * e2);
    }

    let mut means = Vec::with_capacity(if keep { n } else { 0 });
    let mut covs = Vec::with_capacity(if keep { n } else { 0 });
    let mut a = Vector3::zeros();
    let mut p = Matrix3::zeros();
    for k in 1..=n {
        let g = unit(path.bearing(k));
        if k == 1 {
            a = g * first.mean;
            p = g * g.transpose() * first.var;
        } else {
            let f = Matrix3::new(
                decay,
                0.0,
                0.0,
                g[1] * decay,
                1.0,
                0.0,
                g[2] * decay,
                0.0,
                1.0,
            );
            a = f * a + g * drift;
            p = f * p * f.transpose() + g * g.transpose() * q;
        }
        if let Some(z) = observed[k] {
            let s = p.fixed_view::<2, 2>(1, 1) + Matrix2::identity() * e2;
            let chol = s
                .cholesky()
                .ok_or_else(|| Error::Numerical("innovation covariance not positive".into()))?;
            let v = z - a.fixed_rows::<2>(1);
            let cross = p.fixed_view::<3, 2>(0, 1).into_owned();
            let gain = chol.solve(&cross.transpose()).transpose();
            let l = chol.l();
            log_lik -= LN_2PI + (l[(0, 0)] * l[(1, 1)]).ln() + 0.5 * v.dot(&chol.solve(&v));
            a += gain * v;
            p -= gain * cross.transpose();
            p = (p + p.transpose()) * 0.5;
        }
        if keep {
            means.push(a);
            covs.push(p);
        }
    }
    Ok(Filtered {
        means,
        covs,
        log_lik,
    })
}

/// log p(observations | bearings, origin, Φ) with every step integrated out.
pub fn marginal_step_log_likelihood(
    path: &RefinedPath,
    obs: &ObservationSet,
    params: &ModelParams,
    convention: InitialStepVariance,
) -> Result<f64> {
    Ok(filter(path, obs, params, convention, false)?.log_lik)
}

/// Pseudo-inverse of a symmetric 3x3 matrix, dropping eigenvalues below
/// a relative tolerance.
fn pinv3(m: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = m.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |t, v| t.max(v.abs()));
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        let v = eig.eigenvalues[i];
        if v > 1e-12 * top {
            let u = eig.eigenvectors.column(i);
            out += u * u.transpose() / v;
        }
    }
    out
}

/// Draw every step from its conditional given bearings, origin,
/// observations and Φ.
pub fn draw_steps<R: Rng + ?Sized>(
    path: &RefinedPath,
    obs: &ObservationSet,
    params: &ModelParams,
    convention: InitialStepVariance,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let f = filter(path, obs, params, convention, true)?;
    let n = path.len();
    let q = step_transition(0.0, params, path.dt())?.var;
    let decay = (-params.lambda * path.dt()).exp();
    let drift = path.dt() * params.mu * (1.0 - decay);
    let mut steps = vec![0.0; n];

    // Last state from its filtered law, through a clipped eigen root.
    let eig = f.covs[n - 1].symmetric_eigen();
    let mut s = f.means[n - 1];
    for i in 0..3 {
        let sd = eig.eigenvalues[i].max(0.0).sqrt();
        s += eig.eigenvectors.column(i) * (sd * rng.sample::<f64, _>(StandardNormal));
    }
    steps[n - 1] = s[0];
    let (mut x, mut y) = (s[1], s[2]);

    for k in (1..n).rev() {
        // Given step k+1, offsets at k follow exactly; step k is Gaussian
        // given (x_k, y_k, ν_{k+1}).
        let g = unit(path.bearing(k + 1));
        x -= g[1] * steps[k];
        y -= g[2] * steps[k];
        let (a, p) = (&f.means[k - 1], &f.covs[k - 1]);
        let mean_y = Vector3::new(a[1], a[2], drift + decay * a[0]);
        let cov_y = Matrix3::new(
            p[(1, 1)],
            p[(1, 2)],
            decay * p[(1, 0)],
            p[(2, 1)],
            p[(2, 2)],
            decay * p[(2, 0)],
            decay * p[(0, 1)],
            decay * p[(0, 2)],
            decay * decay * p[(0, 0)] + q,
        );
        let cross = Vector3::new(p[(0, 1)], p[(0, 2)], decay * p[(0, 0)]);
        let w = pinv3(&cov_y) * cross;
        let mean = a[0] + w.dot(&(Vector3::new(x, y, steps[k]) - mean_y));
        let var = (p[(0, 0)] - w.dot(&cross)).max(0.0);
        steps[k - 1] = mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(steps)
}

/// Metropolis-Hastings update of the five parameters with the steps
/// integrated out, followed by a fresh draw of all steps. Together these
/// are an exact update of (Φ, steps) given bearings and origin.
pub fn collapsed_param_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    obs: &ObservationSet,
    walk: &TruncatedWalk,
    prior: &Prior,
    convention: InitialStepVariance,
    rng: &mut R,
) -> Result<bool> {
    let path = state.path().clone();
    let log_target = |p: &[f64; 5]| {
        let params = ModelParams::from_array(*p);
        let lp = prior.log_density(&params, path.dt());
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        let bearings = bearing_log_likelihood(&path, &params);
        match marginal_step_log_likelihood(&path, obs, &params, convention) {
            Ok(ll) => lp + bearings + ll,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let current = state.params().to_array();
    let current_lt = log_target(&current);
    let (next, _, accepted) = mh_step(current, current_lt, walk, rng, log_target);
    state.set_params(ModelParams::from_array(next));
    let steps = draw_steps(&path, obs, state.params(), convention, rng)?;
    state.set_steps(steps)?;
    Ok(accepted)
}
