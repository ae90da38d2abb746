use std::f64::consts::PI;

use rand::Rng;

use super::{InitialStepVariance, ModelParams, Normal1};
use crate::error::{Error, Result};

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            name: "lambda",
            value: lambda,
        })
    }
}

/// θ(t + dt) | θ(t) ~ N(θ(t), σ_B² dt).
pub fn bearing_transition(theta_prev: f64, params: &ModelParams, dt: f64) -> Result<Normal1> {
    check_dt(dt)?;
    Ok(Normal1::new(theta_prev, params.sigma_b2 * dt))
}

/// Exact OU transition of the speed over `dt`.
pub fn speed_transition(psi_prev: f64, params: &ModelParams, dt: f64) -> Result<Normal1> {
    check_dt(dt)?;
    check_lambda(params.lambda)?;
    let decay = (-params.lambda * dt).exp();
    let mean = params.mu + decay * (psi_prev - params.mu);
    // 1 - e^{-2λdt} via expm1 keeps precision for small λdt.
    let var = params.sigma_s2 / (2.0 * params.lambda) * -(-2.0 * params.lambda * dt).exp_m1();
    Ok(Normal1::new(mean, var))
}

/// The speed transition pushed to step space, ν = ψ dt. This is a density
/// over ν, so it already carries the 1/dt change-of-variables factor.
pub fn step_transition(nu_prev: f64, params: &ModelParams, dt: f64) -> Result<Normal1> {
    let speed = speed_transition(nu_prev / dt, params, dt)?;
    Ok(Normal1::new(speed.mean * dt, speed.var * dt * dt))
}

/// ν_1 ~ N(dt μ, v) with `v` set by the chosen convention.
pub fn initial_step_dist(
    params: &ModelParams,
    dt: f64,
    convention: InitialStepVariance,
) -> Result<Normal1> {
    check_dt(dt)?;
    check_lambda(params.lambda)?;
    let var = match convention {
        InitialStepVariance::Doubled => dt * dt * params.sigma_s2 / params.lambda,
        InitialStepVariance::Stationary => dt * dt * params.sigma_s2 / (2.0 * params.lambda),
    };
    Ok(Normal1::new(dt * params.mu, var))
}

/// θ_1 ~ U(-π, π).
///
/// Bearings are unwrapped, so when scoring a path the first bearing is
/// reduced onto the circle first: [`InitialBearing::circular_log_density`].
#[derive(Debug, Clone, Copy, Default)]
pub struct InitialBearing;

impl InitialBearing {
    pub fn density(&self, theta: f64) -> f64 {
        if (-PI..PI).contains(&theta) {
            1.0 / (2.0 * PI)
        } else {
            0.0
        }
    }

    pub fn log_density(&self, theta: f64) -> f64 {
        self.density(theta).ln()
    }

    /// Log-density of the direction θ mod 2π; constant.
    pub fn circular_log_density(&self) -> f64 {
        -(2.0 * PI).ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(-PI..PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn reference() -> ModelParams {
        ModelParams::new(0.9, 26.0, 0.55, 125.0, 90.0).unwrap()
    }

    #[test]
    fn bearing_transition_is_brownian() {
        let mut p = reference();
        p.sigma_b2 = 1.0;
        let k = bearing_transition(0.0, &p, 0.5).unwrap();
        assert_eq!((k.mean, k.var), (0.0, 0.5));
        let k = bearing_transition(2.3, &reference(), 0.5).unwrap();
        assert_eq!(k.mean, 2.3);
        assert_relative_eq!(k.var, 0.45, max_relative = 1e-15);
        assert!(bearing_transition(0.0, &p, 0.0).is_err());
        assert!(bearing_transition(0.0, &p, -1.0).is_err());
    }

    #[test]
    fn bearing_variance_is_additive() {
        let p = reference();
        let half = bearing_transition(0.0, &p, 0.25).unwrap().var;
        let full = bearing_transition(0.0, &p, 0.5).unwrap().var;
        assert_eq!(half + half, full);
    }

    #[test]
    fn speed_transition_reference_values() {
        let mut p = reference();
        p.sigma_s2 = 125.0;
        // 30-digit evaluation of the closed form.
        let k = speed_transition(0.0, &p, 0.5).unwrap();
        assert_relative_eq!(k.mean, 6.251_124_796_150_819_616_778, max_relative = 1e-14);
        assert_relative_eq!(k.var, 48.073_885_184_035_602_804_617, max_relative = 1e-14);

        let fixed = speed_transition(p.mu, &p, 3.7).unwrap();
        assert_relative_eq!(fixed.mean, p.mu, max_relative = 1e-15);

        let mut bad = p;
        bad.lambda = 0.0;
        assert!(speed_transition(0.0, &bad, 0.5).is_err());
        assert!(speed_transition(0.0, &p, 0.0).is_err());
    }

    #[test]
    fn step_transition_scales_speed_kernel() {
        let p = reference();
        let dt = 0.5;
        let s = speed_transition(20.0, &p, dt).unwrap();
        let n = step_transition(20.0 * dt, &p, dt).unwrap();
        assert_relative_eq!(n.mean, s.mean * dt, max_relative = 1e-15);
        assert_relative_eq!(n.var, s.var * dt * dt, max_relative = 1e-15);
        // Density over ν is the ψ density divided by dt.
        let nu = 11.0;
        assert_relative_eq!(
            n.log_pdf(nu),
            s.log_pdf(nu / dt) - dt.ln(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn initial_step_law() {
        let p = ModelParams::new(1.0, 26.0, 0.55, 125.0, 90.0).unwrap();
        let d = initial_step_dist(&p, 0.5, InitialStepVariance::Doubled).unwrap();
        assert_eq!(d.mean, 13.0);
        assert_relative_eq!(d.var, 0.25 * 125.0 / 0.55, max_relative = 1e-15);
        let s = initial_step_dist(&p, 0.5, InitialStepVariance::Stationary).unwrap();
        assert_relative_eq!(s.var, d.var / 2.0, max_relative = 1e-15);
        let d2 = initial_step_dist(&p, 1.0, InitialStepVariance::Doubled).unwrap();
        assert_relative_eq!(d2.mean, 2.0 * d.mean);

        let mut flat = p;
        flat.sigma_s2 = 0.0;
        let point = initial_step_dist(&flat, 0.5, InitialStepVariance::Doubled).unwrap();
        assert_eq!(point.var, 0.0);
        assert_eq!(point.log_pdf(13.0), 0.0);
        assert_eq!(point.log_pdf(13.1), f64::NEG_INFINITY);
    }

    #[test]
    fn initial_bearing_is_uniform() {
        let u = InitialBearing;
        assert_relative_eq!(u.density(0.0), 1.0 / (2.0 * PI));
        assert_eq!(u.density(PI / 2.0), u.density(-PI / 2.0));
        assert_eq!(u.density(PI + 0.1), 0.0);
        assert_eq!(u.log_density(1.0), u.circular_log_density());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mean_cos = (0..n).map(|_| u.sample(&mut rng).cos()).sum::<f64>() / n as f64;
        // Var(cos θ) = 1/2.
        let band = 3.0 * (0.5 / n as f64).sqrt();
        assert!(mean_cos.abs() < band, "mean cos {mean_cos} outside ±{band}");
    }
}
