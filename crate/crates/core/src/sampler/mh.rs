use libm::erfc;
use rand::Rng;
use rand_distr::StandardNormal;

/// ln Φ(x) for the standard normal CDF.
pub fn log_std_normal_cdf(x: f64) -> f64 {
    (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
}

/// Independent Normal random walks on each coordinate, truncated below at
/// zero and centred on the current value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedWalk {
    pub scales: [f64; 5],
}

impl TruncatedWalk {
    pub fn propose<R: Rng + ?Sized>(&self, current: &[f64; 5], rng: &mut R) -> [f64; 5] {
        let mut out = [0.0; 5];
        for ((o, &c), &s) in out.iter_mut().zip(current).zip(&self.scales) {
            // Current values are positive, so each try succeeds with
            // probability at least 1/2.
            *o = loop {
                let z: f64 = rng.sample(StandardNormal);
                let v = c + s * z;
                if v > 0.0 {
                    break v;
                }
            };
        }
        out
    }

    /// log q(current | proposed) - log q(proposed | current). The Gaussian
    /// kernels are symmetric; only the truncation normalizers remain:
    /// Σ ln Φ(φ_i / s_i) - ln Φ(φ'_i / s_i).
    pub fn log_hastings_correction(&self, current: &[f64; 5], proposed: &[f64; 5]) -> f64 {
        (0..5)
            .map(|i| {
                let s = self.scales[i];
                log_std_normal_cdf(current[i] / s) - log_std_normal_cdf(proposed[i] / s)
            })
            .sum()
    }
}

/// One Metropolis-Hastings step with the truncated walk. Returns the new
/// point, its log target, and whether the proposal was accepted.
pub fn mh_step<R: Rng + ?Sized>(
    current: [f64; 5],
    current_log_target: f64,
    walk: &TruncatedWalk,
    rng: &mut R,
    mut log_target: impl FnMut(&[f64; 5]) -> f64,
) -> ([f64; 5], f64, bool) {
    let proposed = walk.propose(&current, rng);
    let proposed_log_target = log_target(&proposed);
    let log_alpha = proposed_log_target - current_log_target
        + walk.log_hastings_correction(&current, &proposed);
    let u: f64 = rng.random();
    // NaN compares false and is rejected.
    if u.ln() < log_alpha {
        (proposed, proposed_log_target, true)
    } else {
        (current, current_log_target, false)
    }
}
