//! The filtered step likelihood and step draws against dense Gaussian
//! conditioning of the whole step vector.

use ctsteps::gaussian::{condition_on_noisy, logpdf_degenerate, step_chain_joint};
use ctsteps::model::{initial_step_dist, simulate_path};
use ctsteps::path::reconstruct_locations;
use ctsteps::sampler::{draw_steps, marginal_step_log_likelihood};
use ctsteps::{
    ChainRng, GaussianSpec, InitialStepVariance, LinearObservationModel, ModelParams,
    ObservationSet, RefinedPath,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn observe(path: &RefinedPath, every: usize, sigma_e2: f64, rng: &mut ChainRng) -> ObservationSet {
    let loc = reconstruct_locations(path);
    let noise = Normal::new(0.0, sigma_e2.sqrt()).unwrap();
    let nodes: Vec<usize> = (0..=path.len()).step_by(every).collect();
    ObservationSet::on_grid(
        nodes.iter().map(|&k| k as f64 * path.dt()).collect(),
        nodes
            .iter()
            .map(|&k| loc[k][0] + noise.sample(rng))
            .collect(),
        nodes
            .iter()
            .map(|&k| loc[k][1] + noise.sample(rng))
            .collect(),
        path.dt(),
    )
    .unwrap()
}

/// Dense prior of the steps, the observation model of every fix past the
/// origin, those fixes stacked, and the log-density of a fix at the origin.
fn dense(
    path: &RefinedPath,
    obs: &ObservationSet,
    params: &ModelParams,
    convention: InitialStepVariance,
) -> (GaussianSpec, LinearObservationModel, DVector<f64>, f64) {
    let n = path.len();
    let first = initial_step_dist(params, path.dt(), convention).unwrap();
    let prior = step_chain_joint(first, n, params, path.dt()).unwrap();
    let o = path.origin();
    let mut rows = Vec::new();
    let mut z = Vec::new();
    let mut at_origin = 0.0;
    for (i, &k) in obs.grid_index().iter().enumerate() {
        let r = [obs.xs()[i] - o[0], obs.ys()[i] - o[1]];
        if k == 0 {
            let e = Normal1Log(params.sigma_e2);
            at_origin += e.log_pdf(r[0]) + e.log_pdf(r[1]);
            continue;
        }
        for (c, f) in [f64::cos as fn(f64) -> f64, f64::sin]
            .into_iter()
            .enumerate()
        {
            rows.push(
                (0..n)
                    .map(|j| if j < k { f(path.bearings()[j]) } else { 0.0 })
                    .collect::<Vec<_>>(),
            );
            z.push(r[c]);
        }
    }
    let design = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let model = LinearObservationModel::new(
        design,
        DVector::zeros(rows.len()),
        DVector::from_element(rows.len(), params.sigma_e2),
    )
    .unwrap();
    (prior, model, DVector::from_vec(z), at_origin)
}

struct Normal1Log(f64);

impl Normal1Log {
    fn log_pdf(&self, x: f64) -> f64 {
        -0.5 * ((2.0 * std::f64::consts::PI * self.0).ln() + x * x / self.0)
    }
}

fn setup(n: usize, seed: u64) -> (RefinedPath, ObservationSet, ModelParams) {
    let params = ModelParams::new(0.8, 26.0, 0.55, 125.0, 30.0).unwrap();
    let mut rng = ChainRng::seed_from_u64(seed);
    let mut path =
        simulate_path(&params, n, 0.5, [3.0, -4.0], Default::default(), &mut rng).unwrap();
    let obs = observe(&path, 4, params.sigma_e2, &mut rng);
    // Evaluate away from the simulated origin.
    path.set_origin([1.0, -2.0]).unwrap();
    (path, obs, params)
}

#[test]
fn filtered_likelihood_matches_dense_marginal() {
    for (n, seed, convention) in [
        (12, 61, InitialStepVariance::Doubled),
        (14, 62, InitialStepVariance::Doubled),
        (30, 63, InitialStepVariance::Stationary),
        (5, 64, InitialStepVariance::Doubled),
    ] {
        let (path, obs, params) = setup(n, seed);
        let (prior, model, z, at_origin) = dense(&path, &obs, &params, convention);
        let expected = logpdf_degenerate(&model.marginal(&prior).unwrap(), &z) + at_origin;
        let got = marginal_step_log_likelihood(&path, &obs, &params, convention).unwrap();
        assert!(
            (got - expected).abs() < 1e-9 * expected.abs(),
            "n {n}: {got} vs {expected}"
        );
    }
}

#[test]
fn step_draws_match_dense_conditional() {
    // 14 steps, so the last two steps follow the final fix.
    let (path, obs, params) = setup(14, 65);
    let convention = InitialStepVariance::Doubled;
    let (prior, model, z, _) = dense(&path, &obs, &params, convention);
    let post = condition_on_noisy(&prior, &model, &z).unwrap();

    let mut rng = ChainRng::seed_from_u64(66);
    let draws = 40_000;
    let n = path.len();
    let mut sum = DVector::zeros(n);
    let mut cross = DMatrix::zeros(n, n);
    for _ in 0..draws {
        let s = DVector::from_vec(draw_steps(&path, &obs, &params, convention, &mut rng).unwrap())
            - post.mean();
        sum += &s;
        cross += &s * s.transpose();
    }
    let nf = draws as f64;
    let c = post.cov();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max((sum[i] / nf).abs() / (c[(i, i)] / nf).sqrt());
        for j in [i, (i + 1).min(n - 1)] {
            let se = ((c[(i, i)] * c[(j, j)] + c[(i, j)].powi(2)) / nf).sqrt();
            worst = worst.max((cross[(i, j)] / nf - c[(i, j)]).abs() / se);
        }
    }
    assert!(worst < 4.0, "worst moment discrepancy {worst:.2} se");
}

#[test]
fn step_draws_reproduce_exact_fixes() {
    // With tiny error the drawn path passes through every fix.
    let params = ModelParams::new(0.8, 26.0, 0.55, 125.0, 1e-8).unwrap();
    let mut rng = ChainRng::seed_from_u64(67);
    let path = simulate_path(&params, 40, 0.5, [0.0, 0.0], Default::default(), &mut rng).unwrap();
    let obs = observe(&path, 4, params.sigma_e2, &mut rng);
    let steps = draw_steps(&path, &obs, &params, InitialStepVariance::Doubled, &mut rng).unwrap();
    let mut drawn = path.clone();
    drawn.set_steps(steps).unwrap();
    let loc = reconstruct_locations(&drawn);
    for (i, &k) in obs.grid_index().iter().enumerate() {
        let miss = (loc[k][0] - obs.xs()[i]).hypot(loc[k][1] - obs.ys()[i]);
        assert!(miss < 1e-2, "fix {i} missed by {miss}");
    }
}
