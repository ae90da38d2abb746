//! Successive-conditional check of the section sampler at fixed parameters.
//!
//! `cargo run --release -p ctsteps --example joint_check -- <iterations> <updates> <n_steps>`

use ctsteps::model::simulate_path;
use ctsteps::path::{reconstruct_locations, SectionSampler};
use ctsteps::sampler::{section_update, SectionContext};
use ctsteps::{ChainRng, ChainState, ModelParams, ObservationSet, RefinedPath};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn stats(p: &RefinedPath, mu_dt: f64) -> [f64; 4] {
    let nu = p.steps();
    let n = nu.len() as f64;
    let mean = nu.iter().sum::<f64>() / n;
    let var = nu.iter().map(|v| (v - mu_dt).powi(2)).sum::<f64>() / n;
    let lag = nu
        .windows(2)
        .map(|w| (w[0] - mu_dt) * (w[1] - mu_dt))
        .sum::<f64>()
        / (n - 1.0);
    let turn = p
        .bearings()
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    [mean, var, lag, turn]
}

fn observe(path: &RefinedPath, sigma_e2: f64, rng: &mut ChainRng) -> ObservationSet {
    let loc = reconstruct_locations(path);
    let noise = Normal::new(0.0, sigma_e2.sqrt()).unwrap();
    let nodes: Vec<usize> = (0..=path.len()).step_by(4).collect();
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

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().unwrap())
        .collect();
    let (iters, updates, n) = (args[0], args[1], args[2]);
    let p = ModelParams::new(1.0, 26.0, 0.55, 125.0, 90.0).unwrap();
    let dt = 0.5;
    let mut rng = ChainRng::seed_from_u64(7);

    let mut prior = [0.0; 4];
    let m = 100_000;
    for _ in 0..m {
        let path = simulate_path(&p, n, dt, [0.0; 2], Default::default(), &mut rng).unwrap();
        for (a, s) in prior.iter_mut().zip(stats(&path, p.mu * dt)) {
            *a += s / m as f64;
        }
    }

    let ctx = SectionContext {
        sections: SectionSampler {
            min_len: 5,
            max_len: 12,
        },
        convention: Default::default(),
    };
    let path = simulate_path(&p, n, dt, [0.0; 2], Default::default(), &mut rng).unwrap();
    let mut state = ChainState::new(p, path);
    let batches = 50;
    let mut bm = vec![[0.0; 4]; batches];
    let mut acc = 0;
    for it in 0..iters {
        let obs = observe(state.path(), p.sigma_e2, &mut rng);
        for _ in 0..updates {
            if let Ok(ctsteps::sampler::SectionOutcome::Accepted { .. }) =
                section_update(&mut state, &obs, &ctx, &mut rng)
            {
                acc += 1;
            }
        }
        for (a, s) in bm[it * batches / iters]
            .iter_mut()
            .zip(stats(state.path(), p.mu * dt))
        {
            *a += s * batches as f64 / iters as f64;
        }
    }
    println!("acceptance {:.3}", acc as f64 / (iters * updates) as f64);
    for (i, name) in ["mean step", "step var", "lag-1 cov", "turn sq"]
        .iter()
        .enumerate()
    {
        let v: Vec<f64> = bm.iter().map(|b| b[i]).collect();
        let g = v.iter().sum::<f64>() / batches as f64;
        let se = (v.iter().map(|x| (x - g).powi(2)).sum::<f64>()
            / (batches * (batches - 1)) as f64)
            .sqrt();
        println!(
            "{name:10} prior {:9.4} chain {:9.4} se {:7.4} z {:6.2}",
            prior[i],
            g,
            se,
            (g - prior[i]) / se
        );
    }
}
