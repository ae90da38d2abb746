//! Simulate a track at the reference parameters and fit it.
//!
//! `cargo run --release -p ctsteps --example recovery -- <seed> <burn_in> <iterations> [chain_seed] [start_at_truth] [path_updates]`

use ctsteps::model::simulate_path;
use ctsteps::path::reconstruct_locations;
use ctsteps::{
    credible_intervals, run_chain, ChainRng, ModelParams, ObservationSet, SamplerConfig,
};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().unwrap())
        .collect();
    let seed = args.first().copied().unwrap_or(1);
    let burn_in = args.get(1).copied().unwrap_or(2000) as usize;
    let n_iterations = args.get(2).copied().unwrap_or(2000) as usize;

    let truth = ModelParams::new(1.0, 26.0, 0.55, 125.0, 90.0)?;
    let dt = 0.5;
    let mut rng = ChainRng::seed_from_u64(seed);
    let path = simulate_path(&truth, 196, dt, [0.0, 0.0], Default::default(), &mut rng)?;
    let loc = reconstruct_locations(&path);
    let noise = Normal::new(0.0, truth.sigma_e2.sqrt())?;
    let nodes: Vec<usize> = (0..=196).step_by(4).collect();
    let obs = ObservationSet::on_grid(
        nodes.iter().map(|&k| k as f64 * dt).collect(),
        nodes
            .iter()
            .map(|&k| loc[k][0] + noise.sample(&mut rng))
            .collect(),
        nodes
            .iter()
            .map(|&k| loc[k][1] + noise.sample(&mut rng))
            .collect(),
        dt,
    )?;

    let speeds: Vec<f64> = path.steps().iter().map(|v| v / dt).collect();
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let var = speeds.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / speeds.len() as f64;
    let turn: f64 = path
        .bearings()
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        / ((path.len() - 1) as f64 * dt);
    println!("realised: mean speed {mean:.3} speed var {var:.3} turn var/dt {turn:.3}");

    let chain_seed = args.get(3).copied().unwrap_or(seed);
    // start_at_truth = 1 starts the chain at the simulated path and parameters.
    let oracle_start = args.get(4) == Some(&1);
    let config = SamplerConfig {
        burn_in,
        n_iterations,
        thin: 20,
        seed: chain_seed,
        initial: oracle_start.then_some(truth),
        initial_path: oracle_start.then(|| path.clone()),
        path_warmup: oracle_start.then_some(0),
        path_updates_per_param_update: args.get(5).map_or(50, |&k| k as usize),
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let (samples, diag) = run_chain(&obs, &config)?;
    println!(
        "{:.1}s param acc {:.3} section acc {:.3} infeasible {} violations {} max shift {:e}",
        start.elapsed().as_secs_f64(),
        diag.param_accept_rate(),
        diag.section_accept_rate(),
        diag.section_infeasible,
        diag.constraint_violations,
        diag.max_endpoint_shift
    );
    let params: Vec<_> = samples.iter().map(|s| s.params).collect();
    for (ci, t) in credible_intervals(&params, 0.9)?
        .iter()
        .zip(truth.to_array())
    {
        println!(
            "{:8} truth {:8.3}  ({:8.3}, {:8.3}) mean {:8.3} {}",
            ci.name,
            t,
            ci.lo,
            ci.hi,
            ci.mean,
            if ci.contains(t) { "" } else { "MISS" }
        );
    }
    Ok(())
}
