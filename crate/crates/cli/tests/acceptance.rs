//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Criterion 2 runs a full ten-replicate study and
//! takes several minutes in an optimized build.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use ctsteps::gaussian::{
    brownian_bridge, condition_on_exact, condition_on_noisy, logpdf_degenerate, ou_bridge,
    sample_singular,
};
use ctsteps::model::{bearing_transition, simulate_path, speed_transition};
use ctsteps::path::{reconstruct_locations, section_bearing_law, SectionSampler};
use ctsteps::sampler::{log_std_normal_cdf, mh_step, TruncatedWalk};
use ctsteps::{ChainRng, GaussianSpec, LinearObservationModel, ModelParams, ObservationSet};
use ctsteps_cli::commands::DIAGNOSTICS_FILE;
use ctsteps_cli::{cmd_study, RunConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal, StandardNormal};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference() -> ModelParams {
    ModelParams::new(1.0, 26.0, 0.55, 125.0, 90.0).unwrap()
}

fn spd(d: usize, rng: &mut ChainRng) -> DMatrix<f64> {
    let l = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    &l * l.transpose() + DMatrix::identity(d, d) * 0.5
}

fn gauss(r: usize, c: usize, scale: f64, rng: &mut ChainRng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn col(m: DMatrix<f64>) -> DVector<f64> {
    m.column(0).into_owned()
}

/// Condition the x block of a joint Gaussian on y by inverting the y block.
fn partition(
    mx: &DVector<f64>,
    my: &DVector<f64>,
    sxx: &DMatrix<f64>,
    sxy: &DMatrix<f64>,
    syy: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let gain = sxy * syy.clone().try_inverse().unwrap();
    (mx + &gain * (y - my), sxx - &gain * sxy.transpose())
}

fn rel_gap(spec: &GaussianSpec, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let c = (spec.cov() - cov).abs().max() / cov.abs().max().max(1.0);
    let m = (spec.mean() - mean).abs().max() / mean.abs().max().max(1.0);
    c.max(m)
}

fn observe(
    path: &ctsteps::RefinedPath,
    every: usize,
    sigma_e2: f64,
    rng: &mut ChainRng,
) -> ObservationSet {
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

fn data_lines(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn diagnostic(dir: &Path, key: &str) -> f64 {
    data_lines(&dir.join(DIAGNOSTICS_FILE))
        .into_iter()
        .find(|r| r[0] == key)
        .map(|r| r[1].parse().unwrap())
        .unwrap()
}

fn study_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = 1;
    cfg.output_dir = dir.to_path_buf();
    cfg.sampler.burn_in = 20_000;
    cfg.sampler.iterations = 20_000;
    cfg.sampler.thin = 20;
    cfg.study.replicates = 10;
    cfg.study.level = 0.9;
    cfg
}

/// Ten synthetic replicates at the reference parameters; each 90% interval
/// must cover its true value at least seven times. Criterion 7 reuses the
/// diagnostics of these fits.
fn parameter_recovery(dir: &Path) -> (Outcome, Outcome) {
    let cfg = study_config(dir);
    let report = match cmd_study(&cfg) {
        Ok(r) => r,
        Err(e) => return (Err(format!("study failed: {e}")), Err("no fits".into())),
    };
    let counts: Vec<String> = ModelParams::NAMES
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{n} {}/{}", report.covered(i), report.replicates.len()))
        .collect();
    let recovery = check((0..5).all(|i| report.covered(i) >= 7), counts.join(", "));

    let mut violations = 0.0;
    let mut worst_shift: f64 = 0.0;
    let mut rates_ok = true;
    for r in &report.replicates {
        if r.result.is_err() {
            return (recovery, Err(format!("replicate {} failed", r.index)));
        }
        violations += diagnostic(&r.dir, "constraint_violations");
        worst_shift = worst_shift.max(diagnostic(&r.dir, "max_endpoint_shift"));
        for key in ["param_accept_rate", "section_accept_rate"] {
            let rate = diagnostic(&r.dir, key);
            rates_ok &= rate > 0.0 && rate < 1.0;
        }
    }
    let constraints = check(
        violations == 0.0 && worst_shift < 1e-6 && rates_ok,
        format!("{violations} violations over 10 fits, largest endpoint shift {worst_shift:.2e} m"),
    );
    (recovery, constraints)
}

fn conditioning_oracles() -> Outcome {
    let mut rng = ChainRng::seed_from_u64(301);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(1..=6);
        let sigma = spd(d, &mut rng);
        let m = col(gauss(d, 1, 3.0, &mut rng));
        let prior = GaussianSpec::new(m.clone(), sigma.clone()).unwrap();

        let r = rng.random_range(1..=6);
        let a = gauss(r, d, 1.0, &mut rng);
        let c = col(gauss(r, 1, 1.0, &mut rng));
        let noise = DVector::from_fn(r, |_, _| rng.random_range(0.5..2.0));
        let z = col(gauss(r, 1, 4.0, &mut rng));
        let model = LinearObservationModel::new(a.clone(), c.clone(), noise.clone()).unwrap();
        let post = condition_on_noisy(&prior, &model, &z).unwrap();
        let syy = &a * &sigma * a.transpose() + DMatrix::from_diagonal(&noise);
        let (jm, jc) = partition(
            &m,
            &(&a * &m + &c),
            &sigma,
            &(&sigma * a.transpose()),
            &syy,
            &z,
        );
        worst = worst.max(rel_gap(&post, &jm, &jc));

        let r = rng.random_range(1..=d);
        let b = gauss(r, d, 1.0, &mut rng);
        let t = col(gauss(r, 1, 4.0, &mut rng));
        let post = condition_on_exact(&prior, &b, &t).unwrap();
        let (jm, jc) = partition(
            &m,
            &(&b * &m),
            &sigma,
            &(&sigma * b.transpose()),
            &(&b * &sigma * b.transpose()),
            &t,
        );
        worst = worst.max(rel_gap(&post, &jm, &jc));
    }
    check(
        worst < 1e-8,
        format!("100 cases each, worst relative gap {worst:.2e}"),
    )
}

fn pin_last(free: &GaussianSpec, value: f64) -> GaussianSpec {
    let n = free.dim();
    let mut pin = DMatrix::zeros(1, n);
    pin[(0, n - 1)] = 1.0;
    condition_on_exact(free, &pin, &DVector::from_element(1, value))
        .unwrap()
        .marginal(0, n - 1)
}

fn bridges() -> Outcome {
    let p = reference();
    let dt = 0.5;
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let (sigma_b2, a, b) = (p.sigma_b2, 0.3, -1.1);
        let walk = GaussianSpec::new(
            DVector::from_element(n + 1, a),
            DMatrix::from_fn(n + 1, n + 1, |i, j| sigma_b2 * dt * (i.min(j) + 1) as f64),
        )
        .unwrap();
        let oracle = pin_last(&walk, b);
        worst = worst.max(rel_gap(
            &brownian_bridge(a, b, n, sigma_b2, dt).unwrap(),
            oracle.mean(),
            oracle.cov(),
        ));

        // Steps as a free AR(1) chain from a fixed start.
        let phi = (-p.lambda * dt).exp();
        let q = dt * dt * p.sigma_s2 / (2.0 * p.lambda) * (1.0 - phi * phi);
        let level = dt * p.mu;
        let (a, b) = (9.0, 16.5);
        let var: Vec<f64> = (1..=n + 1)
            .map(|k| q * (1.0 - phi.powi(2 * k as i32)) / (1.0 - phi * phi))
            .collect();
        let chain = GaussianSpec::new(
            DVector::from_fn(n + 1, |i, _| level + phi.powi(i as i32 + 1) * (a - level)),
            DMatrix::from_fn(n + 1, n + 1, |i, j| {
                phi.powi((i as i32 - j as i32).abs()) * var[i.min(j)]
            }),
        )
        .unwrap();
        let oracle = pin_last(&chain, b);
        worst = worst.max(rel_gap(
            &ou_bridge(a, b, n, &p, dt).unwrap(),
            oracle.mean(),
            oracle.cov(),
        ));
    }

    let mut rng = ChainRng::seed_from_u64(302);
    let prior = GaussianSpec::new(
        DVector::from_column_slice(&[1.0, -2.0, 0.5, 3.0]),
        spd(4, &mut rng),
    )
    .unwrap();
    let law = condition_on_exact(
        &prior,
        &gauss(2, 4, 1.0, &mut rng),
        &DVector::from_column_slice(&[1.0, 2.0]),
    )
    .unwrap();
    let draws = 100_000;
    let mut sum = DVector::zeros(4);
    let mut cross = DMatrix::zeros(4, 4);
    for _ in 0..draws {
        let x = sample_singular(&law, &mut rng) - law.mean();
        sum += &x;
        cross += &x * x.transpose();
    }
    let nf = draws as f64;
    let s = law.cov();
    let mut worst_z: f64 = 0.0;
    for i in 0..4 {
        let se = (s[(i, i)] / nf).sqrt();
        worst_z = worst_z.max((sum[i] / nf).abs() / se);
        for j in 0..4 {
            let se = ((s[(i, i)] * s[(j, j)] + s[(i, j)].powi(2)) / nf).sqrt();
            worst_z = worst_z.max((cross[(i, j)] / nf - s[(i, j)]).abs() / se);
        }
    }
    check(
        worst < 1e-10 && worst_z < 3.0,
        format!("bridge gap {worst:.2e}, singular sampler worst moment {worst_z:.2} se"),
    )
}

fn kernels() -> Outcome {
    let mut rng = ChainRng::seed_from_u64(303);
    let (mut ou, mut bm): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let p = ModelParams::new(
            rng.random_range(0.01..10.0),
            rng.random_range(0.1..60.0),
            rng.random_range(0.01..5.0),
            rng.random_range(0.1..500.0),
            1.0,
        )
        .unwrap();
        let (t1, t2) = (rng.random_range(0.01..3.0), rng.random_range(0.01..3.0));
        let start = rng.random_range(-50.0..80.0);
        let a = speed_transition(start, &p, t1).unwrap();
        let b = speed_transition(a.mean, &p, t2).unwrap();
        let d = speed_transition(start, &p, t1 + t2).unwrap();
        let decay = (-p.lambda * t2).exp();
        ou = ou
            .max((b.mean - d.mean).abs() / p.mu)
            .max(((decay * decay * a.var + b.var) - d.var).abs() / d.var);

        let a = bearing_transition(start, &p, t1).unwrap();
        let b = bearing_transition(a.mean, &p, t2).unwrap();
        let d = bearing_transition(start, &p, t1 + t2).unwrap();
        bm = bm.max(((a.var + b.var) - d.var).abs() / d.var);
    }
    check(
        ou < 1e-12 && bm <= 4.0 * f64::EPSILON,
        format!("speed composition {ou:.2e}, bearing additivity {bm:.2e} (1000 cases)"),
    )
}

fn mh_correctness() -> Outcome {
    let rates = [1.0, 0.5, 2.0, 0.1, 1.3];
    let walk = TruncatedWalk {
        scales: rates.map(|r| 1.5 / r),
    };
    let log_target =
        |x: &[f64; 5]| -> f64 { -x.iter().zip(&rates).map(|(v, r)| v * r).sum::<f64>() };
    let mut rng = ChainRng::seed_from_u64(304);
    let mut x = rates.map(|r| 1.0 / r);
    let mut lt = log_target(&x);
    let (n, batches) = (100_000, 100);
    let mut batch_means = vec![[0.0; 5]; batches];
    for it in 0..n {
        (x, lt, _) = mh_step(x, lt, &walk, &mut rng, log_target);
        for i in 0..5 {
            batch_means[it / (n / batches)][i] += x[i] / (n / batches) as f64;
        }
    }
    let mut worst_z: f64 = 0.0;
    for i in 0..5 {
        let grand = batch_means.iter().map(|b| b[i]).sum::<f64>() / batches as f64;
        let var = batch_means
            .iter()
            .map(|b| (b[i] - grand).powi(2))
            .sum::<f64>()
            / (batches - 1) as f64;
        worst_z = worst_z.max((grand - 1.0 / rates[i]).abs() / (var / batches as f64).sqrt());
    }

    let walk = TruncatedWalk {
        scales: [1.0, 2.0, 3.0, 4.0, 5.0],
    };
    let got = walk.log_hastings_correction(&[1.0; 5], &[0.5, 1.0, 1.0, 1.0, 1.0]);
    let expected = (0.841344746068542948585232545632f64 / 0.691462461274013103637704610608).ln();
    let cdf = (log_std_normal_cdf(1.5) - 0.93319279873114193399550595902f64.ln()).abs();
    check(
        worst_z < 3.0 && (got - expected).abs() < 1e-14 && cdf < 1e-15,
        format!(
            "prior means within {worst_z:.2} se, correction error {:.1e}",
            (got - expected).abs()
        ),
    )
}

fn bearing_cancellation() -> Outcome {
    let params = reference();
    let mut rng = ChainRng::seed_from_u64(305);
    let path = simulate_path(&params, 60, 0.5, [0.0, 0.0], Default::default(), &mut rng).unwrap();
    let obs = observe(&path, 4, params.sigma_e2, &mut rng);
    let sections = SectionSampler {
        min_len: 5,
        max_len: 12,
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let section = sections.draw(path.len(), &obs, &mut rng).unwrap();
        let law = section_bearing_law(&path, &section, &params).unwrap();
        let diffs: Vec<f64> = (0..100)
            .map(|_| {
                let proposal = sample_singular(&law, &mut rng);
                let mut bearings = path.bearings().to_vec();
                bearings[section.lo..section.hi - 1].copy_from_slice(proposal.as_slice());
                let log_prior: f64 = bearings
                    .windows(2)
                    .map(|w| {
                        bearing_transition(w[0], &params, path.dt())
                            .unwrap()
                            .log_pdf(w[1])
                    })
                    .sum();
                log_prior - logpdf_degenerate(&law, &proposal)
            })
            .collect();
        let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(hi - lo);
    }
    check(
        worst < 1e-8,
        format!("20 sections x 100 proposals, largest spread {worst:.2e}"),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let config = dir.join("run.toml");
    fs::write(
        &config,
        format!(
            "seed = 9\noutput_dir = \"{}\"\n[sampler]\nburn_in = 500\niterations = 1000\nthin = 10\n",
            dir.display()
        ),
    )
    .unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_ctsteps"))
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let c = config.to_str().unwrap();
    let track = dir.join("track.csv");
    run(&["simulate", "--config", c]);
    run(&["fit", "--config", c, "--track", track.to_str().unwrap()]);
    let first = fs::read(dir.join("samples.csv")).unwrap();
    run(&["fit", "--config", c, "--track", track.to_str().unwrap()]);
    let second = fs::read(dir.join("samples.csv")).unwrap();
    check(
        first == second,
        format!("two fits, {} bytes each", first.len()),
    )
}

#[test]
fn acceptance() {
    let study_dir = tempfile::tempdir().unwrap();
    let fit_dir = tempfile::tempdir().unwrap();
    let (recovery, constraints) = parameter_recovery(study_dir.path());

    let results: Vec<(u32, &str, Option<Outcome>)> = vec![
        (1, "reference dataset results", None),
        (2, "parameter recovery, 10 replicates", Some(recovery)),
        (3, "conditioning oracles", Some(conditioning_oracles())),
        (4, "bridges and singular sampling", Some(bridges())),
        (5, "transition kernels", Some(kernels())),
        (6, "parameter update correctness", Some(mh_correctness())),
        (7, "fixed locations preserved", Some(constraints)),
        (
            8,
            "bearing proposal cancellation",
            Some(bearing_cancellation()),
        ),
        (9, "determinism", Some(determinism(fit_dir.path()))),
    ];
    // Straight to stderr so the lines show without --nocapture.
    let mut err = std::io::stderr().lock();
    let mut failed = vec![];
    for (id, name, outcome) in &results {
        match outcome {
            None => writeln!(
                err,
                "criterion {id}: N/A  {name}: dataset not public, replaced by criteria 2-9"
            )
            .unwrap(),
            Some(Ok(detail)) => writeln!(err, "criterion {id}: PASS {name}: {detail}").unwrap(),
            Some(Err(detail)) => {
                writeln!(err, "criterion {id}: FAIL {name}: {detail}").unwrap();
                failed.push(*id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
