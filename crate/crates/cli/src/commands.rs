use std::fs;
use std::path::{Path, PathBuf};

use ctsteps::model::simulate_path;
use ctsteps::path::reconstruct_locations;
use ctsteps::{
    credible_intervals, run_chain, ChainDiagnostics, ChainRng, ChainState, CredibleInterval,
    ModelParams, ObservationSet, PosteriorSample, RefinedPath,
};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{
    fmt_num, read_samples, read_track, write_table, write_track, FileMeta, PATH_COLUMNS,
    SAMPLE_COLUMNS,
};

pub const TRACK_FILE: &str = "track.csv";
pub const TRUTH_PARAMS_FILE: &str = "truth_params.csv";
pub const TRUTH_PATH_FILE: &str = "truth_path.csv";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const PATHS_FILE: &str = "paths.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FAILURE_FILE: &str = "failure_state.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COVERAGE_FILE: &str = "coverage.csv";
pub const REPLICATES_FILE: &str = "replicates.csv";

fn meta(cfg: &RunConfig) -> FileMeta {
    FileMeta {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

/// A simulated latent path and its noisy observations.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub truth: ModelParams,
    pub path: RefinedPath,
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Simulate without writing anything. Uses stream 1 of the seed, so the
/// chain (stream 0) never shares draws with the data.
pub fn simulate(cfg: &RunConfig) -> CliResult<Simulation> {
    cfg.validate()?;
    let truth = cfg.truth_params()?;
    if cfg.simulate.n_obs < 2 {
        return Err(CliError::Input(format!(
            "need at least 2 observations, got {}",
            cfg.simulate.n_obs
        )));
    }
    let gap = cfg.steps_per_obs()?;
    let n_steps = (cfg.simulate.n_obs - 1) * gap;
    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let path = simulate_path(
        &truth,
        n_steps,
        cfg.dt,
        cfg.simulate.origin,
        cfg.initial_step_variance.into(),
        &mut rng,
    )?;
    let loc = reconstruct_locations(&path);
    let noise = Normal::new(0.0, truth.sigma_e2.sqrt())
        .map_err(|e| CliError::Input(format!("observation error: {e}")))?;
    let (mut times, mut xs, mut ys) = (vec![], vec![], vec![]);
    for node in (0..=n_steps).step_by(gap) {
        times.push(node as f64 * cfg.dt);
        xs.push(loc[node][0] + noise.sample(&mut rng));
        ys.push(loc[node][1] + noise.sample(&mut rng));
    }
    Ok(Simulation {
        truth,
        path,
        times,
        xs,
        ys,
    })
}

/// Simulate and write the track plus the truth files into the output
/// directory. Returns the track path.
pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<PathBuf> {
    let sim = simulate(cfg)?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let m = meta(cfg);
    let track = dir.join(TRACK_FILE);
    write_track(&track, &m, &sim.times, &sim.xs, &sim.ys)?;

    let values = sim.truth.to_array();
    write_table(
        &dir.join(TRUTH_PARAMS_FILE),
        "truth parameters",
        &m,
        &["parameter", "value"],
        ModelParams::NAMES
            .iter()
            .zip(values)
            .map(|(n, v)| [n.to_string(), fmt_num(v)]),
    )?;
    let loc = reconstruct_locations(&sim.path);
    write_table(
        &dir.join(TRUTH_PATH_FILE),
        "truth path",
        &m,
        &["node", "time", "x", "y", "bearing", "step"],
        loc.iter().enumerate().map(|(k, l)| {
            let (b, s) = if k == 0 {
                (String::new(), String::new())
            } else {
                (fmt_num(sim.path.bearing(k)), fmt_num(sim.path.step(k)))
            };
            [
                k.to_string(),
                fmt_num(k as f64 * cfg.dt),
                fmt_num(l[0]),
                fmt_num(l[1]),
                b,
                s,
            ]
        }),
    )?;
    Ok(track)
}

/// Read a track and snap it onto the configured grid.
pub fn load_observations(track: &Path, dt: f64) -> CliResult<ObservationSet> {
    let t = read_track(track)?;
    ObservationSet::on_grid(t.times.clone(), t.xs.clone(), t.ys.clone(), dt).map_err(|e| match e {
        ctsteps::Error::GridSnap { dt, rows } => {
            let lines: Vec<String> = rows.iter().map(|&r| t.lines[r].to_string()).collect();
            CliError::Input(format!(
                "track {}: times not on the {dt}-minute grid at line(s) {}",
                track.display(),
                lines.join(", ")
            ))
        }
        other => CliError::Input(format!("track {}: {other}", track.display())),
    })
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub samples: Vec<PosteriorSample>,
    pub diagnostics: ChainDiagnostics,
    pub samples_file: PathBuf,
}

/// Fit a track and write samples, path snapshots and diagnostics.
pub fn cmd_fit(track: &Path, cfg: &RunConfig) -> CliResult<FitOutput> {
    cfg.validate()?;
    let obs = load_observations(track, cfg.dt)?;
    let config = cfg.sampler_config()?;
    let dir = &cfg.output_dir;
    let (samples, diagnostics) = match run_chain(&obs, &config) {
        Ok(r) => r,
        Err(ctsteps::Error::ChainFailure {
            iteration,
            message,
            state,
        }) => {
            ensure_dir(dir)?;
            let dump = dir.join(FAILURE_FILE);
            write_state(&dump, &meta(cfg), &state)?;
            return Err(CliError::Numerical(format!(
                "iteration {iteration}: {message}; chain state written to {}",
                dump.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    ensure_dir(dir)?;
    let m = meta(cfg);
    let samples_file = dir.join(SAMPLES_FILE);
    write_table(
        &samples_file,
        "samples",
        &m,
        &SAMPLE_COLUMNS,
        samples.iter().map(|s| {
            std::iter::once(s.iteration.to_string()).chain(s.params.to_array().map(fmt_num))
        }),
    )?;

    let t0 = obs.origin_time();
    let rows = samples
        .iter()
        .filter_map(|s| s.path.as_ref().map(|p| (s.iteration, p)))
        .flat_map(|(it, p)| {
            reconstruct_locations(p)
                .into_iter()
                .enumerate()
                .map(move |(k, l)| {
                    [
                        it.to_string(),
                        k.to_string(),
                        fmt_num(t0 + k as f64 * p.dt()),
                        fmt_num(l[0]),
                        fmt_num(l[1]),
                    ]
                })
        });
    write_table(&dir.join(PATHS_FILE), "path draws", &m, &PATH_COLUMNS, rows)?;
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &m, &diagnostics)?;
    Ok(FitOutput {
        samples,
        diagnostics,
        samples_file,
    })
}

fn write_diagnostics(path: &Path, m: &FileMeta, d: &ChainDiagnostics) -> CliResult<()> {
    let mut rows = vec![
        ("iterations".to_string(), d.iterations.to_string()),
        ("param_proposals".into(), d.param_proposals.to_string()),
        ("param_accepts".into(), d.param_accepts.to_string()),
        ("param_accept_rate".into(), fmt_num(d.param_accept_rate())),
        ("section_proposals".into(), d.section_proposals.to_string()),
        ("section_accepts".into(), d.section_accepts.to_string()),
        (
            "section_accept_rate".into(),
            fmt_num(d.section_accept_rate()),
        ),
        (
            "section_infeasible".into(),
            d.section_infeasible.to_string(),
        ),
        (
            "constraint_violations".into(),
            d.constraint_violations.to_string(),
        ),
        ("max_endpoint_shift".into(), fmt_num(d.max_endpoint_shift)),
    ];
    for (i, name) in ModelParams::NAMES.iter().enumerate() {
        let t = &d.traces[i];
        rows.push((format!("{name}_final_scale"), fmt_num(d.final_scales[i])));
        rows.push((format!("{name}_mean"), fmt_num(t.mean)));
        rows.push((format!("{name}_sd"), fmt_num(t.sd)));
    }
    write_table(
        path,
        "diagnostics",
        m,
        &["key", "value"],
        rows.into_iter().map(|(k, v)| [k, v]),
    )
}

fn write_state(path: &Path, m: &FileMeta, state: &ChainState) -> CliResult<()> {
    let p = state.params().to_array();
    let path_ = state.path();
    let header = ModelParams::NAMES
        .iter()
        .zip(p)
        .map(|(n, v)| format!("{n}={}", fmt_num(v)));
    let kind = format!(
        "chain state at failure, {}",
        header.collect::<Vec<_>>().join(" ")
    );
    write_table(
        path,
        &kind,
        m,
        &["node", "x", "y", "bearing", "step"],
        state.locations().iter().enumerate().map(|(k, l)| {
            let (b, s) = if k == 0 {
                (String::new(), String::new())
            } else {
                (fmt_num(path_.bearing(k)), fmt_num(path_.step(k)))
            };
            [k.to_string(), fmt_num(l[0]), fmt_num(l[1]), b, s]
        }),
    )
}

/// Equal-tailed intervals and means of a samples file.
pub fn summarize(samples: &Path, level: f64) -> CliResult<[CredibleInterval; 5]> {
    let (_, params) = read_samples(samples)?;
    Ok(credible_intervals(&params, level)?)
}

/// The interval table as delimited text.
pub fn format_summary(intervals: &[CredibleInterval]) -> String {
    let mut out = String::from("parameter,lo,hi,mean\n");
    for ci in intervals {
        out.push_str(&format!(
            "{},{},{},{}\n",
            ci.name,
            fmt_num(ci.lo),
            fmt_num(ci.hi),
            fmt_num(ci.mean)
        ));
    }
    out
}

pub fn write_summary(path: &Path, m: &FileMeta, intervals: &[CredibleInterval]) -> CliResult<()> {
    write_table(
        path,
        "summary",
        m,
        &["parameter", "lo", "hi", "mean"],
        intervals.iter().map(|ci| {
            [
                ci.name.to_string(),
                fmt_num(ci.lo),
                fmt_num(ci.hi),
                fmt_num(ci.mean),
            ]
        }),
    )
}

/// Outcome of one simulate-fit-summarize replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub index: usize,
    pub seed: u64,
    pub dir: PathBuf,
    pub result: Result<[CredibleInterval; 5], String>,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub truth: ModelParams,
    pub level: f64,
    pub replicates: Vec<Replicate>,
}

impl StudyReport {
    pub fn usable(&self) -> usize {
        self.replicates.iter().filter(|r| r.result.is_ok()).count()
    }

    /// Replicates whose interval for parameter `i` contains the truth.
    pub fn covered(&self, i: usize) -> usize {
        let t = self.truth.to_array()[i];
        self.replicates
            .iter()
            .filter(|r| r.result.as_ref().is_ok_and(|ci| ci[i].contains(t)))
            .count()
    }

    /// Fraction covered among usable replicates; NaN when none are usable.
    pub fn coverage(&self, i: usize) -> f64 {
        let n = self.usable();
        if n == 0 {
            f64::NAN
        } else {
            self.covered(i) as f64 / n as f64
        }
    }

    pub fn mean_width(&self, i: usize) -> f64 {
        let widths: Vec<f64> = self
            .replicates
            .iter()
            .filter_map(|r| r.result.as_ref().ok().map(|ci| ci[i].width()))
            .collect();
        if widths.is_empty() {
            f64::NAN
        } else {
            widths.iter().sum::<f64>() / widths.len() as f64
        }
    }

    pub fn format(&self) -> String {
        let mut out = String::from("parameter,truth,covered,usable,coverage,mean_width\n");
        let truth = self.truth.to_array();
        for (i, name) in ModelParams::NAMES.iter().enumerate() {
            out.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                fmt_num(truth[i]),
                self.covered(i),
                self.usable(),
                fmt_num(self.coverage(i)),
                fmt_num(self.mean_width(i))
            ));
        }
        out
    }
}

fn run_replicate(cfg: &RunConfig, index: usize) -> Replicate {
    let mut rc = cfg.clone();
    rc.seed = cfg.seed.wrapping_add(index as u64);
    rc.output_dir = cfg.output_dir.join(format!("replicate_{index:03}"));
    let result = (|| {
        let track = cmd_simulate(&rc)?;
        let fit = cmd_fit(&track, &rc)?;
        let intervals = summarize(&fit.samples_file, rc.study.level)?;
        write_summary(&rc.output_dir.join(SUMMARY_FILE), &meta(&rc), &intervals)?;
        Ok::<_, CliError>(intervals)
    })()
    .map_err(|e| e.to_string());
    Replicate {
        index,
        seed: rc.seed,
        dir: rc.output_dir,
        result,
    }
}

/// Repeat simulate, fit and summarize over consecutive seeds, in parallel,
/// and report how often each interval covers the truth. Replicate
/// failures are recorded, not propagated.
pub fn cmd_study(cfg: &RunConfig) -> CliResult<StudyReport> {
    cfg.validate()?;
    let truth = cfg.truth_params()?;
    ensure_dir(&cfg.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.study.threads)
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    let replicates: Vec<Replicate> = pool.install(|| {
        (0..cfg.study.replicates)
            .into_par_iter()
            .map(|i| run_replicate(cfg, i))
            .collect()
    });
    let report = StudyReport {
        truth,
        level: cfg.study.level,
        replicates,
    };

    let m = meta(cfg);
    let truth_a = truth.to_array();
    write_table(
        &cfg.output_dir.join(COVERAGE_FILE),
        "coverage",
        &m,
        &[
            "parameter",
            "truth",
            "covered",
            "usable",
            "coverage",
            "mean_width",
        ],
        ModelParams::NAMES.iter().enumerate().map(|(i, name)| {
            [
                name.to_string(),
                fmt_num(truth_a[i]),
                report.covered(i).to_string(),
                report.usable().to_string(),
                fmt_num(report.coverage(i)),
                fmt_num(report.mean_width(i)),
            ]
        }),
    )?;
    let mut columns = vec!["replicate", "seed", "status"];
    columns.extend(ModelParams::NAMES);
    columns.push("error");
    write_table(
        &cfg.output_dir.join(REPLICATES_FILE),
        "replicates",
        &m,
        &columns,
        report.replicates.iter().map(|r| {
            let mut row = vec![r.index.to_string(), r.seed.to_string()];
            match &r.result {
                Ok(ci) => {
                    row.push("ok".into());
                    row.extend((0..5).map(|i| u8::from(ci[i].contains(truth_a[i])).to_string()));
                    row.push(String::new());
                }
                Err(msg) => {
                    row.push("failed".into());
                    row.extend((0..5).map(|_| String::new()));
                    row.push(msg.clone());
                }
            }
            row
        }),
    )?;
    Ok(report)
}
