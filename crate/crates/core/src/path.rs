//! Binding a refined path to its observations: locations, sections and
//! the linear algebra that makes observed locations linear in the steps.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{
    brownian_bridge, condition_on_exact, condition_on_noisy, logpdf_degenerate, ou_bridge,
    random_walk_backward, random_walk_forward, step_chain_joint, GaussianSpec,
    LinearObservationModel,
};
use crate::model::{
    initial_step_dist, step_transition, InitialStepVariance, ModelParams, ObservationSet,
    RefinedPath,
};

/// Node locations 0..=n: the origin followed by cumulative step vectors.
pub fn reconstruct_locations(path: &RefinedPath) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(path.len() + 1);
    let [mut x, mut y] = path.origin();
    out.push([x, y]);
    for (theta, nu) in path.bearings().iter().zip(path.steps()) {
        let (s, c) = theta.sin_cos();
        x += nu * c;
        y += nu * s;
        out.push([x, y]);
    }
    out
}

/// A block of consecutive grid steps updated together.
///
/// Steps `lo` and `hi` keep their bearing and step; steps `lo+1..hi` are the
/// interior. `lo == 0` means the block starts at the (fixed) origin with no
/// anchoring step; `hi == n + 1` means it runs to the end of the path with
/// no anchoring step and no location constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub lo: usize,
    pub hi: usize,
    /// Positions in the observation set of observations at nodes strictly
    /// between `lo` and `hi`.
    pub interior_obs: Vec<usize>,
    n_steps: usize,
}

impl Section {
    pub fn new(lo: usize, hi: usize, path_len: usize, obs: &ObservationSet) -> Result<Self> {
        if hi < lo + 2 || hi > path_len + 1 || (lo == 0 && hi == path_len + 1) {
            return Err(Error::InvalidArgument(format!(
                "section ({lo}, {hi}) invalid for a path of {path_len} steps"
            )));
        }
        let interior_obs = obs
            .grid_index()
            .iter()
            .enumerate()
            .filter(|&(_, &k)| k > lo && k < hi)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            lo,
            hi,
            interior_obs,
            n_steps: path_len,
        })
    }

    /// Index of the first interior step (1-based).
    pub fn first(&self) -> usize {
        self.lo + 1
    }

    pub fn n_interior(&self) -> usize {
        self.hi - self.lo - 1
    }

    /// Whether step `lo` exists and is held fixed.
    pub fn anchored_left(&self) -> bool {
        self.lo >= 1
    }

    /// Whether step `hi` exists, in which case the location at node
    /// `hi - 1` is held fixed too.
    pub fn anchored_right(&self) -> bool {
        self.hi <= self.n_steps
    }
}

/// Random section choice: first interior step uniform over the path,
/// interior length uniform on `[min_len, max_len]`, truncated at the end of
/// the path.
#[derive(Debug, Clone, Copy)]
pub struct SectionSampler {
    pub min_len: usize,
    pub max_len: usize,
}

impl SectionSampler {
    pub fn draw<R: Rng + ?Sized>(
        &self,
        path_len: usize,
        obs: &ObservationSet,
        rng: &mut R,
    ) -> Result<Section> {
        if path_len < 2 {
            return Err(Error::InvalidPath(
                "section updates need at least 2 steps".into(),
            ));
        }
        let first = rng.random_range(1..=path_len);
        let len = rng.random_range(self.min_len..=self.max_len);
        let lo = first - 1;
        let mut hi = (first + len).min(path_len + 1);
        if lo == 0 && hi == path_len + 1 {
            // Keep one anchor: a block with neither is not a bridge.
            hi = path_len;
        }
        Section::new(lo, hi, path_len, obs)
    }
}

/// Linear structure of a section given its interior bearings.
#[derive(Debug, Clone)]
pub struct SectionDesign {
    /// Displacement constraint `B ν = d` over interior steps, present when
    /// the section is anchored on the right.
    pub exact: Option<(DMatrix<f64>, DVector<f64>)>,
    /// Interior observations as noisy linear functions of interior steps.
    pub noisy: LinearObservationModel,
    /// Observed coordinates, x and y interleaved per observation.
    pub z: DVector<f64>,
}

/// Build the exact displacement constraint and the noisy observation rows
/// of a section for the given interior `bearings`.
///
/// Coefficients depend on bearings only; the steps of `path` enter only
/// through the fixed locations at the section ends.
pub fn design_for_section(
    path: &RefinedPath,
    obs: &ObservationSet,
    section: &Section,
    bearings: &[f64],
    sigma_e2: f64,
) -> Result<SectionDesign> {
    let locations = reconstruct_locations(path);
    design_with_locations(&locations, obs, section, bearings, sigma_e2)
}

pub(crate) fn design_with_locations(
    locations: &[[f64; 2]],
    obs: &ObservationSet,
    section: &Section,
    bearings: &[f64],
    sigma_e2: f64,
) -> Result<SectionDesign> {
    let k = section.n_interior();
    if bearings.len() != k || locations.len() < section.hi {
        return Err(Error::Dimension(format!(
            "{} bearings for a section of {k} interior steps",
            bearings.len()
        )));
    }
    let (sin, cos): (Vec<f64>, Vec<f64>) = bearings.iter().map(|b| b.sin_cos()).unzip();
    let start = locations[section.lo];

    let exact = section.anchored_right().then(|| {
        let end = locations[section.hi - 1];
        let mut b = DMatrix::zeros(2, k);
        for j in 0..k {
            b[(0, j)] = cos[j];
            b[(1, j)] = sin[j];
        }
        (
            b,
            DVector::from_column_slice(&[end[0] - start[0], end[1] - start[1]]),
        )
    });

    let rows = 2 * section.interior_obs.len();
    let mut design = DMatrix::zeros(rows, k);
    let mut offset = DVector::zeros(rows);
    let mut z = DVector::zeros(rows);
    for (r, &i) in section.interior_obs.iter().enumerate() {
        let node = obs.grid_index()[i];
        // Node `node` sits after interior steps lo+1..=node.
        for j in 0..node - section.lo {
            design[(2 * r, j)] = cos[j];
            design[(2 * r + 1, j)] = sin[j];
        }
        offset[2 * r] = start[0];
        offset[2 * r + 1] = start[1];
        z[2 * r] = obs.xs()[i];
        z[2 * r + 1] = obs.ys()[i];
    }
    let noisy = LinearObservationModel::new(design, offset, DVector::from_element(rows, sigma_e2))?;
    Ok(SectionDesign { exact, noisy, z })
}

/// Conditional prior law of the interior bearings given the fixed ones.
pub fn section_bearing_law(
    path: &RefinedPath,
    section: &Section,
    params: &ModelParams,
) -> Result<GaussianSpec> {
    let (k, dt, s2) = (section.n_interior(), path.dt(), params.sigma_b2);
    match (section.anchored_left(), section.anchored_right()) {
        (true, true) => brownian_bridge(
            path.bearing(section.lo),
            path.bearing(section.hi),
            k,
            s2,
            dt,
        ),
        // The initial bearing is uniform on the circle, i.e. flat, so the
        // conditional is the walk run back from the right anchor.
        (false, true) => random_walk_backward(path.bearing(section.hi), k, s2, dt),
        (true, false) => random_walk_forward(path.bearing(section.lo), k, s2, dt),
        (false, false) => Err(Error::InvalidArgument("section has no anchor".into())),
    }
}

/// Conditional prior law of the interior steps given the fixed ones,
/// before any location information. Independent of bearings.
pub fn section_step_prior(
    path: &RefinedPath,
    section: &Section,
    params: &ModelParams,
    convention: InitialStepVariance,
) -> Result<GaussianSpec> {
    let (k, dt) = (section.n_interior(), path.dt());
    match (section.anchored_left(), section.anchored_right()) {
        (true, true) => ou_bridge(path.step(section.lo), path.step(section.hi), k, params, dt),
        (false, true) => {
            // Chain from the initial step law, pinned at the right anchor.
            let first = initial_step_dist(params, dt, convention)?;
            let free = step_chain_joint(first, k + 1, params, dt)?;
            let mut b = DMatrix::zeros(1, k + 1);
            b[(0, k)] = 1.0;
            let pinned =
                condition_on_exact(&free, &b, &DVector::from_element(1, path.step(section.hi)))?;
            Ok(pinned.marginal(0, k))
        }
        (true, false) => {
            let first = step_transition(path.step(section.lo), params, dt)?;
            step_chain_joint(first, k, params, dt)
        }
        (false, false) => Err(Error::InvalidArgument("section has no anchor".into())),
    }
}

/// Everything needed to propose and score one section update for a given
/// set of interior bearings.
#[derive(Debug, Clone)]
pub struct SectionProposalLaw {
    pub bearing_law: GaussianSpec,
    /// Steps given bearings, the displacement constraint and interior
    /// observations. Singular when the constraint binds.
    pub step_law: GaussianSpec,
    /// Interior observation coordinates given bearings and the constraint.
    pub obs_marginal: GaussianSpec,
    /// Displacement `B ν` under the step prior, when constrained.
    pub constraint_marginal: Option<GaussianSpec>,
    /// log p(d | θ) + log p(z | θ, d): the bearing-dependent factor of the
    /// section's full conditional left after the bearing prior cancels
    /// against the bridge proposal.
    pub log_marginal: f64,
}

impl SectionProposalLaw {
    pub fn build(
        bearing_law: GaussianSpec,
        step_prior: &GaussianSpec,
        design: &SectionDesign,
    ) -> Result<Self> {
        let (constrained, constraint_marginal, log_d) = match &design.exact {
            Some((b, d)) => {
                let marginal = step_prior.linear_transform(b, &DVector::zeros(2))?;
                let log_d = logpdf_degenerate(&marginal, d);
                (condition_on_exact(step_prior, b, d)?, Some(marginal), log_d)
            }
            None => (step_prior.clone(), None, 0.0),
        };
        let obs_marginal = design.noisy.marginal(&constrained)?;
        let log_z = logpdf_degenerate(&obs_marginal, &design.z);
        let step_law = condition_on_noisy(&constrained, &design.noisy, &design.z)?;
        Ok(Self {
            bearing_law,
            step_law,
            obs_marginal,
            constraint_marginal,
            log_marginal: log_d + log_z,
        })
    }
}

/// Starting path: linear interpolation between observations at `dt`
/// resolution. Each gap gets a constant bearing, unwrapped so successive
/// bearings differ by at most π, and equal steps. A zero-length gap keeps
/// the previous bearing with zero steps.
pub fn init_path_from_obs(obs: &ObservationSet) -> Result<RefinedPath> {
    let n = obs.n_steps();
    let mut bearings = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    let mut prev: Option<f64> = None;
    for i in 1..obs.len() {
        let gap = obs.grid_index()[i] - obs.grid_index()[i - 1];
        let [x0, y0] = obs.location(i - 1);
        let [x1, y1] = obs.location(i);
        let (dx, dy) = (x1 - x0, y1 - y0);
        let length = dx.hypot(dy);
        let bearing = if length == 0.0 {
            prev.unwrap_or(0.0)
        } else {
            let raw = dy.atan2(dx);
            match prev {
                Some(p) => p + wrap_angle(raw - p),
                None => raw,
            }
        };
        prev = Some(bearing);
        for _ in 0..gap {
            bearings.push(bearing);
            steps.push(length / gap as f64);
        }
    }
    RefinedPath::new(obs.location(0), obs.dt(), bearings, steps)
}

/// Reduce an angle to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
