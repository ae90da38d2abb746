use nalgebra::DVector;
use rand::Rng;

use super::ChainState;
use crate::error::{Error, Result};
use crate::gaussian::sample_singular;
use crate::model::{InitialStepVariance, ObservationSet};
use crate::path::{
    design_with_locations, section_bearing_law, section_step_prior, Section, SectionProposalLaw,
    SectionSampler,
};

#[derive(Debug, Clone, Copy)]
pub struct SectionContext {
    pub sections: SectionSampler,
    pub convention: InitialStepVariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectionOutcome {
    /// Accepted; carries the largest shift of a fixed location (m), to be
    /// checked against [`super::ENDPOINT_TOL`].
    Accepted {
        endpoint_shift: f64,
    },
    Rejected,
    /// The displacement constraint was degenerate for the proposed
    /// bearings; counted as a rejection.
    Infeasible,
}

/// Draw a random section and update it.
pub fn section_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    obs: &ObservationSet,
    ctx: &SectionContext,
    rng: &mut R,
) -> Result<SectionOutcome> {
    let section = ctx.sections.draw(state.path().len(), obs, rng)?;
    section_update_at(state, obs, &section, ctx.convention, rng)
}

/// Metropolis-Hastings update of one section.
///
/// Interior bearings are proposed from their conditional prior (bridge or
/// one-sided walk), so the bearing prior cancels. Steps are then proposed
/// from their exact conditional given bearings, fixed end locations and
/// interior observations. What remains in the ratio is the marginal
/// density, given bearings, of the fixed displacement and the interior
/// observations.
pub fn section_update_at<R: Rng + ?Sized>(
    state: &mut ChainState,
    obs: &ObservationSet,
    section: &Section,
    convention: InitialStepVariance,
    rng: &mut R,
) -> Result<SectionOutcome> {
    let params = *state.params();
    let path = state.path();
    let (first, hi) = (section.first(), section.hi);

    let bearing_law = section_bearing_law(path, section, &params)?;
    let step_prior = section_step_prior(path, section, &params, convention)?;
    let proposed: DVector<f64> = sample_singular(&bearing_law, rng);

    let current_bearings = &path.bearings()[first - 1..hi - 1];
    let design =
        |b: &[f64]| design_with_locations(state.locations(), obs, section, b, params.sigma_e2);
    let current = match SectionProposalLaw::build(
        bearing_law.clone(),
        &step_prior,
        &design(current_bearings)?,
    ) {
        Ok(law) => law,
        Err(Error::Singular(_)) => return Ok(SectionOutcome::Infeasible),
        Err(e) => return Err(e),
    };
    let candidate =
        match SectionProposalLaw::build(bearing_law, &step_prior, &design(proposed.as_slice())?) {
            Ok(law) => law,
            Err(Error::Singular(_)) => return Ok(SectionOutcome::Infeasible),
            Err(e) => return Err(e),
        };

    let log_alpha = candidate.log_marginal - current.log_marginal;
    let u: f64 = rng.random();
    if !(u.ln() < log_alpha) {
        return Ok(SectionOutcome::Rejected);
    }

    let steps = sample_singular(&candidate.step_law, rng);
    let before = state.locations().to_vec();
    state.splice(first, proposed.as_slice(), steps.as_slice())?;
    let after = state.locations();

    // Everything up to node lo is untouched; with a right anchor, node
    // hi - 1 and everything after it must not move either.
    let mut fixed = vec![section.lo];
    if section.anchored_right() {
        fixed.extend([hi - 1, after.len() - 1]);
    }
    let endpoint_shift = fixed
        .into_iter()
        .map(|k| (after[k][0] - before[k][0]).hypot(after[k][1] - before[k][1]))
        .fold(0.0, f64::max);
    Ok(SectionOutcome::Accepted { endpoint_shift })
}
