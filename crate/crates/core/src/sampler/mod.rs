//! Metropolis-within-Gibbs over (parameters, refined path).
//!
//! Each iteration makes one joint random-walk update of the five
//! parameters, a Gibbs draw of the path origin, then a configurable number
//! of section updates of the path. Section updates hold the origin fixed.
//!
//! With [`SamplerConfig::collapse_steps`] set, the parameter update
//! integrates the steps out given the bearings and is followed by an exact
//! draw of every step; see [`collapsed_param_update`].

mod chain;
mod config;
mod intervals;
mod mh;
mod section;
mod state;
mod steps;

pub use chain::{initial_params, run_chain, ChainDiagnostics, PosteriorSample, TraceSummary};
pub use config::{Prior, SamplerConfig};
pub use intervals::{credible_intervals, quantile, CredibleInterval};
pub use mh::{log_std_normal_cdf, mh_step, TruncatedWalk};
pub use section::{section_update, section_update_at, SectionContext, SectionOutcome};
pub use state::{joint_log_likelihood, origin_update, param_update, ChainState};
pub use steps::{collapsed_param_update, draw_steps, marginal_step_log_likelihood};

/// Tolerance on endpoint locations after an accepted section update (m).
pub const ENDPOINT_TOL: f64 = 1e-6;
