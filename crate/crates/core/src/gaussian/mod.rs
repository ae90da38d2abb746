//! Dense multivariate Gaussians that may be rank-deficient.
//!
//! Section updates condition the step chain on exact displacement
//! constraints, which leaves covariances singular by construction. Every
//! factorization here is spectral, with eigenvalues below
//! [`RANK_TOL`] × (largest eigenvalue) treated as zero. Laws obtained by
//! conditioning measure that threshold against the law they came from, so a
//! fully pinned law has rank zero rather than roundoff rank.

mod bridges;

pub use bridges::{
    brownian_bridge, ou_bridge, random_walk_backward, random_walk_forward, step_chain_joint,
};

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative threshold below which eigenvalues count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Off-support tolerance for [`logpdf_degenerate`], relative to the
/// largest standard deviation of the law.
pub const SUPPORT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Spectral {
    /// Clipped eigenvalues: zero at or below the rank threshold.
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    rank: usize,
    max_value: f64,
}

impl Spectral {
    fn of(cov: &DMatrix<f64>, reference: f64) -> Self {
        if cov.is_empty() {
            return Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
                rank: 0,
                max_value: 0.0,
            };
        }
        let eig = SymmetricEigen::new(cov.clone());
        let max_value = eig
            .eigenvalues
            .iter()
            .fold(reference, |m, v| m.max(v.abs()));
        let tol = RANK_TOL * max_value;
        let mut rank = 0;
        let values = eig.eigenvalues.map(|v| {
            if v > tol {
                rank += 1;
                v
            } else {
                0.0
            }
        });
        Self {
            values,
            vectors: eig.eigenvectors,
            rank,
            max_value,
        }
    }

    fn min_raw(cov: &DMatrix<f64>) -> (f64, f64) {
        if cov.is_empty() {
            return (0.0, 0.0);
        }
        let eig = SymmetricEigen::new(cov.clone());
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        (min, max)
    }
}

/// Mean vector and symmetric positive semidefinite covariance.
#[derive(Debug, Clone)]
pub struct GaussianSpec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    /// Magnitude the rank threshold is relative to, beyond the law's own
    /// largest eigenvalue.
    reference: f64,
    spectral: OnceLock<Spectral>,
}

impl GaussianSpec {
    /// Validates dimensions, finiteness, symmetry and positive
    /// semidefiniteness (eigenvalues >= -1e-10 × largest).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Dimension(format!(
                "mean has length {n}, covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if !mean.iter().chain(cov.iter()).all(|v| v.is_finite()) {
            return Err(Error::NotPsd("non-finite entry".into()));
        }
        let scale = cov.amax();
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotPsd(format!(
                "asymmetry {asym:e} at scale {scale:e}"
            )));
        }
        let spec = Self::from_parts(mean, cov);
        let (min, max) = Spectral::min_raw(&spec.cov);
        if min < -RANK_TOL * max {
            return Err(Error::NotPsd(format!(
                "eigenvalue {min:e} (largest {max:e})"
            )));
        }
        Ok(spec)
    }

    /// Trusted constructor for covariances produced by this module; only
    /// symmetrizes.
    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let cov = (&cov + cov.transpose()) * 0.5;
        Self {
            mean,
            cov,
            reference: 0.0,
            spectral: OnceLock::new(),
        }
    }

    fn with_reference(mut self, parent: &Self) -> Self {
        self.reference = parent.reference.max(parent.cov.amax());
        self
    }

    /// Independent scalar laws stacked into one spec.
    pub fn diagonal(mean: DVector<f64>, var: &[f64]) -> Result<Self> {
        Self::new(
            mean,
            DMatrix::from_diagonal(&DVector::from_column_slice(var)),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn spectral(&self) -> &Spectral {
        self.spectral
            .get_or_init(|| Spectral::of(&self.cov, self.reference))
    }

    /// Number of eigenvalues above the rank threshold.
    pub fn rank(&self) -> usize {
        self.spectral().rank
    }

    /// Law of `M x + c`.
    pub fn linear_transform(&self, m: &DMatrix<f64>, c: &DVector<f64>) -> Result<Self> {
        if m.ncols() != self.dim() || m.nrows() != c.len() {
            return Err(Error::Dimension(format!(
                "transform {}x{} with offset {} applied to dimension {}",
                m.nrows(),
                m.ncols(),
                c.len(),
                self.dim()
            )));
        }
        Ok(Self::from_parts(
            m * &self.mean + c,
            m * &self.cov * m.transpose(),
        ))
    }

    /// Marginal over a contiguous block of coordinates.
    pub fn marginal(&self, start: usize, len: usize) -> Self {
        Self::from_parts(
            self.mean.rows(start, len).into_owned(),
            self.cov.view((start, start), (len, len)).into_owned(),
        )
        .with_reference(self)
    }
}

/// Scalar observation equations `z = A x + c + e`, `e ~ N(0, diag(noise_var))`.
#[derive(Debug, Clone)]
pub struct LinearObservationModel {
    pub design: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub noise_var: DVector<f64>,
}

impl LinearObservationModel {
    pub fn new(
        design: DMatrix<f64>,
        offset: DVector<f64>,
        noise_var: DVector<f64>,
    ) -> Result<Self> {
        if offset.len() != design.nrows() || noise_var.len() != design.nrows() {
            return Err(Error::Dimension(format!(
                "design has {} rows, offset {}, noise {}",
                design.nrows(),
                offset.len(),
                noise_var.len()
            )));
        }
        if let Some(v) = noise_var.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "noise variance {v} must be > 0"
            )));
        }
        Ok(Self {
            design,
            offset,
            noise_var,
        })
    }

    /// A model with no rows over a latent space of dimension `dim`.
    pub fn empty(dim: usize) -> Self {
        Self {
            design: DMatrix::zeros(0, dim),
            offset: DVector::zeros(0),
            noise_var: DVector::zeros(0),
        }
    }

    pub fn rows(&self) -> usize {
        self.design.nrows()
    }

    /// Marginal law of `z` under the latent law `prior`.
    pub fn marginal(&self, prior: &GaussianSpec) -> Result<GaussianSpec> {
        let mut m = prior.linear_transform(&self.design, &self.offset)?;
        for (i, v) in self.noise_var.iter().enumerate() {
            m.cov[(i, i)] += v;
        }
        Ok(m)
    }
}

/// Posterior of `x ~ prior` after observing `z = A x + c + e`.
pub fn condition_on_noisy(
    prior: &GaussianSpec,
    model: &LinearObservationModel,
    z: &DVector<f64>,
) -> Result<GaussianSpec> {
    if model.design.ncols() != prior.dim() || z.len() != model.rows() {
        return Err(Error::Dimension(format!(
            "design {}x{}, observation {}, latent dimension {}",
            model.rows(),
            model.design.ncols(),
            z.len(),
            prior.dim()
        )));
    }
    if model.rows() == 0 {
        return Ok(prior.clone());
    }
    let a_sigma = &model.design * &prior.cov;
    let mut s = &a_sigma * model.design.transpose();
    for (i, v) in model.noise_var.iter().enumerate() {
        s[(i, i)] += v;
    }
    let s = (&s + s.transpose()) * 0.5;
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Singular("observation covariance A Σ Aᵀ + D".into()))?;
    let innovation = z - &model.design * &prior.mean - &model.offset;
    let mean = &prior.mean + a_sigma.transpose() * chol.solve(&innovation);
    let cov = &prior.cov - a_sigma.transpose() * chol.solve(&a_sigma);
    Ok(GaussianSpec::from_parts(mean, cov).with_reference(prior))
}

/// Posterior of `x ~ prior` given the exact linear constraint `B x = d`.
///
/// The result is singular: its covariance loses rank(B) dimensions.
/// Fails when `B Σ Bᵀ` is singular at the rank threshold, i.e. the
/// constraint is degenerate over the prior's support.
pub fn condition_on_exact(
    prior: &GaussianSpec,
    b: &DMatrix<f64>,
    d: &DVector<f64>,
) -> Result<GaussianSpec> {
    if b.ncols() != prior.dim() || d.len() != b.nrows() {
        return Err(Error::Dimension(format!(
            "constraint {}x{} with target {} on dimension {}",
            b.nrows(),
            b.ncols(),
            d.len(),
            prior.dim()
        )));
    }
    if b.nrows() == 0 {
        return Ok(prior.clone());
    }
    let b_sigma = b * &prior.cov;
    let s = b_sigma.clone() * b.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let (min, max) = Spectral::min_raw(&s);
    if !(max > 0.0) || min <= RANK_TOL * max {
        return Err(Error::Singular(format!(
            "constraint covariance B Σ Bᵀ has eigenvalues in [{min:e}, {max:e}]"
        )));
    }
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Singular("constraint covariance B Σ Bᵀ".into()))?;
    let innovation = d - b * &prior.mean;
    let mean = &prior.mean + b_sigma.transpose() * chol.solve(&innovation);
    let cov = &prior.cov - b_sigma.transpose() * chol.solve(&b_sigma);
    Ok(GaussianSpec::from_parts(mean, cov).with_reference(prior))
}

/// Draw `mean + U_r diag(√s_r) u`, `u ~ N(0, I_r)`, over the eigenpairs
/// above the rank threshold.
pub fn sample_singular<R: Rng + ?Sized>(spec: &GaussianSpec, rng: &mut R) -> DVector<f64> {
    let sp = spec.spectral();
    let mut x = spec.mean.clone();
    for (k, &s) in sp.values.iter().enumerate() {
        if s > 0.0 {
            let u: f64 = rng.sample(StandardNormal);
            x.axpy(s.sqrt() * u, &sp.vectors.column(k), 1.0);
        }
    }
    x
}

/// Log-density on the support of a possibly singular law, using the
/// pseudo-determinant and pseudo-inverse. Points off the support return
/// `-inf`.
pub fn logpdf_degenerate(spec: &GaussianSpec, x: &DVector<f64>) -> f64 {
    let sp = spec.spectral();
    let r = x - &spec.mean;
    let mut quad = 0.0;
    let mut log_pdet = 0.0;
    let mut on_support = DVector::zeros(r.len());
    for (k, &s) in sp.values.iter().enumerate() {
        if s > 0.0 {
            let col = sp.vectors.column(k);
            let c = col.dot(&r);
            quad += c * c / s;
            log_pdet += s.ln();
            on_support.axpy(c, &col, 1.0);
        }
    }
    let off = (&r - on_support).norm();
    let scale = if sp.max_value > 0.0 {
        sp.max_value.sqrt()
    } else {
        1.0
    };
    if off > SUPPORT_TOL * scale {
        return f64::NEG_INFINITY;
    }
    -0.5 * (sp.rank as f64 * (2.0 * PI).ln() + log_pdet + quad)
}
