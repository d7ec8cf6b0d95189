//! The convolutional EM engine.
//!
//! One iteration runs three stages:
//!
//! 1. per-pixel Bayes posteriors from the current parameters and priors;
//! 2. the E-step, which couples each pixel to its neighborhood: for every
//!    class plane `f` (prior or posterior), the plane is multiplied by its
//!    own neighborhood mixture `f * lambda`, renormalized across classes,
//!    and convolved with the center-one kernel to fold the pixel back in,
//!    producing the sum-2 smoothed fields; the new priors are the average
//!    of the two smoothed fields divided by two;
//! 3. the M-step, a MAP update of the Gaussian means (precision-weighted
//!    blend of the responsibility-weighted data mean and the weak prior
//!    mean) followed by the responsibility-weighted covariance update.
//!
//! With `use_mrf` off the e-step is skipped and the smoothed posterior is
//! defined as twice the plain posterior, so every downstream consumer is
//! mode-agnostic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::imaging::{convolve_field_into, FeatureField, Kernel2D};
use crate::mixture::{
    pixel_posteriors, CategoricalField, GaussianComponent, MixtureParams, PreparedGaussian,
    WeakPriors, NUM_CLASSES, NUM_GAUSSIANS,
};
use crate::num::{c, fmax, ln, Real};

/// EM engine configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    /// Upper bound on EM cycles.
    pub max_iters: usize,
    /// Convergence threshold: mean absolute change of the posterior field
    /// between consecutive iterations (averaged over all pixel/class
    /// entries).
    pub tol: f64,
    /// MRF coupling on; `false` selects the plain-mixture ablation.
    pub use_mrf: bool,
    /// Covariance ridge added after every covariance update.
    pub eps_reg: f64,
    /// Record the lower-bound value per iteration (diagnostic).
    pub track_bound: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            tol: 1e-2,
            use_mrf: true,
            eps_reg: 1e-5,
            track_bound: false,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be > 0".into()));
        }
        if self.eps_reg < 0.0 {
            return Err(Error::InvalidArgument("eps_reg must be >= 0".into()));
        }
        Ok(())
    }
}

/// Fields produced by one E-step.
#[derive(Debug, Clone)]
pub struct EStepFields<T> {
    /// Smoothed prior field (per-pixel sum 2).
    pub smoothed_priors: CategoricalField<T>,
    /// Smoothed posterior field (per-pixel sum 2).
    pub smoothed_posteriors: CategoricalField<T>,
    /// Updated prior field (per-pixel sum 1).
    pub new_priors: CategoricalField<T>,
}

/// Converged model state.
#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub params: MixtureParams<T>,
    /// Final prior field (rows sum to 1).
    pub priors: CategoricalField<T>,
    /// Final smoothed posterior field (rows sum to 2); the labeling input.
    pub smoothed_posteriors: CategoricalField<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Components whose responsibility mass vanished and were frozen at
    /// their previous parameters during any M-step.
    pub frozen: [bool; NUM_GAUSSIANS],
    /// Lower-bound trace, one entry per iteration, when tracking is on.
    pub bound_trace: Vec<T>,
}

/// `xi ∘ f ∘ (f * lambda)` normalized across classes, then `* lambda1`.
fn coupled_smooth<T: Real>(
    field: &CategoricalField<T>,
    smoothing: &Kernel2D<T>,
    augmented: &Kernel2D<T>,
) -> Result<CategoricalField<T>> {
    let (w, h) = (field.width, field.height);
    let n = field.num_pixels();
    let mut pointwise = CategoricalField::zeros(w, h);
    let mut scratch = vec![T::zero(); n];
    for k in 0..NUM_CLASSES {
        convolve_field_into(field.plane(k), w, h, smoothing, &mut scratch);
        let dst = pointwise.plane_mut(k);
        let src = field.plane(k);
        for i in 0..n {
            dst[i] = src[i] * scratch[i];
        }
    }
    for i in 0..n {
        let px = pointwise.pixel(i);
        let sum: T = px.into_iter().sum();
        if !(sum > T::zero()) || !num_traits::Float::is_finite(sum) {
            return Err(Error::NumericalFailure(format!(
                "zero class-product normalizer at pixel {i}"
            )));
        }
        let inv = T::one() / sum;
        pointwise.set_pixel(i, px.map(|v| v * inv));
    }
    let mut out = CategoricalField::zeros(w, h);
    for k in 0..NUM_CLASSES {
        convolve_field_into(pointwise.plane(k), w, h, augmented, out.plane_mut(k));
    }
    Ok(out)
}

/// One E-step over the prior and posterior fields.
///
/// Returns the two smoothed sum-2 fields and the updated priors
/// `(smoothed_priors + smoothed_posteriors) / 4`.
pub fn e_step<T: Real>(
    priors: &CategoricalField<T>,
    posteriors: &CategoricalField<T>,
    smoothing: &Kernel2D<T>,
    augmented: &Kernel2D<T>,
) -> Result<EStepFields<T>> {
    if priors.width != posteriors.width || priors.height != posteriors.height {
        return Err(Error::DimensionMismatch("prior/posterior sizes differ".into()));
    }
    let smoothed_priors = coupled_smooth(priors, smoothing, augmented)?;
    let smoothed_posteriors = coupled_smooth(posteriors, smoothing, augmented)?;
    let mut new_priors = CategoricalField::zeros(priors.width, priors.height);
    let quarter = c::<T>(0.25);
    for k in 0..NUM_CLASSES {
        let sp = smoothed_priors.plane(k);
        let sq = smoothed_posteriors.plane(k);
        let dst = new_priors.plane_mut(k);
        for i in 0..dst.len() {
            dst[i] = (sp[i] + sq[i]) * quarter;
        }
    }
    Ok(EStepFields {
        smoothed_priors,
        smoothed_posteriors,
        new_priors,
    })
}

/// M-step output: updated parameters plus per-component freeze flags.
#[derive(Debug, Clone)]
pub struct MStepResult<T> {
    pub params: MixtureParams<T>,
    pub frozen: [bool; NUM_GAUSSIANS],
}

/// Responsibility mass below which a component is frozen at its previous
/// parameters instead of being re-estimated.
pub const EMPTY_COMPONENT_MASS: f64 = 1e-6;

/// MAP M-step.
///
/// Per Gaussian component `k` with responsibility plane `q` (from the
/// smoothed posterior):
///
/// - `beta = sum_i q_i`; below [`EMPTY_COMPONENT_MASS`] the component is
///   frozen and flagged;
/// - the new mean blends the responsibility-weighted data mean with the
///   weak prior mean through their precisions, using the previous
///   iteration's covariance:
///   `mu = (cov_old^-1 + prior_cov^-1)^-1 (cov_old^-1 ybar + prior_cov^-1 prior_mean)`;
/// - the new covariance is the responsibility-weighted scatter around the
///   new mean plus the `eps_reg` ridge.
///
/// The uniform component has no parameters and passes through.
pub fn m_step<T: Real>(
    features: &FeatureField<T>,
    smoothed_posteriors: &CategoricalField<T>,
    weak: &WeakPriors<T>,
    old: &MixtureParams<T>,
    eps_reg: f64,
) -> Result<MStepResult<T>> {
    let d = features.dim;
    if old.dim() != d || weak.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "feature dim {d} vs model dim {} vs prior dim {}",
            old.dim(),
            weak.dim()
        )));
    }
    if smoothed_posteriors.num_pixels() != features.len() {
        return Err(Error::DimensionMismatch(
            "posterior field and feature field sizes differ".into(),
        ));
    }
    let n = features.len();
    let eps = c::<T>(eps_reg);
    let mass_floor = c::<T>(EMPTY_COMPONENT_MASS);

    let mut components: Vec<GaussianComponent<T>> = Vec::with_capacity(NUM_GAUSSIANS);
    let mut frozen = [false; NUM_GAUSSIANS];
    for k in 0..NUM_GAUSSIANS {
        let q = smoothed_posteriors.plane(k);
        let mut beta = T::zero();
        let mut weighted_sum = vec![T::zero(); d];
        for i in 0..n {
            let qi = q[i];
            beta = beta + qi;
            let y = features.feature(i);
            for r in 0..d {
                weighted_sum[r] = weighted_sum[r] + qi * y[r];
            }
        }
        if beta < mass_floor {
            frozen[k] = true;
            components.push(old.components[k].clone());
            continue;
        }
        let inv_beta = T::one() / beta;
        let data_mean = DVector::from_iterator(d, weighted_sum.iter().map(|&v| v * inv_beta));

        let cov_prec = nalgebra::Cholesky::new(old.components[k].cov.clone())
            .ok_or(Error::NotPositiveDefinite)?
            .inverse();
        let prior_prec = nalgebra::Cholesky::new(weak.components[k].cov.clone())
            .ok_or(Error::NotPositiveDefinite)?
            .inverse();
        let blend = nalgebra::Cholesky::new(&cov_prec + &prior_prec)
            .ok_or(Error::NotPositiveDefinite)?
            .inverse();
        let mean = &blend * (&cov_prec * &data_mean + &prior_prec * &weak.components[k].mean);

        let mut scatter = vec![T::zero(); d * d];
        for i in 0..n {
            let qi = q[i];
            let y = features.feature(i);
            for r in 0..d {
                let dr = qi * (y[r] - mean[r]);
                for cc in 0..=r {
                    scatter[r * d + cc] = scatter[r * d + cc] + dr * (y[cc] - mean[cc]);
                }
            }
        }
        let mut cov = DMatrix::from_fn(d, d, |r, cc| {
            let (a, b) = if r >= cc { (r, cc) } else { (cc, r) };
            scatter[a * d + b] * inv_beta
        });
        for i in 0..d {
            cov[(i, i)] = cov[(i, i)] + eps;
        }
        components.push(GaussianComponent { mean, cov });
    }
    let components: [GaussianComponent<T>; 3] = components
        .try_into()
        .expect("exactly three Gaussian components");
    Ok(MStepResult {
        params: MixtureParams {
            components,
            uniform_density: old.uniform_density,
        },
        frozen,
    })
}

/// Evaluate the EM lower bound (diagnostic).
///
/// `F = sum_i [ 1/2 qhat_i . (loglik_i + log pi_i) + log p(theta | priors)
/// + 1/2 (shat_i + qhat_i) . log pi_i ]`, where `loglik_ik` is the
/// per-component data log-density (uniform density for class 4) and
/// `log pi` is floored at `log(1e-12)` to stay finite for zero-prior
/// classes. Shifting every log-likelihood by a constant shifts the bound
/// by `sum_i 1/2 sum_k qhat_ik` times that constant.
pub fn lower_bound<T: Real>(
    features: &FeatureField<T>,
    params: &MixtureParams<T>,
    priors: &CategoricalField<T>,
    smoothed_posteriors: &CategoricalField<T>,
    smoothed_priors: &CategoricalField<T>,
    weak: &WeakPriors<T>,
) -> Result<T> {
    let prepared: Vec<PreparedGaussian<T>> = params
        .components
        .iter()
        .map(PreparedGaussian::new)
        .collect::<Result<_>>()?;
    let log_floor = ln(c::<T>(1e-12));
    let log_uniform = ln(params.uniform_density);
    let half = c::<T>(0.5);

    // log p(theta | priors): product of prior densities at the current means.
    let mut log_prior = T::zero();
    for k in 0..NUM_GAUSSIANS {
        let g = GaussianComponent::new(
            weak.components[k].mean.clone(),
            weak.components[k].cov.clone(),
        );
        log_prior = log_prior
            + PreparedGaussian::new(&g)?.logpdf(params.components[k].mean.as_slice(), &g.mean);
    }

    let n = features.len();
    let mut total = T::zero();
    for i in 0..n {
        let y = features.feature(i);
        let qi = smoothed_posteriors.pixel(i);
        let si = smoothed_priors.pixel(i);
        let pi = priors.pixel(i);
        let mut acc = T::zero();
        let mut q_mass = T::zero();
        for k in 0..NUM_CLASSES {
            let loglik = if k < NUM_GAUSSIANS {
                prepared[k].logpdf(y, &params.components[k].mean)
            } else {
                log_uniform
            };
            let log_pi = fmax(ln(pi[k]), log_floor);
            acc = acc + half * qi[k] * (loglik + log_pi);
            acc = acc + half * (si[k] + qi[k]) * log_pi;
            q_mass = q_mass + qi[k];
        }
        total = total + acc + half * q_mass * log_prior;
    }
    Ok(total)
}

/// Run the EM to convergence.
///
/// Each cycle computes posteriors, runs the E-step (or its ablation
/// bypass), then the M-step. Iteration stops when the mean absolute
/// change of the posterior field drops below `cfg.tol`, or after
/// `cfg.max_iters` cycles.
pub fn fit<T: Real>(
    features: &FeatureField<T>,
    params_init: &MixtureParams<T>,
    priors_init: &CategoricalField<T>,
    weak: &WeakPriors<T>,
    smoothing: &Kernel2D<T>,
    augmented: &Kernel2D<T>,
    cfg: &EmConfig,
) -> Result<FitResult<T>> {
    cfg.validate()?;
    let tol = c::<T>(cfg.tol);
    let mut params = params_init.clone();
    let mut priors = priors_init.clone();
    let mut prev_posterior: Option<CategoricalField<T>> = None;
    let mut last_qhat: Option<CategoricalField<T>> = None;
    let mut frozen = [false; NUM_GAUSSIANS];
    let mut bound_trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        let posterior = pixel_posteriors(features, &params, &priors)?;
        let (shat, qhat, new_priors) = if cfg.use_mrf {
            let es = e_step(&priors, &posterior, smoothing, augmented)?;
            (es.smoothed_priors, es.smoothed_posteriors, es.new_priors)
        } else {
            let doubled = posterior.scaled(c::<T>(2.0));
            (doubled.clone(), doubled, posterior.clone())
        };
        priors = new_priors;
        let ms = m_step(features, &qhat, weak, &params, cfg.eps_reg)?;
        params = ms.params;
        for k in 0..NUM_GAUSSIANS {
            frozen[k] |= ms.frozen[k];
        }
        if cfg.track_bound {
            bound_trace.push(lower_bound(
                features, &params, &priors, &qhat, &shat, weak,
            )?);
        }
        last_qhat = Some(qhat);
        iterations += 1;

        if let Some(prev) = &prev_posterior {
            if posterior.mean_abs_diff(prev) < tol {
                converged = true;
                break;
            }
        }
        prev_posterior = Some(posterior);
    }

    Ok(FitResult {
        params,
        priors,
        smoothed_posteriors: last_qhat.expect("at least one EM iteration"),
        iterations,
        converged,
        frozen,
        bound_trace,
    })
}
