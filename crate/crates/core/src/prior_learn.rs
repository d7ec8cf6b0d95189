//! Weak-prior estimation from a small set of images with per-pixel
//! 3-way semantic annotations.
//!
//! Label masks are authored at full resolution with values 1 (bottom /
//! water), 2 (middle) and 3 (top); 0 marks unlabeled pixels. Masks are
//! nearest-downscaled to the working resolution, images bilinearly, and
//! one Gaussian is fitted per label over the pooled feature vectors of
//! all examples.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::imaging::{
    convert_colorspace, extract_features, resize_bilinear, resize_nearest_u8, Colorspace,
    FeatureMode, ImageF, ImageU8,
};
use crate::mixture::{regularize_covariance, MeanPrior, WeakPriors};
use crate::num::{c, Real};

/// One annotated training image.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub image: ImageU8,
    /// Single-channel mask, same or different resolution as `image`,
    /// values in {0,1,2,3}.
    pub labels: ImageU8,
}

/// Pool features per semantic label across all examples and fit one
/// Gaussian (sample mean, regularized sample covariance) per component.
///
/// Requires at least `d + 1` labeled pixels per component after
/// downscaling to the working resolution.
pub fn learn_weak_priors<T: Real>(
    examples: &[TrainingExample],
    colorspace: Colorspace,
    mode: FeatureMode,
    working_size: usize,
    eps_reg: f64,
) -> Result<WeakPriors<T>> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    let d = mode.dim();
    let mut pooled: [Vec<T>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for ex in examples {
        if ex.labels.channels != 1 {
            return Err(Error::UnsupportedImage(
                "label masks must be single-channel".into(),
            ));
        }
        let frame = ImageF::<T>::from_u8(&ex.image);
        let working = resize_bilinear(&frame, working_size, working_size)?;
        let converted = convert_colorspace(&working, colorspace)?;
        let features = extract_features(&converted, mode)?;
        let labels = resize_nearest_u8(&ex.labels, working_size, working_size)?;
        for i in 0..features.len() {
            let label = labels.data[i];
            if (1..=3).contains(&label) {
                pooled[(label - 1) as usize].extend_from_slice(features.feature(i));
            }
        }
    }
    let mut components = Vec::with_capacity(3);
    for (k, flat) in pooled.iter().enumerate() {
        let n = flat.len() / d;
        if n < d + 1 {
            return Err(Error::InsufficientSamples {
                component: k + 1,
                got: n,
                needed: d + 1,
            });
        }
        let inv_n = T::one() / c::<T>(n as f64);
        let mut mean = DVector::<T>::zeros(d);
        for s in 0..n {
            for r in 0..d {
                mean[r] = mean[r] + flat[s * d + r];
            }
        }
        mean *= inv_n;
        let mut scatter = DMatrix::<T>::zeros(d, d);
        for s in 0..n {
            for r in 0..d {
                let dr = flat[s * d + r] - mean[r];
                for cc in 0..=r {
                    scatter[(r, cc)] = scatter[(r, cc)] + dr * (flat[s * d + cc] - mean[cc]);
                }
            }
        }
        for r in 0..d {
            for cc in r + 1..d {
                scatter[(r, cc)] = scatter[(cc, r)];
            }
        }
        scatter *= inv_n;
        let cov = regularize_covariance(&scatter, c::<T>(eps_reg));
        components.push(MeanPrior { mean, cov });
    }
    let components: [MeanPrior<T>; 3] = components.try_into().expect("three components");
    Ok(WeakPriors { components })
}
