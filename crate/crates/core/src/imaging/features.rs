//! Per-pixel feature vectors for the working-resolution frame.

use super::ImageF;
use crate::error::{Error, Result};
use crate::num::{c, Real};

/// Feature layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// [x, y, c1, c2, c3] with coordinates normalized to [0,1].
    Full,
    /// [c1, c2, c3] only (the color-only ablation).
    ColorOnly,
}

impl FeatureMode {
    pub fn dim(self) -> usize {
        match self {
            FeatureMode::Full => 5,
            FeatureMode::ColorOnly => 3,
        }
    }
}

/// Dense pixel-major feature storage: pixel `i` occupies
/// `data[i*dim .. (i+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField<T> {
    pub width: usize,
    pub height: usize,
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Real> FeatureField<T> {
    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn feature(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Extract per-pixel features from a 3-channel working-resolution image.
///
/// Full mode prepends the pixel coordinates scaled to [0,1]
/// (`x/(W-1)`, `y/(H-1)`), keeping every feature dimension commensurate
/// with the color channels.
pub fn extract_features<T: Real>(img: &ImageF<T>, mode: FeatureMode) -> Result<FeatureField<T>> {
    if img.channels != 3 {
        return Err(Error::DimensionMismatch(format!(
            "feature extraction needs 3 channels, got {}",
            img.channels
        )));
    }
    let (w, h) = (img.width, img.height);
    let dim = mode.dim();
    let mut data = Vec::with_capacity(w * h * dim);
    let norm = |v: usize, n: usize| {
        if n > 1 {
            v as f64 / (n - 1) as f64
        } else {
            0.0
        }
    };
    for y in 0..h {
        for x in 0..w {
            if mode == FeatureMode::Full {
                data.push(c::<T>(norm(x, w)));
                data.push(c::<T>(norm(y, h)));
            }
            for ch in 0..3 {
                data.push(img.get(x, y, ch));
            }
        }
    }
    Ok(FeatureField {
        width: w,
        height: h,
        dim,
        data,
    })
}
