//! Per-frame obstacle-map estimation: initialization (first-frame region
//! split and temporal soft reset), model fitting, water-mask labeling,
//! enclosed-blob detection with proximity merging, and water-edge
//! extraction, with results rescaled to the original frame size.

mod regions;

pub use regions::{
    extract_obstacles, largest_component, suppress_merge, water_edge, water_mask_working,
    BinaryMask, WorkingBox,
};

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::em::{fit, EmConfig, FitResult};
use crate::error::{Error, Result};
use crate::imaging::{
    convert_colorspace, extract_features, make_mrf_kernels, resize_bilinear, resize_nearest_u8,
    Colorspace, FeatureField, FeatureMode, ImageF, ImageU8, Kernel2D,
};
use crate::mixture::{
    merge_moment_match, regularize_covariance, CategoricalField, GaussianComponent, MixtureParams,
    ObservedInit, WeakPriors, NUM_CLASSES, NUM_GAUSSIANS,
};
use crate::num::{c, Real};

/// Detector variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    /// Full model: MRF coupling, 5-D features.
    Ssm,
    /// No MRF coupling, 5-D features.
    Ugm,
    /// No MRF coupling, color-only 3-D features.
    UgmCol,
}

impl DetectorMode {
    pub fn feature_mode(self) -> FeatureMode {
        match self {
            DetectorMode::UgmCol => FeatureMode::ColorOnly,
            _ => FeatureMode::Full,
        }
    }

    pub fn use_mrf(self) -> bool {
        self == DetectorMode::Ssm
    }
}

impl std::str::FromStr for DetectorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssm" => Ok(DetectorMode::Ssm),
            "ugm" => Ok(DetectorMode::Ugm),
            "ugm_col" => Ok(DetectorMode::UgmCol),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode '{other}' (expected ssm|ugm|ugm_col)"
            ))),
        }
    }
}

/// Detector configuration; defaults follow the reference operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Working-resolution side length (frames are squashed to a square).
    pub working_size: usize,
    /// Soft-reset weight on the previous frame's parameters.
    pub alpha: f64,
    /// Initial prior mass of the uniform (outlier) class.
    pub eps_uniform: f64,
    /// Box-merge threshold as a fraction of the working-image diagonal.
    pub merge_gap: f64,
    /// Minimum enclosed-blob area (working pixels) reported as obstacle.
    pub min_blob_area: usize,
    pub em: EmConfig,
    pub colorspace: Colorspace,
    pub mode: DetectorMode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            working_size: 50,
            alpha: 0.6,
            eps_uniform: 0.01,
            merge_gap: 0.05,
            min_blob_area: 1,
            em: EmConfig::default(),
            colorspace: Colorspace::YCrCb,
            mode: DetectorMode::Ssm,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.working_size < 3 {
            return Err(Error::InvalidArgument("working size must be >= 3".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument("alpha must lie in [0,1]".into()));
        }
        if !(self.eps_uniform > 0.0 && self.eps_uniform < 0.25) {
            return Err(Error::InvalidArgument(
                "uniform prior init must lie in (0, 0.25)".into(),
            ));
        }
        if self.merge_gap < 0.0 {
            return Err(Error::InvalidArgument("merge gap must be >= 0".into()));
        }
        self.em.validate()
    }
}

/// Axis-aligned box in full-resolution pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Wall-clock cost of each pipeline stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct StageTimings {
    pub downscale_ms: f64,
    pub features_ms: f64,
    pub init_ms: f64,
    pub fit_ms: f64,
    pub detect_ms: f64,
    pub finalize_ms: f64,
    pub total_ms: f64,
}

/// Output of one processed frame.
#[derive(Debug, Clone)]
pub struct FrameResult<T = f64> {
    /// Full-resolution water mask (255 = water), the nearest upscale of
    /// the working mask.
    pub water_mask: ImageU8,
    /// Per-column topmost water row, full resolution; image height where
    /// the column holds no water.
    pub edge: Vec<u32>,
    /// Detected in-water obstacles, full-resolution coordinates.
    pub obstacles: Vec<BoundingBox>,
    /// Converged model state of the fit.
    pub fit: FitResult<T>,
    pub timing: StageTimings,
}

#[derive(Debug, Clone)]
struct PrevModel<T> {
    params: MixtureParams<T>,
    smoothed_posteriors: CategoricalField<T>,
}

/// Sequential detector state. The previous frame's converged parameters
/// and smoothed posterior are both present or both absent.
#[derive(Debug, Clone)]
pub struct DetectorState<T> {
    weak_priors: WeakPriors<T>,
    config: DetectorConfig,
    smoothing: Kernel2D<T>,
    augmented: Kernel2D<T>,
    prev: Option<PrevModel<T>>,
}

impl<T: Real> DetectorState<T> {
    pub fn new(weak_priors: WeakPriors<T>, mut config: DetectorConfig) -> Result<Self> {
        config.em.use_mrf = config.mode.use_mrf();
        config.validate()?;
        let expected_dim = config.mode.feature_mode().dim();
        if weak_priors.dim() != expected_dim {
            return Err(Error::DimensionMismatch(format!(
                "weak priors have dim {}, mode {:?} needs {}",
                weak_priors.dim(),
                config.mode,
                expected_dim
            )));
        }
        let (smoothing, augmented) = make_mrf_kernels(config.working_size)?;
        Ok(Self {
            weak_priors,
            config,
            smoothing,
            augmented,
            prev: None,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn has_temporal_state(&self) -> bool {
        self.prev.is_some()
    }

    /// Drop the temporal state; the next frame initializes from its own
    /// region split alone.
    pub fn reset(&mut self) {
        self.prev = None;
    }

    /// Run the full per-frame pipeline and, on success, absorb the
    /// converged model as the next frame's starting point. On error the
    /// temporal state is left untouched.
    pub fn process_frame(&mut self, frame: &ImageU8) -> Result<FrameResult<T>> {
        let t_total = Instant::now();
        let ws = self.config.working_size;

        let t0 = Instant::now();
        let frame_f = match frame.channels {
            3 => ImageF::<T>::from_u8(frame),
            _ => {
                return Err(Error::UnsupportedImage(
                    "detector requires 3-channel frames".into(),
                ))
            }
        };
        let working = resize_bilinear(&frame_f, ws, ws)?;
        let downscale_ms = ms_since(t0);

        let t0 = Instant::now();
        let converted = convert_colorspace(&working, self.config.colorspace)?;
        let features = extract_features(&converted, self.config.mode.feature_mode())?;
        let features_ms = ms_since(t0);

        let t0 = Instant::now();
        let (observed, split_priors) =
            init_first_frame(&features, self.config.eps_uniform, self.config.em.eps_reg)?;
        let uniform = MixtureParams::<T>::uniform_for(ws, ws);
        let (params_init, priors_init) = match &self.prev {
            Some(prev) => (
                soft_reset(&prev.params, &observed, c::<T>(self.config.alpha)),
                prev.smoothed_posteriors.scaled(c::<T>(0.5)),
            ),
            None => (
                MixtureParams {
                    components: observed.components.clone(),
                    uniform_density: uniform,
                },
                split_priors,
            ),
        };
        let init_ms = ms_since(t0);

        let t0 = Instant::now();
        let fit_result = fit(
            &features,
            &params_init,
            &priors_init,
            &self.weak_priors,
            &self.smoothing,
            &self.augmented,
            &self.config.em,
        )?;
        let fit_ms = ms_since(t0);

        let t0 = Instant::now();
        let working_mask = water_mask_working(&fit_result.smoothed_posteriors);
        let (region, _found) = largest_component(&working_mask);
        let raw_boxes = extract_obstacles(&region, self.config.min_blob_area);
        let diag = ((ws * ws + ws * ws) as f64).sqrt();
        let merged = suppress_merge(raw_boxes, self.config.merge_gap * diag);
        let detect_ms = ms_since(t0);

        let t0 = Instant::now();
        let full_mask_img = resize_nearest_u8(&region.to_image(), frame.width, frame.height)?;
        let full_region = BinaryMask::from_image(&full_mask_img);
        let edge = water_edge(&full_region);
        let obstacles = merged
            .iter()
            .map(|b| upscale_box(*b, ws, ws, frame.width, frame.height))
            .collect();
        let finalize_ms = ms_since(t0);

        self.prev = Some(PrevModel {
            params: fit_result.params.clone(),
            smoothed_posteriors: fit_result.smoothed_posteriors.clone(),
        });

        Ok(FrameResult {
            water_mask: full_mask_img,
            edge,
            obstacles,
            fit: fit_result,
            timing: StageTimings {
                downscale_ms,
                features_ms,
                init_ms,
                fit_ms,
                detect_ms,
                finalize_ms,
                total_ms: ms_since(t_total),
            },
        })
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Map a working-resolution box to the exact full-resolution pixel extent
/// covered by its pixels under the nearest-neighbor upscale index map
/// `src = floor(dst * src_size / dst_size)`.
fn upscale_box(b: WorkingBox, ww: usize, wh: usize, fw: usize, fh: usize) -> BoundingBox {
    let lo = |v: usize, src: usize, dst: usize| (v * dst).div_ceil(src);
    let x0 = lo(b.x, ww, fw);
    let x1 = lo(b.x + b.w, ww, fw);
    let y0 = lo(b.y, wh, fh);
    let y1 = lo(b.y + b.h, wh, fh);
    BoundingBox::new(x0 as f64, y0 as f64, (x1 - x0) as f64, (y1 - y0) as f64)
}

/// First-frame initialization from the vertical region split.
///
/// The frame is split into three row bands, written as proportions of the
/// image height: top [0, 0.2), middle [0.2, 0.4) and bottom [0.6, 1.0).
/// The band between 0.4 and 0.6 usually holds the water edge and is
/// excluded. One Gaussian is fitted (sample mean, regularized sample
/// covariance) per band; component 1 takes the bottom band (water),
/// component 2 the middle, component 3 the top. The prior field starts
/// uniform across the three Gaussians with `eps_uniform` on the outlier
/// class.
pub fn init_first_frame<T: Real>(
    features: &FeatureField<T>,
    eps_uniform: f64,
    eps_reg: f64,
) -> Result<(ObservedInit<T>, CategoricalField<T>)> {
    let (w, h) = (features.width, features.height);
    let d = features.dim;
    let r1 = (0.2 * h as f64).round() as usize;
    let r2 = (0.4 * h as f64).round() as usize;
    let r3 = (0.6 * h as f64).round() as usize;
    // Row ranges per component: bottom (water), middle, top.
    let bands = [(r3, h), (r1, r2), (0, r1)];
    let mut components = Vec::with_capacity(NUM_GAUSSIANS);
    let mut counts = [0usize; 3];
    for (k, &(y0, y1)) in bands.iter().enumerate() {
        let n = (y1.saturating_sub(y0)) * w;
        if n < d + 1 {
            return Err(Error::InsufficientSamples {
                component: k + 1,
                got: n,
                needed: d + 1,
            });
        }
        counts[k] = n;
        let mut mean = DVector::<T>::zeros(d);
        for y in y0..y1 {
            for x in 0..w {
                let f = features.feature(y * w + x);
                for r in 0..d {
                    mean[r] = mean[r] + f[r];
                }
            }
        }
        let inv_n = T::one() / c::<T>(n as f64);
        mean *= inv_n;
        let mut scatter = DMatrix::<T>::zeros(d, d);
        for y in y0..y1 {
            for x in 0..w {
                let f = features.feature(y * w + x);
                for r in 0..d {
                    let dr = f[r] - mean[r];
                    for cc in 0..=r {
                        scatter[(r, cc)] = scatter[(r, cc)] + dr * (f[cc] - mean[cc]);
                    }
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
        components.push(GaussianComponent { mean, cov });
    }
    let total = counts.iter().sum::<usize>() as f64;
    let weights = [
        c::<T>(counts[0] as f64 / total),
        c::<T>(counts[1] as f64 / total),
        c::<T>(counts[2] as f64 / total),
    ];
    let components: [GaussianComponent<T>; 3] =
        components.try_into().expect("three fitted components");

    let gauss_prior = c::<T>((1.0 - eps_uniform) / 3.0);
    let mut probs = [gauss_prior; NUM_CLASSES];
    probs[3] = c::<T>(eps_uniform);
    let priors = CategoricalField::constant(w, h, probs);

    Ok((ObservedInit { components, weights }, priors))
}

/// Temporal soft reset: per component, moment-matched blend of the
/// previous frame's parameters (weight `alpha`) with the current frame's
/// observed split statistics (weight `1 - alpha`). The uniform density
/// passes through.
pub fn soft_reset<T: Real>(
    prev: &MixtureParams<T>,
    observed: &ObservedInit<T>,
    alpha: T,
) -> MixtureParams<T> {
    let components: [GaussianComponent<T>; 3] = std::array::from_fn(|k| {
        merge_moment_match(&prev.components[k], &observed.components[k], alpha)
    });
    MixtureParams {
        components,
        uniform_density: prev.uniform_density,
    }
}

/// Write the water mask as a binary PGM (0 = non-water, 255 = water).
pub fn write_mask_pgm(path: &std::path::Path, mask: &ImageU8) -> Result<()> {
    crate::imaging::write_pgm(path, mask)
}

/// Write the edge profile as one line of space-separated integers, one
/// per image column.
pub fn write_edge_txt(path: &std::path::Path, edge: &[u32]) -> Result<()> {
    let line = edge
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    std::fs::write(path, line + "\n").map_err(|e| Error::io(path, e))
}

/// Read an edge profile written by [`write_edge_txt`].
pub fn read_edge_txt(path: &std::path::Path) -> Result<Vec<u32>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<u32>()
                .map_err(|_| Error::MalformedAnnotation(format!("bad edge value '{tok}'")))
        })
        .collect()
}

/// Write obstacle boxes as a JSON list of `{"x","y","w","h"}` objects.
pub fn write_boxes_json(path: &std::path::Path, boxes: &[BoundingBox]) -> Result<()> {
    let text = serde_json::to_string_pretty(boxes)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Read obstacle boxes written by [`write_boxes_json`].
pub fn read_boxes_json(path: &std::path::Path) -> Result<Vec<BoundingBox>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
