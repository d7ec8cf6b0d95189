//! Water segmentation and in-water obstacle detection for small surface
//! vehicles, plus the matching evaluation protocol.
//!
//! A weakly-constrained mixture model — three Gaussians for the dominant
//! scene bands (water, shore, sky) and one uniform outlier component —
//! is fitted per frame at a small working resolution by an EM whose
//! MRF coupling reduces to a pair of 3x3 convolutions per class. The
//! smoothed posterior labels each pixel water / non-water; connected
//! component analysis extracts the water region, its upper edge, and the
//! enclosed obstacle blobs.
//!
//! All numeric code is generic over the scalar type ([`Real`]: f32 or
//! f64); concrete f64 aliases live at the crate root. f64 is the
//! reference precision used by the CLI and the test oracles.

pub mod detector;
pub mod em;
pub mod error;
pub mod evaluation;
pub mod imaging;
pub mod mixture;
pub mod num;
pub mod prior_learn;
pub mod synth;

pub use error::{Error, Result};
pub use num::Real;

/// Reference scalar type.
pub type Scalar = f64;

pub type ImageF64 = imaging::ImageF<Scalar>;
pub type FeatureField64 = imaging::FeatureField<Scalar>;
pub type Kernel2D64 = imaging::Kernel2D<Scalar>;
pub type GaussianComponent64 = mixture::GaussianComponent<Scalar>;
pub type MixtureParams64 = mixture::MixtureParams<Scalar>;
pub type WeakPriors64 = mixture::WeakPriors<Scalar>;
pub type CategoricalField64 = mixture::CategoricalField<Scalar>;
pub type FitResult64 = em::FitResult<Scalar>;
pub type DetectorState64 = detector::DetectorState<Scalar>;
pub type FrameResult64 = detector::FrameResult;
