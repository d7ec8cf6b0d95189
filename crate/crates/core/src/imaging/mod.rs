//! Image buffers, PNM I/O, colorspace conversion, resizing, feature
//! extraction and the 2-D convolution primitives used by the EM engine.

mod color;
mod features;
mod kernel;
mod pnm;
mod resize;

pub use color::{convert_colorspace, Colorspace};
pub use features::{extract_features, FeatureField, FeatureMode};
pub use kernel::{convolve_field, convolve_field_into, make_mrf_kernels, Kernel2D};
pub use pnm::{read_pnm, read_pnm_bytes, write_pgm, write_ppm};
pub use resize::{resize_bilinear, resize_nearest_u8};

use crate::error::{Error, Result};
use crate::num::{c, clamp, Real};
use std::path::Path;

/// 8-bit raster image, row-major, channel-interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageU8 {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub data: Vec<u8>,
}

impl ImageU8 {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedImage(format!(
                "channel count {channels} (expected 1 or 3)"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::UnsupportedImage(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ch: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ch: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + ch] = v;
    }
}

/// Floating-point image with every channel in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF<T> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<T>,
}

impl<T: Real> ImageF<T> {
    pub fn from_u8(img: &ImageU8) -> Self {
        let scale = c::<T>(1.0 / 255.0);
        Self {
            width: img.width,
            height: img.height,
            channels: img.channels,
            data: img.data.iter().map(|&v| c::<T>(v as f64) * scale).collect(),
        }
    }

    pub fn to_u8(&self) -> ImageU8 {
        let s = c::<T>(255.0);
        ImageU8 {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self
                .data
                .iter()
                .map(|&v| {
                    let v = clamp(v, T::zero(), T::one()) * s;
                    num_traits::Float::round(v).to_u8().unwrap_or(255)
                })
                .collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, ch: usize) -> T {
        self.data[(y * self.width + x) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ch: usize, v: T) {
        self.data[(y * self.width + x) * self.channels + ch] = v;
    }
}

/// Decode a raster file. PPM (P6) and PGM (P5) are handled natively;
/// other extensions go through the `image` crate (PNG, JPEG).
pub fn load_image(path: &Path) -> Result<ImageU8> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "ppm" | "pgm" | "pnm" => read_pnm(path),
        _ => {
            let dynimg = image::open(path)
                .map_err(|e| Error::malformed(path, format!("decode failed: {e}")))?;
            let img = match dynimg {
                image::DynamicImage::ImageLuma8(g) => ImageU8 {
                    width: g.width() as usize,
                    height: g.height() as usize,
                    channels: 1,
                    data: g.into_raw(),
                },
                other => {
                    let rgb = other.to_rgb8();
                    ImageU8 {
                        width: rgb.width() as usize,
                        height: rgb.height() as usize,
                        channels: 3,
                        data: rgb.into_raw(),
                    }
                }
            };
            Ok(img)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u8_roundtrip_through_f() {
        let img = ImageU8::new(2, 2, 3, vec![0, 128, 255, 1, 2, 3, 250, 251, 252, 9, 8, 7]).unwrap();
        let f = ImageF::<f64>::from_u8(&img);
        assert_eq!(f.to_u8(), img);
    }

    #[test]
    fn rejects_bad_channel_count() {
        assert!(ImageU8::new(2, 2, 2, vec![0; 8]).is_err());
    }

    #[test]
    fn rejects_bad_length() {
        assert!(ImageU8::new(2, 2, 1, vec![0; 3]).is_err());
    }
}
