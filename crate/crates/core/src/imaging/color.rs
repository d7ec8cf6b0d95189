//! Colorspace conversions on [0,1]-normalized RGB images.
//!
//! Conventions: HSV is the standard hexcone with hue rescaled to [0,1);
//! Lab goes through linearized sRGB with the D65 white point, then each
//! channel is affinely rescaled into [0,1] (L/100, (a+128)/255,
//! (b+128)/255); YCrCb is BT.601 full-range with a +0.5 chroma offset.

use super::ImageF;
use crate::error::{Error, Result};
use crate::num::{c, clamp, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colorspace {
    Rgb,
    Hsv,
    Lab,
    YCrCb,
}

impl std::str::FromStr for Colorspace {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(Colorspace::Rgb),
            "hsv" => Ok(Colorspace::Hsv),
            "lab" => Ok(Colorspace::Lab),
            "ycrcb" => Ok(Colorspace::YCrCb),
            other => Err(Error::InvalidArgument(format!(
                "unknown colorspace '{other}' (expected rgb|hsv|lab|ycrcb)"
            ))),
        }
    }
}

impl std::fmt::Display for Colorspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Colorspace::Rgb => "rgb",
            Colorspace::Hsv => "hsv",
            Colorspace::Lab => "lab",
            Colorspace::YCrCb => "ycrcb",
        };
        f.write_str(s)
    }
}

/// Convert a 3-channel RGB image (values in [0,1]) into `space`.
/// Output channels are clamped into [0,1]. RGB is the identity.
pub fn convert_colorspace<T: Real>(img: &ImageF<T>, space: Colorspace) -> Result<ImageF<T>> {
    if img.channels != 3 {
        return Err(Error::DimensionMismatch(format!(
            "colorspace conversion needs 3 channels, got {}",
            img.channels
        )));
    }
    if space == Colorspace::Rgb {
        return Ok(img.clone());
    }
    let mut out = img.clone();
    for px in 0..img.width * img.height {
        let i = px * 3;
        let rgb = [img.data[i], img.data[i + 1], img.data[i + 2]];
        let conv = match space {
            Colorspace::Rgb => rgb,
            Colorspace::Hsv => rgb_to_hsv(rgb),
            Colorspace::Lab => rgb_to_lab(rgb),
            Colorspace::YCrCb => rgb_to_ycrcb(rgb),
        };
        for (ch, v) in conv.into_iter().enumerate() {
            out.data[i + ch] = clamp(v, T::zero(), T::one());
        }
    }
    Ok(out)
}

fn rgb_to_hsv<T: Real>([r, g, b]: [T; 3]) -> [T; 3] {
    let max = crate::num::fmax(r, crate::num::fmax(g, b));
    let min = crate::num::fmin(r, crate::num::fmin(g, b));
    let delta = max - min;
    let v = max;
    let s = if max > T::zero() { delta / max } else { T::zero() };
    let six = c::<T>(6.0);
    let h = if delta == T::zero() {
        T::zero()
    } else if max == r {
        let mut h = (g - b) / delta / six;
        if h < T::zero() {
            h = h + T::one();
        }
        h
    } else if max == g {
        (c::<T>(2.0) + (b - r) / delta) / six
    } else {
        (c::<T>(4.0) + (r - g) / delta) / six
    };
    [h, s, v]
}

fn srgb_linearize<T: Real>(v: T) -> T {
    if v <= c::<T>(0.04045) {
        v / c::<T>(12.92)
    } else {
        num_traits::Float::powf((v + c::<T>(0.055)) / c::<T>(1.055), c::<T>(2.4))
    }
}

fn lab_f<T: Real>(t: T) -> T {
    let delta = c::<T>(6.0 / 29.0);
    if t > delta * delta * delta {
        num_traits::Float::cbrt(t)
    } else {
        t / (c::<T>(3.0) * delta * delta) + c::<T>(4.0 / 29.0)
    }
}

fn rgb_to_lab<T: Real>([r, g, b]: [T; 3]) -> [T; 3] {
    let (rl, gl, bl) = (srgb_linearize(r), srgb_linearize(g), srgb_linearize(b));
    // sRGB -> XYZ (D65).
    let x = c::<T>(0.4124564) * rl + c::<T>(0.3575761) * gl + c::<T>(0.1804375) * bl;
    let y = c::<T>(0.2126729) * rl + c::<T>(0.7151522) * gl + c::<T>(0.0721750) * bl;
    let z = c::<T>(0.0193339) * rl + c::<T>(0.1191920) * gl + c::<T>(0.9503041) * bl;
    let fx = lab_f(x / c::<T>(0.95047));
    let fy = lab_f(y);
    let fz = lab_f(z / c::<T>(1.08883));
    let l = c::<T>(116.0) * fy - c::<T>(16.0);
    let a = c::<T>(500.0) * (fx - fy);
    let bb = c::<T>(200.0) * (fy - fz);
    [
        l / c::<T>(100.0),
        (a + c::<T>(128.0)) / c::<T>(255.0),
        (bb + c::<T>(128.0)) / c::<T>(255.0),
    ]
}

fn rgb_to_ycrcb<T: Real>([r, g, b]: [T; 3]) -> [T; 3] {
    let (wr, wg, wb) = (c::<T>(0.299), c::<T>(0.587), c::<T>(0.114));
    let y = wr * r + wg * g + wb * b;
    let half = c::<T>(0.5);
    let cr = (r - y) * (half / (T::one() - wr)) + half;
    let cb = (b - y) * (half / (T::one() - wb)) + half;
    [y, cr, cb]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_pixel(rgb: [f64; 3]) -> ImageF<f64> {
        ImageF {
            width: 1,
            height: 1,
            channels: 3,
            data: rgb.to_vec(),
        }
    }

    #[test]
    fn ycrcb_gray_has_centered_chroma() {
        for v in [0.0, 0.25, 0.5, 1.0] {
            let out = convert_colorspace(&one_pixel([v, v, v]), Colorspace::YCrCb).unwrap();
            assert_relative_eq!(out.data[0], v, epsilon = 1e-12);
            assert_relative_eq!(out.data[1], 0.5, epsilon = 1e-12);
            assert_relative_eq!(out.data[2], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn lab_black_maps_to_zero_l_centered_ab() {
        let out = convert_colorspace(&one_pixel([0.0, 0.0, 0.0]), Colorspace::Lab).unwrap();
        assert_relative_eq!(out.data[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(out.data[1], 128.0 / 255.0, epsilon = 1e-9);
        assert_relative_eq!(out.data[2], 128.0 / 255.0, epsilon = 1e-9);
    }

    #[test]
    fn ycrcb_pure_red_matches_reference_matrix() {
        // Oracle: evaluate the BT.601 definition directly for (1,0,0).
        let y = 0.299;
        let cr = (1.0 - y) * 0.5 / (1.0 - 0.299) + 0.5; // = 1.0
        let cb = (0.0 - y) * 0.5 / (1.0 - 0.114) + 0.5;
        let out = convert_colorspace(&one_pixel([1.0, 0.0, 0.0]), Colorspace::YCrCb).unwrap();
        assert_relative_eq!(out.data[0], y, epsilon = 1e-12);
        assert_relative_eq!(out.data[1], cr, epsilon = 1e-12);
        assert_relative_eq!(out.data[2], cb, epsilon = 1e-12);
        assert_relative_eq!(out.data[2], 0.331264108352144, epsilon = 1e-12);
    }

    #[test]
    fn rgb_is_identity() {
        let img = one_pixel([0.1, 0.7, 0.3]);
        let out = convert_colorspace(&img, Colorspace::Rgb).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn hsv_primaries() {
        let out = convert_colorspace(&one_pixel([1.0, 0.0, 0.0]), Colorspace::Hsv).unwrap();
        assert_relative_eq!(out.data[0], 0.0, epsilon = 1e-12); // hue 0
        assert_relative_eq!(out.data[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(out.data[2], 1.0, epsilon = 1e-12);
        let out = convert_colorspace(&one_pixel([0.0, 1.0, 0.0]), Colorspace::Hsv).unwrap();
        assert_relative_eq!(out.data[0], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn conversions_stay_in_unit_cube() {
        // Deterministic sweep of the RGB cube.
        for space in [Colorspace::Hsv, Colorspace::Lab, Colorspace::YCrCb] {
            for r in 0..6 {
                for g in 0..6 {
                    for b in 0..6 {
                        let px = [r as f64 / 5.0, g as f64 / 5.0, b as f64 / 5.0];
                        let out = convert_colorspace(&one_pixel(px), space).unwrap();
                        for v in out.data {
                            assert!((0.0..=1.0).contains(&v), "{space} out of range: {v}");
                        }
                    }
                }
            }
        }
    }
}
