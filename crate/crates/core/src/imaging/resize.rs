//! Resizing: bilinear for continuous frames, nearest for categorical masks.

use super::{ImageF, ImageU8};
use crate::error::{Error, Result};
use crate::num::{c, Real};

fn check_target(out_w: usize, out_h: usize) -> Result<()> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidArgument("zero-size resize target".into()));
    }
    Ok(())
}

/// Center-aligned bilinear resampling (no anti-alias prefilter).
/// Same-size output reproduces the input exactly.
pub fn resize_bilinear<T: Real>(img: &ImageF<T>, out_w: usize, out_h: usize) -> Result<ImageF<T>> {
    check_target(out_w, out_h)?;
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let (w, h, ch) = (img.width, img.height, img.channels);
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let mut data = vec![T::zero(); out_w * out_h * ch];
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let wy = c::<T>(fy - y0 as f64);
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let wx = c::<T>(fx - x0 as f64);
            for k in 0..ch {
                let p00 = img.get(x0, y0, k);
                let p10 = img.get(x1, y0, k);
                let p01 = img.get(x0, y1, k);
                let p11 = img.get(x1, y1, k);
                let top = p00 + (p10 - p00) * wx;
                let bot = p01 + (p11 - p01) * wx;
                data[(oy * out_w + ox) * ch + k] = top + (bot - top) * wy;
            }
        }
    }
    Ok(ImageF {
        width: out_w,
        height: out_h,
        channels: ch,
        data,
    })
}

/// Nearest-neighbor resampling with the floor index map
/// `src = floor(dst * src_size / dst_size)`; label values pass through
/// untouched, so categorical masks stay categorical.
pub fn resize_nearest_u8(img: &ImageU8, out_w: usize, out_h: usize) -> Result<ImageU8> {
    check_target(out_w, out_h)?;
    let (w, h, ch) = (img.width, img.height, img.channels);
    let mut data = vec![0u8; out_w * out_h * ch];
    for oy in 0..out_h {
        let sy = (oy * h / out_h).min(h - 1);
        for ox in 0..out_w {
            let sx = (ox * w / out_w).min(w - 1);
            for k in 0..ch {
                data[(oy * out_w + ox) * ch + k] = img.get(sx, sy, k);
            }
        }
    }
    ImageU8::new(out_w, out_h, ch, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downscale_to_working_resolution() {
        let img = ImageF::<f64>::from_u8(&ImageU8::filled(640, 480, 3, 90));
        let small = resize_bilinear(&img, 50, 50).unwrap();
        assert_eq!((small.width, small.height), (50, 50));
        for v in &small.data {
            assert!((v - 90.0 / 255.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_size_nearest_is_identity() {
        let img = ImageU8::new(3, 2, 1, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(resize_nearest_u8(&img, 3, 2).unwrap(), img);
    }

    #[test]
    fn same_size_bilinear_is_identity() {
        let img = ImageF::<f64> {
            width: 3,
            height: 2,
            channels: 1,
            data: vec![0.1, 0.9, 0.4, 0.3, 0.2, 0.8],
        };
        assert_eq!(resize_bilinear(&img, 3, 2).unwrap(), img);
    }

    #[test]
    fn nearest_upscale_forms_blocks() {
        // Oracle: enumerate the floor index map for 2x2 -> 4x4.
        let mask = ImageU8::new(2, 2, 1, vec![1, 0, 0, 1]).unwrap();
        let up = resize_nearest_u8(&mask, 4, 4).unwrap();
        #[rustfmt::skip]
        let expected = vec![
            1, 1, 0, 0,
            1, 1, 0, 0,
            0, 0, 1, 1,
            0, 0, 1, 1,
        ];
        assert_eq!(up.data, expected);
    }

    #[test]
    fn zero_target_errors() {
        let img = ImageU8::filled(2, 2, 1, 0);
        assert!(resize_nearest_u8(&img, 0, 2).is_err());
        let imgf = ImageF::<f64>::from_u8(&img);
        assert!(resize_bilinear(&imgf, 2, 0).is_err());
    }
}
