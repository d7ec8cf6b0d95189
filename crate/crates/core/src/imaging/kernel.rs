//! Neighborhood kernels and the plane convolution they drive.
//!
//! The smoothing kernel has a zeroed center and unit sum, so convolving a
//! class-probability plane with it yields each pixel's neighborhood
//! mixture. Its companion has the center restored to one (sum two), which
//! folds a pixel's own value back in.

use crate::error::{Error, Result};
use crate::num::{c, Real};

/// Square kernel with odd side length, row-major weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D<T> {
    side: usize,
    weights: Vec<T>,
}

impl<T: Real> Kernel2D<T> {
    pub fn new(side: usize, weights: Vec<T>) -> Result<Self> {
        if side % 2 == 0 || side == 0 {
            return Err(Error::InvalidArgument(format!(
                "kernel side must be odd, got {side}"
            )));
        }
        if weights.len() != side * side {
            return Err(Error::DimensionMismatch(format!(
                "kernel weights len {} != {side}x{side}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidArgument("kernel weights must be non-negative".into()));
        }
        Ok(Self { side, weights })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.side / 2
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn center(&self) -> T {
        self.weights[(self.side / 2) * self.side + self.side / 2]
    }

    pub fn sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Copy with the central weight replaced.
    pub fn with_center(&self, value: T) -> Self {
        let mut weights = self.weights.clone();
        weights[(self.side / 2) * self.side + self.side / 2] = value;
        Self {
            side: self.side,
            weights,
        }
    }
}

/// Build the neighborhood kernel pair for a given working-image side.
///
/// Side length is `2*max(1, round(0.01*image_min_side)) + 1` (2% of the
/// image size); weights follow an isotropic Gaussian with `sigma = n/2.5`
/// sampled at integer offsets. The first kernel has its center zeroed and
/// is renormalized to unit sum; the second is the same kernel with the
/// center set to one.
pub fn make_mrf_kernels<T: Real>(image_min_side: usize) -> Result<(Kernel2D<T>, Kernel2D<T>)> {
    if image_min_side < 3 {
        return Err(Error::InvalidArgument(format!(
            "image min side {image_min_side} < 3"
        )));
    }
    let half = ((0.01 * image_min_side as f64).round() as usize).max(1);
    let side = 2 * half + 1;
    let sigma = side as f64 / 2.5;
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let mut weights = vec![T::zero(); side * side];
    let r = half as isize;
    for dy in -r..=r {
        for dx in -r..=r {
            let w = (-((dx * dx + dy * dy) as f64) * inv_two_sigma_sq).exp();
            weights[((dy + r) as usize) * side + (dx + r) as usize] = c::<T>(w);
        }
    }
    weights[(half) * side + half] = T::zero();
    let total: T = weights.iter().copied().sum();
    for w in &mut weights {
        *w = *w / total;
    }
    let smoothing = Kernel2D::new(side, weights)?;
    let augmented = smoothing.with_center(T::one());
    Ok((smoothing, augmented))
}

/// 2-D correlation of a scalar plane with `kernel`, replicate
/// (clamp-to-edge) border handling, output size equal to input.
pub fn convolve_field<T: Real>(plane: &[T], width: usize, height: usize, kernel: &Kernel2D<T>) -> Vec<T> {
    let mut out = vec![T::zero(); plane.len()];
    convolve_field_into(plane, width, height, kernel, &mut out);
    out
}

/// In-place variant of [`convolve_field`] writing into `out`.
pub fn convolve_field_into<T: Real>(
    plane: &[T],
    width: usize,
    height: usize,
    kernel: &Kernel2D<T>,
    out: &mut [T],
) {
    assert_eq!(plane.len(), width * height, "plane size mismatch");
    assert_eq!(out.len(), plane.len(), "output size mismatch");
    let r = kernel.radius() as isize;
    let side = kernel.side();
    let kw = kernel.weights();
    for y in 0..height as isize {
        for x in 0..width as isize {
            let mut acc = T::zero();
            for dy in -r..=r {
                let sy = (y + dy).clamp(0, height as isize - 1) as usize;
                let krow = ((dy + r) as usize) * side;
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, width as isize - 1) as usize;
                    acc = acc + kw[krow + (dx + r) as usize] * plane[sy * width + sx];
                }
            }
            out[y as usize * width + x as usize] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Direct double-loop correlation with replicate borders.
    fn convolve_oracle(plane: &[f64], w: usize, h: usize, k: &Kernel2D<f64>) -> Vec<f64> {
        let r = k.radius() as isize;
        let mut out = vec![0.0; plane.len()];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut acc = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sy = (y + dy).clamp(0, h as isize - 1) as usize;
                        let sx = (x + dx).clamp(0, w as isize - 1) as usize;
                        let kl = ((dy + r) as usize) * k.side() + (dx + r) as usize;
                        acc += k.weights()[kl] * plane[sy * w + sx];
                    }
                }
                out[y as usize * w + x as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn working_size_yields_3x3() {
        let (lam, lam1) = make_mrf_kernels::<f64>(50).unwrap();
        assert_eq!(lam.side(), 3);
        assert_eq!(lam1.side(), 3);
    }

    #[test]
    fn smoothing_kernel_zero_center_unit_sum() {
        let (lam, _) = make_mrf_kernels::<f64>(50).unwrap();
        assert_eq!(lam.center(), 0.0);
        assert_relative_eq!(lam.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn augmented_kernel_unit_center_sum_two() {
        let (_, lam1) = make_mrf_kernels::<f64>(50).unwrap();
        assert_eq!(lam1.center(), 1.0);
        assert_relative_eq!(lam1.sum(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn larger_images_get_larger_kernels() {
        let (lam, _) = make_mrf_kernels::<f64>(480).unwrap();
        assert_eq!(lam.side(), 2 * 5 + 1);
    }

    #[test]
    fn constant_plane_preserved_by_normalized_kernel() {
        let (lam, _) = make_mrf_kernels::<f64>(50).unwrap();
        let plane = vec![0.37; 8 * 6];
        let out = convolve_field(&plane, 8, 6, &lam);
        for v in out {
            assert_relative_eq!(v, 0.37, epsilon = 1e-12);
        }
    }

    #[test]
    fn impulse_response_stamps_kernel_with_zero_center() {
        let (lam, _) = make_mrf_kernels::<f64>(50).unwrap();
        let (w, h) = (7, 7);
        let mut plane = vec![0.0; w * h];
        plane[3 * w + 3] = 1.0;
        let out = convolve_field(&plane, w, h, &lam);
        assert_eq!(out[3 * w + 3], 0.0);
        // Correlation: out(x) = sum_d k(d) * in(x + d), so the impulse at the
        // center shows up mirrored; the Gaussian kernel is symmetric.
        for dy in -1i32..=1 {
            for dx in -1i32..=1 {
                let expect = lam.weights()[((1 - dy) as usize) * 3 + (1 - dx) as usize];
                let got = out[((3 + dy) as usize) * w + (3 + dx) as usize];
                assert_relative_eq!(got, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn random_plane_matches_nested_loop_oracle() {
        let (lam, _) = make_mrf_kernels::<f64>(50).unwrap();
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let (w, h) = (5, 5);
        let plane: Vec<f64> = (0..w * h).map(|_| next()).collect();
        let fast = convolve_field(&plane, w, h, &lam);
        let slow = convolve_oracle(&plane, w, h, &lam);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn min_side_below_three_rejected() {
        assert!(make_mrf_kernels::<f64>(2).is_err());
    }

    proptest! {
        #[test]
        fn convolution_matches_oracle_on_any_size(
            w in 1usize..=32,
            h in 1usize..=32,
            seed in any::<u64>(),
        ) {
            let (lam, lam1) = make_mrf_kernels::<f64>(50).unwrap();
            let mut state = seed | 1;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let plane: Vec<f64> = (0..w * h).map(|_| next()).collect();
            for k in [&lam, &lam1] {
                let fast = convolve_field(&plane, w, h, k);
                let slow = convolve_oracle(&plane, w, h, k);
                for (a, b) in fast.iter().zip(&slow) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}
