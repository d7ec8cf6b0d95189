//! Mixture-model domain types and the pixel-level probability machinery:
//! Gaussian evaluation, Bayes posteriors, covariance regularization and
//! moment-matched merging.
//!
//! The model is fixed at three Gaussian components plus one uniform
//! outlier component; class index 3 (the fourth slot) is always the
//! uniform one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::imaging::FeatureField;
use crate::num::{c, exp, fmax, ln, Real};

/// Number of classes in every categorical field (3 Gaussians + uniform).
pub const NUM_CLASSES: usize = 4;
/// Number of Gaussian components.
pub const NUM_GAUSSIANS: usize = 3;

/// A single multivariate Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent<T> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

impl<T: Real> GaussianComponent<T> {
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Self {
        debug_assert_eq!(mean.len(), cov.nrows());
        debug_assert_eq!(cov.nrows(), cov.ncols());
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// The fitted model: three Gaussians and the fixed uniform density.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams<T> {
    pub components: [GaussianComponent<T>; 3],
    /// Density of the uniform component, `1 / (W*H)` of the working frame.
    pub uniform_density: T,
}

impl<T: Real> MixtureParams<T> {
    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Uniform density for a working resolution.
    pub fn uniform_for(width: usize, height: usize) -> T {
        T::one() / c::<T>((width * height) as f64)
    }
}

/// Gaussian prior over one component's mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPrior<T> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

/// Weak priors over the three component means.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakPriors<T> {
    pub components: [MeanPrior<T>; 3],
}

impl<T: Real> WeakPriors<T> {
    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let comps: Vec<_> = self
            .components
            .iter()
            .map(|p| {
                serde_json::json!({
                    "mean": p.mean.iter().map(|v| v.to_f64().unwrap()).collect::<Vec<_>>(),
                    "cov": (0..p.cov.nrows())
                        .map(|r| (0..p.cov.ncols()).map(|cidx| p.cov[(r, cidx)].to_f64().unwrap()).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "d": self.dim(), "components": comps })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct GaussFile {
            mean: Vec<f64>,
            cov: Vec<Vec<f64>>,
        }
        #[derive(serde::Deserialize)]
        struct PriorsFile {
            d: usize,
            components: Vec<GaussFile>,
        }
        let file: PriorsFile = serde_json::from_value(value.clone())?;
        if file.components.len() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "priors file has {} components, expected 3",
                file.components.len()
            )));
        }
        let mut comps = Vec::with_capacity(3);
        for (k, g) in file.components.iter().enumerate() {
            if g.mean.len() != file.d || g.cov.len() != file.d || g.cov.iter().any(|r| r.len() != file.d) {
                return Err(Error::DimensionMismatch(format!(
                    "priors component {k} does not match d={}",
                    file.d
                )));
            }
            let mean = DVector::from_iterator(file.d, g.mean.iter().map(|&v| c::<T>(v)));
            let cov = DMatrix::from_fn(file.d, file.d, |r, cc| c::<T>(g.cov[r][cc]));
            comps.push(MeanPrior { mean, cov });
        }
        let components: [MeanPrior<T>; 3] = comps.try_into().map_err(|_| {
            Error::DimensionMismatch("priors file must hold exactly 3 components".into())
        })?;
        Ok(Self { components })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        Self::from_json(&value)
    }
}

/// Per-frame observed components from the vertical region split, with the
/// region pixel fractions. The weights are diagnostic only; the merge uses
/// the fixed blend weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedInit<T> {
    pub components: [GaussianComponent<T>; 3],
    pub weights: [T; 3],
}

/// Dense per-pixel 4-way categorical field, plane-major storage:
/// `data[k * npixels + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalField<T> {
    pub width: usize,
    pub height: usize,
    data: Vec<T>,
}

impl<T: Real> CategoricalField<T> {
    pub fn constant(width: usize, height: usize, probs: [T; NUM_CLASSES]) -> Self {
        let n = width * height;
        let mut data = Vec::with_capacity(n * NUM_CLASSES);
        for p in probs {
            data.extend(std::iter::repeat(p).take(n));
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, [T::zero(); NUM_CLASSES])
    }

    #[inline]
    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn plane(&self, k: usize) -> &[T] {
        let n = self.num_pixels();
        &self.data[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, k: usize) -> &mut [T] {
        let n = self.num_pixels();
        &mut self.data[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn pixel(&self, i: usize) -> [T; NUM_CLASSES] {
        let n = self.num_pixels();
        [
            self.data[i],
            self.data[n + i],
            self.data[2 * n + i],
            self.data[3 * n + i],
        ]
    }

    #[inline]
    pub fn set_pixel(&mut self, i: usize, values: [T; NUM_CLASSES]) {
        let n = self.num_pixels();
        for (k, v) in values.into_iter().enumerate() {
            self.data[k * n + i] = v;
        }
    }

    /// All values scaled by a constant (e.g. halving a sum-2 field).
    pub fn scaled(&self, s: T) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Check that every pixel's class vector is non-negative and sums to
    /// `target` within `tol`.
    pub fn validate_sums(&self, target: T, tol: T) -> Result<()> {
        for i in 0..self.num_pixels() {
            let px = self.pixel(i);
            let mut sum = T::zero();
            for v in px {
                if v < T::zero() {
                    return Err(Error::NumericalFailure(format!(
                        "negative class probability at pixel {i}"
                    )));
                }
                sum = sum + v;
            }
            if crate::num::abs(sum - target) > tol {
                return Err(Error::NumericalFailure(format!(
                    "pixel {i} sums to {sum} (expected {target})"
                )));
            }
        }
        Ok(())
    }

    /// Mean absolute difference over all entries.
    pub fn mean_abs_diff(&self, other: &Self) -> T {
        debug_assert_eq!(self.data.len(), other.data.len());
        let total: T = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| crate::num::abs(a - b))
            .sum();
        total / c::<T>(self.data.len() as f64)
    }

    /// Swap two class planes in place (used by relabeling tests).
    pub fn swap_planes(&mut self, a: usize, b: usize) {
        let n = self.num_pixels();
        for i in 0..n {
            self.data.swap(a * n + i, b * n + i);
        }
    }
}

/// Precomputed inverse covariance and log-normalizer for fast repeated
/// density evaluation.
#[derive(Debug, Clone)]
pub struct PreparedGaussian<T> {
    inv_cov: DMatrix<T>,
    /// `-(d/2) ln(2 pi) - (1/2) ln det(cov)`
    log_norm: T,
    dim: usize,
}

impl<T: Real> PreparedGaussian<T> {
    pub fn new(g: &GaussianComponent<T>) -> Result<Self> {
        let d = g.dim();
        let chol = nalgebra::Cholesky::new(g.cov.clone()).ok_or(Error::NotPositiveDefinite)?;
        let mut log_det = T::zero();
        for i in 0..d {
            log_det = log_det + ln(chol.l_dirty()[(i, i)]);
        }
        log_det = log_det + log_det;
        let inv_cov = chol.inverse();
        let log_norm = -c::<T>(0.5) * (c::<T>(d as f64) * ln(c::<T>(2.0) * T::PI()) + log_det);
        Ok(Self {
            inv_cov,
            log_norm,
            dim: d,
        })
    }

    /// Log-density at `y` (slice of length `dim`), no allocation.
    #[inline]
    pub fn logpdf(&self, y: &[T], mean: &DVector<T>) -> T {
        debug_assert_eq!(y.len(), self.dim);
        let mut quad = T::zero();
        for r in 0..self.dim {
            let dr = y[r] - mean[r];
            let mut row = T::zero();
            for cc in 0..self.dim {
                row = row + self.inv_cov[(r, cc)] * (y[cc] - mean[cc]);
            }
            quad = quad + dr * row;
        }
        self.log_norm - c::<T>(0.5) * quad
    }
}

/// Exact multivariate normal log-density of `y` under `g`.
///
/// `g` must be positive definite (i.e. regularized).
pub fn gaussian_logpdf<T: Real>(y: &DVector<T>, g: &GaussianComponent<T>) -> Result<T> {
    if y.len() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point dim {} vs component dim {}",
            y.len(),
            g.dim()
        )));
    }
    let prep = PreparedGaussian::new(g)?;
    Ok(prep.logpdf(y.as_slice(), &g.mean))
}

/// `cov + eps * I`; positive definite for `eps > 0` whenever `cov` is
/// positive semi-definite.
pub fn regularize_covariance<T: Real>(cov: &DMatrix<T>, eps_reg: T) -> DMatrix<T> {
    let mut out = cov.clone();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] = out[(i, i)] + eps_reg;
    }
    out
}

/// Per-pixel Bayes posteriors over the four classes:
/// `p_ik ∝ likelihood_k(y_i) * prior_ik`, with the uniform density as the
/// fourth likelihood. Computed in log-space with max-subtraction.
pub fn pixel_posteriors<T: Real>(
    features: &FeatureField<T>,
    params: &MixtureParams<T>,
    priors: &CategoricalField<T>,
) -> Result<CategoricalField<T>> {
    if features.width != priors.width || features.height != priors.height {
        return Err(Error::DimensionMismatch(
            "feature field and prior field sizes differ".into(),
        ));
    }
    if features.dim != params.dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature dim {} vs model dim {}",
            features.dim,
            params.dim()
        )));
    }
    let prepared: Vec<PreparedGaussian<T>> = params
        .components
        .iter()
        .map(PreparedGaussian::new)
        .collect::<Result<_>>()?;
    let log_uniform = ln(params.uniform_density);

    let n = features.len();
    let mut out = CategoricalField::zeros(features.width, features.height);
    let neg_inf = T::neg_infinity();
    for i in 0..n {
        let y = features.feature(i);
        let pri = priors.pixel(i);
        let mut logs = [neg_inf; NUM_CLASSES];
        for k in 0..NUM_GAUSSIANS {
            if pri[k] > T::zero() {
                logs[k] = prepared[k].logpdf(y, &params.components[k].mean) + ln(pri[k]);
            }
        }
        if pri[3] > T::zero() {
            logs[3] = log_uniform + ln(pri[3]);
        }
        let mut m = neg_inf;
        for &l in &logs {
            m = fmax(m, l);
        }
        if m == neg_inf {
            return Err(Error::NumericalFailure(format!(
                "all posterior terms vanished at pixel {i}"
            )));
        }
        let mut vals = [T::zero(); NUM_CLASSES];
        let mut sum = T::zero();
        for k in 0..NUM_CLASSES {
            if logs[k] != neg_inf {
                let v = exp(logs[k] - m);
                vals[k] = v;
                sum = sum + v;
            }
        }
        if !(sum > T::zero()) || !num_traits::Float::is_finite(sum) {
            return Err(Error::NumericalFailure(format!(
                "posterior normalizer invalid at pixel {i}"
            )));
        }
        for v in &mut vals {
            *v = *v / sum;
        }
        out.set_pixel(i, vals);
    }
    Ok(out)
}

/// Collapse the two-component mixture `alpha * prev + (1-alpha) * obs`
/// into a single Gaussian by matching its first two moments.
pub fn merge_moment_match<T: Real>(
    prev: &GaussianComponent<T>,
    obs: &GaussianComponent<T>,
    alpha: T,
) -> GaussianComponent<T> {
    debug_assert_eq!(prev.dim(), obs.dim());
    let beta = T::one() - alpha;
    let mean = &prev.mean * alpha + &obs.mean * beta;
    let second = (&prev.cov + &prev.mean * prev.mean.transpose()) * alpha
        + (&obs.cov + &obs.mean * obs.mean.transpose()) * beta;
    let cov = second - &mean * mean.transpose();
    GaussianComponent { mean, cov }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dvec(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn identity_component(d: usize) -> GaussianComponent<f64> {
        GaussianComponent::new(DVector::zeros(d), DMatrix::identity(d, d))
    }

    #[test]
    fn logpdf_at_mode_of_standard_2d_normal() {
        let g = identity_component(2);
        let v = gaussian_logpdf(&dvec(&[0.0, 0.0]), &g).unwrap();
        assert_relative_eq!(v, (1.0 / (2.0 * std::f64::consts::PI)).ln(), epsilon = 1e-12);
    }

    #[test]
    fn logpdf_scalar_normal() {
        let g = identity_component(1);
        let v = gaussian_logpdf(&dvec(&[1.0]), &g).unwrap();
        assert_relative_eq!(v, -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5, epsilon = 1e-12);
    }

    /// Direct 3x3 density via cofactor-expansion inverse and determinant.
    fn logpdf_oracle_3d(y: &[f64; 3], mean: &[f64; 3], cov: &[[f64; 3]; 3]) -> f64 {
        let det = cov[0][0] * (cov[1][1] * cov[2][2] - cov[1][2] * cov[2][1])
            - cov[0][1] * (cov[1][0] * cov[2][2] - cov[1][2] * cov[2][0])
            + cov[0][2] * (cov[1][0] * cov[2][1] - cov[1][1] * cov[2][0]);
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for cc in 0..3 {
                // Cofactor of (cc, r) over det -> inverse (adjugate transpose).
                let mut sub = [[0.0; 2]; 2];
                let (mut sr, mut scc) = (0, 0);
                for rr in 0..3 {
                    if rr == cc {
                        continue;
                    }
                    scc = 0;
                    for c2 in 0..3 {
                        if c2 == r {
                            continue;
                        }
                        sub[sr][scc] = cov[rr][c2];
                        scc += 1;
                    }
                    sr += 1;
                }
                let _ = scc;
                let minor = sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0];
                let sign = if (r + cc) % 2 == 0 { 1.0 } else { -1.0 };
                inv[r][cc] = sign * minor / det;
            }
        }
        let d = [y[0] - mean[0], y[1] - mean[1], y[2] - mean[2]];
        let mut quad = 0.0;
        for r in 0..3 {
            for cc in 0..3 {
                quad += d[r] * inv[r][cc] * d[cc];
            }
        }
        -0.5 * (3.0 * (2.0 * std::f64::consts::PI).ln() + det.ln() + quad)
    }

    #[test]
    fn logpdf_matches_cofactor_oracle_3d() {
        let cov = [[0.9, 0.2, 0.1], [0.2, 1.3, -0.3], [0.1, -0.3, 0.7]];
        let mean = [0.3, -0.1, 0.8];
        let y = [0.5, 0.5, 0.5];
        let g = GaussianComponent::new(
            dvec(&mean),
            DMatrix::from_fn(3, 3, |r, cc| cov[r][cc]),
        );
        let expect = logpdf_oracle_3d(&y, &mean, &cov);
        let got = gaussian_logpdf(&dvec(&y), &g).unwrap();
        assert_relative_eq!(got, expect, epsilon = 1e-10);
    }

    #[test]
    fn logpdf_integrates_to_one_1d_and_2d() {
        // Quadrature over a wide grid; trapezoid is plenty at this step.
        let g = GaussianComponent::new(dvec(&[0.4]), DMatrix::from_element(1, 1, 0.6));
        let (lo, hi, n) = (-10.0, 10.0, 40_000);
        let step = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * step;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            total += w * gaussian_logpdf(&dvec(&[x]), &g).unwrap().exp();
        }
        assert!((total * step - 1.0).abs() < 1e-3);

        let g2 = GaussianComponent::new(
            dvec(&[0.0, 0.2]),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]),
        );
        let (lo, hi, n) = (-8.0, 8.0, 400);
        let step = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = lo + i as f64 * step;
                let y = lo + j as f64 * step;
                let mut w = 1.0;
                if i == 0 || i == n {
                    w *= 0.5;
                }
                if j == 0 || j == n {
                    w *= 0.5;
                }
                total += w * gaussian_logpdf(&dvec(&[x, y]), &g2).unwrap().exp();
            }
        }
        assert!((total * step * step - 1.0).abs() < 1e-3);
    }

    #[test]
    fn non_pd_covariance_is_rejected() {
        let g = GaussianComponent::new(dvec(&[0.0, 0.0]), DMatrix::from_element(2, 2, 1.0));
        assert!(matches!(
            gaussian_logpdf(&dvec(&[0.0, 0.0]), &g),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn regularize_zero_matrix() {
        let out = regularize_covariance(&DMatrix::<f64>::zeros(3, 3), 1e-5);
        assert_eq!(out, DMatrix::identity(3, 3) * 1e-5);
    }

    #[test]
    fn regularize_shifts_eigenvalues_exactly() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let before = m.clone().symmetric_eigen().eigenvalues;
        let after = regularize_covariance(&m, 1e-3).symmetric_eigen().eigenvalues;
        let mut b: Vec<f64> = before.iter().copied().collect();
        let mut a: Vec<f64> = after.iter().copied().collect();
        b.sort_by(f64::total_cmp);
        a.sort_by(f64::total_cmp);
        for (x, y) in b.iter().zip(&a) {
            assert_relative_eq!(x + 1e-3, *y, epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_one_scatter_becomes_pd() {
        // Sample covariance of two points is rank-1 in 2-D.
        let a = dvec(&[1.0, 2.0]);
        let b = dvec(&[3.0, 6.0]);
        let mean = (&a + &b) * 0.5;
        let scatter = (&a - &mean) * (&a - &mean).transpose() * 0.5
            + (&b - &mean) * (&b - &mean).transpose() * 0.5;
        let reg = regularize_covariance(&scatter, 1e-5);
        let eig = reg.clone().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&v| v > 0.0));
        assert!(nalgebra::Cholesky::new(reg).is_some());
    }

    fn tiny_field(values: &[[f64; 4]]) -> CategoricalField<f64> {
        let mut f = CategoricalField::zeros(values.len(), 1);
        for (i, v) in values.iter().enumerate() {
            f.set_pixel(i, *v);
        }
        f
    }

    fn features_1px(y: &[f64]) -> FeatureField<f64> {
        FeatureField {
            width: 1,
            height: 1,
            dim: y.len(),
            data: y.to_vec(),
        }
    }

    fn simple_params_d1() -> MixtureParams<f64> {
        let comp = |mu: f64, var: f64| {
            GaussianComponent::new(dvec(&[mu]), DMatrix::from_element(1, 1, var))
        };
        MixtureParams {
            components: [comp(0.0, 0.01), comp(0.5, 0.01), comp(1.0, 0.01)],
            uniform_density: 1.0 / 2500.0,
        }
    }

    #[test]
    fn zero_prior_annihilates_component() {
        let params = simple_params_d1();
        let priors = tiny_field(&[[1.0, 0.0, 0.0, 0.0]]);
        let f = features_1px(&[0.9]);
        let post = pixel_posteriors(&f, &params, &priors).unwrap();
        assert_eq!(post.pixel(0), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn far_outlier_goes_to_uniform() {
        let params = simple_params_d1();
        let priors = tiny_field(&[[0.25, 0.25, 0.25, 0.25]]);
        let f = features_1px(&[1e6]);
        let post = pixel_posteriors(&f, &params, &priors).unwrap();
        assert!(post.pixel(0)[3] > 1.0 - 1e-12);
    }

    #[test]
    fn posterior_matches_hand_bayes_arithmetic() {
        // Two effective components (prior zero elsewhere), d=1.
        let params = simple_params_d1();
        let priors = tiny_field(&[[0.7, 0.3, 0.0, 0.0]]);
        let y = 0.2;
        let f = features_1px(&[y]);
        let post = pixel_posteriors(&f, &params, &priors).unwrap();
        let dens = |mu: f64, var: f64| {
            (-0.5 * (y - mu) * (y - mu) / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
        };
        let t1 = 0.7 * dens(0.0, 0.01);
        let t2 = 0.3 * dens(0.5, 0.01);
        let expect = [t1 / (t1 + t2), t2 / (t1 + t2), 0.0, 0.0];
        for k in 0..4 {
            assert_relative_eq!(post.pixel(0)[k], expect[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn posterior_rows_sum_to_one() {
        let params = simple_params_d1();
        let priors = tiny_field(&[
            [0.1, 0.2, 0.3, 0.4],
            [0.25, 0.25, 0.25, 0.25],
            [0.9, 0.05, 0.04, 0.01],
        ]);
        let f = FeatureField {
            width: 3,
            height: 1,
            dim: 1,
            data: vec![0.1, 0.6, 0.95],
        };
        let post = pixel_posteriors(&f, &params, &priors).unwrap();
        post.validate_sums(1.0, 1e-9).unwrap();
    }

    #[test]
    fn posterior_invariant_to_likelihood_scaling() {
        // Scaling all likelihoods at a pixel by a positive constant is the
        // same as shifting every log-term; the softmax result is identical.
        // Exercised by scaling the uniform density and covariances jointly
        // being impossible; instead verify invariance under scaling priors,
        // which multiplies every unnormalized term by the same constant.
        let params = simple_params_d1();
        let f = features_1px(&[0.3]);
        let p1 = tiny_field(&[[0.1, 0.2, 0.3, 0.4]]);
        let p2 = tiny_field(&[[0.2, 0.4, 0.6, 0.8]]); // same ratios, sum 2
        let a = pixel_posteriors(&f, &params, &p1).unwrap();
        let b = pixel_posteriors(&f, &params, &p2).unwrap();
        for k in 0..4 {
            assert_relative_eq!(a.pixel(0)[k], b.pixel(0)[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn merge_with_itself_is_identity() {
        let g = GaussianComponent::new(
            dvec(&[0.2, 0.8]),
            DMatrix::from_row_slice(2, 2, &[0.3, 0.05, 0.05, 0.2]),
        );
        let merged = merge_moment_match(&g, &g, 0.6);
        assert_relative_eq!((merged.mean - &g.mean).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((merged.cov - &g.cov).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn merge_alpha_one_returns_first() {
        let a = GaussianComponent::new(dvec(&[0.0]), DMatrix::from_element(1, 1, 1.0));
        let b = GaussianComponent::new(dvec(&[5.0]), DMatrix::from_element(1, 1, 2.0));
        let merged = merge_moment_match(&a, &b, 1.0);
        assert_relative_eq!(merged.mean[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(merged.cov[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn merge_1d_closed_form() {
        // alpha=0.6 blend of N(0,1) and N(2,1): mean 0.8,
        // E[x^2] = 0.6*1 + 0.4*(1+4) = 2.6, var = 2.6 - 0.64 = 1.96.
        let a = GaussianComponent::new(dvec(&[0.0]), DMatrix::from_element(1, 1, 1.0));
        let b = GaussianComponent::new(dvec(&[2.0]), DMatrix::from_element(1, 1, 1.0));
        let merged = merge_moment_match(&a, &b, 0.6);
        assert_relative_eq!(merged.mean[0], 0.8, epsilon = 1e-12);
        assert_relative_eq!(merged.cov[(0, 0)], 1.96, epsilon = 1e-12);
    }

    #[test]
    fn weak_priors_json_schema_is_stable() {
        let p = WeakPriors {
            components: [
                MeanPrior {
                    mean: dvec(&[0.1, 0.2]),
                    cov: DMatrix::identity(2, 2),
                },
                MeanPrior {
                    mean: dvec(&[0.3, 0.4]),
                    cov: DMatrix::identity(2, 2),
                },
                MeanPrior {
                    mean: dvec(&[0.5, 0.6]),
                    cov: DMatrix::identity(2, 2),
                },
            ],
        };
        let v = p.to_json();
        assert_eq!(v["d"], 2);
        assert_eq!(v["components"].as_array().unwrap().len(), 3);
        assert_eq!(v["components"][0]["mean"][1], 0.2);
        assert_eq!(v["components"][1]["cov"][0][0], 1.0);
        let back = WeakPriors::<f64>::from_json(&v).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        /// Moment preservation: merged first moment and second raw moment
        /// equal the mixture's, for random 3-D inputs.
        #[test]
        fn merge_preserves_mixture_moments(
            m1 in proptest::array::uniform3(-2.0f64..2.0),
            m2 in proptest::array::uniform3(-2.0f64..2.0),
            alpha in 0.0f64..=1.0,
            scale1 in 0.1f64..1.5,
            scale2 in 0.1f64..1.5,
        ) {
            let a = GaussianComponent::new(dvec(&m1), DMatrix::identity(3, 3) * scale1);
            let b = GaussianComponent::new(dvec(&m2), DMatrix::identity(3, 3) * scale2);
            let merged = merge_moment_match(&a, &b, alpha);
            let mean_mix = &a.mean * alpha + &b.mean * (1.0 - alpha);
            let second_mix = (&a.cov + &a.mean * a.mean.transpose()) * alpha
                + (&b.cov + &b.mean * b.mean.transpose()) * (1.0 - alpha);
            let second_merged = &merged.cov + &merged.mean * merged.mean.transpose();
            prop_assert!((merged.mean - mean_mix).norm() < 1e-10);
            prop_assert!((second_merged - second_mix).norm() < 1e-10);
        }
    }
}
