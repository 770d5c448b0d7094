//! Grid-shaped value types of the hierarchical model: the real-valued
//! image (observed RF data `y` or reflectivity `x`), the hidden label
//! field `z`, the per-region generalized-Gaussian parameters, and the
//! full sampler state.

use crate::{Error, Result};

/// A real-valued image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    data: Vec<f64>,
    width: usize,
    height: usize,
}

impl Image {
    /// Builds an image, checking that `data` has `width * height` finite entries.
    pub fn new(data: Vec<f64>, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::dims(format!(
                "data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("image contains NaN or Inf".into()));
        }
        Ok(Image { data, width, height })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Image { data: vec![0.0; width * height], width, height }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Image { data: vec![value; width * height], width, height }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Image { data, width, height }
    }

    /// Wraps a buffer produced by internal numerics; debug-checks finiteness.
    pub(crate) fn from_raw(data: Vec<f64>, width: usize, height: usize) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Image { data, width, height }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.width + col] = v;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &Image, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::dims(format!(
                "{what}: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )))
        }
    }
}

/// Per-pixel class labels in `1..=k`, the hidden segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    labels: Vec<u32>,
    width: usize,
    height: usize,
    k: u32,
}

impl LabelField {
    pub fn new(labels: Vec<u32>, width: usize, height: usize, k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("number of classes must be at least 2"));
        }
        if labels.len() != width * height {
            return Err(Error::dims(format!(
                "label length {} != {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l < 1 || l > k) {
            return Err(Error::invalid(format!("label {bad} outside 1..={k}")));
        }
        Ok(LabelField { labels, width, height, k })
    }

    pub fn constant(width: usize, height: usize, k: u32, label: u32) -> Result<Self> {
        Self::new(vec![label; width * height], width, height, k)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of classes `K`.
    pub fn num_classes(&self) -> u32 {
        self.k
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [u32] {
        &mut self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Pixel count of every class, indexed by `class - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k as usize];
        for &l in &self.labels {
            counts[(l - 1) as usize] += 1;
        }
        counts
    }
}

/// Smallest shape value the samplers allow; the density degenerates as the
/// shape tends to zero, so the shape chain lives on `[ALPHA_MIN, 3]`.
pub const ALPHA_MIN: f64 = 0.05;

/// Largest admissible shape value (the prior support ends at 3).
pub const ALPHA_MAX: f64 = 3.0;

/// Per-class generalized-Gaussian parameters: shape `alpha` in (0, 3],
/// scale `beta` > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GgdParams {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl GgdParams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::dims("alpha and beta must have the same length"));
        }
        if alpha.is_empty() {
            return Err(Error::invalid("at least one class is required"));
        }
        for &a in &alpha {
            if !a.is_finite() || a <= 0.0 || a > ALPHA_MAX {
                return Err(Error::invalid(format!("shape {a} outside (0, {ALPHA_MAX}]")));
            }
        }
        for &b in &beta {
            if !b.is_finite() || b <= 0.0 {
                return Err(Error::invalid(format!("scale {b} must be positive")));
            }
        }
        Ok(GgdParams { alpha, beta })
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Shape of class `k` (1-based).
    pub fn alpha_of(&self, k: u32) -> f64 {
        self.alpha[(k - 1) as usize]
    }

    /// Scale of class `k` (1-based).
    pub fn beta_of(&self, k: u32) -> f64 {
        self.beta[(k - 1) as usize]
    }

    pub(crate) fn set_alpha(&mut self, k: u32, v: f64) {
        self.alpha[(k - 1) as usize] = v;
    }

    pub(crate) fn set_beta(&mut self, k: u32, v: f64) {
        self.beta[(k - 1) as usize] = v;
    }
}

/// The full tuple sampled by the hybrid Gibbs chain.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub x: Image,
    pub z: LabelField,
    pub ggd: GgdParams,
    pub sigma2: f64,
}

impl ModelState {
    pub fn new(x: Image, z: LabelField, ggd: GgdParams, sigma2: f64) -> Result<Self> {
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::invalid(format!("noise variance {sigma2} must be positive")));
        }
        if x.width() != z.width() || x.height() != z.height() {
            return Err(Error::dims("image and label field dimensions disagree"));
        }
        if z.num_classes() as usize != ggd.num_classes() {
            return Err(Error::dims("label classes and GGD parameter count disagree"));
        }
        Ok(ModelState { x, z, ggd, sigma2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_wrong_length() {
        assert!(Image::new(vec![0.0; 5], 2, 3).is_err());
        assert!(Image::new(vec![0.0; 6], 2, 3).is_ok());
    }

    #[test]
    fn image_rejects_non_finite() {
        assert!(Image::new(vec![0.0, f64::NAN], 2, 1).is_err());
        assert!(Image::new(vec![0.0, f64::INFINITY], 2, 1).is_err());
    }

    #[test]
    fn labels_must_lie_in_range() {
        assert!(LabelField::new(vec![1, 2, 2, 1], 2, 2, 2).is_ok());
        assert!(LabelField::new(vec![0, 2, 2, 1], 2, 2, 2).is_err());
        assert!(LabelField::new(vec![1, 3, 2, 1], 2, 2, 2).is_err());
    }

    #[test]
    fn ggd_params_validated() {
        assert!(GgdParams::new(vec![1.5, 0.6], vec![1.0, 1.0]).is_ok());
        assert!(GgdParams::new(vec![0.0, 0.6], vec![1.0, 1.0]).is_err());
        assert!(GgdParams::new(vec![3.5], vec![1.0]).is_err());
        assert!(GgdParams::new(vec![1.0], vec![0.0]).is_err());
        assert!(GgdParams::new(vec![1.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn state_requires_matching_dims_and_positive_noise() {
        let x = Image::zeros(4, 4);
        let z = LabelField::constant(4, 4, 2, 1).unwrap();
        let ggd = GgdParams::new(vec![1.5, 0.6], vec![1.0, 1.0]).unwrap();
        assert!(ModelState::new(x.clone(), z.clone(), ggd.clone(), 0.1).is_ok());
        assert!(ModelState::new(x.clone(), z.clone(), ggd.clone(), 0.0).is_err());
        let z3 = LabelField::constant(3, 4, 2, 1).unwrap();
        assert!(ModelState::new(x, z3, ggd, 0.1).is_err());
    }
}
