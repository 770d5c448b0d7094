//! Synthetic ground truth: label maps from simple shapes, per-region
//! GGD-textured reflectivity, Gaussian-modulated PSFs, and blurred noisy
//! observations generated with the same circular operator the sampler
//! assumes.

use rand::Rng;
use rand_distr::Distribution;

use crate::conv::{ConvOperator, Psf};
use crate::ggd::ggd_sample;
use crate::image::{GgdParams, Image, LabelField};
use crate::{Error, Result};

/// A rasterizable region assigning a class to pixels it covers.
#[derive(Debug, Clone, Copy)]
pub enum Shape {
    Disk { center_row: f64, center_col: f64, radius: f64, class: u32 },
    Rect { row0: usize, col0: usize, rows: usize, cols: usize, class: u32 },
}

impl Shape {
    fn class(&self) -> u32 {
        match *self {
            Shape::Disk { class, .. } | Shape::Rect { class, .. } => class,
        }
    }

    fn covers(&self, r: usize, c: usize) -> bool {
        match *self {
            Shape::Disk { center_row, center_col, radius, .. } => {
                let dr = r as f64 - center_row;
                let dc = c as f64 - center_col;
                dr * dr + dc * dc <= radius * radius
            }
            Shape::Rect { row0, col0, rows, cols, .. } => {
                r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols
            }
        }
    }
}

/// Deterministic rasterization; later shapes overwrite earlier ones.
pub fn make_label_map(
    width: usize,
    height: usize,
    k: u32,
    background: u32,
    shapes: &[Shape],
) -> Result<LabelField> {
    if background < 1 || background > k {
        return Err(Error::invalid(format!("background class {background} outside 1..={k}")));
    }
    for s in shapes {
        if s.class() < 1 || s.class() > k {
            return Err(Error::invalid(format!("shape class {} outside 1..={k}", s.class())));
        }
    }
    let mut labels = vec![background; width * height];
    for s in shapes {
        for r in 0..height {
            for c in 0..width {
                if s.covers(r, c) {
                    labels[r * width + c] = s.class();
                }
            }
        }
    }
    LabelField::new(labels, width, height, k)
}

/// Reflectivity drawn pixel-wise from the class-conditional GGD.
pub fn synth_trf<R: Rng + ?Sized>(z: &LabelField, ggd: &GgdParams, rng: &mut R) -> Result<Image> {
    if z.num_classes() as usize != ggd.num_classes() {
        return Err(Error::dims("label classes and GGD parameter count disagree"));
    }
    let mut data = Vec::with_capacity(z.len());
    for &label in z.as_slice() {
        data.push(ggd_sample(ggd.alpha_of(label), ggd.beta_of(label), rng)?);
    }
    Image::new(data, z.width(), z.height())
}

/// Separable Gaussian envelope modulated along the axial (row) axis:
/// `k(r,c) = exp(-(r-c0)^2 / (2 sa^2) - (c-c0)^2 / (2 sl^2)) * cos(2 pi fc (r-c0))`,
/// peak-normalized, anchored at the center.
pub fn gaussian_modulated_psf(
    fc_cycles_per_pixel: f64,
    sigma_axial: f64,
    sigma_lateral: f64,
    size: usize,
) -> Result<Psf> {
    if size % 2 == 0 || size == 0 {
        return Err(Error::invalid(format!("PSF size {size} must be odd")));
    }
    if !(sigma_axial > 0.0) || !(sigma_lateral > 0.0) {
        return Err(Error::invalid("PSF widths must be positive"));
    }
    let c0 = (size / 2) as f64;
    let mut kernel = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let dr = r as f64 - c0;
            let dc = c as f64 - c0;
            let envelope = (-dr * dr / (2.0 * sigma_axial * sigma_axial)
                - dc * dc / (2.0 * sigma_lateral * sigma_lateral))
                .exp();
            kernel.push(envelope * (2.0 * std::f64::consts::PI * fc_cycles_per_pixel * dr).cos());
        }
    }
    let peak = kernel.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    for v in kernel.iter_mut() {
        *v /= peak;
    }
    Psf::centered(kernel, size, size)
}

/// Observation `y = Hx + w` with `w ~ N(0, sigma2 I)`, using the circular
/// operator.
pub fn synth_rf<R: Rng + ?Sized>(
    x: &Image,
    psf: &Psf,
    sigma2: f64,
    rng: &mut R,
) -> Result<Image> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid(format!("noise variance {sigma2} must be nonnegative")));
    }
    let op = ConvOperator::build(psf, x.width(), x.height())?;
    let mut y = op.apply_forward(x)?;
    if sigma2 > 0.0 {
        let std = sigma2.sqrt();
        let normal = rand_distr::Normal::new(0.0, std)
            .map_err(|e| Error::invalid(format!("noise sampler: {e}")))?;
        for v in y.as_mut_slice() {
            *v += normal.sample(rng);
        }
    }
    Ok(y)
}

/// Parameters of a synthetic scene, all serializable as flat key-values.
#[derive(Debug, Clone)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub k: u32,
    pub background: u32,
    pub shapes: Vec<Shape>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub psf_fc: f64,
    pub psf_sigma_axial: f64,
    pub psf_sigma_lateral: f64,
    pub psf_size: usize,
}

/// The default desk-scale two-region scene: a heavy-tailed disk
/// (shape 0.6) on a lighter-tailed background (shape 1.5), both unit
/// scale, noise variance 0.013, bandpass PSF at 0.25 cycles/pixel.
pub fn simu1_mini() -> PhantomSpec {
    PhantomSpec {
        width: 128,
        height: 128,
        k: 2,
        background: 1,
        shapes: vec![Shape::Disk { center_row: 63.5, center_col: 63.5, radius: 32.0, class: 2 }],
        alpha: vec![1.5, 0.6],
        beta: vec![1.0, 1.0],
        sigma2: 0.013,
        psf_fc: 0.25,
        psf_sigma_axial: 1.5,
        psf_sigma_lateral: 2.5,
        psf_size: 15,
    }
}

/// A generated scene: ground truth plus the observation.
#[derive(Debug, Clone)]
pub struct PhantomBundle {
    pub spec: PhantomSpec,
    pub x: Image,
    pub z: LabelField,
    pub y: Image,
    pub psf: Psf,
    pub ggd: GgdParams,
}

impl PhantomSpec {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PhantomBundle> {
        let z = make_label_map(self.width, self.height, self.k, self.background, &self.shapes)?;
        let ggd = GgdParams::new(self.alpha.clone(), self.beta.clone())?;
        let x = synth_trf(&z, &ggd, rng)?;
        let psf = gaussian_modulated_psf(
            self.psf_fc,
            self.psf_sigma_axial,
            self.psf_sigma_lateral,
            self.psf_size,
        )?;
        let y = synth_rf(&x, &psf, self.sigma2, rng)?;
        Ok(PhantomBundle { spec: self.clone(), x, z, y, psf, ggd })
    }
}
