//! Quantitative evaluation: PSNR, SSIM, contrast-to-noise ratio, overall
//! segmentation accuracy, mean square jump, and the isolated-point
//! fraction of a label map.

use crate::baselines::median_filter_labels;
use crate::image::{Image, LabelField};
use crate::{Error, Result};

/// Peak signal-to-noise ratio in dB:
/// `10 log10( n * max_i(x_true_i, x_est_i)^2 / ||x_true - x_est||^2 )`,
/// the maximum ranging over the entries of both images. Identical images
/// report `+inf`.
pub fn psnr(x_true: &Image, x_est: &Image) -> Result<f64> {
    x_true.check_same_shape(x_est, "psnr")?;
    let n = x_true.len() as f64;
    let peak = x_true
        .as_slice()
        .iter()
        .chain(x_est.as_slice())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let err: f64 = x_true
        .as_slice()
        .iter()
        .zip(x_est.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (n * peak * peak / err).log10())
}

/// Mean local structural similarity with the reference parameterization:
/// 11x11 Gaussian window (std 1.5), stability constants `K1 = 0.01`,
/// `K2 = 0.03`, dynamic range `max - min` of `x_true`. Windows are
/// evaluated where they fit entirely inside the image.
pub fn ssim(x_true: &Image, x_est: &Image) -> Result<f64> {
    x_true.check_same_shape(x_est, "ssim")?;
    const WIN: usize = 11;
    const STD: f64 = 1.5;
    if x_true.width() < WIN || x_true.height() < WIN {
        return Err(Error::dims(format!("ssim needs at least a {WIN}x{WIN} image")));
    }
    let mut kernel = [0.0f64; WIN * WIN];
    let mut sum = 0.0;
    for r in 0..WIN {
        for c in 0..WIN {
            let dr = r as f64 - (WIN / 2) as f64;
            let dc = c as f64 - (WIN / 2) as f64;
            let w = (-(dr * dr + dc * dc) / (2.0 * STD * STD)).exp();
            kernel[r * WIN + c] = w;
            sum += w;
        }
    }
    for w in kernel.iter_mut() {
        *w /= sum;
    }

    let lo = x_true.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x_true.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let c1 = (0.01 * range) * (0.01 * range);
    let c2 = (0.03 * range) * (0.03 * range);

    let mut acc = 0.0;
    let mut count = 0usize;
    for r0 in 0..=(x_true.height() - WIN) {
        for c0 in 0..=(x_true.width() - WIN) {
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
            for r in 0..WIN {
                for c in 0..WIN {
                    let w = kernel[r * WIN + c];
                    let a = x_true.get(r0 + r, c0 + c);
                    let b = x_est.get(r0 + r, c0 + c);
                    mu_a += w * a;
                    mu_b += w * b;
                    aa += w * a * a;
                    bb += w * b * b;
                    ab += w * a * b;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            acc += s;
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// A rectangular pixel window: rows `row0..row0+rows`, columns
/// `col0..col0+cols`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRect {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl WindowRect {
    fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.row0 && r < self.row0 + self.rows && c >= self.col0 && c < self.col0 + self.cols
    }

    fn fits(&self, img: &Image) -> bool {
        self.rows > 0
            && self.cols > 0
            && self.row0 + self.rows <= img.height()
            && self.col0 + self.cols <= img.width()
    }

    fn overlaps(&self, other: &WindowRect) -> bool {
        self.row0 < other.row0 + other.rows
            && other.row0 < self.row0 + self.rows
            && self.col0 < other.col0 + other.cols
            && other.col0 < self.col0 + self.cols
    }
}

/// Two non-overlapping windows on a B-mode image, one per region.
#[derive(Debug, Clone, Copy)]
pub struct CnrWindows {
    pub a: WindowRect,
    pub b: WindowRect,
}

impl CnrWindows {
    pub fn new(a: WindowRect, b: WindowRect) -> Result<Self> {
        if a.rows == 0 || a.cols == 0 || b.rows == 0 || b.cols == 0 {
            return Err(Error::invalid("CNR windows must be nonempty"));
        }
        if a.overlaps(&b) {
            return Err(Error::invalid("CNR windows overlap"));
        }
        Ok(CnrWindows { a, b })
    }
}

/// Contrast-to-noise ratio `|mu_a - mu_b| / sqrt(var_a + var_b)` between
/// the two windows of a B-mode image (population variances).
pub fn cnr(bmode_img: &Image, windows: &CnrWindows) -> Result<f64> {
    if !windows.a.fits(bmode_img) || !windows.b.fits(bmode_img) {
        return Err(Error::dims("CNR window outside the image"));
    }
    let stats = |w: &WindowRect| {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for r in w.row0..w.row0 + w.rows {
            for c in w.col0..w.col0 + w.cols {
                let v = bmode_img.get(r, c);
                sum += v;
                sum_sq += v * v;
            }
        }
        let n = (w.rows * w.cols) as f64;
        let mean = sum / n;
        (mean, sum_sq / n - mean * mean)
    };
    let (mu_a, var_a) = stats(&windows.a);
    let (mu_b, var_b) = stats(&windows.b);
    let denom = (var_a + var_b).max(0.0).sqrt();
    if denom == 0.0 {
        if mu_a == mu_b {
            return Ok(0.0);
        }
        return Err(Error::invalid("both CNR windows are constant"));
    }
    Ok((mu_a - mu_b).abs() / denom)
}

/// Fraction of matching labels, maximized over permutations of the
/// estimated labels (sampled label identities are arbitrary).
pub fn overall_accuracy(z_true: &LabelField, z_est: &LabelField) -> Result<f64> {
    if z_true.width() != z_est.width() || z_true.height() != z_est.height() {
        return Err(Error::dims("label fields differ in shape"));
    }
    if z_true.num_classes() != z_est.num_classes() {
        return Err(Error::dims("label fields differ in class count"));
    }
    let k = z_true.num_classes() as usize;
    // Confusion counts: conf[est][true].
    let mut conf = vec![0usize; k * k];
    for (&t, &e) in z_true.as_slice().iter().zip(z_est.as_slice()) {
        conf[(e as usize - 1) * k + (t as usize - 1)] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |p| {
        let matched: usize = (0..k).map(|e| conf[e * k + p[e]]).sum();
        best = best.max(matched);
    });
    Ok(best as f64 / z_true.len() as f64)
}

fn permute(perm: &mut Vec<usize>, i: usize, visit: &mut impl FnMut(&[usize])) {
    if i == perm.len() {
        visit(perm);
        return;
    }
    for j in i..perm.len() {
        perm.swap(i, j);
        permute(perm, i + 1, visit);
        perm.swap(i, j);
    }
}

/// Root mean square jump of a stream of consecutive samples:
/// `sqrt( (1/(T-1)) sum_t ||x_{t+1} - x_t||^2 )`.
pub fn msj(samples: &[Image]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("MSJ needs at least two consecutive samples"));
    }
    let mut acc = 0.0;
    for pair in samples.windows(2) {
        pair[0].check_same_shape(&pair[1], "msj")?;
        acc += pair[0]
            .as_slice()
            .iter()
            .zip(pair[1].as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok((acc / (samples.len() - 1) as f64).sqrt())
}

/// MSJ divided by the wall-clock seconds per iteration.
pub fn msj_per_second(samples: &[Image], seconds_per_iter: f64) -> Result<f64> {
    if !(seconds_per_iter > 0.0) {
        return Err(Error::invalid("seconds per iteration must be positive"));
    }
    Ok(msj(samples)? / seconds_per_iter)
}

/// Fraction of pixels whose label differs from the 3x3 median-filtered
/// label map.
pub fn isolated_point_fraction(z: &LabelField) -> f64 {
    let filtered = median_filter_labels(z, 3).expect("3x3 window is valid");
    let changed = z
        .as_slice()
        .iter()
        .zip(filtered.as_slice())
        .filter(|(a, b)| a != b)
        .count();
    changed as f64 / z.len() as f64
}
