//! Classical building blocks used for initialization and comparison:
//! Wiener deconvolution with wavelet-based noise estimation, multi-level
//! Otsu thresholding, median filtering, and B-mode (log-compressed
//! envelope) rendering.

use crate::conv::{ConvOperator, Psf};
use crate::fft::Fft2;
use crate::image::{Image, LabelField};
use crate::{Error, Result};

/// B-mode rendering parameters.
#[derive(Debug, Clone)]
pub struct BmodeParams {
    /// Log-compression range in dB.
    pub dynamic_range_db: f64,
}

impl Default for BmodeParams {
    fn default() -> Self {
        BmodeParams { dynamic_range_db: 40.0 }
    }
}

/// Noise standard deviation estimated from the finest-scale diagonal Haar
/// detail coefficients: `median(|d|) / 0.6745`.
///
/// The diagonal band of an orthonormal one-level Haar transform maps
/// i.i.d. `N(0, s^2)` pixels to i.i.d. `N(0, s^2)` coefficients while
/// suppressing smooth image content, so the median absolute deviation of
/// that band estimates the noise level.
pub fn estimate_noise_std(y: &Image) -> f64 {
    let rows = y.height() / 2;
    let cols = y.width() / 2;
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut details = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let a = y.get(2 * r, 2 * c);
            let b = y.get(2 * r, 2 * c + 1);
            let d = y.get(2 * r + 1, 2 * c);
            let e = y.get(2 * r + 1, 2 * c + 1);
            details.push(((a - b) - (d - e)).abs() / 2.0);
        }
    }
    details.sort_unstable_by(f64::total_cmp);
    let n = details.len();
    let median = if n % 2 == 1 {
        details[n / 2]
    } else {
        0.5 * (details[n / 2 - 1] + details[n / 2])
    };
    median / 0.6745
}

/// Frequency-domain Wiener deconvolution with an explicit noise level.
///
/// `x_f = conj(h_f) y_f S_f / (|h_f|^2 S_f + n s^2)` with the signal
/// spectrum surrogate `S_f = |y_f|^2` (the observed periodogram). With a
/// zero noise level and an invertible spectrum this is the exact inverse
/// filter.
pub fn wiener_deconvolve_with_noise(y: &Image, psf: &Psf, noise_std: f64) -> Result<Image> {
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::invalid(format!("noise std {noise_std} must be nonnegative")));
    }
    let op = ConvOperator::build(psf, y.width(), y.height())?;
    let fft = Fft2::new(y.width(), y.height());
    let mut spec = fft.forward_real(y.as_slice());
    let n = y.len() as f64;
    let noise_power = n * noise_std * noise_std;
    for (i, s) in spec.iter_mut().enumerate() {
        let h = op.spectrum_at(i);
        let signal = s.norm_sqr();
        let denom = h.norm_sqr() * signal + noise_power;
        *s = if denom > 0.0 {
            h.conj() * *s * (signal / denom)
        } else {
            rustfft::num_complex::Complex::new(0.0, 0.0)
        };
    }
    Ok(Image::from_raw(fft.inverse_real(spec), y.width(), y.height()))
}

/// Result of [`wiener_deconvolve`]: the estimate plus the noise level it used.
#[derive(Debug, Clone)]
pub struct WienerResult {
    pub x: Image,
    pub noise_std: f64,
}

/// Wiener deconvolution with the noise level estimated from `y` itself.
pub fn wiener_deconvolve(y: &Image, psf: &Psf) -> Result<WienerResult> {
    let noise_std = estimate_noise_std(y);
    let x = wiener_deconvolve_with_noise(y, psf, noise_std)?;
    Ok(WienerResult { x, noise_std })
}

/// Multi-level Otsu thresholding on a 256-bin histogram: exhaustive
/// maximization of between-class variance over `k - 1` thresholds, labels
/// assigned by increasing intensity.
pub fn otsu_multilevel(img: &Image, k: u32) -> Result<LabelField> {
    if !(2..=4).contains(&k) {
        return Err(Error::invalid(format!("otsu supports 2..=4 classes, got {k}")));
    }
    let lo = img.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::ConstantImage("no Otsu threshold exists".into()));
    }
    let bins = 256usize;
    let scale = bins as f64 / (hi - lo);
    let mut hist = vec![0.0f64; bins];
    for &v in img.as_slice() {
        let b = (((v - lo) * scale) as usize).min(bins - 1);
        hist[b] += 1.0;
    }
    let thresholds = otsu_thresholds_from_hist(&hist, k)?;
    let labels = img
        .as_slice()
        .iter()
        .map(|&v| {
            let b = (((v - lo) * scale) as usize).min(bins - 1);
            let mut label = 1u32;
            for &t in &thresholds {
                if b > t {
                    label += 1;
                }
            }
            label
        })
        .collect();
    LabelField::new(labels, img.width(), img.height(), k)
}

/// Exhaustive Otsu threshold search on an explicit histogram. Returns the
/// `k - 1` upper bin indices of the first `k - 1` classes (class `j` spans
/// bins `(t_{j-1}, t_j]`).
pub fn otsu_thresholds_from_hist(hist: &[f64], k: u32) -> Result<Vec<usize>> {
    let bins = hist.len();
    let occupied = hist.iter().filter(|&&h| h > 0.0).count();
    if occupied < k as usize {
        return Err(Error::ConstantImage(format!(
            "{occupied} occupied bins cannot support {k} classes"
        )));
    }
    // Prefix sums of weight and weighted intensity (bin index as value).
    let mut cum_w = vec![0.0; bins + 1];
    let mut cum_m = vec![0.0; bins + 1];
    for b in 0..bins {
        cum_w[b + 1] = cum_w[b] + hist[b];
        cum_m[b + 1] = cum_m[b] + hist[b] * b as f64;
    }
    let class_score = |from: usize, to: usize| -> Option<f64> {
        let w = cum_w[to + 1] - cum_w[from];
        if w <= 0.0 {
            return None;
        }
        let m = cum_m[to + 1] - cum_m[from];
        Some(m * m / w)
    };
    // Maximizing sum_k m_k^2 / w_k is equivalent to maximizing the
    // between-class variance.
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |cuts: &[usize]| {
        let mut score = 0.0;
        let mut from = 0usize;
        for &t in cuts {
            match class_score(from, t) {
                Some(s) => score += s,
                None => return,
            }
            from = t + 1;
        }
        match class_score(from, bins - 1) {
            Some(s) => score += s,
            None => return,
        }
        if best.as_ref().map_or(true, |(b, _)| score > *b) {
            best = Some((score, cuts.to_vec()));
        }
    };
    match k {
        2 => {
            for t in 0..bins - 1 {
                consider(&[t]);
            }
        }
        3 => {
            for t1 in 0..bins - 2 {
                for t2 in t1 + 1..bins - 1 {
                    consider(&[t1, t2]);
                }
            }
        }
        4 => {
            for t1 in 0..bins - 3 {
                for t2 in t1 + 1..bins - 2 {
                    for t3 in t2 + 1..bins - 1 {
                        consider(&[t1, t2, t3]);
                    }
                }
            }
        }
        _ => {
            return Err(Error::invalid(format!("otsu supports 2..=4 classes, got {k}")));
        }
    }
    best.map(|(_, cuts)| cuts)
        .ok_or_else(|| Error::ConstantImage("no threshold split yields nonempty classes".into()))
}

/// Median filter with border replication.
pub fn median_filter(img: &Image, window: usize) -> Result<Image> {
    check_window(window)?;
    let half = window / 2;
    let (w, h) = (img.width(), img.height());
    let mut buf = Vec::with_capacity(window * window);
    Ok(Image::from_fn(w, h, |r, c| {
        buf.clear();
        for dr in 0..window {
            for dc in 0..window {
                let rr = clamp_index(r as isize + dr as isize - half as isize, h);
                let cc = clamp_index(c as isize + dc as isize - half as isize, w);
                buf.push(img.get(rr, cc));
            }
        }
        buf.sort_unstable_by(f64::total_cmp);
        buf[buf.len() / 2]
    }))
}

/// Median filter on a label field (median of the integer labels).
pub fn median_filter_labels(z: &LabelField, window: usize) -> Result<LabelField> {
    check_window(window)?;
    let half = window / 2;
    let (w, h) = (z.width(), z.height());
    let mut out = Vec::with_capacity(w * h);
    let mut buf = Vec::with_capacity(window * window);
    for r in 0..h {
        for c in 0..w {
            buf.clear();
            for dr in 0..window {
                for dc in 0..window {
                    let rr = clamp_index(r as isize + dr as isize - half as isize, h);
                    let cc = clamp_index(c as isize + dc as isize - half as isize, w);
                    buf.push(z.get(rr, cc));
                }
            }
            buf.sort_unstable();
            out.push(buf[buf.len() / 2]);
        }
    }
    LabelField::new(out, w, h, z.num_classes())
}

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::invalid(format!("median window {window} must be odd and >= 3")));
    }
    Ok(())
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Log-compressed envelope display: `|x|` normalized to peak 1, compressed
/// to `20 log10`, clipped to `[-dynamic_range_db, 0]` and rescaled to
/// `[0, 1]`. An all-zero image renders as all zeros.
pub fn bmode(x: &Image, params: &BmodeParams) -> Result<Image> {
    let dr = params.dynamic_range_db;
    if !(dr > 0.0) || !dr.is_finite() {
        return Err(Error::invalid(format!("dynamic range {dr} must be positive")));
    }
    let peak = x.as_slice().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(Image::zeros(x.width(), x.height()));
    }
    let data = x
        .as_slice()
        .iter()
        .map(|&v| {
            let db = 20.0 * (v.abs() / peak).log10();
            (db.max(-dr) + dr) / dr
        })
        .collect();
    Ok(Image::from_raw(data, x.width(), x.height()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Distribution;

    #[test]
    fn noise_estimate_on_white_noise() {
        // Mean estimate over 100 trials lands within 5% of the truth.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = rand_distr::Normal::new(0.0, 0.7).unwrap();
        let mut sum = 0.0;
        let trials = 100;
        for _ in 0..trials {
            let y = Image::from_raw(
                (0..64 * 64).map(|_| normal.sample(&mut rng)).collect(),
                64,
                64,
            );
            sum += estimate_noise_std(&y);
        }
        let mean = sum / trials as f64;
        assert!((mean - 0.7).abs() < 0.05 * 0.7, "mean estimate {mean}");
    }

    #[test]
    fn noise_estimate_zero_on_piecewise_constant() {
        let y = Image::from_fn(16, 16, |r, _| if r < 8 { 1.0 } else { 3.0 });
        assert_eq!(estimate_noise_std(&y), 0.0);
    }

    #[test]
    fn wiener_exact_inverse_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let kernel = vec![0.2, 0.3, 0.1, 0.4, 1.0, 0.2, 0.1, 0.3, 0.2];
        let psf = Psf::centered(kernel, 3, 3).unwrap();
        let op = ConvOperator::build(&psf, 16, 16).unwrap();
        let x = Image::from_fn(16, 16, |_, _| rng.random_range(-1.0..1.0));
        let y = op.apply_forward(&x).unwrap();
        let back = wiener_deconvolve_with_noise(&y, &psf, 0.0).unwrap();
        for i in 0..x.len() {
            assert!(
                (back.as_slice()[i] - x.as_slice()[i]).abs() < 1e-8,
                "pixel {i}: {} vs {}",
                back.as_slice()[i],
                x.as_slice()[i]
            );
        }
    }

    #[test]
    fn wiener_commutes_with_circular_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kernel: Vec<f64> = (0..9).map(|_| rng.random_range(-0.5..1.0)).collect();
        let psf = Psf::centered(kernel, 3, 3).unwrap();
        let y = Image::from_fn(12, 12, |_, _| rng.random_range(-1.0..1.0));
        let (dr, dc) = (3usize, 5usize);
        let shifted = Image::from_fn(12, 12, |r, c| y.get((r + 12 - dr) % 12, (c + 12 - dc) % 12));
        let a = wiener_deconvolve_with_noise(&y, &psf, 0.2).unwrap();
        let b = wiener_deconvolve_with_noise(&shifted, &psf, 0.2).unwrap();
        for r in 0..12 {
            for c in 0..12 {
                let expect = a.get(r, c);
                let got = b.get((r + dr) % 12, (c + dc) % 12);
                assert!((expect - got).abs() < 1e-10, "({r},{c})");
            }
        }
    }

    #[test]
    fn otsu_separates_bimodal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = Image::from_fn(32, 32, |r, _| {
            let base = if r < 16 { 0.0 } else { 10.0 };
            base + rng.random_range(-0.3..0.3)
        });
        let z = otsu_multilevel(&img, 2).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                assert_eq!(z.get(r, c), if r < 16 { 1 } else { 2 }, "({r},{c})");
            }
        }
    }

    #[test]
    fn otsu_three_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = Image::from_fn(30, 30, |r, _| {
            let base = match r / 10 {
                0 => 0.0,
                1 => 5.0,
                _ => 10.0,
            };
            base + rng.random_range(-0.2..0.2)
        });
        let z = otsu_multilevel(&img, 3).unwrap();
        for r in 0..30 {
            for c in 0..30 {
                assert_eq!(z.get(r, c), (r / 10 + 1) as u32, "({r},{c})");
            }
        }
    }

    #[test]
    fn otsu_rejects_constant_image() {
        let img = Image::constant(8, 8, 4.2);
        assert!(matches!(otsu_multilevel(&img, 2), Err(Error::ConstantImage(_))));
    }

    #[test]
    fn otsu_matches_naive_search_on_small_histogram() {
        // Naive double loop over all threshold pairs on a 64-bin histogram,
        // scoring the textbook between-class variance.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let hist: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..20.0)).collect();
        let got = otsu_thresholds_from_hist(&hist, 3).unwrap();

        let total_w: f64 = hist.iter().sum();
        let total_m: f64 = hist.iter().enumerate().map(|(b, &h)| h * b as f64).sum();
        let mean = total_m / total_w;
        let stats = |from: usize, to: usize| {
            let w: f64 = hist[from..=to].iter().sum();
            let m: f64 = hist[from..=to]
                .iter()
                .enumerate()
                .map(|(i, &h)| h * (from + i) as f64)
                .sum();
            (w, m)
        };
        let mut best = (f64::MIN, vec![]);
        for t1 in 0..62 {
            for t2 in t1 + 1..63 {
                let mut var = 0.0;
                let mut ok = true;
                for (from, to) in [(0, t1), (t1 + 1, t2), (t2 + 1, 63)] {
                    let (w, m) = stats(from, to);
                    if w <= 0.0 {
                        ok = false;
                        break;
                    }
                    let mu = m / w;
                    var += w * (mu - mean) * (mu - mean);
                }
                if ok && var > best.0 {
                    best = (var, vec![t1, t2]);
                }
            }
        }
        assert_eq!(got, best.1);
    }

    #[test]
    fn median_filter_basics() {
        let img = Image::constant(9, 9, 3.0);
        let filtered = median_filter(&img, 3).unwrap();
        assert_eq!(filtered.as_slice(), img.as_slice());

        let mut outlier = Image::constant(9, 9, 1.0);
        outlier.set(4, 4, 100.0);
        let cleaned = median_filter(&outlier, 3).unwrap();
        for &v in cleaned.as_slice() {
            assert_eq!(v, 1.0);
        }

        assert!(median_filter(&img, 4).is_err());
        assert!(median_filter(&img, 1).is_err());
    }

    #[test]
    fn median_filter_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = Image::from_fn(8, 8, |_, _| rng.random_range(-5.0..5.0));
        let got = median_filter(&img, 3).unwrap();
        for r in 0..8usize {
            for c in 0..8usize {
                let mut vals = Vec::new();
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let rr = (r as isize + dr).clamp(0, 7) as usize;
                        let cc = (c as isize + dc).clamp(0, 7) as usize;
                        vals.push(img.get(rr, cc));
                    }
                }
                vals.sort_unstable_by(f64::total_cmp);
                assert_eq!(got.get(r, c), vals[4], "({r},{c})");
            }
        }
    }

    #[test]
    fn label_median_commutes_with_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let labels: Vec<u32> = (0..64).map(|_| rng.random_range(1..=2u32)).collect();
        let z = LabelField::new(labels.clone(), 8, 8, 2).unwrap();
        let filtered = median_filter_labels(&z, 3).unwrap();
        // Swap classes 1 and 2, filter, swap back: identical result.
        let swapped: Vec<u32> = labels.iter().map(|&l| 3 - l).collect();
        let zs = LabelField::new(swapped, 8, 8, 2).unwrap();
        let fs = median_filter_labels(&zs, 3).unwrap();
        for i in 0..64 {
            assert_eq!(filtered.as_slice()[i], 3 - fs.as_slice()[i]);
        }
    }

    #[test]
    fn bmode_range_and_monotonicity() {
        let params = BmodeParams::default();
        let img = Image::new(vec![0.0, 0.5, -1.0, 0.01, 1e-9, 0.1], 3, 2).unwrap();
        let bm = bmode(&img, &params).unwrap();
        // Peak maps to 1.
        assert!((bm.as_slice()[2] - 1.0).abs() < 1e-12);
        // Below peak * 10^(-dr/20) the output sits at the floor 0.
        assert_eq!(bm.as_slice()[4], 0.0);
        let floor_img = Image::new(vec![1.0, 10f64.powf(-40.0 / 20.0)], 2, 1).unwrap();
        let bf = bmode(&floor_img, &params).unwrap();
        assert!(bf.as_slice()[1].abs() < 1e-12);
        // Monotone in |x|.
        let mut pairs: Vec<(f64, f64)> = img
            .as_slice()
            .iter()
            .zip(bm.as_slice())
            .map(|(&a, &b)| (a.abs(), b))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        // All-zero image renders as zeros.
        let zeros = bmode(&Image::zeros(4, 4), &params).unwrap();
        assert!(zeros.as_slice().iter().all(|&v| v == 0.0));
    }
}
